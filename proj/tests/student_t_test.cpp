/*
 * Copyright 2026 The oneshot-eval Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "oneshot/student_t.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>

#include <random>

namespace oneshot {
namespace {

TEST(StudentT, MatchesBoostCdf) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> t_dist(-12.0, 12.0);
  for (const double df : {1.0, 2.0, 3.0, 4.5, 9.0, 19.0, 49.0, 200.0}) {
    const boost::math::students_t ref(df);
    for (int i = 0; i < 200; ++i) {
      const double t = t_dist(rng);
      const double expected = boost::math::cdf(ref, t);
      EXPECT_NEAR(student_t_cdf(t, df), expected, 1e-10 * std::max(expected, 1e-300))
          << "t=" << t << " df=" << df;
      const double tail = 2.0 * boost::math::cdf(boost::math::complement(ref, std::abs(t)));
      EXPECT_NEAR(student_t_two_sided_p(t, df), tail, 1e-10 * std::max(tail, 1e-300));
    }
  }
}

TEST(StudentT, EdgeValues) {
  EXPECT_EQ(student_t_two_sided_p(0.0, 5.0), 1.0);
  EXPECT_EQ(student_t_cdf(0.0, 5.0), 0.5);
  EXPECT_NEAR(student_t_two_sided_p(12.706204736174703, 1.0), 0.05, 1e-12);
  EXPECT_EQ(regularized_incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(2.0, 3.0, 1.0), 1.0);
  // I_x(1,1) = x.
  EXPECT_NEAR(regularized_incomplete_beta(1.0, 1.0, 0.3), 0.3, 1e-15);
}

}  // namespace
}  // namespace oneshot
