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

// Rank correlation between two system orderings: Kendall's tau-b,
// Spearman's rho and extrapolated rank-biased overlap.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "oneshot/error.hpp"

namespace oneshot {

/// Pair counts behind tau-b: concordant minus discordant pairs, and the
/// number of pairs not tied in x (resp. y).
struct KendallCounts {
  std::int64_t concordant_minus_discordant = 0;
  std::int64_t untied_x = 0;  // C + D + pairs tied only in y
  std::int64_t untied_y = 0;  // C + D + pairs tied only in x
};

namespace detail {

inline std::int64_t tied_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Merge sort on y counting strict inversions (pairs ordered in x but
// reversed in y).
inline std::int64_t count_inversions(std::vector<double>& y, std::vector<double>& buffer,
                                     std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = count_inversions(y, buffer, lo, mid) + count_inversions(y, buffer, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buffer[k++] = y[j++];
    } else {
      buffer[k++] = y[i++];
    }
  }
  while (i < mid) buffer[k++] = y[i++];
  while (j < hi) buffer[k++] = y[j++];
  std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(lo),
            buffer.begin() + static_cast<std::ptrdiff_t>(hi),
            y.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace detail

/// O(n log n) pair counting (Knight's algorithm).
inline KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  std::int64_t ties_x = 0;
  std::int64_t ties_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    ties_x += detail::tied_pairs(static_cast<std::int64_t>(j - i));
    for (std::size_t a = i; a < j;) {
      std::size_t b = a + 1;
      while (b < j && y[order[b]] == y[order[a]]) ++b;
      ties_xy += detail::tied_pairs(static_cast<std::int64_t>(b - a));
      a = b;
    }
    i = j;
  }

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> buffer(n);
  const std::int64_t discordant = detail::count_inversions(ys, buffer, 0, n);

  std::int64_t ties_y = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && ys[j] == ys[i]) ++j;
    ties_y += detail::tied_pairs(static_cast<std::int64_t>(j - i));
    i = j;
  }

  const std::int64_t total = detail::tied_pairs(static_cast<std::int64_t>(n));
  KendallCounts c;
  c.concordant_minus_discordant = total - ties_x - ties_y + ties_xy - 2 * discordant;
  c.untied_x = total - ties_x;
  c.untied_y = total - ties_y;
  return c;
}

inline double kendall_tau_from_counts(const KendallCounts& c) {
  if (c.untied_x == 0 || c.untied_y == 0) {
    throw Error("kendall_tau undefined: all values tied in one vector");
  }
  return static_cast<double>(c.concordant_minus_discordant) /
         std::sqrt(static_cast<double>(c.untied_x * c.untied_y));
}

/// Tie-corrected Kendall's tau-b.
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("kendall_tau: need two vectors of equal length >= 2");
  }
  return kendall_tau_from_counts(kendall_counts(x, y));
}

/// 1-based ranks; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("correlation undefined: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

/// Pearson correlation of average ranks.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman_rho: need two vectors of equal length >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// Extrapolated RBO of two complete rankings of the same items:
/// (X_l / l) p^l + ((1 - p) / p) * sum_{d=1..l} (X_d / d) p^d, where X_d is
/// the overlap of the two depth-d prefixes.
///
/// Evaluated as 1 minus the weighted prefix disagreement, using
/// p^l + (1 - p) * sum_{d=1..l} p^(d-1) = 1, so identical rankings give
/// exactly 1 and the result is symmetric in its arguments.
inline double rbo(std::span<const std::string> a, std::span<const std::string> b,
                  double p = 0.9) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("rbo: p must be in (0,1)");
  if (a.size() != b.size()) throw Error("rbo: rankings differ in length");
  {
    std::vector<std::string> sa(a.begin(), a.end());
    std::vector<std::string> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (std::adjacent_find(sa.begin(), sa.end()) != sa.end()) {
      throw Error("rbo: duplicate item in ranking");
    }
    if (sa != sb) throw Error("rbo: rankings contain different items");
  }
  const std::size_t l = a.size();
  if (l == 0) throw Error("rbo: empty rankings");

  std::unordered_set<std::string_view> seen_a;
  std::unordered_set<std::string_view> seen_b;
  std::size_t overlap = 0;
  double weight = 1.0;  // p^(d-1)
  double deficit = 0.0;
  for (std::size_t d = 1; d <= l; ++d) {
    const std::string& x = a[d - 1];
    const std::string& y = b[d - 1];
    if (x == y) {
      ++overlap;
    } else {
      if (seen_b.count(x)) ++overlap;
      if (seen_a.count(y)) ++overlap;
    }
    seen_a.insert(x);
    seen_b.insert(y);
    if (overlap != d) {
      deficit += (1.0 - static_cast<double>(overlap) / static_cast<double>(d)) * weight;
    }
    weight *= p;
  }
  // X_l = l for complete rankings of the same items, so the tail term
  // contributes no disagreement.
  const double value = 1.0 - (1.0 - p) * deficit;
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace oneshot
