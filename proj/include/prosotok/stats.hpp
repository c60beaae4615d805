// Copyright 2026 The prosotok Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROSOTOK_STATS_HPP
#define PROSOTOK_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "prosotok/error.hpp"

namespace prosotok {

/// Neumaier-compensated accumulator. Merging two accumulators is
/// associative up to the compensation term, which keeps sharded and
/// sequential reductions within a few ulps of each other.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_mean(std::span<const double> xs) {
  if (xs.empty()) throw InputError("mean of empty sequence");
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value() / static_cast<double>(xs.size());
}

/// Percentile with linear interpolation between order statistics:
/// position p/100 * (n-1) in the sorted sample. `sorted` must be ascending.
inline double percentile_sorted(std::span<const double> sorted, double pct) {
  if (sorted.empty()) throw InputError("percentile of empty sequence");
  if (!(pct >= 0.0 && pct <= 100.0)) throw InputError("percentile out of [0, 100]");
  const double pos = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  return percentile_sorted(values, pct);
}

/// Ordinary least-squares slope of ys against xs. Both are centered first
/// so the result is exact (to round-off) on noiseless lines.
inline double ols_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw InputError("ols_slope needs two or more paired points");
  }
  const double mx = compensated_mean(xs);
  const double my = compensated_mean(ys);
  CompensatedSum sxy, sxx;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    sxy.add(dx * (ys[i] - my));
    sxx.add(dx * dx);
  }
  if (sxx.value() == 0.0) throw InputError("ols_slope with constant abscissa");
  return sxy.value() / sxx.value();
}

/// Mean with dispersion. `stddev` is the sample standard deviation (n-1
/// denominator); `stderr_` = stddev / sqrt(n). Both are NaN when n < 2.
struct SummaryStat {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

inline SummaryStat summarize(std::span<const double> xs) {
  SummaryStat s;
  s.n = xs.size();
  if (xs.empty()) return s;
  s.mean = compensated_mean(xs);
  if (xs.size() >= 2) {
    CompensatedSum ss;
    for (double x : xs) ss.add((x - s.mean) * (x - s.mean));
    s.stddev = std::sqrt(ss.value() / static_cast<double>(xs.size() - 1));
    s.stderr_ = s.stddev / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

}  // namespace prosotok

#endif  // PROSOTOK_STATS_HPP
