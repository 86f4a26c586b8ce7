#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ncer/model.hpp"
#include "ncer/simulate.hpp"

namespace ncer {

/// max_{0 <= m <= n - b} (prefix[m + b] - prefix[m]) for prefix = S_0..S_n.
double window_max(std::span<const double> prefix, std::int64_t b);

/// b_n = floor(ln n / I(alpha)), clamped to at least 1.
std::int64_t b_window(std::int64_t n, double i_alpha);

struct ErPoint {
  double alpha;
  double i_alpha;
  std::int64_t n;
  std::int64_t b_n;
  std::uint64_t seed;
  SumMode mode;
  double max_increment;
  double statistic;   // max_increment / b_n
  double normalized;  // I(alpha) max_increment / ln n
};

struct ErSummary {
  double alpha;
  std::int64_t n;
  double mean;
  double min;
  double max;
  double mean_abs_dev;  // mean over seeds of |statistic - alpha|
  double max_abs_dev;
};

struct ErExperiment {
  std::vector<ErPoint> rows;  // sorted by (alpha, n, seed)
  std::vector<ErSummary> summary;
};

/// One trajectory per seed at the largest n; smaller n reuse its prefix.
ErExperiment experiment(const FiniteDistribution& dist, const Observable& obs,
                        const std::vector<double>& alphas, const std::vector<std::int64_t>& ns,
                        const std::vector<std::uint64_t>& seeds, SumMode mode = SumMode::nonconventional,
                        int threads = 1);

}  // namespace ncer
