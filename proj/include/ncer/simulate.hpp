#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ncer/model.hpp"

namespace ncer {

/// Maps counter_hash(seed, i) through the cumulative probabilities of a
/// distribution, so X_i is available in O(1) without storing the sequence.
class IndexSampler {
 public:
  explicit IndexSampler(const FiniteDistribution& dist);
  int operator()(std::uint64_t seed, std::uint64_t i) const;

 private:
  std::vector<double> cdf_;
};

/// Support index of X_i in stream `seed`, i >= 1.
int x_value(const FiniteDistribution& dist, std::uint64_t seed, std::uint64_t i);

enum class SumMode { nonconventional, iid };

const char* to_string(SumMode mode);
SumMode parse_sum_mode(const std::string& text);

struct TrajectorySpec {
  std::uint64_t seed;
  std::int64_t n;
  FiniteDistribution dist;
  Observable obs;
  SumMode mode = SumMode::nonconventional;
};

/// Prefix sums S_0 = 0, S_1, ..., S_n.
struct Trajectory {
  TrajectorySpec spec;
  std::vector<double> prefix;
};

/// S_k = sum_{m <= k} F(X_m, X_{2m}, ..., X_{ell m}).
Trajectory trajectory(const TrajectorySpec& spec);
/// S_k = sum_{m <= k} Y_m with Y_m = F(X_{(m-1) ell + 1}, ..., X_{m ell}),
/// i.i.d. copies of F(X_1, ..., X_ell).
Trajectory iid_trajectory(const TrajectorySpec& spec);
/// Dispatches on spec.mode.
Trajectory simulate(const TrajectorySpec& spec);

/// S_N alone, without materialising the prefix.
double terminal_sum(const IndexSampler& sampler, const Observable& obs, std::uint64_t seed,
                    std::int64_t n, SumMode mode);

struct LdpEstimate {
  std::int64_t n;
  double u;
  std::int64_t replicas;
  std::int64_t hits;
  double p_hat;
  double rate_hat;  // +inf when hits == 0
  double ci_low;
  double ci_high;
  bool zero_count;
};

/// Fraction of replicas with S_N / N >= u, and -ln(p_hat) / N with a 95%
/// normal-approximation interval. Replica r uses replica_seed(seed, r).
LdpEstimate ldp_estimate(const FiniteDistribution& dist, const Observable& obs, std::int64_t n,
                         double u, std::int64_t replicas, std::uint64_t seed, SumMode mode,
                         int threads = 1);

/// Runs body(i) for i in [0, count) across up to `threads` workers.
void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& body);

}  // namespace ncer
