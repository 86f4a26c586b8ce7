#include "ncer/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ncer/counter_rng.hpp"
#include "ncer/errors.hpp"
#include "ncer/numeric.hpp"

namespace ncer {

IndexSampler::IndexSampler(const FiniteDistribution& dist) {
  CompensatedSum<long double> acc;
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    acc.add(dist.probs()[i]);
    cdf_.push_back(static_cast<double>(acc.value()));
  }
  cdf_.back() = 1.0;
}

int IndexSampler::operator()(std::uint64_t seed, std::uint64_t i) const {
  const double u = unit_interval(counter_hash(seed, i));
  return static_cast<int>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
}

int x_value(const FiniteDistribution& dist, std::uint64_t seed, std::uint64_t i) {
  return IndexSampler(dist)(seed, i);
}

const char* to_string(SumMode mode) {
  return mode == SumMode::iid ? "iid" : "nonconventional";
}

SumMode parse_sum_mode(const std::string& text) {
  if (text == "nonconventional") return SumMode::nonconventional;
  if (text == "iid") return SumMode::iid;
  throw InputError("unknown mode '" + text + "' (expected nonconventional or iid)");
}

namespace {

// Table cell of summand m: coordinates at X_{m}, ..., X_{ell m} or, in iid
// mode, at X_{(m-1) ell + 1}, ..., X_{m ell}.
inline double summand(const IndexSampler& sampler, const Observable& obs, std::uint64_t seed,
                      std::int64_t m, SumMode mode) {
  const int ell = obs.ell();
  const auto s = static_cast<std::size_t>(obs.support_size());
  std::size_t flat = 0;
  for (int j = 1; j <= ell; ++j) {
    const std::uint64_t idx = mode == SumMode::nonconventional
                                  ? static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(m)
                                  : static_cast<std::uint64_t>(m - 1) * static_cast<std::uint64_t>(ell) +
                                        static_cast<std::uint64_t>(j);
    flat = flat * s + static_cast<std::size_t>(sampler(seed, idx));
  }
  return obs.table()[static_cast<Eigen::Index>(flat)];
}

Trajectory build(const TrajectorySpec& spec) {
  require_compatible(spec.obs, spec.dist);
  if (spec.n < 1) throw InputError("trajectory length must be at least 1");
  const IndexSampler sampler(spec.dist);
  Trajectory out{spec, {}};
  out.prefix.resize(static_cast<std::size_t>(spec.n) + 1);
  out.prefix[0] = 0.0;
  CompensatedSum<double> acc;
  for (std::int64_t m = 1; m <= spec.n; ++m) {
    acc.add(summand(sampler, spec.obs, spec.seed, m, spec.mode));
    out.prefix[static_cast<std::size_t>(m)] = acc.value();
  }
  return out;
}

}  // namespace

Trajectory trajectory(const TrajectorySpec& spec) {
  if (spec.mode != SumMode::nonconventional) throw InputError("trajectory() needs nonconventional mode");
  return build(spec);
}

Trajectory iid_trajectory(const TrajectorySpec& spec) {
  if (spec.mode != SumMode::iid) throw InputError("iid_trajectory() needs iid mode");
  return build(spec);
}

Trajectory simulate(const TrajectorySpec& spec) { return build(spec); }

double terminal_sum(const IndexSampler& sampler, const Observable& obs, std::uint64_t seed,
                    std::int64_t n, SumMode mode) {
  CompensatedSum<double> acc;
  for (std::int64_t m = 1; m <= n; ++m) acc.add(summand(sampler, obs, seed, m, mode));
  return acc.value();
}

void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& body) {
  const std::int64_t workers = std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(count, 1));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  std::vector<std::thread> pool;
  for (std::int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t i = w * count / workers; i < (w + 1) * count / workers; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

LdpEstimate ldp_estimate(const FiniteDistribution& dist, const Observable& obs, std::int64_t n,
                         double u, std::int64_t replicas, std::uint64_t seed, SumMode mode,
                         int threads) {
  require_compatible(obs, dist);
  if (replicas < 1000) throw InputError("ldp_estimate needs at least 1000 replicas");
  if (!(u > 0.0)) throw InputError("u must be positive");
  if (n < 1) throw InputError("N must be at least 1");

  const IndexSampler sampler(dist);
  std::vector<char> hit(static_cast<std::size_t>(replicas), 0);
  parallel_for(replicas, threads, [&](std::int64_t r) {
    const double s = terminal_sum(sampler, obs, replica_seed(seed, static_cast<std::uint64_t>(r)), n, mode);
    // Relative guard so that S_N / N landing exactly on u counts despite rounding.
    hit[static_cast<std::size_t>(r)] = s / static_cast<double>(n) >= u - 1e-12 * std::max(1.0, u);
  });

  LdpEstimate est{};
  est.n = n;
  est.u = u;
  est.replicas = replicas;
  for (char h : hit) est.hits += h;
  const auto reps = static_cast<double>(replicas);
  const auto nn = static_cast<double>(n);
  est.p_hat = static_cast<double>(est.hits) / reps;
  est.zero_count = est.hits == 0;
  est.rate_hat = est.zero_count ? kInf : -std::log(est.p_hat) / nn;
  const double half = 1.96 * std::sqrt(est.p_hat * (1.0 - est.p_hat) / reps);
  // With no hits the normal interval collapses; fall back to the rule of three.
  const double p_high = est.zero_count ? 3.0 / reps : std::min(1.0, est.p_hat + half);
  const double p_low = est.p_hat - half;
  est.ci_low = -std::log(p_high) / nn;
  est.ci_high = p_low > 0.0 ? -std::log(p_low) / nn : kInf;
  return est;
}

}  // namespace ncer
