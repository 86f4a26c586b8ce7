#include "ncer/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ncer/counter_rng.hpp"
#include "ncer/errors.hpp"
#include "ncer/simulate.hpp"

namespace ncer {

namespace {

void require_rate_ready(const Observable& obs) {
  if (!(obs.variance() > 0.0)) throw DegenerateError("observable is almost surely constant (variance 0)");
  if (!obs.is_centered()) throw InputError("observable must be centered (mean 0)");
}

void require_basis(const Observable& obs, const PrimeBasis& basis) {
  if (obs.ell() != basis.ell)
    throw InputError("observable has ell = " + std::to_string(obs.ell()) + " but basis has ell = " +
                     std::to_string(basis.ell));
}

// T(L) = sum_{l > L} (1/h_l - 1/h_{l+1}) l = (L + 1) / h_{L+1} + sum_{l >= L+2} 1/h_l.
class WeightedTail {
 public:
  explicit WeightedTail(const PrimeBasis& basis) : m_(basis.m()) {
    if (m_ == 0) return;
    const std::vector<u128> h = smooth_up_to(basis, u128(1) << 120, 250'000);
    inv_h_.reserve(h.size());
    for (u128 v : h) inv_h_.push_back(1.0L / static_cast<long double>(v));
    suffix_.assign(inv_h_.size() + 1, 0.0L);
    suffix_.back() = integral_bound(static_cast<long double>(inv_h_.size()));
    for (std::size_t i = inv_h_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + inv_h_[i];
  }

  double operator()(int truncation) const {
    if (m_ == 0) return truncation >= 1 ? 0.0 : 1.0;
    const auto next = static_cast<std::size_t>(truncation) + 1;  // l = L + 1, 1-based
    if (next + 1 <= inv_h_.size())
      return static_cast<double>(static_cast<long double>(next) * inv_h_[next - 1] + suffix_[next]);
    // Beyond the enumeration, h_l >= 2^{l^{1/m} - 1}.
    const auto x = static_cast<long double>(next);
    return static_cast<double>(x * bound(x) + integral_bound(x));
  }

 private:
  long double bound(long double l) const {
    return std::exp2(1.0L - std::pow(l, 1.0L / m_));
  }

  // int_x^inf 2^{1 - t^{1/m}} dt = 2 m Gamma(m, x^{1/m} ln 2) / (ln 2)^m.
  long double integral_bound(long double x) const {
    const long double ln2 = std::numbers::ln2_v<long double>;
    const long double z = std::pow(x, 1.0L / m_) * ln2;
    long double term = 1.0L, series = 1.0L;
    for (int k = 1; k < m_; ++k) {
      term *= z / k;
      series += term;
    }
    long double fact = 1.0L;
    for (int k = 2; k < m_; ++k) fact *= k;
    return 2.0L * m_ * fact * std::exp(-z) * series / std::pow(ln2, static_cast<long double>(m_));
  }

  int m_;
  std::vector<long double> inv_h_;
  std::vector<long double> suffix_;  // suffix_[i] = sum_{l >= i+1} 1/h_l (1-based l = i + 1)
};

std::vector<std::int64_t> chain_b_values(const PrimeBasis& basis, int l) {
  std::vector<std::int64_t> b;
  if (basis.m() == 0) {
    for (int k = 1; k <= l; ++k) b.push_back(k);
    return b;
  }
  const SmoothSequence seq = smooth_numbers(basis, static_cast<std::size_t>(l));
  const auto limit = static_cast<u128>(std::numeric_limits<std::int64_t>::max() / basis.ell);
  for (int k = 0; k < l; ++k) {
    if (seq.h[static_cast<std::size_t>(k)] > limit)
      throw CapacityError("chain index for l = " + std::to_string(k + 1) + " exceeds 64 bits");
    b.push_back(static_cast<std::int64_t>(seq.h[static_cast<std::size_t>(k)]));
  }
  return b;
}

}  // namespace

double log_mgf(const ScalarLaw& law, double t) {
  if (t == 0.0) return 0.0;
  const double reach = std::abs(t) * law.values.cwiseAbs().maxCoeff();
  if (reach < 1.0) {
    // log1p/expm1 keep relative accuracy when phi(t) - 1 is tiny.
    CompensatedSum<double> acc;
    for (Eigen::Index i = 0; i < law.values.size(); ++i)
      acc.add(law.masses[i] * std::expm1(t * law.values[i]));
    return std::log1p(acc.value());
  }
  return log_sum_exp(law.masses.array(), (t * law.values).array());
}

double tilted_mean(const ScalarLaw& law, double t) {
  const Eigen::ArrayXd x = t * law.values.array();
  const Eigen::ArrayXd w = law.masses.array() * (x - x.maxCoeff()).exp();
  return (w * law.values.array()).sum() / w.sum();
}

double mgf(const FiniteDistribution& dist, const Observable& obs, double t) {
  return std::exp(log_mgf(law_of(obs, dist), t));
}

CramerRate::CramerRate(const FiniteDistribution& dist, const Observable& obs)
    : law_(law_of(obs, dist)),
      sup_pos_(obs.sup_pos()),
      sup_neg_(obs.sup_neg()),
      t_cap_(default_cap(obs)) {
  require_rate_ready(obs);
}

double CramerRate::optimal_t(double alpha) const {
  if (alpha == 0.0) return 0.0;
  if (!(alpha < sup_pos_ && alpha > -sup_neg_))
    throw InputError("alpha outside the open finiteness window (-M_-, M_+)");
  const double sign = alpha > 0.0 ? 1.0 : -1.0;
  // tilted_mean is strictly increasing in t; search |t| in [lo, hi].
  double lo = 0.0;
  double hi = t_cap_;
  while (sign * tilted_mean(law_, sign * hi) < sign * alpha && hi < 1e12) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sign * tilted_mean(law_, sign * mid) < sign * alpha)
      lo = mid;
    else
      hi = mid;
  }
  return sign * 0.5 * (lo + hi);
}

double CramerRate::operator()(double alpha) const {
  if (alpha == 0.0) return 0.0;
  if (alpha > sup_pos_ || alpha < -sup_neg_) return kInf;
  if (alpha == sup_pos_) return -std::log(law_.masses[law_.masses.size() - 1]);
  if (alpha == -sup_neg_) return -std::log(law_.masses[0]);
  const double t = optimal_t(alpha);
  return std::max(0.0, t * alpha - log_mgf(law_, t));
}

double cramer_rate(const FiniteDistribution& dist, const Observable& obs, double alpha) {
  return CramerRate(dist, obs)(alpha);
}

ChainStructure chain_index_structure(const PrimeBasis& basis, int l) {
  if (l < 1) throw InputError("l must be at least 1");
  const std::vector<std::int64_t> b = chain_b_values(basis, l);
  ChainStructure chain;
  for (std::int64_t bk : b)
    for (int j = 1; j <= basis.ell; ++j) chain.indices.push_back(j * bk);
  std::sort(chain.indices.begin(), chain.indices.end());
  chain.indices.erase(std::unique(chain.indices.begin(), chain.indices.end()), chain.indices.end());
  chain.positions.resize(l, basis.ell);
  for (int k = 0; k < l; ++k)
    for (int j = 1; j <= basis.ell; ++j)
      chain.positions(k, j - 1) = static_cast<int>(
          std::lower_bound(chain.indices.begin(), chain.indices.end(), j * b[static_cast<std::size_t>(k)]) -
          chain.indices.begin());
  return chain;
}

namespace {

std::shared_ptr<const EliminationPlan> plan_for(const PrimeBasis& basis, int l, Eigen::Index support,
                                                std::size_t budget) {
  const ChainStructure chain = chain_index_structure(basis, l);
  return std::make_shared<const EliminationPlan>(chain.positions, static_cast<int>(chain.indices.size()),
                                                 support, budget);
}

}  // namespace

double log_r_l(const FiniteDistribution& dist, const Observable& obs, double lambda, int l,
               std::size_t budget) {
  require_compatible(obs, dist);
  const PrimeBasis basis = primes_up_to(obs.ell());
  const auto plan = plan_for(basis, l, dist.size(), budget);
  if (lambda == 0.0) return 0.0;
  return plan->log_expectation(lambda * obs.table(), dist.probs());
}

double r_l(const FiniteDistribution& dist, const Observable& obs, double lambda, int l,
           std::size_t budget) {
  return std::exp(log_r_l(dist, obs, lambda, l, budget));
}

McEstimate r_l_mc(const FiniteDistribution& dist, const Observable& obs, double lambda, int l,
                  std::int64_t replicas, std::uint64_t seed) {
  require_compatible(obs, dist);
  if (replicas < 1000) throw InputError("r_l_mc needs at least 1000 replicas");
  const ChainStructure chain = chain_index_structure(primes_up_to(obs.ell()), l);
  const IndexSampler sampler(dist);
  const int ell = obs.ell();
  const auto s = static_cast<std::size_t>(dist.size());
  std::vector<int> x(chain.indices.size());
  double mean = 0.0, m2 = 0.0;
  for (std::int64_t r = 0; r < replicas; ++r) {
    const std::uint64_t rs = replica_seed(seed, static_cast<std::uint64_t>(r));
    for (std::size_t v = 0; v < x.size(); ++v)
      x[v] = sampler(rs, static_cast<std::uint64_t>(chain.indices[v]));
    double sum = 0.0;
    for (int k = 0; k < l; ++k) {
      std::size_t flat = 0;
      for (int j = 0; j < ell; ++j)
        flat = flat * s + static_cast<std::size_t>(x[static_cast<std::size_t>(chain.positions(k, j))]);
      sum += obs.table()[static_cast<Eigen::Index>(flat)];
    }
    const double value = std::exp(lambda * sum);
    const double delta = value - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (value - mean);
  }
  const double var = m2 / static_cast<double>(replicas - 1);
  return {mean, std::sqrt(var / static_cast<double>(replicas))};
}

ChainMoments::ChainMoments(const FiniteDistribution& dist, const Observable& obs,
                           const PrimeBasis& basis, int max_l, std::size_t budget)
    : probs_(dist.probs()), table_(obs.table()) {
  require_compatible(obs, dist);
  require_basis(obs, basis);
  for (int l = 1; l <= max_l; ++l) plans_.push_back(plan_for(basis, l, dist.size(), budget));
}

double ChainMoments::log_r(int l, double lambda) const {
  if (l < 1 || l > max_l()) throw InputError("l = " + std::to_string(l) + " outside cached range");
  if (lambda == 0.0) return 0.0;
  return plans_[static_cast<std::size_t>(l - 1)]->log_expectation(lambda * table_, probs_);
}

double weighted_tail(const PrimeBasis& basis, int truncation) {
  return WeightedTail(basis)(truncation);
}

Pressure::Pressure(const FiniteDistribution& dist, const Observable& obs, const PrimeBasis& basis,
                   double tol, double lambda_max, std::size_t budget)
    : dist_(dist),
      obs_(obs),
      basis_(basis),
      tol_(tol),
      lambda_max_(std::abs(lambda_max)),
      sup_abs_(obs.sup_abs()) {
  require_compatible(obs, dist);
  require_basis(obs, basis);
  if (!(tol > 0.0)) throw InputError("tol must be positive");

  const WeightedTail tail(basis);
  const double scale = basis.r_const * sup_abs_ * lambda_max_;
  int length = 1;
  while (scale * tail(length) >= tol) {
    if (++length > 100'000)
      throw ToleranceError("tolerance unreachable within series length 100000", scale * tail(length - 1));
  }

  // Grow plans one length at a time so a budget failure reports what is reachable.
  int feasible = 0;
  try {
    moments_ = std::make_shared<const ChainMoments>(dist, obs, basis, length, budget);
    feasible = length;
  } catch (const BudgetExceeded&) {
    int lo = 0, hi = length;  // lo feasible, hi infeasible
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      try {
        plan_for(basis, mid, dist.size(), budget);
        lo = mid;
      } catch (const BudgetExceeded&) {
        hi = mid;
      }
    }
    feasible = lo;
    const double achievable = scale * tail(feasible);
    throw ToleranceError("exact R_l exceeds the enumeration budget at l = " + std::to_string(feasible + 1) +
                             "; achievable tol is " + std::to_string(achievable),
                         achievable);
  }

  if (basis.m() == 0) {
    weights_.assign(1, 1.0);
  } else {
    const SmoothSequence seq = smooth_numbers(basis, static_cast<std::size_t>(feasible));
    for (int l = 1; l <= feasible; ++l) weights_.push_back(seq.weight(static_cast<std::size_t>(l)));
  }
  tail_factor_ = tail(feasible);
}

double Pressure::operator()(double lambda) const {
  if (lambda == 0.0) return 0.0;
  CompensatedSum<double> acc;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    acc.add(weights_[i] * moments_->log_r(static_cast<int>(i) + 1, lambda));
  return basis_.r_const * acc.value();
}

double Pressure::tail_bound(double lambda) const {
  return basis_.r_const * sup_abs_ * std::abs(lambda) * tail_factor_;
}

double pressure(const FiniteDistribution& dist, const Observable& obs, const PrimeBasis& basis,
                double lambda, double tol) {
  return Pressure(dist, obs, basis, tol, lambda)(lambda);
}

double finite_pressure(const FiniteDistribution& dist, const Observable& obs,
                       const PrimeBasis& basis, double lambda, std::int64_t n, std::size_t budget) {
  if (n < 1) throw InputError("N must be at least 1");
  const auto hist = fiber_size_histogram(basis, n);
  const ChainMoments moments(dist, obs, basis, static_cast<int>(hist.rbegin()->first), budget);
  CompensatedSum<double> acc;
  for (const auto& [size, count] : hist)
    acc.add(static_cast<double>(count) * moments.log_r(static_cast<int>(size), lambda));
  return acc.value() / static_cast<double>(n);
}

double default_cap(const Observable& obs) {
  return obs.sup_abs() > 0.0 ? 60.0 / obs.sup_abs() : 60.0;
}

RateJ::RateJ(std::shared_ptr<const Pressure> pressure, double slope_tol)
    : pressure_(std::move(pressure)), slope_tol_(slope_tol) {
  if (!pressure_) throw InputError("null pressure");
  require_rate_ready(pressure_->observable());
  const double cap = pressure_->lambda_max();
  if (!(cap > 0.0)) throw InputError("lambda_cap must be positive");
  const double delta = 1e-3 * cap;
  const Pressure& q = *pressure_;
  upper_ = (q(cap) - q(cap - delta)) / delta;
  lower_ = (q(-cap) - q(-cap + delta)) / delta;
}

double RateJ::operator()(double u) const {
  if (u == 0.0) return 0.0;
  const Pressure& q = *pressure_;
  const double sign = u > 0.0 ? 1.0 : -1.0;
  const double mag = std::abs(u);
  const double cap = lambda_cap();
  // Objective along the admissible half-line, parametrised by |lambda|.
  auto objective = [&](double x) { return x * mag - q(sign * x); };

  const double slope_at_cap = mag - (sign > 0 ? upper_ : lower_);
  if (slope_at_cap >= slope_tol_) return kInf;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = cap;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  // The objective is flat at its peak, so a bracket of 1e-7 cap leaves the
  // value within about 1e-14 cap^2 sup|Q''| of the maximum.
  while (b - a > 1e-7 * cap) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  return std::max({0.0, fc, fd, objective(0.5 * (a + b))});
}

RateJ make_rate_j(const FiniteDistribution& dist, const Observable& obs, const PrimeBasis& basis,
                  double tol, std::size_t budget) {
  return RateJ(std::make_shared<const Pressure>(dist, obs, basis, tol, default_cap(obs), budget));
}

double rate_j(const Pressure& pressure, double u) {
  return RateJ(std::make_shared<const Pressure>(pressure))(u);
}

}  // namespace ncer
