#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "ncer/elimination.hpp"
#include "ncer/lattice.hpp"
#include "ncer/model.hpp"
#include "ncer/numeric.hpp"

namespace ncer {

inline constexpr std::size_t kDefaultBudget = 10'000'000;

// Rate functions report +infinity as kInf, never as an exception.

/// phi(t) = E exp(t F(X_1, ..., X_ell)).
double mgf(const FiniteDistribution& dist, const Observable& obs, double t);
/// ln phi(t), stable for both small and large |t|.
double log_mgf(const ScalarLaw& law, double t);
/// phi'(t) / phi(t), the mean of F under exponential tilting by t.
double tilted_mean(const ScalarLaw& law, double t);

/// Cramer rate I(alpha) = sup_t (t alpha - ln phi(t)) for a centered,
/// nondegenerate observable. The sup runs over t >= 0 for alpha >= 0 and
/// over t <= 0 for alpha <= 0, located by bisection on phi'/phi.
class CramerRate {
 public:
  CramerRate(const FiniteDistribution& dist, const Observable& obs);

  double operator()(double alpha) const;
  /// Maximising t for alpha inside (-M_-, M_+).
  double optimal_t(double alpha) const;

  double sup_pos() const { return sup_pos_; }
  double sup_neg() const { return sup_neg_; }
  double t_cap() const { return t_cap_; }
  const ScalarLaw& law() const { return law_; }

 private:
  ScalarLaw law_;
  double sup_pos_;
  double sup_neg_;
  double t_cap_;
};

double cramer_rate(const FiniteDistribution& dist, const Observable& obs, double alpha);

/// Index structure of the fiber of a = 1 truncated to l terms: b runs over
/// the l smallest smooth numbers (1, ..., l when the basis is empty) and
/// term k touches X at j * b_k, j = 1..ell.
struct ChainStructure {
  std::vector<std::int64_t> indices;  // distinct j * b_k, ascending
  Eigen::MatrixXi positions;          // l x ell, 0-based positions into `indices`
};

ChainStructure chain_index_structure(const PrimeBasis& basis, int l);

/// ln R_l(lambda F) = ln E exp(lambda sum_{k<=l} F(X_{b_k}, ..., X_{ell b_k})),
/// computed exactly. Throws BudgetExceeded when exact evaluation would
/// need more than `budget` table lookups.
double log_r_l(const FiniteDistribution& dist, const Observable& obs, double lambda, int l,
               std::size_t budget = kDefaultBudget);
double r_l(const FiniteDistribution& dist, const Observable& obs, double lambda, int l,
           std::size_t budget = kDefaultBudget);

struct McEstimate {
  double mean;
  double stderr_;
};

/// Monte Carlo estimate of R_l with its standard error, reproducible in seed.
McEstimate r_l_mc(const FiniteDistribution& dist, const Observable& obs, double lambda, int l,
                  std::int64_t replicas, std::uint64_t seed);

/// Exact R_l for every l up to some bound, with the elimination plans cached.
/// Immutable after construction, so concurrent evaluation is safe.
class ChainMoments {
 public:
  ChainMoments(const FiniteDistribution& dist, const Observable& obs, const PrimeBasis& basis,
               int max_l, std::size_t budget = kDefaultBudget);

  double log_r(int l, double lambda) const;
  int max_l() const { return static_cast<int>(plans_.size()); }

 private:
  Vector probs_;
  Vector table_;
  std::vector<std::shared_ptr<const EliminationPlan>> plans_;
};

/// Q(lambda F) as the weighted series r sum_l (1/h_l - 1/h_{l+1}) ln R_l.
///
/// The truncation length L is fixed at construction from the tail bound
///   r M |lambda| sum_{l > L} (1/h_l - 1/h_{l+1}) l  <  tol
/// evaluated at |lambda| = lambda_max, so that Q restricted to
/// [-lambda_max, lambda_max] is a single smooth convex function with a
/// certified truncation error below tol.
class Pressure {
 public:
  Pressure(const FiniteDistribution& dist, const Observable& obs, const PrimeBasis& basis,
           double tol, double lambda_max, std::size_t budget = kDefaultBudget);

  double operator()(double lambda) const;
  /// Upper bound on the omitted tail at lambda.
  double tail_bound(double lambda) const;

  int truncation() const { return static_cast<int>(weights_.size()); }
  double tol() const { return tol_; }
  double lambda_max() const { return lambda_max_; }
  double sup_abs() const { return sup_abs_; }
  const PrimeBasis& basis() const { return basis_; }
  const Observable& observable() const { return obs_; }
  const FiniteDistribution& distribution() const { return dist_; }
  const std::vector<double>& weights() const { return weights_; }
  /// ln R_l from the cached plans, 1 <= l <= truncation().
  double log_r(int l, double lambda) const { return moments_->log_r(l, lambda); }

 private:
  FiniteDistribution dist_;
  Observable obs_;
  PrimeBasis basis_;
  double tol_;
  double lambda_max_;
  double sup_abs_;
  std::vector<double> weights_;  // w_1..w_L
  double tail_factor_;           // sum_{l > L} w_l l
  std::shared_ptr<const ChainMoments> moments_;
};

double pressure(const FiniteDistribution& dist, const Observable& obs, const PrimeBasis& basis,
                double lambda, double tol);

/// sum_{l > L} (1/h_l - 1/h_{l+1}) l, bounded above using enumerated smooth
/// numbers and h_l >= 2^{l^{1/m} - 1} beyond them. Zero for an empty basis.
double weighted_tail(const PrimeBasis& basis, int truncation);

/// (1/N) ln E exp(lambda S_N) = (1/N) sum_{a in A_N} ln R_{|B_N(a)|}.
double finite_pressure(const FiniteDistribution& dist, const Observable& obs,
                       const PrimeBasis& basis, double lambda, std::int64_t n,
                       std::size_t budget = kDefaultBudget);

/// J(u) = sup_lambda (lambda u - Q(lambda F)), searched over lambda >= 0 for
/// u >= 0 and lambda <= 0 for u <= 0 by golden section on [0, lambda_cap].
/// Reports +infinity when the objective still rises at the cap by at least
/// slope_tol.
class RateJ {
 public:
  explicit RateJ(std::shared_ptr<const Pressure> pressure, double slope_tol = 1e-6);

  double operator()(double u) const;

  double lambda_cap() const { return pressure_->lambda_max(); }
  /// Measured slope limits of Q at +cap and -cap.
  double upper_endpoint() const { return upper_; }
  double lower_endpoint() const { return lower_; }
  const Pressure& pressure() const { return *pressure_; }

 private:
  std::shared_ptr<const Pressure> pressure_;
  double slope_tol_;
  double upper_;
  double lower_;
};

/// Default conjugate search cap 60 / M.
double default_cap(const Observable& obs);

/// Builds J over a Pressure sized for lambda_cap = 60 / M.
RateJ make_rate_j(const FiniteDistribution& dist, const Observable& obs, const PrimeBasis& basis,
                  double tol = 1e-10, std::size_t budget = kDefaultBudget);

double rate_j(const Pressure& pressure, double u);

}  // namespace ncer
