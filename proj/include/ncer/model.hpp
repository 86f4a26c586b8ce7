#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ncer {

using Vector = Eigen::VectorXd;

/// Largest dense observable table, s^ell entries.
inline constexpr std::size_t kMaxTableSize = 1'000'000;

/// Law of X_1: finitely many support points with positive probabilities.
class FiniteDistribution {
 public:
  /// Throws InputError unless values are strictly increasing and the
  /// probabilities are positive and sum to one within 1e-12.
  FiniteDistribution(Vector values, Vector probs);

  static FiniteDistribution uniform(std::span<const double> values);

  const Vector& values() const { return values_; }
  const Vector& probs() const { return probs_; }
  Eigen::Index size() const { return values_.size(); }

 private:
  Vector values_;
  Vector probs_;
};

/// A bounded function F on R^ell restricted to the support of mu^ell,
/// stored as a dense row-major table over support-index tuples (first
/// coordinate most significant), together with its exact moments.
class Observable {
 public:
  using Function = std::function<double(std::span<const double>)>;

  static Observable from_table(const FiniteDistribution& dist, int ell, Vector table);
  static Observable from_function(const FiniteDistribution& dist, int ell, const Function& f);

  /// F(x) = x_1 x_2 ... x_ell.
  static Observable product(const FiniteDistribution& dist, int ell);
  /// F(x) = 1 if all coordinates coincide, else 0.
  static Observable indicator_equal(const FiniteDistribution& dist, int ell);

  int ell() const { return ell_; }
  Eigen::Index support_size() const { return support_; }
  const Vector& table() const { return table_; }

  double mean() const { return mean_; }
  double variance() const { return variance_; }
  double sup_abs() const { return sup_abs_; }
  double sup_pos() const { return sup_pos_; }
  double sup_neg() const { return sup_neg_; }

  bool is_centered(double tol = 1e-12) const;

  /// Row-major position of a support-index tuple; throws InputError on
  /// a length mismatch or an out-of-range index.
  std::size_t flat_index(std::span<const int> tuple) const;

 private:
  Observable(int ell, Eigen::Index support, Vector table, double mean, double variance);

  friend Observable negate(const Observable& obs);

  int ell_;
  Eigen::Index support_;
  Vector table_;
  double mean_;
  double variance_;
  double sup_abs_;
  double sup_pos_;
  double sup_neg_;
};

/// F - E F.
Observable center(const Observable& obs, const FiniteDistribution& dist);
/// -F; swaps the positive and negative sup-norms.
Observable negate(const Observable& obs);
double evaluate(const Observable& obs, std::span<const int> tuple);

/// mu^ell-probability of every table cell, same layout as the table.
Vector tuple_probabilities(const FiniteDistribution& dist, int ell);

/// Distribution of F(X_1, ..., X_ell): distinct values ascending, masses.
struct ScalarLaw {
  Vector values;
  Vector masses;
};

ScalarLaw law_of(const Observable& obs, const FiniteDistribution& dist);

/// Throws InputError when obs was built over a different support size.
void require_compatible(const Observable& obs, const FiniteDistribution& dist);

}  // namespace ncer
