#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace ncer {

/// Exact evaluation of
///
///   log E exp( sum_k G(X_{v(k,1)}, ..., X_{v(k,ell)}) )
///
/// for i.i.d. X_v over a finite support, where row k of `terms` lists the
/// variables of term k in strictly increasing order and G is a dense
/// row-major table over s^ell support tuples.
///
/// The elimination order is chosen greedily (smallest joint scope first)
/// from the term structure alone, so one plan serves every G. Evaluation
/// keeps each intermediate table max-normalised with a separate log scale,
/// which keeps large |G| from overflowing.
class EliminationPlan {
 public:
  /// Throws BudgetExceeded when the plan's lookup count exceeds `budget`.
  EliminationPlan(const Eigen::MatrixXi& terms, int variables, Eigen::Index support,
                  std::size_t budget);

  /// Weighted table lookups performed by one evaluation.
  std::size_t cost() const { return cost_; }
  int variables() const { return variables_; }

  double log_expectation(const Eigen::VectorXd& log_factor, const Eigen::VectorXd& probs) const;

 private:
  struct Step {
    int var_pos;                                    // position of the eliminated variable in the joint scope
    int joint_size;                                 // |joint scope|
    std::vector<int> inputs;                        // factor ids consumed
    std::vector<std::vector<std::size_t>> strides;  // per input, stride per joint position
    std::vector<std::size_t> out_strides;           // per joint position
    std::size_t out_size;
  };

  int terms_;
  int variables_;
  Eigen::Index support_;
  std::size_t table_size_;
  std::size_t cost_ = 0;
  std::vector<Step> steps_;
  std::vector<int> results_;  // factor ids left with empty scope
};

}  // namespace ncer
