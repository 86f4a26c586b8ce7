#include "ncer/elimination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ncer/errors.hpp"

namespace ncer {

namespace {

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    return std::numeric_limits<std::size_t>::max();
  return a * b;
}

std::size_t saturating_pow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) out = saturating_mul(out, base);
  return out;
}

std::vector<int> merge_scopes(const std::vector<std::vector<int>>& scopes, const std::vector<int>& ids) {
  std::vector<int> joint;
  for (int f : ids) joint.insert(joint.end(), scopes[static_cast<std::size_t>(f)].begin(),
                                 scopes[static_cast<std::size_t>(f)].end());
  std::sort(joint.begin(), joint.end());
  joint.erase(std::unique(joint.begin(), joint.end()), joint.end());
  return joint;
}

}  // namespace

EliminationPlan::EliminationPlan(const Eigen::MatrixXi& terms, int variables, Eigen::Index support,
                                 std::size_t budget)
    : terms_(static_cast<int>(terms.rows())), variables_(variables), support_(support) {
  if (support < 1) throw InputError("support must be nonempty");
  const auto ell = static_cast<std::size_t>(terms.cols());
  const auto s = static_cast<std::size_t>(support);
  table_size_ = saturating_pow(s, ell);

  std::vector<std::vector<int>> scopes;
  for (Eigen::Index k = 0; k < terms.rows(); ++k) {
    std::vector<int> scope;
    for (Eigen::Index j = 0; j < terms.cols(); ++j) {
      const int v = terms(k, j);
      if (v < 0 || v >= variables) throw InputError("term variable out of range");
      if (j > 0 && v <= terms(k, j - 1)) throw InputError("term variables must be increasing");
      scope.push_back(v);
    }
    scopes.push_back(std::move(scope));
  }
  std::vector<bool> alive(scopes.size(), true);
  std::vector<bool> eliminated(static_cast<std::size_t>(variables), false);

  for (int round = 0; round < variables; ++round) {
    int best_var = -1;
    std::vector<int> best_inputs;
    std::vector<int> best_joint;
    for (int v = 0; v < variables; ++v) {
      if (eliminated[static_cast<std::size_t>(v)]) continue;
      std::vector<int> inputs;
      for (std::size_t f = 0; f < scopes.size(); ++f)
        if (alive[f] && std::binary_search(scopes[f].begin(), scopes[f].end(), v))
          inputs.push_back(static_cast<int>(f));
      std::vector<int> joint = merge_scopes(scopes, inputs);
      if (joint.empty()) joint.push_back(v);  // variable in no term: sums to one
      if (best_var < 0 || joint.size() < best_joint.size()) {
        best_var = v;
        best_inputs = std::move(inputs);
        best_joint = std::move(joint);
      }
    }
    eliminated[static_cast<std::size_t>(best_var)] = true;

    Step step;
    step.joint_size = static_cast<int>(best_joint.size());
    step.var_pos = static_cast<int>(std::find(best_joint.begin(), best_joint.end(), best_var) -
                                    best_joint.begin());
    step.inputs = best_inputs;
    for (int f : best_inputs) {
      const auto& scope = scopes[static_cast<std::size_t>(f)];
      std::vector<std::size_t> strides(best_joint.size(), 0);
      std::size_t stride = 1;
      for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
        const auto pos = std::find(best_joint.begin(), best_joint.end(), *it) - best_joint.begin();
        strides[static_cast<std::size_t>(pos)] = stride;
        stride *= s;
      }
      step.strides.push_back(std::move(strides));
      alive[static_cast<std::size_t>(f)] = false;
    }
    step.out_strides.assign(best_joint.size(), 0);
    std::size_t stride = 1;
    for (std::size_t p = best_joint.size(); p-- > 0;) {
      if (static_cast<int>(p) == step.var_pos) continue;
      step.out_strides[p] = stride;
      stride *= s;
    }
    step.out_size = stride;

    const std::size_t step_cost =
        saturating_mul(saturating_pow(s, best_joint.size()), best_inputs.size() + 1);
    cost_ = step_cost > std::numeric_limits<std::size_t>::max() - cost_
                ? std::numeric_limits<std::size_t>::max()
                : cost_ + step_cost;
    if (cost_ > budget) throw BudgetExceeded(cost_, budget);

    std::vector<int> out_scope = best_joint;
    out_scope.erase(out_scope.begin() + step.var_pos);
    scopes.push_back(std::move(out_scope));
    alive.push_back(true);
    steps_.push_back(std::move(step));
  }
  for (std::size_t f = 0; f < scopes.size(); ++f)
    if (alive[f]) results_.push_back(static_cast<int>(f));
}

double EliminationPlan::log_expectation(const Eigen::VectorXd& log_factor,
                                        const Eigen::VectorXd& probs) const {
  if (static_cast<std::size_t>(log_factor.size()) != table_size_)
    throw InputError("factor table has the wrong size for this plan");
  if (probs.size() != support_) throw InputError("probability vector has the wrong size");

  // Intermediate tables live in one buffer. Each is rescaled by an exact
  // power of two after it is built, so scaling adds no rounding error and
  // the exponents are summed as integers.
  std::vector<std::size_t> offset(steps_.size() + 1, 0);
  for (std::size_t k = 0; k < steps_.size(); ++k) offset[k + 1] = offset[k] + steps_[k].out_size;
  std::vector<double> buffer(offset.back(), 0.0);
  std::vector<long> exponent(steps_.size(), 0);

  const double top = log_factor.maxCoeff();
  const Eigen::ArrayXd base = (log_factor.array() - top).exp();
  auto data_of = [&](int f) -> const double* {
    return f < terms_ ? base.data() : buffer.data() + offset[static_cast<std::size_t>(f - terms_)];
  };
  auto exponent_of = [&](int f) -> long { return f < terms_ ? 0 : exponent[static_cast<std::size_t>(f - terms_)]; };

  const auto s = static_cast<std::size_t>(support_);
  std::vector<std::size_t> digits;
  std::vector<std::size_t> idx;
  std::vector<const double*> data;
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    const Step& step = steps_[k];
    const auto n_in = step.inputs.size();
    const auto u = static_cast<std::size_t>(step.joint_size);
    double* out = buffer.data() + offset[k];
    data.resize(n_in);
    for (std::size_t i = 0; i < n_in; ++i) {
      data[i] = data_of(step.inputs[i]);
      exponent[k] += exponent_of(step.inputs[i]);
    }
    digits.assign(u, 0);
    idx.assign(n_in, 0);
    std::size_t out_idx = 0;
    const auto var_pos = static_cast<std::size_t>(step.var_pos);
    std::size_t total = 1;
    for (std::size_t p = 0; p < u; ++p) total *= s;
    for (std::size_t flat = 0; flat < total; ++flat) {
      double w = probs[static_cast<Eigen::Index>(digits[var_pos])];
      for (std::size_t i = 0; i < n_in; ++i) w *= data[i][idx[i]];
      out[out_idx] += w;
      // Odometer increment, last joint position fastest.
      for (std::size_t p = u; p-- > 0;) {
        if (++digits[p] < s) {
          for (std::size_t i = 0; i < n_in; ++i) idx[i] += step.strides[i][p];
          out_idx += step.out_strides[p];
          break;
        }
        digits[p] = 0;
        for (std::size_t i = 0; i < n_in; ++i) idx[i] -= (s - 1) * step.strides[i][p];
        out_idx -= (s - 1) * step.out_strides[p];
      }
    }
    const double peak = *std::max_element(out, out + step.out_size);
    if (!(peak > 0.0)) throw Error("elimination underflow");
    int e = 0;
    std::frexp(peak, &e);
    const double shrink = std::ldexp(1.0, -e);
    for (std::size_t i = 0; i < step.out_size; ++i) out[i] *= shrink;
    exponent[k] += e;
  }

  // Every term's base table carried a factor exp(top); count them once each.
  double total = static_cast<double>(terms_) * top;
  long binary = 0;
  for (int f : results_) {
    binary += exponent_of(f);
    total += std::log(data_of(f)[0]);
  }
  return total + static_cast<double>(binary) * std::numbers::ln2;
}

}  // namespace ncer
