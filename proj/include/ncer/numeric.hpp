#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace ncer {

/// Neumaier compensated accumulator.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar x) {
    const Scalar t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_ = Scalar(0);
  Scalar comp_ = Scalar(0);
};

/// log(sum_i w_i exp(x_i)) for positive weights, shifted by max(x).
template <typename DerivedW, typename DerivedX>
typename DerivedX::Scalar log_sum_exp(const Eigen::ArrayBase<DerivedW>& weights,
                                      const Eigen::ArrayBase<DerivedX>& x) {
  using Scalar = typename DerivedX::Scalar;
  const Scalar shift = x.maxCoeff();
  if (!std::isfinite(shift)) return shift;
  return shift + std::log((weights * (x - shift).exp()).sum());
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace ncer
