#include "ncer/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ncer/errors.hpp"
#include "ncer/numeric.hpp"

namespace ncer {

FiniteDistribution::FiniteDistribution(Vector values, Vector probs)
    : values_(std::move(values)), probs_(std::move(probs)) {
  if (values_.size() == 0) throw InputError("distribution needs at least one support point");
  if (values_.size() != probs_.size())
    throw InputError("values and probs differ in length");
  CompensatedSum<long double> total;
  for (Eigen::Index i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] > 0.0) || !std::isfinite(probs_[i]))
      throw InputError("probabilities must be positive");
    if (!std::isfinite(values_[i])) throw InputError("support points must be finite");
    if (i > 0 && !(values_[i] > values_[i - 1]))
      throw InputError("support points must be strictly increasing");
    total.add(probs_[i]);
  }
  if (std::abs(static_cast<double>(total.value()) - 1.0) > 1e-12)
    throw InputError("probabilities must sum to one");
}

FiniteDistribution FiniteDistribution::uniform(std::span<const double> values) {
  const auto n = static_cast<Eigen::Index>(values.size());
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = values[static_cast<std::size_t>(i)];
  return FiniteDistribution(std::move(v), Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

namespace {

std::size_t table_size(Eigen::Index support, int ell) {
  if (ell < 1) throw InputError("ell must be at least 1");
  std::size_t size = 1;
  for (int j = 0; j < ell; ++j) {
    size *= static_cast<std::size_t>(support);
    if (size > kMaxTableSize)
      throw CapacityError("observable table s^ell exceeds " + std::to_string(kMaxTableSize) +
                          " entries");
  }
  return size;
}

}  // namespace

Vector tuple_probabilities(const FiniteDistribution& dist, int ell) {
  table_size(dist.size(), ell);
  // Kronecker power of probs, first coordinate most significant.
  Vector out = Vector::Ones(1);
  const Eigen::Index s = dist.size();
  for (int j = 0; j < ell; ++j) {
    Vector next(out.size() * s);
    for (Eigen::Index a = 0; a < out.size(); ++a)
      next.segment(a * s, s) = out[a] * dist.probs();
    out = std::move(next);
  }
  return out;
}

Observable::Observable(int ell, Eigen::Index support, Vector table, double mean, double variance)
    : ell_(ell),
      support_(support),
      table_(std::move(table)),
      mean_(mean),
      variance_(variance) {
  sup_pos_ = std::max(0.0, table_.maxCoeff());
  sup_neg_ = std::max(0.0, -table_.minCoeff());
  sup_abs_ = std::max(sup_pos_, sup_neg_);
}

Observable Observable::from_table(const FiniteDistribution& dist, int ell, Vector table) {
  const std::size_t size = table_size(dist.size(), ell);
  if (static_cast<std::size_t>(table.size()) != size)
    throw InputError("table length " + std::to_string(table.size()) + " differs from s^ell = " +
                     std::to_string(size));
  if (!table.allFinite()) throw InputError("observable must be bounded");

  const Vector w = tuple_probabilities(dist, ell);
  CompensatedSum<long double> first;
  for (Eigen::Index i = 0; i < table.size(); ++i)
    first.add(static_cast<long double>(w[i]) * table[i]);
  const long double mean = first.value();
  CompensatedSum<long double> second;
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    const long double d = table[i] - mean;
    second.add(static_cast<long double>(w[i]) * d * d);
  }
  return Observable(ell, dist.size(), std::move(table), static_cast<double>(mean),
                    static_cast<double>(second.value()));
}

Observable Observable::from_function(const FiniteDistribution& dist, int ell, const Function& f) {
  const std::size_t size = table_size(dist.size(), ell);
  const Eigen::Index s = dist.size();
  Vector table(static_cast<Eigen::Index>(size));
  std::vector<int> idx(static_cast<std::size_t>(ell), 0);
  std::vector<double> x(static_cast<std::size_t>(ell), dist.values()[0]);
  for (std::size_t flat = 0; flat < size; ++flat) {
    table[static_cast<Eigen::Index>(flat)] = f(x);
    for (int j = ell - 1; j >= 0; --j) {
      const auto uj = static_cast<std::size_t>(j);
      if (++idx[uj] < s) {
        x[uj] = dist.values()[idx[uj]];
        break;
      }
      idx[uj] = 0;
      x[uj] = dist.values()[0];
    }
  }
  return from_table(dist, ell, std::move(table));
}

Observable Observable::product(const FiniteDistribution& dist, int ell) {
  return from_function(dist, ell, [](std::span<const double> x) {
    double p = 1.0;
    for (double v : x) p *= v;
    return p;
  });
}

Observable Observable::indicator_equal(const FiniteDistribution& dist, int ell) {
  return from_function(dist, ell, [](std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ? 1.0 : 0.0;
  });
}

bool Observable::is_centered(double tol) const {
  return std::abs(mean_) <= tol * std::max(1.0, sup_abs_);
}

std::size_t Observable::flat_index(std::span<const int> tuple) const {
  if (tuple.size() != static_cast<std::size_t>(ell_))
    throw InputError("tuple length " + std::to_string(tuple.size()) + " differs from ell = " +
                     std::to_string(ell_));
  std::size_t flat = 0;
  for (int i : tuple) {
    if (i < 0 || i >= support_)
      throw InputError("support index " + std::to_string(i) + " out of range");
    flat = flat * static_cast<std::size_t>(support_) + static_cast<std::size_t>(i);
  }
  return flat;
}

Observable center(const Observable& obs, const FiniteDistribution& dist) {
  require_compatible(obs, dist);
  Vector shifted = obs.table().array() - obs.mean();
  return Observable::from_table(dist, obs.ell(), std::move(shifted));
}

Observable negate(const Observable& obs) {
  Observable out(obs.ell_, obs.support_, -obs.table_, -obs.mean_, obs.variance_);
  return out;
}

double evaluate(const Observable& obs, std::span<const int> tuple) {
  return obs.table()[static_cast<Eigen::Index>(obs.flat_index(tuple))];
}

ScalarLaw law_of(const Observable& obs, const FiniteDistribution& dist) {
  require_compatible(obs, dist);
  const Vector w = tuple_probabilities(dist, obs.ell());
  std::map<double, CompensatedSum<long double>> masses;
  for (Eigen::Index i = 0; i < w.size(); ++i) masses[obs.table()[i]].add(w[i]);
  ScalarLaw law{Vector(static_cast<Eigen::Index>(masses.size())),
                Vector(static_cast<Eigen::Index>(masses.size()))};
  Eigen::Index k = 0;
  for (const auto& [value, mass] : masses) {
    law.values[k] = value;
    law.masses[k] = static_cast<double>(mass.value());
    ++k;
  }
  return law;
}

void require_compatible(const Observable& obs, const FiniteDistribution& dist) {
  if (obs.support_size() != dist.size())
    throw InputError("observable support size " + std::to_string(obs.support_size()) +
                     " differs from distribution size " + std::to_string(dist.size()));
}

}  // namespace ncer
