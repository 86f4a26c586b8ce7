#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ncer {

using u128 = unsigned __int128;

std::string to_string(u128 x);

/// The primes r_1 < ... < r_m not exceeding ell and r = prod (1 - 1/r_k).
struct PrimeBasis {
  int ell = 1;
  std::vector<std::int64_t> primes;
  double r_const = 1.0;

  int m() const { return static_cast<int>(primes.size()); }
};

PrimeBasis primes_up_to(int ell);

/// Exact nonnegative rational num/den.
struct Rational {
  u128 num;
  u128 den;
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Increasing products h_1 = 1 < h_2 < ... of powers of the basis primes.
/// |D(rho)| = l exactly on [ln h_l, ln h_{l+1}).
struct SmoothSequence {
  PrimeBasis basis;
  std::vector<u128> h;  // h[0] = h_1

  /// Number of l with both h_l and h_{l+1} available.
  std::size_t count() const { return h.empty() ? 0 : h.size() - 1; }

  // 1-based l throughout, 1 <= l <= count().
  double rho_min(std::size_t l) const;
  double rho_max(std::size_t l) const;
  /// 1/h_l - 1/h_{l+1} in lowest terms; CapacityError if it does not fit.
  Rational exact_weight(std::size_t l) const;
  double weight(std::size_t l) const;
};

/// The first count + 1 smooth numbers. Requires basis.m() >= 1.
SmoothSequence smooth_numbers(const PrimeBasis& basis, std::size_t count);

/// All smooth numbers <= bound, at most max_count of them.
std::vector<u128> smooth_up_to(const PrimeBasis& basis, u128 bound,
                               std::size_t max_count = SIZE_MAX);

/// |D(rho)|: lattice points n >= 0 with sum n_i ln r_i <= rho.
std::size_t d_count(const PrimeBasis& basis, double rho);
/// Number of smooth numbers <= x.
std::size_t d_count_int(const PrimeBasis& basis, u128 x);

/// A_N: integers in [1, N] coprime to every basis prime.
std::vector<std::int64_t> coprime_set(const PrimeBasis& basis, std::int64_t n);
/// B_N(a) = {a h <= N : h smooth}; a must be coprime to the basis.
std::vector<std::int64_t> b_set(const PrimeBasis& basis, std::int64_t a, std::int64_t n);
/// True iff {B_N(a)}, a in A_N, partitions {1, ..., N}.
bool partition_check(const PrimeBasis& basis, std::int64_t n);

/// Fiber size l -> number of a in A_N with |B_N(a)| = l.
std::map<std::size_t, std::int64_t> fiber_size_histogram(const PrimeBasis& basis, std::int64_t n);

/// {j k : m < k <= m + b, 1 <= j <= ell}, sorted.
std::vector<std::int64_t> window_index_set(std::int64_t m, std::int64_t b, int ell);
/// True iff the ell * b products j k in the window are pairwise distinct,
/// i.e. the window's summands involve disjoint sets of X's.
bool windows_iid(std::int64_t m, std::int64_t b, int ell);

}  // namespace ncer
