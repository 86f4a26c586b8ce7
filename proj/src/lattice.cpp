#include "ncer/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ncer/errors.hpp"

namespace ncer {

namespace {

constexpr u128 kU128Max = ~u128(0);

u128 gcd(u128 a, u128 b) {
  while (b != 0) {
    const u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Hamming-style k-way merge. Stops at the first value above `bound`, after
// `max_count` values, or when every candidate would overflow 128 bits.
std::vector<u128> merge_smooth(const PrimeBasis& basis, u128 bound, std::size_t max_count) {
  std::vector<u128> h;
  if (max_count == 0 || bound < 1) return h;
  h.push_back(1);
  const std::size_t m = basis.primes.size();
  std::vector<std::size_t> next(m, 0);
  while (h.size() < max_count) {
    u128 best = 0;
    bool any = false;
    for (std::size_t k = 0; k < m; ++k) {
      const auto p = static_cast<u128>(basis.primes[k]);
      const u128 base = h[next[k]];
      if (base > kU128Max / p) continue;
      const u128 cand = base * p;
      if (!any || cand < best) {
        best = cand;
        any = true;
      }
    }
    if (!any || best > bound) break;
    h.push_back(best);
    for (std::size_t k = 0; k < m; ++k) {
      const auto p = static_cast<u128>(basis.primes[k]);
      if (h[next[k]] <= kU128Max / p && h[next[k]] * p == best) ++next[k];
    }
  }
  return h;
}

long double to_ld(u128 x) { return static_cast<long double>(x); }

}  // namespace

std::string to_string(u128 x) {
  if (x == 0) return "0";
  std::string s;
  while (x > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(x % 10)));
    x /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

PrimeBasis primes_up_to(int ell) {
  if (ell < 1) throw InputError("ell must be at least 1, got " + std::to_string(ell));
  PrimeBasis basis;
  basis.ell = ell;
  std::vector<bool> composite(static_cast<std::size_t>(ell) + 1, false);
  long double r = 1.0L;
  for (int p = 2; p <= ell; ++p) {
    if (composite[static_cast<std::size_t>(p)]) continue;
    basis.primes.push_back(p);
    r *= 1.0L - 1.0L / p;
    for (int q = 2 * p; q <= ell; q += p) composite[static_cast<std::size_t>(q)] = true;
  }
  basis.r_const = static_cast<double>(r);
  return basis;
}

double SmoothSequence::rho_min(std::size_t l) const {
  if (l < 1 || l > count()) throw InputError("l out of generated range");
  return static_cast<double>(std::log(to_ld(h[l - 1])));
}

double SmoothSequence::rho_max(std::size_t l) const {
  if (l < 1 || l > count()) throw InputError("l out of generated range");
  return static_cast<double>(std::log(to_ld(h[l])));
}

Rational SmoothSequence::exact_weight(std::size_t l) const {
  if (l < 1 || l > count()) throw InputError("l out of generated range");
  const u128 a = h[l - 1];
  const u128 b = h[l];
  const u128 g = gcd(a, b);
  const u128 num = (b - a) / g;
  const u128 b_red = b / g;
  if (a > kU128Max / b_red)
    throw CapacityError("weight denominator for l = " + std::to_string(l) +
                        " exceeds 128-bit capacity");
  const u128 den = a * b_red;
  const u128 g2 = gcd(num, den);
  return Rational{num / g2, den / g2};
}

double SmoothSequence::weight(std::size_t l) const {
  if (l < 1 || l > count()) throw InputError("l out of generated range");
  const u128 a = h[l - 1];
  const u128 b = h[l];
  const u128 g = gcd(a, b);
  const u128 b_red = b / g;
  if (a <= kU128Max / b_red) {
    const Rational w = exact_weight(l);
    return static_cast<double>(to_ld(w.num) / to_ld(w.den));
  }
  return static_cast<double>(to_ld(b - a) / (to_ld(a) * to_ld(b)));
}

SmoothSequence smooth_numbers(const PrimeBasis& basis, std::size_t count) {
  if (basis.m() < 1) throw InputError("smooth numbers need a nonempty prime basis (ell >= 2)");
  if (count < 1) throw InputError("count must be at least 1");
  SmoothSequence seq{basis, merge_smooth(basis, kU128Max, count + 1)};
  if (seq.h.size() < count + 1)
    throw CapacityError("smooth number h_l for l = " + std::to_string(seq.h.size() + 1) +
                        " exceeds 128-bit capacity");
  return seq;
}

std::vector<u128> smooth_up_to(const PrimeBasis& basis, u128 bound, std::size_t max_count) {
  return merge_smooth(basis, bound, max_count);
}

std::size_t d_count_int(const PrimeBasis& basis, u128 x) {
  if (x < 1) return 0;
  return merge_smooth(basis, x, SIZE_MAX).size();
}

std::size_t d_count(const PrimeBasis& basis, double rho) {
  if (!(rho >= 0.0)) throw InputError("rho must be nonnegative");
  // rho itself carries an absolute rounding error near rho * eps, so widen by a
  // few of those to make rho = ln h recover h. Exact bounds go to d_count_int.
  const long double x = std::exp(static_cast<long double>(rho)) *
                        (1.0L + 8.0L * std::max(1.0, rho) * std::numeric_limits<double>::epsilon());
  if (!(x < std::ldexp(1.0L, 127))) throw CapacityError("rho too large for 128-bit lattice count");
  return d_count_int(basis, static_cast<u128>(std::floor(x)));
}

std::vector<std::int64_t> coprime_set(const PrimeBasis& basis, std::int64_t n) {
  if (n < 1) throw InputError("N must be at least 1");
  std::vector<bool> hit(static_cast<std::size_t>(n) + 1, false);
  for (std::int64_t p : basis.primes)
    for (std::int64_t q = p; q <= n; q += p) hit[static_cast<std::size_t>(q)] = true;
  std::vector<std::int64_t> out;
  for (std::int64_t a = 1; a <= n; ++a)
    if (!hit[static_cast<std::size_t>(a)]) out.push_back(a);
  return out;
}

std::vector<std::int64_t> b_set(const PrimeBasis& basis, std::int64_t a, std::int64_t n) {
  if (a < 1) throw InputError("a must be positive");
  for (std::int64_t p : basis.primes)
    if (a % p == 0)
      throw InputError(std::to_string(a) + " is not coprime to prime " + std::to_string(p));
  std::vector<std::int64_t> out;
  if (a > n) return out;
  for (u128 h : smooth_up_to(basis, static_cast<u128>(n / a)))
    out.push_back(a * static_cast<std::int64_t>(h));
  return out;
}

bool partition_check(const PrimeBasis& basis, std::int64_t n) {
  if (n < 1) throw InputError("N must be at least 1");
  const std::vector<u128> smooth = smooth_up_to(basis, static_cast<u128>(n));
  std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
  std::int64_t covered = 0;
  for (std::int64_t a : coprime_set(basis, n)) {
    for (u128 h : smooth) {
      if (h > static_cast<u128>(n / a)) break;
      const auto b = static_cast<std::size_t>(a * static_cast<std::int64_t>(h));
      if (seen[b]) return false;
      seen[b] = true;
      ++covered;
    }
  }
  return covered == n;
}

std::map<std::size_t, std::int64_t> fiber_size_histogram(const PrimeBasis& basis, std::int64_t n) {
  const std::vector<u128> smooth = smooth_up_to(basis, static_cast<u128>(std::max<std::int64_t>(n, 1)));
  std::map<std::size_t, std::int64_t> hist;
  for (std::int64_t a : coprime_set(basis, n)) {
    const auto size = static_cast<std::size_t>(
        std::upper_bound(smooth.begin(), smooth.end(), static_cast<u128>(n / a)) - smooth.begin());
    ++hist[size];
  }
  return hist;
}

std::vector<std::int64_t> window_index_set(std::int64_t m, std::int64_t b, int ell) {
  if (m < 0 || b < 1 || ell < 1) throw InputError("window needs m >= 0, b >= 1, ell >= 1");
  std::set<std::int64_t> idx;
  for (std::int64_t k = m + 1; k <= m + b; ++k)
    for (int j = 1; j <= ell; ++j) idx.insert(j * k);
  return {idx.begin(), idx.end()};
}

bool windows_iid(std::int64_t m, std::int64_t b, int ell) {
  return window_index_set(m, b, ell).size() == static_cast<std::size_t>(ell) * static_cast<std::size_t>(b);
}

}  // namespace ncer
