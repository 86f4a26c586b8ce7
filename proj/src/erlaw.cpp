#include "ncer/erlaw.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ncer/errors.hpp"
#include "ncer/rates.hpp"

namespace ncer {

double window_max(std::span<const double> prefix, std::int64_t b) {
  if (prefix.empty()) throw InputError("empty prefix");
  const auto n = static_cast<std::int64_t>(prefix.size()) - 1;
  if (b < 1) throw InputError("window length must be at least 1");
  if (b > n) throw InputError("window length " + std::to_string(b) + " exceeds n = " + std::to_string(n));
  double best = prefix[static_cast<std::size_t>(b)] - prefix[0];
  for (std::int64_t m = 1; m + b <= n; ++m)
    best = std::max(best, prefix[static_cast<std::size_t>(m + b)] - prefix[static_cast<std::size_t>(m)]);
  return best;
}

std::int64_t b_window(std::int64_t n, double i_alpha) {
  if (n < 3) throw InputError("n must be at least 3");
  if (!(i_alpha > 0.0) || !std::isfinite(i_alpha))
    throw InputError("I(alpha) must be finite and positive (alpha inside (0, M_+))");
  // 1e-9 absorbs rounding of ln n / I when the quotient is an integer.
  const double q = std::log(static_cast<double>(n)) / i_alpha;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(q + 1e-9)));
}

ErExperiment experiment(const FiniteDistribution& dist, const Observable& obs,
                        const std::vector<double>& alphas, const std::vector<std::int64_t>& ns,
                        const std::vector<std::uint64_t>& seeds, SumMode mode, int threads) {
  if (alphas.empty() || ns.empty() || seeds.empty()) throw InputError("empty alpha, n, or seed grid");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1]) throw InputError("n grid must be strictly increasing");
  const CramerRate rate(dist, obs);  // rejects degenerate or uncentered F

  std::vector<double> i_alpha;
  for (double a : alphas) {
    if (!(a > 0.0 && a < obs.sup_pos()))
      throw InputError("alpha = " + std::to_string(a) + " outside (0, M_+) = (0, " +
                       std::to_string(obs.sup_pos()) + ")");
    i_alpha.push_back(rate(a));
  }
  std::vector<std::vector<std::int64_t>> windows(alphas.size());
  for (std::size_t ai = 0; ai < alphas.size(); ++ai)
    for (std::int64_t n : ns) {
      const std::int64_t b = b_window(n, i_alpha[ai]);
      if (b > n) throw InputError("window b_n exceeds n = " + std::to_string(n));
      windows[ai].push_back(b);
    }

  // rows_by_seed[s] holds that seed's rows in (alpha, n) order.
  std::vector<std::vector<ErPoint>> rows_by_seed(seeds.size());
  parallel_for(static_cast<std::int64_t>(seeds.size()), threads, [&](std::int64_t si) {
    const auto idx = static_cast<std::size_t>(si);
    const Trajectory traj = simulate(TrajectorySpec{seeds[idx], ns.back(), dist, obs, mode});
    const std::span<const double> full(traj.prefix);
    for (std::size_t ai = 0; ai < alphas.size(); ++ai)
      for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        const std::int64_t n = ns[ni];
        const std::int64_t b = windows[ai][ni];
        const double inc = window_max(full.first(static_cast<std::size_t>(n) + 1), b);
        rows_by_seed[idx].push_back(ErPoint{alphas[ai], i_alpha[ai], n, b, seeds[idx], mode, inc,
                                            inc / static_cast<double>(b),
                                            i_alpha[ai] * inc / std::log(static_cast<double>(n))});
      }
  });

  ErExperiment out;
  for (const auto& r : rows_by_seed) out.rows.insert(out.rows.end(), r.begin(), r.end());
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const ErPoint& x, const ErPoint& y) {
    if (x.alpha != y.alpha) return x.alpha < y.alpha;
    if (x.n != y.n) return x.n < y.n;
    return x.seed < y.seed;
  });

  for (std::size_t i = 0; i < out.rows.size();) {
    std::size_t j = i;
    ErSummary s{out.rows[i].alpha, out.rows[i].n, 0.0, kInf, -kInf, 0.0, 0.0};
    while (j < out.rows.size() && out.rows[j].alpha == s.alpha && out.rows[j].n == s.n) {
      const double st = out.rows[j].statistic;
      const double dev = std::abs(st - s.alpha);
      s.mean += st;
      s.min = std::min(s.min, st);
      s.max = std::max(s.max, st);
      s.mean_abs_dev += dev;
      s.max_abs_dev = std::max(s.max_abs_dev, dev);
      ++j;
    }
    const auto count = static_cast<double>(j - i);
    s.mean /= count;
    s.mean_abs_dev /= count;
    out.summary.push_back(s);
    i = j;
  }
  return out;
}

}  // namespace ncer
