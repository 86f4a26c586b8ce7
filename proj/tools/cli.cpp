#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncer/erlaw.hpp"
#include "ncer/errors.hpp"
#include "ncer/lattice.hpp"
#include "ncer/model_spec.hpp"
#include "ncer/rates.hpp"
#include "ncer/simulate.hpp"

namespace ncer::cli {

namespace {

using nlohmann::json;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct ModelOptions {
  std::string preset = "rademacher-product";
  std::string spec_path;
  int ell = 2;
  CLI::Option* ell_opt = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--preset", preset, "Built-in model")
        ->check(CLI::IsMember(preset_names()));
    sub->add_option("--spec", spec_path, "JSON model file (overrides --preset)");
    ell_opt = sub->add_option("--ell", ell, "Number of dilations ell")->check(CLI::PositiveNumber);
  }

  ModelSpec resolve() const {
    if (!spec_path.empty())
      return load_model_spec(spec_path, ell_opt->count() > 0 ? std::optional<int>(ell) : std::nullopt);
    return ncer::preset(preset, ell);
  }
};

struct Grid {
  std::vector<double> points;
  double from = 0.0, to = 0.0, step = 0.0;
  CLI::Option* from_opt = nullptr;

  void attach(CLI::App* sub, const std::string& name, const std::string& what) {
    sub->add_option("--" + name, points, "Single " + what + " value(s)");
    from_opt = sub->add_option("--from", from, "Grid start");
    sub->add_option("--to", to, "Grid end (inclusive)");
    sub->add_option("--step", step, "Grid step");
  }

  std::vector<double> resolve() const {
    if (!points.empty()) return points;
    if (from_opt->count() == 0) throw InputError("give a value or --from/--to/--step");
    if (!std::isfinite(from) || !std::isfinite(to) || !(step > 0.0) || to < from)
      throw InputError("grid bounds must be finite with step > 0 and to >= from");
    const auto count = static_cast<std::int64_t>(std::floor((to - from) / step + 1e-9)) + 1;
    if (count > 10'000'000) throw CapacityError("grid has more than 1e7 points");
    std::vector<double> xs;
    for (std::int64_t i = 0; i < count; ++i) xs.push_back(from + static_cast<double>(i) * step);
    return xs;
  }
};

std::int64_t as_count(double x, const char* what) {
  if (!(x >= 1.0) || x != std::floor(x) || x > 9e15)
    throw InputError(std::string(what) + " must be a positive integer");
  return static_cast<std::int64_t>(x);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

struct Common {
  std::string format = "csv";
  std::string output;
  int threads = 1;
  bool no_timestamp = false;
};

void emit_json(std::ostream& os, json doc, const Common& common) {
  if (!common.no_timestamp) doc["generated_at"] = timestamp();
  os << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- structure

void cmd_structure(std::ostream& os, const Common& common, int ell, std::int64_t n, bool list) {
  if (n < 1) throw InputError("N must be at least 1");
  if (n > 10'000'000) throw CapacityError("structure supports N <= 1e7");
  const PrimeBasis basis = primes_up_to(ell);
  const auto a_set = coprime_set(basis, n);
  const bool ok = partition_check(basis, n);
  const auto hist = fiber_size_histogram(basis, n);

  // h_l for every l realised by a fiber at this N, plus h_{l+1} for rho_max.
  const std::size_t lmax = hist.rbegin()->first;
  std::vector<u128> h{1};
  std::vector<double> w{1.0};
  if (basis.m() > 0) {
    const SmoothSequence seq = smooth_numbers(basis, lmax);
    h = seq.h;
    w.clear();
    for (std::size_t l = 1; l <= lmax; ++l) w.push_back(seq.weight(l));
  }
  auto rho = [&](std::size_t i) {
    return i < h.size() ? static_cast<double>(std::log(static_cast<long double>(h[i]))) : kInf;
  };
  std::string primes;
  for (std::size_t i = 0; i < basis.primes.size(); ++i)
    primes += (i ? " " : "") + std::to_string(basis.primes[i]);

  if (common.format == "json") {
    json doc{{"N", n}, {"ell", ell}, {"primes", basis.primes}, {"r", basis.r_const},
             {"A_size", a_set.size()}, {"partition_ok", ok}};
    json fh = json::array();
    for (const auto& [size, count] : hist) fh.push_back({{"fiber_size", size}, {"count", count}});
    doc["fiber_histogram"] = fh;
    json hs = json::array();
    for (std::size_t l = 1; l <= lmax; ++l)
      hs.push_back({{"l", l}, {"h", to_string(h[l - 1])}, {"rho_min", rho(l - 1)},
                    {"rho_max", jnum(rho(l))}, {"weight", w[l - 1]}});
    doc["smooth"] = hs;
    if (list) {
      json fibers = json::array();
      for (std::int64_t a : a_set) fibers.push_back({{"a", a}, {"fiber", b_set(basis, a, n)}});
      doc["fibers"] = fibers;
    }
    emit_json(os, doc, common);
    return;
  }
  os << "N,ell,primes,r,A_size,partition_ok\n"
     << n << ',' << ell << ',' << primes << ',' << num(basis.r_const) << ',' << a_set.size() << ','
     << (ok ? "true" : "false") << "\n\n";
  os << "fiber_size,count\n";
  for (const auto& [size, count] : hist) os << size << ',' << count << '\n';
  os << "\nl,h,rho_min,rho_max,weight\n";
  for (std::size_t l = 1; l <= lmax; ++l)
    os << l << ',' << to_string(h[l - 1]) << ',' << num(rho(l - 1)) << ',' << num(rho(l)) << ','
       << num(w[l - 1]) << '\n';
  if (list) {
    os << "\na,fiber_size,fiber\n";
    for (std::int64_t a : a_set) {
      const auto fiber = b_set(basis, a, n);
      os << a << ',' << fiber.size() << ',';
      for (std::size_t i = 0; i < fiber.size(); ++i) os << (i ? " " : "") << fiber[i];
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------- curves

struct CurveRow {
  double x;
  double value;
  double tol;
};

void emit_curve(std::ostream& os, const Common& common, const std::vector<CurveRow>& rows,
                json header, std::optional<int> truncation) {
  if (common.format == "json") {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"x", r.x}, {"value", jnum(r.value)}, {"is_infinite", std::isinf(r.value)}, {"tol", r.tol}});
    header["rows"] = arr;
    emit_json(os, header, common);
    return;
  }
  os << "x,value,is_infinite,tol" << (truncation ? ",L" : "") << '\n';
  for (const auto& r : rows) {
    os << num(r.x) << ',' << num(r.value) << ',' << (std::isinf(r.value) ? 1 : 0) << ',' << num(r.tol);
    if (truncation) os << ',' << *truncation;
    os << '\n';
  }
}

json curve_header(const ModelSpec& model) {
  return json{{"ell", model.obs.ell()}, {"observable", model.id}};
}

void cmd_rate_i(std::ostream& os, const Common& common, const ModelSpec& model, const std::vector<double>& xs) {
  const CramerRate rate(model.dist, model.obs);
  std::vector<CurveRow> rows;
  for (double a : xs) rows.push_back({a, rate(a), 1e-9});
  json header = curve_header(model);
  header["tol"] = 1e-9;
  header["t_cap"] = rate.t_cap();
  emit_curve(os, common, rows, header, std::nullopt);
}

void cmd_pressure(std::ostream& os, const Common& common, const ModelSpec& model,
                  const std::vector<double>& xs, double tol, std::size_t budget) {
  double reach = 0.0;
  for (double x : xs) reach = std::max(reach, std::abs(x));
  const Pressure q(model.dist, model.obs, primes_up_to(model.obs.ell()), tol, reach, budget);
  std::vector<CurveRow> rows;
  for (double x : xs) rows.push_back({x, q(x), tol});
  json header = curve_header(model);
  header["tol"] = tol;
  header["L_truncation"] = q.truncation();
  header["lambda_cap"] = q.lambda_max();
  emit_curve(os, common, rows, header, q.truncation());
}

void cmd_rate_j(std::ostream& os, const Common& common, const ModelSpec& model,
                const std::vector<double>& xs, double tol, std::size_t budget) {
  const RateJ j = make_rate_j(model.dist, model.obs, primes_up_to(model.obs.ell()), tol, budget);
  std::vector<CurveRow> rows(xs.size());
  parallel_for(static_cast<std::int64_t>(xs.size()), common.threads, [&](std::int64_t i) {
    const auto k = static_cast<std::size_t>(i);
    rows[k] = {xs[k], j(xs[k]), tol};
  });
  json header = curve_header(model);
  header["tol"] = tol;
  header["L_truncation"] = j.pressure().truncation();
  header["lambda_cap"] = j.lambda_cap();
  header["upper_endpoint"] = j.upper_endpoint();
  header["lower_endpoint"] = j.lower_endpoint();
  emit_curve(os, common, rows, header, std::nullopt);
}

// ---------------------------------------------------------------- experiments

void cmd_erlaw(std::ostream& os, const Common& common, const ModelSpec& model, const std::vector<double>& alphas,
               const std::vector<double>& n_values, int seed_count, std::uint64_t seed_start, SumMode mode) {
  if (seed_count < 1) throw InputError("--seeds must be at least 1");
  std::vector<std::int64_t> ns;
  for (double x : n_values) ns.push_back(as_count(x, "n"));
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < seed_count; ++i) seeds.push_back(seed_start + static_cast<std::uint64_t>(i));
  const ErExperiment ex = experiment(model.dist, model.obs, alphas, ns, seeds, mode, common.threads);

  if (common.format == "json") {
    json rows = json::array();
    for (const auto& r : ex.rows)
      rows.push_back({{"ell", model.obs.ell()}, {"observable_id", model.id}, {"alpha", r.alpha},
                      {"I_alpha", r.i_alpha}, {"n", r.n}, {"b_n", r.b_n}, {"seed", r.seed},
                      {"mode", to_string(r.mode)}, {"max_increment", r.max_increment},
                      {"statistic", r.statistic}, {"normalized", r.normalized}});
    json summary = json::array();
    for (const auto& s : ex.summary)
      summary.push_back({{"alpha", s.alpha}, {"n", s.n}, {"mean", s.mean}, {"min", s.min}, {"max", s.max},
                         {"mean_abs_dev", s.mean_abs_dev}, {"max_abs_dev", s.max_abs_dev}});
    emit_json(os, json{{"rows", rows}, {"summary", summary}}, common);
    return;
  }
  os << "ell,observable_id,alpha,I_alpha,n,b_n,seed,mode,max_increment,statistic,normalized\n";
  for (const auto& r : ex.rows)
    os << model.obs.ell() << ',' << model.id << ',' << num(r.alpha) << ',' << num(r.i_alpha) << ',' << r.n << ','
       << r.b_n << ',' << r.seed << ',' << to_string(r.mode) << ',' << num(r.max_increment) << ','
       << num(r.statistic) << ',' << num(r.normalized) << '\n';
  os << "\nalpha,n,mean,min,max,mean_abs_dev,max_abs_dev\n";
  for (const auto& s : ex.summary)
    os << num(s.alpha) << ',' << s.n << ',' << num(s.mean) << ',' << num(s.min) << ',' << num(s.max) << ','
       << num(s.mean_abs_dev) << ',' << num(s.max_abs_dev) << '\n';
}

void cmd_ldp(std::ostream& os, const Common& common, const ModelSpec& model, std::int64_t n, double u,
             std::int64_t replicas, std::uint64_t seed, SumMode mode, double tol, std::size_t budget) {
  const LdpEstimate est = ldp_estimate(model.dist, model.obs, n, u, replicas, seed, mode, common.threads);
  const double theory_i = cramer_rate(model.dist, model.obs, u);
  double theory_j = std::nan("");
  if (mode == SumMode::iid) {
    theory_j = theory_i;
  } else {
    try {
      theory_j = make_rate_j(model.dist, model.obs, primes_up_to(model.obs.ell()), tol, budget)(u);
    } catch (const ToleranceError&) {
      // J not certifiable within the budget; reported as nan.
    }
  }
  if (common.format == "json") {
    emit_json(os,
              json{{"N", n}, {"u", u}, {"replicas", replicas}, {"hits", est.hits}, {"p_hat", est.p_hat},
                   {"rate_hat", jnum(est.rate_hat)}, {"ci_low", jnum(est.ci_low)}, {"ci_high", jnum(est.ci_high)},
                   {"zero_count", est.zero_count}, {"theory_J", jnum(theory_j)}, {"theory_I", jnum(theory_i)},
                   {"ell", model.obs.ell()}, {"observable", model.id}, {"mode", to_string(mode)}, {"seed", seed}},
              common);
    return;
  }
  os << "N,u,replicas,p_hat,rate_hat,ci_low,ci_high,theory_J,theory_I\n"
     << n << ',' << num(u) << ',' << replicas << ',' << num(est.p_hat) << ',' << num(est.rate_hat) << ','
     << num(est.ci_low) << ',' << num(est.ci_high) << ',' << num(theory_j) << ',' << num(theory_i) << '\n';
}

void cmd_simulate(std::ostream& os, const Common& common, const ModelSpec& model, std::int64_t n,
                  std::uint64_t seed, std::int64_t stride, SumMode mode) {
  if (stride < 1) throw InputError("--stride must be at least 1");
  const Trajectory traj = simulate(TrajectorySpec{seed, n, model.dist, model.obs, mode});
  std::vector<std::int64_t> ks;
  for (std::int64_t k = 0; k <= n; k += stride) ks.push_back(k);
  if (ks.back() != n) ks.push_back(n);
  if (common.format == "json") {
    json rows = json::array();
    for (std::int64_t k : ks) rows.push_back({{"k", k}, {"S_k", traj.prefix[static_cast<std::size_t>(k)]}});
    emit_json(os, json{{"n", n}, {"seed", seed}, {"mode", to_string(mode)}, {"ell", model.obs.ell()},
                       {"observable", model.id}, {"rows", rows}},
              common);
    return;
  }
  os << "k,S_k\n";
  for (std::int64_t k : ks) os << k << ',' << num(traj.prefix[static_cast<std::size_t>(k)]) << '\n';
}

void report(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonconventional sums: rate functions, pressure, Erdos-Renyi experiments"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");

  Common common;
  app.add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--output,-o", common.output, "Write results to this path instead of stdout");
  app.add_option("--threads", common.threads, "Worker threads (results do not depend on it)")
      ->envname("NCER_THREADS")
      ->check(CLI::PositiveNumber);
  app.add_flag("--no-timestamp", common.no_timestamp, "Omit generated_at from JSON output");

  // structure
  auto* structure = app.add_subcommand("structure", "Coprime skeleton, fibers and smooth-number weights");
  int s_ell = 2;
  double s_n = 10;
  bool s_list = false;
  structure->add_option("--ell", s_ell, "Number of dilations ell")->check(CLI::PositiveNumber);
  structure->add_option("--n,--N", s_n, "Upper index N")->required();
  structure->add_flag("--list", s_list, "List every fiber (default when N <= 1000)");

  std::size_t budget = kDefaultBudget;

  auto* rate_i = app.add_subcommand("rate-i", "Cramer rate function I");
  ModelOptions m_i;
  Grid g_i;
  m_i.attach(rate_i);
  g_i.attach(rate_i, "alpha", "alpha");

  auto* pressure_cmd = app.add_subcommand("pressure", "Pressure Q(lambda F) from the smooth-number series");
  ModelOptions m_q;
  Grid g_q;
  double tol_q = 1e-8;
  m_q.attach(pressure_cmd);
  g_q.attach(pressure_cmd, "lambda", "lambda");
  pressure_cmd->add_option("--tol", tol_q, "Certified truncation tolerance")->check(CLI::PositiveNumber);
  pressure_cmd->add_option("--budget", budget, "Exact enumeration budget (table lookups)");

  auto* rate_j_cmd = app.add_subcommand("rate-j", "Rate function J, the Legendre transform of Q");
  ModelOptions m_j;
  Grid g_j;
  double tol_j = 1e-10;
  m_j.attach(rate_j_cmd);
  g_j.attach(rate_j_cmd, "u", "u");
  rate_j_cmd->add_option("--tol", tol_j, "Pressure truncation tolerance")->check(CLI::PositiveNumber);
  rate_j_cmd->add_option("--budget", budget, "Exact enumeration budget (table lookups)");

  auto* erlaw = app.add_subcommand("erlaw", "Erdos-Renyi window statistics");
  ModelOptions m_e;
  std::vector<double> e_alpha;
  std::vector<double> e_n;
  int e_seeds = 5;
  std::uint64_t e_seed_start = 1;
  std::string e_mode = "nonconventional";
  m_e.attach(erlaw);
  erlaw->add_option("--alpha", e_alpha, "alpha value(s) in (0, M_+)")->required();
  erlaw->add_option("--n", e_n, "Trajectory length(s), e.g. 1e4 1e6")->required();
  erlaw->add_option("--seeds", e_seeds, "Number of seeds");
  erlaw->add_option("--seed-start", e_seed_start, "First seed");
  erlaw->add_option("--mode", e_mode)->check(CLI::IsMember({"nonconventional", "iid"}));

  auto* ldp = app.add_subcommand("ldp-check", "Monte Carlo tail probabilities against I and J");
  ModelOptions m_l;
  double l_n = 60;
  double l_u = 0.3;
  double l_replicas = 100000;
  std::uint64_t l_seed = 1;
  std::string l_mode;
  double tol_l = 1e-10;
  m_l.attach(ldp);
  ldp->add_option("--N", l_n, "Sum length N");
  ldp->add_option("--u", l_u, "Threshold u > 0");
  ldp->add_option("--replicas", l_replicas, "Monte Carlo replicas (>= 1000)");
  ldp->add_option("--seed", l_seed, "Root seed");
  ldp->add_option("--mode", l_mode, "nonconventional (default) or iid")
      ->check(CLI::IsMember({"nonconventional", "iid"}));
  ldp->add_option("--tol", tol_l, "Pressure tolerance for theory_J")->check(CLI::PositiveNumber);
  ldp->add_option("--budget", budget, "Exact enumeration budget (table lookups)");

  auto* sim = app.add_subcommand("simulate", "Dump a trajectory S_0..S_n");
  ModelOptions m_s;
  double sim_n = 100;
  std::uint64_t sim_seed = 1;
  std::int64_t sim_stride = 1;
  std::string sim_mode = "nonconventional";
  m_s.attach(sim);
  sim->add_option("--n", sim_n, "Number of summands");
  sim->add_option("--seed", sim_seed, "Seed");
  sim->add_option("--stride", sim_stride, "Emit every stride-th prefix");
  sim->add_option("--mode", sim_mode)->check(CLI::IsMember({"nonconventional", "iid"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    report(err, "input", e.what());
    return kInput;
  }

  std::ostringstream buffer;
  try {
    if (structure->parsed()) {
      const std::int64_t n = as_count(s_n, "N");
      cmd_structure(buffer, common, s_ell, n, s_list || n <= 1000);
    } else if (rate_i->parsed()) {
      cmd_rate_i(buffer, common, m_i.resolve(), g_i.resolve());
    } else if (pressure_cmd->parsed()) {
      cmd_pressure(buffer, common, m_q.resolve(), g_q.resolve(), tol_q, budget);
    } else if (rate_j_cmd->parsed()) {
      cmd_rate_j(buffer, common, m_j.resolve(), g_j.resolve(), tol_j, budget);
    } else if (erlaw->parsed()) {
      cmd_erlaw(buffer, common, m_e.resolve(), e_alpha, e_n, e_seeds, e_seed_start, parse_sum_mode(e_mode));
    } else if (ldp->parsed()) {
      cmd_ldp(buffer, common, m_l.resolve(), as_count(l_n, "N"), l_u, as_count(l_replicas, "replicas"), l_seed,
              l_mode.empty() ? SumMode::nonconventional : parse_sum_mode(l_mode), tol_l, budget);
    } else if (sim->parsed()) {
      cmd_simulate(buffer, common, m_s.resolve(), as_count(sim_n, "n"), sim_seed, sim_stride,
                   parse_sum_mode(sim_mode));
    }
  } catch (const InputError& e) {
    report(err, dynamic_cast<const DegenerateError*>(&e) ? "degenerate" : "input", e.what());
    return kInput;
  } catch (const CapacityError& e) {
    report(err, "capacity", e.what());
    return kCapacity;
  } catch (const ToleranceError& e) {
    report(err, "tolerance", e.what());
    return kTolerance;
  }

  if (common.output.empty()) {
    out << buffer.str();
  } else {
    std::ofstream file(common.output, std::ios::binary);
    if (!file) {
      report(err, "input", "cannot write " + common.output);
      return kInput;
    }
    file << buffer.str();
  }
  return kOk;
}

}  // namespace ncer::cli
