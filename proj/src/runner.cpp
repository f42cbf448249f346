#include "kmc/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <string>
#include <vector>

#include "kmc/errors.hpp"
#include "kmc/estimator.hpp"
#include "kmc/oracle.hpp"

namespace kmc {

namespace {

using nlohmann::json;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// Shortest round-trip decimal form; identical doubles give identical bytes.
std::string fmt(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  check(res.ec == std::errc{}, "number formatting failed");
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  return out;
}

std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / (cfg.prefix + name);
}

void write_estimator_csv(const std::filesystem::path& p, const EstimatorResult& est,
                         double eps) {
  std::ofstream out = open_out(p);
  out << "time,mean_diff,derivative,variance,ci_halfwidth,n_samples\n";
  for (std::size_t i = 0; i < est.times.size(); ++i) {
    const double deriv = eps != 0.0 ? est.derivative(i, eps) : 0.0;
    out << fmt(est.times[i]) << ',' << fmt(est.mean_diff(i)) << ',' << fmt(deriv) << ','
        << fmt(est.variance(i)) << ',' << fmt(est.ci_halfwidth(i)) << ','
        << est.diff[i].n << '\n';
  }
  if (!out) throw ConfigError("write failed for '" + p.string() + "'");
}

json manifest_base(const char* command, const ExperimentConfig& cfg,
                   const std::string& echo) {
  json m;
  m["command"] = command;
  m["config"] = echo;
  m["master_seed"] = cfg.seed;
  m["samples"] = cfg.samples;
  m["workers"] = cfg.resolved_workers();
  m["lattice"] = {{"rows", cfg.rows}, {"cols", cfg.cols}};
  m["epsilon"] = cfg.epsilon;
  m["perturbed_param"] = param_name(cfg.perturb_param);
  return m;
}

void write_manifest(const ExperimentConfig& cfg, const json& m) {
  const auto p = out_path(cfg, "manifest.json");
  std::ofstream out = open_out(p);
  out << m.dump(2) << '\n';
  if (!out) throw ConfigError("write failed for '" + p.string() + "'");
}

void require_runnable(const ExperimentConfig& cfg) {
  if (cfg.samples == 0) throw ConfigError("[run] samples must be >= 1");
  if (!cfg.grid_set) throw ConfigError("[run] t (time grid) is required");
}

void validate_q(const ExperimentConfig& cfg, int q) {
  const int n = cfg.lattice().size();
  if (q > 0 && n % q != 0)
    throw ConfigError("q=" + std::to_string(q) + " does not divide N=" + std::to_string(n));
}

EstimatorResult run_scheme(const ExperimentConfig& cfg, const CouplingScheme& scheme) {
  if (scheme.kind == SchemeKind::coarse) validate_q(cfg, scheme.q);
  return estimate_fd(cfg.nominal_model(), cfg.perturbed_model(), scheme, cfg.observable,
                     cfg.partition, cfg.initial_configuration(), cfg.grid, cfg.seed, 0,
                     cfg.samples, cfg.resolved_workers(), cfg.shard, cfg.rebuild);
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg, const std::string& config_echo) {
  require_runnable(cfg);
  json m = manifest_base("run", cfg, config_echo);
  m["outputs"] = json::array();
  for (const CouplingScheme& scheme : cfg.schemes()) {
    const auto t0 = clock_type::now();
    const EstimatorResult est = run_scheme(cfg, scheme);
    const double secs = seconds_since(t0);
    const auto file = out_path(cfg, scheme.label() + ".csv");
    write_estimator_csv(file, est, cfg.epsilon);
    m["outputs"].push_back({{"scheme", scheme.label()},
                            {"file", file.string()},
                            {"events", est.events},
                            {"wall_seconds", secs}});
    std::printf("run %-12s n=%llu events=%llu wall=%.2fs -> %s\n", scheme.label().c_str(),
                static_cast<unsigned long long>(est.end_path - est.first_path),
                static_cast<unsigned long long>(est.events), secs, file.string().c_str());
  }
  write_manifest(cfg, m);
  return 0;
}

int cmd_sweep_q(const ExperimentConfig& cfg, const std::string& config_echo) {
  require_runnable(cfg);
  if (cfg.q_list.empty()) throw ConfigError("sweep-q needs a [coupling] q list");
  for (int q : cfg.q_list) validate_q(cfg, q);

  const double t_hi = cfg.grid.back();
  const double t_lo = t_hi / 2.0;

  json m = manifest_base("sweep-q", cfg, config_echo);
  m["summary_window"] = {t_lo, t_hi};
  m["outputs"] = json::array();

  const auto t0 = clock_type::now();
  const EstimatorResult base =
      run_scheme(cfg, CouplingScheme{SchemeKind::uncoupled, 0});
  const double base_var = base.summary_variance(t_lo, t_hi);
  const double base_secs = seconds_since(t0);

  const auto file = out_path(cfg, "sweep_q.csv");
  std::ofstream out = open_out(file);
  out << "q,scheme,summary_variance,reduction_vs_uncoupled,n_samples,events\n";
  std::uint64_t events = base.events;
  for (int q : cfg.q_list) {
    const CouplingScheme scheme = q == 0 ? CouplingScheme{SchemeKind::uncoupled, 0}
                                         : CouplingScheme{SchemeKind::coarse, q};
    const EstimatorResult est = q == 0 ? base : run_scheme(cfg, scheme);
    if (q != 0) events += est.events;
    const double var = est.summary_variance(t_lo, t_hi);
    const double red = var > 0.0 ? base_var / var
                                 : std::numeric_limits<double>::infinity();
    out << q << ',' << scheme.label() << ',' << fmt(var) << ',' << fmt(red) << ','
        << (est.end_path - est.first_path) << ',' << est.events << '\n';
    std::printf("sweep q=%-4d %-12s var=%.6g reduction=%.3g\n", q, scheme.label().c_str(),
                var, red);
  }
  if (!out) throw ConfigError("write failed for '" + file.string() + "'");
  m["outputs"].push_back({{"file", file.string()},
                          {"events", events},
                          {"wall_seconds", seconds_since(t0)},
                          {"baseline_wall_seconds", base_secs}});
  write_manifest(cfg, m);
  return 0;
}

int cmd_bench(const ExperimentConfig& cfg, const std::string& config_echo) {
  require_runnable(cfg);
  json m = manifest_base("bench", cfg, config_echo);
  m["repeats"] = cfg.repeats;

  // Median wall clock of `repeats` runs; repeat r uses master seed seed+r so
  // repeats are independent workloads of the same size.
  auto median_time = [&](const CouplingScheme& scheme) {
    std::vector<double> secs;
    for (int r = 0; r < cfg.repeats; ++r) {
      ExperimentConfig c = cfg;
      c.seed = cfg.seed + static_cast<std::uint64_t>(r);
      const auto t0 = clock_type::now();
      (void)run_scheme(c, scheme);
      secs.push_back(seconds_since(t0));
    }
    std::sort(secs.begin(), secs.end());
    return secs[secs.size() / 2];
  };

  const double base = median_time(CouplingScheme{SchemeKind::uncoupled, 0});
  const auto file = out_path(cfg, "bench.csv");
  std::ofstream out = open_out(file);
  out << "scheme,q,median_seconds,ratio_vs_uncoupled,repeats,n_samples\n";
  out << "uncoupled,0," << fmt(base) << ",1," << cfg.repeats << ',' << cfg.samples << '\n';
  std::printf("bench %-12s median=%.3fs ratio=1\n", "uncoupled", base);
  for (const CouplingScheme& scheme : cfg.schemes()) {
    if (scheme.kind == SchemeKind::uncoupled) continue;
    const double secs = median_time(scheme);
    const double ratio = base > 0.0 ? secs / base : 0.0;
    out << scheme.label() << ',' << (scheme.kind == SchemeKind::coarse ? scheme.q : 0) << ','
        << fmt(secs) << ',' << fmt(ratio) << ',' << cfg.repeats << ',' << cfg.samples << '\n';
    std::printf("bench %-12s median=%.3fs ratio=%.2f\n", scheme.label().c_str(), secs, ratio);
  }
  if (!out) throw ConfigError("write failed for '" + file.string() + "'");
  m["outputs"] = {{{"file", file.string()}}};
  write_manifest(cfg, m);
  return 0;
}

int cmd_oracle_check(const ExperimentConfig& cfg, const std::string& config_echo) {
  require_runnable(cfg);
  const Model nominal = cfg.nominal_model();
  const Model perturbed = cfg.perturbed_model();
  const StateSpace space(nominal.lattice(), nominal.species());
  const Configuration initial = cfg.initial_configuration();
  const std::size_t s0 = space.index(initial);

  const Eigen::SparseMatrix<double> q_nom = build_generator(nominal, space);
  const Eigen::SparseMatrix<double> q_pert = build_generator(perturbed, space);
  const Eigen::VectorXd f = observable_vector(cfg.observable, space);

  bool all_pass = true;
  json m = manifest_base("oracle-check", cfg, config_echo);
  m["states"] = space.size();
  m["outputs"] = json::array();
  const auto t_start = clock_type::now();

  // Expectation curve: MC ensemble mean vs u(t) = E[f | initial], pass when
  // |z| <= 4 standard errors (plus an absolute floor for exact-zero cases).
  {
    std::vector<Accumulator> acc(cfg.grid.size());
    std::uint64_t events = 0;
    for (std::uint64_t p = 0; p < cfg.samples; ++p) {
      RngStream rng(derive_seed(cfg.seed, p, 0));
      const PathResult r = simulate_path(nominal, initial, cfg.observable, cfg.grid, rng,
                                         cfg.rebuild);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i].add(r.f[i]);
      events += r.events;
    }
    const auto file = out_path(cfg, "oracle_u.csv");
    std::ofstream out = open_out(file);
    out << "time,exact,estimate,sem,z,pass\n";
    bool pass = true;
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      const double exact = solve_expectation(q_nom, f, cfg.grid.times[i])(
          static_cast<Eigen::Index>(s0));
      const double err = acc[i].mean - exact;
      const double sem = acc[i].sem();
      const double z = sem > 0.0 ? err / sem : (std::abs(err) <= 1e-12 ? 0.0 : 1e99);
      const bool ok = std::abs(z) <= 4.0 || std::abs(err) <= 1e-12;
      pass = pass && ok;
      out << fmt(cfg.grid.times[i]) << ',' << fmt(exact) << ',' << fmt(acc[i].mean) << ','
          << fmt(sem) << ',' << fmt(z) << ',' << (ok ? 1 : 0) << '\n';
    }
    if (!out) throw ConfigError("write failed for '" + file.string() + "'");
    all_pass = all_pass && pass;
    m["outputs"].push_back({{"file", file.string()}, {"events", events}, {"pass", pass}});
    std::printf("[%s] expectation curve vs exact (4 sigma)\n", pass ? "PASS" : "FAIL");
  }

  // Finite-difference curves per scheme vs the exact difference of the two
  // expectation curves; pass when |error| <= 1.6x the 99% CI halfwidth.
  {
    const std::vector<double> exact =
        exact_fd(perturbed, nominal, space, cfg.observable, initial, cfg.grid.times);
    const auto file = out_path(cfg, "oracle_fd.csv");
    std::ofstream out = open_out(file);
    out << "scheme,time,exact,estimate,ci_halfwidth,pass\n";
    bool pass = true;
    for (const CouplingScheme& scheme : cfg.schemes()) {
      const EstimatorResult est = run_scheme(cfg, scheme);
      for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        const double err = std::abs(est.mean_diff(i) - exact[i]);
        const bool ok = err <= 1.6 * est.ci_halfwidth(i) + 1e-12;
        pass = pass && ok;
        out << scheme.label() << ',' << fmt(cfg.grid.times[i]) << ',' << fmt(exact[i]) << ','
            << fmt(est.mean_diff(i)) << ',' << fmt(est.ci_halfwidth(i)) << ','
            << (ok ? 1 : 0) << '\n';
      }
    }
    if (!out) throw ConfigError("write failed for '" + file.string() + "'");
    all_pass = all_pass && pass;
    m["outputs"].push_back({{"file", file.string()}, {"pass", pass}});
    std::printf("[%s] finite-difference curves vs exact (1.6x CI)\n", pass ? "PASS" : "FAIL");
  }

  // Marginal preservation: total-variation distance of each side's empirical
  // law at the last grid time against its exact marginal.
  {
    const double t_end = cfg.grid.back();
    const Eigen::VectorXd ps = exact_marginal(q_nom, s0, t_end);
    const Eigen::VectorXd pe = exact_marginal(q_pert, s0, t_end);
    const double tol =
        1.5 * std::sqrt(static_cast<double>(space.size()) / cfg.samples) + 0.005;
    const auto file = out_path(cfg, "oracle_tv.csv");
    std::ofstream out = open_out(file);
    out << "scheme,side,time,tv,tolerance,pass\n";
    bool pass = true;
    for (const CouplingScheme& scheme : cfg.schemes()) {
      std::vector<double> cs(space.size(), 0.0), ce(space.size(), 0.0);
      for (std::uint64_t p = 0; p < cfg.samples; ++p) {
        const PairResult r =
            simulate_pair(scheme, nominal, perturbed, initial, initial, cfg.observable,
                          cfg.partition, cfg.grid, cfg.seed, p, cfg.rebuild);
        cs[space.index(r.sigma_final)] += 1.0;
        ce[space.index(r.eta_final)] += 1.0;
      }
      double tvs = 0.0, tve = 0.0;
      for (std::size_t s = 0; s < space.size(); ++s) {
        tvs += std::abs(cs[s] / cfg.samples - ps(static_cast<Eigen::Index>(s)));
        tve += std::abs(ce[s] / cfg.samples - pe(static_cast<Eigen::Index>(s)));
      }
      tvs *= 0.5;
      tve *= 0.5;
      const bool oks = tvs <= tol, oke = tve <= tol;
      pass = pass && oks && oke;
      out << scheme.label() << ",nominal," << fmt(t_end) << ',' << fmt(tvs) << ','
          << fmt(tol) << ',' << (oks ? 1 : 0) << '\n';
      out << scheme.label() << ",perturbed," << fmt(t_end) << ',' << fmt(tve) << ','
          << fmt(tol) << ',' << (oke ? 1 : 0) << '\n';
    }
    if (!out) throw ConfigError("write failed for '" + file.string() + "'");
    all_pass = all_pass && pass;
    m["outputs"].push_back({{"file", file.string()}, {"pass", pass}});
    std::printf("[%s] coupled marginals vs exact (TV)\n", pass ? "PASS" : "FAIL");
  }

  // Zero-perturbation sanity: with identical parameters on both sides the
  // class-gated micro coupling keeps the pair glued, so the estimator mean
  // is exactly zero at every grid time.
  {
    ExperimentConfig zero = cfg;
    zero.samples = std::min<std::uint64_t>(cfg.samples, 200);
    const EstimatorResult est = estimate_fd(
        nominal, nominal, CouplingScheme{SchemeKind::micro_opt, 0}, cfg.observable,
        cfg.partition, initial, cfg.grid, cfg.seed, 0, zero.samples,
        cfg.resolved_workers(), cfg.shard, cfg.rebuild);
    double worst = 0.0;
    for (std::size_t i = 0; i < est.times.size(); ++i)
      worst = std::max(worst, std::abs(est.mean_diff(i)));
    const bool pass = worst == 0.0;
    const auto file = out_path(cfg, "oracle_sanity.csv");
    std::ofstream out = open_out(file);
    out << "check,value,pass\n";
    out << "zero_perturbation_micro_opt," << fmt(worst) << ',' << (pass ? 1 : 0) << '\n';
    if (!out) throw ConfigError("write failed for '" + file.string() + "'");
    all_pass = all_pass && pass;
    m["outputs"].push_back({{"file", file.string()}, {"pass", pass}});
    std::printf("[%s] zero-perturbation estimator is exactly zero\n", pass ? "PASS" : "FAIL");
  }

  m["wall_seconds"] = seconds_since(t_start);
  m["all_pass"] = all_pass;
  write_manifest(cfg, m);
  std::printf("oracle-check: %s\n", all_pass ? "all checks passed" : "CHECK FAILURES");
  return all_pass ? 0 : 3;
}

}  // namespace kmc
