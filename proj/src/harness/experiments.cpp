#include "memsde/harness/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "memsde/ergodics.hpp"
#include "memsde/harness/io.hpp"
#include "memsde/lyapunov.hpp"
#include "memsde/solver.hpp"
#include "memsde/spde.hpp"

namespace fs = std::filesystem;

namespace memsde::harness {

namespace {

constexpr const char* kCodeVersion = "memsde 0.1.0";

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

HistoryPath constant_past(double value, double window, double dt, int dim = 1) {
  HistoryPath h;
  h.dim = dim;
  h.dt = dt;
  const std::size_t n = static_cast<std::size_t>(std::llround(window / dt)) + 1;
  h.samples.assign(n * static_cast<std::size_t>(dim), value);
  return h;
}

SolverConfig solver_config(const Config& cfg) {
  SolverConfig sc;
  sc.dt = cfg.get_double("solver", "dt", 1e-3);
  sc.horizon = cfg.get_double("solver", "horizon", 10.0);
  sc.blowup_radius = cfg.get_double("solver", "blowup_radius", 1e6);
  sc.picard_tol = cfg.get_double("solver", "picard_tol", 1e-10);
  sc.picard_max_iter = static_cast<int>(cfg.get_int("solver", "picard_max_iter", 60));
  return sc;
}

// Common schema fragments.
const std::vector<std::string> kDriftKeys = {
    "drift.kind",        "drift.kernel_tail_tol", "drift.finiteness_cap",
    "drift.rate",        "drift.value",           "drift.nu",
    "drift.n0",          "drift.sigma",           "drift.cutoff",
    "drift.lookback_steps"};
const std::vector<std::string> kSolverKeys = {"solver.dt", "solver.horizon",
                                              "solver.blowup_radius", "solver.picard_tol",
                                              "solver.picard_max_iter"};
const std::vector<std::string> kInitKeys = {"init.past_value", "init.past_window"};

std::vector<std::string> concat_keys(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> all = {"experiment", "sweep.key", "sweep.values"};
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return all;
}

struct RunContext {
  fs::path dir;
  RunManifest* manifest;
  bool csv_mirror;

  std::string emit_path(const std::string& name) const { return (dir / name).string(); }
  void record(const std::string& name) const {
    manifest->outputs.push_back({name, file_digest((dir / name).string())});
  }
  void task(const std::string& name, bool ok, const std::string& detail) const {
    manifest->tasks.push_back({name, ok, detail});
  }
};

// ---------------------------------------------------------------------------
// drift factory
// ---------------------------------------------------------------------------

spde::GlForcing forcing_through(int n0, int n_coeffs, double sigma) {
  spde::GlForcing f;
  f.sigma.assign(static_cast<std::size_t>(n_coeffs), 0.0);
  for (int j = 0; j < n_coeffs; ++j)
    if ((j + 1) / 2 < n0) f.sigma[static_cast<std::size_t>(j)] = sigma;
  return f;
}

}  // namespace

std::unique_ptr<MemoryDrift> make_drift(const Config& cfg) {
  const std::string kind = cfg.get_string("drift", "kind");
  if (kind == "gaussian_kernel")
    return std::make_unique<GaussianKernelDrift>(
        cfg.get_double("drift", "kernel_tail_tol", 1e-12));
  if (kind == "pathdep_kernel")
    return std::make_unique<PathDependentKernelDrift>(
        cfg.get_double("drift", "finiteness_cap", 1e12),
        cfg.get_double("drift", "kernel_tail_tol", 1e-12));
  if (kind == "markov_linear") {
    const double rate = cfg.get_double("drift", "rate", -1.0);
    return std::make_unique<MarkovDrift>(MarkovDrift::scalar([rate](double x) { return rate * x; }));
  }
  if (kind == "markov_const") {
    const double value = cfg.get_double("drift", "value", 0.0);
    return std::make_unique<MarkovDrift>(MarkovDrift::scalar([value](double) { return value; }));
  }
  if (kind == "zero") return std::make_unique<ZeroDrift>(1);
  if (kind == "reduced_pde") {
    auto sys = std::make_shared<spde::Gl>(static_cast<int>(cfg.get_int("drift", "cutoff", 32)),
                                          cfg.get_double("drift", "nu", 1.0));
    const auto f = forcing_through(static_cast<int>(cfg.get_int("drift", "n0", 2)),
                                   sys->n_coeffs(), cfg.get_double("drift", "sigma", 0.5));
    return std::make_unique<spde::GlReducedDrift>(
        sys, f, static_cast<std::size_t>(cfg.get_int("drift", "lookback_steps", 2048)));
  }
  throw ConfigError("unknown drift.kind '" + kind + "'");
}

namespace {

// ---------------------------------------------------------------------------
// individual experiments
// ---------------------------------------------------------------------------

void run_simulate(const Config& cfg, const RunContext& ctx) {
  cfg.require_known(concat_keys({kDriftKeys, kSolverKeys, kInitKeys,
                                 {"simulate.seed", "simulate.method"}}));
  const auto drift = make_drift(cfg);
  const SolverConfig sc = solver_config(cfg);
  const HistoryPath past =
      constant_past(cfg.get_double("init", "past_value", 0.0),
                    cfg.get_double("init", "past_window", 8.0), sc.dt, drift->dim());
  const std::uint64_t seed = cfg.get_u64("simulate", "seed", 1);
  const std::string method = cfg.get_string("simulate", "method", "euler");

  FuturePath fut;
  if (method == "euler") {
    fut = solve_cauchy(*drift, past, seed, sc);
  } else if (method == "picard") {
    const std::size_t n = static_cast<std::size_t>(std::llround(sc.horizon / sc.dt));
    fut = picard_solve(*drift, past, sample_wiener(seed, 0, drift->dim(), sc.dt, n), sc);
  } else {
    throw ConfigError("simulate.method must be euler or picard");
  }

  save_trajectory(ctx.emit_path("trajectory.msde"), FullPath{past, fut}, seed);
  ctx.record("trajectory.msde");
  if (ctx.csv_mirror) {
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < fut.size(); ++k) {
      std::vector<double> row = {static_cast<double>(k) * sc.dt};
      for (int c = 0; c < fut.dim; ++c) row.push_back(fut.value(k, c));
      rows.push_back(std::move(row));
    }
    std::vector<std::string> cols = {"t"};
    for (int c = 0; c < fut.dim; ++c) cols.push_back("x" + std::to_string(c));
    save_csv(ctx.emit_path("trajectory.csv"), cols, rows);
    ctx.record("trajectory.csv");
  }
  ctx.task("simulate", true, method + " to horizon " + std::to_string(sc.horizon));
}

void run_kb(const Config& cfg, const RunContext& ctx) {
  cfg.require_known(concat_keys({kDriftKeys, kSolverKeys, kInitKeys,
                                 {"kb.seeds", "kb.burn_in", "kb.thin"}}));
  const auto drift = make_drift(cfg);
  const SolverConfig sc = solver_config(cfg);
  KbParams p;
  p.T = sc.horizon;
  p.burn_in = cfg.get_double("kb", "burn_in", 10.0);
  p.dt = sc.dt;
  p.thin = static_cast<std::size_t>(cfg.get_int("kb", "thin", 10));
  p.blowup_radius = sc.blowup_radius;
  const std::vector<std::uint64_t> seeds = cfg.get_u64_list("kb", "seeds");
  ctx.manifest->seeds = seeds;
  const HistoryPath past =
      constant_past(cfg.get_double("init", "past_value", 0.0),
                    cfg.get_double("init", "past_window", 8.0), sc.dt, drift->dim());

  const KbResult res = krylov_bogoliubov(*drift, past, seeds, p);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < res.measure.size(); ++i) {
    std::vector<double> row;
    for (int c = 0; c < res.measure.dim; ++c)
      row.push_back(res.measure.samples[i * static_cast<std::size_t>(res.measure.dim) +
                                        static_cast<std::size_t>(c)]);
    row.push_back(res.measure.weights[i]);
    rows.push_back(std::move(row));
  }
  std::vector<std::string> cols;
  for (int c = 0; c < res.measure.dim; ++c) cols.push_back("x" + std::to_string(c));
  cols.push_back("weight");
  save_csv(ctx.emit_path("occupation.csv"), cols, rows);
  ctx.record("occupation.csv");

  double mean = 0.0;
  for (std::size_t i = 0; i < res.measure.size(); ++i)
    mean += res.measure.weights[i] * res.measure.samples[i * res.measure.dim];
  double var = 0.0;
  for (std::size_t i = 0; i < res.measure.size(); ++i) {
    const double d = res.measure.samples[i * res.measure.dim] - mean;
    var += res.measure.weights[i] * d * d;
  }
  save_csv(ctx.emit_path("kb_summary.csv"),
           {"pooled_mean", "pooled_variance", "early_msd", "late_msd", "nonconvergence"},
           {{mean, var, res.early_msd, res.late_msd, res.nonconvergence_flag ? 1.0 : 0.0}});
  ctx.record("kb_summary.csv");
  ctx.task("kb", true,
           res.nonconvergence_flag ? "returned with non-convergence flag" : "stationary pool");
}

void run_couple(const Config& cfg, const RunContext& ctx) {
  cfg.require_known(concat_keys({kDriftKeys, kSolverKeys,
                                 {"couple.past1", "couple.past2", "couple.window",
                                  "couple.seed", "couple.record_every"}}));
  const auto drift = make_drift(cfg);
  const SolverConfig sc = solver_config(cfg);
  const double window = cfg.get_double("couple", "window", 8.0);
  HistoryPath x1 = constant_past(cfg.get_double("couple", "past1", 0.0), window, sc.dt);
  HistoryPath x2 = constant_past(cfg.get_double("couple", "past2", 1.0), window, sc.dt);
  x2.samples[0] = x1.samples[0];  // shared endpoint
  const auto series = coupling_experiment(
      *drift, x1, x2, cfg.get_u64("couple", "seed", 1), sc.horizon, sc,
      static_cast<std::size_t>(cfg.get_int("couple", "record_every", 10)));

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < series.times.size(); ++i)
    rows.push_back({series.times[i], series.gaps[i]});
  save_csv(ctx.emit_path("coupling.csv"), {"t", "gap"}, rows);
  ctx.record("coupling.csv");
  const double rate = series.fitted_rate.value_or(0.0);
  save_csv(ctx.emit_path("coupling_fit.csv"), {"fitted_rate", "fit_points"},
           {{rate, static_cast<double>(series.fit_points)}});
  ctx.record("coupling_fit.csv");
  ctx.task("couple", true, "fitted rate " + std::to_string(rate));
}

void run_girsanov(const Config& cfg, const RunContext& ctx) {
  cfg.require_known(concat_keys({kDriftKeys, kSolverKeys, kInitKeys,
                                 {"girsanov.mu", "girsanov.n_paths", "girsanov.seed",
                                  "girsanov.novikov_cap"}}));
  const auto a1 = make_drift(cfg);
  const double mu = cfg.get_double("girsanov", "mu", 0.5);
  const MarkovDrift a2 = MarkovDrift::scalar([mu](double) { return mu; });
  const SolverConfig sc = solver_config(cfg);
  const std::size_t n_paths = static_cast<std::size_t>(cfg.get_int("girsanov", "n_paths", 1000));
  const std::uint64_t seed = cfg.get_u64("girsanov", "seed", 1);
  const double cap = cfg.get_double("girsanov", "novikov_cap", 50.0);
  const HistoryPath past =
      constant_past(cfg.get_double("init", "past_value", 0.0),
                    cfg.get_double("init", "past_window", 8.0), sc.dt, a1->dim());
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(sc.horizon / sc.dt));

  double mean_exp = 0.0;
  std::vector<std::vector<double>> rows;
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    const WienerPath w = sample_wiener(seed, i, a1->dim(), sc.dt, n_steps);
    const FuturePath y = euler_maruyama(*a1, past, w, sc);
    const auto rep = girsanov_logdensity(*a1, a2, FullPath{past, y}, w, cap);
    mean_exp += std::exp(rep.log_density);
    truncated += rep.truncated ? 1 : 0;
    if (i < 10000) rows.push_back({static_cast<double>(i), rep.log_density, rep.novikov_stat});
  }
  mean_exp /= static_cast<double>(n_paths);
  save_csv(ctx.emit_path("girsanov.csv"), {"path", "log_density", "novikov_stat"}, rows);
  ctx.record("girsanov.csv");
  save_csv(ctx.emit_path("girsanov_summary.csv"), {"mean_exp", "n_paths", "truncated"},
           {{mean_exp, static_cast<double>(n_paths), static_cast<double>(truncated)}});
  ctx.record("girsanov_summary.csv");
  ctx.task("girsanov", true, "martingale mean " + std::to_string(mean_exp));
}

void run_tails(const Config& cfg, const RunContext& ctx) {
  cfg.require_known(concat_keys({kDriftKeys, kSolverKeys, kInitKeys,
                                 {"tails.seed", "tails.lags", "tails.z"}}));
  const auto drift = make_drift(cfg);
  const SolverConfig sc = solver_config(cfg);
  const HistoryPath past =
      constant_past(cfg.get_double("init", "past_value", 0.0),
                    cfg.get_double("init", "past_window", 8.0), sc.dt, drift->dim());
  const FuturePath x = solve_cauchy(*drift, past, cfg.get_u64("tails", "seed", 1), sc);
  const auto table = increment_tail_check(x, cfg.get_double_list("tails", "lags"),
                                          cfg.get_double_list("tails", "z"));
  std::vector<std::vector<double>> rows;
  for (const auto& r : table.rows)
    rows.push_back({r.lag, r.z, r.empirical, r.bound_shape, table.fitted_C * r.bound_shape});
  save_csv(ctx.emit_path("tails.csv"), {"lag", "z", "empirical", "shape", "bound"}, rows);
  ctx.record("tails.csv");
  save_csv(ctx.emit_path("tails_fit.csv"), {"fitted_C"}, {{table.fitted_C}});
  ctx.record("tails_fit.csv");
  ctx.task("tails", true, "fitted C " + std::to_string(table.fitted_C));
}

void run_lyapunov_audit(const Config& cfg, const RunContext& ctx) {
  cfg.require_known(concat_keys({kDriftKeys, kSolverKeys,
                                 {"audit.which", "audit.n_paths", "audit.replicas",
                                  "audit.seed", "audit.window", "audit.amplitude"}}));
  const std::string which = cfg.get_string("audit", "which", "ex61");
  const ExampleV ex = which == "ex62" ? ExampleV::ex62 : ExampleV::ex61;
  const LyapunovSpec spec = example_spec(ex);
  std::unique_ptr<MemoryDrift> drift;
  if (ex == ExampleV::ex61)
    drift = std::make_unique<GaussianKernelDrift>();
  else
    drift = std::make_unique<PathDependentKernelDrift>();

  const SolverConfig sc = solver_config(cfg);
  const std::size_t n_paths = static_cast<std::size_t>(cfg.get_int("audit", "n_paths", 100));
  const std::size_t replicas = static_cast<std::size_t>(cfg.get_int("audit", "replicas", 400));
  const std::uint64_t seed = cfg.get_u64("audit", "seed", 1);
  const double window = cfg.get_double("audit", "window", 8.0);
  const double amplitude = cfg.get_double("audit", "amplitude", 1.5);

  // Random nice paths: smooth sinusoid mixes, bounded amplitude.
  const Philox gen(seed, 0);
  std::uint64_t ctr = 0;
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * gen.uniform(ctr++, 0); };

  nlohmann::json audit;
  audit["which"] = which;
  audit["inequality"] = "h_estimate <= C1 - C2*V^gamma + 3*SE";
  std::size_t failures = 0;
  std::vector<std::vector<double>> rows;
  const std::size_t n = static_cast<std::size_t>(std::llround(window / sc.dt)) + 1;
  for (std::size_t p = 0; p < n_paths; ++p) {
    HistoryPath x;
    x.dim = 1;
    x.dt = sc.dt;
    x.samples.resize(n);
    const int modes = 3;
    double amp[3], freq[3], phase[3];
    for (int j = 0; j < modes; ++j) {
      amp[j] = uniform(-amplitude, amplitude) / modes;
      freq[j] = uniform(0.1, 2.0);
      phase[j] = uniform(0.0, 6.283185307179586);
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double t = -static_cast<double>(k) * sc.dt;
      double v = 0.0;
      for (int j = 0; j < modes; ++j) v += amp[j] * std::cos(freq[j] * t + phase[j]);
      x.samples[k] = v;
    }
    const auto est = generator_drift_estimate(*drift, spec, x, replicas, sc.dt, seed + 1 + p);
    const double v0 = spec.eval_V(x.view());
    const double bound = spec.C1 - spec.C2 * std::pow(v0, spec.gamma);
    const bool ok = est.h_estimate <= bound + 3.0 * est.h_std_error;
    failures += ok ? 0 : 1;
    rows.push_back({static_cast<double>(p), est.h_estimate, est.h_std_error, v0, bound,
                    ok ? 1.0 : 0.0});
  }
  save_csv(ctx.emit_path("audit.csv"), {"path", "h_estimate", "h_se", "V", "bound", "ok"}, rows);
  ctx.record("audit.csv");
  audit["n_paths"] = n_paths;
  audit["failures"] = failures;
  audit["pass"] = failures == 0;
  {
    std::ofstream f(ctx.emit_path("audit.json"));
    f << audit.dump(2) << "\n";
  }
  ctx.record("audit.json");
  ctx.task("lyapunov-audit", failures == 0,
           std::to_string(failures) + " of " + std::to_string(n_paths) + " paths failed");
}

const std::vector<std::string> kSpdeKeys = {
    "spde.equation", "spde.nu",        "spde.n0",      "spde.sigma",  "spde.cutoff",
    "spde.dt",       "spde.horizon",   "spde.seed",    "spde.experiment",
    "spde.psi_tol",  "spde.burn_in",   "spde.pairs",   "spde.grid",   "spde.lookback_steps"};

void run_spde_gl(const Config& cfg, const RunContext& ctx) {
  cfg.require_known(concat_keys({kSpdeKeys}));
  const int cutoff = static_cast<int>(cfg.get_int("spde", "cutoff", 64));
  const double nu = cfg.get_double("spde", "nu", 1.0);
  const int n0 = static_cast<int>(cfg.get_int("spde", "n0", 2));
  const double sigma = cfg.get_double("spde", "sigma", 0.5);
  const double dt = cfg.get_double("spde", "dt", 1e-3);
  const double T = cfg.get_double("spde", "horizon", 20.0);
  const std::uint64_t seed = cfg.get_u64("spde", "seed", 1);
  const std::string experiment = cfg.get_string("spde", "experiment", "sync");

  spde::Gl sys(cutoff, nu);
  const spde::GlForcing f = forcing_through(n0, sys.n_coeffs(), sigma);
  const spde::LhSplit split = spde::LhSplit::from_forcing(f, sys.n_coeffs());
  split.require_full_rank(f);
  const std::vector<double> u0(static_cast<std::size_t>(sys.n_coeffs()), 0.0);

  if (experiment == "sync") {
    std::vector<double> ha(split.high.size(), 0.0), hb(split.high.size(), 0.0);
    hb[0] = 0.1;
    const auto res = spde::gl_sync_experiment(sys, f, u0, dt, T, seed, ha, hb);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < res.times.size(); i += 10)
      rows.push_back({res.times[i], res.gaps[i]});
    save_csv(ctx.emit_path("sync.csv"), {"t", "gap"}, rows);
    ctx.record("sync.csv");
    save_csv(ctx.emit_path("sync_fit.csv"), {"fitted_rate", "diverged"},
             {{res.fitted_rate.value_or(0.0), res.diverged ? 1.0 : 0.0}});
    ctx.record("sync_fit.csv");
    ctx.task("spde-gl-sync", !res.diverged,
             res.diverged ? "gap failed to contract (threshold violation)" : "contracted");
    return;
  }

  const double burn_in = cfg.get_double("spde", "burn_in", 10.0);
  const std::size_t burn_steps = static_cast<std::size_t>(std::llround(burn_in / dt));
  const std::size_t n_steps = burn_steps + static_cast<std::size_t>(std::llround(T / dt));
  const spde::GlTrajectory traj = spde::gl_simulate(sys, f, u0, dt, n_steps, seed);

  if (experiment == "psi") {
    const double psi_tol = cfg.get_double("spde", "psi_tol", 1e-8);
    const auto ell = spde::ell_history_from(traj, split, traj.n_steps(),
                                            std::min<std::size_t>(traj.n_steps(), 16385));
    const auto res = spde::psi_converged(sys, split, ell, psi_tol);
    save_csv(ctx.emit_path("psi.csv"), {"lookback_steps", "converged", "last_delta"},
             {{static_cast<double>(res.lookback_steps), res.converged ? 1.0 : 0.0,
               res.last_delta}});
    ctx.record("psi.csv");
    ctx.task("spde-gl-psi", res.converged,
             "lookback " + std::to_string(res.lookback_steps) + ", delta " +
                 std::to_string(res.last_delta));
    return;
  }
  if (experiment == "factor") {
    const std::size_t lookback =
        static_cast<std::size_t>(cfg.get_int("spde", "lookback_steps", 2048));
    const auto series = spde::factorization_residual(sys, split, traj, lookback,
                                                     std::max<std::size_t>(1, n_steps / 50));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < series.times.size(); ++i)
      rows.push_back({series.times[i], series.residuals[i]});
    save_csv(ctx.emit_path("factorization.csv"), {"t", "residual"}, rows);
    ctx.record("factorization.csv");
    ctx.task("spde-gl-factor", true, std::to_string(series.times.size()) + " samples");
    return;
  }
  if (experiment == "probe") {
    const std::size_t pairs = static_cast<std::size_t>(cfg.get_int("spde", "pairs", 1000));
    const auto kd = spde::gl_dissipative_constants(nu, f.n0());
    const auto kl = spde::gl_lip_constants();
    const Philox gen(seed ^ 0x70726f62ull, 1);
    std::uint64_t ctr = 0;
    std::size_t failures = 0;
    std::vector<std::vector<double>> rows;
    for (std::size_t p = 0; p < pairs; ++p) {
      const auto pick = [&](std::uint64_t c) {
        return burn_steps + static_cast<std::size_t>(gen.uniform(c, 0) *
                                                     static_cast<double>(n_steps - burn_steps));
      };
      const std::size_t i = pick(ctr++), j = pick(ctr++);
      std::vector<double> u(traj.row(i), traj.row(i) + sys.n_coeffs());
      std::vector<double> v(traj.row(j), traj.row(j) + sys.n_coeffs());
      const auto rd = spde::probe_dissipative(sys, split, u, v, kd);
      std::vector<double> ell_u, high_u, ell_v, high_v;
      spde::split_lh(u, split, ell_u, high_u);
      spde::split_lh(v, split, ell_v, high_v);
      const auto rl = spde::probe_lip(sys, split, ell_u, high_u, high_v, kl);
      failures += (rd.ok && rl.ok) ? 0 : 1;
      rows.push_back({static_cast<double>(p), rd.lhs, rd.rhs, rd.ok ? 1.0 : 0.0, rl.lhs, rl.rhs,
                      rl.ok ? 1.0 : 0.0});
    }
    save_csv(ctx.emit_path("probes.csv"),
             {"pair", "dissipative_lhs", "dissipative_rhs", "dissipative_ok", "lip_lhs",
              "lip_rhs", "lip_ok"},
             rows);
    ctx.record("probes.csv");
    ctx.task("spde-gl-probe", failures == 0,
             std::to_string(failures) + " of " + std::to_string(pairs) + " pairs failed");
    return;
  }
  throw ConfigError("unknown spde.experiment '" + experiment + "'");
}

void run_spde_nse(const Config& cfg, const RunContext& ctx) {
  cfg.require_known(concat_keys({kSpdeKeys}));
  const int grid = static_cast<int>(cfg.get_int("spde", "grid", 64));
  const double nu = cfg.get_double("spde", "nu", 1.0);
  const double sigma = cfg.get_double("spde", "sigma", 0.3);
  const double dt = cfg.get_double("spde", "dt", 5e-4);
  const double T = cfg.get_double("spde", "horizon", 20.0);
  const std::uint64_t seed = cfg.get_u64("spde", "seed", 1);
  const std::string experiment = cfg.get_string("spde", "experiment", "sync");

  spde::Nse sys(grid, nu);
  spde::NseForcing f;
  for (auto [kx, ky] : {std::array<int, 2>{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 0}, {0, 2}})
    f.modes.push_back({{kx, ky}, sigma});

  if (experiment == "sync") {
    spde::Cvec omega0(sys.size(), 0.0);
    spde::Cvec ha(sys.size(), 0.0), hb(sys.size(), 0.0);
    hb[static_cast<std::size_t>(3) * grid + 2] = std::complex<double>(0.05, 0.02);
    hb[static_cast<std::size_t>(grid - 3) * grid + (grid - 2)] =
        std::conj(hb[static_cast<std::size_t>(3) * grid + 2]);
    const auto res = spde::nse_sync_experiment(sys, f, omega0, dt, T, seed, ha, hb);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < res.times.size(); i += 20)
      rows.push_back({res.times[i], res.gaps[i]});
    save_csv(ctx.emit_path("nse_sync.csv"), {"t", "gap"}, rows);
    ctx.record("nse_sync.csv");
    const double ratio = res.gaps.front() > 0.0 ? res.gaps.back() / res.gaps.front() : 0.0;
    ctx.task("spde-nse-sync", !res.diverged, "gap ratio " + std::to_string(ratio));
    return;
  }
  throw ConfigError("spde.experiment '" + experiment + "' is not available for nse");
}

void dispatch(const Config& cfg, const RunContext& ctx) {
  const std::string experiment = cfg.get_string("", "experiment");
  if (experiment == "simulate") return run_simulate(cfg, ctx);
  if (experiment == "kb") return run_kb(cfg, ctx);
  if (experiment == "couple") return run_couple(cfg, ctx);
  if (experiment == "girsanov") return run_girsanov(cfg, ctx);
  if (experiment == "tails") return run_tails(cfg, ctx);
  if (experiment == "lyapunov-audit") return run_lyapunov_audit(cfg, ctx);
  if (experiment == "spde-gl") return run_spde_gl(cfg, ctx);
  if (experiment == "spde-nse") return run_spde_nse(cfg, ctx);
  throw ConfigError("unknown experiment '" + experiment + "'");
}

fs::path fresh_run_dir(const std::string& out_dir, const std::string& hash) {
  const fs::path base = fs::path(out_dir) / hash.substr(0, 8);
  fs::create_directories(base);
  for (int n = 1;; ++n) {
    const fs::path run = base / ("run-" + std::to_string(n));
    if (!fs::exists(run)) {
      fs::create_directories(run);
      return run;
    }
  }
}

}  // namespace

bool RunManifest::all_ok() const {
  for (const auto& t : tasks)
    if (!t.ok) return false;
  return true;
}

int RunManifest::exit_code() const { return all_ok() ? 0 : 3; }

void write_manifest(const RunManifest& m, const std::string& file) {
  nlohmann::json j;
  j["code_version"] = m.code_version;
  j["config_hash"] = m.config_hash;
  j["seeds"] = m.seeds;
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  j["outputs"] = nlohmann::json::array();
  for (const auto& o : m.outputs) j["outputs"].push_back({{"path", o.path}, {"digest", o.digest}});
  j["tasks"] = nlohmann::json::array();
  for (const auto& t : m.tasks)
    j["tasks"].push_back({{"name", t.name}, {"ok", t.ok}, {"detail", t.detail}});
  std::ofstream f(file, std::ios::trunc);
  f << j.dump(2) << "\n";
}

RunManifest run_experiment(const Config& cfg, const std::string& out_dir, bool csv_mirror) {
  RunManifest m;
  m.code_version = kCodeVersion;
  m.config_hash = cfg.hash();
  m.started_utc = utc_now();
  const fs::path run_dir = fresh_run_dir(out_dir, m.config_hash);
  m.run_dir = run_dir.string();

  // Persist the canonical config alongside the outputs.
  {
    std::ofstream f(run_dir / "config.ini");
    f << cfg.serialize();
  }

  RunContext ctx{run_dir, &m, csv_mirror};
  if (cfg.has("sweep", "key")) {
    // Expand a one-dimensional sweep: one sub-point per value, keyed output
    // subdirectories, all indexed by this manifest.
    const std::string key = cfg.get_string("sweep", "key");
    const auto dot = key.find('.');
    if (dot == std::string::npos)
      throw ConfigError("sweep.key must be section.key, got '" + key + "'");
    const std::string section = key.substr(0, dot);
    const std::string name = key.substr(dot + 1);
    const std::vector<double> values = cfg.get_double_list("sweep", "values");
    for (std::size_t i = 0; i < values.size(); ++i) {
      Config point = cfg;
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%g", values[i]);
      point.set(section, name, buf);
      // drop the sweep block from the point config
      Config flat = Config::parse(point.serialize());
      Config cleaned;
      for (const auto& [sec, kv] : flat.sections())
        for (const auto& [k, v] : kv)
          if (sec != "sweep") cleaned.set(sec, k, v);
      const fs::path pdir = run_dir / ("point-" + std::to_string(i) + "-" + buf);
      fs::create_directories(pdir);
      RunContext pctx{pdir, &m, csv_mirror};
      const std::size_t outputs_before = m.outputs.size();
      try {
        dispatch(cleaned, pctx);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        m.tasks.push_back({"point-" + std::to_string(i), false, e.what()});
      }
      for (std::size_t o = outputs_before; o < m.outputs.size(); ++o)
        m.outputs[o].path = pdir.filename().string() + "/" + m.outputs[o].path;
    }
  } else {
    dispatch(cfg, ctx);
  }

  m.finished_utc = utc_now();
  write_manifest(m, (run_dir / "manifest.json").string());
  return m;
}

}  // namespace memsde::harness
