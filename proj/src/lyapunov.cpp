#include "memsde/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "memsde/rng.hpp"

namespace memsde {

void LyapunovSpec::validate() const {
  if (!eval_V) throw ContractViolation("LyapunovSpec: eval_V missing");
  if (!(C0 > 0 && l > 0 && C1 > 0 && C2 > 0 && gamma > 0 && C3 > 0))
    throw ContractViolation("LyapunovSpec: constants must be positive");
  if (!(delta >= 0.0 && delta < 0.5 * (1.0 + gamma)))
    throw ContractViolation("LyapunovSpec: delta must lie in [0, (1+gamma)/2)");
}

namespace {

// Shared kernel functionals; constructed once, evaluation is pure.
const GaussianKernelDrift& gauss_drift() {
  static const GaussianKernelDrift d;
  return d;
}
const PathDependentKernelDrift& pathdep_drift() {
  static const PathDependentKernelDrift d;
  return d;
}

}  // namespace

double eval_V_example(ExampleV which, const HistoryView& x) {
  const double x0 = x.value(0, 0);
  if (which == ExampleV::ex61) {
    const double psi = gauss_drift().psi(x);
    return x0 * x0 + psi * psi;
  }
  const auto ph = pathdep_drift().psi_hat(x);
  if (ph.diverged) return std::numeric_limits<double>::infinity();
  return x0 * x0 + ph.value * ph.value;
}

double eval_V_example(ExampleV which, const HistoryPath& x) {
  x.validate();
  return eval_V_example(which, x.view());
}

LyapunovSpec example_spec(ExampleV which) {
  LyapunovSpec s;
  s.eval_V = [which](const HistoryView& x) { return eval_V_example(which, x); };
  s.C0 = 1.0;
  s.l = 2.0;
  s.gamma = 1.0;
  s.delta = 0.5;
  s.C3 = 2.0;
  if (which == ExampleV::ex61) {
    s.C1 = 1.0;
    s.C2 = 1.0;
  } else {
    s.C1 = 1.0;
    s.C2 = 2.0;
  }
  return s;
}

GeneratorEstimate generator_drift_estimate(const MemoryDrift& a, const LyapunovSpec& spec,
                                           const HistoryPath& x, std::size_t m, double dt_probe,
                                           std::uint64_t seed) {
  spec.validate();
  x.validate();
  if (m < 100) throw ContractViolation("generator_drift_estimate: need at least 100 replicas");
  if (!(dt_probe > 0.0)) throw ContractViolation("generator_drift_estimate: dt_probe <= 0");
  if (dt_probe != x.dt)
    throw ContractViolation(
        "generator_drift_estimate: dt_probe must equal the history grid step; "
        "resample the history to probe at a different step");
  const int dim = x.dim;

  const double v0 = spec.eval_V(x.view());
  if (!std::isfinite(v0))
    throw DivergenceError("generator_drift_estimate: V is infinite at the base path", 0.0);
  std::vector<double> drift(static_cast<std::size_t>(dim));
  a.eval_view(x.view(), drift.data());

  // One shared buffer: [past, one fresh slot]; each replica overwrites the slot.
  PathBuffer buf(x, 1);
  const double sd = std::sqrt(dt_probe);

  double sum_h = 0.0, sum_h2 = 0.0, sum_f = 0.0, sum_f2 = 0.0;
  std::size_t used = 0, excluded = 0;
  for (std::size_t r = 0; r < m; ++r) {
    const Philox gen(seed, r);  // one stream per continuation
    double* slot = buf.slot(1);
    for (int c = 0; c < dim; ++c)
      slot[c] = buf.slot(0)[c] + drift[static_cast<std::size_t>(c)] * dt_probe +
                sd * gen.normal_at(static_cast<std::uint64_t>(c));
    const double v1 = spec.eval_V(buf.view_at(1));
    if (!std::isfinite(v1)) {
      ++excluded;
      continue;
    }
    const double dv = v1 - v0;
    const double h = dv / dt_probe;
    const double f2 = dv * dv / dt_probe;
    sum_h += h;
    sum_h2 += h * h;
    sum_f += f2;
    sum_f2 += f2 * f2;
    ++used;
  }
  if (excluded * 10 > m)
    throw UnreliableEstimate("generator_drift_estimate: more than 10% of continuations excluded",
                             excluded, m);

  GeneratorEstimate out;
  out.replicas = used;
  out.excluded = excluded;
  const double n = static_cast<double>(used);
  out.h_estimate = sum_h / n;
  out.f2_estimate = sum_f / n;
  out.h_std_error = std::sqrt(std::max(0.0, sum_h2 / n - out.h_estimate * out.h_estimate) / n);
  out.f2_std_error =
      std::sqrt(std::max(0.0, sum_f2 / n - out.f2_estimate * out.f2_estimate) / n);
  return out;
}

std::vector<double> v_series(const std::function<double(const HistoryView&)>& V,
                             const FullPath& traj) {
  traj.validate();
  const PathBuffer buf(traj);
  std::vector<double> out(buf.future_steps() + 1);
  for (std::size_t k = 0; k <= buf.future_steps(); ++k) out[k] = V(buf.view_at(k));
  return out;
}

namespace {

void require_finite_series(const std::vector<double>& v, const char* who) {
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!std::isfinite(v[k]))
      throw DivergenceError(std::string(who) +
                                ": +inf/NaN V sentinel poisons the aggregate at index " +
                                std::to_string(k),
                            static_cast<double>(k));
}

}  // namespace

std::vector<double> time_average_v(const std::vector<double>& v, double dt, double gamma) {
  if (v.empty()) throw ContractViolation("time_average_v: empty series");
  require_finite_series(v, "time_average_v");
  std::vector<double> out(v.size());
  out[0] = std::pow(v[0], gamma);
  double acc = 0.0;
  double prev = out[0];
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double cur = std::pow(v[k], gamma);
    acc += 0.5 * dt * (prev + cur);
    out[k] = acc / (static_cast<double>(k) * dt);
    prev = cur;
  }
  return out;
}

MomentSeries moment_series(const std::vector<double>& v, double dt, double kappa,
                           std::size_t n_windows, std::uint64_t seed) {
  if (!(kappa > 0)) throw ContractViolation("moment_series: kappa must be positive");
  if (n_windows < 2 || v.size() < n_windows)
    throw ContractViolation("moment_series: need at least two nonempty windows");
  require_finite_series(v, "moment_series");

  MomentSeries out;
  const std::size_t w = v.size() / n_windows;
  for (std::size_t j = 0; j < n_windows; ++j) {
    double s = 0.0;
    for (std::size_t i = j * w; i < (j + 1) * w; ++i) s += std::pow(v[i], kappa);
    out.window_means.push_back(s / static_cast<double>(w));
    out.window_centers.push_back((static_cast<double>(j) + 0.5) * static_cast<double>(w) * dt);
  }

  auto fit_slope = [](const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  };
  out.slope = fit_slope(out.window_centers, out.window_means);

  // Pairs bootstrap over windows for the trend interval.
  const std::size_t B = 2000;
  std::vector<double> slopes(B);
  const Philox gen(seed ^ 0x626f6f74ull, 0);
  std::uint64_t ctr = 0;
  std::vector<double> bx(n_windows), by(n_windows);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t j = 0; j < n_windows; ++j) {
      const std::size_t pick =
          static_cast<std::size_t>(gen.uniform(ctr++, 0) * static_cast<double>(n_windows));
      const std::size_t i = pick < n_windows ? pick : n_windows - 1;
      bx[j] = out.window_centers[i];
      by[j] = out.window_means[i];
    }
    slopes[b] = fit_slope(bx, by);
  }
  std::sort(slopes.begin(), slopes.end());
  out.slope_ci_lo = slopes[static_cast<std::size_t>(0.025 * B)];
  out.slope_ci_hi = slopes[static_cast<std::size_t>(0.975 * B)];
  return out;
}

GrowthFit growth_exponent(const std::vector<double>& times, const std::vector<double>& values,
                          GrowthForm form, double kappa) {
  if (times.size() != values.size())
    throw ContractViolation("growth_exponent: times/values length mismatch");
  if (values.size() < 100) throw ContractViolation("growth_exponent: need at least 100 points");

  GrowthFit out;
  out.envelope.resize(values.size());
  double env = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double v =
        form == GrowthForm::poly_rho ? std::abs(values[k]) : std::max(values[k], 0.0);
    env = std::max(env, v);
    out.envelope[k] = env;
    const double denom = 1.0 + std::pow(std::abs(times[k]), kappa);
    out.sup_ratio = std::max(out.sup_ratio, env / denom);
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (out.envelope[k] <= 0.0) continue;
    const double lx = std::log(1.0 + std::abs(times[k]));
    const double ly = std::log(out.envelope[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1.0;
  }
  const double den = n * sxx - sx * sx;
  out.exponent = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  return out;
}

}  // namespace memsde
