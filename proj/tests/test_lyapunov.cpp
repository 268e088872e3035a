#include <cmath>
#include <vector>

#include "doctest.h"
#include "memsde/lyapunov.hpp"
#include "memsde/solver.hpp"
#include "oracles.hpp"

using namespace memsde;

namespace {

HistoryPath const_path(double c, std::size_t n, double dt) {
  HistoryPath h;
  h.dim = 1;
  h.dt = dt;
  h.samples.assign(n, c);
  return h;
}

}  // namespace

TEST_CASE("eval_V_example: zero path and constant closed forms") {
  CHECK(eval_V_example(ExampleV::ex61, const_path(0.0, 100, 0.01)) == 0.0);
  CHECK(eval_V_example(ExampleV::ex62, const_path(0.0, 100, 0.01)) == 0.0);

  const double I0 = oracles::gauss_kernel_mass();
  for (double c : {0.7, 1.4}) {
    HistoryPath x = const_path(c, 40000, 2e-4);
    CHECK(eval_V_example(ExampleV::ex61, x) ==
          doctest::Approx(c * c + std::pow(c * c * I0, 2)).epsilon(1e-6));
  }
  for (double c : {0.5, 1.0, 2.0}) {
    HistoryPath x = const_path(c, 120000, 1e-4);
    const double psi = c * c / (2.0 + c);
    CHECK(eval_V_example(ExampleV::ex62, x) ==
          doctest::Approx(c * c + psi * psi).epsilon(1e-6));
  }
  // Divergent PsiHat surfaces as the +inf sentinel.
  CHECK(std::isinf(eval_V_example(ExampleV::ex62, const_path(-3.0, 20001, 1e-3))));
}

TEST_CASE("eval_V dominates C0 |x(0)|^l on random paths") {
  oracles::TestRng rng(31);
  const LyapunovSpec s61 = example_spec(ExampleV::ex61);
  for (int rep = 0; rep < 30; ++rep) {
    HistoryPath x;
    x.dim = 1;
    x.dt = 5e-3;
    x.samples = oracles::smooth_path(rng, 1500, 5e-3, 2.0);
    const double v = s61.eval_V(x.view());
    CHECK(v >= s61.C0 * std::pow(std::abs(x.samples[0]), s61.l) - 1e-12);
  }
}

TEST_CASE("generator estimate: uniform example has h(0) = 1") {
  const LyapunovSpec spec = example_spec(ExampleV::ex61);
  GaussianKernelDrift a;
  HistoryPath x = const_path(0.0, 6001, 1e-3);  // window 6 at the run grid
  auto est = generator_drift_estimate(a, spec, x, 20000, 1e-3, 101);
  CHECK(std::abs(est.h_estimate - 1.0) <= 3.0 * est.h_std_error);
  CHECK(est.excluded == 0);
}

TEST_CASE("generator estimate: Markov V = x^2 gives h = -2x^2 + 1") {
  LyapunovSpec spec;
  spec.eval_V = [](const HistoryView& x) { return x.value(0, 0) * x.value(0, 0); };
  spec.C1 = 1.0;
  spec.C2 = 2.0;
  spec.gamma = 1.0;
  spec.delta = 0.5;
  spec.C3 = 2.0;
  MarkovDrift ou = MarkovDrift::scalar([](double v) { return -v; });
  HistoryPath x = const_path(2.0, 10, 1e-3);
  auto est = generator_drift_estimate(ou, spec, x, 40000, 1e-3, 55);
  CHECK(std::abs(est.h_estimate - (-7.0)) <= 3.0 * est.h_std_error);
  // f = 2x gives f^2 = 16 at x = 2; quadratic-variation estimate agrees loosely.
  CHECK(est.f2_estimate == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("generator estimate: SE halves when replicas quadruple") {
  LyapunovSpec spec;
  spec.eval_V = [](const HistoryView& x) { return x.value(0, 0) * x.value(0, 0); };
  MarkovDrift ou = MarkovDrift::scalar([](double v) { return -v; });
  HistoryPath x = const_path(1.0, 10, 1e-3);
  auto e1 = generator_drift_estimate(ou, spec, x, 4000, 1e-3, 7);
  auto e2 = generator_drift_estimate(ou, spec, x, 16000, 1e-3, 7);
  CHECK(e2.h_std_error == doctest::Approx(0.5 * e1.h_std_error).epsilon(0.3));
}

TEST_CASE("generator estimate: inequality audit on random nice paths") {
  const LyapunovSpec spec = example_spec(ExampleV::ex61);
  GaussianKernelDrift a;
  oracles::TestRng rng(41);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    HistoryPath x;
    x.dim = 1;
    x.dt = 1e-2;
    x.samples = oracles::smooth_path(rng, 800, 1e-2, 1.5);
    auto est = generator_drift_estimate(a, spec, x, 400, 1e-2, 1000 + rep);
    const double v = spec.eval_V(x.view());
    CHECK(est.h_estimate <= spec.C1 - spec.C2 * std::pow(v, spec.gamma) + 3.0 * est.h_std_error);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("time_average_v: constant series and telescoping with fluctuations") {
  const double dt = 0.01;
  std::vector<double> v(1001, 0.5);
  auto avg = time_average_v(v, dt, 1.0);
  for (double r : avg) CHECK(r == doctest::Approx(0.5).epsilon(1e-12));

  // T*avg(T) - (C1/C2)*T equals the signed fluctuation value at -T.
  oracles::TestRng rng(3);
  std::vector<double> w(501);
  for (double& x : w) x = rng.uniform(0.0, 2.0);
  auto avg2 = time_average_v(w, dt, 1.0);
  auto fv = fluctuation_series(w, dt, 1.0, 1.0, 1.0);
  for (std::size_t k = 1; k < w.size(); ++k) {
    const double T = static_cast<double>(k) * dt;
    CHECK(T * avg2[k] - T == doctest::Approx(fv.values[k]).epsilon(1e-10));
  }
}

TEST_CASE("time_average_v rejects the +inf sentinel") {
  std::vector<double> v(10, 1.0);
  v[5] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(time_average_v(v, 0.1, 1.0), DivergenceError);
}

TEST_CASE("moment_series: constant series has zero slope; CI covers 0") {
  std::vector<double> v(1000, 2.0);
  auto ms = moment_series(v, 0.01, 2.0, 10, 5);
  for (double m : ms.window_means) CHECK(m == doctest::Approx(4.0));
  CHECK(ms.slope == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ms.slope_ci_lo <= 0.0);
  CHECK(ms.slope_ci_hi >= 0.0);
}

TEST_CASE("moment_series: stationary OU run has trendless V^2") {
  MarkovDrift ou = MarkovDrift::scalar([](double x) { return -x; });
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 300.0;
  FuturePath x = solve_cauchy(ou, const_path(0.0, 1, 1e-3), 919, cfg);
  // V = x^2 along the run, burn-in dropped
  std::vector<double> v;
  for (std::size_t k = 20000; k < x.size(); ++k) v.push_back(x.value(k) * x.value(k));
  auto ms = moment_series(v, cfg.dt, 2.0, 14, 2);
  CHECK(ms.slope_ci_lo <= 0.0);
  CHECK(ms.slope_ci_hi >= 0.0);
  // heavy-tail guard: no window mean above 10x the median
  std::vector<double> sorted = ms.window_means;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (double m : ms.window_means) CHECK(m <= 10.0 * median);
}

TEST_CASE("growth_exponent: synthetic ground truths") {
  std::vector<double> times(2000), bounded(2000), poly(2000);
  oracles::TestRng rng(8);
  for (std::size_t k = 0; k < times.size(); ++k) {
    times[k] = static_cast<double>(k) * 0.1;
    bounded[k] = rng.uniform(-1.0, 1.0);
    poly[k] = std::pow(1.0 + times[k], 0.75) * rng.uniform(0.8, 1.0);
  }
  auto fb = growth_exponent(times, bounded, GrowthForm::poly_rho, 0.75);
  CHECK(fb.exponent <= 0.1);
  auto fp = growth_exponent(times, poly, GrowthForm::poly_rho, 0.75);
  CHECK(fp.exponent >= 0.7);
  CHECK(fp.exponent <= 0.8);
}

TEST_CASE("growth_exponent: fluc form envelopes only the positive excess") {
  std::vector<double> times(200), values(200);
  for (std::size_t k = 0; k < 200; ++k) {
    times[k] = static_cast<double>(k);
    values[k] = -static_cast<double>(k);  // strongly negative drift
  }
  values[10] = 0.7;
  auto f = growth_exponent(times, values, GrowthForm::fluc_kappa, 0.75);
  CHECK(f.envelope.back() == doctest::Approx(0.7));
  CHECK(f.sup_ratio <= 0.7);
}
