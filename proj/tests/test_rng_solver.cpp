#include <cmath>
#include <vector>

#include "doctest.h"
#include "memsde/drift.hpp"
#include "memsde/rng.hpp"
#include "memsde/solver.hpp"
#include "oracles.hpp"

using namespace memsde;

// Known-answer vectors for Philox4x32-10 (Random123 kat_vectors; also
// reproduced by the reference round structure).
TEST_CASE("philox: known-answer vectors") {
  {
    Philox g(0, 0);
    auto b = g.block(0);
    CHECK(b[0] == 0x6627e8d5u);
    CHECK(b[1] == 0xe169c58du);
    CHECK(b[2] == 0xbc57ac4cu);
    CHECK(b[3] == 0x9b00dbd8u);
  }
  {
    Philox g(0xffffffffffffffffull, 0xffffffffffffffffull);
    auto b = g.block(0xffffffffffffffffull);
    CHECK(b[0] == 0x408f276du);
    CHECK(b[1] == 0x41c83b0eu);
    CHECK(b[2] == 0xa20bc7c6u);
    CHECK(b[3] == 0x6d5451fdu);
  }
  {
    Philox g(0x9abcdef012345678ull, 42);
    auto b = g.block(7);
    CHECK(b[0] == 0xdc74d18fu);
    CHECK(b[1] == 0xe146b84fu);
    CHECK(b[2] == 0x68d1aac1u);
    CHECK(b[3] == 0x72648ec1u);
  }
}

TEST_CASE("sample_wiener: determinism and moments") {
  const std::size_t n = 100000;
  const double dt = 1e-3;
  WienerPath a = sample_wiener(1234, 5, 1, dt, n);
  WienerPath b = sample_wiener(1234, 5, 1, dt, n);
  CHECK(a.increments == b.increments);

  const double m = oracles::mean(a.increments);
  const double v = oracles::variance(a.increments);
  CHECK(std::abs(m) < 5.0 * std::sqrt(dt / static_cast<double>(n)));
  CHECK(v == doctest::Approx(dt).epsilon(0.05));
}

TEST_CASE("sample_wiener: distinct streams decorrelated") {
  const std::size_t n = 100000;
  WienerPath a = sample_wiener(1234, 0, 1, 1e-3, n);
  WienerPath b = sample_wiener(1234, 1, 1, 1e-3, n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += a.increments[i] * b.increments[i];
    sxx += a.increments[i] * a.increments[i];
    syy += b.increments[i] * b.increments[i];
  }
  const double r = sxy / std::sqrt(sxx * syy);
  CHECK(std::abs(r) < 0.02);
}

TEST_CASE("coarsen: pairwise sums reproduce the same Brownian path") {
  WienerPath fine = sample_wiener(7, 0, 2, 5e-4, 1000);
  WienerPath coarse = coarsen(fine, 2);
  CHECK(coarse.dt == doctest::Approx(1e-3));
  CHECK(coarse.n_steps() == 500);
  auto wf = fine.cumulative(1);
  auto wc = coarse.cumulative(1);
  for (std::size_t k = 0; k <= 500; ++k) CHECK(wc[k] == doctest::Approx(wf[2 * k]).epsilon(1e-12));
}

namespace {

HistoryPath zero_past(std::size_t n, double dt, int dim = 1) {
  HistoryPath h;
  h.dim = dim;
  h.dt = dt;
  h.samples.assign(n * static_cast<std::size_t>(dim), 0.0);
  return h;
}

}  // namespace

TEST_CASE("euler_maruyama: drift-free run is the bitwise Wiener sum") {
  const double dt = 1e-3;
  WienerPath w = sample_wiener(99, 0, 1, dt, 2000);
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.horizon = 2.0;
  HistoryPath past = zero_past(10, dt);
  past.samples[0] = 0.25;  // X(0)
  FuturePath x = euler_maruyama(ZeroDrift(1), past, w, cfg);
  double acc = 0.25;
  CHECK(x.value(0) == acc);
  for (std::size_t k = 0; k < 2000; ++k) {
    acc = acc + w.increments[k];
    CHECK(x.value(k + 1) == acc);
  }
}

TEST_CASE("euler_maruyama: OU long-run variance is 1/2") {
  const double dt = 1e-3;
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.horizon = 400.0;
  MarkovDrift ou = MarkovDrift::scalar([](double x) { return -x; });
  FuturePath x = euler_maruyama(ou, zero_past(1, dt), sample_wiener(42, 0, 1, dt, 400000), cfg);
  std::vector<double> tail(x.samples.begin() + 20000, x.samples.end());
  CHECK(oracles::variance(tail) == doctest::Approx(0.5).epsilon(0.08));
}

TEST_CASE("euler_maruyama: explosive drift trips the blowup guard") {
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 100.0;
  cfg.blowup_radius = 1e6;
  MarkovDrift expl = MarkovDrift::scalar([](double x) { return x; });
  HistoryPath past = zero_past(1, 1e-3);
  past.samples[0] = 1.0;
  CHECK_THROWS_AS(euler_maruyama(expl, past, sample_wiener(1, 0, 1, 1e-3, 100000), cfg),
                  BlowupError);
  try {
    euler_maruyama(expl, past, sample_wiener(1, 0, 1, 1e-3, 100000), cfg);
  } catch (const BlowupError& e) {
    CHECK(e.step > 0);
    CHECK(e.step < 100000);
    CHECK(e.value >= 1e6);
  }
}

TEST_CASE("blowup guard: tau_R nondecreasing in R_max") {
  MarkovDrift expl = MarkovDrift::scalar([](double x) { return x; });
  HistoryPath past = zero_past(1, 1e-3);
  past.samples[0] = 1.0;
  WienerPath w = sample_wiener(1, 0, 1, 1e-3, 100000);
  std::size_t prev_step = 0;
  for (double r : {10.0, 100.0, 1e4, 1e6}) {
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 100.0;
    cfg.blowup_radius = r;
    try {
      euler_maruyama(expl, past, w, cfg);
      FAIL("expected blowup");
    } catch (const BlowupError& e) {
      CHECK(e.step >= prev_step);
      prev_step = e.step;
    }
  }
}

TEST_CASE("solve_cauchy: deterministic for identical seed and config") {
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 5.0;
  MarkovDrift ou = MarkovDrift::scalar([](double x) { return -x; });
  FuturePath a = solve_cauchy(ou, zero_past(1, 1e-3), 2024, cfg);
  FuturePath b = solve_cauchy(ou, zero_past(1, 1e-3), 2024, cfg);
  CHECK(a.samples == b.samples);
  FuturePath c = solve_cauchy(ou, zero_past(1, 1e-3), 2025, cfg);
  CHECK(a.samples != c.samples);
}

TEST_CASE("strong order: OU gap halves when dt halves under refined noise") {
  MarkovDrift ou = MarkovDrift::scalar([](double x) { return -x; });
  WienerPath w4 = sample_wiener(31, 0, 1, 2.5e-4, 4096);  // finest, horizon ~1.02
  WienerPath w2 = coarsen(w4, 2);
  WienerPath w1 = coarsen(w4, 4);
  HistoryPath past = zero_past(1, 1e-3);
  past.samples[0] = 1.0;

  auto run = [&](const WienerPath& w) {
    SolverConfig cfg;
    cfg.dt = w.dt;
    cfg.horizon = 1.0;
    HistoryPath p = past;
    p.dt = w.dt;
    return euler_maruyama(ou, p, w, cfg);
  };
  FuturePath x1 = run(w1), x2 = run(w2), x4 = run(w4);

  auto supgap = [](const FuturePath& coarse, const FuturePath& fine, std::size_t factor) {
    double g = 0.0;
    for (std::size_t k = 0; k < coarse.size(); ++k)
      g = std::max(g, std::abs(coarse.value(k) - fine.value(k * factor)));
    return g;
  };
  const double g12 = supgap(x1, x2, 2);
  const double g24 = supgap(x2, x4, 2);
  const double ratio = g12 / g24;
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 3.0);
}

TEST_CASE("picard: drift-free converges in one sweep to x(0) + W") {
  const double dt = 1e-3;
  WienerPath w = sample_wiener(8, 0, 1, dt, 1000);
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.horizon = 1.0;
  HistoryPath past = zero_past(1, dt);
  past.samples[0] = 0.5;
  PicardStats stats;
  FuturePath y = picard_solve(ZeroDrift(1), past, w, cfg, &stats);
  CHECK(stats.total_iterations == 1);
  auto wc = w.cumulative(0);
  for (std::size_t k = 0; k < y.size(); ++k)
    CHECK(y.value(k) == doctest::Approx(0.5 + wc[k]).epsilon(1e-14));
}

TEST_CASE("picard vs euler: OU agreement is O(dt) with ratio test") {
  MarkovDrift ou = MarkovDrift::scalar([](double x) { return -x; });
  HistoryPath past = zero_past(1, 1.0);
  past.samples[0] = 1.0;

  auto gap_at = [&](double dt) {
    WienerPath w = sample_wiener(77, 0, 1, dt,
                                 static_cast<std::size_t>(std::llround(1.0 / dt)));
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.horizon = 1.0;
    HistoryPath p = past;
    p.dt = dt;
    FuturePath ye = euler_maruyama(ou, p, w, cfg);
    FuturePath yp = picard_solve(ou, p, w, cfg);
    double g = 0.0;
    for (std::size_t k = 0; k < ye.size(); ++k)
      g = std::max(g, std::abs(ye.value(k) - yp.value(k)));
    return g;
  };

  // Same Brownian path at both resolutions via refinement.
  WienerPath fine = sample_wiener(77, 0, 1, 5e-4, 2000);
  WienerPath half = coarsen(fine, 2);
  auto gap_for = [&](const WienerPath& w) {
    SolverConfig cfg;
    cfg.dt = w.dt;
    cfg.horizon = 1.0;
    HistoryPath p = past;
    p.dt = w.dt;
    FuturePath ye = euler_maruyama(ou, p, w, cfg);
    FuturePath yp = picard_solve(ou, p, w, cfg);
    double g = 0.0;
    for (std::size_t k = 0; k < ye.size(); ++k)
      g = std::max(g, std::abs(ye.value(k) - yp.value(k)));
    return g;
  };
  const double g1 = gap_for(half);
  const double g2 = gap_for(fine);
  CHECK(g1 / g2 >= 1.5);
  CHECK(g1 / g2 <= 3.0);
  CHECK(gap_at(1e-3) < 10.0 * 1e-3 * 2.0);  // 10*dt*(1+||past||)
}
