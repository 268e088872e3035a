#include "memsde/spde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "memsde/rng.hpp"

namespace memsde::spde {

namespace {

constexpr double kTwoPiSq = 39.478417604357434;  // 4 pi^2

int padded_grid(int cutoff) {
  // Power of two past the cubic alias bound 4K+1, never below 32.
  int m = 32;
  while (m < 4 * cutoff + 2) m *= 2;
  return m;
}

void check_finite_state(const std::vector<double>& c, std::size_t step) {
  for (double v : c)
    if (!std::isfinite(v))
      throw BlowupError("spde: non-finite state at step " + std::to_string(step), step, v);
}

}  // namespace

// ---------------------------------------------------------------------------
// GL spectral core
// ---------------------------------------------------------------------------

struct Gl::Fft {
  fftw_plan fwd = nullptr;  // r2c
  fftw_plan bwd = nullptr;  // c2r
  double* phys = nullptr;
  fftw_complex* spec = nullptr;
  int m = 0;

  explicit Fft(int grid) : m(grid) {
    phys = fftw_alloc_real(static_cast<std::size_t>(m));
    spec = fftw_alloc_complex(static_cast<std::size_t>(m / 2 + 1));
    fwd = fftw_plan_dft_r2c_1d(m, phys, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(m, spec, phys, FFTW_ESTIMATE);
  }
  ~Fft() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(phys);
    fftw_free(spec);
  }
};

Gl::Gl(int cutoff, double nu, bool cubic_enabled)
    : cutoff_(cutoff), nu_(nu), cubic_enabled_(cubic_enabled), m_(padded_grid(cutoff)) {
  if (cutoff < 3) throw ContractViolation("Gl: cutoff must be at least 3 modes");
  if (!(nu > 0.0)) throw ContractViolation("Gl: nu must be positive");
  fft_ = std::make_unique<Fft>(m_);
}

Gl::~Gl() = default;

double Gl::lambda(int j) const {
  const double k = static_cast<double>(wavenumber(j));
  return kTwoPiSq * k * k;
}

std::vector<double> Gl::to_physical(const std::vector<double>& c) {
  const int half = m_ / 2 + 1;
  std::memset(fft_->spec, 0, sizeof(fftw_complex) * static_cast<std::size_t>(half));
  const double inv_sqrt2 = 0.70710678118654752440;
  fft_->spec[0][0] = c[0];
  for (int k = 1; k <= cutoff_; ++k) {
    fft_->spec[k][0] = c[static_cast<std::size_t>(2 * k)] * inv_sqrt2;       // cos
    fft_->spec[k][1] = -c[static_cast<std::size_t>(2 * k - 1)] * inv_sqrt2;  // sin
  }
  fftw_execute(fft_->bwd);
  return std::vector<double>(fft_->phys, fft_->phys + m_);
}

void Gl::cube(const std::vector<double>& c, std::vector<double>& out) {
  const int half = m_ / 2 + 1;
  std::memset(fft_->spec, 0, sizeof(fftw_complex) * static_cast<std::size_t>(half));
  const double inv_sqrt2 = 0.70710678118654752440;
  fft_->spec[0][0] = c[0];
  for (int k = 1; k <= cutoff_; ++k) {
    fft_->spec[k][0] = c[static_cast<std::size_t>(2 * k)] * inv_sqrt2;
    fft_->spec[k][1] = -c[static_cast<std::size_t>(2 * k - 1)] * inv_sqrt2;
  }
  fftw_execute(fft_->bwd);
  for (int i = 0; i < m_; ++i) {
    const double v = fft_->phys[i];
    fft_->phys[i] = v * v * v;
  }
  fftw_execute(fft_->fwd);
  const double inv_m = 1.0 / static_cast<double>(m_);
  const double sqrt2 = 1.4142135623730950488;
  out.assign(static_cast<std::size_t>(n_coeffs()), 0.0);
  out[0] = fft_->spec[0][0] * inv_m;
  for (int k = 1; k <= cutoff_; ++k) {
    out[static_cast<std::size_t>(2 * k)] = sqrt2 * fft_->spec[k][0] * inv_m;
    out[static_cast<std::size_t>(2 * k - 1)] = -sqrt2 * fft_->spec[k][1] * inv_m;
  }
}

void Gl::reaction(const std::vector<double>& c, std::vector<double>& out) {
  if (c.size() != static_cast<std::size_t>(n_coeffs()))
    throw ContractViolation("Gl: coefficient vector has wrong length");
  if (cubic_enabled_) {
    cube(c, out);
    for (std::size_t j = 0; j < c.size(); ++j) out[j] = c[j] - out[j];
  } else {
    out = c;
  }
}

void Gl::rhs(const std::vector<double>& c, std::vector<double>& out) {
  reaction(c, out);
  for (int j = 0; j < n_coeffs(); ++j)
    out[static_cast<std::size_t>(j)] -= nu_ * lambda(j) * c[static_cast<std::size_t>(j)];
}

void Gl::step(std::vector<double>& c, double dt, const std::vector<double>& noise) {
  static thread_local std::vector<double> r;
  reaction(c, r);
  for (int j = 0; j < n_coeffs(); ++j) {
    const std::size_t u = static_cast<std::size_t>(j);
    c[u] = (c[u] + dt * r[u] + (noise.empty() ? 0.0 : noise[u])) / (1.0 + dt * nu_ * lambda(j));
  }
}

// ---------------------------------------------------------------------------
// Forcing, split, norms
// ---------------------------------------------------------------------------

void GlForcing::validate(int n_coeffs) const {
  if (sigma.size() != static_cast<std::size_t>(n_coeffs))
    throw ContractViolation("GlForcing: sigma length must match the coefficient count");
  for (double s : sigma)
    if (s < 0.0 || !std::isfinite(s))
      throw ContractViolation("GlForcing: amplitudes must be finite and nonnegative");
}

int GlForcing::n0() const {
  auto fully_forced = [this](int m) {
    if (m == 0) return sigma[0] > 0.0;
    const std::size_t s = static_cast<std::size_t>(2 * m - 1);
    const std::size_t k = static_cast<std::size_t>(2 * m);
    return k < sigma.size() && sigma[s] > 0.0 && sigma[k] > 0.0;
  };
  int n = 0;
  while (fully_forced(n)) ++n;
  return n;
}

int GlForcing::n1() const {
  int top = 0;
  for (std::size_t j = 0; j < sigma.size(); ++j)
    if (sigma[j] > 0.0) top = std::max(top, (static_cast<int>(j) + 1) / 2);
  return top;
}

double GlForcing::trace_gg() const {
  double s = 0.0;
  for (double x : sigma) s += x * x;
  return s;
}

LhSplit LhSplit::from_forcing(const GlForcing& f, int n_coeffs) {
  LhSplit out;
  for (int j = 0; j < n_coeffs; ++j) {
    if (j < static_cast<int>(f.sigma.size()) && f.sigma[static_cast<std::size_t>(j)] > 0.0)
      out.low.push_back(j);
    else
      out.high.push_back(j);
  }
  return out;
}

void LhSplit::require_full_rank(const GlForcing& f) const {
  for (int j : low)
    if (f.sigma[static_cast<std::size_t>(j)] <= 0.0)
      throw ContractViolation("LhSplit: unforced index " + std::to_string(j) +
                              " inside the low subspace (Pi_l G loses rank)");
}

void split_lh(const std::vector<double>& state, const LhSplit& split, std::vector<double>& ell,
              std::vector<double>& high) {
  ell.resize(split.low.size());
  high.resize(split.high.size());
  for (std::size_t i = 0; i < split.low.size(); ++i)
    ell[i] = state[static_cast<std::size_t>(split.low[i])];
  for (std::size_t i = 0; i < split.high.size(); ++i)
    high[i] = state[static_cast<std::size_t>(split.high[i])];
}

std::vector<double> recompose(const std::vector<double>& ell, const std::vector<double>& high,
                              const LhSplit& split, int n_coeffs) {
  std::vector<double> state(static_cast<std::size_t>(n_coeffs), 0.0);
  for (std::size_t i = 0; i < split.low.size(); ++i)
    state[static_cast<std::size_t>(split.low[i])] = ell[i];
  for (std::size_t i = 0; i < split.high.size(); ++i)
    state[static_cast<std::size_t>(split.high[i])] = high[i];
  return state;
}

double gl_energy_u(const Gl& sys, const std::vector<double>& c) {
  double s = 0.0;
  for (int j = 0; j < sys.n_coeffs(); ++j) {
    const double v = c[static_cast<std::size_t>(j)];
    s += (1.0 + sys.lambda(j)) * v * v;
  }
  return s;
}

double gl_u_norm(const Gl& sys, const std::vector<double>& v) {
  return std::sqrt(gl_energy_u(sys, v));
}

std::vector<double> gl_noise(const GlForcing& f, int n_coeffs, double dt, std::uint64_t seed,
                             std::uint64_t stream, std::uint64_t step_index) {
  std::vector<double> out(static_cast<std::size_t>(n_coeffs), 0.0);
  const Philox gen(seed, stream);
  const double sd = std::sqrt(dt);
  std::uint64_t pos = step_index * static_cast<std::uint64_t>(n_coeffs);
  for (int j = 0; j < n_coeffs; ++j, ++pos) {
    const double s = f.sigma[static_cast<std::size_t>(j)];
    if (s > 0.0) out[static_cast<std::size_t>(j)] = s * sd * gen.normal_at(pos);
  }
  return out;
}

void gl_step_checked(Gl& sys, const GlForcing& f, std::vector<double>& state, double dt,
                     const std::vector<double>& noise) {
  f.validate(sys.n_coeffs());
  for (int j = 0; j < sys.n_coeffs(); ++j)
    if (noise[static_cast<std::size_t>(j)] != 0.0 && f.sigma[static_cast<std::size_t>(j)] <= 0.0)
      throw ContractViolation("gl_step_checked: noise on unforced mode index " +
                              std::to_string(j));
  sys.step(state, dt, noise);
  check_finite_state(state, 0);
}

GlTrajectory gl_simulate(Gl& sys, const GlForcing& f, const std::vector<double>& u0, double dt,
                         std::size_t n_steps, std::uint64_t seed, std::uint64_t stream) {
  f.validate(sys.n_coeffs());
  if (u0.size() != static_cast<std::size_t>(sys.n_coeffs()))
    throw ContractViolation("gl_simulate: initial state has wrong length");
  GlTrajectory traj;
  traj.n_coeffs = sys.n_coeffs();
  traj.dt = dt;
  traj.states.reserve((n_steps + 1) * u0.size());
  traj.states.insert(traj.states.end(), u0.begin(), u0.end());
  std::vector<double> c = u0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const std::vector<double> noise = gl_noise(f, sys.n_coeffs(), dt, seed, stream, k);
    sys.step(c, dt, noise);
    check_finite_state(c, k + 1);
    traj.states.insert(traj.states.end(), c.begin(), c.end());
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Psi reconstruction
// ---------------------------------------------------------------------------

EllHistory ell_history_from(const GlTrajectory& traj, const LhSplit& split, std::size_t end_step,
                            std::size_t n_rows) {
  if (end_step >= traj.n_steps() + 1 || n_rows > end_step + 1)
    throw ContractViolation("ell_history_from: requested window exceeds the trajectory");
  EllHistory out;
  out.d_low = split.d_low();
  out.dt = traj.dt;
  out.rows.reserve(n_rows * split.low.size());
  for (std::size_t k = end_step + 1 - n_rows; k <= end_step; ++k) {
    const double* s = traj.row(k);
    for (int j : split.low) out.rows.push_back(s[j]);
  }
  return out;
}

EllHistory ell_history_from(const HistoryView& view) {
  EllHistory out;
  out.d_low = view.dim;
  out.dt = view.dt;
  out.rows.resize(view.n * static_cast<std::size_t>(view.dim));
  for (std::size_t lag = 0; lag < view.n; ++lag) {
    const std::size_t row = view.n - 1 - lag;
    for (int c = 0; c < view.dim; ++c)
      out.rows[row * static_cast<std::size_t>(view.dim) + static_cast<std::size_t>(c)] =
          view.value(lag, c);
  }
  return out;
}

std::vector<double> psi_from_lookback(Gl& sys, const LhSplit& split, const EllHistory& ell,
                                      const std::vector<double>& h0_high,
                                      std::size_t lookback_steps) {
  if (ell.d_low != split.d_low())
    throw ContractViolation("psi_from_lookback: history dimension mismatch");
  if (ell.size() < lookback_steps + 1)
    throw ContractViolation("psi_from_lookback: history shorter than the lookback");
  if (h0_high.size() != split.high.size())
    throw ContractViolation("psi_from_lookback: h0 length mismatch");

  const std::size_t last = ell.size() - 1;  // row index of time 0
  std::vector<double> high = h0_high;
  std::vector<double> state(static_cast<std::size_t>(sys.n_coeffs()), 0.0);
  static thread_local std::vector<double> r;
  for (std::size_t j = lookback_steps; j >= 1; --j) {
    const double* lrow = ell.row(last - j);
    for (std::size_t i = 0; i < split.low.size(); ++i)
      state[static_cast<std::size_t>(split.low[i])] = lrow[i];
    for (std::size_t i = 0; i < split.high.size(); ++i)
      state[static_cast<std::size_t>(split.high[i])] = high[i];
    sys.reaction(state, r);
    for (std::size_t i = 0; i < split.high.size(); ++i) {
      const int idx = split.high[i];
      const std::size_t u = static_cast<std::size_t>(idx);
      high[i] = (state[u] + ell.dt * r[u]) / (1.0 + ell.dt * sys.nu() * sys.lambda(idx));
    }
  }
  std::vector<double> out(static_cast<std::size_t>(sys.n_coeffs()), 0.0);
  for (std::size_t i = 0; i < split.high.size(); ++i)
    out[static_cast<std::size_t>(split.high[i])] = high[i];
  return out;
}

PsiResult psi_converged(Gl& sys, const LhSplit& split, const EllHistory& ell, double psi_tol,
                        std::size_t initial_lookback, std::size_t max_lookback) {
  // Convergence needs two things below tolerance: the change under lookback
  // doubling AND the spread between two initial h0 (the limit forgets h0, so
  // the spread is the honest error estimate at finite lookback).
  const std::vector<double> h0_zero(split.high.size(), 0.0);
  std::vector<double> h0_probe(split.high.size());
  for (std::size_t i = 0; i < h0_probe.size(); ++i)
    h0_probe[i] = 0.1 / (1.0 + static_cast<double>(i));

  auto spread_at = [&](std::size_t L, std::vector<double>& psi) {
    psi = psi_from_lookback(sys, split, ell, h0_zero, L);
    const std::vector<double> alt = psi_from_lookback(sys, split, ell, h0_probe, L);
    std::vector<double> diff(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) diff[i] = alt[i] - psi[i];
    return gl_u_norm(sys, diff);
  };

  std::size_t L = std::min(initial_lookback, ell.size() - 1);
  PsiResult res;
  double spread = spread_at(L, res.psi);
  res.lookback_steps = L;
  res.last_delta = spread;
  while (true) {
    const std::size_t L2 = std::min(std::min(2 * L, max_lookback), ell.size() - 1);
    if (L2 == L) break;  // window or cap exhausted
    std::vector<double> next;
    spread = spread_at(L2, next);
    std::vector<double> diff(next.size());
    for (std::size_t i = 0; i < next.size(); ++i) diff[i] = next[i] - res.psi[i];
    const double doubling = gl_u_norm(sys, diff);
    res.last_delta = std::max(doubling, spread);
    res.psi = std::move(next);
    res.lookback_steps = L2;
    L = L2;
    if (res.last_delta < psi_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

SyncResult gl_sync_experiment(Gl& sys, const GlForcing& f, const std::vector<double>& u0,
                              double dt, double T, std::uint64_t seed,
                              const std::vector<double>& h0_a, const std::vector<double>& h0_b) {
  f.validate(sys.n_coeffs());
  const LhSplit split = LhSplit::from_forcing(f, sys.n_coeffs());
  split.require_full_rank(f);
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(T / dt));
  if (h0_a.size() != split.high.size() || h0_b.size() != split.high.size())
    throw ContractViolation("gl_sync_experiment: h0 length must match the high subspace");

  std::vector<double> u = u0;
  std::vector<double> ha = h0_a, hb = h0_b;
  std::vector<double> state(static_cast<std::size_t>(sys.n_coeffs()), 0.0);
  static thread_local std::vector<double> r;

  auto slave_step = [&](std::vector<double>& h, const std::vector<double>& driver) {
    for (std::size_t i = 0; i < split.low.size(); ++i)
      state[static_cast<std::size_t>(split.low[i])] =
          driver[static_cast<std::size_t>(split.low[i])];
    for (std::size_t i = 0; i < split.high.size(); ++i)
      state[static_cast<std::size_t>(split.high[i])] = h[i];
    sys.reaction(state, r);
    for (std::size_t i = 0; i < split.high.size(); ++i) {
      const int idx = split.high[i];
      const std::size_t uix = static_cast<std::size_t>(idx);
      h[i] = (state[uix] + dt * r[uix]) / (1.0 + dt * sys.nu() * sys.lambda(idx));
    }
  };

  SyncResult out;
  auto gap_norm = [&]() {
    std::vector<double> d(static_cast<std::size_t>(sys.n_coeffs()), 0.0);
    for (std::size_t i = 0; i < split.high.size(); ++i)
      d[static_cast<std::size_t>(split.high[i])] = ha[i] - hb[i];
    return gl_u_norm(sys, d);
  };
  out.times.push_back(0.0);
  out.gaps.push_back(gap_norm());
  for (std::size_t k = 0; k < n_steps; ++k) {
    slave_step(ha, u);
    slave_step(hb, u);
    const std::vector<double> noise = gl_noise(f, sys.n_coeffs(), dt, seed, 0, k);
    sys.step(u, dt, noise);
    check_finite_state(u, k + 1);
    out.times.push_back(static_cast<double>(k + 1) * dt);
    out.gaps.push_back(gap_norm());
  }

  // Divergence check over 8 windows: three consecutive growths flag failure.
  const std::size_t n_windows = 8;
  const std::size_t w = out.gaps.size() / n_windows;
  if (w > 0) {
    int grow_run = 0;
    double prev = -1.0;
    for (std::size_t j = 0; j < n_windows; ++j) {
      double m = 0.0;
      for (std::size_t i = j * w; i < (j + 1) * w; ++i) m += out.gaps[i];
      m /= static_cast<double>(w);
      if (prev >= 0.0 && m > prev) {
        if (++grow_run >= 3) out.diverged = true;
      } else {
        grow_run = 0;
      }
      prev = m;
    }
  }

  // Rate fit above the floating-point floor, relative to the initial gap.
  const double floor = out.gaps.front() > 0.0 ? 1e-13 * out.gaps.front() : 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < out.gaps.size(); ++i) {
    if (out.gaps[i] <= floor) continue;
    const double lx = out.times[i];
    const double ly = std::log(out.gaps[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1.0;
  }
  const double den = n * sxx - sx * sx;
  if (n >= 2.0 && den != 0.0) out.fitted_rate = (n * sxy - sx * sy) / den;
  return out;
}

FactorizationSeries factorization_residual(Gl& sys, const LhSplit& split,
                                           const GlTrajectory& traj, std::size_t lookback_steps,
                                           std::size_t stride) {
  if (stride == 0) stride = 1;
  FactorizationSeries out;
  for (std::size_t k = lookback_steps; k <= traj.n_steps(); k += stride) {
    const EllHistory ell = ell_history_from(traj, split, k, lookback_steps + 1);
    const std::vector<double> psi =
        psi_from_lookback(sys, split, ell, std::vector<double>(split.high.size(), 0.0),
                          lookback_steps);
    const double* truth = traj.row(k);
    std::vector<double> d(static_cast<std::size_t>(sys.n_coeffs()), 0.0);
    for (int j : split.high) {
      const std::size_t u = static_cast<std::size_t>(j);
      d[u] = truth[j] - psi[u];
    }
    out.times.push_back(static_cast<double>(k) * traj.dt);
    out.residuals.push_back(gl_u_norm(sys, d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assumption probes
// ---------------------------------------------------------------------------

DissipativeConstants gl_dissipative_constants(double nu, int n0) {
  DissipativeConstants k;
  k.c1 = kTwoPiSq * nu * static_cast<double>(n0) * static_cast<double>(n0) - 1.0;
  k.c2 = 0.0;  // the GL high-mode contraction needs no U-dependent slack
  k.c3 = 9.0;  // cubic cross term via Young: |u^2+u~u+u~^2|_inf^2 <= 18(U^2+U~^2)
  k.gamma = 1.0;
  k.p1 = 2.0;
  k.p2 = 2.0;
  return k;
}

LipConstants gl_lip_constants() {
  LipConstants k;
  k.c4 = 18.0;  // |Pi_l(u^3-u~^3)| <= 3(U+U~)||h-h~||, squared and symmetrized
  k.p3 = 2.0;
  k.p4 = 2.0;
  return k;
}

ProbeReport probe_dissipative(Gl& sys, const LhSplit& split, const std::vector<double>& u,
                              const std::vector<double>& u_tilde,
                              const DissipativeConstants& k, double tol) {
  std::vector<double> fu, fut;
  sys.rhs(u, fu);
  sys.rhs(u_tilde, fut);
  double lhs = 0.0, high2 = 0.0, low2 = 0.0;
  for (int j : split.high) {
    const std::size_t i = static_cast<std::size_t>(j);
    const double d = u[i] - u_tilde[i];
    lhs += (fu[i] - fut[i]) * d;
    high2 += d * d;
  }
  for (int j : split.low) {
    const std::size_t i = static_cast<std::size_t>(j);
    const double d = u[i] - u_tilde[i];
    low2 += d * d;
  }
  const double Uu = gl_energy_u(sys, u);
  const double Ut = gl_energy_u(sys, u_tilde);
  const double rhs = high2 * (-k.c1 + k.c2 * std::pow(Uu, k.gamma)) +
                     k.c3 * std::pow(std::sqrt(low2), k.p1) *
                         (1.0 + std::pow(Uu, k.p2) + std::pow(Ut, k.p2));
  return ProbeReport{lhs, rhs, lhs <= rhs + tol};
}

ProbeReport probe_lip(Gl& sys, const LhSplit& split, const std::vector<double>& ell,
                      const std::vector<double>& h, const std::vector<double>& h_tilde,
                      const LipConstants& k, double tol) {
  if (ell.size() != split.low.size() || h.size() != split.high.size() ||
      h_tilde.size() != split.high.size())
    throw ContractViolation("probe_lip: component lengths must match the split");
  const std::vector<double> u = recompose(ell, h, split, sys.n_coeffs());
  const std::vector<double> ut = recompose(ell, h_tilde, split, sys.n_coeffs());
  std::vector<double> fu, fut;
  sys.rhs(u, fu);
  sys.rhs(ut, fut);
  double lhs = 0.0;
  for (int j : split.low) {
    const std::size_t i = static_cast<std::size_t>(j);
    const double d = fu[i] - fut[i];
    lhs += d * d;
  }
  double hh = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = h[i] - h_tilde[i];
    hh += d * d;
  }
  const double Uu = gl_energy_u(sys, u);
  const double Ut = gl_energy_u(sys, ut);
  const double rhs = k.c4 * (1.0 + std::pow(Uu, k.p3) + std::pow(Ut, k.p3)) *
                     std::pow(std::sqrt(hh), k.p4);
  return ProbeReport{lhs, rhs, lhs <= rhs + tol};
}

// ---------------------------------------------------------------------------
// Reduced memory drift
// ---------------------------------------------------------------------------

GlReducedDrift::GlReducedDrift(std::shared_ptr<Gl> sys, GlForcing forcing,
                               std::size_t lookback_steps)
    : sys_(std::move(sys)), forcing_(std::move(forcing)), lookback_steps_(lookback_steps) {
  forcing_.validate(sys_->n_coeffs());
  split_ = LhSplit::from_forcing(forcing_, sys_->n_coeffs());
  split_.require_full_rank(forcing_);
  if (split_.d_low() == 0) throw ContractViolation("GlReducedDrift: empty low subspace");
}

void GlReducedDrift::eval_view(const HistoryView& x, double* out) const {
  if (x.dim != split_.d_low())
    throw ContractViolation("GlReducedDrift: history dimension must match the low subspace");
  const EllHistory ell = ell_history_from(x);
  const std::size_t L = std::min(lookback_steps_, ell.size() - 1);
  const std::vector<double> psi = psi_from_lookback(
      *sys_, split_, ell, std::vector<double>(split_.high.size(), 0.0), L);
  std::vector<double> state = psi;  // low entries are zero there
  for (std::size_t i = 0; i < split_.low.size(); ++i)
    state[static_cast<std::size_t>(split_.low[i])] = x.value(0, static_cast<int>(i));
  std::vector<double> f;
  sys_->rhs(state, f);
  for (std::size_t i = 0; i < split_.low.size(); ++i)
    out[i] = f[static_cast<std::size_t>(split_.low[i])];
}

// ---------------------------------------------------------------------------
// NSE vorticity core
// ---------------------------------------------------------------------------

struct Nse::Fft {
  fftw_plan fwd = nullptr;  // c2c forward (physical -> spectral)
  fftw_plan bwd = nullptr;  // c2c backward
  fftw_complex* buf = nullptr;
  int n = 0;

  explicit Fft(int grid) : n(grid) {
    buf = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
    fwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
  }
};

Nse::Nse(int n, double nu) : n_(n), nu_(nu) {
  if (n < 24) throw ContractViolation("Nse: grid must be at least 24 (cutoff >= 8 per axis)");
  if (!(nu > 0.0)) throw ContractViolation("Nse: nu must be positive");
  fft_ = std::make_unique<Fft>(n);
}

Nse::~Nse() = default;

double Nse::lambda(int i, int j) const {
  const double kx = static_cast<double>(signed_k(i));
  const double ky = static_cast<double>(signed_k(j));
  return kTwoPiSq * (kx * kx + ky * ky);
}

bool Nse::retained(int i, int j) const {
  return std::abs(signed_k(i)) <= kmax() && std::abs(signed_k(j)) <= kmax();
}

void Nse::enforce_symmetry(Cvec& omega) const {
  omega[0] = 0.0;  // mean-zero flow
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      if (!retained(i, j)) {
        omega[static_cast<std::size_t>(i) * n_ + j] = 0.0;
        continue;
      }
      const int mi = (n_ - i) % n_;
      const int mj = (n_ - j) % n_;
      const std::size_t a = static_cast<std::size_t>(i) * n_ + j;
      const std::size_t b = static_cast<std::size_t>(mi) * n_ + mj;
      if (b > a) {
        const std::complex<double> avg = 0.5 * (omega[a] + std::conj(omega[b]));
        omega[a] = avg;
        omega[b] = std::conj(avg);
      } else if (b == a) {
        omega[a] = std::complex<double>(omega[a].real(), 0.0);
      }
    }
}

namespace {

void nse_to_physical(fftw_complex* buf, const fftw_plan& bwd, const Cvec& spec) {
  std::memcpy(buf, spec.data(), sizeof(fftw_complex) * spec.size());
  fftw_execute(bwd);
}

}  // namespace

void Nse::advection(const Cvec& omega, Cvec& out) {
  const std::size_t sz = size();
  out.assign(sz, 0.0);
  static thread_local Cvec ux, uy, wx, wy;
  ux.resize(sz);
  uy.resize(sz);
  wx.resize(sz);
  wy.resize(sz);
  const std::complex<double> I(0.0, 1.0);
  const double two_pi = 6.283185307179586476925286766559;

  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * n_ + j;
      if (!retained(i, j) || (i == 0 && j == 0)) {
        ux[idx] = uy[idx] = wx[idx] = wy[idx] = 0.0;
        continue;
      }
      const double kx = static_cast<double>(signed_k(i));
      const double ky = static_cast<double>(signed_k(j));
      const double lam = lambda(i, j);
      const std::complex<double> psi = omega[idx] / lam;  // -Lap psi = omega
      ux[idx] = I * two_pi * ky * psi;                    // u = (d_y psi, -d_x psi)
      uy[idx] = -I * two_pi * kx * psi;
      wx[idx] = I * two_pi * kx * omega[idx];
      wy[idx] = I * two_pi * ky * omega[idx];
    }

  // physical products
  static thread_local std::vector<double> pux, puy, pwx, pwy;
  auto to_phys = [&](const Cvec& s, std::vector<double>& p) {
    nse_to_physical(fft_->buf, fft_->bwd, s);
    p.resize(size());
    for (std::size_t q = 0; q < size(); ++q) p[q] = fft_->buf[q][0];
  };
  to_phys(ux, pux);
  to_phys(uy, puy);
  to_phys(wx, pwx);
  to_phys(wy, pwy);

  for (std::size_t q = 0; q < sz; ++q) {
    fft_->buf[q][0] = -(pux[q] * pwx[q] + puy[q] * pwy[q]);
    fft_->buf[q][1] = 0.0;
  }
  fftw_execute(fft_->fwd);
  const double inv = 1.0 / static_cast<double>(sz);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * n_ + j;
      if (!retained(i, j) || (i == 0 && j == 0)) {
        out[idx] = 0.0;
        continue;
      }
      out[idx] = std::complex<double>(fft_->buf[idx][0], fft_->buf[idx][1]) * inv;
    }
}

void Nse::rhs(const Cvec& omega, Cvec& out) {
  advection(omega, out);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * n_ + j;
      out[idx] -= nu_ * lambda(i, j) * omega[idx];
    }
}

void Nse::step(Cvec& omega, double dt, const Cvec& noise) {
  static thread_local Cvec adv;
  advection(omega, adv);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * n_ + j;
      omega[idx] = (omega[idx] + dt * adv[idx] + (noise.empty() ? 0.0 : noise[idx])) /
                   (1.0 + dt * nu_ * lambda(i, j));
    }
  enforce_symmetry(omega);
  for (const auto& v : omega)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw BlowupError("nse: non-finite vorticity state", 0, 0.0);
}

void Nse::rk4_advection(Cvec& omega, double dt) {
  const std::size_t sz = size();
  Cvec k1(sz), k2(sz), k3(sz), k4(sz), tmp(sz);
  advection(omega, k1);
  for (std::size_t q = 0; q < sz; ++q) tmp[q] = omega[q] + 0.5 * dt * k1[q];
  advection(tmp, k2);
  for (std::size_t q = 0; q < sz; ++q) tmp[q] = omega[q] + 0.5 * dt * k2[q];
  advection(tmp, k3);
  for (std::size_t q = 0; q < sz; ++q) tmp[q] = omega[q] + dt * k3[q];
  advection(tmp, k4);
  for (std::size_t q = 0; q < sz; ++q)
    omega[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
  enforce_symmetry(omega);
}

double Nse::energy(const Cvec& omega) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      if (i == 0 && j == 0) continue;
      const std::size_t idx = static_cast<std::size_t>(i) * n_ + j;
      s += std::norm(omega[idx]) / lambda(i, j);
    }
  return s;
}

double Nse::enstrophy(const Cvec& omega) const {
  double s = 0.0;
  for (const auto& v : omega) s += std::norm(v);
  return s;
}

int NseForcing::n0() const {
  // Largest N such that every lattice point 0 < |k| < N carries forcing.
  auto forced = [this](int kx, int ky) {
    for (const auto& [k, s] : modes) {
      if (s <= 0.0) continue;
      if ((k[0] == kx && k[1] == ky) || (k[0] == -kx && k[1] == -ky)) return true;
    }
    return false;
  };
  int N = 1;
  while (true) {
    bool all = true;
    for (int kx = -N; kx <= N && all; ++kx)
      for (int ky = -N; ky <= N && all; ++ky) {
        if (kx == 0 && ky == 0) continue;
        if (static_cast<double>(kx * kx + ky * ky) < static_cast<double>(N) * N && !forced(kx, ky))
          all = false;
      }
    if (!all) break;
    ++N;
  }
  return N - 1;
}

double NseForcing::trace_gg() const {
  double s = 0.0;
  for (const auto& [k, sig] : modes) s += 2.0 * sig * sig;  // +/- pair
  return s;
}

Cvec nse_noise(const Nse& sys, const NseForcing& f, double dt, std::uint64_t seed,
               std::uint64_t stream, std::uint64_t step_index) {
  Cvec out(sys.size(), 0.0);
  const Philox gen(seed, stream);
  const double sd = std::sqrt(0.5 * dt);
  std::uint64_t pos = step_index * 2 * f.modes.size();
  const int n = sys.n();
  for (const auto& [k, sig] : f.modes) {
    const int i = ((k[0] % n) + n) % n;
    const int j = ((k[1] % n) + n) % n;
    const int mi = (n - i) % n;
    const int mj = (n - j) % n;
    const std::complex<double> xi(sig * sd * gen.normal_at(pos), sig * sd * gen.normal_at(pos + 1));
    pos += 2;
    out[static_cast<std::size_t>(i) * n + j] += xi;
    out[static_cast<std::size_t>(mi) * n + mj] += std::conj(xi);
  }
  out[0] = 0.0;
  return out;
}

NseSyncResult nse_sync_experiment(Nse& sys, const NseForcing& f, const Cvec& omega0, double dt,
                                  double T, std::uint64_t seed, const Cvec& high0_a,
                                  const Cvec& high0_b) {
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(T / dt));
  const int n = sys.n();

  // forced-index mask
  std::vector<char> is_low(sys.size(), 0);
  for (const auto& [k, sig] : f.modes) {
    if (sig <= 0.0) continue;
    const int i = ((k[0] % n) + n) % n;
    const int j = ((k[1] % n) + n) % n;
    is_low[static_cast<std::size_t>(i) * n + j] = 1;
    is_low[static_cast<std::size_t>((n - i) % n) * n + (n - j) % n] = 1;
  }

  Cvec u = omega0;
  sys.enforce_symmetry(u);
  Cvec ha = high0_a, hb = high0_b;
  // high copies carry zeros on the forced set
  for (std::size_t q = 0; q < sys.size(); ++q)
    if (is_low[q]) {
      ha[q] = 0.0;
      hb[q] = 0.0;
    }

  auto slave_step = [&](Cvec& h) {
    Cvec state = u;
    for (std::size_t q = 0; q < sys.size(); ++q)
      if (!is_low[q]) state[q] = h[q];
    sys.step(state, dt, Cvec{});
    for (std::size_t q = 0; q < sys.size(); ++q) h[q] = is_low[q] ? 0.0 : state[q];
  };

  NseSyncResult out;
  auto gap = [&]() {
    double s = 0.0;
    for (std::size_t q = 0; q < sys.size(); ++q) s += std::norm(ha[q] - hb[q]);
    return std::sqrt(s);
  };
  out.times.push_back(0.0);
  out.gaps.push_back(gap());
  for (std::size_t k = 0; k < n_steps; ++k) {
    slave_step(ha);
    slave_step(hb);
    sys.step(u, dt, nse_noise(sys, f, dt, seed, 0, k));
    out.times.push_back(static_cast<double>(k + 1) * dt);
    out.gaps.push_back(gap());
  }

  const std::size_t n_windows = 8;
  const std::size_t w = out.gaps.size() / n_windows;
  if (w > 0) {
    int grow_run = 0;
    double prev = -1.0;
    for (std::size_t j = 0; j < n_windows; ++j) {
      double m = 0.0;
      for (std::size_t i = j * w; i < (j + 1) * w; ++i) m += out.gaps[i];
      m /= static_cast<double>(w);
      if (prev >= 0.0 && m > prev) {
        if (++grow_run >= 3) out.diverged = true;
      } else {
        grow_run = 0;
      }
      prev = m;
    }
  }
  return out;
}

}  // namespace memsde::spde
