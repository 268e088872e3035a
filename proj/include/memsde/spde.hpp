#ifndef MEMSDE_SPDE_HPP
#define MEMSDE_SPDE_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "memsde/drift.hpp"
#include "memsde/pathspace.hpp"

namespace memsde::spde {

// ---------------------------------------------------------------------------
// 1D stochastic Ginzburg-Landau on [0,1], spectral Galerkin in the
// L2-orthonormal real Fourier basis {1, √2 sin(2πx), √2 cos(2πx), ...}.
// Coefficient j=0 is the constant mode; j=2m-1 / j=2m are the sin/cos pair of
// wavenumber m, m = 1..cutoff.
// ---------------------------------------------------------------------------

/// Spectral workspace for du = [nu Lap u + u - u^3] dt + dW.  Owns FFT plans
/// and scratch (collocation grid padded far past the cubic aliasing range),
/// so instances are not copyable and stepping is single-threaded.
class Gl {
public:
  Gl(int cutoff, double nu, bool cubic_enabled = true);
  ~Gl();
  Gl(const Gl&) = delete;
  Gl& operator=(const Gl&) = delete;

  int cutoff() const { return cutoff_; }
  int n_coeffs() const { return 2 * cutoff_ + 1; }
  double nu() const { return nu_; }
  bool cubic_enabled() const { return cubic_enabled_; }
  int grid_points() const { return m_; }

  int wavenumber(int j) const { return (j + 1) / 2; }
  double lambda(int j) const;

  /// Full right-hand side F(u) = nu Lap u + u - u^3 on coefficients.
  void rhs(const std::vector<double>& c, std::vector<double>& out);
  /// Explicit part u - u^3 (just u with the cubic disabled).
  void reaction(const std::vector<double>& c, std::vector<double>& out);
  /// Semi-implicit Euler step: (c + dt*reaction + noise) / (1 + dt*nu*lambda).
  void step(std::vector<double>& c, double dt, const std::vector<double>& noise);

  /// Collocation values on the padded grid (for Parseval cross-checks).
  std::vector<double> to_physical(const std::vector<double>& c);

private:
  void cube(const std::vector<double>& c, std::vector<double>& out);

  int cutoff_;
  double nu_;
  bool cubic_enabled_;
  int m_;  // collocation points, power of two beyond the 4*cutoff alias bound
  struct Fft;
  std::unique_ptr<Fft> fft_;
};

/// Forcing amplitudes per coefficient; only finitely many positive.
struct GlForcing {
  std::vector<double> sigma;  // size n_coeffs, entries >= 0

  /// Largest N with every wavenumber below N fully forced (sin and cos).
  int n0() const;
  /// Largest wavenumber carrying any forcing (everything beyond is quiet).
  int n1() const;
  double trace_gg() const;  // sum of sigma^2
  void validate(int n_coeffs) const;
};

/// Index split of the coefficient vector into forced lows and slaved highs.
struct LhSplit {
  std::vector<int> low;   // L indices, ascending
  std::vector<int> high;  // complement, ascending

  static LhSplit from_forcing(const GlForcing& f, int n_coeffs);
  int d_low() const { return static_cast<int>(low.size()); }
  /// Theorem PDEErg needs Pi_l G of full rank: every low index must be forced.
  void require_full_rank(const GlForcing& f) const;
};

/// Split a coefficient vector; recomposition is bit-exact.
void split_lh(const std::vector<double>& state, const LhSplit& split, std::vector<double>& ell,
              std::vector<double>& high);
std::vector<double> recompose(const std::vector<double>& ell, const std::vector<double>& high,
                              const LhSplit& split, int n_coeffs);

/// U(u) = ||u||^2 + ||grad u||^2 = sum (1+lambda_j) c_j^2.
double gl_energy_u(const Gl& sys, const std::vector<double>& c);
/// U-norm of a coefficient difference, sqrt(sum (1+lambda) v^2).
double gl_u_norm(const Gl& sys, const std::vector<double>& v);

/// Forcing increments for one step: sigma_j sqrt(dt) xi with xi drawn from the
/// (seed, stream) Philox stream at the given step index.
std::vector<double> gl_noise(const GlForcing& f, int n_coeffs, double dt, std::uint64_t seed,
                             std::uint64_t stream, std::uint64_t step_index);

/// Dense trajectory of coefficient states, one row per step (row 0 = initial).
struct GlTrajectory {
  int n_coeffs = 0;
  double dt = 0.0;
  std::vector<double> states;  // (n_steps+1) * n_coeffs

  std::size_t n_steps() const {
    return n_coeffs > 0 ? states.size() / static_cast<std::size_t>(n_coeffs) - 1 : 0;
  }
  const double* row(std::size_t k) const {
    return states.data() + k * static_cast<std::size_t>(n_coeffs);
  }
};

/// Run the forced-dissipative GL dynamics from u0, recording every step.
/// Throws BlowupError on non-finite states.
GlTrajectory gl_simulate(Gl& sys, const GlForcing& f, const std::vector<double>& u0, double dt,
                         std::size_t n_steps, std::uint64_t seed, std::uint64_t stream = 0);

/// One IMEX step with an explicit noise vector; rejects noise on unforced
/// indices (the degenerate-forcing contract) and non-finite states.
void gl_step_checked(Gl& sys, const GlForcing& f, std::vector<double>& state, double dt,
                     const std::vector<double>& noise);

// ---------------------------------------------------------------------------
// Reconstruction of the slaved high modes from the low-mode past
// ---------------------------------------------------------------------------

/// Chronological low-mode history rows; the last row is time 0.
struct EllHistory {
  int d_low = 0;
  double dt = 0.0;
  std::vector<double> rows;  // n * d_low

  std::size_t size() const { return d_low > 0 ? rows.size() / static_cast<std::size_t>(d_low) : 0; }
  const double* row(std::size_t i) const {
    return rows.data() + i * static_cast<std::size_t>(d_low);
  }
};

EllHistory ell_history_from(const GlTrajectory& traj, const LhSplit& split, std::size_t end_step,
                            std::size_t n_rows);
EllHistory ell_history_from(const HistoryView& view);

/// Integrate the slaved equation dh/dt = Pi_h F(ell(t) + h) from h0 at
/// -lookback_steps*dt to 0 with ell read from the history; returns the full
/// coefficient vector with low entries zeroed.
std::vector<double> psi_from_lookback(Gl& sys, const LhSplit& split, const EllHistory& ell,
                                      const std::vector<double>& h0_high,
                                      std::size_t lookback_steps);

struct PsiResult {
  std::vector<double> psi;        // full coefficient vector, low entries zero
  std::size_t lookback_steps = 0; // final lookback used
  bool converged = false;
  double last_delta = 0.0;        // U-norm change at the last doubling
};

/// Double the lookback until h(0) changes by less than psi_tol in U-norm.
/// A non-converged result reports the final delta (likely threshold failure).
PsiResult psi_converged(Gl& sys, const LhSplit& split, const EllHistory& ell, double psi_tol,
                        std::size_t initial_lookback = 64,
                        std::size_t max_lookback = 16384);

struct SyncResult {
  std::vector<double> times;
  std::vector<double> gaps;  // U-norm distance of the two slaved copies
  std::optional<double> fitted_rate;
  bool diverged = false;  // gap grew over 3 consecutive windows
};

/// Drive one GL trajectory and slave two high-mode copies from different
/// initial data to its low-mode path; records the contraction of their gap.
SyncResult gl_sync_experiment(Gl& sys, const GlForcing& f, const std::vector<double>& u0,
                              double dt, double T, std::uint64_t seed,
                              const std::vector<double>& h0_a, const std::vector<double>& h0_b);

struct FactorizationSeries {
  std::vector<double> times;
  std::vector<double> residuals;  // U-norm of Pi_h u(t) - Psi(pi_t Pi_l u)
};

/// Compare reconstructed high modes against the truth along a trajectory.
FactorizationSeries factorization_residual(Gl& sys, const LhSplit& split,
                                           const GlTrajectory& traj, std::size_t lookback_steps,
                                           std::size_t stride);

// ---------------------------------------------------------------------------
// Assumption probes (constants supplied per equation; GL defaults provided)
// ---------------------------------------------------------------------------

struct DissipativeConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double gamma = 1.0;
  double p1 = 2.0;
  double p2 = 2.0;
};

struct LipConstants {
  double c4 = 0.0;
  double p3 = 2.0;
  double p4 = 2.0;
};

/// Defaults for the GL computation: c1 pinned from the high-mode linear term
/// (4 pi^2 nu N0^2 - 1), cubic cross term absorbed into c3 with p2 = 2.
DissipativeConstants gl_dissipative_constants(double nu, int n0);
LipConstants gl_lip_constants();

struct ProbeReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

/// <F(u)-F(u~), Pi_h(u-u~)>  <=  ||Pi_h d||^2 (-c1 + c2 U(u)^gamma)
///                             + c3 ||Pi_l d||^p1 (1 + U(u)^p2 + U(u~)^p2).
ProbeReport probe_dissipative(Gl& sys, const LhSplit& split, const std::vector<double>& u,
                              const std::vector<double>& u_tilde,
                              const DissipativeConstants& k, double tol = 1e-9);

/// |Pi_l F(l+h) - Pi_l F(l+h~)|^2 <= c4 (1 + U^p3 + U~^p3) ||h-h~||^p4.
ProbeReport probe_lip(Gl& sys, const LhSplit& split, const std::vector<double>& ell,
                      const std::vector<double>& h, const std::vector<double>& h_tilde,
                      const LipConstants& k, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Reduced memory drift: the bridge that turns the SPDE into the scalar-form
// memory SDE on the forced subspace.
// ---------------------------------------------------------------------------

/// a(x) = Pi_l F(x(0) + Psi(x)) with Psi reconstructed from the low-mode past
/// by slaved integration over a fixed lookback.  Owns FFT scratch, so
/// evaluation is single-threaded (the spde concurrency model).
class GlReducedDrift : public MemoryDrift {
public:
  GlReducedDrift(std::shared_ptr<Gl> sys, GlForcing forcing, std::size_t lookback_steps);

  int dim() const override { return split_.d_low(); }
  void eval_view(const HistoryView& x, double* out) const override;
  const LhSplit& split() const { return split_; }

private:
  std::shared_ptr<Gl> sys_;
  GlForcing forcing_;
  LhSplit split_;
  std::size_t lookback_steps_;
};

// ---------------------------------------------------------------------------
// 2D stochastic Navier-Stokes, vorticity form, pseudo-spectral with the 2/3
// dealiasing rule on an n x n torus grid.
// ---------------------------------------------------------------------------

using Cvec = std::vector<std::complex<double>>;

class Nse {
public:
  Nse(int n, double nu);
  ~Nse();
  Nse(const Nse&) = delete;
  Nse& operator=(const Nse&) = delete;

  int n() const { return n_; }
  double nu() const { return nu_; }
  int kmax() const { return n_ / 3; }  // retained band per axis
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  int signed_k(int idx) const { return idx <= n_ / 2 ? idx : idx - n_; }
  double lambda(int i, int j) const;
  bool retained(int i, int j) const;

  /// -(u . grad) omega with Biot-Savart velocity, dealiased.
  void advection(const Cvec& omega, Cvec& out);
  /// nu Lap omega + advection.
  void rhs(const Cvec& omega, Cvec& out);
  /// IMEX step; enforces zero mean, reality and the dealiasing mask.
  void step(Cvec& omega, double dt, const Cvec& noise);
  /// Classical RK4 on the advection term alone (inviscid, unforced).
  void rk4_advection(Cvec& omega, double dt);

  double energy(const Cvec& omega) const;     // sum |u_k|^2
  double enstrophy(const Cvec& omega) const;  // sum |omega_k|^2

  void enforce_symmetry(Cvec& omega) const;

private:
  int n_;
  double nu_;
  struct Fft;
  std::unique_ptr<Fft> fft_;
};

/// Forced wavevectors (one representative per +/- pair) with amplitudes.
struct NseForcing {
  std::vector<std::pair<std::array<int, 2>, double>> modes;

  int n0() const;  // largest N with the whole shell 0 < |k| < N forced
  double trace_gg() const;
};

/// Hermitian forcing increments for one step.
Cvec nse_noise(const Nse& sys, const NseForcing& f, double dt, std::uint64_t seed,
               std::uint64_t stream, std::uint64_t step_index);

struct NseSyncResult {
  std::vector<double> times;
  std::vector<double> gaps;  // enstrophy-norm distance of the two slaved copies
  bool diverged = false;
};

/// Two-copy slaved high-mode experiment for the vorticity dynamics: both
/// copies see the driven trajectory's forced modes, their unforced modes start
/// apart and must contract when nu is large enough.
NseSyncResult nse_sync_experiment(Nse& sys, const NseForcing& f, const Cvec& omega0, double dt,
                                  double T, std::uint64_t seed, const Cvec& high0_a,
                                  const Cvec& high0_b);

}  // namespace memsde::spde

#endif
