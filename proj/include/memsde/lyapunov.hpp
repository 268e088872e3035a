#ifndef MEMSDE_LYAPUNOV_HPP
#define MEMSDE_LYAPUNOV_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "memsde/drift.hpp"
#include "memsde/pathspace.hpp"

namespace memsde {

/// Lyapunov functional with the constants of the drift inequality
/// h(x) < C1 - C2 V(x)^gamma, |f(x)| <= C3 V(x)^delta, V >= C0 |x(0)|^l.
/// V may return +infinity (the sentinel for a diverged functional);
/// aggregates refuse to average over it.
struct LyapunovSpec {
  std::function<double(const HistoryView&)> eval_V;
  double C0 = 1.0;
  double l = 2.0;
  double C1 = 1.0;
  double C2 = 1.0;
  double gamma = 1.0;
  double delta = 0.5;
  double C3 = 2.0;

  void validate() const;
};

enum class ExampleV { ex61, ex62 };

/// V for the worked drift examples: x(0)^2 + Psi(x)^2 with the respective
/// kernel functional; the ex62 variant returns +inf when PsiHat diverges.
double eval_V_example(ExampleV which, const HistoryView& x);
double eval_V_example(ExampleV which, const HistoryPath& x);

/// LyapunovSpec for the worked examples with their published constants
/// (ex61: C1=C2=1; ex62: C1=1, C2=2; both gamma=1, delta=1/2).
LyapunovSpec example_spec(ExampleV which);

struct GeneratorEstimate {
  double h_estimate = 0.0;
  double h_std_error = 0.0;
  double f2_estimate = 0.0;  // conditional quadratic variation (dV)^2/dt
  double f2_std_error = 0.0;
  std::size_t replicas = 0;
  std::size_t excluded = 0;
};

/// Monte Carlo estimate of the Ito drift h(x) of V along the dynamics:
/// average of [V(pi_dt X) - V(x)] / dt over m one-step continuations with
/// independent noise streams.  Replicas with non-finite V are excluded; more
/// than 10% exclusions throws UnreliableEstimate.
GeneratorEstimate generator_drift_estimate(const MemoryDrift& a, const LyapunovSpec& spec,
                                           const HistoryPath& x, std::size_t m, double dt_probe,
                                           std::uint64_t seed);

/// V(pi_t traj) at every future grid time t >= 0.
std::vector<double> v_series(const std::function<double(const HistoryView&)>& V,
                             const FullPath& traj);

/// Running averages (1/T) int_0^T V^gamma dt over expanding windows;
/// element k covers [0, k*dt].
std::vector<double> time_average_v(const std::vector<double>& v, double dt, double gamma);

struct MomentSeries {
  std::vector<double> window_centers;
  std::vector<double> window_means;  // per-window mean of V^kappa
  double slope = 0.0;                // least-squares trend across windows
  double slope_ci_lo = 0.0;          // 95% bootstrap interval
  double slope_ci_hi = 0.0;
};

/// Windowed moments E[V^kappa] with a bootstrap trend interval; a slope CI
/// containing 0 is the boundedness proxy for stationary runs.
MomentSeries moment_series(const std::vector<double>& v, double dt, double kappa,
                           std::size_t n_windows, std::uint64_t seed = 0);

enum class GrowthForm {
  poly_rho,    // envelope of |values|, for sup V/(1+|t|^rho)
  fluc_kappa,  // envelope of max(values, 0), for the fluctuation excess
};

struct GrowthFit {
  double exponent = 0.0;   // slope of log(envelope) vs log(1+|t|)
  double sup_ratio = 0.0;  // max envelope / (1+|t|^kappa)
  std::vector<double> envelope;
};

/// Fit the growth exponent of the max-so-far envelope of a series and report
/// the sup of envelope/(1+|t|^kappa).
GrowthFit growth_exponent(const std::vector<double>& times, const std::vector<double>& values,
                          GrowthForm form, double kappa);

}  // namespace memsde

#endif
