#ifndef MEMSDE_PATHSPACE_HPP
#define MEMSDE_PATHSPACE_HPP

#include <cstddef>
#include <vector>

#include "memsde/errors.hpp"

namespace memsde {

// Values of a sampled path before its stored window.
enum class Extension { constant, zero };

/// Non-owning view of a uniformly sampled past.
///
/// Sample k (k = 0 .. n-1) lives at time origin_time - k*dt and component c is
/// data[k*stride + c].  A negative stride lets a chronologically stored buffer
/// be read backwards without copying.  Lags at or beyond n are produced by the
/// extension policy: `constant` repeats the oldest stored sample, `zero` is 0.
struct HistoryView {
  const double* data = nullptr;
  std::ptrdiff_t stride = 0;  // in doubles, between consecutive lags
  std::size_t n = 0;          // stored samples
  int dim = 1;
  double dt = 0.0;
  Extension extension = Extension::constant;
  double origin_time = 0.0;

  double value(std::size_t lag, int c) const {
    if (lag < n) return data[static_cast<std::ptrdiff_t>(lag) * stride + c];
    if (extension == Extension::constant)
      return data[static_cast<std::ptrdiff_t>(n - 1) * stride + c];
    return 0.0;
  }
  // Time span covered by stored samples: [origin_time - window(), origin_time].
  double window() const { return (n > 0 ? static_cast<double>(n - 1) : 0.0) * dt; }
};

/// Uniformly sampled past trajectory: samples[k] is the value at
/// origin_time - k*dt, flattened row-major over components.
struct HistoryPath {
  int dim = 1;
  double dt = 1.0;
  std::vector<double> samples;  // n*dim doubles, lag-major
  Extension extension = Extension::constant;
  double origin_time = 0.0;

  std::size_t size() const { return dim > 0 ? samples.size() / static_cast<std::size_t>(dim) : 0; }
  double value(std::size_t lag, int c = 0) const { return view().value(lag, c); }
  HistoryView view() const {
    return HistoryView{samples.data(), dim, size(), dim, dt, extension, origin_time};
  }
  // Throws ContractViolation if an invariant fails (n >= 1, dt > 0, finite samples).
  void validate() const;
};

/// Uniformly sampled future on [0, T]: samples[k] is the value at k*dt.
struct FuturePath {
  int dim = 1;
  double dt = 1.0;
  std::vector<double> samples;  // n*dim doubles, step-major

  std::size_t size() const { return dim > 0 ? samples.size() / static_cast<std::size_t>(dim) : 0; }
  double value(std::size_t step, int c = 0) const {
    return samples[step * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
  }
  double horizon() const { return (size() > 0 ? static_cast<double>(size() - 1) : 0.0) * dt; }
  void validate() const;
};

/// A past and a future glued at time 0; past.samples[0] == future.samples[0].
struct FullPath {
  HistoryPath past;
  FuturePath future;

  void validate() const;
  // Path value at grid index i relative to the earliest past sample.
  // Convenience for tests; heavy code paths use flatten().
  double at_step(std::ptrdiff_t step_from_zero, int c = 0) const;
};

/// Chronological copy of a FullPath: earliest past sample first, shared time-0
/// sample stored once.  Index of time 0 is past.size()-1.
std::vector<double> flatten(const FullPath& p);

/// Chronological sample buffer over [past window, future horizon] exposing
/// zero-copy backward views at any future step.  Solvers write into slot(k);
/// analysis code wraps an existing FullPath.
class PathBuffer {
public:
  PathBuffer(const HistoryPath& past, std::size_t future_steps);
  explicit PathBuffer(const FullPath& p);

  // Storage row of X at future step k (step 0 is time 0).
  double* slot(std::size_t step) {
    return data_.data() + (past_n_ - 1 + step) * static_cast<std::size_t>(dim_);
  }
  const double* slot(std::size_t step) const {
    return data_.data() + (past_n_ - 1 + step) * static_cast<std::size_t>(dim_);
  }
  // History as seen from future step k, reading the buffer backwards.
  HistoryView view_at(std::size_t step) const {
    HistoryView v;
    v.data = slot(step);
    v.stride = -dim_;
    v.n = past_n_ + step;
    v.dim = dim_;
    v.dt = dt_;
    v.extension = extension_;
    v.origin_time = static_cast<double>(step) * dt_;
    return v;
  }

  std::size_t past_n() const { return past_n_; }
  std::size_t future_steps() const { return future_steps_; }
  int dim() const { return dim_; }
  double dt() const { return dt_; }

private:
  std::vector<double> data_;
  std::size_t past_n_ = 0;
  std::size_t future_steps_ = 0;
  int dim_ = 1;
  double dt_ = 0.0;
  Extension extension_ = Extension::constant;
};

struct WeightedNormParams {
  double rho = 1.0;
};

/// Constants of the Lyapunov drift inequality h < C1 - C2 V^gamma.
struct FluctuationConstants {
  double C1 = 1.0;
  double C2 = 1.0;
  double gamma = 1.0;
};

/// Running deviation of the integral of V^gamma from its linear budget,
/// F(t) = |int_0^t V^gamma ds| - (C1/C2)|t| on grid times t <= 0.
/// Values are signed; value(0) == 0 by construction.
struct FluctuationSeries {
  std::vector<double> times;   // nonpositive, t_k = -k*dt
  std::vector<double> values;  // signed excess over the budget
  FluctuationConstants constants;
};

struct NiceLevel {
  double sup = 0.0;  // finite-window supremum of the path/Lyapunov/fluctuation ratio
  int level = 1;     // smallest integer strictly above sup
};

/// History of p seen from time t (grid-snapped, round half away from zero).
/// The result runs from t back to the earliest stored past sample and keeps
/// p's extension policy.  Throws OutOfRangeError if t is outside
/// [-past window, future horizon].
HistoryPath shift_view(const FullPath& p, double t);

/// Glue x and y at time 0.  Endpoints must match exactly (no snapping), as
/// must dim and dt; otherwise throws ContractViolation.
FullPath concat(const HistoryPath& x, const FuturePath& y);

/// sup_k |x(t_k)| / (1 + |t_k|^rho) over the stored grid plus the analytic
/// supremum the extension policy contributes beyond the window.
double weighted_norm(const HistoryView& x, double rho);
double weighted_norm(const HistoryPath& x, double rho);

/// Trapezoidal accumulation of F(t_k) from V-values v[k] at t_k = -k*dt.
/// The one-panel recurrence F(t_{k+1}) = F(t_k) + panel - (C1/C2)*dt holds
/// machine-exactly because values are built by that recurrence.
FluctuationSeries fluctuation_series(const std::vector<double>& v, double dt, double C1,
                                     double C2, double gamma);

/// Finite-window membership level for the nice-path sets: the sup over grid
/// times of |x(t)|/(1+|t|^rho) + (|V| + F^+)/(1+|t|^r) where F^+ is the
/// positive part of the fluctuation series (the side the growth bounds
/// control; the signed series drifts linearly downward whenever V^gamma
/// averages strictly below C1/C2, which would make every level infinite).
NiceLevel nice_level(const HistoryPath& x, const std::vector<double>& v, double rho, double r,
                     double C1, double C2, double gamma);

// Round-half-away-from-zero snap of t to a grid index.
std::ptrdiff_t snap_to_grid(double t, double dt);

}  // namespace memsde

#endif
