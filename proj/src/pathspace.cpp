#include "memsde/pathspace.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace memsde {

namespace {

double euclid(const double* v, int dim) {
  if (dim == 1) return std::abs(v[0]);
  double s = 0.0;
  for (int c = 0; c < dim; ++c) s += v[c] * v[c];
  return std::sqrt(s);
}

double euclid_at(const HistoryView& x, std::size_t lag) {
  if (x.dim == 1) return std::abs(x.value(lag, 0));
  double s = 0.0;
  for (int c = 0; c < x.dim; ++c) {
    double v = x.value(lag, c);
    s += v * v;
  }
  return std::sqrt(s);
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw ContractViolation(std::string(what) + ": non-finite sample");
}

}  // namespace

std::ptrdiff_t snap_to_grid(double t, double dt) {
  double q = t / dt;
  // round half away from zero, symmetric under time reflection
  return static_cast<std::ptrdiff_t>(q >= 0.0 ? std::floor(q + 0.5) : std::ceil(q - 0.5));
}

void HistoryPath::validate() const {
  if (dim < 1) throw ContractViolation("HistoryPath: dim must be positive");
  if (!(dt > 0.0)) throw ContractViolation("HistoryPath: dt must be positive");
  if (samples.empty() || samples.size() % static_cast<std::size_t>(dim) != 0)
    throw ContractViolation("HistoryPath: need at least one full sample row");
  check_finite(samples, "HistoryPath");
}

void FuturePath::validate() const {
  if (dim < 1) throw ContractViolation("FuturePath: dim must be positive");
  if (!(dt > 0.0)) throw ContractViolation("FuturePath: dt must be positive");
  if (samples.empty() || samples.size() % static_cast<std::size_t>(dim) != 0)
    throw ContractViolation("FuturePath: need at least one full sample row");
  check_finite(samples, "FuturePath");
}

void FullPath::validate() const {
  past.validate();
  future.validate();
  if (past.dim != future.dim) throw ContractViolation("FullPath: dim mismatch");
  if (past.dt != future.dt) throw ContractViolation("FullPath: dt mismatch");
  for (int c = 0; c < past.dim; ++c)
    if (past.samples[static_cast<std::size_t>(c)] != future.samples[static_cast<std::size_t>(c)])
      throw ContractViolation("FullPath: past and future disagree at time 0");
}

double FullPath::at_step(std::ptrdiff_t step_from_zero, int c) const {
  if (step_from_zero >= 0)
    return future.value(static_cast<std::size_t>(step_from_zero), c);
  std::size_t lag = static_cast<std::size_t>(-step_from_zero);
  return past.view().value(lag, c);
}

std::vector<double> flatten(const FullPath& p) {
  const int dim = p.past.dim;
  const std::size_t np = p.past.size();
  const std::size_t nf = p.future.size();
  std::vector<double> out((np + nf - 1) * static_cast<std::size_t>(dim));
  for (std::size_t k = 0; k < np; ++k)
    for (int c = 0; c < dim; ++c)
      out[(np - 1 - k) * dim + static_cast<std::size_t>(c)] = p.past.value(k, c);
  for (std::size_t k = 1; k < nf; ++k)
    for (int c = 0; c < dim; ++c)
      out[(np - 1 + k) * dim + static_cast<std::size_t>(c)] = p.future.value(k, c);
  return out;
}

PathBuffer::PathBuffer(const HistoryPath& past, std::size_t future_steps) {
  past.validate();
  dim_ = past.dim;
  dt_ = past.dt;
  extension_ = past.extension;
  past_n_ = past.size();
  future_steps_ = future_steps;
  data_.resize((past_n_ + future_steps) * static_cast<std::size_t>(dim_));
  for (std::size_t k = 0; k < past_n_; ++k)
    for (int c = 0; c < dim_; ++c)
      data_[(past_n_ - 1 - k) * dim_ + static_cast<std::size_t>(c)] = past.value(k, c);
}

PathBuffer::PathBuffer(const FullPath& p) : PathBuffer(p.past, p.future.size() - 1) {
  p.validate();
  for (std::size_t k = 1; k < p.future.size(); ++k)
    for (int c = 0; c < dim_; ++c) slot(k)[c] = p.future.value(k, c);
}

HistoryPath shift_view(const FullPath& p, double t) {
  p.validate();
  const double dt = p.past.dt;
  const int dim = p.past.dim;
  const std::ptrdiff_t k0 = snap_to_grid(t, dt);
  const std::ptrdiff_t past_n = static_cast<std::ptrdiff_t>(p.past.size());
  const std::ptrdiff_t fut_n = static_cast<std::ptrdiff_t>(p.future.size());
  if (k0 > fut_n - 1)
    throw OutOfRangeError("shift_view: t beyond the stored future horizon");
  if (k0 < -(past_n - 1))
    throw OutOfRangeError("shift_view: t before the stored past window");

  const std::ptrdiff_t n = k0 + past_n;  // samples from t back to earliest past point
  HistoryPath h;
  h.dim = dim;
  h.dt = dt;
  h.extension = p.past.extension;
  h.origin_time = static_cast<double>(k0) * dt;
  h.samples.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const std::ptrdiff_t step = k0 - k;  // grid index relative to time 0
    for (int c = 0; c < dim; ++c)
      h.samples[static_cast<std::size_t>(k) * dim + static_cast<std::size_t>(c)] =
          p.at_step(step, c);
  }
  return h;
}

FullPath concat(const HistoryPath& x, const FuturePath& y) {
  x.validate();
  y.validate();
  if (x.dim != y.dim) throw ContractViolation("concat: dim mismatch");
  if (x.dt != y.dt) throw ContractViolation("concat: dt mismatch");
  for (int c = 0; c < x.dim; ++c)
    if (x.samples[static_cast<std::size_t>(c)] != y.samples[static_cast<std::size_t>(c)])
      throw ContractViolation("concat: endpoint mismatch at time 0 (no snapping)");
  return FullPath{x, y};
}

double weighted_norm(const HistoryView& x, double rho) {
  if (!(rho > 0.0)) throw ContractViolation("weighted_norm: rho must be positive");
  double best = 0.0;
  for (std::size_t k = 0; k < x.n; ++k) {
    const double t = static_cast<double>(k) * x.dt;
    const double r = euclid_at(x, k) / (1.0 + std::pow(t, rho));
    if (r > best) best = r;
  }
  // Tail beyond the window: a constant extension decays monotonically in |t|,
  // so its sup is attained at the window edge and never exceeds the grid max;
  // a zero extension contributes nothing.  Kept explicit so the norm stays an
  // upper bound for the true sup.
  if (x.extension == Extension::constant && x.n > 0) {
    const double tw = x.window();
    const double tail = euclid_at(x, x.n - 1) / (1.0 + std::pow(tw, rho));
    if (tail > best) best = tail;
  }
  return best;
}

double weighted_norm(const HistoryPath& x, double rho) {
  x.validate();
  return weighted_norm(x.view(), rho);
}

FluctuationSeries fluctuation_series(const std::vector<double>& v, double dt, double C1,
                                     double C2, double gamma) {
  if (!(C1 > 0.0 && C2 > 0.0 && gamma > 0.0))
    throw ContractViolation("fluctuation_series: constants must be positive");
  if (v.empty()) throw ContractViolation("fluctuation_series: empty V-series");
  for (double x : v)
    if (!std::isfinite(x) || x < 0.0)
      throw ContractViolation("fluctuation_series: V-values must be finite and nonnegative");

  const double budget = C1 / C2;
  FluctuationSeries out;
  out.constants = FluctuationConstants{C1, C2, gamma};
  out.times.resize(v.size());
  out.values.resize(v.size());
  out.times[0] = 0.0;
  out.values[0] = 0.0;
  double prev_pow = std::pow(v[0], gamma);
  double acc = 0.0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double cur_pow = std::pow(v[k], gamma);
    acc += 0.5 * dt * (prev_pow + cur_pow) - budget * dt;  // one trapezoid panel
    out.times[k] = -static_cast<double>(k) * dt;
    out.values[k] = acc;
    prev_pow = cur_pow;
  }
  return out;
}

NiceLevel nice_level(const HistoryPath& x, const std::vector<double>& v, double rho, double r,
                     double C1, double C2, double gamma) {
  x.validate();
  if (!(rho > 0.0)) throw ContractViolation("nice_level: rho must be positive");
  if (!(r > 0.5)) throw ContractViolation("nice_level: r must exceed 1/2");
  if (v.size() != x.size())
    throw ContractViolation("nice_level: V-series length must match path length");

  const FluctuationSeries fv = fluctuation_series(v, x.dt, C1, C2, gamma);
  const HistoryView xv = x.view();
  double sup = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double t = static_cast<double>(k) * x.dt;
    const double fplus = fv.values[k] > 0.0 ? fv.values[k] : 0.0;
    const double term = euclid_at(xv, k) / (1.0 + std::pow(t, rho)) +
                        (std::abs(v[k]) + fplus) / (1.0 + std::pow(t, r));
    if (term > sup) sup = term;
  }
  NiceLevel out;
  out.sup = sup;
  out.level = static_cast<int>(std::floor(sup)) + 1;
  return out;
}

}  // namespace memsde
