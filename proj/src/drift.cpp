#include "memsde/drift.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

namespace memsde {

const std::optional<GrowthBound> MemoryDrift::no_growth_{};

// ---------------------------------------------------------------------------
// Gaussian-kernel drift (uniform example)
// ---------------------------------------------------------------------------

namespace {

inline double gauss_kernel(double lag) {  // e^{-s^2+s} at s = -lag, lag >= 0
  return std::exp(-lag * lag - lag);
}

// int_L^inf e^{-u^2-u} du <= e^{-L^2-L} / (2L+1)
inline double gauss_kernel_tail(double lag) { return gauss_kernel(lag) / (2.0 * lag + 1.0); }

inline std::uint64_t double_key(double x) { return std::bit_cast<std::uint64_t>(x); }

}  // namespace

GaussianKernelDrift::GaussianKernelDrift(double kernel_tail_tol) : tail_tol_(kernel_tail_tol) {
  if (!(tail_tol_ > 0.0)) throw ContractViolation("GaussianKernelDrift: tolerance must be positive");
  double lag = 1.0;
  while (gauss_kernel_tail(lag) > tail_tol_) lag += 0.5;
  trunc_lag_ = lag;
  // |a(x)| <= K + V(x) with beta = 1 and nu a point mass at lag 0:
  // |x(0)|(1+Psi) <= 1/2 + x(0)^2 + x(0)^2 Psi^2/2 + 1/2 <= 1 + V(x) ... the
  // crude constant K = 1 suffices since 2|u|v <= u^2 v^2 + 1 for any u, v.
  growth_ = GrowthBound{1.0, 1.0, {{0.0, 1.0}}};
}

std::shared_ptr<const GaussianKernelDrift::Weights> GaussianKernelDrift::weights_for(
    double dt) const {
  const std::uint64_t key = double_key(dt);
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  auto w = std::make_shared<Weights>();
  const std::size_t m = static_cast<std::size_t>(std::ceil(trunc_lag_ / dt));
  w->w.resize(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    const double f = (k == 0 || k == m) ? 0.5 : 1.0;
    w->w[k] = f * dt * gauss_kernel(static_cast<double>(k) * dt);
  }
  w->suffix.resize(m + 2);
  w->suffix[m + 1] = 0.0;
  for (std::size_t k = m + 1; k-- > 0;) w->suffix[k] = w->suffix[k + 1] + w->w[k];
  cache_.emplace(key, w);
  return w;
}

double GaussianKernelDrift::psi(const HistoryView& x) const {
  const auto w = weights_for(x.dt);
  const std::size_t m = w->w.size() - 1;
  const std::size_t stored = x.n < m + 1 ? x.n : m + 1;
  double acc = 0.0;
  const double* p = x.data;
  const std::ptrdiff_t stride = x.stride;
  for (std::size_t k = 0; k < stored; ++k) {
    const double v = p[static_cast<std::ptrdiff_t>(k) * stride];
    acc += w->w[k] * v * v;
  }
  if (stored <= m && x.extension == Extension::constant) {
    const double c = p[static_cast<std::ptrdiff_t>(x.n - 1) * stride];
    acc += c * c * w->suffix[stored];
  }
  return acc;
}

void GaussianKernelDrift::eval_view(const HistoryView& x, double* out) const {
  if (x.dim != 1) throw ContractViolation("GaussianKernelDrift: dim must be 1");
  out[0] = -x.value(0, 0) * (1.0 + psi(x));
}

// ---------------------------------------------------------------------------
// Path-dependent kernel drift (less uniform example)
// ---------------------------------------------------------------------------

PathDependentKernelDrift::PathDependentKernelDrift(double finiteness_cap, double kernel_tail_tol)
    : cap_(finiteness_cap), tail_tol_(kernel_tail_tol) {
  if (!(cap_ > 0.0))
    throw ContractViolation("PathDependentKernelDrift: finiteness_cap must be positive");
  // |a| <= 1/2 + x0^2 + (3/2)Psi^2 <= 1 + 2V, so nu gets mass 2 at lag 0.
  growth_ = GrowthBound{1.0, 1.0, {{0.0, 2.0}}};
}

PathDependentKernelDrift::PsiHat PathDependentKernelDrift::psi_hat(const HistoryView& x) const {
  const double dt = x.dt;
  const double* p = x.data;
  const std::ptrdiff_t stride = x.stride;

  // Exponent at lag k*dt is -2(k dt) - P_k where P_k is the trapezoid prefix
  // integral of x over [-k dt, 0], accumulated once and reused across the
  // outer quadrature nodes.
  double prefix = 0.0;
  double acc = 0.0;
  double prev_val = p[0];
  for (std::size_t k = 0; k < x.n; ++k) {
    const double lag = static_cast<double>(k) * dt;
    const double val = p[static_cast<std::ptrdiff_t>(k) * stride];
    if (k > 0) prefix += 0.5 * dt * (prev_val + val);
    prev_val = val;
    const double expo = -2.0 * lag - prefix;
    if (expo > 690.0)
      throw DivergenceError(
          "PathDependentKernelDrift: exponent overflow at lag " + std::to_string(lag), lag);
    const double f = (k == 0 || k + 1 == x.n) ? 0.5 : 1.0;
    acc += f * dt * std::exp(expo) * val * val;
    if (acc > cap_) return PsiHat{acc, true};
  }

  if (x.extension == Extension::constant) {
    // Constant tail value c: the remaining mass is c^2 e^{-2T - P(T)} / (2+c)
    // when c > -2 and infinite otherwise.
    const double c = p[static_cast<std::ptrdiff_t>(x.n - 1) * stride];
    const double tw = x.window();
    if (c <= -2.0) return PsiHat{cap_, true};
    const double expo = -2.0 * tw - prefix;
    if (expo > 690.0)
      throw DivergenceError("PathDependentKernelDrift: exponent overflow in tail", tw);
    const double tail = c * c * std::exp(expo) / (2.0 + c);
    acc += tail;
    if (acc > cap_) return PsiHat{acc, true};
  }
  return PsiHat{acc, false};
}

void PathDependentKernelDrift::eval_view(const HistoryView& x, double* out) const {
  if (x.dim != 1) throw ContractViolation("PathDependentKernelDrift: dim must be 1");
  const PsiHat ph = psi_hat(x);
  const double psi = ph.diverged ? 0.0 : ph.value;  // "zero otherwise" fallback
  out[0] = -x.value(0, 0) * (1.0 + psi) + psi * psi;
}

// ---------------------------------------------------------------------------
// Markov drift
// ---------------------------------------------------------------------------

MarkovDrift MarkovDrift::scalar(std::function<double(double)> g) {
  return MarkovDrift(1, [g = std::move(g)](const double* x0, double* out) { out[0] = g(x0[0]); });
}

void MarkovDrift::eval_view(const HistoryView& x, double* out) const {
  if (x.dim != dim_) throw ContractViolation("MarkovDrift: dim mismatch");
  // g sees only the present sample
  std::vector<double> x0(static_cast<std::size_t>(dim_));
  for (int c = 0; c < dim_; ++c) x0[static_cast<std::size_t>(c)] = x.value(0, c);
  g_(x0.data(), out);
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

double drift_gap(const MemoryDrift& a, const HistoryPath& x1, const HistoryPath& x2,
                 const FuturePath& y, double t) {
  if (t < 0.0) throw ContractViolation("drift_gap: t must be nonnegative");
  const FullPath p1 = concat(x1, y);
  const FullPath p2 = concat(x2, y);
  const HistoryPath h1 = shift_view(p1, t);
  const HistoryPath h2 = shift_view(p2, t);
  const std::vector<double> a1 = a.eval(h1);
  const std::vector<double> a2 = a.eval(h2);
  double s = 0.0;
  for (std::size_t c = 0; c < a1.size(); ++c) {
    const double d = a1[c] - a2[c];
    s += d * d;
  }
  return std::sqrt(s);
}

GrowthReport verify_growth_bound(const MemoryDrift& a, const std::vector<double>& v,
                                 const HistoryPath& x, double tolerance) {
  if (!a.growth().has_value())
    throw UnsupportedOperation("verify_growth_bound: drift declares no growth metadata");
  if (v.size() != x.size())
    throw ContractViolation("verify_growth_bound: V-series length must match path length");
  const GrowthBound& g = *a.growth();

  const std::vector<double> av = a.eval(x);
  double lhs = 0.0;
  for (double c : av) lhs += c * c;
  lhs = std::sqrt(lhs);

  double rhs = g.K;
  for (const auto& [lag, weight] : g.nu_weights) {
    const std::ptrdiff_t k = snap_to_grid(lag, x.dt);
    const std::size_t idx =
        static_cast<std::size_t>(k) < v.size() ? static_cast<std::size_t>(k) : v.size() - 1;
    rhs += weight * std::pow(std::abs(v[idx]), g.beta);
  }
  return GrowthReport{lhs, rhs, lhs <= rhs + tolerance};
}

}  // namespace memsde
