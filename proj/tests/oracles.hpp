// Test-only reference machinery: independent oracles the implementation under
// test never calls.  Quadrature here is adaptive Simpson; the library uses
// fixed-grid trapezoids.
#ifndef MEMSDE_TESTS_ORACLES_HPP
#define MEMSDE_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a, double b) {
  const double m = 0.5 * (a + b);
  return (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = simpson(f, a, m);
  const double right = simpson(f, m, b);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
  return adaptive_simpson_rec(f, a, b, simpson(f, a, b), tol, 60);
}

// int_0^inf e^{-u^2-u} du, the mass of the Gaussian-in-lag kernel.
inline double gauss_kernel_mass() {
  return integrate([](double u) { return std::exp(-u * u - u); }, 0.0, 40.0, 1e-13);
}

// int_0^inf e^{-u^2-u} (1+u^rho)^2 du, the Lipschitz weight of that kernel.
inline double gauss_kernel_lipschitz_weight(double rho) {
  return integrate([rho](double u) { return std::exp(-u * u - u) * std::pow(1.0 + std::pow(u, rho), 2.0); },
                   0.0, 40.0, 1e-13);
}

// Deterministic test-local PRNG (xorshift-style), unrelated to the library's
// Philox; good enough to fabricate arbitrary inputs.
struct TestRng {
  std::uint64_t state;
  explicit TestRng(std::uint64_t seed) : state(seed ^ 0x9E3779B97F4A7C15ull) {}
  std::uint64_t next_u64() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(next_u64() >> 11) * 0x1.0p-53);
  }
  double normal() {
    const double u1 = uniform(1e-12, 1.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
};

// Smooth bounded path on a lag grid: a random mix of a few sinusoids.
inline std::vector<double> smooth_path(TestRng& rng, std::size_t n, double dt,
                                       double amplitude = 1.0) {
  const int modes = 3;
  std::vector<double> amp(modes), freq(modes), phase(modes);
  for (int j = 0; j < modes; ++j) {
    amp[j] = rng.uniform(-amplitude, amplitude) / modes;
    freq[j] = rng.uniform(0.1, 2.0);
    phase[j] = rng.uniform(0.0, 6.283185307179586);
  }
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = -static_cast<double>(k) * dt;
    double v = 0.0;
    for (int j = 0; j < modes; ++j) v += amp[j] * std::cos(freq[j] * t + phase[j]);
    x[k] = v;
  }
  return x;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  const double denom = n * sxx - sx * sx;
  f.slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracles

#endif
