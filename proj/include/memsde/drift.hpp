#ifndef MEMSDE_DRIFT_HPP
#define MEMSDE_DRIFT_HPP

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memsde/pathspace.hpp"

namespace memsde {

/// Declared growth bound |a(x)| <= K + sum_i w_i |V(pi_{-lag_i} x)|^beta,
/// the discrete form of the measure-of-dependence inequality.
struct GrowthBound {
  double K = 0.0;
  double beta = 1.0;
  std::vector<std::pair<double, double>> nu_weights;  // (lag >= 0, weight)
};

/// Drift functional a : pasts -> R^dim.
///
/// Implementations are immutable after construction; eval is pure and safe to
/// call concurrently.  Identical input bytes give bit-identical outputs.
class MemoryDrift {
public:
  virtual ~MemoryDrift() = default;
  virtual int dim() const = 0;
  virtual void eval_view(const HistoryView& x, double* out) const = 0;
  virtual const std::optional<GrowthBound>& growth() const { return no_growth_; }
  virtual double kernel_tail_tol() const { return 1e-12; }

  std::vector<double> eval(const HistoryPath& x) const {
    x.validate();
    return eval(x.view());
  }
  std::vector<double> eval(const HistoryView& x) const {
    std::vector<double> out(static_cast<std::size_t>(dim()));
    eval_view(x, out.data());
    return out;
  }

private:
  static const std::optional<GrowthBound> no_growth_;
};

/// Scalar drift a(x) = -x(0) (1 + Psi(x)) with the Gaussian-in-lag kernel
/// Psi(x) = int_{-inf}^0 e^{-s^2+s} x(s)^2 ds.
///
/// Psi is a trapezoid sum over the grid, truncated at the lag where the
/// analytic kernel tail drops below kernel_tail_tol; a constant extension
/// contributes its exact tail mass in closed form.
class GaussianKernelDrift : public MemoryDrift {
public:
  explicit GaussianKernelDrift(double kernel_tail_tol = 1e-12);

  int dim() const override { return 1; }
  void eval_view(const HistoryView& x, double* out) const override;
  const std::optional<GrowthBound>& growth() const override { return growth_; }
  double kernel_tail_tol() const override { return tail_tol_; }

  double psi(const HistoryView& x) const;
  double truncation_lag() const { return trunc_lag_; }

private:
  struct Weights {
    std::vector<double> w;       // trapezoid kernel weights per lag
    std::vector<double> suffix;  // suffix sums of w, for constant-extension tails
  };
  std::shared_ptr<const Weights> weights_for(double dt) const;

  double tail_tol_;
  double trunc_lag_;
  std::optional<GrowthBound> growth_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::uint64_t, std::shared_ptr<const Weights>> cache_;
};

/// Scalar drift a(x) = -x(0)(1 + Psi(x)) + Psi(x)^2 where Psi equals
/// PsiHat(x) = int exp(-2|s| - int_{-|s|}^0 x) x(s)^2 ds when the running sum
/// stays below finiteness_cap and 0 otherwise.
class PathDependentKernelDrift : public MemoryDrift {
public:
  explicit PathDependentKernelDrift(double finiteness_cap = 1e12,
                                    double kernel_tail_tol = 1e-12);

  int dim() const override { return 1; }
  void eval_view(const HistoryView& x, double* out) const override;
  const std::optional<GrowthBound>& growth() const override { return growth_; }
  double kernel_tail_tol() const override { return tail_tol_; }

  struct PsiHat {
    double value = 0.0;
    bool diverged = false;  // running sum crossed the cap (or infinite tail)
  };
  PsiHat psi_hat(const HistoryView& x) const;
  double finiteness_cap() const { return cap_; }

private:
  double cap_;
  double tail_tol_;
  std::optional<GrowthBound> growth_;
};

/// Markovian drift a(x) = g(x(0)): the present-only special case.
class MarkovDrift : public MemoryDrift {
public:
  using Field = std::function<void(const double* x0, double* out)>;
  MarkovDrift(int dim, Field g) : dim_(dim), g_(std::move(g)) {}

  // Scalar convenience.
  static MarkovDrift scalar(std::function<double(double)> g);

  int dim() const override { return dim_; }
  void eval_view(const HistoryView& x, double* out) const override;

  void set_growth(GrowthBound b) { growth_ = std::move(b); }
  const std::optional<GrowthBound>& growth() const override { return growth_; }

private:
  int dim_;
  Field g_;
  std::optional<GrowthBound> growth_;
};

/// Drift a == 0; euler_maruyama then reproduces cumulative Wiener sums exactly.
class ZeroDrift : public MemoryDrift {
public:
  explicit ZeroDrift(int dim = 1) : dim_(dim) {}
  int dim() const override { return dim_; }
  void eval_view(const HistoryView&, double* out) const override {
    for (int c = 0; c < dim_; ++c) out[c] = 0.0;
  }

private:
  int dim_;
};

/// |a(pi_t(x1:y)) - a(pi_t(x2:y))|, the quantity the uniqueness condition
/// bounds by an integrable K_n(t).
double drift_gap(const MemoryDrift& a, const HistoryPath& x1, const HistoryPath& x2,
                 const FuturePath& y, double t);

struct GrowthReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

/// Check |a(x)| against the declared growth bound with V-values v on the grid
/// of x (v[k] is V at lag k).  Throws UnsupportedOperation without metadata.
GrowthReport verify_growth_bound(const MemoryDrift& a, const std::vector<double>& v,
                                 const HistoryPath& x, double tolerance = 1e-9);

}  // namespace memsde

#endif
