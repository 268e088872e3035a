#ifndef MEMSDE_SOLVER_HPP
#define MEMSDE_SOLVER_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "memsde/drift.hpp"
#include "memsde/pathspace.hpp"
#include "memsde/rng.hpp"

namespace memsde {

/// Gaussian increments of a d-dimensional Wiener path, sd sqrt(dt) per
/// component, reproducible from (seed, stream_id) via the Philox generator.
struct WienerPath {
  int dim = 1;
  double dt = 1.0;
  std::vector<double> increments;  // n_steps * dim, step-major
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::size_t n_steps() const {
    return dim > 0 ? increments.size() / static_cast<std::size_t>(dim) : 0;
  }
  double horizon() const { return static_cast<double>(n_steps()) * dt; }
  // W(t_k) = sum of the first k increments, component c.
  std::vector<double> cumulative(int c = 0) const;
};

WienerPath sample_wiener(std::uint64_t seed, std::uint64_t stream_id, int dim, double dt,
                         std::size_t n_steps);

/// Pairwise-summed coarse path over factor steps: the same Brownian motion on
/// the coarse grid, for refinement studies.
WienerPath coarsen(const WienerPath& fine, std::size_t factor);

struct SolverConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  double blowup_radius = 1e6;  // discrete tau_R guard on the monitored value
  double picard_tol = 1e-10;
  int picard_max_iter = 60;
  // Monitored value for the blowup guard; |X(t)| when absent.
  std::function<double(const HistoryView&)> guard_value;
};

/// Explicit Euler-Maruyama for dX = a(pi_t X) dt + dW from the given past.
/// X_{k+1} = X_k + a(history through step k) dt + dW_k; the rolling history is
/// `past` extended by computed samples.  Throws BlowupError (with the stopping
/// step) when the monitored value reaches cfg.blowup_radius.
FuturePath euler_maruyama(const MemoryDrift& a, const HistoryPath& past, const WienerPath& w,
                          const SolverConfig& cfg);

struct PicardStats {
  int total_iterations = 0;
  int chunks = 0;
  double final_chunk_length = 0.0;
  std::vector<double> residuals;  // sup-norm change per iteration, all chunks
};

/// Picard fixed-point solution of y = Phi(y), Phi(y)(t) = x(0) +
/// int_0^t a(pi_s(x:y)) ds + W(t), with trapezoidal quadrature for the drift
/// integral.  Chunks the horizon adaptively: the first chunk is min(1, T) and
/// halves whenever the residual grows three consecutive iterations
/// (ContractionFailure escapes only at the minimum chunk size).
FuturePath picard_solve(const MemoryDrift& a, const HistoryPath& past, const WienerPath& w,
                        const SolverConfig& cfg, PicardStats* stats = nullptr);

/// Convenience Cauchy-problem wrapper: samples the Wiener path for
/// (seed, stream_id) and runs euler_maruyama.  Bit-identical for identical
/// arguments.
FuturePath solve_cauchy(const MemoryDrift& a, const HistoryPath& past, std::uint64_t seed,
                        const SolverConfig& cfg, std::uint64_t stream_id = 0);

}  // namespace memsde

#endif
