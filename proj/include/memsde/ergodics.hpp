#ifndef MEMSDE_ERGODICS_HPP
#define MEMSDE_ERGODICS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "memsde/drift.hpp"
#include "memsde/pathspace.hpp"
#include "memsde/solver.hpp"

namespace memsde {

/// Weighted empirical marginal samples standing in for the time-averaged law
/// Q_T.  Weights are positive and sum to 1 (within 1e-12 after merges).
struct OccupationMeasure {
  int dim = 1;
  std::vector<double> samples;  // n * dim, sample-major
  std::vector<double> weights;  // n entries
  double T_window = 0.0;        // total averaging time behind the samples
  int n_chains = 0;

  std::size_t size() const { return weights.size(); }
  void validate() const;
};

/// Pool two measures; relative masses follow the averaging windows, so the
/// merge is associative and stays normalized.
OccupationMeasure merge(const OccupationMeasure& a, const OccupationMeasure& b);

struct KbParams {
  double T = 100.0;        // total horizon per chain
  double burn_in = 10.0;   // discarded prefix
  double dt = 1e-3;
  std::size_t thin = 10;   // keep every thin-th step
  double blowup_radius = 1e6;
};

struct KbResult {
  OccupationMeasure measure;
  // Non-convergence diagnostic: mean squared displacement from the burn-in
  // state over the first vs last quarter of the kept window.  Stationary
  // dynamics saturate (ratio near 1); a == 0 keeps growing linearly.
  double early_msd = 0.0;
  double late_msd = 0.0;
  bool nonconvergence_flag = false;
};

/// Time-average occupation measure pooled over one Cauchy run per seed.
/// Any chain blowup aborts with PartialResultError listing the failed seeds.
KbResult krylov_bogoliubov(const MemoryDrift& a, const HistoryPath& past,
                           const std::vector<std::uint64_t>& seeds, const KbParams& params);

/// Two-sample Kolmogorov-Smirnov statistic on weighted samples; coordinates
/// are compared marginally and the maximum is returned.
double marginal_distance(const OccupationMeasure& m1, const OccupationMeasure& m2);

struct IncrementTailRow {
  double lag = 0.0;
  double z = 0.0;
  double empirical = 0.0;   // frequency of |X(t+lag) - X(t)| > z
  double bound_shape = 0.0; // (z^-4 + z^-2) * lag^2
};

struct IncrementTailTable {
  std::vector<IncrementTailRow> rows;
  double fitted_C = 0.0;  // smallest C with empirical <= C * shape on every row
};

IncrementTailTable increment_tail_check(const FuturePath& traj, const std::vector<double>& lags,
                                        const std::vector<double>& z_grid);

/// Log Radon-Nikodym density of the a2-dynamics against the a1-dynamics along
/// a trajectory generated under a1 with noise w, plus the Novikov statistic
/// (1/2) int |D|^2 dt for D = a1 - a2.
struct GirsanovReport {
  double log_density = 0.0;
  double novikov_stat = 0.0;
  bool truncated = false;        // Novikov cap crossed; integration stopped
  std::size_t truncation_step = 0;
};

GirsanovReport girsanov_logdensity(const MemoryDrift& a1, const MemoryDrift& a2,
                                   const FullPath& traj, const WienerPath& w,
                                   double novikov_cap = 50.0);

struct CouplingSeries {
  std::vector<double> times;
  std::vector<double> gaps;  // |a(pi_t(x1:y)) - a(pi_t(x2:y))|
  std::optional<double> fitted_rate;  // slope of log(gap) vs t above the floor
  std::size_t fit_points = 0;
};

/// Simulate one future from x1, replay it against both pasts and record the
/// drift gap over the grid; the fitted exponential rate ignores values below
/// the 1e-14 floating-point floor.
CouplingSeries coupling_experiment(const MemoryDrift& a, const HistoryPath& x1,
                                   const HistoryPath& x2, std::uint64_t seed, double T,
                                   const SolverConfig& cfg, std::size_t record_every = 1);

}  // namespace memsde

#endif
