#include "memsde/ergodics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace memsde {

void OccupationMeasure::validate() const {
  if (dim < 1) throw ContractViolation("OccupationMeasure: dim must be positive");
  if (weights.empty()) throw ContractViolation("OccupationMeasure: empty measure");
  if (samples.size() != weights.size() * static_cast<std::size_t>(dim))
    throw ContractViolation("OccupationMeasure: samples/weights length mismatch");
  double s = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ContractViolation("OccupationMeasure: weights must be positive");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw ContractViolation("OccupationMeasure: weights must sum to 1");
}

OccupationMeasure merge(const OccupationMeasure& a, const OccupationMeasure& b) {
  a.validate();
  b.validate();
  if (a.dim != b.dim) throw ContractViolation("merge: dimension mismatch");
  OccupationMeasure out;
  out.dim = a.dim;
  out.T_window = a.T_window + b.T_window;
  out.n_chains = a.n_chains + b.n_chains;
  out.samples.reserve(a.samples.size() + b.samples.size());
  out.samples.insert(out.samples.end(), a.samples.begin(), a.samples.end());
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  const double wa = a.T_window / out.T_window;
  const double wb = b.T_window / out.T_window;
  out.weights.reserve(a.weights.size() + b.weights.size());
  for (double w : a.weights) out.weights.push_back(w * wa);
  for (double w : b.weights) out.weights.push_back(w * wb);
  return out;
}

KbResult krylov_bogoliubov(const MemoryDrift& a, const HistoryPath& past,
                           const std::vector<std::uint64_t>& seeds, const KbParams& params) {
  if (seeds.empty()) throw ContractViolation("krylov_bogoliubov: need at least one seed");
  if (!(params.T > params.burn_in && params.burn_in > 0.0))
    throw ContractViolation("krylov_bogoliubov: need T > burn_in > 0");
  const int dim = past.dim;

  SolverConfig cfg;
  cfg.dt = params.dt;
  cfg.horizon = params.T;
  cfg.blowup_radius = params.blowup_radius;
  const std::size_t burn_steps =
      static_cast<std::size_t>(std::llround(params.burn_in / params.dt));

  KbResult out;
  out.measure.dim = dim;
  out.measure.n_chains = static_cast<int>(seeds.size());
  std::vector<std::uint64_t> failed;
  std::vector<double> early, late;  // squared displacement from the burn-in state

  for (std::size_t ci = 0; ci < seeds.size(); ++ci) {
    FuturePath x;
    try {
      x = solve_cauchy(a, past, seeds[ci], cfg, /*stream_id=*/ci);
    } catch (const BlowupError&) {
      failed.push_back(seeds[ci]);
      continue;
    }
    const std::size_t span = x.size() - burn_steps;
    const std::size_t q1 = burn_steps + span / 4;
    const std::size_t q3 = burn_steps + (3 * span) / 4;
    for (std::size_t k = burn_steps; k < x.size(); k += params.thin) {
      double sq = 0.0;
      for (int c = 0; c < dim; ++c) {
        out.measure.samples.push_back(x.value(k, c));
        const double d = x.value(k, c) - x.value(burn_steps, c);
        sq += d * d;
      }
      if (k < q1) early.push_back(sq);
      if (k >= q3) late.push_back(sq);
    }
  }
  if (!failed.empty())
    throw PartialResultError("krylov_bogoliubov: " + std::to_string(failed.size()) +
                                 " chain(s) hit the blowup guard",
                             failed);

  const std::size_t n = out.measure.samples.size() / static_cast<std::size_t>(dim);
  out.measure.weights.assign(n, 1.0 / static_cast<double>(n));
  out.measure.T_window =
      (params.T - params.burn_in) * static_cast<double>(seeds.size());

  auto avg = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  out.early_msd = avg(early);
  out.late_msd = avg(late);
  out.nonconvergence_flag = out.late_msd > 2.0 * out.early_msd;
  return out;
}

namespace {

// Weighted two-sample KS on one coordinate.
double ks_marginal(const OccupationMeasure& m1, const OccupationMeasure& m2, int c) {
  struct Entry {
    double value;
    double weight;
    int which;
  };
  std::vector<Entry> all;
  all.reserve(m1.size() + m2.size());
  for (std::size_t i = 0; i < m1.size(); ++i)
    all.push_back({m1.samples[i * static_cast<std::size_t>(m1.dim) + static_cast<std::size_t>(c)],
                   m1.weights[i], 0});
  for (std::size_t i = 0; i < m2.size(); ++i)
    all.push_back({m2.samples[i * static_cast<std::size_t>(m2.dim) + static_cast<std::size_t>(c)],
                   m2.weights[i], 1});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

  double f1 = 0.0, f2 = 0.0, d = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    const double v = all[i].value;
    while (i < all.size() && all[i].value == v) {  // ties advance together
      (all[i].which == 0 ? f1 : f2) += all[i].weight;
      ++i;
    }
    d = std::max(d, std::abs(f1 - f2));
  }
  return d;
}

}  // namespace

double marginal_distance(const OccupationMeasure& m1, const OccupationMeasure& m2) {
  m1.validate();
  m2.validate();
  if (m1.dim != m2.dim) throw ContractViolation("marginal_distance: dimension mismatch");
  double d = 0.0;
  for (int c = 0; c < m1.dim; ++c) d = std::max(d, ks_marginal(m1, m2, c));
  return d;
}

IncrementTailTable increment_tail_check(const FuturePath& traj, const std::vector<double>& lags,
                                        const std::vector<double>& z_grid) {
  traj.validate();
  const std::size_t n = traj.size();
  const int dim = traj.dim;
  IncrementTailTable out;
  for (double lag : lags) {
    const std::size_t L = static_cast<std::size_t>(snap_to_grid(lag, traj.dt));
    if (L == 0 || L >= n)
      throw ContractViolation("increment_tail_check: lag outside the trajectory span");
    std::vector<double> jumps(n - L);
    for (std::size_t i = 0; i + L < n; ++i) {
      double s = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double d = traj.value(i + L, c) - traj.value(i, c);
        s += d * d;
      }
      jumps[i] = std::sqrt(s);
    }
    for (double z : z_grid) {
      std::size_t count = 0;
      for (double j : jumps) count += j > z ? 1 : 0;
      IncrementTailRow row;
      row.lag = static_cast<double>(L) * traj.dt;
      row.z = z;
      row.empirical = static_cast<double>(count) / static_cast<double>(jumps.size());
      row.bound_shape = (std::pow(z, -4.0) + std::pow(z, -2.0)) * row.lag * row.lag;
      out.rows.push_back(row);
    }
  }
  for (const auto& row : out.rows)
    if (row.empirical > 0.0) out.fitted_C = std::max(out.fitted_C, row.empirical / row.bound_shape);
  return out;
}

GirsanovReport girsanov_logdensity(const MemoryDrift& a1, const MemoryDrift& a2,
                                   const FullPath& traj, const WienerPath& w,
                                   double novikov_cap) {
  traj.validate();
  if (traj.past.dim != a1.dim() || a1.dim() != a2.dim())
    throw ContractViolation("girsanov_logdensity: dimension mismatch");
  if (traj.future.dt != w.dt)
    throw ContractViolation("girsanov_logdensity: trajectory and noise dt must agree");
  const int dim = traj.past.dim;
  const std::size_t steps = std::min(traj.future.size() - 1, w.n_steps());

  const PathBuffer buf(traj);
  std::vector<double> d1(static_cast<std::size_t>(dim)), d2(static_cast<std::size_t>(dim));
  GirsanovReport rep;
  for (std::size_t k = 0; k < steps; ++k) {
    const HistoryView hv = buf.view_at(k);
    a1.eval_view(hv, d1.data());
    a2.eval_view(hv, d2.data());
    double dot = 0.0, norm2 = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double D = d1[static_cast<std::size_t>(c)] - d2[static_cast<std::size_t>(c)];
      dot += D * w.increments[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
      norm2 += D * D;
    }
    const double half_quad = 0.5 * norm2 * w.dt;
    if (rep.novikov_stat + half_quad > novikov_cap) {
      rep.truncated = true;
      rep.truncation_step = k;
      break;
    }
    rep.log_density += dot - half_quad;
    rep.novikov_stat += half_quad;
  }
  return rep;
}

CouplingSeries coupling_experiment(const MemoryDrift& a, const HistoryPath& x1,
                                   const HistoryPath& x2, std::uint64_t seed, double T,
                                   const SolverConfig& cfg, std::size_t record_every) {
  x1.validate();
  x2.validate();
  if (x1.dim != x2.dim || x1.dt != x2.dt)
    throw ContractViolation("coupling_experiment: pasts must share dim and dt");
  for (int c = 0; c < x1.dim; ++c)
    if (x1.samples[static_cast<std::size_t>(c)] != x2.samples[static_cast<std::size_t>(c)])
      throw ContractViolation("coupling_experiment: pasts must share the time-0 value");
  if (record_every == 0) record_every = 1;

  SolverConfig run_cfg = cfg;
  run_cfg.horizon = T;
  const FuturePath y = solve_cauchy(a, x1, seed, run_cfg);

  const PathBuffer b1(FullPath{x1, y});
  const PathBuffer b2(FullPath{x2, y});
  const int dim = x1.dim;
  std::vector<double> a1(static_cast<std::size_t>(dim)), a2(static_cast<std::size_t>(dim));

  CouplingSeries out;
  for (std::size_t k = 0; k < y.size(); k += record_every) {
    a.eval_view(b1.view_at(k), a1.data());
    a.eval_view(b2.view_at(k), a2.data());
    double s = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double d = a1[static_cast<std::size_t>(c)] - a2[static_cast<std::size_t>(c)];
      s += d * d;
    }
    out.times.push_back(static_cast<double>(k) * cfg.dt);
    out.gaps.push_back(std::sqrt(s));
  }

  // log-linear fit above the floating-point floor
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < out.gaps.size(); ++i) {
    if (out.gaps[i] <= 1e-14) continue;
    const double lx = out.times[i];
    const double ly = std::log(out.gaps[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1.0;
  }
  out.fit_points = static_cast<std::size_t>(n);
  const double den = n * sxx - sx * sx;
  if (n >= 2.0 && den != 0.0) out.fitted_rate = (n * sxy - sx * sy) / den;
  return out;
}

}  // namespace memsde
