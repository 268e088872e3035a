#include "memsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace memsde {

std::vector<double> WienerPath::cumulative(int c) const {
  std::vector<double> w(n_steps() + 1, 0.0);
  for (std::size_t k = 0; k < n_steps(); ++k)
    w[k + 1] = w[k] + increments[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
  return w;
}

WienerPath sample_wiener(std::uint64_t seed, std::uint64_t stream_id, int dim, double dt,
                         std::size_t n_steps) {
  if (!(dt > 0.0)) throw ContractViolation("sample_wiener: dt must be positive");
  if (dim < 1) throw ContractViolation("sample_wiener: dim must be positive");
  WienerPath w;
  w.dim = dim;
  w.dt = dt;
  w.seed = seed;
  w.stream_id = stream_id;
  w.increments.resize(n_steps * static_cast<std::size_t>(dim));
  const Philox gen(seed, stream_id);
  const double sd = std::sqrt(dt);
  for (std::size_t i = 0; i < w.increments.size(); ++i) w.increments[i] = sd * gen.normal_at(i);
  return w;
}

WienerPath coarsen(const WienerPath& fine, std::size_t factor) {
  if (factor == 0 || fine.n_steps() % factor != 0)
    throw ContractViolation("coarsen: factor must divide the number of steps");
  WienerPath w;
  w.dim = fine.dim;
  w.dt = fine.dt * static_cast<double>(factor);
  w.seed = fine.seed;
  w.stream_id = fine.stream_id;
  const std::size_t d = static_cast<std::size_t>(fine.dim);
  const std::size_t n = fine.n_steps() / factor;
  w.increments.assign(n * d, 0.0);
  for (std::size_t k = 0; k < fine.n_steps(); ++k)
    for (std::size_t c = 0; c < d; ++c) w.increments[(k / factor) * d + c] += fine.increments[k * d + c];
  return w;
}

namespace {

double default_guard(const HistoryView& x) {
  double s = 0.0;
  for (int c = 0; c < x.dim; ++c) {
    const double v = x.value(0, c);
    s += v * v;
  }
  return std::sqrt(s);
}

}  // namespace

FuturePath euler_maruyama(const MemoryDrift& a, const HistoryPath& past, const WienerPath& w,
                          const SolverConfig& cfg) {
  past.validate();
  if (past.dt != w.dt || past.dt != cfg.dt)
    throw ContractViolation("euler_maruyama: past, noise and config dt must agree");
  if (past.dim != w.dim || past.dim != a.dim())
    throw ContractViolation("euler_maruyama: dimension mismatch");
  const std::size_t n_steps = std::min<std::size_t>(
      w.n_steps(), static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt)));
  const int dim = past.dim;
  const auto guard = cfg.guard_value ? cfg.guard_value : default_guard;

  PathBuffer buf(past, n_steps);
  std::vector<double> drift(static_cast<std::size_t>(dim));
  for (std::size_t k = 0; k < n_steps; ++k) {
    const HistoryView hv = buf.view_at(k);
    a.eval_view(hv, drift.data());
    const double* xk = buf.slot(k);
    double* xk1 = buf.slot(k + 1);
    const double* dw = w.increments.data() + k * static_cast<std::size_t>(dim);
    for (int c = 0; c < dim; ++c) xk1[c] = xk[c] + drift[static_cast<std::size_t>(c)] * cfg.dt + dw[c];
    const HistoryView next = buf.view_at(k + 1);
    const double g = guard(next);
    if (!(g < cfg.blowup_radius))
      throw BlowupError("euler_maruyama: blowup guard tripped at step " + std::to_string(k + 1),
                        k + 1, g);
  }

  FuturePath out;
  out.dim = dim;
  out.dt = cfg.dt;
  out.samples.assign(buf.slot(0), buf.slot(0) + (n_steps + 1) * static_cast<std::size_t>(dim));
  return out;
}

namespace {

// One Picard pass on a chunk: y_new(t_k) = x(0) + trapz(a(pi_.(x:y_old)), 0..t_k) + W(t_k).
// Returns the sup-norm change.  `buf` holds [past, y_old] chronologically and
// is updated to y_new in place after evaluation.
double picard_sweep(const MemoryDrift& a, PathBuffer& buf, std::size_t chunk_steps,
                    const std::vector<double>& w_cum, const double* x0) {
  const int dim = buf.dim();
  const double dt = buf.dt();
  std::vector<double> g_prev(static_cast<std::size_t>(dim));
  std::vector<double> g_cur(static_cast<std::size_t>(dim));
  std::vector<double> integral(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> y_new((chunk_steps + 1) * static_cast<std::size_t>(dim));

  a.eval_view(buf.view_at(0), g_prev.data());
  for (int c = 0; c < dim; ++c) y_new[static_cast<std::size_t>(c)] = x0[c];
  for (std::size_t k = 1; k <= chunk_steps; ++k) {
    a.eval_view(buf.view_at(k), g_cur.data());
    for (int c = 0; c < dim; ++c) {
      integral[static_cast<std::size_t>(c)] +=
          0.5 * dt * (g_prev[static_cast<std::size_t>(c)] + g_cur[static_cast<std::size_t>(c)]);
      y_new[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
          x0[c] + integral[static_cast<std::size_t>(c)] +
          w_cum[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
    }
    std::swap(g_prev, g_cur);
  }

  double change = 0.0;
  double* y_old = buf.slot(0);
  for (std::size_t i = 0; i < y_new.size(); ++i) {
    change = std::max(change, std::abs(y_new[i] - y_old[i]));
    y_old[i] = y_new[i];
  }
  return change;
}

}  // namespace

FuturePath picard_solve(const MemoryDrift& a, const HistoryPath& past, const WienerPath& w,
                        const SolverConfig& cfg, PicardStats* stats) {
  past.validate();
  if (past.dt != w.dt || past.dt != cfg.dt)
    throw ContractViolation("picard_solve: past, noise and config dt must agree");
  if (past.dim != w.dim || past.dim != a.dim())
    throw ContractViolation("picard_solve: dimension mismatch");
  const int dim = past.dim;
  const std::size_t total_steps = std::min<std::size_t>(
      w.n_steps(), static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt)));

  // Accumulated solution so far, as a growing past.
  HistoryPath acc = past;
  PicardStats local;
  std::size_t done = 0;
  std::size_t chunk_steps = std::min<std::size_t>(
      total_steps, static_cast<std::size_t>(std::llround(1.0 / cfg.dt)));
  if (chunk_steps == 0) chunk_steps = 1;

  while (done < total_steps) {
    const std::size_t this_chunk = std::min(chunk_steps, total_steps - done);

    // Wiener sums relative to the chunk start.
    std::vector<double> w_cum((this_chunk + 1) * static_cast<std::size_t>(dim), 0.0);
    for (std::size_t k = 0; k < this_chunk; ++k)
      for (int c = 0; c < dim; ++c)
        w_cum[(k + 1) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
            w_cum[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] +
            w.increments[(done + k) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];

    PathBuffer buf(acc, this_chunk);
    std::vector<double> x0(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) x0[static_cast<std::size_t>(c)] = acc.value(0, c);

    // Initial guess y0(t) = x(0) + W(t).
    for (std::size_t k = 1; k <= this_chunk; ++k)
      for (int c = 0; c < dim; ++c)
        buf.slot(k)[c] = x0[static_cast<std::size_t>(c)] +
                         w_cum[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];

    bool converged = false;
    bool failed = false;
    double prev_change = std::numeric_limits<double>::infinity();
    int growth_run = 0;
    for (int it = 0; it < cfg.picard_max_iter; ++it) {
      const double change = picard_sweep(a, buf, this_chunk, w_cum, x0.data());
      local.residuals.push_back(change);
      ++local.total_iterations;
      if (change < cfg.picard_tol) {
        converged = true;
        break;
      }
      growth_run = change > prev_change ? growth_run + 1 : 0;
      if (growth_run >= 3) {
        failed = true;
        break;
      }
      prev_change = change;
    }
    if (!converged && !failed) failed = true;  // max_iter exhausted counts as non-contraction

    if (failed) {
      if (chunk_steps <= 4)
        throw ContractionFailure(
            "picard_solve: iteration stopped contracting at the minimum chunk; "
            "try a smaller dt or horizon");
      chunk_steps /= 2;  // smaller chunk shrinks the contraction factor t*K(1+t^rho)
      continue;
    }

    // Append the converged chunk to the accumulated past.
    std::vector<double> extended((acc.size() + this_chunk) * static_cast<std::size_t>(dim));
    for (std::size_t k = 0; k < this_chunk; ++k)
      for (int c = 0; c < dim; ++c)
        extended[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
            buf.slot(this_chunk - k)[c];
    std::memcpy(extended.data() + this_chunk * static_cast<std::size_t>(dim), acc.samples.data(),
                acc.samples.size() * sizeof(double));
    acc.samples = std::move(extended);
    acc.origin_time += static_cast<double>(this_chunk) * cfg.dt;
    done += this_chunk;
    ++local.chunks;
    local.final_chunk_length = static_cast<double>(this_chunk) * cfg.dt;
  }

  FuturePath out;
  out.dim = dim;
  out.dt = cfg.dt;
  out.samples.resize((total_steps + 1) * static_cast<std::size_t>(dim));
  for (std::size_t k = 0; k <= total_steps; ++k)
    for (int c = 0; c < dim; ++c)
      out.samples[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
          acc.value(total_steps - k, c);
  if (stats) *stats = std::move(local);
  return out;
}

FuturePath solve_cauchy(const MemoryDrift& a, const HistoryPath& past, std::uint64_t seed,
                        const SolverConfig& cfg, std::uint64_t stream_id) {
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  const WienerPath w = sample_wiener(seed, stream_id, past.dim, cfg.dt, n_steps);
  return euler_maruyama(a, past, w, cfg);
}

}  // namespace memsde
