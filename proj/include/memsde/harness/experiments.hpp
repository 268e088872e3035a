#ifndef MEMSDE_HARNESS_EXPERIMENTS_HPP
#define MEMSDE_HARNESS_EXPERIMENTS_HPP

#include <memory>
#include <string>
#include <vector>

#include "memsde/drift.hpp"
#include "memsde/harness/config.hpp"

namespace memsde::harness {

struct TaskStatus {
  std::string name;
  bool ok = true;
  std::string detail;
};

struct OutputRecord {
  std::string path;   // relative to the run directory
  std::string digest; // fnv1a64 of the bytes
};

/// What a run leaves behind besides its data files.  Digests always match the
/// emitted files; wall-clock fields are the only nondeterministic entries.
struct RunManifest {
  std::string code_version;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::string started_utc;
  std::string finished_utc;
  std::vector<OutputRecord> outputs;
  std::vector<TaskStatus> tasks;
  std::string run_dir;

  bool all_ok() const;
  // 0 = all good, 2 = runtime failure, 3 = an audit criterion failed
  int exit_code() const;
};

/// Build the drift named by [drift] kind = gaussian_kernel | pathdep_kernel |
/// markov_linear | reduced_pde (per-kind parameter keys documented in the
/// README).
std::unique_ptr<MemoryDrift> make_drift(const Config& cfg);

/// Validate and execute the experiment named by the top-level `experiment`
/// key; writes outputs plus manifest.json under out_dir/<hash8>/run-N.
/// Config errors throw ConfigError before anything starts.
RunManifest run_experiment(const Config& cfg, const std::string& out_dir, bool csv_mirror);

void write_manifest(const RunManifest& m, const std::string& file);

}  // namespace memsde::harness

#endif
