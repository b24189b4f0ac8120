#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "anm/environment.hpp"

namespace anm::harness {

enum class Agent { DoNothing, Random };

/// Selects the environment: a registered name ("anm6-easy") or a network file.
struct EnvSource {
  std::string name;
  std::string network_file;
};

/// Throws anm::Error when the environment cannot be built.
std::unique_ptr<Environment> make_env(const EnvSource& src, std::uint64_t seed);

/// Action chosen by the agent at `step` (0-based). The random agent draws
/// uniformly inside the static action bounds from its own seeded stream.
std::vector<double> act(Agent agent, const Environment& env, std::uint64_t seed, std::uint64_t step);

struct RunReport {
  std::uint64_t episodes = 0;
  std::uint64_t steps = 0;
  std::vector<double> return_sum;  // undiscounted, per episode
  double wall_time_s = 0.0;
  double steps_per_second = 0.0;
  std::uint64_t divergences = 0;
  std::uint64_t solver_iterations = 0;
  int min_iterations = 0;
  int max_iterations = 0;

  std::string to_json() const;
};

struct RunOptions {
  EnvSource env;
  Agent agent = Agent::DoNothing;
  std::uint64_t horizon = 96;
  std::uint64_t seed = 0;
  std::string out_path;  // JSONL snapshots, one per step, with the applied action
};

RunReport run(const RunOptions& opts);

struct BenchOptions {
  EnvSource env;
  std::uint64_t steps = 10000;
  std::uint64_t warmup = 100;
  unsigned parallel = 1;
};

/// Times `steps` do-nothing steps per environment after a warm-up.
RunReport bench(const BenchOptions& opts);

struct ReplayResult {
  std::uint64_t steps = 0;
  std::uint64_t mismatches = 0;  // rewards that were not bit-identical
};

/// Feeds the recorded actions of a trajectory file back through a fresh
/// environment and compares rewards bit for bit.
ReplayResult replay(const EnvSource& src, std::uint64_t seed, const std::string& trajectory_path);

/// Prints the validation report; returns 0 if valid, 1 on errors, 2 if unreadable.
int validate_file(const std::string& path, std::ostream& out);

}  // namespace anm::harness
