#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anm/network.hpp"
#include "anm/rng.hpp"
#include "anm/simulation.hpp"

namespace anm {

enum class Quantity { DevP, DevQ, Soc, GenPMax, BusVMag, BranchS, Aux };

struct ObservationComponent {
  Quantity kind = Quantity::DevP;
  std::size_t index = 0;

  bool operator==(const ObservationComponent&) const = default;
};

/// Either the full state (empty `components`, `full_state` set) or an
/// explicit ordered list of quantities.
struct ObservationSelector {
  bool full_state = true;
  std::vector<ObservationComponent> components;

  static ObservationSelector full() { return {}; }
  static ObservationSelector of(std::vector<ObservationComponent> c) { return {false, std::move(c)}; }
};

struct EnvConfig {
  std::shared_ptr<const NetworkSpec> spec;
  ObservationSelector observation = ObservationSelector::full();
  std::size_t K = 0;
  double delta_t = 0.25;  // hours
  double gamma = 0.995;   // exposed to agents only
  double lamb = 100.0;
  std::vector<Bounds> aux_bounds;
  RewardClip costs_clipping;
  std::uint64_t seed = 0;
};

using Observation = std::vector<double>;

/// User-supplied parts of an environment. Randomness must come from the
/// supplied generator for trajectories to be reproducible.
struct EnvironmentHooks {
  std::function<GridState(CounterRng&)> init_state;
  std::function<StochasticVars(const GridState&, CounterRng&)> next_vars;
  std::function<std::vector<Bounds>()> observation_bounds;  // optional
};

struct StepInfo {
  double e_loss = 0.0;
  double penalty = 0.0;
  bool diverged = false;
  int solver_iterations = 0;
  double network_loss = 0.0;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Full state plus the last reward terms, as written by render_frame.
struct StateSnapshot {
  int version = 1;
  std::uint64_t step = 0;
  double time_hours = 0.0;
  std::vector<double> dev_p, dev_q, soc, gen_p_max, bus_v_mag, bus_v_ang, branch_s, aux;
  double reward = 0.0;
  double e_loss = 0.0;
  double penalty = 0.0;
  bool done = false;

  bool operator==(const StateSnapshot&) const = default;
};

/// One JSON object on one line, 17 significant digits per number.
/// `extra` is spliced in before the closing brace when non-empty (it must be
/// a sequence of `"key":value` members).
std::string to_json_line(const StateSnapshot& snap, const std::string& extra = {});
StateSnapshot parse_snapshot(const std::string& line);

std::size_t observation_size(const ObservationSelector& sel, const NetworkIndex& index,
                             std::size_t n_branches, std::size_t K);
void extract_observation(const ObservationSelector& sel, const GridState& state,
                         const NetworkIndex& index, Observation& out);

/// The agent-facing environment: reset/step/render/close.
///
/// Divergence of the power flow is the only terminal condition. Once done,
/// further steps return the terminal observation with reward 0.
class Environment {
 public:
  /// Throws Error{InvalidConfig} naming the offending field.
  Environment(EnvConfig config, EnvironmentHooks hooks);

  Observation reset();
  StepResult step(std::span<const double> action);
  StateSnapshot render_frame() const;
  void close();

  Observation observation(const GridState& state) const;
  std::optional<std::vector<Bounds>> observation_bounds() const;
  std::vector<Bounds> action_space() const;

  std::size_t observation_size() const { return obs_size_; }
  std::size_t action_size() const { return index_.action_size(); }
  const EnvConfig& config() const { return config_; }
  const NetworkIndex& index() const { return index_; }
  const GridState& state() const;
  std::uint64_t step_count() const { return step_; }
  bool done() const { return done_; }
  bool closed() const { return closed_; }

 private:
  void require_open() const;
  void require_reset() const;

  EnvConfig config_;
  EnvironmentHooks hooks_;
  NetworkIndex index_;
  std::size_t obs_size_ = 0;
  std::unique_ptr<Simulator> sim_;
  GridState state_;
  Observation last_obs_;
  std::uint64_t step_ = 0;
  bool reset_ = false;
  bool done_ = false;
  bool closed_ = false;
  double last_reward_ = 0.0;
  double last_e_loss_ = 0.0;
  double last_penalty_ = 0.0;
};

}  // namespace anm
