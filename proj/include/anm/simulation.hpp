#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "anm/network.hpp"
#include "anm/power_flow.hpp"

namespace anm {

/// Exogenous quantities drawn for one transition.
struct StochasticVars {
  std::vector<double> load_p;     // per LOAD device, p.u., <= 0
  std::vector<double> gen_p_max;  // per RENEWABLE_GEN device, p.u., >= 0
  std::vector<double> aux;        // K values

  bool operator==(const StochasticVars&) const = default;
};

struct GridState {
  std::vector<double> dev_p;      // per device, p.u.
  std::vector<double> dev_q;      // per device, p.u.
  std::vector<double> soc;        // per STORAGE device, MWh
  std::vector<double> gen_p_max;  // per RENEWABLE_GEN device, p.u.
  std::vector<Complex> bus_v;     // per bus, p.u.
  std::vector<double> branch_s;   // per branch, max(|s_from|, |s_to|), p.u.
  std::vector<double> aux;

  bool operator==(const GridState&) const = default;
};

/// Set-points: (p, q) for every renewable in device order, then (p, q) for
/// every storage unit.
using Action = std::vector<double>;

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Static per-component range of an action, ignoring potential generation
/// and stored energy.
std::vector<Bounds> action_bounds(const NetworkSpec& spec, const NetworkIndex& index);

// Load reactive power at a constant 0.95 lagging power factor.
inline constexpr double kLoadPowerFactor = 0.95;
double load_reactive(double p);

/// Maps a raw action onto the feasible set for the current potential
/// generation and state of charge. Idempotent.
/// Throws Error{ArityMismatch}.
Action clip_action(std::span<const double> a, const NetworkSpec& spec, const NetworkIndex& index,
                   const StochasticVars& vars, std::span<const double> soc, double delta_t);

struct StorageStep {
  double soc = 0.0;       // MWh
  double p_actual = 0.0;  // p.u., > 0 discharges
};

/// Charging stores sqrt(eff) of the absorbed energy; discharging draws
/// 1/sqrt(eff) of the delivered energy. Clamping to the capacity window
/// reduces p_actual so the energy identity holds exactly.
StorageStep storage_transition(double soc, double p_set, const DeviceSpec& dev, double delta_t,
                               double base_mva);

/// Energy dissipated by a storage device delivering `p` p.u. for `delta_t` hours.
double storage_conversion_loss(double p, const DeviceSpec& dev, double delta_t, double base_mva);

struct TransitionOutcome {
  GridState state;
  double e_loss = 0.0;            // MWh
  double penalty = 0.0;
  bool diverged = false;
  double network_loss = 0.0;      // p.u.
  int solver_iterations = 0;
};

/// Owns the static network data and the solver workspace. One per environment.
class Simulator {
 public:
  explicit Simulator(std::shared_ptr<const NetworkSpec> spec);

  /// Advances `s` by one transition. `a` must already be clipped.
  /// Divergence is reported in the outcome; the returned state is then `s`.
  TransitionOutcome next_state(const GridState& s, std::span<const double> a,
                               const StochasticVars& vars, double delta_t);

  /// Solves the network for the device injections in `s` and writes bus_v,
  /// branch_s and the slack device injection. Returns the solver iteration count.
  /// Throws Error{Diverged}.
  int solve_state(GridState& s, double* network_loss = nullptr);

  const NetworkSpec& spec() const { return *spec_; }
  const NetworkIndex& index() const { return index_; }
  std::shared_ptr<const NetworkSpec> shared_spec() const { return spec_; }

 private:
  std::shared_ptr<const NetworkSpec> spec_;
  NetworkIndex index_;
  PowerFlowSolver solver_;
  std::vector<Complex> injections_;
};

/// Network losses plus curtailed renewable energy plus storage conversion
/// losses, in MWh. Throws Error{DivergedState} on a diverged outcome.
double energy_loss(const TransitionOutcome& outcome, const StochasticVars& vars,
                   const NetworkSpec& spec, const NetworkIndex& index, double delta_t);

/// Sum of linear voltage and branch-rating overshoots.
double penalty(const GridState& state, const NetworkSpec& spec);

struct RewardClip {
  double c_min = -100.0;
  double c_max = 0.0;
};

/// clamp(-(e_loss + lamb * penalty), c_min, c_max). This composition is the
/// framework's own choice of reward functional.
double reward(double e_loss, double penalty, double lamb, RewardClip clip);

}  // namespace anm
