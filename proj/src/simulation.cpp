#include "anm/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "anm/error.hpp"

namespace anm {

namespace {

double clamp_finite(double v, double lo, double hi) {
  if (std::isnan(v)) v = 0.0;
  return std::clamp(v, lo, hi);
}

}  // namespace

double load_reactive(double p) {
  static const double ratio = std::tan(std::acos(kLoadPowerFactor));
  return p * ratio;
}

std::vector<Bounds> action_bounds(const NetworkSpec& spec, const NetworkIndex& index) {
  std::vector<Bounds> out;
  out.reserve(index.action_size());
  for (std::size_t d : index.renewables) {
    const auto& dev = spec.devices[d];
    out.push_back({0.0, dev.p_max});
    out.push_back({dev.q_min, dev.q_max});
  }
  for (std::size_t d : index.storage) {
    const auto& dev = spec.devices[d];
    out.push_back({dev.p_min, dev.p_max});
    out.push_back({dev.q_min, dev.q_max});
  }
  return out;
}

Action clip_action(std::span<const double> a, const NetworkSpec& spec, const NetworkIndex& index,
                   const StochasticVars& vars, std::span<const double> soc, double delta_t) {
  if (a.size() != index.action_size()) {
    throw Error(ErrorCode::ArityMismatch, "action has " + std::to_string(a.size()) +
                                              " entries, expected " + std::to_string(index.action_size()));
  }
  if (vars.gen_p_max.size() != index.renewables.size() || soc.size() != index.storage.size()) {
    throw Error(ErrorCode::ArityMismatch, "stochastic variables or state of charge do not match the network");
  }
  Action out(a.begin(), a.end());
  std::size_t k = 0;
  for (std::size_t r = 0; r < index.renewables.size(); ++r, k += 2) {
    const auto& dev = spec.devices[index.renewables[r]];
    double upper = std::max(0.0, std::min(dev.p_max, vars.gen_p_max[r]));
    out[k] = clamp_finite(a[k], 0.0, upper);
    out[k + 1] = clamp_finite(a[k + 1], dev.q_min, dev.q_max);
  }
  const double energy_scale = spec.base_mva * delta_t;
  for (std::size_t s = 0; s < index.storage.size(); ++s, k += 2) {
    const auto& dev = spec.devices[index.storage[s]];
    double lo = dev.p_min;
    double hi = dev.p_max;
    if (energy_scale > 0.0) {
      const double se = std::sqrt(dev.eff);
      hi = std::min(hi, std::max(0.0, (soc[s] - dev.soc_min) * se / energy_scale));
      lo = std::max(lo, -std::max(0.0, (dev.soc_max - soc[s]) / (se * energy_scale)));
    }
    out[k] = clamp_finite(a[k], lo, hi);
    out[k + 1] = clamp_finite(a[k + 1], dev.q_min, dev.q_max);
  }
  return out;
}

StorageStep storage_transition(double soc, double p_set, const DeviceSpec& dev, double delta_t,
                               double base_mva) {
  const double scale = base_mva * delta_t;
  if (p_set == 0.0 || scale == 0.0) return {soc, p_set};
  const double se = std::sqrt(dev.eff);
  if (p_set < 0.0) {
    double next = soc - p_set * scale * se;
    if (next > dev.soc_max) {
      double room = std::max(0.0, dev.soc_max - soc);
      return {soc + room, -room / (se * scale)};
    }
    return {next, p_set};
  }
  double next = soc - p_set * scale / se;
  if (next < dev.soc_min) {
    double avail = std::max(0.0, soc - dev.soc_min);
    return {soc - avail, avail * se / scale};
  }
  return {next, p_set};
}

double storage_conversion_loss(double p, const DeviceSpec& dev, double delta_t, double base_mva) {
  const double se = std::sqrt(dev.eff);
  const double e = std::fabs(p) * base_mva * delta_t;
  return p < 0.0 ? e * (1.0 - se) : e * (1.0 / se - 1.0);
}

Simulator::Simulator(std::shared_ptr<const NetworkSpec> spec)
    : spec_(std::move(spec)),
      index_(NetworkIndex::build(*spec_)),
      solver_(build_admittance(*spec_), index_.slack_bus),
      injections_(index_.n_bus) {}

int Simulator::solve_state(GridState& s, double* network_loss) {
  const auto& spec = *spec_;
  std::fill(injections_.begin(), injections_.end(), Complex{});
  for (std::size_t d = 0; d < spec.devices.size(); ++d) {
    if (d == index_.slack_device) continue;
    injections_[index_.device_bus[d]] += Complex(s.dev_p[d], s.dev_q[d]);
  }
  PowerFlowSolution sol = solver_.solve(injections_);

  auto flows = branch_flows(sol.v, spec, index_);
  s.bus_v = std::move(sol.v);
  s.branch_s.resize(flows.size());
  for (std::size_t k = 0; k < flows.size(); ++k) {
    s.branch_s[k] = std::max(std::abs(flows[k].s_from), std::abs(flows[k].s_to));
  }
  s.dev_p[index_.slack_device] = sol.slack_injection.real();
  s.dev_q[index_.slack_device] = sol.slack_injection.imag();
  if (network_loss) *network_loss = total_losses(flows);
  return sol.iterations;
}

TransitionOutcome Simulator::next_state(const GridState& s, std::span<const double> a,
                                        const StochasticVars& vars, double delta_t) {
  const auto& spec = *spec_;
  if (a.size() != index_.action_size()) {
    throw Error(ErrorCode::ArityMismatch, "action has " + std::to_string(a.size()) +
                                              " entries, expected " + std::to_string(index_.action_size()));
  }
  if (vars.load_p.size() != index_.loads.size() || vars.gen_p_max.size() != index_.renewables.size()) {
    throw Error(ErrorCode::ArityMismatch, "stochastic variables do not match the network devices");
  }

  TransitionOutcome out;
  GridState& ns = out.state;
  ns = s;

  for (std::size_t l = 0; l < index_.loads.size(); ++l) {
    std::size_t d = index_.loads[l];
    ns.dev_p[d] = vars.load_p[l];
    ns.dev_q[d] = load_reactive(vars.load_p[l]);
  }
  std::size_t k = 0;
  for (std::size_t r = 0; r < index_.renewables.size(); ++r, k += 2) {
    std::size_t d = index_.renewables[r];
    ns.dev_p[d] = a[k];
    ns.dev_q[d] = a[k + 1];
    ns.gen_p_max[r] = vars.gen_p_max[r];
  }
  for (std::size_t st = 0; st < index_.storage.size(); ++st, k += 2) {
    std::size_t d = index_.storage[st];
    auto step = storage_transition(s.soc[st], a[k], spec.devices[d], delta_t, spec.base_mva);
    ns.soc[st] = step.soc;
    ns.dev_p[d] = step.p_actual;
    ns.dev_q[d] = a[k + 1];
  }
  ns.aux = vars.aux;

  try {
    out.solver_iterations = solve_state(ns, &out.network_loss);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Diverged) throw;
    out.state = s;
    out.diverged = true;
    return out;
  }
  out.e_loss = energy_loss(out, vars, spec, index_, delta_t);
  out.penalty = penalty(ns, spec);
  return out;
}

double energy_loss(const TransitionOutcome& outcome, const StochasticVars& vars,
                   const NetworkSpec& spec, const NetworkIndex& index, double delta_t) {
  if (outcome.diverged) throw Error(ErrorCode::DivergedState, "energy loss of a diverged transition");
  const GridState& s = outcome.state;
  double curtailed = 0.0;
  for (std::size_t r = 0; r < index.renewables.size(); ++r) {
    curtailed += std::max(0.0, vars.gen_p_max[r] - s.dev_p[index.renewables[r]]);
  }
  double e = delta_t * spec.base_mva * (std::max(0.0, outcome.network_loss) + curtailed);
  for (std::size_t d : index.storage) {
    e += storage_conversion_loss(s.dev_p[d], spec.devices[d], delta_t, spec.base_mva);
  }
  return e;
}

double penalty(const GridState& state, const NetworkSpec& spec) {
  double phi = 0.0;
  for (std::size_t i = 0; i < spec.buses.size() && i < state.bus_v.size(); ++i) {
    double vm = std::abs(state.bus_v[i]);
    phi += std::max(0.0, vm - spec.buses[i].v_max) + std::max(0.0, spec.buses[i].v_min - vm);
  }
  for (std::size_t k = 0; k < spec.branches.size() && k < state.branch_s.size(); ++k) {
    phi += std::max(0.0, state.branch_s[k] - spec.branches[k].rate);
  }
  return phi;
}

double reward(double e_loss, double penalty, double lamb, RewardClip clip) {
  double r = -(e_loss + lamb * penalty);
  if (std::isnan(r)) return clip.c_min;
  return std::clamp(r, clip.c_min, clip.c_max);
}

}  // namespace anm
