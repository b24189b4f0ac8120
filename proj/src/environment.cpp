#include "anm/environment.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "anm/error.hpp"

namespace anm {

namespace {

void append_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_array(std::string& out, const char* key, const std::vector<double>& values) {
  out += '"';
  out += key;
  out += "\":[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    append_number(out, values[i]);
  }
  out += "],";
}

void append_field(std::string& out, const char* key, double v) {
  out += '"';
  out += key;
  out += "\":";
  append_number(out, v);
  out += ',';
}

std::size_t quantity_size(Quantity q, const NetworkIndex& index, std::size_t n_branches,
                          std::size_t K) {
  switch (q) {
    case Quantity::DevP:
    case Quantity::DevQ: return index.device_bus.size();
    case Quantity::Soc: return index.storage.size();
    case Quantity::GenPMax: return index.renewables.size();
    case Quantity::BusVMag: return index.n_bus;
    case Quantity::BranchS: return n_branches;
    case Quantity::Aux: return K;
  }
  return 0;
}

double quantity_value(Quantity q, std::size_t i, const GridState& s) {
  switch (q) {
    case Quantity::DevP: return s.dev_p[i];
    case Quantity::DevQ: return s.dev_q[i];
    case Quantity::Soc: return s.soc[i];
    case Quantity::GenPMax: return s.gen_p_max[i];
    case Quantity::BusVMag: return std::abs(s.bus_v[i]);
    case Quantity::BranchS: return s.branch_s[i];
    case Quantity::Aux: return s.aux[i];
  }
  return 0.0;
}

constexpr Quantity kFullOrder[] = {Quantity::DevP,    Quantity::DevQ,    Quantity::Soc,
                                   Quantity::GenPMax, Quantity::BusVMag, Quantity::BranchS,
                                   Quantity::Aux};

void invalid(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, path + ": " + msg);
}

}  // namespace

std::string to_json_line(const StateSnapshot& snap, const std::string& extra) {
  std::string out;
  out.reserve(1024);
  out += "{\"version\":" + std::to_string(snap.version) + ",\"step\":" + std::to_string(snap.step) + ',';
  append_field(out, "time_hours", snap.time_hours);
  append_array(out, "dev_p", snap.dev_p);
  append_array(out, "dev_q", snap.dev_q);
  append_array(out, "soc", snap.soc);
  append_array(out, "gen_p_max", snap.gen_p_max);
  append_array(out, "bus_v_mag", snap.bus_v_mag);
  append_array(out, "bus_v_ang", snap.bus_v_ang);
  append_array(out, "branch_s", snap.branch_s);
  append_array(out, "aux", snap.aux);
  append_field(out, "reward", snap.reward);
  append_field(out, "e_loss", snap.e_loss);
  append_field(out, "penalty", snap.penalty);
  out += "\"done\":";
  out += snap.done ? "true" : "false";
  if (!extra.empty()) {
    out += ',';
    out += extra;
  }
  out += '}';
  return out;
}

StateSnapshot parse_snapshot(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  try {
    StateSnapshot s;
    s.version = j.at("version").get<int>();
    s.step = j.at("step").get<std::uint64_t>();
    s.time_hours = j.at("time_hours").get<double>();
    s.dev_p = j.at("dev_p").get<std::vector<double>>();
    s.dev_q = j.at("dev_q").get<std::vector<double>>();
    s.soc = j.at("soc").get<std::vector<double>>();
    s.gen_p_max = j.at("gen_p_max").get<std::vector<double>>();
    s.bus_v_mag = j.at("bus_v_mag").get<std::vector<double>>();
    s.bus_v_ang = j.at("bus_v_ang").get<std::vector<double>>();
    s.branch_s = j.at("branch_s").get<std::vector<double>>();
    s.aux = j.at("aux").get<std::vector<double>>();
    s.reward = j.at("reward").get<double>();
    s.e_loss = j.at("e_loss").get<double>();
    s.penalty = j.at("penalty").get<double>();
    s.done = j.at("done").get<bool>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadField, e.what());
  }
}

std::size_t observation_size(const ObservationSelector& sel, const NetworkIndex& index,
                             std::size_t n_branches, std::size_t K) {
  if (!sel.full_state) return sel.components.size();
  std::size_t n = 0;
  for (Quantity q : kFullOrder) n += quantity_size(q, index, n_branches, K);
  return n;
}

void extract_observation(const ObservationSelector& sel, const GridState& state,
                         const NetworkIndex& index, Observation& out) {
  out.clear();
  if (!sel.full_state) {
    for (const auto& c : sel.components) out.push_back(quantity_value(c.kind, c.index, state));
    return;
  }
  out.insert(out.end(), state.dev_p.begin(), state.dev_p.end());
  out.insert(out.end(), state.dev_q.begin(), state.dev_q.end());
  out.insert(out.end(), state.soc.begin(), state.soc.end());
  out.insert(out.end(), state.gen_p_max.begin(), state.gen_p_max.end());
  for (std::size_t i = 0; i < index.n_bus; ++i) out.push_back(std::abs(state.bus_v[i]));
  out.insert(out.end(), state.branch_s.begin(), state.branch_s.end());
  out.insert(out.end(), state.aux.begin(), state.aux.end());
}

Environment::Environment(EnvConfig config, EnvironmentHooks hooks)
    : config_(std::move(config)), hooks_(std::move(hooks)) {
  if (!config_.spec) invalid("spec", "missing network");
  index_ = NetworkIndex::build(*config_.spec);

  if (!(std::isfinite(config_.delta_t) && config_.delta_t > 0.0)) invalid("delta_t", "must be > 0");
  if (!(config_.gamma > 0.0 && config_.gamma <= 1.0)) invalid("gamma", "must be in (0, 1]");
  if (!(std::isfinite(config_.lamb) && config_.lamb >= 0.0)) invalid("lamb", "must be >= 0");
  if (config_.aux_bounds.size() != config_.K) {
    invalid("aux_bounds", "expected " + std::to_string(config_.K) + " pairs");
  }
  for (std::size_t i = 0; i < config_.aux_bounds.size(); ++i) {
    if (!(config_.aux_bounds[i].lo <= config_.aux_bounds[i].hi)) {
      invalid("aux_bounds[" + std::to_string(i) + "]", "lo > hi");
    }
  }
  const auto& clip = config_.costs_clipping;
  if (!(clip.c_min <= 0.0 && 0.0 <= clip.c_max)) invalid("costs_clipping", "requires c_min <= 0 <= c_max");

  const std::size_t n_br = config_.spec->branches.size();
  const auto& sel = config_.observation;
  if (!sel.full_state) {
    if (sel.components.empty()) invalid("observation", "empty selector");
    for (std::size_t i = 0; i < sel.components.size(); ++i) {
      const auto& c = sel.components[i];
      if (c.index >= quantity_size(c.kind, index_, n_br, config_.K)) {
        invalid("observation[" + std::to_string(i) + "]", "index out of range");
      }
    }
  }
  obs_size_ = anm::observation_size(sel, index_, n_br, config_.K);

  if (!hooks_.init_state) invalid("hooks.init_state", "missing");
  if (!hooks_.next_vars) invalid("hooks.next_vars", "missing");
  if (hooks_.observation_bounds && hooks_.observation_bounds().size() != obs_size_) {
    invalid("hooks.observation_bounds", "size differs from the observation length");
  }

  sim_ = std::make_unique<Simulator>(config_.spec);
}

void Environment::require_open() const {
  if (closed_) throw Error(ErrorCode::Closed, "environment is closed");
}

void Environment::require_reset() const {
  if (!reset_) throw Error(ErrorCode::NotReset, "reset() must be called first");
}

const GridState& Environment::state() const {
  require_open();
  require_reset();
  return state_;
}

Observation Environment::reset() {
  require_open();
  CounterRng rng(config_.seed, 0, 0);
  GridState s = hooks_.init_state(rng);

  const auto& spec = *config_.spec;
  const std::size_t n_dev = spec.devices.size();
  if (s.dev_p.size() != n_dev || s.dev_q.size() != n_dev || s.soc.size() != index_.storage.size() ||
      s.gen_p_max.size() != index_.renewables.size() || s.aux.size() != config_.K) {
    throw Error(ErrorCode::InitStateInfeasible, "initial state has the wrong arity");
  }
  for (std::size_t k = 0; k < index_.storage.size(); ++k) {
    const auto& dev = spec.devices[index_.storage[k]];
    if (!(s.soc[k] >= dev.soc_min && s.soc[k] <= dev.soc_max)) {
      throw Error(ErrorCode::InitStateInfeasible, "soc[" + std::to_string(k) + "] outside capacity");
    }
  }
  try {
    sim_->solve_state(s);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Diverged) throw Error(ErrorCode::InitStateInfeasible, e.what());
    throw;
  }

  state_ = std::move(s);
  step_ = 0;
  reset_ = true;
  done_ = false;
  last_reward_ = last_e_loss_ = last_penalty_ = 0.0;
  extract_observation(config_.observation, state_, index_, last_obs_);
  return last_obs_;
}

StepResult Environment::step(std::span<const double> action) {
  require_open();
  require_reset();
  if (action.size() != index_.action_size()) {
    throw Error(ErrorCode::ArityMismatch, "action has " + std::to_string(action.size()) +
                                              " entries, expected " + std::to_string(index_.action_size()));
  }
  StepResult res;
  if (done_) {
    res.obs = last_obs_;
    res.done = true;
    res.info.diverged = true;
    last_reward_ = 0.0;
    return res;
  }

  CounterRng rng(config_.seed, 1, step_);
  StochasticVars vars = hooks_.next_vars(state_, rng);
  if (vars.aux.size() != config_.K) {
    throw Error(ErrorCode::ArityMismatch, "next_vars returned " + std::to_string(vars.aux.size()) +
                                              " auxiliary values, expected " + std::to_string(config_.K));
  }
  const auto& spec = *config_.spec;
  Action clipped = clip_action(action, spec, index_, vars, state_.soc, config_.delta_t);
  TransitionOutcome out = sim_->next_state(state_, clipped, vars, config_.delta_t);

  ++step_;
  res.info.diverged = out.diverged;
  res.info.solver_iterations = out.solver_iterations;
  if (out.diverged) {
    done_ = true;
    res.reward = config_.costs_clipping.c_min;
    res.done = true;
    last_e_loss_ = last_penalty_ = 0.0;
  } else {
    state_ = std::move(out.state);
    res.reward = reward(out.e_loss, out.penalty, config_.lamb, config_.costs_clipping);
    res.info.e_loss = out.e_loss;
    res.info.penalty = out.penalty;
    res.info.network_loss = out.network_loss;
    last_e_loss_ = out.e_loss;
    last_penalty_ = out.penalty;
    extract_observation(config_.observation, state_, index_, last_obs_);
  }
  last_reward_ = res.reward;
  res.obs = last_obs_;
  return res;
}

Observation Environment::observation(const GridState& state) const {
  Observation out;
  extract_observation(config_.observation, state, index_, out);
  return out;
}

std::optional<std::vector<Bounds>> Environment::observation_bounds() const {
  if (!hooks_.observation_bounds) return std::nullopt;
  return hooks_.observation_bounds();
}

std::vector<Bounds> Environment::action_space() const {
  return action_bounds(*config_.spec, index_);
}

StateSnapshot Environment::render_frame() const {
  require_open();
  require_reset();
  StateSnapshot snap;
  snap.step = step_;
  snap.time_hours = static_cast<double>(step_) * config_.delta_t;
  snap.dev_p = state_.dev_p;
  snap.dev_q = state_.dev_q;
  snap.soc = state_.soc;
  snap.gen_p_max = state_.gen_p_max;
  for (const auto& v : state_.bus_v) {
    snap.bus_v_mag.push_back(std::abs(v));
    snap.bus_v_ang.push_back(std::arg(v));
  }
  snap.branch_s = state_.branch_s;
  snap.aux = state_.aux;
  snap.reward = last_reward_;
  snap.e_loss = last_e_loss_;
  snap.penalty = last_penalty_;
  snap.done = done_;
  return snap;
}

void Environment::close() {
  if (closed_) return;
  closed_ = true;
  sim_.reset();
  state_ = {};
  last_obs_.clear();
}

}  // namespace anm
