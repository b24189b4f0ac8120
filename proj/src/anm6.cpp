#include "anm/anm6.hpp"

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "anm/error.hpp"

#ifndef ANM_DATA_DIR
#define ANM_DATA_DIR "data"
#endif

namespace anm::anm6 {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::ProfileFileMissing, p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::ProfileChecksumMismatch, "sha256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::map<std::int64_t, std::vector<double>> read_series(const nlohmann::json& doc, const char* key) {
  std::map<std::int64_t, std::vector<double>> out;
  const auto& obj = doc.at(key);
  for (const auto& [id, arr] : obj.items()) {
    out[std::stoll(id)] = arr.get<std::vector<double>>();
  }
  return out;
}

}  // namespace

NetworkSpec network() {
  NetworkSpec n;
  n.base_mva = 100.0;
  n.buses = {
      {0, BusKind::Slack, 132.0, 1.04, 0.96},
      {1, BusKind::PQ, 33.0, 1.05, 0.95},
      {2, BusKind::PQ, 33.0, 1.05, 0.95},
      {3, BusKind::PQ, 33.0, 1.05, 0.95},
      {4, BusKind::PQ, 33.0, 1.05, 0.95},
      {5, BusKind::PQ, 33.0, 1.05, 0.95},
  };
  //            from to  r       x       b    rate  tap  shift
  n.branches = {
      {0, 1, 0.0036, 0.1834, 0.0, 0.32, 1.0, 0.0},
      {1, 2, 0.03, 0.022, 0.0, 0.25, 1.0, 0.0},
      {1, 3, 0.0307, 0.0621, 0.0, 0.18, 1.0, 0.0},
      {2, 4, 0.0303, 0.0611, 0.0, 0.18, 1.0, 0.0},
      {2, 5, 0.0159, 0.0502, 0.0, 0.18, 1.0, 0.0},
  };
  //           id bus kind                     p_max p_min  q_max  q_min  soc_max soc_min eff
  n.devices = {
      {0, 0, DeviceKind::SlackGen, 2.0, -2.0, 2.0, -2.0, 0.0, 0.0, 0.0},
      {1, 3, DeviceKind::Load, 0.0, -0.1, 0.0, -0.04, 0.0, 0.0, 0.0},        // residential area
      {2, 3, DeviceKind::RenewableGen, 0.3, 0.0, 0.3, -0.3, 0.0, 0.0, 0.0},  // solar farm
      {3, 4, DeviceKind::Load, 0.0, -0.3, 0.0, -0.1, 0.0, 0.0, 0.0},         // industrial complex
      {4, 4, DeviceKind::RenewableGen, 0.5, 0.0, 0.5, -0.5, 0.0, 0.0, 0.0},  // wind farm
      {5, 5, DeviceKind::Load, 0.0, -0.3, 0.0, -0.1, 0.0, 0.0, 0.0},         // EV charging garage
      {6, 5, DeviceKind::Storage, 0.5, -0.5, 0.5, -0.5, 100.0, 0.0, 0.9},
  };
  return n;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("ANM_PROFILE_DIR"); env && *env) return env;
  return std::string(ANM_DATA_DIR) + "/anm6_easy";
}

DailyProfileSet load_profiles(const std::string& dir, const NetworkSpec& spec) {
  const std::filesystem::path base(dir);
  const std::string text = read_file(base / "profiles.json");

  nlohmann::json doc;
  DailyProfileSet out;
  try {
    doc = nlohmann::json::parse(text);
    out.steps_per_day = doc.at("steps_per_day").get<std::size_t>();
    out.demand = read_series(doc, "demand");
    out.potential = read_series(doc, "potential");
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ProfileArityMismatch, std::string("unreadable profile document: ") + e.what());
  }

  if (out.steps_per_day != kStepsPerDay) {
    throw Error(ErrorCode::ProfileArityMismatch,
                "steps_per_day is " + std::to_string(out.steps_per_day) + ", expected 96");
  }
  auto check = [&](const std::map<std::int64_t, std::vector<double>>& series, DeviceKind kind,
                   const char* what) {
    std::size_t expected = 0;
    for (const auto& d : spec.devices) {
      if (d.kind != kind) continue;
      ++expected;
      auto it = series.find(d.id);
      if (it == series.end()) {
        throw Error(ErrorCode::ProfileArityMismatch, std::string("no ") + what + " series for device " +
                                                         std::to_string(d.id));
      }
      if (it->second.size() != out.steps_per_day) {
        throw Error(ErrorCode::ProfileArityMismatch,
                    std::string(what) + " series for device " + std::to_string(d.id) + " has " +
                        std::to_string(it->second.size()) + " entries");
      }
      for (double v : it->second) {
        bool ok = kind == DeviceKind::Load ? (v <= 0.0 && v >= d.p_min) : (v >= 0.0 && v <= d.p_max);
        if (!ok) {
          throw Error(ErrorCode::ProfileArityMismatch, std::string(what) + " value out of range for device " +
                                                           std::to_string(d.id));
        }
      }
    }
    if (series.size() != expected) {
      throw Error(ErrorCode::ProfileArityMismatch, std::string(what) + " lists unexpected devices");
    }
  };
  check(out.demand, DeviceKind::Load, "demand");
  check(out.potential, DeviceKind::RenewableGen, "potential");

  std::string expected_sum;
  {
    std::istringstream is(read_file(base / "profiles.json.sha256"));
    is >> expected_sum;
  }
  if (sha256_hex(text) != expected_sum) {
    throw Error(ErrorCode::ProfileChecksumMismatch, (base / "profiles.json").string());
  }
  return out;
}

StochasticVars vars_at(const DailyProfileSet& profiles, const NetworkSpec& spec,
                       const NetworkIndex& index, std::size_t t) {
  StochasticVars v;
  v.load_p.reserve(index.loads.size());
  for (std::size_t d : index.loads) v.load_p.push_back(profiles.demand.at(spec.devices[d].id)[t]);
  v.gen_p_max.reserve(index.renewables.size());
  for (std::size_t d : index.renewables) v.gen_p_max.push_back(profiles.potential.at(spec.devices[d].id)[t]);
  v.aux = {static_cast<double>(t)};
  return v;
}

GridState init_state(const DailyProfileSet& profiles, const NetworkSpec& spec,
                     const NetworkIndex& index) {
  StochasticVars v = vars_at(profiles, spec, index, 0);
  GridState s;
  s.dev_p.assign(spec.devices.size(), 0.0);
  s.dev_q.assign(spec.devices.size(), 0.0);
  for (std::size_t l = 0; l < index.loads.size(); ++l) {
    s.dev_p[index.loads[l]] = v.load_p[l];
    s.dev_q[index.loads[l]] = load_reactive(v.load_p[l]);
  }
  for (std::size_t r = 0; r < index.renewables.size(); ++r) s.dev_p[index.renewables[r]] = v.gen_p_max[r];
  for (std::size_t d : index.storage) {
    s.soc.push_back(0.5 * (spec.devices[d].soc_min + spec.devices[d].soc_max));
  }
  s.gen_p_max = v.gen_p_max;
  s.bus_v.assign(index.n_bus, Complex(1.0, 0.0));
  s.branch_s.assign(spec.branches.size(), 0.0);
  s.aux = v.aux;
  return s;
}

StochasticVars next_vars(const GridState& state, const DailyProfileSet& profiles,
                         const NetworkSpec& spec, const NetworkIndex& index) {
  auto t = static_cast<std::size_t>(state.aux.at(0));
  return vars_at(profiles, spec, index, (t + 1) % profiles.steps_per_day);
}

std::pair<EnvConfig, EnvironmentHooks> build(const std::string& data_dir, std::uint64_t seed) {
  auto spec = std::make_shared<const NetworkSpec>(network());
  auto index = std::make_shared<const NetworkIndex>(NetworkIndex::build(*spec));
  auto profiles = std::make_shared<const DailyProfileSet>(load_profiles(data_dir, *spec));

  EnvConfig cfg;
  cfg.spec = spec;
  cfg.observation = ObservationSelector::full();
  cfg.K = 1;
  cfg.delta_t = kDeltaT;
  cfg.gamma = 0.995;
  cfg.lamb = 100.0;
  cfg.aux_bounds = {{0.0, static_cast<double>(profiles->steps_per_day - 1)}};
  cfg.costs_clipping = {-100.0, 0.0};
  cfg.seed = seed;

  EnvironmentHooks hooks;
  hooks.init_state = [spec, index, profiles](CounterRng&) { return init_state(*profiles, *spec, *index); };
  hooks.next_vars = [spec, index, profiles](const GridState& s, CounterRng&) {
    return next_vars(s, *profiles, *spec, *index);
  };
  return {std::move(cfg), std::move(hooks)};
}

}  // namespace anm::anm6
