#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "anm/environment.hpp"

namespace anm::anm6 {

inline constexpr std::size_t kStepsPerDay = 96;
inline constexpr double kDeltaT = 0.25;

/// Demand and potential-generation day curves keyed by device id.
struct DailyProfileSet {
  std::size_t steps_per_day = 0;
  std::map<std::int64_t, std::vector<double>> demand;
  std::map<std::int64_t, std::vector<double>> potential;
};

/// Reference 6-bus network. Line ratings, storage parameters and the time
/// resolution are reference values chosen for this implementation.
NetworkSpec network();

/// Default data directory: $ANM_PROFILE_DIR if set, else the compiled-in path.
std::string default_data_dir();

/// Loads `profiles.json` and checks it against `profiles.json.sha256`.
/// Throws Error{ProfileFileMissing | ProfileArityMismatch | ProfileChecksumMismatch}.
DailyProfileSet load_profiles(const std::string& dir, const NetworkSpec& spec);

StochasticVars vars_at(const DailyProfileSet& profiles, const NetworkSpec& spec,
                       const NetworkIndex& index, std::size_t t);

GridState init_state(const DailyProfileSet& profiles, const NetworkSpec& spec,
                     const NetworkIndex& index);

StochasticVars next_vars(const GridState& state, const DailyProfileSet& profiles,
                         const NetworkSpec& spec, const NetworkIndex& index);

std::pair<EnvConfig, EnvironmentHooks> build(const std::string& data_dir = default_data_dir(),
                                             std::uint64_t seed = 0);

}  // namespace anm::anm6
