#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace anm {

enum class BusKind : int { Slack = 0, PQ = 1 };

enum class DeviceKind : int { SlackGen = 0, Load = 1, RenewableGen = 2, Storage = 3 };

struct BusSpec {
  std::int64_t id = 0;
  BusKind kind = BusKind::PQ;
  double base_kv = 0.0;
  double v_max = 1.1;
  double v_min = 0.9;

  bool operator==(const BusSpec&) const = default;
};

struct BranchSpec {
  std::int64_t from_bus = 0;
  std::int64_t to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;
  double rate = 0.0;
  double tap = 1.0;
  double shift = 0.0;  // radians

  bool operator==(const BranchSpec&) const = default;
};

struct DeviceSpec {
  std::int64_t id = 0;
  std::int64_t bus = 0;
  DeviceKind kind = DeviceKind::Load;
  double p_max = 0.0;
  double p_min = 0.0;
  double q_max = 0.0;
  double q_min = 0.0;
  double soc_max = 0.0;  // MWh, storage only
  double soc_min = 0.0;  // MWh, storage only
  double eff = 0.0;      // round-trip, storage only

  bool operator==(const DeviceSpec&) const = default;
};

/// Per-unit description of a distribution network on `base_mva`.
///
/// Buses, branches and devices keep their external integer ids; `NetworkIndex`
/// maps them onto dense positions once the spec has been validated.
struct NetworkSpec {
  double base_mva = 100.0;
  std::vector<BusSpec> buses;
  std::vector<BranchSpec> branches;
  std::vector<DeviceSpec> devices;

  bool operator==(const NetworkSpec&) const = default;
};

enum class Severity { Error, Warn };

struct ValidationIssue {
  Severity severity = Severity::Error;
  std::string path;  // e.g. "branch[3].to"
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  // Parse-time warnings (unknown top-level keys) are folded in here by load helpers.
  void add(Severity severity, std::string path, std::string message);
};

/// Result of parsing a network document: the spec plus any non-fatal notes
/// such as ignored top-level keys.
struct ParsedNetwork {
  NetworkSpec spec;
  std::vector<ValidationIssue> warnings;
};

/// Parses the JSON network document (`baseMVA`, `bus`, `branch`, `device`).
/// Throws Error{MalformedDocument | MissingSection | BadField}.
ParsedNetwork parse_network(std::string_view text);

/// Inverse of parse_network. Numbers are written with 17 significant digits.
std::string serialize_network(const NetworkSpec& spec);

ParsedNetwork load_network_file(const std::string& path);

/// Checks every structural and physical invariant of the spec. Never throws.
ValidationReport validate(const NetworkSpec& spec);

/// Dense positional view of a validated spec, built once and shared by the
/// solver and the simulation hot loop.
struct NetworkIndex {
  std::size_t n_bus = 0;
  std::size_t slack_bus = 0;
  std::size_t slack_device = 0;
  std::vector<std::size_t> branch_from;
  std::vector<std::size_t> branch_to;
  std::vector<std::size_t> device_bus;
  std::vector<std::size_t> loads;       // device positions, spec order
  std::vector<std::size_t> renewables;  // device positions, spec order
  std::vector<std::size_t> storage;     // device positions, spec order

  /// Throws Error{InvalidConfig} if the spec does not validate.
  static NetworkIndex build(const NetworkSpec& spec);

  std::size_t action_size() const { return 2 * (renewables.size() + storage.size()); }
};

}  // namespace anm
