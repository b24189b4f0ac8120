#include "anm/network.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "anm/error.hpp"

namespace anm {

using nlohmann::json;

void ValidationReport::add(Severity severity, std::string path, std::string message) {
  if (severity == Severity::Error) ok = false;
  issues.push_back({severity, std::move(path), std::move(message)});
}

namespace {

const char* const kSections[] = {"baseMVA", "bus", "branch", "device"};

std::string at_path(const char* section, std::size_t row) {
  return std::string(section) + "[" + std::to_string(row) + "]";
}

double number(const json& row, std::size_t col, const char* section, std::size_t idx) {
  const json& v = row.at(col);
  if (!v.is_number()) {
    throw Error(ErrorCode::BadField,
                at_path(section, idx) + " column " + std::to_string(col) + " is not a number");
  }
  return v.get<double>();
}

std::int64_t integer(const json& row, std::size_t col, const char* section, std::size_t idx) {
  double d = number(row, col, section, idx);
  if (!std::isfinite(d) || d != std::floor(d) || std::fabs(d) > 9.0e15) {
    throw Error(ErrorCode::BadField,
                at_path(section, idx) + " column " + std::to_string(col) + " is not an integer");
  }
  return static_cast<std::int64_t>(d);
}

const json& rows(const json& doc, const char* section) {
  const json& arr = doc.at(section);
  if (!arr.is_array()) throw Error(ErrorCode::BadField, std::string(section) + " is not an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_array()) throw Error(ErrorCode::BadField, at_path(section, i) + " is not an array");
  }
  return arr;
}

void check_arity(const json& row, std::size_t lo, std::size_t hi, const char* section,
                 std::size_t idx) {
  if (row.size() < lo || row.size() > hi) {
    std::string want = lo == hi ? std::to_string(lo) : std::to_string(lo) + ".." + std::to_string(hi);
    throw Error(ErrorCode::BadField, at_path(section, idx) + " has " + std::to_string(row.size()) +
                                         " columns, expected " + want);
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ParsedNetwork parse_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "top level is not an object");

  ParsedNetwork out;
  for (const char* s : kSections) {
    if (!doc.contains(s)) throw Error(ErrorCode::MissingSection, s);
  }
  for (const auto& [key, _] : doc.items()) {
    bool known = false;
    for (const char* s : kSections) known = known || key == s;
    if (!known) out.warnings.push_back({Severity::Warn, key, "unknown top-level key ignored"});
  }

  if (!doc["baseMVA"].is_number()) throw Error(ErrorCode::BadField, "baseMVA is not a number");
  NetworkSpec& spec = out.spec;
  spec.base_mva = doc["baseMVA"].get<double>();

  const json& bus = rows(doc, "bus");
  spec.buses.reserve(bus.size());
  for (std::size_t i = 0; i < bus.size(); ++i) {
    const json& r = bus[i];
    check_arity(r, 5, 5, "bus", i);
    BusSpec b;
    b.id = integer(r, 0, "bus", i);
    auto kind = integer(r, 1, "bus", i);
    if (kind != 0 && kind != 1) throw Error(ErrorCode::BadField, at_path("bus", i) + " kind must be 0 or 1");
    b.kind = static_cast<BusKind>(kind);
    b.base_kv = number(r, 2, "bus", i);
    b.v_max = number(r, 3, "bus", i);
    b.v_min = number(r, 4, "bus", i);
    spec.buses.push_back(b);
  }

  const json& branch = rows(doc, "branch");
  spec.branches.reserve(branch.size());
  for (std::size_t i = 0; i < branch.size(); ++i) {
    const json& r = branch[i];
    check_arity(r, 6, 8, "branch", i);
    BranchSpec br;
    br.from_bus = integer(r, 0, "branch", i);
    br.to_bus = integer(r, 1, "branch", i);
    br.r = number(r, 2, "branch", i);
    br.x = number(r, 3, "branch", i);
    br.b = number(r, 4, "branch", i);
    br.rate = number(r, 5, "branch", i);
    if (r.size() > 6) br.tap = number(r, 6, "branch", i);
    if (r.size() > 7) br.shift = number(r, 7, "branch", i);
    spec.branches.push_back(br);
  }

  const json& device = rows(doc, "device");
  spec.devices.reserve(device.size());
  for (std::size_t i = 0; i < device.size(); ++i) {
    const json& r = device[i];
    check_arity(r, 10, 10, "device", i);
    DeviceSpec d;
    d.id = integer(r, 0, "device", i);
    d.bus = integer(r, 1, "device", i);
    auto kind = integer(r, 2, "device", i);
    if (kind < 0 || kind > 3) throw Error(ErrorCode::BadField, at_path("device", i) + " kind must be 0..3");
    d.kind = static_cast<DeviceKind>(kind);
    d.p_max = number(r, 3, "device", i);
    d.p_min = number(r, 4, "device", i);
    d.q_max = number(r, 5, "device", i);
    d.q_min = number(r, 6, "device", i);
    d.soc_max = number(r, 7, "device", i);
    d.soc_min = number(r, 8, "device", i);
    d.eff = number(r, 9, "device", i);
    spec.devices.push_back(d);
  }
  return out;
}

std::string serialize_network(const NetworkSpec& spec) {
  std::ostringstream os;
  auto row = [&os](std::initializer_list<std::string> cols) {
    os << "    [";
    bool first = true;
    for (const auto& c : cols) {
      if (!first) os << ", ";
      os << c;
      first = false;
    }
    os << "]";
  };
  auto sep = [&os](std::size_t i, std::size_t n) { os << (i + 1 < n ? ",\n" : "\n"); };

  os << "{\n  \"baseMVA\": " << fmt17(spec.base_mva) << ",\n  \"bus\": [\n";
  for (std::size_t i = 0; i < spec.buses.size(); ++i) {
    const auto& b = spec.buses[i];
    row({std::to_string(b.id), std::to_string(static_cast<int>(b.kind)), fmt17(b.base_kv),
         fmt17(b.v_max), fmt17(b.v_min)});
    sep(i, spec.buses.size());
  }
  os << "  ],\n  \"branch\": [\n";
  for (std::size_t i = 0; i < spec.branches.size(); ++i) {
    const auto& b = spec.branches[i];
    row({std::to_string(b.from_bus), std::to_string(b.to_bus), fmt17(b.r), fmt17(b.x), fmt17(b.b),
         fmt17(b.rate), fmt17(b.tap), fmt17(b.shift)});
    sep(i, spec.branches.size());
  }
  os << "  ],\n  \"device\": [\n";
  for (std::size_t i = 0; i < spec.devices.size(); ++i) {
    const auto& d = spec.devices[i];
    row({std::to_string(d.id), std::to_string(d.bus), std::to_string(static_cast<int>(d.kind)),
         fmt17(d.p_max), fmt17(d.p_min), fmt17(d.q_max), fmt17(d.q_min), fmt17(d.soc_max),
         fmt17(d.soc_min), fmt17(d.eff)});
    sep(i, spec.devices.size());
  }
  os << "  ]\n}\n";
  return os.str();
}

ParsedNetwork load_network_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedDocument, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

ValidationReport validate(const NetworkSpec& spec) {
  ValidationReport rep;
  const auto E = Severity::Error;

  if (!(std::isfinite(spec.base_mva) && spec.base_mva > 0.0)) rep.add(E, "baseMVA", "must be > 0");

  std::unordered_map<std::int64_t, std::size_t> bus_pos;
  std::size_t n_slack_bus = 0;
  std::int64_t slack_id = 0;
  for (std::size_t i = 0; i < spec.buses.size(); ++i) {
    const auto& b = spec.buses[i];
    auto path = at_path("bus", i);
    if (!bus_pos.emplace(b.id, i).second) rep.add(E, path + ".id", "duplicate bus id " + std::to_string(b.id));
    if (!(std::isfinite(b.base_kv) && b.base_kv > 0.0)) rep.add(E, path + ".base_kv", "must be > 0");
    if (!(std::isfinite(b.v_min) && std::isfinite(b.v_max) && 0.0 < b.v_min && b.v_min < b.v_max)) {
      rep.add(E, path, "voltage bounds must satisfy 0 < v_min < v_max");
    }
    if (b.kind == BusKind::Slack) {
      ++n_slack_bus;
      slack_id = b.id;
      if (!(b.v_min < 1.0 && 1.0 < b.v_max)) rep.add(E, path, "slack bus bounds must contain 1.0 p.u.");
    }
  }
  if (n_slack_bus == 0) rep.add(E, "bus", "no slack bus");
  if (n_slack_bus > 1) rep.add(E, "bus", "multiple slack buses");

  std::set<std::int64_t> connected;
  for (std::size_t i = 0; i < spec.branches.size(); ++i) {
    const auto& br = spec.branches[i];
    auto path = at_path("branch", i);
    bool ends_ok = true;
    if (!bus_pos.contains(br.from_bus)) {
      rep.add(E, path + ".from", "unknown bus id " + std::to_string(br.from_bus));
      ends_ok = false;
    }
    if (!bus_pos.contains(br.to_bus)) {
      rep.add(E, path + ".to", "unknown bus id " + std::to_string(br.to_bus));
      ends_ok = false;
    }
    if (ends_ok && br.from_bus == br.to_bus) rep.add(E, path, "from and to bus are the same");
    connected.insert(br.from_bus);
    connected.insert(br.to_bus);
    if (!(std::isfinite(br.r) && std::isfinite(br.x)) || std::hypot(br.r, br.x) == 0.0) {
      rep.add(E, path, "series impedance must be non-zero");
    }
    if (!(std::isfinite(br.b) && br.b >= 0.0)) rep.add(E, path + ".b", "must be >= 0");
    if (!(std::isfinite(br.rate) && br.rate > 0.0)) rep.add(E, path + ".rate", "must be > 0");
    if (!(std::isfinite(br.tap) && br.tap > 0.0)) rep.add(E, path + ".tap", "must be > 0");
    if (!std::isfinite(br.shift)) rep.add(E, path + ".shift", "must be finite");
  }
  for (std::size_t i = 0; i < spec.buses.size(); ++i) {
    const auto& b = spec.buses[i];
    if (b.kind == BusKind::PQ && !connected.contains(b.id)) {
      rep.add(Severity::Warn, at_path("bus", i), "bus is not connected to any branch");
    }
  }

  std::set<std::int64_t> dev_ids;
  std::size_t n_slack_gen = 0;
  for (std::size_t i = 0; i < spec.devices.size(); ++i) {
    const auto& d = spec.devices[i];
    auto path = at_path("device", i);
    if (!dev_ids.insert(d.id).second) rep.add(E, path + ".id", "duplicate device id " + std::to_string(d.id));
    if (!bus_pos.contains(d.bus)) rep.add(E, path + ".bus", "unknown bus id " + std::to_string(d.bus));
    for (double v : {d.p_max, d.p_min, d.q_max, d.q_min, d.soc_max, d.soc_min, d.eff}) {
      if (!std::isfinite(v)) {
        rep.add(E, path, "non-finite value");
        break;
      }
    }
    if (!(d.p_min <= d.p_max)) rep.add(E, path, "p_min > p_max");
    if (!(d.q_min <= d.q_max)) rep.add(E, path, "q_min > q_max");
    switch (d.kind) {
      case DeviceKind::SlackGen:
        ++n_slack_gen;
        if (n_slack_bus == 1 && d.bus != slack_id) rep.add(E, path + ".bus", "slack generator is not on the slack bus");
        break;
      case DeviceKind::Load:
        if (!(d.p_max <= 0.0)) rep.add(E, path + ".p_max", "load must have p_max <= 0");
        break;
      case DeviceKind::RenewableGen:
        if (d.p_min != 0.0) rep.add(E, path + ".p_min", "renewable generator must have p_min = 0");
        if (!(d.p_max >= 0.0)) rep.add(E, path + ".p_max", "renewable generator must have p_max >= 0");
        break;
      case DeviceKind::Storage:
        if (d.p_min != -d.p_max) rep.add(E, path, "storage must have p_min = -p_max");
        if (!(0.0 <= d.soc_min && d.soc_min < d.soc_max)) rep.add(E, path, "storage must have 0 <= soc_min < soc_max");
        if (!(0.0 < d.eff && d.eff <= 1.0)) rep.add(E, path + ".eff", "storage efficiency must be in (0, 1]");
        break;
    }
  }
  if (n_slack_gen == 0) rep.add(E, "device", "no slack generator");
  if (n_slack_gen > 1) rep.add(E, "device", "multiple slack generators");
  return rep;
}

NetworkIndex NetworkIndex::build(const NetworkSpec& spec) {
  auto rep = validate(spec);
  if (!rep.ok) {
    for (const auto& issue : rep.issues) {
      if (issue.severity == Severity::Error) {
        throw Error(ErrorCode::InvalidConfig, "spec." + issue.path + ": " + issue.message);
      }
    }
  }
  NetworkIndex idx;
  idx.n_bus = spec.buses.size();
  std::unordered_map<std::int64_t, std::size_t> bus_pos;
  for (std::size_t i = 0; i < spec.buses.size(); ++i) {
    bus_pos[spec.buses[i].id] = i;
    if (spec.buses[i].kind == BusKind::Slack) idx.slack_bus = i;
  }
  for (const auto& br : spec.branches) {
    idx.branch_from.push_back(bus_pos.at(br.from_bus));
    idx.branch_to.push_back(bus_pos.at(br.to_bus));
  }
  for (std::size_t i = 0; i < spec.devices.size(); ++i) {
    const auto& d = spec.devices[i];
    idx.device_bus.push_back(bus_pos.at(d.bus));
    switch (d.kind) {
      case DeviceKind::SlackGen: idx.slack_device = i; break;
      case DeviceKind::Load: idx.loads.push_back(i); break;
      case DeviceKind::RenewableGen: idx.renewables.push_back(i); break;
      case DeviceKind::Storage: idx.storage.push_back(i); break;
    }
  }
  return idx;
}

}  // namespace anm
