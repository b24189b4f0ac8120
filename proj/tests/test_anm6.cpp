#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "anm/anm6.hpp"
#include "anm/error.hpp"
#include "support/oracle.hpp"

using namespace anm;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  NetworkSpec spec = anm6::network();
  NetworkIndex index = NetworkIndex::build(spec);
  anm6::DailyProfileSet profiles = anm6::load_profiles(anm6::default_data_dir(), spec);
};

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("anm6_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Writes a profile file plus a matching checksum computed by sha256sum.
void write_profiles(const fs::path& dir, const nlohmann::json& doc, bool checksum = true) {
  std::ofstream(dir / "profiles.json") << doc.dump();
  if (checksum) {
    std::string cmd = "cd '" + dir.string() + "' && sha256sum profiles.json > profiles.json.sha256";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
  }
}

nlohmann::json shipped_profiles() {
  std::ifstream in(fs::path(anm6::default_data_dir()) / "profiles.json");
  return nlohmann::json::parse(in);
}

ErrorCode load_error(const fs::path& dir) {
  try {
    anm6::load_profiles(dir.string(), anm6::network());
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a profile error";
  return ErrorCode::Closed;
}

}  // namespace

TEST(Anm6Build, DeviceRoster) {
  auto [cfg, hooks] = anm6::build();
  std::vector<DeviceKind> kinds;
  for (const auto& d : cfg.spec->devices) kinds.push_back(d.kind);
  EXPECT_EQ(kinds, (std::vector<DeviceKind>{DeviceKind::SlackGen, DeviceKind::Load, DeviceKind::RenewableGen,
                                            DeviceKind::Load, DeviceKind::RenewableGen, DeviceKind::Load,
                                            DeviceKind::Storage}));
  EXPECT_EQ(cfg.spec->buses.size(), 6u);
  // storage shares the EV garage bus
  EXPECT_EQ(cfg.spec->devices[6].bus, cfg.spec->devices[5].bus);
  EXPECT_EQ(cfg.K, 1u);
  ASSERT_EQ(cfg.aux_bounds.size(), 1u);
  EXPECT_EQ(cfg.aux_bounds[0].lo, 0.0);
  EXPECT_EQ(cfg.aux_bounds[0].hi, 95.0);
  EXPECT_EQ(cfg.delta_t, 0.25);
  EXPECT_TRUE(validate(*cfg.spec).ok);
}

TEST(Anm6Build, ShippedNetworkFileMatches) {
  auto parsed = load_network_file((fs::path(anm6::default_data_dir()) / "network.json").string());
  EXPECT_TRUE(parsed.warnings.empty());
  EXPECT_EQ(parsed.spec, anm6::network());
}

TEST(Anm6Profiles, ShippedDataInvariants) {
  Fixture f;
  EXPECT_EQ(f.profiles.steps_per_day, 96u);
  for (std::size_t d : f.index.loads) {
    const auto& dev = f.spec.devices[d];
    for (double v : f.profiles.demand.at(dev.id)) EXPECT_LE(v, 0.0);
  }
  for (std::size_t d : f.index.renewables) {
    const auto& dev = f.spec.devices[d];
    for (double v : f.profiles.potential.at(dev.id)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, dev.p_max);
    }
  }
}

TEST(Anm6Profiles, ShortSeries) {
  auto dir = scratch_dir("short");
  auto doc = shipped_profiles();
  doc["demand"]["3"].erase(doc["demand"]["3"].size() - 1);
  write_profiles(dir, doc);
  EXPECT_EQ(load_error(dir), ErrorCode::ProfileArityMismatch);
  // arity is reported even when the checksum is stale
  write_profiles(dir, doc, false);
  EXPECT_EQ(load_error(dir), ErrorCode::ProfileArityMismatch);
}

TEST(Anm6Profiles, MissingAndTampered) {
  EXPECT_EQ(load_error(scratch_dir("empty")), ErrorCode::ProfileFileMissing);

  auto dir = scratch_dir("nosum");
  write_profiles(dir, shipped_profiles(), false);
  EXPECT_EQ(load_error(dir), ErrorCode::ProfileFileMissing);

  dir = scratch_dir("tampered");
  fs::copy_file(fs::path(anm6::default_data_dir()) / "profiles.json.sha256", dir / "profiles.json.sha256");
  auto doc = shipped_profiles();
  doc["potential"]["2"][40] = 0.1234;
  std::ofstream(dir / "profiles.json") << doc.dump(1) << "\n";
  EXPECT_EQ(load_error(dir), ErrorCode::ProfileChecksumMismatch);

  dir = scratch_dir("steps");
  doc = shipped_profiles();
  doc["steps_per_day"] = 95;
  write_profiles(dir, doc);
  EXPECT_EQ(load_error(dir), ErrorCode::ProfileArityMismatch);
}

TEST(Anm6Profiles, DirectoryOverride) {
  auto dir = scratch_dir("override");
  ::setenv("ANM_PROFILE_DIR", dir.c_str(), 1);
  EXPECT_EQ(anm6::default_data_dir(), dir.string());
  EXPECT_THROW(anm6::build(), Error);
  ::unsetenv("ANM_PROFILE_DIR");
  EXPECT_NO_THROW(anm6::build());
}

TEST(Anm6NextVars, WrapsAndRepeats) {
  Fixture f;
  GridState s = anm6::init_state(f.profiles, f.spec, f.index);
  s.aux = {95.0};
  auto v = anm6::next_vars(s, f.profiles, f.spec, f.index);
  EXPECT_EQ(v.aux, std::vector<double>{0.0});
  EXPECT_EQ(v, anm6::vars_at(f.profiles, f.spec, f.index, 0));

  s.aux = {17.0};
  auto first = anm6::next_vars(s, f.profiles, f.spec, f.index);
  EXPECT_EQ(anm6::next_vars(s, f.profiles, f.spec, f.index), first);
  GridState walk = s;
  StochasticVars cur = first;
  for (int i = 0; i < 96; ++i) {
    walk.aux = cur.aux;
    cur = anm6::next_vars(walk, f.profiles, f.spec, f.index);
  }
  EXPECT_EQ(cur, first);
}

TEST(Anm6InitState, Invariants) {
  Fixture f;
  auto s = anm6::init_state(f.profiles, f.spec, f.index);
  EXPECT_EQ(s.aux, std::vector<double>{0.0});
  ASSERT_EQ(s.soc.size(), 1u);
  EXPECT_EQ(s.soc[0], 50.0);
  for (std::size_t d = 0; d < f.spec.devices.size(); ++d) {
    if (d == f.index.slack_device) continue;
    const auto& dev = f.spec.devices[d];
    EXPECT_GE(s.dev_p[d], dev.p_min);
    EXPECT_LE(s.dev_p[d], dev.p_max);
    EXPECT_GE(s.dev_q[d], dev.q_min);
    EXPECT_LE(s.dev_q[d], dev.q_max);
  }
  for (std::size_t r = 0; r < f.index.renewables.size(); ++r) {
    EXPECT_LE(s.dev_p[f.index.renewables[r]], s.gen_p_max[r]);
  }
  for (std::size_t l = 0; l < f.index.loads.size(); ++l) {
    std::size_t d = f.index.loads[l];
    EXPECT_NEAR(s.dev_q[d], s.dev_p[d] * std::tan(std::acos(0.95)), 1e-15);
  }
}

// The t=0 observation equals the profile values pushed through an
// independent Gauss-Seidel solve.
TEST(Anm6Reset, MatchesOracleAtTimeZero) {
  Fixture f;
  auto [cfg, hooks] = anm6::build();
  Environment env(cfg, hooks);
  auto o = env.reset();

  auto v0 = anm6::vars_at(f.profiles, f.spec, f.index, 0);
  std::vector<oracle::C> inj(6);
  const double tan_phi = std::sqrt(1.0 - 0.95 * 0.95) / 0.95;
  for (std::size_t l = 0; l < f.index.loads.size(); ++l) {
    inj[f.index.device_bus[f.index.loads[l]]] += oracle::C(v0.load_p[l], v0.load_p[l] * tan_phi);
  }
  for (std::size_t r = 0; r < f.index.renewables.size(); ++r) {
    inj[f.index.device_bus[f.index.renewables[r]]] += v0.gen_p_max[r];
  }
  auto gs = oracle::gauss_seidel(oracle::dense_admittance(f.spec), inj, 0);
  ASSERT_TRUE(gs);

  const std::size_t vmag_at = 7 + 7 + 1 + 2;
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(o[vmag_at + i], std::abs(gs->v[i]), 1e-7);
  EXPECT_NEAR(env.state().dev_p[0], gs->slack_power.real(), 1e-7);
  EXPECT_EQ(o.back(), 0.0);
  EXPECT_EQ(o[14], 50.0);
}

TEST(Anm6Smoke, EveryProfileIndexSolvesWithDoNothing) {
  auto [cfg, hooks] = anm6::build();
  Environment env(cfg, hooks);
  env.reset();
  const Action idle(env.action_size(), 0.0);
  for (int t = 0; t < 96; ++t) {
    auto r = env.step(idle);
    ASSERT_FALSE(r.done) << "step " << t;
  }
  EXPECT_EQ(env.state().aux[0], 0.0);
}
