#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include "anm/anm6.hpp"
#include "anm/harness.hpp"

using namespace anm;
namespace fs = std::filesystem;

namespace {

const std::string kNetworkFile = std::string(ANM_SOURCE_DIR) + "/data/anm6_easy/network.json";

int cli(const std::string& args, std::string* out = nullptr) {
  auto log = fs::temp_directory_path() / "anm_cli_test.out";
  std::string cmd = std::string(ANM_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  int rc = std::system(cmd.c_str());
  if (out) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_temp(const std::string& name, const std::string& text) {
  auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

harness::RunOptions anm6_run(harness::Agent agent, std::uint64_t horizon, std::uint64_t seed) {
  harness::RunOptions o;
  o.env.name = "anm6-easy";
  o.agent = agent;
  o.horizon = horizon;
  o.seed = seed;
  return o;
}

}  // namespace

TEST(Run, DoNothingIsDeterministic) {
  auto a = harness::run(anm6_run(harness::Agent::DoNothing, 96, 42));
  auto b = harness::run(anm6_run(harness::Agent::DoNothing, 96, 42));
  ASSERT_EQ(a.return_sum.size(), 1u);
  EXPECT_EQ(a.return_sum, b.return_sum);
  EXPECT_EQ(a.steps, 96u);
  EXPECT_EQ(a.divergences, 0u);
  EXPECT_GE(a.return_sum[0], 96 * -100.0);
  EXPECT_LE(a.return_sum[0], 0.0);
}

TEST(Run, RandomAgentWritesSnapshots) {
  auto path = fs::temp_directory_path() / "anm_run_random.jsonl";
  auto opts = anm6_run(harness::Agent::Random, 10, 9);
  opts.out_path = path.string();
  auto rep = harness::run(opts);
  EXPECT_GE(rep.return_sum[0], 10 * -100.0);
  EXPECT_LE(rep.return_sum[0], 0.0);

  std::ifstream in(path);
  std::string line;
  std::uint64_t n = 0;
  while (std::getline(in, line)) {
    auto snap = parse_snapshot(line);
    EXPECT_EQ(snap.step, n + 1);
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("action").size(), 6u);
    ++n;
  }
  EXPECT_EQ(n, 10u);

  auto res = harness::replay(opts.env, 9, path.string());
  EXPECT_EQ(res.steps, 10u);
  EXPECT_EQ(res.mismatches, 0u);
}

TEST(Run, RandomAgentStaysInActionBounds) {
  auto env = harness::make_env({"anm6-easy", ""}, 0);
  auto bounds = env->action_space();
  for (std::uint64_t t = 0; t < 500; ++t) {
    auto a = harness::act(harness::Agent::Random, *env, 3, t);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_GE(a[i], bounds[i].lo);
      ASSERT_LE(a[i], bounds[i].hi);
    }
  }
  EXPECT_EQ(harness::act(harness::Agent::Random, *env, 3, 7), harness::act(harness::Agent::Random, *env, 3, 7));
}

TEST(Run, NetworkFileEnvironment) {
  harness::RunOptions o;
  o.env.network_file = kNetworkFile;
  o.agent = harness::Agent::Random;
  o.horizon = 50;
  o.seed = 4;
  auto a = harness::run(o);
  auto b = harness::run(o);
  EXPECT_EQ(a.return_sum, b.return_sum);
  o.seed = 5;
  EXPECT_NE(harness::run(o).return_sum, a.return_sum);
}

TEST(Bench, Reports) {
  harness::BenchOptions o;
  o.env.name = "anm6-easy";
  o.steps = 10000;
  auto a = harness::bench(o);
  EXPECT_EQ(a.steps, 10000u);
  EXPECT_GT(a.steps_per_second, 0.0);
  EXPECT_EQ(a.divergences, 0u);
  EXPECT_NEAR(a.steps_per_second, static_cast<double>(a.steps) / a.wall_time_s, 1e-6 * a.steps_per_second);
  auto b = harness::bench(o);
  EXPECT_EQ(a.solver_iterations, b.solver_iterations);
  EXPECT_EQ(a.min_iterations, b.min_iterations);
  EXPECT_EQ(a.max_iterations, b.max_iterations);

  o.steps = 1;
  EXPECT_EQ(harness::bench(o).steps, 1u);

  o.steps = 200;
  o.parallel = 3;
  auto p = harness::bench(o);
  EXPECT_EQ(p.steps, 600u);
  EXPECT_EQ(p.return_sum.size(), 3u);
  EXPECT_EQ(p.return_sum[0], p.return_sum[2]);
}

TEST(Validate, Files) {
  std::ostringstream out;
  EXPECT_EQ(harness::validate_file(kNetworkFile, out), 0);

  auto n = anm6::network();
  n.devices[1].kind = DeviceKind::SlackGen;
  n.devices[1].bus = 0;
  auto bad = write_temp("anm_dup_slack.json", serialize_network(n));
  std::ostringstream out2;
  EXPECT_EQ(harness::validate_file(bad.string(), out2), 1);
  EXPECT_NE(out2.str().find("ERROR device: multiple slack generators"), std::string::npos);

  std::ostringstream out3;
  EXPECT_EQ(harness::validate_file("/nonexistent/net.json", out3), 2);
}

TEST(Cli, ExitCodes) {
  std::string out;
  EXPECT_EQ(cli("validate " + kNetworkFile, &out), 0);
  EXPECT_NE(out.find("OK"), std::string::npos);

  auto n = anm6::network();
  n.devices.push_back(n.devices[0]);
  n.devices.back().id = 99;
  auto bad = write_temp("anm_cli_dup_slack.json", serialize_network(n));
  EXPECT_EQ(cli("validate " + bad.string(), &out), 1);
  EXPECT_NE(out.find("ERROR"), std::string::npos);

  EXPECT_EQ(cli("validate /nonexistent/net.json"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("run --env anm6-easy --agent greedy --horizon 3 --seed 1"), 2);
  EXPECT_EQ(cli("run --env anm6-easy --horizon 0 --seed 1"), 2);
  EXPECT_EQ(cli("run --agent random --horizon 3 --seed 1"), 2);
  EXPECT_EQ(cli("run --env nowhere --horizon 3 --seed 1"), 3);
  EXPECT_EQ(cli("run --network " + bad.string() + " --horizon 3 --seed 1"), 3);
  EXPECT_EQ(cli("bench --env anm6-easy --steps 0"), 2);

  auto empty = fs::temp_directory_path() / "anm_cli_no_profiles";
  fs::create_directories(empty);
  EXPECT_EQ(cli("run --env anm6-easy --horizon 3 --seed 1", nullptr), 0);
  std::string env_prefix = "ANM_PROFILE_DIR='" + empty.string() + "' ";
  int rc = std::system((env_prefix + ANM_CLI_PATH + " bench --env anm6-easy --steps 5 > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 3);
}

TEST(Cli, RunAndReplay) {
  auto traj = fs::temp_directory_path() / "anm_cli_traj.jsonl";
  std::string out;
  ASSERT_EQ(cli("run --env anm6-easy --agent random --horizon 25 --seed 77 --out " + traj.string(), &out), 0);
  auto rep = nlohmann::json::parse(out);
  EXPECT_EQ(rep.at("steps").get<int>(), 25);
  EXPECT_EQ(rep.at("return_sum").size(), 1u);
  ASSERT_EQ(cli("replay --env anm6-easy --seed 77 " + traj.string(), &out), 0);
  EXPECT_EQ(nlohmann::json::parse(out).at("mismatches").get<int>(), 0);

  ASSERT_EQ(cli("bench --env anm6-easy --steps 50", &out), 0);
  auto b = nlohmann::json::parse(out);
  EXPECT_EQ(b.at("steps").get<int>(), 50);
  EXPECT_EQ(b.at("divergences").get<int>(), 0);
}
