// anm: run episodes, benchmark stepping throughput, validate network files.
//
// Exit codes: 0 ok, 1 invalid network (validate), 2 bad arguments or
// unreadable input, 3 environment build failure.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "anm/error.hpp"
#include "anm/harness.hpp"

namespace {

constexpr int kExitBadArgs = 2;
constexpr int kExitBuildFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace anm;

  CLI::App app{"Active network management environment engine"};
  app.require_subcommand(1);

  harness::RunOptions run_opts;
  std::string agent_name = "do-nothing";
  auto* run = app.add_subcommand("run", "Run one episode with a baseline agent");
  auto* env_opt = run->add_option("--env", run_opts.env.name, "Registered environment name (anm6-easy)");
  auto* net_opt = run->add_option("--network", run_opts.env.network_file, "Network file")->check(CLI::ExistingFile);
  env_opt->excludes(net_opt);
  run->add_option("--agent", agent_name, "do-nothing | random")
      ->check(CLI::IsMember({"do-nothing", "random"}));
  run->add_option("--horizon", run_opts.horizon, "Number of steps")->required()->check(CLI::PositiveNumber);
  run->add_option("--seed", run_opts.seed, "Seed")->required();
  run->add_option("--out", run_opts.out_path, "JSONL snapshot output");

  harness::BenchOptions bench_opts;
  bench_opts.env.name = "anm6-easy";
  auto* bench = app.add_subcommand("bench", "Time do-nothing steps after a 100-step warm-up");
  bench->add_option("--env", bench_opts.env.name, "Registered environment name");
  bench->add_option("--steps", bench_opts.steps, "Timed steps per environment")->required()->check(CLI::PositiveNumber);
  bench->add_option("--parallel", bench_opts.parallel, "Independent environments on separate threads")
      ->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a network file");
  validate->add_option("file", validate_path, "Network file")->required();

  harness::EnvSource replay_env;
  std::uint64_t replay_seed = 0;
  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Re-run the actions of a trajectory file and compare rewards");
  auto* renv = replay->add_option("--env", replay_env.name, "Registered environment name");
  auto* rnet = replay->add_option("--network", replay_env.network_file, "Network file")->check(CLI::ExistingFile);
  renv->excludes(rnet);
  replay->add_option("--seed", replay_seed, "Seed used for the recorded run")->required();
  replay->add_option("file", replay_path, "Trajectory file written by run --out")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitBadArgs;
  }

  if (*validate) return harness::validate_file(validate_path, std::cout);

  if (*run) {
    if (run_opts.env.name.empty() && run_opts.env.network_file.empty()) {
      std::cerr << "run: one of --env or --network is required\n";
      return kExitBadArgs;
    }
    run_opts.agent = agent_name == "random" ? harness::Agent::Random : harness::Agent::DoNothing;
    try {
      std::cout << harness::run(run_opts).to_json() << '\n';
    } catch (const Error& e) {
      std::cerr << "run: " << e.what() << '\n';
      return kExitBuildFailure;
    }
    return 0;
  }

  if (*bench) {
    try {
      std::cout << harness::bench(bench_opts).to_json() << '\n';
    } catch (const Error& e) {
      std::cerr << "bench: " << e.what() << '\n';
      return kExitBuildFailure;
    }
    return 0;
  }

  if (*replay) {
    if (replay_env.name.empty() && replay_env.network_file.empty()) {
      std::cerr << "replay: one of --env or --network is required\n";
      return kExitBadArgs;
    }
    try {
      auto res = harness::replay(replay_env, replay_seed, replay_path);
      std::cout << "{\"steps\":" << res.steps << ",\"mismatches\":" << res.mismatches << "}\n";
      return res.mismatches == 0 ? 0 : 1;
    } catch (const Error& e) {
      std::cerr << "replay: " << e.what() << '\n';
      return kExitBuildFailure;
    }
  }
  return 0;
}
