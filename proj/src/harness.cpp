#include "anm/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "anm/anm6.hpp"
#include "anm/error.hpp"

namespace anm::harness {

namespace {

constexpr std::uint64_t kAgentStream = 2;

// Generic environment for a bare network file: loads and renewable potentials
// are drawn uniformly within device bounds at every step.
std::unique_ptr<Environment> network_file_env(const std::string& path, std::uint64_t seed) {
  auto parsed = load_network_file(path);
  auto spec = std::make_shared<const NetworkSpec>(std::move(parsed.spec));
  auto index = std::make_shared<const NetworkIndex>(NetworkIndex::build(*spec));

  EnvConfig cfg;
  cfg.spec = spec;
  cfg.K = 0;
  cfg.delta_t = 0.25;
  cfg.gamma = 0.995;
  cfg.lamb = 100.0;
  cfg.costs_clipping = {-100.0, 0.0};
  cfg.seed = seed;

  EnvironmentHooks hooks;
  hooks.init_state = [spec, index](CounterRng&) {
    GridState s;
    s.dev_p.assign(spec->devices.size(), 0.0);
    s.dev_q.assign(spec->devices.size(), 0.0);
    for (std::size_t d : index->storage) {
      s.soc.push_back(0.5 * (spec->devices[d].soc_min + spec->devices[d].soc_max));
    }
    s.gen_p_max.assign(index->renewables.size(), 0.0);
    return s;
  };
  hooks.next_vars = [spec, index](const GridState&, CounterRng& rng) {
    StochasticVars v;
    for (std::size_t d : index->loads) v.load_p.push_back(rng.uniform(spec->devices[d].p_min, spec->devices[d].p_max));
    for (std::size_t d : index->renewables) v.gen_p_max.push_back(rng.uniform(0.0, spec->devices[d].p_max));
    return v;
  };
  return std::make_unique<Environment>(std::move(cfg), std::move(hooks));
}

std::string number_array(const std::vector<double>& v) {
  std::string out = "[";
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    if (i) out += ',';
    out += buf;
  }
  return out + "]";
}

}  // namespace

std::unique_ptr<Environment> make_env(const EnvSource& src, std::uint64_t seed) {
  if (!src.network_file.empty()) return network_file_env(src.network_file, seed);
  if (src.name == "anm6-easy") {
    auto [cfg, hooks] = anm6::build(anm6::default_data_dir(), seed);
    return std::make_unique<Environment>(std::move(cfg), std::move(hooks));
  }
  throw Error(ErrorCode::InvalidConfig, "unknown environment '" + src.name + "'");
}

std::vector<double> act(Agent agent, const Environment& env, std::uint64_t seed, std::uint64_t step) {
  std::vector<double> a(env.action_size(), 0.0);
  if (agent == Agent::Random) {
    CounterRng rng(seed, kAgentStream, step);
    auto bounds = env.action_space();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(bounds[i].lo, bounds[i].hi);
  }
  return a;
}

std::string RunReport::to_json() const {
  nlohmann::json j;
  j["episodes"] = episodes;
  j["steps"] = steps;
  j["return_sum"] = return_sum;
  j["wall_time_s"] = wall_time_s;
  j["steps_per_second"] = steps_per_second;
  j["divergences"] = divergences;
  j["solver_iterations"] = {{"total", solver_iterations},
                            {"mean", steps ? static_cast<double>(solver_iterations) / static_cast<double>(steps) : 0.0},
                            {"min", min_iterations},
                            {"max", max_iterations}};
  return j.dump();
}

RunReport run(const RunOptions& opts) {
  if (opts.horizon < 1) throw Error(ErrorCode::InvalidConfig, "horizon must be >= 1");
  auto env = make_env(opts.env, opts.seed);

  std::ofstream out;
  if (!opts.out_path.empty()) {
    out.open(opts.out_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + opts.out_path);
  }

  RunReport rep;
  rep.episodes = 1;
  rep.min_iterations = std::numeric_limits<int>::max();
  double ret = 0.0;
  auto t0 = std::chrono::steady_clock::now();
  env->reset();
  for (std::uint64_t t = 0; t < opts.horizon; ++t) {
    auto a = act(opts.agent, *env, opts.seed, t);
    bool was_done = env->done();
    StepResult r = env->step(a);
    ret += r.reward;
    if (r.info.diverged && !was_done) ++rep.divergences;
    rep.solver_iterations += static_cast<std::uint64_t>(r.info.solver_iterations);
    rep.min_iterations = std::min(rep.min_iterations, r.info.solver_iterations);
    rep.max_iterations = std::max(rep.max_iterations, r.info.solver_iterations);
    if (out) out << to_json_line(env->render_frame(), "\"action\":" + number_array(a)) << '\n';
  }
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.steps = opts.horizon;
  rep.return_sum.push_back(ret);
  rep.steps_per_second = rep.wall_time_s > 0.0 ? static_cast<double>(rep.steps) / rep.wall_time_s : 0.0;
  env->close();
  return rep;
}

RunReport bench(const BenchOptions& opts) {
  if (opts.steps < 1) throw Error(ErrorCode::InvalidConfig, "steps must be >= 1");
  const unsigned workers = std::max(1u, opts.parallel);

  std::vector<std::unique_ptr<Environment>> envs;
  for (unsigned w = 0; w < workers; ++w) {
    envs.push_back(make_env(opts.env, w));
    envs.back()->reset();
  }

  struct Tally {
    std::uint64_t iterations = 0;
    int min_it = std::numeric_limits<int>::max();
    int max_it = 0;
    std::uint64_t divergences = 0;
    double ret = 0.0;
  };
  std::vector<Tally> tallies(workers);

  for (auto& env : envs) {
    const std::vector<double> idle(env->action_size(), 0.0);
    for (std::uint64_t i = 0; i < opts.warmup; ++i) env->step(idle);
  }

  auto work = [&](unsigned w) {
    Environment& env = *envs[w];
    const std::vector<double> idle(env.action_size(), 0.0);
    Tally& t = tallies[w];
    for (std::uint64_t i = 0; i < opts.steps; ++i) {
      bool was_done = env.done();
      StepResult r = env.step(idle);
      t.ret += r.reward;
      t.iterations += static_cast<std::uint64_t>(r.info.solver_iterations);
      t.min_it = std::min(t.min_it, r.info.solver_iterations);
      t.max_it = std::max(t.max_it, r.info.solver_iterations);
      if (r.info.diverged && !was_done) ++t.divergences;
    }
  };

  auto t0 = std::chrono::steady_clock::now();
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& th : threads) th.join();
  }
  auto wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunReport rep;
  rep.episodes = workers;
  rep.steps = opts.steps * workers;
  rep.wall_time_s = wall;
  rep.steps_per_second = wall > 0.0 ? static_cast<double>(rep.steps) / wall : 0.0;
  rep.min_iterations = std::numeric_limits<int>::max();
  for (const auto& t : tallies) {
    rep.return_sum.push_back(t.ret);
    rep.solver_iterations += t.iterations;
    rep.divergences += t.divergences;
    rep.min_iterations = std::min(rep.min_iterations, t.min_it);
    rep.max_iterations = std::max(rep.max_iterations, t.max_it);
  }
  return rep;
}

ReplayResult replay(const EnvSource& src, std::uint64_t seed, const std::string& trajectory_path) {
  std::ifstream in(trajectory_path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read " + trajectory_path);
  auto env = make_env(src, seed);
  env->reset();
  ReplayResult res;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    auto action = j.at("action").get<std::vector<double>>();
    double recorded = j.at("reward").get<double>();
    StepResult r = env->step(action);
    if (std::bit_cast<std::uint64_t>(r.reward) != std::bit_cast<std::uint64_t>(recorded)) ++res.mismatches;
    ++res.steps;
  }
  return res;
}

int validate_file(const std::string& path, std::ostream& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    out << "ERROR " << path << ": cannot read file\n";
    return 2;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  ValidationReport rep;
  try {
    auto parsed = parse_network(ss.str());
    rep = validate(parsed.spec);
    for (auto& w : parsed.warnings) rep.issues.insert(rep.issues.begin(), w);
  } catch (const Error& e) {
    rep.add(Severity::Error, "document", e.what());
  }
  for (const auto& issue : rep.issues) {
    out << (issue.severity == Severity::Error ? "ERROR " : "WARN ") << issue.path << ": " << issue.message << '\n';
  }
  out << (rep.ok ? "OK" : "INVALID") << '\n';
  return rep.ok ? 0 : 1;
}

}  // namespace anm::harness
