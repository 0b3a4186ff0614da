#include "mcpbandit/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "mcpbandit/version.hpp"

namespace mcpbandit {

namespace {

const std::set<std::string> kKnownPolicies = {"gmcp", "lasso",  "ols",
                                              "oful", "random", "oracle"};

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& key) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config: bad number for " + key + ": '" + text + "'");
  }
  return value;
}

long parse_long(const std::string& text, const std::string& key) {
  long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config: bad integer for " + key + ": '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ConfigError("config: bad flag for " + key + ": '" + text + "'");
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.horizon < 1) throw ConfigError("config: T must be >= 1");
  if (spec.trials < 1) throw ConfigError("config: trials must be >= 1");
  if (spec.policies.empty()) throw ConfigError("config: no policies");
  for (const auto& p : spec.policies) {
    if (!kKnownPolicies.count(p)) {
      throw ConfigError("config: unknown policy '" + p + "'");
    }
  }
  if (spec.env != "study1" && spec.env != "study2" && spec.env != "replay") {
    throw ConfigError("config: unknown env '" + spec.env + "'");
  }
  if (spec.env == "replay" && !spec.replay_table && spec.replay_path.empty()) {
    throw ConfigError("config: replay env needs a replay path");
  }
}

ExperimentSpec prepared_copy(const ExperimentSpec& spec_in) {
  ExperimentSpec spec = spec_in;
  validate_spec(spec);
  if (spec.env == "replay" && !spec.replay_table) {
    spec.replay_table =
        std::make_shared<const ReplayTable>(load_replay(spec.replay_path));
  }
  return spec;
}

GmcpConfig bandit_config(const ExperimentSpec& spec, const Environment& env) {
  GmcpConfig config;
  config.num_arms = env.num_arms();
  config.dim = env.dim();
  config.family = spec.family;
  config.t0 = resolved_t0(spec, env.num_arms());
  config.h = spec.h;
  config.lambda1_0 = spec.lambda1_0;
  config.lambda2_0 = spec.lambda2_0;
  config.penalty_a = spec.penalty_a;
  config.refit_every = spec.refit_every;
  config.fidelity = spec.fidelity;
  config.solver.tol = spec.solver_tol;
  config.solver.max_iter = spec.solver_max_iter;
  return config;
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

double resolved_t0(const ExperimentSpec& spec, int num_arms) {
  return spec.t0 > 0.0 ? spec.t0 : 20.0 * num_arms;
}

std::unique_ptr<Environment> make_environment(const ExperimentSpec& spec,
                                              std::mt19937_64& perm_rng) {
  if (spec.env == "study1") {
    return std::make_unique<SyntheticEnv>(make_study1(spec.d));
  }
  if (spec.env == "study2") {
    return std::make_unique<SyntheticEnv>(
        make_study2(spec.num_arms, spec.base_seed));
  }
  if (spec.env == "replay") {
    auto table = spec.replay_table;
    if (!table) {
      if (spec.replay_path.empty()) {
        throw ConfigError("config: replay env needs a replay path");
      }
      table = std::make_shared<const ReplayTable>(load_replay(spec.replay_path));
    }
    auto env = std::make_unique<ReplayEnv>(table);
    env->shuffle(perm_rng);
    return env;
  }
  throw ConfigError("config: unknown env '" + spec.env + "'");
}

std::unique_ptr<Policy> make_policy(const std::string& name,
                                    const ExperimentSpec& spec,
                                    const Environment& env) {
  if (name == "gmcp") {
    return std::make_unique<GmcpPolicy>(bandit_config(spec, env));
  }
  if (name == "lasso") {
    return std::make_unique<LassoBanditPolicy>(bandit_config(spec, env));
  }
  if (name == "ols") {
    return std::make_unique<OlsBanditPolicy>(bandit_config(spec, env),
                                             spec.ols_ridge);
  }
  if (name == "oful") {
    if (!spec.family.is_linear()) {
      throw ConfigError("config: oful supports the linear family only");
    }
    return std::make_unique<OfulPolicy>(env.num_arms(), env.dim(), spec.family,
                                        spec.oful_width, spec.oful_ridge);
  }
  if (name == "random") {
    return std::make_unique<RandomPolicy>(env.num_arms());
  }
  if (name == "oracle") {
    return std::make_unique<OraclePolicy>(env);
  }
  throw ConfigError("config: unknown policy '" + name + "'");
}

RegretTrace run_trial(const ExperimentSpec& spec, const std::string& policy,
                      int trial_index) {
  const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(trial_index);
  std::mt19937_64 context_rng = make_rng(seed, 1);
  std::mt19937_64 reward_rng = make_rng(seed, 2);
  std::mt19937_64 policy_rng = make_rng(seed, 3);

  auto env = make_environment(spec, context_rng);
  auto pol = make_policy(policy, spec, *env);

  RegretTrace trace;
  trace.policy = policy;
  trace.steps.reserve(static_cast<std::size_t>(spec.horizon));
  double cumulative = 0.0;
  for (long t = 1; t <= spec.horizon; ++t) {
    std::optional<Eigen::VectorXd> x = env->next_context(context_rng);
    if (!x) {
      std::fprintf(stderr,
                   "warning: replay stream exhausted at t=%ld (horizon %ld)\n",
                   t, spec.horizon);
      break;
    }
    const Decision decision = pol->select(*x, t, policy_rng);
    const double reward = env->realize_reward(decision.arm, *x, reward_rng);
    pol->update(decision, *x, reward, t);

    const int best = env->best_arm(*x);
    StepRecord record;
    record.t = t;
    record.arm = decision.arm;
    record.was_random = decision.was_random;
    record.realized_reward = reward;
    record.oracle_expected_best = env->oracle_expected(best, *x);
    record.expected_chosen = env->oracle_expected(decision.arm, *x);
    cumulative += record.oracle_expected_best - record.expected_chosen;
    record.cumulative_regret = cumulative;
    trace.steps.push_back(record);
  }
  return trace;
}

AggregateResult run_experiment(const ExperimentSpec& spec_in) {
  const ExperimentSpec spec = prepared_copy(spec_in);

  {
    // Surface policy configuration errors before spawning workers.
    std::mt19937_64 probe_rng = make_rng(spec.base_seed, 1);
    auto env = make_environment(spec, probe_rng);
    for (const auto& name : spec.policies) make_policy(name, spec, *env);
  }

  const int num_policies = static_cast<int>(spec.policies.size());
  const long total_tasks = static_cast<long>(num_policies) * spec.trials;
  std::vector<std::vector<RegretTrace>> traces(
      spec.policies.size(), std::vector<RegretTrace>(spec.trials));

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  long worker_count = spec.threads > 0 ? spec.threads : static_cast<long>(hw);
  worker_count = std::min(worker_count, total_tasks);

  std::atomic<long> next_task{0};
  std::mutex error_mutex;
  std::string first_error;

  const auto worker = [&]() {
    while (true) {
      const long task = next_task.fetch_add(1);
      if (task >= total_tasks) return;
      const int policy_index = static_cast<int>(task / spec.trials);
      const int trial = static_cast<int>(task % spec.trials);
      try {
        traces[policy_index][trial] =
            run_trial(spec, spec.policies[policy_index], trial);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) {
          first_error = "trial failed (policy=" + spec.policies[policy_index] +
                        ", seed=" +
                        std::to_string(spec.base_seed +
                                       static_cast<std::uint64_t>(trial)) +
                        "): " + e.what();
        }
        return;
      }
    }
  };

  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (long i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!first_error.empty()) {
    throw std::runtime_error(first_error);
  }

  AggregateResult result;
  result.trials = spec.trials;
  result.has_optimal_fraction = spec.emit_optimal_fraction;

  std::size_t length = traces[0][0].steps.size();
  for (const auto& per_policy : traces) {
    for (const auto& trace : per_policy) {
      length = std::min(length, trace.steps.size());
    }
  }
  result.horizon = static_cast<long>(length);

  for (int p = 0; p < num_policies; ++p) {
    PolicyCurve curve;
    curve.policy = spec.policies[p];
    curve.mean_regret.resize(length);
    curve.se_regret.resize(length);
    if (spec.emit_optimal_fraction) curve.optimal_fraction.resize(length);

    // Running count of optimal picks per trial, reused across t.
    std::vector<double> optimal_counts(spec.trials, 0.0);
    for (std::size_t i = 0; i < length; ++i) {
      double mean = 0.0;
      for (int trial = 0; trial < spec.trials; ++trial) {
        mean += traces[p][trial].steps[i].cumulative_regret;
      }
      mean /= spec.trials;
      double var = 0.0;
      for (int trial = 0; trial < spec.trials; ++trial) {
        const double diff =
            traces[p][trial].steps[i].cumulative_regret - mean;
        var += diff * diff;
      }
      curve.mean_regret[i] = mean;
      curve.se_regret[i] =
          spec.trials > 1
              ? std::sqrt(var / (spec.trials - 1) / spec.trials)
              : 0.0;
      if (spec.emit_optimal_fraction) {
        double fraction_sum = 0.0;
        for (int trial = 0; trial < spec.trials; ++trial) {
          const StepRecord& record = traces[p][trial].steps[i];
          if (record.expected_chosen >= record.oracle_expected_best) {
            optimal_counts[trial] += 1.0;
          }
          fraction_sum += optimal_counts[trial] / static_cast<double>(i + 1);
        }
        curve.optimal_fraction[i] = fraction_sum / spec.trials;
      }
    }
    result.curves.push_back(std::move(curve));
  }
  return result;
}

void emit_results(const AggregateResult& result, const ExperimentSpec& spec,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write results to " + path);
  }
  out << "policy,t,mean_regret,se_regret,optimal_fraction\n";
  for (const auto& curve : result.curves) {
    for (long t = 1; t <= result.horizon; ++t) {
      const std::size_t i = static_cast<std::size_t>(t - 1);
      out << curve.policy << ',' << t << ','
          << format_double(curve.mean_regret[i]) << ','
          << format_double(curve.se_regret[i]) << ',';
      if (result.has_optimal_fraction) {
        out << format_double(curve.optimal_fraction[i]);
      }
      out << '\n';
    }
  }
  out.close();
  if (!out) {
    throw std::runtime_error("failed writing results to " + path);
  }

  std::ofstream manifest(path + ".manifest");
  if (!manifest) {
    throw std::runtime_error("cannot write manifest next to " + path);
  }
  manifest << manifest_text(spec);
}

AggregateResult read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read results from " + path);
  }
  std::string line;
  if (!std::getline(in, line) ||
      trim(line) != "policy,t,mean_regret,se_regret,optimal_fraction") {
    throw std::runtime_error("results: unexpected header in " + path);
  }

  AggregateResult result;
  PolicyCurve* current = nullptr;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 5) {
      throw std::runtime_error("results: malformed row '" + line + "'");
    }
    if (!current || current->policy != fields[0]) {
      result.curves.emplace_back();
      current = &result.curves.back();
      current->policy = fields[0];
    }
    current->mean_regret.push_back(parse_double(fields[2], "mean_regret"));
    current->se_regret.push_back(parse_double(fields[3], "se_regret"));
    if (!fields[4].empty()) {
      current->optimal_fraction.push_back(
          parse_double(fields[4], "optimal_fraction"));
      result.has_optimal_fraction = true;
    }
  }
  if (result.curves.empty()) {
    throw std::runtime_error("results: no data rows in " + path);
  }
  result.horizon = static_cast<long>(result.curves.front().mean_regret.size());
  return result;
}

std::string manifest_text(const ExperimentSpec& spec) {
  int num_arms = spec.num_arms;
  Eigen::Index dim = spec.d;
  if (spec.env == "study1") {
    num_arms = 2;
  } else if (spec.env == "study2") {
    dim = 100;
  } else if (spec.env == "replay" && spec.replay_table) {
    num_arms = spec.replay_table->num_arms();
    dim = spec.replay_table->dim();
  }

  std::ostringstream out;
  out << "version=" << kVersion << '\n';
  out << "env=" << spec.env << '\n';
  out << "d=" << dim << '\n';
  out << "K=" << num_arms << '\n';
  if (spec.env == "replay") out << "replay=" << spec.replay_path << '\n';
  out << "T=" << spec.horizon << '\n';
  out << "trials=" << spec.trials << '\n';
  out << "seed=" << spec.base_seed << '\n';
  out << "policies=";
  for (std::size_t i = 0; i < spec.policies.size(); ++i) {
    if (i) out << ',';
    out << spec.policies[i];
  }
  out << '\n';
  out << "out=" << spec.output_path << '\n';
  out << "fidelity=" << (spec.fidelity ? 1 : 0) << '\n';
  out << "emit_optimal_fraction=" << (spec.emit_optimal_fraction ? 1 : 0)
      << '\n';
  out << "threads=" << spec.threads << '\n';
  if (spec.family.is_linear()) {
    out << "family=linear\n";
    out << "noise_sd=" << format_double(spec.family.noise_sd()) << '\n';
  } else {
    out << "family=logistic\n";
    out << "payoff=" << format_double(spec.family.payoff()) << '\n';
  }
  out << "t0=" << format_double(resolved_t0(spec, num_arms)) << '\n';
  out << "h=" << format_double(spec.h) << '\n';
  out << "lambda1_0=" << format_double(spec.lambda1_0) << '\n';
  out << "lambda2_0=" << format_double(spec.lambda2_0) << '\n';
  out << "a=" << format_double(spec.penalty_a) << '\n';
  out << "refit_every=" << spec.refit_every << '\n';
  out << "solver_tol=" << format_double(spec.solver_tol) << '\n';
  out << "solver_max_iter=" << spec.solver_max_iter << '\n';
  out << "oful_width=" << format_double(spec.oful_width) << '\n';
  out << "oful_ridge=" << format_double(spec.oful_ridge) << '\n';
  out << "ols_ridge=" << format_double(spec.ols_ridge) << '\n';
  return out.str();
}

ExperimentSpec parse_config_text(const std::string& text) {
  ExperimentSpec spec;
  std::string family_kind = "linear";
  double noise_sd = 1.0;
  double payoff = 1.0;

  std::stringstream ss(text);
  std::string raw;
  while (std::getline(ss, raw)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "version") {
      // informational only
    } else if (key == "env") {
      spec.env = value;
    } else if (key == "d") {
      spec.d = parse_long(value, key);
    } else if (key == "K") {
      spec.num_arms = static_cast<int>(parse_long(value, key));
    } else if (key == "replay") {
      spec.replay_path = value;
    } else if (key == "T") {
      spec.horizon = parse_long(value, key);
    } else if (key == "trials") {
      spec.trials = static_cast<int>(parse_long(value, key));
    } else if (key == "seed") {
      spec.base_seed = static_cast<std::uint64_t>(parse_long(value, key));
    } else if (key == "policies") {
      spec.policies = split_list(value);
    } else if (key == "out") {
      spec.output_path = value;
    } else if (key == "fidelity") {
      spec.fidelity = parse_bool(value, key);
    } else if (key == "emit_optimal_fraction") {
      spec.emit_optimal_fraction = parse_bool(value, key);
    } else if (key == "threads") {
      spec.threads = static_cast<int>(parse_long(value, key));
    } else if (key == "family") {
      if (value != "linear" && value != "logistic") {
        throw ConfigError("config: family must be linear or logistic");
      }
      family_kind = value;
    } else if (key == "noise_sd") {
      noise_sd = parse_double(value, key);
    } else if (key == "payoff") {
      payoff = parse_double(value, key);
    } else if (key == "t0") {
      spec.t0 = parse_double(value, key);
    } else if (key == "h") {
      spec.h = parse_double(value, key);
    } else if (key == "lambda1_0") {
      spec.lambda1_0 = parse_double(value, key);
    } else if (key == "lambda2_0") {
      spec.lambda2_0 = parse_double(value, key);
    } else if (key == "a") {
      spec.penalty_a = parse_double(value, key);
    } else if (key == "refit_every") {
      spec.refit_every = static_cast<int>(parse_long(value, key));
    } else if (key == "solver_tol") {
      spec.solver_tol = parse_double(value, key);
    } else if (key == "solver_max_iter") {
      spec.solver_max_iter = static_cast<int>(parse_long(value, key));
    } else if (key == "oful_width") {
      spec.oful_width = parse_double(value, key);
    } else if (key == "oful_ridge") {
      spec.oful_ridge = parse_double(value, key);
    } else if (key == "ols_ridge") {
      spec.ols_ridge = parse_double(value, key);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  spec.family = family_kind == "logistic"
                    ? GlmFamily::logistic_binary(payoff)
                    : GlmFamily::linear_gaussian(noise_sd);
  return spec;
}

ExperimentSpec parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace mcpbandit
