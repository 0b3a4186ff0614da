#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcpbandit/environment.hpp"
#include "mcpbandit/policies.hpp"

namespace mcpbandit {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One experiment: an environment, a set of policies sharing one parameter
/// block, a horizon, and seeded trials.
struct ExperimentSpec {
  // environment
  std::string env = "study1";  // study1 | study2 | replay
  Eigen::Index d = 100;        // study1 covariate dimension
  int num_arms = 2;            // study2 arm count
  std::string replay_path;
  std::shared_ptr<const ReplayTable> replay_table;  // loaded on demand

  // reward model assumed by the learning policies (and used to generate
  // rewards in synthetic environments via the presets)
  GlmFamily family = GlmFamily::linear_gaussian(1.0);

  // run shape
  std::vector<std::string> policies{"gmcp", "lasso", "ols", "oful"};
  long horizon = 1000;
  int trials = 100;
  std::uint64_t base_seed = 12345;
  std::string output_path = "results.csv";
  bool fidelity = false;
  bool emit_optimal_fraction = false;
  int threads = 0;  // 0 = hardware concurrency, 1 = serial

  // shared bandit parameters
  double t0 = 0.0;  // <= 0 resolves to 20 * num_arms
  double h = 0.5;
  double lambda1_0 = 0.25;
  double lambda2_0 = 2.0;
  double penalty_a = 2.0;
  int refit_every = 25;
  double solver_tol = 1e-7;
  int solver_max_iter = 10000;
  double oful_width = 1.0;
  double oful_ridge = 1.0;
  double ols_ridge = 1e-3;
};

struct StepRecord {
  long t = 0;
  int arm = 0;
  bool was_random = false;
  double realized_reward = 0.0;
  double oracle_expected_best = 0.0;
  double expected_chosen = 0.0;
  double cumulative_regret = 0.0;
};

struct RegretTrace {
  std::string policy;
  std::vector<StepRecord> steps;

  double final_regret() const {
    return steps.empty() ? 0.0 : steps.back().cumulative_regret;
  }
};

struct PolicyCurve {
  std::string policy;
  std::vector<double> mean_regret;       // index t-1
  std::vector<double> se_regret;
  std::vector<double> optimal_fraction;  // mean cumulative optimal fraction
};

struct AggregateResult {
  long horizon = 0;
  int trials = 0;
  bool has_optimal_fraction = false;
  std::vector<PolicyCurve> curves;
};

/// Sub-stream rng: one base seed, distinct stream tags for context draws,
/// reward noise, and policy randomness.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream);

/// Effective exploration scale: spec.t0 when positive, else 20 * num_arms.
double resolved_t0(const ExperimentSpec& spec, int num_arms);

std::unique_ptr<Environment> make_environment(const ExperimentSpec& spec,
                                              std::mt19937_64& perm_rng);
std::unique_ptr<Policy> make_policy(const std::string& name,
                                    const ExperimentSpec& spec,
                                    const Environment& env);

/// One seeded trial of one policy. Regret is measured with the environment's
/// expected rewards under the true parameters, so the oracle traces zero.
RegretTrace run_trial(const ExperimentSpec& spec, const std::string& policy,
                      int trial_index);

/// trials x policies grid; trials may run concurrently, aggregation is a
/// deterministic reduce in trial order.
AggregateResult run_experiment(const ExperimentSpec& spec);

/// Write the long-format results CSV plus a `<path>.manifest` of key=value
/// lines holding every config value, the seed, and the code version.
void emit_results(const AggregateResult& result, const ExperimentSpec& spec,
                  const std::string& path);

AggregateResult read_results_csv(const std::string& path);

/// Flat key=value config, mirroring the CLI flags (also the manifest format).
ExperimentSpec parse_config_text(const std::string& text);
ExperimentSpec parse_config_file(const std::string& path);
std::string manifest_text(const ExperimentSpec& spec);

}  // namespace mcpbandit
