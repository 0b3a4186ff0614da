// Command-line harness: run regret experiments on the synthetic presets or a
// replay CSV and emit a results CSV plus its manifest.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "mcpbandit/harness.hpp"
#include "mcpbandit/version.hpp"

namespace {

using mcpbandit::ExperimentSpec;

void add_run_options(CLI::App* cmd, ExperimentSpec& spec,
                     std::string& policies_csv) {
  cmd->add_option("--T", spec.horizon, "Horizon (steps per trial)");
  cmd->add_option("--trials", spec.trials, "Number of seeded trials");
  cmd->add_option("--seed", spec.base_seed, "Base seed (trial i uses seed+i)");
  cmd->add_option("--policies", policies_csv,
                  "Comma-separated: gmcp,lasso,ols,oful,random,oracle");
  cmd->add_option("--out", spec.output_path, "Results CSV path");
  cmd->add_flag("--fidelity", spec.fidelity, "Refit every arm every step");
  cmd->add_flag("--optimal-fraction", spec.emit_optimal_fraction,
                "Emit the optimal-action fraction column");
  cmd->add_option("--threads", spec.threads, "Worker threads (0 = auto)");
  cmd->add_option("--t0", spec.t0, "Exploration scale (<=0: 20*K)");
  cmd->add_option("--margin", spec.h, "Optimality margin h");
  cmd->add_option("--lambda1", spec.lambda1_0, "lambda1_0 schedule scale");
  cmd->add_option("--lambda2", spec.lambda2_0, "lambda2_0 schedule scale");
  cmd->add_option("--a", spec.penalty_a, "MCP concavity parameter a");
  cmd->add_option("--refit-every", spec.refit_every,
                  "Full refresh cadence outside fidelity mode");
  cmd->add_option("--oful-width", spec.oful_width, "OFUL confidence width");
  cmd->add_option("--ols-ridge", spec.ols_ridge, "OLS ridge stabilizer");
}

int execute(const ExperimentSpec& spec) {
  const mcpbandit::AggregateResult result = mcpbandit::run_experiment(spec);

  ExperimentSpec manifest_spec = spec;
  if (spec.env == "replay" && !manifest_spec.replay_table) {
    manifest_spec.replay_table = std::make_shared<const mcpbandit::ReplayTable>(
        mcpbandit::load_replay(spec.replay_path));
  }
  mcpbandit::emit_results(result, manifest_spec, spec.output_path);

  std::printf("wrote %s (+.manifest), horizon %ld, %d trials\n",
              spec.output_path.c_str(), result.horizon, result.trials);
  for (const auto& curve : result.curves) {
    std::printf("  %-8s final mean regret %.4f (se %.4f)\n",
                curve.policy.c_str(), curve.mean_regret.back(),
                curve.se_regret.back());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MCP-penalized GLM bandit experiment harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mcpbandit::kVersion);

  ExperimentSpec spec;
  std::string policies_csv;

  auto* preset = app.add_subcommand("preset", "Run a synthetic preset");
  std::string preset_name;
  preset->add_option("name", preset_name, "study1 or study2")->required();
  preset->add_option("--d", spec.d, "Covariate dimension (study1)");
  preset->add_option("--K", spec.num_arms, "Arm count (study2)");
  add_run_options(preset, spec, policies_csv);

  auto* run = app.add_subcommand("run", "Run from a key=value config file");
  std::string config_path;
  run->add_option("config", config_path, "Config file")->required();

  auto* replay = app.add_subcommand("replay", "Run on a replay CSV");
  std::string replay_path;
  replay->add_option("csv", replay_path, "Replay CSV path")->required();
  std::string family_name = "linear";
  double noise_sd = 1.0;
  double payoff = 1.0;
  replay->add_option("--family", family_name, "linear or logistic");
  replay->add_option("--noise-sd", noise_sd, "Gaussian noise sd (linear)");
  replay->add_option("--payoff", payoff, "Reward per click (logistic)");
  add_run_options(replay, spec, policies_csv);

  auto* validate = app.add_subcommand("validate", "Parse-check a replay CSV");
  std::string validate_path;
  validate->add_option("csv", validate_path, "Replay CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (preset->parsed()) {
      if (preset_name != "study1" && preset_name != "study2") {
        throw mcpbandit::ConfigError("preset must be study1 or study2");
      }
      spec.env = preset_name;
      if (!policies_csv.empty()) {
        spec.policies = mcpbandit::parse_config_text("policies=" + policies_csv)
                            .policies;
      }
      return execute(spec);
    }
    if (run->parsed()) {
      return execute(mcpbandit::parse_config_file(config_path));
    }
    if (replay->parsed()) {
      spec.env = "replay";
      spec.replay_path = replay_path;
      spec.emit_optimal_fraction = true;
      if (family_name == "logistic") {
        spec.family = mcpbandit::GlmFamily::logistic_binary(payoff);
      } else if (family_name == "linear") {
        spec.family = mcpbandit::GlmFamily::linear_gaussian(noise_sd);
      } else {
        throw mcpbandit::ConfigError("family must be linear or logistic");
      }
      if (!policies_csv.empty()) {
        spec.policies = mcpbandit::parse_config_text("policies=" + policies_csv)
                            .policies;
      }
      return execute(spec);
    }
    if (validate->parsed()) {
      const mcpbandit::ReplayTable table = mcpbandit::load_replay(validate_path);
      std::printf("ok: %ld rows, %ld covariates, %d arms\n",
                  static_cast<long>(table.rows()),
                  static_cast<long>(table.dim()), table.num_arms());
      return 0;
    }
  } catch (const mcpbandit::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const mcpbandit::ReplayParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
