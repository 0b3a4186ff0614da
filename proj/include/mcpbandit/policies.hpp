#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcpbandit/dataset.hpp"
#include "mcpbandit/environment.hpp"
#include "mcpbandit/glm.hpp"
#include "mcpbandit/solver.hpp"

namespace mcpbandit {

/// True with probability min{1, t0/t}. A true draw means the caller assigns
/// an arm uniformly at random.
bool epsilon_decay_draw(long t, double t0, std::mt19937_64& rng);

/// lambda1(t) = lambda1_0 * sqrt(1 + log(d) / log(t+1)).
double lambda1_schedule(double t, int d, double lambda1_0);

/// lambda2(t) = lambda2_0 * sqrt((log(t+1) + log(d)) / (t+1)).
double lambda2_schedule(double t, int d, double lambda2_0);

struct GmcpConfig {
  double t0 = 40.0;        // sampling scale; explore w.p. min{1, t0/t}
  double h = 0.5;          // optimality margin; prefilter keeps arms within h/2
  double lambda1_0 = 0.25; // random-sample penalty scale
  double lambda2_0 = 2.0;  // whole-sample penalty scale
  double penalty_a = 2.0;  // MCP concavity
  int num_arms = 2;
  Eigen::Index dim = 10;
  GlmFamily family = GlmFamily::linear_gaussian(1.0);
  int refit_every = 25;    // full refresh cadence when not in fidelity mode
  bool fidelity = false;   // refit every arm every step
  SolverOptions solver{};
};

/// Per-arm sample sets and estimators. The random set holds only
/// exploration draws and is always a subset of the whole set.
struct ArmState {
  explicit ArmState(Eigen::Index dim)
      : random_set(dim),
        whole_set(dim),
        beta_random(Eigen::VectorXd::Zero(dim)),
        beta_whole(Eigen::VectorXd::Zero(dim)) {}

  Dataset random_set;
  Dataset whole_set;
  Eigen::VectorXd beta_random;
  Eigen::VectorXd beta_whole;
};

struct Decision {
  int arm = 0;
  bool was_random = false;
  std::vector<int> candidate_set;  // empty when was_random
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Decision select(const Eigen::VectorXd& x, long t,
                          std::mt19937_64& rng) = 0;
  virtual void update(const Decision& decision, const Eigen::VectorXd& x,
                      double r, long t) = 0;
  virtual std::string name() const = 0;
};

/// Bi-level greedy choice: prefilter arms whose random-sample expected reward
/// is within h/2 of the best, then break ties with the whole-sample
/// estimator. Ties go to the lowest arm index. `whole_evaluations` counts
/// whole-sample reward evaluations (it stays untouched on singleton steps).
Decision bi_level_select(const std::vector<ArmState>& arms,
                         const GlmFamily& family, double h,
                         const Eigen::VectorXd& x,
                         long* whole_evaluations = nullptr);

enum class SampleSet { Random, Whole };

/// Shared scaffold: epsilon-decay exploration, per-arm random/whole sample
/// sets, bi-level selection, and the refit cadence. Subclasses supply the
/// estimator.
class BiLevelPolicy : public Policy {
 public:
  Decision select(const Eigen::VectorXd& x, long t,
                  std::mt19937_64& rng) final;
  void update(const Decision& decision, const Eigen::VectorXd& x, double r,
              long t) final;

  const ArmState& arm_state(int arm) const { return arms_.at(arm); }
  const GmcpConfig& config() const { return config_; }
  long whole_evaluations() const { return whole_evaluations_; }
  long solver_failures() const { return solver_failures_; }

 protected:
  explicit BiLevelPolicy(GmcpConfig config);

  /// Refit one arm's estimator; lambda follows the set's schedule.
  virtual Eigen::VectorXd refit(const Dataset& data, double lambda,
                                SampleSet set, int arm,
                                const Eigen::VectorXd& previous) = 0;
  /// Hook invoked after an observation lands in a sample set.
  virtual void on_append(int arm, SampleSet set, const Eigen::VectorXd& x,
                         double r);

  GmcpConfig config_;
  std::vector<ArmState> arms_;

 private:
  void refit_arm(int arm, SampleSet set, double lambda);

  long whole_evaluations_ = 0;
  long solver_failures_ = 0;
};

/// MCP-penalized GLM bandit: both estimators come from the two-step
/// weighted Lasso under the lambda1/lambda2 schedules.
class GmcpPolicy final : public BiLevelPolicy {
 public:
  explicit GmcpPolicy(GmcpConfig config) : BiLevelPolicy(std::move(config)) {}
  std::string name() const override { return "gmcp"; }

 protected:
  Eigen::VectorXd refit(const Dataset& data, double lambda, SampleSet set,
                        int arm, const Eigen::VectorXd& previous) override;
};

/// Same scaffold with plain Lasso estimators.
class LassoBanditPolicy final : public BiLevelPolicy {
 public:
  explicit LassoBanditPolicy(GmcpConfig config)
      : BiLevelPolicy(std::move(config)) {}
  std::string name() const override { return "lasso"; }

 protected:
  Eigen::VectorXd refit(const Dataset& data, double lambda, SampleSet set,
                        int arm, const Eigen::VectorXd& previous) override;
};

/// Same scaffold with ridge-stabilized least squares, maintained
/// incrementally per sample set.
class OlsBanditPolicy final : public BiLevelPolicy {
 public:
  OlsBanditPolicy(GmcpConfig config, double ridge = 1e-3);
  std::string name() const override { return "ols"; }

 protected:
  Eigen::VectorXd refit(const Dataset& data, double lambda, SampleSet set,
                        int arm, const Eigen::VectorXd& previous) override;
  void on_append(int arm, SampleSet set, const Eigen::VectorXd& x,
                 double r) override;

 private:
  struct Accumulator {
    Eigen::MatrixXd gram_inv;
    Eigen::VectorXd xty;
  };
  Accumulator& accumulator(int arm, SampleSet set);

  double ridge_;
  std::vector<Accumulator> acc_;  // 2 per arm: [random, whole]
};

/// Uniform arm choice every step.
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(int num_arms);
  Decision select(const Eigen::VectorXd& x, long t,
                  std::mt19937_64& rng) override;
  void update(const Decision&, const Eigen::VectorXd&, double, long) override {}
  std::string name() const override { return "random"; }

 private:
  int num_arms_;
};

/// Plays the environment's best arm under the true parameters.
class OraclePolicy final : public Policy {
 public:
  explicit OraclePolicy(const Environment& env) : env_(&env) {}
  Decision select(const Eigen::VectorXd& x, long t,
                  std::mt19937_64& rng) override;
  void update(const Decision&, const Eigen::VectorXd&, double, long) override {}
  std::string name() const override { return "oracle"; }

 private:
  const Environment* env_;
};

/// Ridge-ellipsoid optimism for the linear family: per-arm ridge regression
/// plus a confidence-width bonus on the predicted reward.
class OfulPolicy final : public Policy {
 public:
  OfulPolicy(int num_arms, Eigen::Index dim, const GlmFamily& family,
             double confidence_width, double ridge = 1.0);
  Decision select(const Eigen::VectorXd& x, long t,
                  std::mt19937_64& rng) override;
  void update(const Decision& decision, const Eigen::VectorXd& x, double r,
              long t) override;
  std::string name() const override { return "oful"; }

 private:
  int num_arms_;
  double width_;
  std::vector<Eigen::MatrixXd> v_inv_;
  std::vector<Eigen::VectorXd> xty_;
};

}  // namespace mcpbandit
