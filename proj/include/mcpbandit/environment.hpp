#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcpbandit/glm.hpp"

namespace mcpbandit {

/// Context generator plus reward realizer with oracle access to the true
/// expected rewards.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual Eigen::Index dim() const = 0;
  virtual int num_arms() const = 0;

  /// Next covariate vector, or nullopt when a replay stream is exhausted.
  virtual std::optional<Eigen::VectorXd> next_context(std::mt19937_64& rng) = 0;

  /// Realized reward for pulling `arm` at context x.
  virtual double realize_reward(int arm, const Eigen::VectorXd& x,
                                std::mt19937_64& rng) = 0;

  /// True expected reward of `arm` at context x.
  virtual double oracle_expected(int arm, const Eigen::VectorXd& x) const = 0;

  /// argmax of oracle_expected; ties go to the lowest arm index.
  int best_arm(const Eigen::VectorXd& x) const;
};

/// iid N(0, I_d) contexts with GLM rewards under known per-arm parameters.
class SyntheticEnv final : public Environment {
 public:
  SyntheticEnv(std::vector<Eigen::VectorXd> true_betas, GlmFamily family);

  Eigen::Index dim() const override { return dim_; }
  int num_arms() const override {
    return static_cast<int>(true_betas_.size());
  }
  std::optional<Eigen::VectorXd> next_context(std::mt19937_64& rng) override;
  double realize_reward(int arm, const Eigen::VectorXd& x,
                        std::mt19937_64& rng) override;
  double oracle_expected(int arm, const Eigen::VectorXd& x) const override;

  const Eigen::VectorXd& true_beta(int arm) const {
    return true_betas_.at(arm);
  }
  const GlmFamily& family() const { return family_; }

 private:
  std::vector<Eigen::VectorXd> true_betas_;
  GlmFamily family_;
  Eigen::Index dim_;
};

/// Two Gaussian arms with coefficients (1,2,3,4,5,0,...) and 1.1x that,
/// padded to dimension d (d >= 5), unit noise.
SyntheticEnv make_study1(Eigen::Index d);

/// num_arms Gaussian arms in dimension 100; each arm draws its 5 leading
/// coefficients from N(0,1) using `seed`, the rest are zero.
SyntheticEnv make_study2(int num_arms, std::uint64_t seed);

class ReplayParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full-feedback replay table: one context per row and the recorded reward
/// of every arm for that row.
struct ReplayTable {
  Eigen::MatrixXd contexts;  // n x d
  Eigen::MatrixXd rewards;   // n x K
  Eigen::Index rows() const { return contexts.rows(); }
  Eigen::Index dim() const { return contexts.cols(); }
  int num_arms() const { return static_cast<int>(rewards.cols()); }
};

/// Parse a replay CSV with header `x_0,...,x_{d-1},r_0,...,r_{K-1}`.
/// Throws ReplayParseError naming the offending row/column.
ReplayTable load_replay(const std::string& path);

/// Streams a replay table in a (seeded) permuted order. Realized and
/// expected rewards both come from the table row that produced the current
/// context.
class ReplayEnv final : public Environment {
 public:
  explicit ReplayEnv(std::shared_ptr<const ReplayTable> table);

  /// Re-permute the visit order and rewind. Call before streaming.
  void shuffle(std::mt19937_64& rng);

  Eigen::Index dim() const override { return table_->dim(); }
  int num_arms() const override { return table_->num_arms(); }
  std::optional<Eigen::VectorXd> next_context(std::mt19937_64& rng) override;
  double realize_reward(int arm, const Eigen::VectorXd& x,
                        std::mt19937_64& rng) override;
  double oracle_expected(int arm, const Eigen::VectorXd& x) const override;

 private:
  std::shared_ptr<const ReplayTable> table_;
  std::vector<Eigen::Index> order_;
  Eigen::Index pos_ = 0;       // next row to serve
  Eigen::Index current_ = -1;  // row behind the last served context
};

}  // namespace mcpbandit
