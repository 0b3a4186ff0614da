#pragma once

#include <random>

#include <Eigen/Dense>

#include "mcpbandit/dataset.hpp"

namespace mcpbandit {

enum class FamilyKind { LinearGaussian, LogisticBinary };

/// Reward model for one arm: a Gaussian linear model or a binary logistic
/// model whose positive outcome pays a fixed amount.
///
/// Logistic rewards live in payoff units (r is 0 or `payoff`); likelihood
/// evaluation normalizes them to {0,1}. Additive constants that do not
/// depend on the linear predictor are dropped from the negative log density.
class GlmFamily {
 public:
  static GlmFamily linear_gaussian(double noise_sd);
  static GlmFamily logistic_binary(double payoff);

  FamilyKind kind() const { return kind_; }
  bool is_linear() const { return kind_ == FamilyKind::LinearGaussian; }

  /// Gaussian noise standard deviation (LinearGaussian only).
  double noise_sd() const { return scale_; }
  /// Reward paid on a positive binary outcome (LogisticBinary only).
  double payoff() const { return scale_; }

  /// f(r|eta) = -log g(r|eta), up to eta-independent constants.
  /// Throws std::domain_error when r is not a valid reward for the family.
  double neg_log_density(double r, double eta) const;

  /// d/deta of neg_log_density.
  double nll_derivative(double r, double eta) const;

  /// Uniform upper bound on d^2/deta^2 of neg_log_density.
  double curvature_bound() const;

  /// True when density evaluation clamps this linear predictor (logistic
  /// only); clamped fits signal separable or near-separable data.
  bool clamps(double eta) const;

  /// E[R | eta]: eta for the linear model, payoff * sigmoid(eta) otherwise.
  double mean_reward(double eta) const;

  /// Draw one reward at linear predictor eta.
  double sample(double eta, std::mt19937_64& rng) const;

 private:
  GlmFamily(FamilyKind kind, double scale) : kind_(kind), scale_(scale) {}

  FamilyKind kind_;
  double scale_;
};

/// E[R | x, beta] under the family.
double expected_reward(const GlmFamily& family, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& beta);

/// Draw one reward at covariates x under coefficients beta.
double sample_reward(const GlmFamily& family, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& beta, std::mt19937_64& rng);

/// Mean negative log likelihood (1/n) sum_i f(r_i | x_i . beta).
/// Throws std::invalid_argument on an empty dataset or length mismatch.
double nll(const Dataset& data, const Eigen::VectorXd& beta,
           const GlmFamily& family);

/// Analytic gradient of nll with respect to beta.
Eigen::VectorXd nll_gradient(const Dataset& data, const Eigen::VectorXd& beta,
                             const GlmFamily& family);

}  // namespace mcpbandit
