#include "mcpbandit/glm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcpbandit {

namespace {

// Linear predictors are clamped inside logistic exp/log evaluations only;
// stored coefficients and expected rewards are never clamped.
constexpr double kEtaClamp = 30.0;

double sigmoid(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double log1p_exp(double eta) {
  return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

}  // namespace

GlmFamily GlmFamily::linear_gaussian(double noise_sd) {
  if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) {
    throw std::invalid_argument("GlmFamily: noise_sd must be positive");
  }
  return {FamilyKind::LinearGaussian, noise_sd};
}

GlmFamily GlmFamily::logistic_binary(double payoff) {
  if (!(payoff > 0.0) || !std::isfinite(payoff)) {
    throw std::invalid_argument("GlmFamily: payoff must be positive");
  }
  return {FamilyKind::LogisticBinary, payoff};
}

double GlmFamily::neg_log_density(double r, double eta) const {
  if (kind_ == FamilyKind::LinearGaussian) {
    const double z = r - eta;
    return z * z / (2.0 * scale_ * scale_);
  }
  if (r != 0.0 && r != scale_) {
    throw std::domain_error("GlmFamily: logistic reward must be 0 or payoff");
  }
  const double y = r / scale_;
  const double ec = std::clamp(eta, -kEtaClamp, kEtaClamp);
  return log1p_exp(ec) - y * ec;
}

double GlmFamily::nll_derivative(double r, double eta) const {
  if (kind_ == FamilyKind::LinearGaussian) {
    return (eta - r) / (scale_ * scale_);
  }
  if (r != 0.0 && r != scale_) {
    throw std::domain_error("GlmFamily: logistic reward must be 0 or payoff");
  }
  const double y = r / scale_;
  const double ec = std::clamp(eta, -kEtaClamp, kEtaClamp);
  return sigmoid(ec) - y;
}

double GlmFamily::curvature_bound() const {
  if (kind_ == FamilyKind::LinearGaussian) {
    return 1.0 / (scale_ * scale_);
  }
  return 0.25;
}

bool GlmFamily::clamps(double eta) const {
  return kind_ == FamilyKind::LogisticBinary && std::abs(eta) >= kEtaClamp;
}

double GlmFamily::mean_reward(double eta) const {
  if (kind_ == FamilyKind::LinearGaussian) {
    return eta;
  }
  return scale_ * sigmoid(eta);
}

double GlmFamily::sample(double eta, std::mt19937_64& rng) const {
  if (kind_ == FamilyKind::LinearGaussian) {
    std::normal_distribution<double> noise(0.0, scale_);
    return eta + noise(rng);
  }
  std::bernoulli_distribution click(sigmoid(eta));
  return click(rng) ? scale_ : 0.0;
}

double expected_reward(const GlmFamily& family, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& beta) {
  if (x.size() != beta.size()) {
    throw std::invalid_argument("expected_reward: length mismatch");
  }
  return family.mean_reward(x.dot(beta));
}

double sample_reward(const GlmFamily& family, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& beta, std::mt19937_64& rng) {
  if (x.size() != beta.size()) {
    throw std::invalid_argument("sample_reward: length mismatch");
  }
  return family.sample(x.dot(beta), rng);
}

double nll(const Dataset& data, const Eigen::VectorXd& beta,
           const GlmFamily& family) {
  if (data.empty()) {
    throw std::invalid_argument("nll: empty dataset");
  }
  if (beta.size() != data.dim()) {
    throw std::invalid_argument("nll: beta length mismatch");
  }
  const Eigen::VectorXd eta = data.covariates() * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    total += family.neg_log_density(data.reward(i), eta(i));
  }
  return total / static_cast<double>(data.size());
}

Eigen::VectorXd nll_gradient(const Dataset& data, const Eigen::VectorXd& beta,
                             const GlmFamily& family) {
  if (data.empty()) {
    throw std::invalid_argument("nll_gradient: empty dataset");
  }
  if (beta.size() != data.dim()) {
    throw std::invalid_argument("nll_gradient: beta length mismatch");
  }
  const Eigen::VectorXd eta = data.covariates() * beta;
  Eigen::VectorXd fprime(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    fprime(i) = family.nll_derivative(data.reward(i), eta(i));
  }
  return data.covariates().transpose() * fprime /
         static_cast<double>(data.size());
}

}  // namespace mcpbandit
