#include "mcpbandit/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace mcpbandit {

bool epsilon_decay_draw(long t, double t0, std::mt19937_64& rng) {
  if (t < 1) {
    throw std::invalid_argument("epsilon_decay_draw: t must be >= 1");
  }
  const double p = std::min(1.0, t0 / static_cast<double>(t));
  return std::bernoulli_distribution(p)(rng);
}

double lambda1_schedule(double t, int d, double lambda1_0) {
  if (t < 1.0 || d < 1) {
    throw std::invalid_argument("lambda1_schedule: need t >= 1 and d >= 1");
  }
  return lambda1_0 * std::sqrt(1.0 + std::log(static_cast<double>(d)) /
                                         std::log(t + 1.0));
}

double lambda2_schedule(double t, int d, double lambda2_0) {
  if (t < 1.0 || d < 1) {
    throw std::invalid_argument("lambda2_schedule: need t >= 1 and d >= 1");
  }
  return lambda2_0 *
         std::sqrt((std::log(t + 1.0) + std::log(static_cast<double>(d))) /
                   (t + 1.0));
}

Decision bi_level_select(const std::vector<ArmState>& arms,
                         const GlmFamily& family, double h,
                         const Eigen::VectorXd& x, long* whole_evaluations) {
  const int num_arms = static_cast<int>(arms.size());
  std::vector<double> mu(num_arms);
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_arms; ++k) {
    mu[k] = expected_reward(family, x, arms[k].beta_random);
    best = std::max(best, mu[k]);
  }

  Decision decision;
  decision.was_random = false;
  for (int k = 0; k < num_arms; ++k) {
    if (mu[k] >= best - 0.5 * h) decision.candidate_set.push_back(k);
  }
  if (decision.candidate_set.size() == 1) {
    decision.arm = decision.candidate_set.front();
    return decision;
  }

  double best_whole = -std::numeric_limits<double>::infinity();
  for (int k : decision.candidate_set) {
    const double value = expected_reward(family, x, arms[k].beta_whole);
    if (whole_evaluations) ++*whole_evaluations;
    if (value > best_whole) {
      best_whole = value;
      decision.arm = k;
    }
  }
  return decision;
}

BiLevelPolicy::BiLevelPolicy(GmcpConfig config) : config_(std::move(config)) {
  if (config_.num_arms < 2) {
    throw std::invalid_argument("BiLevelPolicy: need at least two arms");
  }
  if (config_.dim < 1 || config_.t0 <= 0.0 || config_.h <= 0.0 ||
      config_.lambda1_0 <= 0.0 || config_.lambda2_0 <= 0.0 ||
      config_.penalty_a <= 0.0 || config_.refit_every < 1) {
    throw std::invalid_argument("BiLevelPolicy: config values must be positive");
  }
  arms_.reserve(config_.num_arms);
  for (int k = 0; k < config_.num_arms; ++k) arms_.emplace_back(config_.dim);
}

Decision BiLevelPolicy::select(const Eigen::VectorXd& x, long t,
                               std::mt19937_64& rng) {
  if (epsilon_decay_draw(t, config_.t0, rng)) {
    Decision decision;
    decision.was_random = true;
    decision.arm =
        std::uniform_int_distribution<int>(0, config_.num_arms - 1)(rng);
    return decision;
  }
  return bi_level_select(arms_, config_.family, config_.h, x,
                         &whole_evaluations_);
}

void BiLevelPolicy::update(const Decision& decision, const Eigen::VectorXd& x,
                           double r, long t) {
  ArmState& arm = arms_.at(decision.arm);
  arm.whole_set.append(x, r);
  on_append(decision.arm, SampleSet::Whole, x, r);
  if (decision.was_random) {
    arm.random_set.append(x, r);
    on_append(decision.arm, SampleSet::Random, x, r);
  }

  const int d = static_cast<int>(config_.dim);
  const double lambda1 =
      lambda1_schedule(static_cast<double>(t), d, config_.lambda1_0);
  const double lambda2 =
      lambda2_schedule(static_cast<double>(t), d, config_.lambda2_0);

  const bool full_refresh =
      config_.fidelity || (t % config_.refit_every == 0);
  if (full_refresh) {
    for (int k = 0; k < config_.num_arms; ++k) {
      refit_arm(k, SampleSet::Random, lambda1);
      refit_arm(k, SampleSet::Whole, lambda2);
    }
    return;
  }
  refit_arm(decision.arm, SampleSet::Whole, lambda2);
  if (decision.was_random) {
    refit_arm(decision.arm, SampleSet::Random, lambda1);
  }
}

void BiLevelPolicy::on_append(int, SampleSet, const Eigen::VectorXd&, double) {}

void BiLevelPolicy::refit_arm(int arm, SampleSet set, double lambda) {
  ArmState& state = arms_.at(arm);
  Dataset& data =
      set == SampleSet::Random ? state.random_set : state.whole_set;
  Eigen::VectorXd& beta =
      set == SampleSet::Random ? state.beta_random : state.beta_whole;
  if (data.size() < 2) return;  // cold start: keep beta at zero
  try {
    Eigen::VectorXd next = refit(data, lambda, set, arm, beta);
    if (next.size() == config_.dim && next.allFinite()) {
      beta = std::move(next);
    } else {
      ++solver_failures_;
    }
  } catch (const std::exception&) {
    ++solver_failures_;  // keep the previous estimate
  }
}

Eigen::VectorXd GmcpPolicy::refit(const Dataset& data, double lambda,
                                  SampleSet, int,
                                  const Eigen::VectorXd& previous) {
  SolverOptions options = config_.solver;
  options.warm_start = previous;
  return two_step_weighted_lasso(data, {lambda, config_.penalty_a},
                                 config_.family, options)
      .beta;
}

Eigen::VectorXd LassoBanditPolicy::refit(const Dataset& data, double lambda,
                                         SampleSet, int,
                                         const Eigen::VectorXd& previous) {
  SolverOptions options = config_.solver;
  options.warm_start = previous;
  return lasso_fit(data, lambda, config_.family, options).beta;
}

OlsBanditPolicy::OlsBanditPolicy(GmcpConfig config, double ridge)
    : BiLevelPolicy(std::move(config)), ridge_(ridge) {
  if (!(ridge_ > 0.0)) {
    throw std::invalid_argument("OlsBanditPolicy: ridge must be positive");
  }
  acc_.resize(2 * static_cast<std::size_t>(config_.num_arms));
  for (auto& a : acc_) {
    a.gram_inv =
        Eigen::MatrixXd::Identity(config_.dim, config_.dim) / ridge_;
    a.xty = Eigen::VectorXd::Zero(config_.dim);
  }
}

OlsBanditPolicy::Accumulator& OlsBanditPolicy::accumulator(int arm,
                                                           SampleSet set) {
  return acc_[2 * static_cast<std::size_t>(arm) +
              (set == SampleSet::Whole ? 1 : 0)];
}

void OlsBanditPolicy::on_append(int arm, SampleSet set,
                                const Eigen::VectorXd& x, double r) {
  Accumulator& a = accumulator(arm, set);
  // Sherman-Morrison rank-one update of (ridge I + X^T X)^{-1}.
  const Eigen::VectorXd v = a.gram_inv * x;
  a.gram_inv.noalias() -= v * v.transpose() / (1.0 + x.dot(v));
  a.xty += r * x;
}

Eigen::VectorXd OlsBanditPolicy::refit(const Dataset&, double, SampleSet set,
                                       int arm, const Eigen::VectorXd&) {
  const Accumulator& a = accumulator(arm, set);
  return a.gram_inv * a.xty;
}

RandomPolicy::RandomPolicy(int num_arms) : num_arms_(num_arms) {
  if (num_arms < 2) {
    throw std::invalid_argument("RandomPolicy: need at least two arms");
  }
}

Decision RandomPolicy::select(const Eigen::VectorXd&, long,
                              std::mt19937_64& rng) {
  Decision decision;
  decision.was_random = true;
  decision.arm = std::uniform_int_distribution<int>(0, num_arms_ - 1)(rng);
  return decision;
}

Decision OraclePolicy::select(const Eigen::VectorXd& x, long,
                              std::mt19937_64&) {
  Decision decision;
  decision.arm = env_->best_arm(x);
  return decision;
}

OfulPolicy::OfulPolicy(int num_arms, Eigen::Index dim, const GlmFamily& family,
                       double confidence_width, double ridge)
    : num_arms_(num_arms), width_(confidence_width) {
  if (!family.is_linear()) {
    throw std::invalid_argument("OfulPolicy: linear family only");
  }
  if (num_arms < 2 || dim < 1 || !(confidence_width >= 0.0) ||
      !(ridge > 0.0)) {
    throw std::invalid_argument("OfulPolicy: bad configuration");
  }
  v_inv_.assign(num_arms, Eigen::MatrixXd::Identity(dim, dim) / ridge);
  xty_.assign(num_arms, Eigen::VectorXd::Zero(dim));
}

Decision OfulPolicy::select(const Eigen::VectorXd& x, long,
                            std::mt19937_64&) {
  Decision decision;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_arms_; ++k) {
    const Eigen::VectorXd v = v_inv_[k] * x;
    const double optimistic =
        x.dot(v_inv_[k] * xty_[k]) + width_ * std::sqrt(std::max(x.dot(v), 0.0));
    if (optimistic > best) {
      best = optimistic;
      decision.arm = k;
    }
  }
  return decision;
}

void OfulPolicy::update(const Decision& decision, const Eigen::VectorXd& x,
                        double r, long) {
  Eigen::MatrixXd& vi = v_inv_[decision.arm];
  const Eigen::VectorXd v = vi * x;
  vi.noalias() -= v * v.transpose() / (1.0 + x.dot(v));
  xty_[decision.arm] += r * x;
}

}  // namespace mcpbandit
