#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mcpbandit/glm.hpp"

using namespace mcpbandit;

namespace {

Dataset random_instance(Eigen::Index n, Eigen::Index d, const GlmFamily& family,
                        std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd x(d);
    for (Eigen::Index j = 0; j < d; ++j) x(j) = normal(rng);
    Eigen::VectorXd beta(d);
    for (Eigen::Index j = 0; j < d; ++j) beta(j) = 0.5 * normal(rng);
    data.append(x, sample_reward(family, x, beta, rng));
  }
  return data;
}

Eigen::VectorXd random_vector(Eigen::Index d, std::mt19937_64& rng,
                              double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = normal(rng);
  return v;
}

// Central finite differences, the independent gradient oracle.
Eigen::VectorXd fd_gradient(const Dataset& data, const Eigen::VectorXd& beta,
                            const GlmFamily& family, double step = 1e-6) {
  Eigen::VectorXd grad(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    Eigen::VectorXd up = beta, down = beta;
    up(j) += step;
    down(j) -= step;
    grad(j) = (nll(data, up, family) - nll(data, down, family)) / (2.0 * step);
  }
  return grad;
}

}  // namespace

TEST_CASE("family construction validates parameters") {
  CHECK_THROWS_AS(GlmFamily::linear_gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(GlmFamily::linear_gaussian(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(GlmFamily::logistic_binary(0.0), std::invalid_argument);
}

TEST_CASE("neg_log_density reference values") {
  const auto linear1 = GlmFamily::linear_gaussian(1.0);
  CHECK(linear1.neg_log_density(0.0, 0.0) == doctest::Approx(0.0));

  const auto logistic1 = GlmFamily::logistic_binary(1.0);
  CHECK(logistic1.neg_log_density(1.0, 0.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // (3 - 1)^2 / (2 * 4)
  const auto linear2 = GlmFamily::linear_gaussian(2.0);
  CHECK(linear2.neg_log_density(3.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("neg_log_density rejects invalid logistic rewards") {
  const auto logistic = GlmFamily::logistic_binary(5.0);
  CHECK_THROWS_AS(logistic.neg_log_density(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(logistic.neg_log_density(-5.0, 0.0), std::domain_error);
  CHECK_NOTHROW(logistic.neg_log_density(5.0, 0.3));
  CHECK_NOTHROW(logistic.neg_log_density(0.0, 0.3));
}

TEST_CASE("nll averages per-row densities") {
  const auto linear = GlmFamily::linear_gaussian(1.0);

  Dataset one_row(2);
  one_row.append(Eigen::Vector2d(1.0, 0.0), 0.0);
  CHECK(nll(one_row, Eigen::Vector2d(0.0, 0.0), linear) == doctest::Approx(0.0));

  Dataset two_rows(1);
  two_rows.append(Eigen::VectorXd::Constant(1, 1.0), 2.0);
  two_rows.append(Eigen::VectorXd::Constant(1, 1.0), 0.0);
  // ((1)^2 + (-1)^2) / (2 * 2)
  CHECK(nll(two_rows, Eigen::VectorXd::Constant(1, 1.0), linear) ==
        doctest::Approx(0.5).epsilon(1e-12));

  Dataset logit_row(1);
  logit_row.append(Eigen::VectorXd::Constant(1, 1.0), 1.0);
  CHECK(nll(logit_row, Eigen::VectorXd::Zero(1),
            GlmFamily::logistic_binary(1.0)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Dataset empty(3);
  CHECK_THROWS_AS(nll(empty, Eigen::Vector3d::Zero(), linear),
                  std::invalid_argument);
}

TEST_CASE("gradient vanishes at the unpenalized 1-d optimum") {
  const auto linear = GlmFamily::linear_gaussian(1.0);
  Dataset data(1);
  data.append(Eigen::VectorXd::Constant(1, 1.0), 3.0);
  data.append(Eigen::VectorXd::Constant(1, 2.0), 5.0);
  // beta* = sum(x r) / sum(x^2)
  const double beta_star = (1.0 * 3.0 + 2.0 * 5.0) / (1.0 + 4.0);
  const Eigen::VectorXd g =
      nll_gradient(data, Eigen::VectorXd::Constant(1, beta_star), linear);
  CHECK(std::abs(g(0)) < 1e-12);
}

TEST_CASE("logistic gradient at zero is (p - y) x") {
  const auto logistic = GlmFamily::logistic_binary(3.0);
  Dataset data(1);
  data.append(Eigen::VectorXd::Constant(1, 1.0), 3.0);
  const Eigen::VectorXd g = nll_gradient(data, Eigen::VectorXd::Zero(1), logistic);
  CHECK(g(0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences on random instances") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Eigen::Index> n_dist(2, 20);
  std::uniform_int_distribution<Eigen::Index> d_dist(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const bool linear = trial % 2 == 0;
    const GlmFamily family = linear ? GlmFamily::linear_gaussian(1.3)
                                    : GlmFamily::logistic_binary(2.0);
    const Dataset data = random_instance(n_dist(rng), d_dist(rng), family, rng);
    const Eigen::VectorXd beta = random_vector(data.dim(), rng, 0.5);
    const Eigen::VectorXd analytic = nll_gradient(data, beta, family);
    const Eigen::VectorXd numeric = fd_gradient(data, beta, family);
    const double scale = std::max(1.0, numeric.norm());
    CHECK((analytic - numeric).norm() / scale < 1e-5);
  }
}

TEST_CASE("nll is convex along random chords") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    const GlmFamily family = trial % 2 == 0 ? GlmFamily::linear_gaussian(1.0)
                                            : GlmFamily::logistic_binary(1.0);
    const Dataset data = random_instance(12, 4, family, rng);
    const Eigen::VectorXd a = random_vector(4, rng);
    const Eigen::VectorXd b = random_vector(4, rng);
    const double t = unit(rng);
    const double lhs = nll(data, t * a + (1.0 - t) * b, family);
    const double rhs = t * nll(data, a, family) + (1.0 - t) * nll(data, b, family);
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("per-row curvature never exceeds curvature_bound") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> eta_dist(-6.0, 6.0);
  const auto second_derivative = [](const GlmFamily& family, double r,
                                    double eta) {
    const double step = 1e-5;
    return (family.nll_derivative(r, eta + step) -
            family.nll_derivative(r, eta - step)) /
           (2.0 * step);
  };

  const auto linear = GlmFamily::linear_gaussian(1.7);
  CHECK(linear.curvature_bound() == doctest::Approx(1.0 / (1.7 * 1.7)));
  const auto logistic = GlmFamily::logistic_binary(4.0);
  CHECK(logistic.curvature_bound() == doctest::Approx(0.25));
  CHECK(GlmFamily::linear_gaussian(1.0).curvature_bound() == doctest::Approx(1.0));
  CHECK(GlmFamily::linear_gaussian(2.0).curvature_bound() == doctest::Approx(0.25));

  for (int trial = 0; trial < 200; ++trial) {
    const double eta = eta_dist(rng);
    CHECK(second_derivative(linear, 0.4, eta) <=
          linear.curvature_bound() + 1e-6);
    const double r = trial % 2 == 0 ? 0.0 : 4.0;
    CHECK(second_derivative(logistic, r, eta) <=
          logistic.curvature_bound() + 1e-6);
  }
}

TEST_CASE("expected_reward reference values") {
  const auto linear = GlmFamily::linear_gaussian(1.0);
  CHECK(expected_reward(linear, Eigen::Vector2d(1.0, 2.0),
                        Eigen::Vector2d(3.0, -1.0)) == doctest::Approx(1.0));

  const auto logistic = GlmFamily::logistic_binary(10.0);
  CHECK(expected_reward(logistic, Eigen::Vector2d(1.0, -1.0),
                        Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(5.0));

  CHECK(expected_reward(linear, Eigen::Vector3d(1, 2, 3),
                        Eigen::Vector3d::Zero()) == doctest::Approx(0.0));
  CHECK(expected_reward(logistic, Eigen::Vector3d(1, 2, 3),
                        Eigen::Vector3d::Zero()) == doctest::Approx(5.0));
}

TEST_CASE("sample_reward degenerate and saturated cases") {
  std::mt19937_64 rng(17);
  const auto tight = GlmFamily::linear_gaussian(1e-9);
  const Eigen::VectorXd x = Eigen::Vector2d(1.0, 1.0);
  const Eigen::VectorXd beta = Eigen::Vector2d(1.5, 0.5);
  CHECK(sample_reward(tight, x, beta, rng) == doctest::Approx(2.0).epsilon(1e-6));

  const auto logistic = GlmFamily::logistic_binary(1.0);
  const Eigen::VectorXd strong = Eigen::Vector2d(25.0, 25.0);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    hits += sample_reward(logistic, x, strong, rng) == 1.0;
  }
  CHECK(hits >= 9990);
}

TEST_CASE("sample_reward mean matches expected_reward within 3 standard errors") {
  std::mt19937_64 rng(19);
  const Eigen::VectorXd x = Eigen::Vector3d(0.5, -1.0, 2.0);
  const Eigen::VectorXd beta = Eigen::Vector3d(0.3, 0.4, -0.1);
  const int n = 100000;

  for (const GlmFamily& family :
       {GlmFamily::linear_gaussian(1.0), GlmFamily::logistic_binary(2.0)}) {
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = sample_reward(family, x, beta, rng);
      sum += r;
      sum_sq += r * r;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double se = std::sqrt(var / n);
    CHECK(std::abs(mean - expected_reward(family, x, beta)) <= 3.0 * se);
  }
}

TEST_CASE("dataset validates appends") {
  Dataset data(2);
  CHECK_THROWS_AS(data.append(Eigen::Vector3d::Zero(), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      data.append(Eigen::Vector2d(std::numeric_limits<double>::quiet_NaN(), 0.0),
                  1.0),
      std::invalid_argument);
  CHECK_THROWS_AS(
      data.append(Eigen::Vector2d::Zero(),
                  std::numeric_limits<double>::infinity()),
      std::invalid_argument);

  data.append(Eigen::Vector2d(1.0, 2.0), 3.0);
  data.append(Eigen::Vector2d(4.0, 5.0), 6.0);
  CHECK(data.size() == 2);
  CHECK(data.covariates()(1, 0) == 4.0);
  CHECK(data.reward(0) == 3.0);
  CHECK(data.observation(1).x(1) == 5.0);

  // column views stay valid across growth
  for (int i = 0; i < 100; ++i) data.append(Eigen::Vector2d(i, -i), i);
  CHECK(data.size() == 102);
  CHECK(data.covariates().col(0)(2) == 0.0);
  CHECK(data.covariates().col(1)(101) == -99.0);
}
