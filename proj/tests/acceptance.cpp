// Acceptance suite: end-to-end checks of the estimation stack and the bandit
// harness at desk scale. Each criterion prints one PASS/FAIL line; the exit
// code is the number of failures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcpbandit/harness.hpp"

using namespace mcpbandit;

namespace {

int g_failures = 0;

void report(int index, bool pass, const std::string& label,
            const std::string& detail) {
  std::printf("[%2d/10] %s  %s (%s)\n", index, pass ? "PASS" : "FAIL",
              label.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fixture_path(const std::string& name) {
  std::filesystem::create_directories(FIXTURE_DIR);
  return std::string(FIXTURE_DIR) + "/" + name;
}

Eigen::VectorXd random_vector(Eigen::Index d, std::mt19937_64& rng,
                              double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = normal(rng);
  return v;
}

double kkt_recheck(const Dataset& data, const Eigen::VectorXd& beta,
                   const Eigen::VectorXd& weights, const GlmFamily& family) {
  const Eigen::VectorXd grad = nll_gradient(data, beta, family);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v =
        beta(j) == 0.0
            ? std::max(0.0, std::abs(grad(j)) - weights(j))
            : std::abs(grad(j) + weights(j) * (beta(j) > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

double r_squared(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy * sxy / (sxx * syy);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---------------------------------------------------------------------------
// 1. Solver correctness: independent KKT audits plus the closed-form
//    orthonormal-design check.
void criterion_1() {
  std::mt19937_64 rng(4001);
  std::uniform_int_distribution<Eigen::Index> n_dist(5, 50);
  std::uniform_int_distribution<Eigen::Index> d_dist(1, 12);
  std::uniform_real_distribution<double> w_dist(0.0, 0.6);

  int audited = 0, violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = n_dist(rng);
    const Eigen::Index d = d_dist(rng);
    const GlmFamily family = trial % 2 == 0 ? GlmFamily::linear_gaussian(1.0)
                                            : GlmFamily::logistic_binary(1.0);
    const Eigen::VectorXd beta_true = random_vector(d, rng);
    Dataset data(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd x = random_vector(d, rng);
      data.append(x, sample_reward(family, x, beta_true, rng));
    }
    Eigen::VectorXd weights(d);
    for (Eigen::Index j = 0; j < d; ++j) weights(j) = w_dist(rng);

    const Fit fit = weighted_lasso_fit(data, weights, family);
    if (!fit.converged) continue;
    ++audited;
    if (kkt_recheck(data, fit.beta, weights, family) > 1e-7) ++violations;
  }

  // x = (1,-1,1,-1) gives x.x/n = 1, so the solution soft-thresholds OLS
  Dataset ortho(1);
  const double xs[4] = {1.0, -1.0, 1.0, -1.0};
  const double rs[4] = {1.7, -0.4, 2.6, 0.9};
  double ols = 0.0;
  for (int i = 0; i < 4; ++i) {
    ortho.append(Eigen::VectorXd::Constant(1, xs[i]), rs[i]);
    ols += xs[i] * rs[i];
  }
  ols /= 4.0;
  double closed_form_gap = 0.0;
  for (const double w : {0.0, 0.2, 0.9, 3.0}) {
    const Fit fit = weighted_lasso_fit(
        ortho, Eigen::VectorXd::Constant(1, w), GlmFamily::linear_gaussian(1.0));
    closed_form_gap = std::max(
        closed_form_gap, std::abs(fit.beta(0) - soft_threshold(ols, w)));
  }

  const bool pass = audited >= 90 && violations == 0 && closed_form_gap <= 1e-8;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "audited=%d violations=%d orthonormal_gap=%.2e", audited,
                violations, closed_form_gap);
  report(1, pass, "weighted lasso passes independent KKT re-checks", detail);
}

// ---------------------------------------------------------------------------
// 2. + 3. Two-step oracle matching and lasso bias visibility on 200 seeded
//    strong-signal instances.
void criteria_2_and_3() {
  const GlmFamily linear = GlmFamily::linear_gaussian(1.0);
  const PenaltyParams params{0.5, 2.0};
  const Eigen::Index n = 200, d = 50;
  Eigen::VectorXd beta_true = Eigen::VectorXd::Zero(d);
  beta_true(0) = 5.0;
  beta_true(1) = -4.0;

  int matched = 0;
  double lasso_error_sum = 0.0, two_step_error_sum = 0.0;
  const int instances = 200;
  for (int inst = 0; inst < instances; ++inst) {
    std::mt19937_64 rng(5000 + inst);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset data(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd x = random_vector(d, rng);
      data.append(x, x.dot(beta_true) + 0.1 * normal(rng));
    }

    const Fit two_step = two_step_weighted_lasso(data, params, linear);
    const Fit lasso = lasso_fit(data, params.lambda, linear);
    const Fit oracle = oracle_fit(data, {0, 1}, linear);

    const bool support_exact =
        two_step.active_set == std::vector<Eigen::Index>{0, 1};
    const double two_step_error =
        std::max(std::abs(two_step.beta(0) - oracle.beta(0)),
                 std::abs(two_step.beta(1) - oracle.beta(1)));
    const double lasso_error =
        std::max(std::abs(lasso.beta(0) - oracle.beta(0)),
                 std::abs(lasso.beta(1) - oracle.beta(1)));
    if (support_exact && two_step_error <= 1e-4) ++matched;
    two_step_error_sum += two_step_error;
    lasso_error_sum += lasso_error;
  }

  const bool pass2 = matched >= 190;
  char detail2[120];
  std::snprintf(detail2, sizeof(detail2), "exact support + 1e-4 match in %d/%d",
                matched, instances);
  report(2, pass2, "two-step weighted lasso matches the oracle estimator",
         detail2);

  const double ratio = lasso_error_sum / std::max(two_step_error_sum, 1e-300);
  const bool pass3 = ratio >= 5.0;
  char detail3[120];
  std::snprintf(detail3, sizeof(detail3),
                "mean lasso error %.4f vs two-step %.2e (ratio %.1f)",
                lasso_error_sum / instances, two_step_error_sum / instances,
                ratio);
  report(3, pass3, "lasso bias exceeds the two-step error by >= 5x", detail3);
}

// ---------------------------------------------------------------------------
// 4. Random sample counts stay inside the logarithmic band.
void criterion_4() {
  const double t0 = 40.0;
  const double c0 = 10.0;  // t0 / (2K)
  const long horizon = 2000;
  const double lower =
      c0 * (1.0 + std::log(horizon + 1.0) - std::log(t0 + 1.0));
  const double upper = 3.0 * c0 * (1.0 + std::log(static_cast<double>(horizon)) -
                                   std::log(t0));

  int inside = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(6000 + trial);
    std::uniform_int_distribution<int> arm_pick(0, 1);
    long counts[2] = {0, 0};
    for (long t = 1; t <= horizon; ++t) {
      if (epsilon_decay_draw(t, t0, rng)) ++counts[arm_pick(rng)];
    }
    inside += counts[0] >= lower && counts[0] <= upper && counts[1] >= lower &&
              counts[1] <= upper;
  }
  const bool pass = inside >= 190;
  char detail[120];
  std::snprintf(detail, sizeof(detail), "band [%.1f, %.1f], inside %d/%d",
                lower, upper, inside, trials);
  report(4, pass, "per-arm random-sample counts respect the log band", detail);
}

// ---------------------------------------------------------------------------
// 5. Study-1 regret ordering with per-step refits.
void criterion_5() {
  ExperimentSpec spec;
  spec.env = "study1";
  spec.d = 100;
  spec.horizon = 1000;
  spec.trials = 100;
  spec.base_seed = 1000;
  spec.fidelity = true;
  spec.policies = {"gmcp", "lasso", "ols", "oful"};

  const AggregateResult result = run_experiment(spec);
  const double gmcp = result.curves[0].mean_regret.back();
  bool pass = true;
  std::ostringstream detail;
  detail.setf(std::ios::fixed);
  detail.precision(1);
  detail << "gmcp=" << gmcp;
  for (std::size_t p = 1; p < result.curves.size(); ++p) {
    const double other = result.curves[p].mean_regret.back();
    detail << ' ' << result.curves[p].policy << '=' << other;
    pass = pass && gmcp < other && gmcp <= 0.9 * other + 3.0;
  }
  report(5, pass, "study-1 regret: gmcp at least 10% below every baseline",
         detail.str());
}

// ---------------------------------------------------------------------------
// 6. Regret grows with dimension, slower for gmcp than for ols.
void criterion_6() {
  const auto run_at = [](Eigen::Index d) {
    ExperimentSpec spec;
    spec.env = "study1";
    spec.d = d;
    spec.horizon = 1000;
    spec.trials = 20;
    spec.base_seed = 500;
    spec.policies = {"gmcp", "ols"};
    const AggregateResult result = run_experiment(spec);
    return std::pair<double, double>(result.curves[0].mean_regret.back(),
                                     result.curves[1].mean_regret.back());
  };
  const auto [gmcp_low, ols_low] = run_at(10);
  const auto [gmcp_high, ols_high] = run_at(1000);

  const double gmcp_ratio = gmcp_high / gmcp_low;
  const double ols_ratio = ols_high / ols_low;
  const bool pass = gmcp_high > gmcp_low && gmcp_ratio < ols_ratio;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "gmcp %.1f->%.1f (x%.2f), ols %.1f->%.1f (x%.2f)", gmcp_low,
                gmcp_high, gmcp_ratio, ols_low, ols_high, ols_ratio);
  report(6, pass, "dimension scaling: d=1000 costs gmcp less than ols", detail);
}

// ---------------------------------------------------------------------------
// 7. Mean gmcp regret is close to linear in log T; random regret is not.
void criterion_7() {
  ExperimentSpec spec;
  spec.env = "study1";
  spec.d = 100;
  spec.horizon = 4000;
  spec.trials = 30;
  spec.base_seed = 300;
  spec.policies = {"gmcp", "random"};
  const AggregateResult result = run_experiment(spec);

  const std::vector<long> sample_ts{250, 500, 1000, 2000, 4000};
  std::vector<double> log_ts, lin_ts, gmcp_ys, random_ys;
  for (const long t : sample_ts) {
    log_ts.push_back(std::log(static_cast<double>(t)));
    lin_ts.push_back(static_cast<double>(t));
    gmcp_ys.push_back(result.curves[0].mean_regret[t - 1]);
    random_ys.push_back(result.curves[1].mean_regret[t - 1]);
  }
  const double gmcp_log_r2 = r_squared(log_ts, gmcp_ys);
  const double random_log_r2 = r_squared(log_ts, random_ys);
  const double random_lin_r2 = r_squared(lin_ts, random_ys);

  const bool pass =
      gmcp_log_r2 >= 0.90 && random_log_r2 <= random_lin_r2 - 0.05;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "gmcp R2(logT)=%.3f; random R2(logT)=%.3f vs R2(T)=%.3f",
                gmcp_log_r2, random_log_r2, random_lin_r2);
  report(7, pass, "gmcp regret tracks log T; random regret tracks T", detail);
}

// ---------------------------------------------------------------------------
// 8. The gmcp-vs-lasso gap widens with the arm count.
void criterion_8() {
  const auto gap_at = [](int num_arms) {
    ExperimentSpec spec;
    spec.env = "study2";
    spec.num_arms = num_arms;
    spec.horizon = 6000;
    spec.trials = 30;
    spec.base_seed = 800;
    spec.policies = {"gmcp", "lasso"};
    const AggregateResult result = run_experiment(spec);
    return result.curves[1].mean_regret.back() -
           result.curves[0].mean_regret.back();
  };
  const double gap_small = gap_at(2);
  const double gap_large = gap_at(10);
  const bool pass = gap_large > gap_small;
  char detail[120];
  std::snprintf(detail, sizeof(detail), "gap K=2: %.1f, gap K=10: %.1f",
                gap_small, gap_large);
  report(8, pass, "gmcp-vs-lasso regret gap grows with the arm count", detail);
}

// ---------------------------------------------------------------------------
// 9. Replay protocol: gmcp beats the best constant arm on a dose-style table.
void criterion_9() {
  // Balanced 3-arm table: equal-norm sparse score vectors on disjoint
  // supports, rows filtered to a clear arm-optimality margin, reward 0 for
  // the correct arm and -1 otherwise.
  const int rows = 400, d = 93, num_arms = 3;
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> gamma(num_arms, Eigen::VectorXd::Zero(d));
  for (int k = 0; k < num_arms; ++k) {
    for (int j = 0; j < 5; ++j) gamma[k](5 * k + j) = normal(rng);
    gamma[k] *= 2.0 / gamma[k].norm();
  }

  const std::string path = fixture_path("acceptance_dose.csv");
  std::ofstream out(path);
  for (int j = 0; j < d; ++j) out << "x_" << j << ',';
  for (int k = 0; k < num_arms; ++k) {
    out << "r_" << k << (k + 1 == num_arms ? '\n' : ',');
  }
  int produced = 0;
  while (produced < rows) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = normal(rng);
    double scores[3];
    int correct = 0;
    for (int k = 0; k < num_arms; ++k) {
      scores[k] = x.dot(gamma[k]);
      if (scores[k] > scores[correct]) correct = k;
    }
    double runner_up = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_arms; ++k) {
      if (k != correct) runner_up = std::max(runner_up, scores[k]);
    }
    if (scores[correct] - runner_up < 1.25) continue;
    ++produced;
    for (int j = 0; j < d; ++j) out << x(j) << ',';
    for (int k = 0; k < num_arms; ++k) {
      out << (k == correct ? "0" : "-1") << (k + 1 == num_arms ? '\n' : ',');
    }
  }
  out.close();

  ExperimentSpec spec;
  spec.env = "replay";
  spec.replay_path = path;
  spec.horizon = 300;
  spec.trials = 20;  // permutation seeds
  spec.base_seed = 7;
  spec.policies = {"gmcp"};
  spec.emit_optimal_fraction = true;
  spec.t0 = 20.0;
  spec.lambda1_0 = 0.1;
  spec.lambda2_0 = 0.6;
  const AggregateResult result = run_experiment(spec);
  const double gmcp_fraction = result.curves[0].optimal_fraction[299];

  const ReplayTable table = load_replay(path);
  double best_constant = 0.0;
  for (int k = 0; k < table.num_arms(); ++k) {
    int hits = 0;
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
      hits += table.rewards(i, k) >= table.rewards.row(i).maxCoeff();
    }
    best_constant = std::max(best_constant,
                             hits / static_cast<double>(table.rows()));
  }

  const bool pass = gmcp_fraction > best_constant;
  char detail[120];
  std::snprintf(detail, sizeof(detail),
                "gmcp fraction at t=300: %.3f, best constant arm: %.3f",
                gmcp_fraction, best_constant);
  report(9, pass, "replay: gmcp beats the best constant-arm policy", detail);
}

// ---------------------------------------------------------------------------
// 10. Re-running from the emitted manifest reproduces the CSV byte for byte.
void criterion_10() {
  ExperimentSpec spec;
  spec.env = "study1";
  spec.d = 10;
  spec.horizon = 80;
  spec.trials = 3;
  spec.base_seed = 31;
  spec.policies = {"gmcp", "random", "oracle"};
  spec.output_path = fixture_path("determinism_a.csv");

  const AggregateResult first = run_experiment(spec);
  emit_results(first, spec, spec.output_path);

  ExperimentSpec again = parse_config_text(slurp(spec.output_path + ".manifest"));
  again.output_path = fixture_path("determinism_b.csv");
  const AggregateResult second = run_experiment(again);
  emit_results(second, again, again.output_path);

  const std::string a = slurp(fixture_path("determinism_a.csv"));
  const std::string b = slurp(fixture_path("determinism_b.csv"));
  const bool pass = !a.empty() && a == b;
  char detail[80];
  std::snprintf(detail, sizeof(detail), "%zu bytes each, identical=%s",
                a.size(), a == b ? "yes" : "no");
  report(10, pass, "same manifest reproduces byte-identical results", detail);
}

}  // namespace

int main() {
  criterion_1();
  criteria_2_and_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%s: %d/10 criteria passed\n",
              g_failures == 0 ? "SUCCESS" : "FAILURE", 10 - g_failures);
  return g_failures;
}
