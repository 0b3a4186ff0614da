#include "mcpbandit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcpbandit {

namespace {

constexpr double kOracleRidge = 1e-8;

double kkt_violation(double beta_j, double grad_j, double weight_j) {
  if (beta_j == 0.0) {
    return std::max(0.0, std::abs(grad_j) - weight_j);
  }
  return std::abs(grad_j + weight_j * (beta_j > 0.0 ? 1.0 : -1.0));
}

std::vector<Eigen::Index> nonzero_indices(const Eigen::VectorXd& beta) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) idx.push_back(j);
  }
  return idx;
}

// Coordinate-descent state for one weighted-lasso solve. Keeps the linear
// predictors and per-row NLL derivatives current across coordinate updates.
class CdState {
 public:
  CdState(const Dataset& data, const GlmFamily& family)
      : data_(data),
        family_(family),
        n_(data.size()),
        inv_n_(1.0 / static_cast<double>(data.size())),
        eta_(Eigen::VectorXd::Zero(data.size())),
        fprime_(data.size()) {
    const double curv = family.curvature_bound();
    col_curvature_.resize(data.dim());
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      col_curvature_(j) = curv * data.covariates().col(j).squaredNorm() * inv_n_;
    }
  }

  void reset(const Eigen::VectorXd& beta) {
    if ((beta.array() != 0.0).any()) {
      eta_ = data_.covariates() * beta;
    } else {
      eta_.setZero();
    }
    refresh_fprime();
  }

  void refresh_fprime() {
    for (Eigen::Index i = 0; i < n_; ++i) {
      fprime_(i) = family_.nll_derivative(data_.reward(i), eta_(i));
    }
  }

  double gradient(Eigen::Index j) const {
    return data_.covariates().col(j).dot(fprime_) * inv_n_;
  }

  // One majorized coordinate minimization; returns the applied change.
  double update(Eigen::Index j, Eigen::VectorXd& beta, double weight) {
    const double h = col_curvature_(j);
    if (h == 0.0) {
      // Zero column: the coordinate cannot affect the likelihood, so the
      // penalized optimum is exactly zero.
      const double delta = -beta(j);
      beta(j) = 0.0;
      return delta;
    }
    const double g = gradient(j);
    const double target = soft_threshold(h * beta(j) - g, weight) / h;
    const double delta = target - beta(j);
    if (delta != 0.0) {
      beta(j) = target;
      apply_eta_change(j, delta);
    }
    return delta;
  }

  double objective(const Eigen::VectorXd& beta,
                   const Eigen::VectorXd& weights) const {
    double value = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      value += family_.neg_log_density(data_.reward(i), eta_(i));
    }
    value *= inv_n_;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      if (beta(j) != 0.0) value += weights(j) * std::abs(beta(j));
    }
    return value;
  }

 private:
  void apply_eta_change(Eigen::Index j, double delta) {
    eta_ += delta * data_.covariates().col(j);
    if (family_.is_linear()) {
      const double curv = family_.curvature_bound();
      fprime_ += (delta * curv) * data_.covariates().col(j);
    } else {
      refresh_fprime();
    }
  }

  const Dataset& data_;
  const GlmFamily& family_;
  Eigen::Index n_;
  double inv_n_;
  Eigen::VectorXd eta_;
  Eigen::VectorXd fprime_;
  Eigen::VectorXd col_curvature_;
};

// Cyclic coordinate descent on `data` as given (no intercept column, no
// rescaling). `warm` must match data.dim() when present.
Fit solve_raw(const Dataset& data, const Eigen::VectorXd& weights,
              const GlmFamily& family, const SolverOptions& options,
              const std::optional<Eigen::VectorXd>& warm) {
  const Eigen::Index d = data.dim();

  Fit fit;
  fit.beta = Eigen::VectorXd::Zero(d);
  if (warm) {
    if (warm->size() != d) {
      throw std::invalid_argument("weighted_lasso_fit: warm start mismatch");
    }
    fit.beta = *warm;
  }

  CdState state(data, family);
  state.reset(fit.beta);

  const auto sweep = [&](const std::vector<Eigen::Index>& coords) {
    for (Eigen::Index j : coords) state.update(j, fit.beta, weights(j));
    ++fit.iterations;
    fit.objective_trace.push_back(state.objective(fit.beta, weights));
  };

  std::vector<Eigen::Index> all_coords(d);
  for (Eigen::Index j = 0; j < d; ++j) all_coords[j] = j;

  while (true) {
    // Full-pass check against the reference gradient; this is the same
    // computation an external KKT audit performs, so a converged fit
    // re-verifies at the same tolerance.
    const Eigen::VectorXd grad = nll_gradient(data, fit.beta, family);
    double residual = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      residual = std::max(residual, kkt_violation(fit.beta(j), grad(j), weights(j)));
    }
    fit.kkt_residual = residual;
    if (residual <= options.tol) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= options.max_iter) {
      fit.converged = false;
      break;
    }

    sweep(all_coords);
    state.reset(fit.beta);  // drop incremental rounding drift

    // Inner iterations on the nonzero coordinates until they settle.
    std::vector<Eigen::Index> active = nonzero_indices(fit.beta);
    while (!active.empty() && fit.iterations < options.max_iter) {
      sweep(active);
      double active_residual = 0.0;
      for (Eigen::Index j : active) {
        active_residual = std::max(
            active_residual,
            kkt_violation(fit.beta(j), state.gradient(j), weights(j)));
      }
      if (active_residual <= options.tol) break;
      active = nonzero_indices(fit.beta);
    }
    state.reset(fit.beta);
  }

  fit.active_set = nonzero_indices(fit.beta);
  state.reset(fit.beta);
  fit.objective = state.objective(fit.beta, weights);
  return fit;
}

// Optional column standardization and intercept augmentation. The internal
// problem appends an unpenalized all-ones column and divides each covariate
// column by its root mean square.
struct Transformed {
  Transformed(const Dataset& data, bool standardize, bool intercept)
      : raw_dim(data.dim()),
        has_intercept(intercept),
        scale(Eigen::VectorXd::Ones(data.dim())),
        work(data.dim() + (intercept ? 1 : 0)) {
    const double n = static_cast<double>(data.size());
    if (standardize) {
      for (Eigen::Index j = 0; j < raw_dim; ++j) {
        const double s = std::sqrt(data.covariates().col(j).squaredNorm() / n);
        if (s > 0.0) scale(j) = s;
      }
    }
    Eigen::VectorXd row(work.dim());
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      for (Eigen::Index j = 0; j < raw_dim; ++j) {
        row(j) = data.covariates()(i, j) / scale(j);
      }
      if (intercept) row(raw_dim) = 1.0;
      work.append(row, data.reward(i));
    }
  }

  Eigen::VectorXd internal_weights(const Eigen::VectorXd& weights) const {
    Eigen::VectorXd w(work.dim());
    w.head(raw_dim) = weights;
    if (has_intercept) w(raw_dim) = 0.0;
    return w;
  }

  std::optional<Eigen::VectorXd> internal_warm(
      const std::optional<Eigen::VectorXd>& warm) const {
    if (!warm) return std::nullopt;
    if (warm->size() != raw_dim) {
      throw std::invalid_argument("weighted_lasso_fit: warm start mismatch");
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(work.dim());
    v.head(raw_dim) = warm->cwiseProduct(scale);
    return v;
  }

  Fit map_back(Fit inner) const {
    if (has_intercept) inner.intercept = inner.beta(raw_dim);
    Eigen::VectorXd raw(raw_dim);
    for (Eigen::Index j = 0; j < raw_dim; ++j) {
      raw(j) = inner.beta(j) / scale(j);
    }
    inner.beta = std::move(raw);
    inner.active_set = nonzero_indices(inner.beta);
    return inner;
  }

  Eigen::Index raw_dim;
  bool has_intercept;
  Eigen::VectorXd scale;
  Dataset work;
};

void validate_weighted_inputs(const Dataset& data,
                              const Eigen::VectorXd& weights) {
  if (data.empty()) {
    throw std::invalid_argument("weighted_lasso_fit: empty dataset");
  }
  if (weights.size() != data.dim()) {
    throw std::invalid_argument("weighted_lasso_fit: weight length mismatch");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw std::invalid_argument(
        "weighted_lasso_fit: weights must be finite and nonnegative");
  }
}

Eigen::VectorXd step2_weights(const Eigen::VectorXd& step1_beta,
                              const PenaltyParams& params) {
  Eigen::VectorXd weights(step1_beta.size());
  for (Eigen::Index j = 0; j < step1_beta.size(); ++j) {
    weights(j) = step1_beta(j) != 0.0
                     ? mcp_derivative(std::abs(step1_beta(j)), params)
                     : params.lambda;
  }
  return weights;
}

}  // namespace

double mcp_penalty(double x, const PenaltyParams& params) {
  const double ax = std::abs(x);
  if (ax >= params.a * params.lambda) {
    return 0.5 * params.a * params.lambda * params.lambda;
  }
  return params.lambda * ax - ax * ax / (2.0 * params.a);
}

double mcp_derivative(double x_abs, const PenaltyParams& params) {
  if (x_abs < 0.0) {
    throw std::invalid_argument("mcp_derivative: negative input");
  }
  return std::max(0.0, params.lambda - x_abs / params.a);
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

Fit weighted_lasso_fit(const Dataset& data, const Eigen::VectorXd& weights,
                       const GlmFamily& family, const SolverOptions& options) {
  validate_weighted_inputs(data, weights);
  if (!options.fit_intercept && !options.standardize) {
    return solve_raw(data, weights, family, options, options.warm_start);
  }
  const Transformed problem(data, options.standardize, options.fit_intercept);
  Fit inner = solve_raw(problem.work, problem.internal_weights(weights), family,
                        options, problem.internal_warm(options.warm_start));
  return problem.map_back(std::move(inner));
}

Fit lasso_fit(const Dataset& data, double lambda, const GlmFamily& family,
              const SolverOptions& options) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lasso_fit: lambda must be nonnegative");
  }
  return weighted_lasso_fit(
      data, Eigen::VectorXd::Constant(data.dim(), lambda), family, options);
}

Fit two_step_weighted_lasso(const Dataset& data, const PenaltyParams& params,
                            const GlmFamily& family,
                            const SolverOptions& options) {
  if (!(params.a > 0.0) || !(params.lambda >= 0.0)) {
    throw std::invalid_argument("two_step_weighted_lasso: bad penalty params");
  }
  if (!options.fit_intercept && !options.standardize) {
    const Fit step1 = lasso_fit(data, params.lambda, family, options);
    SolverOptions step2_options = options;
    step2_options.warm_start = step1.beta;
    Fit fit = weighted_lasso_fit(data, step2_weights(step1.beta, params),
                                 family, step2_options);
    fit.iterations += step1.iterations;
    return fit;
  }

  // Transform once; the MCP weight update then lives on the same
  // (standardized) scale the penalty is applied to, and the step-1
  // intercept carries into step 2 through the warm start.
  if (data.empty()) {
    throw std::invalid_argument("two_step_weighted_lasso: empty dataset");
  }
  const Transformed problem(data, options.standardize, options.fit_intercept);
  const Eigen::VectorXd uniform = problem.internal_weights(
      Eigen::VectorXd::Constant(data.dim(), params.lambda));
  const Fit step1 = solve_raw(problem.work, uniform, family, options,
                              problem.internal_warm(options.warm_start));

  Eigen::VectorXd weights = step2_weights(step1.beta, params);
  if (problem.has_intercept) weights(problem.raw_dim) = 0.0;
  Fit fit = solve_raw(problem.work, weights, family, options, step1.beta);
  fit.iterations += step1.iterations;
  return problem.map_back(std::move(fit));
}

Fit oracle_fit(const Dataset& data, const std::vector<Eigen::Index>& support,
               const GlmFamily& family, const SolverOptions& options) {
  if (data.empty()) {
    throw std::invalid_argument("oracle_fit: empty dataset");
  }
  const Eigen::Index d = data.dim();
  std::vector<Eigen::Index> cols(support);
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  if (!cols.empty() && (cols.front() < 0 || cols.back() >= d)) {
    throw std::invalid_argument("oracle_fit: support index out of range");
  }

  Fit fit;
  fit.beta = Eigen::VectorXd::Zero(d);
  if (cols.empty() && !options.fit_intercept) {
    fit.converged = true;
    fit.objective = nll(data, fit.beta, family);
    return fit;
  }

  const Eigen::Index n = data.size();
  const Eigen::Index s = static_cast<Eigen::Index>(cols.size());
  const Eigen::Index total = s + (options.fit_intercept ? 1 : 0);
  Eigen::MatrixXd xs(n, total);
  for (Eigen::Index k = 0; k < s; ++k) {
    xs.col(k) = data.covariates().col(cols[k]);
  }
  if (options.fit_intercept) xs.col(s).setOnes();
  const auto& rewards = data.rewards();

  Eigen::VectorXd beta_s = Eigen::VectorXd::Zero(total);
  if (options.warm_start && options.warm_start->size() == d) {
    for (Eigen::Index k = 0; k < s; ++k) beta_s(k) = (*options.warm_start)(cols[k]);
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const auto restricted_nll = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = xs * b;
    double total_nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      total_nll += family.neg_log_density(rewards(i), eta(i));
    }
    return total_nll * inv_n;
  };

  bool ridge_used = false;
  double grad_norm = std::numeric_limits<double>::infinity();
  const int newton_cap = std::min(options.max_iter, 200);
  int iter = 0;
  double objective = restricted_nll(beta_s);

  for (; iter < newton_cap; ++iter) {
    const Eigen::VectorXd eta = xs * beta_s;
    Eigen::VectorXd fprime(n), fsecond(n);
    const double curv = family.curvature_bound();
    for (Eigen::Index i = 0; i < n; ++i) {
      fprime(i) = family.nll_derivative(rewards(i), eta(i));
      if (family.is_linear()) {
        fsecond(i) = curv;
      } else {
        const double p = fprime(i) + rewards(i) / family.payoff();
        fsecond(i) = std::max(p * (1.0 - p), 0.0);
      }
    }
    const Eigen::VectorXd grad = xs.transpose() * fprime * inv_n;
    grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (grad_norm <= options.tol) break;

    Eigen::MatrixXd hessian =
        xs.transpose() * fsecond.asDiagonal() * xs * inv_n;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    const double dmax = ldlt.vectorD().maxCoeff();
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, dmax)) {
      ridge_used = true;
      hessian.diagonal().array() += kOracleRidge;
      ldlt.compute(hessian);
    }
    Eigen::VectorXd step = -ldlt.solve(grad);
    if (!step.allFinite()) {
      ridge_used = true;
      break;
    }

    // Backtrack until the objective does not increase.
    double scale = 1.0;
    Eigen::VectorXd candidate = beta_s + step;
    double candidate_obj = restricted_nll(candidate);
    while (candidate_obj > objective && scale > 1e-10) {
      scale *= 0.5;
      candidate = beta_s + scale * step;
      candidate_obj = restricted_nll(candidate);
    }
    if (candidate_obj > objective) break;
    beta_s = candidate;
    objective = candidate_obj;
  }

  for (Eigen::Index k = 0; k < s; ++k) fit.beta(cols[k]) = beta_s(k);
  if (options.fit_intercept) fit.intercept = beta_s(s);
  fit.active_set = nonzero_indices(fit.beta);
  fit.objective = objective;
  fit.kkt_residual = grad_norm;
  fit.iterations = iter;

  bool clamped = false;
  const Eigen::VectorXd eta_final = xs * beta_s;
  for (Eigen::Index i = 0; i < n && !clamped; ++i) {
    clamped = family.clamps(eta_final(i));
  }
  fit.converged = grad_norm <= options.tol && !ridge_used && !clamped;
  return fit;
}

}  // namespace mcpbandit
