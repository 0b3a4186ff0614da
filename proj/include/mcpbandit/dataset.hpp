#pragma once

#include <Eigen/Dense>

namespace mcpbandit {

/// A single (covariates, reward) pair. All entries must be finite.
struct Observation {
  Eigen::VectorXd x;
  double r = 0.0;
};

/// Append-only sample set of fixed covariate dimension.
///
/// Rows are stored in a column-major matrix with doubling capacity so that
/// solvers can read whole covariate columns without copying.
class Dataset {
 public:
  explicit Dataset(Eigen::Index dim);

  void append(const Eigen::VectorXd& x, double r);
  void append(const Observation& obs) { append(obs.x, obs.r); }

  Eigen::Index dim() const { return dim_; }
  Eigen::Index size() const { return n_; }
  bool empty() const { return n_ == 0; }

  /// n x d view of the covariate rows. Columns are contiguous.
  Eigen::Block<const Eigen::MatrixXd> covariates() const {
    return storage_.topRows(n_);
  }
  /// Length-n view of the rewards.
  Eigen::VectorBlock<const Eigen::VectorXd> rewards() const {
    return rewards_.head(n_);
  }

  double reward(Eigen::Index i) const { return rewards_(i); }
  Eigen::VectorXd covariate_row(Eigen::Index i) const {
    return storage_.row(i).head(dim_);
  }
  Observation observation(Eigen::Index i) const {
    return {covariate_row(i), reward(i)};
  }

 private:
  void grow(Eigen::Index min_rows);

  Eigen::Index dim_ = 0;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd storage_;  // capacity x dim, only first n_ rows valid
  Eigen::VectorXd rewards_;
};

}  // namespace mcpbandit
