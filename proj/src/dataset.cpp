#include "mcpbandit/dataset.hpp"

#include <stdexcept>

namespace mcpbandit {

Dataset::Dataset(Eigen::Index dim) : dim_(dim) {
  if (dim < 1) {
    throw std::invalid_argument("Dataset: dimension must be >= 1");
  }
}

void Dataset::append(const Eigen::VectorXd& x, double r) {
  if (x.size() != dim_) {
    throw std::invalid_argument("Dataset::append: covariate length mismatch");
  }
  if (!x.allFinite() || !std::isfinite(r)) {
    throw std::invalid_argument("Dataset::append: non-finite entry");
  }
  grow(n_ + 1);
  storage_.row(n_).head(dim_) = x;
  rewards_(n_) = r;
  ++n_;
}

void Dataset::grow(Eigen::Index min_rows) {
  if (storage_.rows() >= min_rows) return;
  Eigen::Index cap = storage_.rows() == 0 ? 16 : storage_.rows() * 2;
  while (cap < min_rows) cap *= 2;
  storage_.conservativeResize(cap, dim_);
  rewards_.conservativeResize(cap);
}

}  // namespace mcpbandit
