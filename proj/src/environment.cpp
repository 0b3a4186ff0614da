#include "mcpbandit/environment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mcpbandit {

int Environment::best_arm(const Eigen::VectorXd& x) const {
  int best = 0;
  double best_value = oracle_expected(0, x);
  for (int k = 1; k < num_arms(); ++k) {
    const double value = oracle_expected(k, x);
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  return best;
}

SyntheticEnv::SyntheticEnv(std::vector<Eigen::VectorXd> true_betas,
                           GlmFamily family)
    : true_betas_(std::move(true_betas)), family_(family) {
  if (true_betas_.size() < 2) {
    throw std::invalid_argument("SyntheticEnv: need at least two arms");
  }
  dim_ = true_betas_.front().size();
  for (const auto& beta : true_betas_) {
    if (beta.size() != dim_) {
      throw std::invalid_argument("SyntheticEnv: beta length mismatch");
    }
  }
}

std::optional<Eigen::VectorXd> SyntheticEnv::next_context(
    std::mt19937_64& rng) {
  std::normal_distribution<double> standard_normal(0.0, 1.0);
  Eigen::VectorXd x(dim_);
  for (Eigen::Index i = 0; i < dim_; ++i) x(i) = standard_normal(rng);
  return x;
}

double SyntheticEnv::realize_reward(int arm, const Eigen::VectorXd& x,
                                    std::mt19937_64& rng) {
  return sample_reward(family_, x, true_betas_.at(arm), rng);
}

double SyntheticEnv::oracle_expected(int arm, const Eigen::VectorXd& x) const {
  return expected_reward(family_, x, true_betas_.at(arm));
}

SyntheticEnv make_study1(Eigen::Index d) {
  if (d < 5) {
    throw std::invalid_argument("make_study1: d must be >= 5");
  }
  Eigen::VectorXd beta1 = Eigen::VectorXd::Zero(d);
  for (Eigen::Index j = 0; j < 5; ++j) beta1(j) = static_cast<double>(j + 1);
  return SyntheticEnv({beta1, 1.1 * beta1}, GlmFamily::linear_gaussian(1.0));
}

SyntheticEnv make_study2(int num_arms, std::uint64_t seed) {
  if (num_arms < 2) {
    throw std::invalid_argument("make_study2: need at least two arms");
  }
  constexpr Eigen::Index kDim = 100;
  constexpr Eigen::Index kSignificant = 5;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> standard_normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> betas;
  betas.reserve(num_arms);
  for (int k = 0; k < num_arms; ++k) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(kDim);
    for (Eigen::Index j = 0; j < kSignificant; ++j) {
      beta(j) = standard_normal(rng);
    }
    betas.push_back(std::move(beta));
  }
  return SyntheticEnv(std::move(betas), GlmFamily::linear_gaussian(1.0));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_cell(const std::string& cell, Eigen::Index row, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw ReplayParseError("replay: non-numeric cell at row " +
                           std::to_string(row) + ", column " +
                           std::to_string(col + 1));
  }
  if (!std::isfinite(value)) {
    throw ReplayParseError("replay: non-finite cell at row " +
                           std::to_string(row) + ", column " +
                           std::to_string(col + 1));
  }
  return value;
}

}  // namespace

ReplayTable load_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ReplayParseError("replay: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ReplayParseError("replay: empty file " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_csv_line(line);
  std::size_t d = 0;
  while (d < header.size() && header[d] == "x_" + std::to_string(d)) ++d;
  std::size_t k = 0;
  while (d + k < header.size() &&
         header[d + k] == "r_" + std::to_string(k)) {
    ++k;
  }
  if (d == 0 || k == 0 || d + k != header.size()) {
    throw ReplayParseError(
        "replay: malformed header, expected x_0..x_{d-1},r_0..r_{K-1}");
  }

  std::vector<std::vector<double>> rows;
  Eigen::Index row_number = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row_number;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != d + k) {
      throw ReplayParseError("replay: row " + std::to_string(row_number) +
                             " has " + std::to_string(cells.size()) +
                             " fields, expected " + std::to_string(d + k));
    }
    std::vector<double> row(d + k);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row[c] = parse_cell(cells[c], row_number, c);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ReplayParseError("replay: no data rows in " + path);
  }

  ReplayTable table;
  table.contexts.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(d));
  table.rewards.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      table.contexts(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      table.rewards(static_cast<Eigen::Index>(i),
                    static_cast<Eigen::Index>(c)) = rows[i][d + c];
    }
  }
  return table;
}

ReplayEnv::ReplayEnv(std::shared_ptr<const ReplayTable> table)
    : table_(std::move(table)) {
  if (!table_ || table_->rows() == 0) {
    throw std::invalid_argument("ReplayEnv: empty table");
  }
  order_.resize(static_cast<std::size_t>(table_->rows()));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
}

void ReplayEnv::shuffle(std::mt19937_64& rng) {
  std::shuffle(order_.begin(), order_.end(), rng);
  pos_ = 0;
  current_ = -1;
}

std::optional<Eigen::VectorXd> ReplayEnv::next_context(std::mt19937_64&) {
  if (pos_ >= static_cast<Eigen::Index>(order_.size())) {
    return std::nullopt;
  }
  current_ = order_[static_cast<std::size_t>(pos_++)];
  return Eigen::VectorXd(table_->contexts.row(current_));
}

double ReplayEnv::realize_reward(int arm, const Eigen::VectorXd&,
                                 std::mt19937_64&) {
  if (current_ < 0) {
    throw std::logic_error("ReplayEnv: reward requested before any context");
  }
  return table_->rewards(current_, arm);
}

double ReplayEnv::oracle_expected(int arm, const Eigen::VectorXd&) const {
  if (current_ < 0) {
    throw std::logic_error("ReplayEnv: oracle requested before any context");
  }
  return table_->rewards(current_, arm);
}

}  // namespace mcpbandit
