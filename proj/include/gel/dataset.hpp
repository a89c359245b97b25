#pragma once

#include <Eigen/Dense>

namespace gel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Observed stationary series, one row per time point. Immutable after
// construction; safe to share across threads.
class Dataset {
 public:
  // Throws ConfigError on n < 2 or non-finite entries.
  explicit Dataset(Matrix values);

  const Matrix& values() const { return values_; }
  Eigen::Index n() const { return values_.rows(); }
  Eigen::Index d() const { return values_.cols(); }
  Vector row(Eigen::Index t) const { return values_.row(t).transpose(); }

 private:
  Matrix values_;
};

}  // namespace gel
