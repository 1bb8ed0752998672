#pragma once

#include <span>

#include <Eigen/Dense>

namespace emgo {

// Fitted spectral-regression discriminant projection. Inputs are
// standardised with (mean, scale) and projected onto `basis`.
struct Projection {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;   // 1/std per input dimension, 0 for constant dims
  Eigen::MatrixXd basis;   // d x (classes - 1)
  double alpha = 0.01;

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return basis.cols(); }
};

// Rows of X are samples. Labels must cover 0..n_classes-1 (MissingClass
// otherwise). alpha == 0 may throw SingularSystem.
Projection fit_srda(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                    double alpha = 0.01, bool standardize = true);

// basis^T * ((x - mean) .* scale). Throws DimensionMismatch.
Eigen::VectorXd transform(const Projection& p, const Eigen::VectorXd& x);
Eigen::MatrixXd transform_rows(const Projection& p, const Eigen::MatrixXd& X);

// Class responses orthogonalised against the ones vector (n x (c-1)),
// exposed for testing.
Eigen::MatrixXd srda_responses(std::span<const int> labels, int n_classes);

}  // namespace emgo
