#include "emgo/srda.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "emgo/error.hpp"

namespace emgo {

Eigen::MatrixXd srda_responses(std::span<const int> labels, int n_classes) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  std::vector<Eigen::VectorXd> basis;
  basis.push_back(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  Eigen::MatrixXd out(n, n_classes - 1);
  Eigen::Index col = 0;
  for (int k = 0; k < n_classes && col < n_classes - 1; ++k) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
      if (labels[i] == k) y[i] = 1.0;
    for (const auto& q : basis) y -= q.dot(y) * q;
    const double norm = y.norm();
    if (norm < 1e-10) continue;
    y /= norm;
    basis.push_back(y);
    // Unit mean-square responses keep the embedding scale independent of n.
    out.col(col++) = y * std::sqrt(static_cast<double>(n));
  }
  return out.leftCols(col);
}

Projection fit_srda(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                    double alpha, bool standardize) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  if (n_classes < 2) throw Error(ErrorCode::MissingClass, "need at least two classes");
  std::vector<int> counts(n_classes, 0);
  for (int l : labels) {
    if (l < 0 || l >= n_classes)
      throw Error(ErrorCode::MissingClass, "label " + std::to_string(l) + " out of range");
    ++counts[l];
  }
  for (int k = 0; k < n_classes; ++k)
    if (counts[k] == 0) throw Error(ErrorCode::MissingClass, "class " + std::to_string(k) + " absent");
  if (n < n_classes) throw Error(ErrorCode::MissingClass, "fewer samples than classes");
  if (alpha < 0.0) throw Error(ErrorCode::InvalidConfig, "alpha must be >= 0");

  Projection p;
  p.alpha = alpha;
  p.mean = X.colwise().mean().transpose();
  p.scale = Eigen::VectorXd::Ones(d);
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (X.col(j).array() - p.mean[j]).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * (1.0 + std::abs(p.mean[j])))) {
      p.scale[j] = 0.0;
      continue;
    }
    if (standardize) p.scale[j] = 1.0 / sd;
    active.push_back(j);
  }

  const auto da = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd Z(n, da);
  for (Eigen::Index j = 0; j < da; ++j)
    Z.col(j) = (X.col(active[j]).array() - p.mean[active[j]]) * p.scale[active[j]];

  const Eigen::MatrixXd Y = srda_responses(labels, n_classes);
  Eigen::MatrixXd gram = Z.transpose() * Z;
  gram.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "regularised Gram matrix is not positive definite");
  if (alpha == 0.0 && da > 0) {
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    if (diag.minCoeff() <= 1e-10 * diag.maxCoeff())
      throw Error(ErrorCode::SingularSystem, "Gram matrix is rank deficient");
  }
  const Eigen::MatrixXd A = llt.solve(Z.transpose() * Y);

  p.basis = Eigen::MatrixXd::Zero(d, Y.cols());
  for (Eigen::Index j = 0; j < da; ++j) p.basis.row(active[j]) = A.row(j);
  return p;
}

Eigen::VectorXd transform(const Projection& p, const Eigen::VectorXd& x) {
  if (x.size() != p.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(p.input_dim()) +
                                                  " inputs, got " + std::to_string(x.size()));
  return p.basis.transpose() * ((x - p.mean).array() * p.scale.array()).matrix();
}

Eigen::MatrixXd transform_rows(const Projection& p, const Eigen::MatrixXd& X) {
  if (X.cols() != p.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(p.input_dim()) +
                                                  " columns, got " + std::to_string(X.cols()));
  const Eigen::MatrixXd Z =
      (X.rowwise() - p.mean.transpose()).array().rowwise() * p.scale.transpose().array();
  return Z * p.basis;
}

}  // namespace emgo
