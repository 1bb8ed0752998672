#include "emgo/classifiers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>

#include "emgo/error.hpp"

namespace emgo {

namespace {

struct SlotMap {
  std::vector<int> classes;
  std::vector<int> slots;  // per sample
};

SlotMap map_slots(std::span<const int> labels) {
  SlotMap m;
  m.classes.assign(labels.begin(), labels.end());
  std::sort(m.classes.begin(), m.classes.end());
  m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());
  m.slots.reserve(labels.size());
  for (int l : labels)
    m.slots.push_back(static_cast<int>(
        std::lower_bound(m.classes.begin(), m.classes.end(), l) - m.classes.begin()));
  return m;
}

double rbf(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double scale) {
  return std::exp(-(a - b).squaredNorm() / (scale * scale));
}

LdaParams train_lda(const Eigen::MatrixXd& Z, const SlotMap& m, const Hyper& h) {
  const Eigen::Index n = Z.rows(), p = Z.cols();
  const auto k = static_cast<Eigen::Index>(m.classes.size());
  LdaParams lda;
  lda.means = Eigen::MatrixXd::Zero(k, p);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    lda.means.row(m.slots[i]) += Z.row(i);
    counts[m.slots[i]] += 1.0;
  }
  for (Eigen::Index c = 0; c < k; ++c) lda.means.row(c) /= counts[c];

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd d = Z.row(i) - lda.means.row(m.slots[i]);
    cov.noalias() += d.transpose() * d;
  }
  cov /= static_cast<double>(n > k ? n - k : n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().cwiseAbs().maxCoeff();
  lda.singular_before_shrinkage = !(eig.eigenvalues().minCoeff() > 1e-12 * std::max(max_ev, 1e-300));

  const double trace = cov.trace();
  const double lambda = h.lda_shrinkage * (trace > 0.0 ? trace / static_cast<double>(p) : 1.0);
  cov.diagonal().array() += lambda;
  lda.inv_cov = cov.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  lda.log_priors = (counts / static_cast<double>(n)).array().log();
  return lda;
}

SvmParams train_svm(const Eigen::MatrixXd& Z, const SlotMap& m, const Hyper& h) {
  const auto k = static_cast<int>(m.classes.size());
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) pairs.emplace_back(a, b);

  const Eigen::MatrixXd K = rbf_kernel(Z, Z, h.svm_kernel_scale);
  SvmParams params;
  params.pairs.resize(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(pairs.size()); ++pi) {
    try {
      const auto [a, b] = pairs[pi];
      std::vector<Eigen::Index> rows;
      std::vector<int> y;
      for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        if (m.slots[i] == a || m.slots[i] == b) {
          rows.push_back(i);
          y.push_back(m.slots[i] == a ? 1 : -1);
        }
      }
      const auto n = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd Ks(n, n);
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) Ks(i, j) = K(rows[i], rows[j]);
      SvmPair pair = solve_svm_dual(Ks, y, h);
      for (int& s : pair.sv) s = static_cast<int>(rows[s]);
      pair.first = a;
      pair.second = b;
      params.pairs[pi] = std::move(pair);
    } catch (...) {
      errors[pi] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Re-index support vectors into the union of all pairs.
  std::vector<int> remap(static_cast<std::size_t>(Z.rows()), -1);
  for (const auto& pair : params.pairs)
    for (int s : pair.sv) remap[s] = 0;
  int next = 0;
  for (auto& r : remap)
    if (r == 0) r = next++;
  params.support.resize(next, Z.cols());
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    if (remap[i] >= 0) params.support.row(remap[i]) = Z.row(i);
  for (auto& pair : params.pairs)
    for (int& s : pair.sv) s = remap[s];
  return params;
}

int predict_lda(const LdaParams& p, const Eigen::VectorXd& z) {
  const Eigen::VectorXd w = p.inv_cov * z;
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < p.means.rows(); ++c) {
    const Eigen::VectorXd mu = p.means.row(c).transpose();
    const double score = mu.dot(w) - 0.5 * mu.dot(p.inv_cov * mu) + p.log_priors[c];
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(c);
    }
  }
  return best;
}

int predict_knn(const KnnParams& p, const Eigen::VectorXd& z, int k_neighbours, int n_classes) {
  const Eigen::Index n = p.train.rows();
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) dist[i] = (p.train.row(i).transpose() - z).squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto k = std::min<Eigen::Index>(k_neighbours, n);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  });
  std::vector<int> votes(n_classes, 0);
  std::vector<double> summed(n_classes, 0.0);
  for (Eigen::Index i = 0; i < k; ++i) {
    const int s = p.labels[order[i]];
    ++votes[s];
    summed[s] += std::sqrt(dist[order[i]]);
  }
  int best = -1;
  for (int s = 0; s < n_classes; ++s) {
    if (votes[s] == 0) continue;
    if (best < 0 || votes[s] > votes[best] || (votes[s] == votes[best] && summed[s] < summed[best]))
      best = s;
  }
  return best;
}

int predict_svm(const SvmParams& p, const Eigen::VectorXd& z, int n_classes, double scale) {
  const Eigen::Index ns = p.support.rows();
  Eigen::VectorXd kz(ns);
  for (Eigen::Index i = 0; i < ns; ++i) kz[i] = rbf(p.support.row(i).transpose(), z, scale);
  std::vector<int> votes(n_classes, 0);
  std::vector<double> score(n_classes, 0.0);
  for (const auto& pair : p.pairs) {
    double f = pair.bias;
    for (std::size_t s = 0; s < pair.sv.size(); ++s) f += pair.coef[static_cast<Eigen::Index>(s)] * kz[pair.sv[s]];
    ++votes[f >= 0.0 ? pair.first : pair.second];
    score[pair.first] += f;
    score[pair.second] -= f;
  }
  int best = 0;
  for (int s = 1; s < n_classes; ++s)
    if (votes[s] > votes[best] || (votes[s] == votes[best] && score[s] > score[best])) best = s;
  return best;
}

}  // namespace

std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::LDA: return "LDA";
    case ClassifierKind::KNN: return "KNN";
    case ClassifierKind::SVM: return "SVM";
  }
  return "?";
}

std::optional<ClassifierKind> parse_classifier(std::string_view s) {
  std::string l;
  for (char c : s) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (l == "lda") return ClassifierKind::LDA;
  if (l == "knn") return ClassifierKind::KNN;
  if (l == "svm") return ClassifierKind::SVM;
  return std::nullopt;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double kernel_scale) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ra = A, rb = B;
  const bool same = &A == &B;
  const double inv = 1.0 / (kernel_scale * kernel_scale);
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = same ? i : 0; j < B.rows(); ++j) {
      const double v = std::exp(-(ra.row(i) - rb.row(j)).squaredNorm() * inv);
      K(i, j) = v;
      if (same) K(j, i) = v;
    }
  }
  return K;
}

SvmPair train_svm_binary(const Eigen::MatrixXd& X, std::span<const int> y, const Hyper& h) {
  return solve_svm_dual(rbf_kernel(X, X, h.svm_kernel_scale), y, h);
}

SvmPair solve_svm_dual(const Eigen::MatrixXd& K, std::span<const int> y, const Hyper& h) {
  const Eigen::Index n = K.rows();
  if (static_cast<Eigen::Index>(y.size()) != n || K.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "kernel and label sizes differ");
  const double c_box = h.svm_c;
  const double eps = h.svm_tol;
  constexpr double tau = 1e-12;

  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  const auto yv = [&](Eigen::Index i) { return static_cast<double>(y[i]); };
  const long long max_iter = 10LL * n * n;
  long long iter = 0;
  bool converged = false;

  while (iter < max_iter) {
    // Maximal violating index, then second-order choice of its partner.
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (alpha[t] < c_box && -grad[t] >= gmax) gmax = -grad[t], i = t;
      } else {
        if (alpha[t] > 0.0 && grad[t] >= gmax) gmax = grad[t], i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double obj_min = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n && i >= 0; ++t) {
      if (y[t] == 1) {
        if (alpha[t] <= 0.0) continue;
        const double gd = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
        if (gd > 0.0) {
          double quad = K(i, i) + K(t, t) - 2.0 * yv(i) * yv(i) * yv(t) * K(i, t);
          if (quad <= 0.0) quad = tau;
          const double obj = -(gd * gd) / quad;
          if (obj <= obj_min) obj_min = obj, j = t;
        }
      } else {
        if (alpha[t] >= c_box) continue;
        const double gd = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (gd > 0.0) {
          double quad = K(i, i) + K(t, t) + 2.0 * yv(i) * yv(i) * yv(t) * K(i, t);
          if (quad <= 0.0) quad = tau;
          const double obj = -(gd * gd) / quad;
          if (obj <= obj_min) obj_min = obj, j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < eps) {
      converged = true;
      break;
    }
    ++iter;

    const double qij = yv(i) * yv(j) * K(i, j);
    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = K(i, i) + K(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = diff;
      } else {
        if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c_box) alpha[i] = c_box, alpha[j] = c_box - diff;
      } else {
        if (alpha[j] > c_box) alpha[j] = c_box, alpha[i] = c_box + diff;
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c_box) {
        if (alpha[i] > c_box) alpha[i] = c_box, alpha[j] = sum - c_box;
      } else {
        if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = sum;
      }
      if (sum > c_box) {
        if (alpha[j] > c_box) alpha[j] = c_box, alpha[i] = sum - c_box;
      } else {
        if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (Eigen::Index t = 0; t < n; ++t)
      grad[t] += yv(t) * (yv(i) * K(t, i) * di + yv(j) * K(t, j) * dj);
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yv(t) * grad[t];
    if (alpha[t] >= c_box) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;

  SvmPair pair;
  pair.iterations = static_cast<int>(iter);
  pair.converged = converged;
  pair.bias = -rho;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha[t] > 0.0) pair.sv.push_back(static_cast<int>(t));
  pair.coef.resize(static_cast<Eigen::Index>(pair.sv.size()));
  for (std::size_t s = 0; s < pair.sv.size(); ++s)
    pair.coef[static_cast<Eigen::Index>(s)] = alpha[pair.sv[s]] * yv(pair.sv[s]);
  return pair;
}

double svm_decision(const SvmPair& pair, const Eigen::MatrixXd& support, const Eigen::VectorXd& z,
                    double kernel_scale) {
  double f = pair.bias;
  for (std::size_t s = 0; s < pair.sv.size(); ++s)
    f += pair.coef[static_cast<Eigen::Index>(s)] * rbf(support.row(pair.sv[s]).transpose(), z, kernel_scale);
  return f;
}

int Classifier::predict(const Eigen::VectorXd& z) const {
  if (z.size() != dim)
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(dim) + " inputs, got " +
                                                  std::to_string(z.size()));
  const int k = static_cast<int>(classes.size());
  int slot = 0;
  switch (kind) {
    case ClassifierKind::LDA: slot = predict_lda(std::get<LdaParams>(params), z); break;
    case ClassifierKind::KNN: slot = predict_knn(std::get<KnnParams>(params), z, hyper.knn_k, k); break;
    case ClassifierKind::SVM:
      slot = predict_svm(std::get<SvmParams>(params), z, k, hyper.svm_kernel_scale);
      break;
  }
  return classes[slot];
}

bool Classifier::converged() const {
  if (const auto* svm = std::get_if<SvmParams>(&params))
    return std::all_of(svm->pairs.begin(), svm->pairs.end(), [](const SvmPair& p) { return p.converged; });
  return true;
}

Classifier train_classifier(ClassifierKind kind, const Eigen::MatrixXd& Z,
                            std::span<const int> labels, const Hyper& hyper) {
  if (static_cast<Eigen::Index>(labels.size()) != Z.rows())
    throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  SlotMap m = map_slots(labels);
  if (m.classes.size() < 2) throw Error(ErrorCode::MissingClass, "need at least two classes");

  Classifier c;
  c.kind = kind;
  c.hyper = hyper;
  c.dim = Z.cols();
  switch (kind) {
    case ClassifierKind::LDA: c.params = train_lda(Z, m, hyper); break;
    case ClassifierKind::KNN: c.params = KnnParams{Z, m.slots}; break;
    case ClassifierKind::SVM: c.params = train_svm(Z, m, hyper); break;
  }
  c.classes = std::move(m.classes);
  return c;
}

TrainedModel train(ClassifierKind kind, const Eigen::MatrixXd& X, std::span<const int> labels,
                   int n_classes, const Hyper& hyper, const PipelineInfo& info) {
  TrainedModel m;
  m.pipeline = info;
  m.projection = fit_srda(X, labels, n_classes, hyper.srda_alpha);
  m.classifier = train_classifier(kind, transform_rows(m.projection, X), labels, hyper);
  return m;
}

int predict(const TrainedModel& m, const Eigen::VectorXd& x) {
  return m.classifier.predict(transform(m.projection, x));
}

std::vector<int> predict_rows(const TrainedModel& m, const Eigen::MatrixXd& X) {
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict(m, X.row(i).transpose());
  return out;
}

}  // namespace emgo
