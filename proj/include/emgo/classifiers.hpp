#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "emgo/features.hpp"
#include "emgo/filter.hpp"
#include "emgo/srda.hpp"

namespace emgo {

enum class ClassifierKind : std::uint8_t { LDA, KNN, SVM };

inline constexpr std::array<ClassifierKind, 3> kAllClassifiers = {
    ClassifierKind::LDA, ClassifierKind::SVM, ClassifierKind::KNN};

std::string_view to_string(ClassifierKind k);
std::optional<ClassifierKind> parse_classifier(std::string_view s);

struct Hyper {
  int knn_k = 10;
  double svm_kernel_scale = 3.0;  // K(x,z) = exp(-|x-z|^2 / s^2)
  double svm_c = 1.0;
  double svm_tol = 1e-3;
  double lda_shrinkage = 1e-6;    // lambda = lda_shrinkage * trace / d
  double srda_alpha = 0.01;
};

struct LdaParams {
  Eigen::MatrixXd means;         // classes x p
  Eigen::MatrixXd inv_cov;       // p x p pooled, shrunk
  Eigen::VectorXd log_priors;
  bool singular_before_shrinkage = false;
};

struct KnnParams {
  Eigen::MatrixXd train;         // n x p
  std::vector<int> labels;       // class slots, 0..classes-1
};

// One binary subproblem of the one-vs-one ensemble: f(x) > 0 votes `first`.
struct SvmPair {
  int first = 0;
  int second = 1;
  std::vector<int> sv;           // rows of the support matrix
  Eigen::VectorXd coef;          // alpha_i * y_i
  double bias = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct SvmParams {
  Eigen::MatrixXd support;       // union of all pairs' support vectors
  std::vector<SvmPair> pairs;
};

// Classifier over already-projected inputs. `classes` lists the original
// labels seen in training; internal slots index into it.
struct Classifier {
  ClassifierKind kind = ClassifierKind::LDA;
  Hyper hyper;
  std::vector<int> classes;
  Eigen::Index dim = 0;
  std::variant<LdaParams, KnnParams, SvmParams> params;

  int predict(const Eigen::VectorXd& z) const;  // throws DimensionMismatch
  bool converged() const;
};

Classifier train_classifier(ClassifierKind kind, const Eigen::MatrixXd& Z,
                            std::span<const int> labels, const Hyper& hyper = {});

// Binary soft-margin SVM solved by SMO with second-order working-set
// selection on a precomputed kernel matrix. Labels are +1/-1; `sv` indexes
// rows of K.
SvmPair solve_svm_dual(const Eigen::MatrixXd& K, std::span<const int> y, const Hyper& hyper);
// RBF kernel matrix between the rows of A and B.
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double kernel_scale);
// Binary RBF SVM on X; `sv` indexes rows of X.
SvmPair train_svm_binary(const Eigen::MatrixXd& X, std::span<const int> y, const Hyper& hyper);
double svm_decision(const SvmPair& pair, const Eigen::MatrixXd& support, const Eigen::VectorXd& z,
                    double kernel_scale);

// What produced the inputs of a model; needed to replay raw signals.
struct PipelineInfo {
  FeatureMethod method = FeatureMethod::SNTDF;
  std::uint32_t n_channels = 4;
  FilterSpec filter;
  FeatureOptions features;
};

struct TrainedModel {
  PipelineInfo pipeline;
  Projection projection;
  Classifier classifier;

  ClassifierKind kind() const { return classifier.kind; }
};

// Fits SRDA on raw feature rows, then the classifier on the projection.
TrainedModel train(ClassifierKind kind, const Eigen::MatrixXd& X, std::span<const int> labels,
                   int n_classes, const Hyper& hyper = {}, const PipelineInfo& info = {});

int predict(const TrainedModel& m, const Eigen::VectorXd& x);
std::vector<int> predict_rows(const TrainedModel& m, const Eigen::MatrixXd& X);

}  // namespace emgo
