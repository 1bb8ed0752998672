#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "emgo/quality.hpp"
#include "emgo/types.hpp"

namespace emgo {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = kNumGestures)
      : n_(classes), counts_(static_cast<std::size_t>(classes) * classes, 0) {}

  void add(int truth, int predicted, std::uint64_t count = 1) {
    counts_[static_cast<std::size_t>(truth) * n_ + predicted] += count;
  }
  std::uint64_t at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * n_ + predicted];
  }
  int classes() const { return n_; }
  std::uint64_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);

 private:
  int n_;
  std::vector<std::uint64_t> counts_;
};

struct ClassCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

struct ClassMetrics {
  double accuracy = 0, sensitivity = 0, specificity = 0, precision = 0, f1 = 0, mcc = 0;
};

struct MetricsReport {
  double accuracy = 0, sensitivity = 0, specificity = 0, precision = 0, f1 = 0, mcc = 0;
  std::vector<ClassMetrics> per_class;
  bool zero_denominator = false;  // some per-class ratio was 0/0 and set to 0
};

ClassCounts one_vs_rest(const ConfusionMatrix& cm, int cls);
// Binary accuracy, sensitivity, specificity, precision, F1 and MCC; a
// zero denominator yields 0 and sets `*flag`.
ClassMetrics binary_metrics(const ClassCounts& c, bool* flag = nullptr);
// Macro average of the one-vs-rest metrics over all classes. Throws EmptyMatrix.
MetricsReport metrics(const ConfusionMatrix& cm);

struct MetricsSummary {
  MeanStd accuracy, sensitivity, specificity, precision, f1, mcc;
};
MetricsSummary summarize(std::span<const MetricsReport> reports);

}  // namespace emgo
