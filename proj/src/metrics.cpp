#include "emgo/metrics.hpp"

#include <cmath>

#include "emgo/error.hpp"

namespace emgo {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  if (o.n_ != n_) throw Error(ErrorCode::DimensionMismatch, "confusion matrices differ in size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
  return *this;
}

ClassCounts one_vs_rest(const ConfusionMatrix& cm, int cls) {
  ClassCounts c;
  const std::uint64_t total = cm.total();
  std::uint64_t row = 0, col = 0;
  for (int j = 0; j < cm.classes(); ++j) {
    row += cm.at(cls, j);
    col += cm.at(j, cls);
  }
  c.tp = cm.at(cls, cls);
  c.fn = row - c.tp;
  c.fp = col - c.tp;
  c.tn = total - c.tp - c.fn - c.fp;
  return c;
}

namespace {
double ratio(double num, double den, bool* flag) {
  if (den == 0.0) {
    if (flag) *flag = true;
    return 0.0;
  }
  return num / den;
}
}  // namespace

ClassMetrics binary_metrics(const ClassCounts& c, bool* flag) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  ClassMetrics m;
  m.accuracy = ratio(tp + tn, tp + tn + fp + fn, flag);
  m.sensitivity = ratio(tp, tp + fn, flag);
  m.specificity = ratio(tn, tn + fp, flag);
  m.precision = ratio(tp, tp + fp, flag);
  m.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn, flag);
  m.mcc = ratio(tp * tn - fp * fn, std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)), flag);
  return m;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no entries");
  MetricsReport r;
  const int k = cm.classes();
  for (int c = 0; c < k; ++c) {
    const ClassMetrics m = binary_metrics(one_vs_rest(cm, c), &r.zero_denominator);
    r.per_class.push_back(m);
    r.accuracy += m.accuracy;
    r.sensitivity += m.sensitivity;
    r.specificity += m.specificity;
    r.precision += m.precision;
    r.f1 += m.f1;
    r.mcc += m.mcc;
  }
  r.accuracy /= k;
  r.sensitivity /= k;
  r.specificity /= k;
  r.precision /= k;
  r.f1 /= k;
  r.mcc /= k;
  return r;
}

MetricsSummary summarize(std::span<const MetricsReport> reports) {
  std::vector<double> a, se, sp, pr, f1, mcc;
  for (const auto& r : reports) {
    a.push_back(r.accuracy);
    se.push_back(r.sensitivity);
    sp.push_back(r.specificity);
    pr.push_back(r.precision);
    f1.push_back(r.f1);
    mcc.push_back(r.mcc);
  }
  return {mean_std(a), mean_std(se), mean_std(sp), mean_std(pr), mean_std(f1), mean_std(mcc)};
}

}  // namespace emgo
