#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emgo/classifiers.hpp"
#include "emgo/dataset.hpp"
#include "emgo/features.hpp"
#include "emgo/filter.hpp"
#include "emgo/metrics.hpp"
#include "emgo/segment.hpp"

namespace emgo {

enum class SchemeKind : std::uint8_t { CaseA, CaseB, CaseC };

std::string_view to_string(SchemeKind s);
std::optional<SchemeKind> parse_scheme(std::string_view s);

struct TrainingScheme {
  SchemeKind kind = SchemeKind::CaseA;
  std::vector<Orientation> train_orientations;
  bool both_positions = false;  // features over both rings (8 channels)

  bool trains_on(Orientation o) const;
};

TrainingScheme make_scheme(SchemeKind kind);

enum class FoldGranularity { Trial, Window };

struct WindowRef {
  TrialKey key;
  std::size_t window = 0;
  auto operator<=>(const WindowRef&) const = default;
};

struct Fold {
  std::vector<std::size_t> train;  // indices into the planned window list
  std::vector<std::size_t> test;
};

struct FoldPlan {
  int k = 5;
  FoldGranularity granularity = FoldGranularity::Trial;
  std::vector<Fold> folds;
  std::vector<std::string> warnings;
};

// Stratified k-fold over (gesture, orientation) for one subject's windows.
// Training-orientation windows are split so each is tested once and trained
// on in the other folds; other orientations are only ever tested, 1/k per
// fold. Falls back to window granularity (with a warning) when a stratum
// has fewer than k trials.
FoldPlan plan_folds(std::span<const WindowRef> windows, const TrainingScheme& scheme, int k,
                    std::uint64_t seed, FoldGranularity granularity = FoldGranularity::Trial);

struct LeakageAudit {
  std::size_t violations = 0;
  std::vector<std::string> details;
};

// Checks every FoldPlan invariant against the window list.
LeakageAudit audit_plan(const FoldPlan& plan, std::span<const WindowRef> windows,
                        const TrainingScheme& scheme);

struct PipelineOptions {
  FilterSpec filter;
  SegmentOptions segment;
  FeatureOptions features;
};

// Filtered, segmented windows of one subject for one channel selection.
struct SubjectWindows {
  int subject = 0;
  std::vector<Window> windows;
  std::vector<WindowRef> refs;
  std::vector<std::string> warnings;
};

// `position` empty selects all channels of the recording.
SubjectWindows windowize(const Dataset& ds, int subject, std::optional<ElectrodePosition> position,
                         const PipelineOptions& opt);

struct FeatureMatrix {
  std::vector<WindowRef> refs;
  Eigen::MatrixXd X;
  std::vector<int> labels;
  unsigned flags = 0;
};

FeatureMatrix featurize(const SubjectWindows& w, FeatureMethod method, const FeatureOptions& opt);

// Fits on the given training rows, predicts the test rows. Never sees test labels.
using FitPredict = std::function<std::vector<int>(
    const Eigen::MatrixXd& train_x, std::span<const int> train_y, const Eigen::MatrixXd& test_x)>;

FitPredict pipeline_fit_predict(ClassifierKind kind, const Hyper& hyper);

ConfusionMatrix run_fold(const FeatureMatrix& fm, const Fold& fold, const FitPredict& fit_predict,
                         int n_classes = kNumGestures);

struct CellKey {
  SchemeKind scheme = SchemeKind::CaseA;
  std::optional<ElectrodePosition> position;  // empty for both rings
  FeatureMethod method = FeatureMethod::SNTDF;
  ClassifierKind classifier = ClassifierKind::LDA;
  int subject = 0;
};

struct CellResult {
  CellKey key;
  std::vector<MetricsReport> folds;
  std::vector<ConfusionMatrix> confusions;
  std::size_t leakage_violations = 0;
  std::vector<std::string> warnings;

  MetricsSummary summary() const { return summarize(folds); }
};

struct RunOptions {
  int k = 5;
  std::uint64_t seed = 42;
  FoldGranularity granularity = FoldGranularity::Trial;
  Hyper hyper;
  PipelineOptions pipeline;
};

// One (scheme, position, method, classifier) cell for every subject.
std::vector<CellResult> run_scheme(const Dataset& ds, SchemeKind scheme, FeatureMethod method,
                                   ClassifierKind classifier,
                                   std::optional<ElectrodePosition> position,
                                   const RunOptions& opt = {});

struct GridSpec {
  std::vector<SchemeKind> schemes;
  std::vector<ElectrodePosition> positions;  // ignored by CASE-C
  std::vector<FeatureMethod> methods;
  std::vector<ClassifierKind> classifiers;
};

// Full grid with shared preprocessing and feature caches. Results are
// ordered scheme, position, method, classifier, subject regardless of the
// number of threads.
std::vector<CellResult> run_grid(const Dataset& ds, const GridSpec& grid, const RunOptions& opt);

}  // namespace emgo
