#pragma once

#include "emgo/classifiers.hpp"
#include "emgo/evaluation.hpp"
#include "emgo/synth.hpp"

namespace testing {

inline const emgo::Dataset& synth_subject() {
  static const emgo::Dataset ds = [] {
    emgo::SynthConfig cfg = emgo::default_synth_config();
    cfg.n_subjects = 1;
    return emgo::generate_dataset(cfg);
  }();
  return ds;
}

// Forearm model trained on every rest-orientation window of subject 1.
inline emgo::TrainedModel forearm_model(emgo::FeatureMethod method, emgo::ClassifierKind kind) {
  using namespace emgo;
  const SubjectWindows w = windowize(synth_subject(), 1, ElectrodePosition::Forearm, {});
  const FeatureMatrix fm = featurize(w, method, {});
  std::vector<Eigen::Index> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < fm.refs.size(); ++i)
    if (fm.refs[i].key.orientation == Orientation::Rest) {
      rows.push_back(static_cast<Eigen::Index>(i));
      labels.push_back(fm.labels[i]);
    }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), fm.X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) X.row(static_cast<Eigen::Index>(r)) = fm.X.row(rows[r]);
  PipelineInfo info;
  info.method = method;
  info.n_channels = 4;
  return train(kind, X, labels, kNumGestures, {}, info);
}

}  // namespace testing
