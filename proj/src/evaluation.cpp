#include "emgo/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <map>
#include <set>

#include "emgo/error.hpp"
#include "emgo/rng.hpp"

namespace emgo {

std::string_view to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::CaseA: return "caseA";
    case SchemeKind::CaseB: return "caseB";
    case SchemeKind::CaseC: return "caseC";
  }
  return "?";
}

std::optional<SchemeKind> parse_scheme(std::string_view s) {
  std::string l;
  for (char c : s)
    if (c != '-' && c != '_') l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (l == "casea" || l == "a") return SchemeKind::CaseA;
  if (l == "caseb" || l == "b") return SchemeKind::CaseB;
  if (l == "casec" || l == "c") return SchemeKind::CaseC;
  return std::nullopt;
}

bool TrainingScheme::trains_on(Orientation o) const {
  return std::find(train_orientations.begin(), train_orientations.end(), o) !=
         train_orientations.end();
}

TrainingScheme make_scheme(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::CaseA: return {kind, {Orientation::Rest}, false};
    case SchemeKind::CaseB: return {kind, {Orientation::Pronation, Orientation::Supination}, false};
    case SchemeKind::CaseC: return {kind, {Orientation::Rest}, true};
  }
  throw Error(ErrorCode::InvalidConfig, "unknown scheme");
}

FoldPlan plan_folds(std::span<const WindowRef> windows, const TrainingScheme& scheme, int k,
                    std::uint64_t seed, FoldGranularity granularity) {
  if (k < 2) throw Error(ErrorCode::InvalidConfig, "k must be at least 2");
  FoldPlan plan;
  plan.k = k;
  plan.folds.resize(static_cast<std::size_t>(k));

  // Stratum (gesture, orientation) -> trial -> window indices.
  using Stratum = std::pair<Gesture, Orientation>;
  std::map<Stratum, std::map<TrialKey, std::vector<std::size_t>>> strata;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& key = windows[i].key;
    strata[{key.gesture, key.orientation}][key].push_back(i);
  }

  if (granularity == FoldGranularity::Trial) {
    for (const auto& [stratum, trials] : strata) {
      if (trials.size() < static_cast<std::size_t>(k)) {
        granularity = FoldGranularity::Window;
        plan.warnings.push_back("InsufficientTrials: " + std::string(to_string(stratum.first)) + "/" +
                                std::string(to_string(stratum.second)) + " has " +
                                std::to_string(trials.size()) + " trials for k=" + std::to_string(k) +
                                "; falling back to window folds, adjacent windows may leak");
        break;
      }
    }
  }
  plan.granularity = granularity;

  std::vector<int> fold_of(windows.size(), 0);
  for (const auto& [stratum, trials] : strata) {
    std::vector<std::vector<std::size_t>> units;
    if (granularity == FoldGranularity::Trial) {
      for (const auto& [key, idx] : trials) units.push_back(idx);
    } else {
      for (const auto& [key, idx] : trials)
        for (std::size_t i : idx) units.push_back({i});
    }
    Xoshiro256 rng(mix_key({seed, static_cast<std::uint64_t>(index_of(stratum.first)),
                            static_cast<std::uint64_t>(index_of(stratum.second))}));
    for (std::size_t i = units.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.next() % i);
      std::swap(units[i - 1], units[j]);
    }
    for (std::size_t u = 0; u < units.size(); ++u)
      for (std::size_t i : units[u]) fold_of[i] = static_cast<int>(u % static_cast<std::size_t>(k));
  }

  for (std::size_t i = 0; i < windows.size(); ++i) {
    const bool trainable = scheme.trains_on(windows[i].key.orientation);
    for (int f = 0; f < k; ++f) {
      if (fold_of[i] == f)
        plan.folds[f].test.push_back(i);
      else if (trainable)
        plan.folds[f].train.push_back(i);
    }
  }
  return plan;
}

LeakageAudit audit_plan(const FoldPlan& plan, std::span<const WindowRef> windows,
                        const TrainingScheme& scheme) {
  LeakageAudit a;
  auto fail = [&](std::string msg) {
    ++a.violations;
    if (a.details.size() < 50) a.details.push_back(std::move(msg));
  };
  std::vector<int> tested(windows.size(), 0);
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    std::set<WindowRef> test_refs;
    std::set<TrialKey> test_trials;
    for (std::size_t i : fold.test) {
      if (i >= windows.size()) {
        fail("fold " + std::to_string(f) + ": test index out of range");
        continue;
      }
      ++tested[i];
      test_refs.insert(windows[i]);
      test_trials.insert(windows[i].key);
    }
    for (std::size_t i : fold.train) {
      if (i >= windows.size()) {
        fail("fold " + std::to_string(f) + ": train index out of range");
        continue;
      }
      const auto& ref = windows[i];
      if (!scheme.trains_on(ref.key.orientation))
        fail("fold " + std::to_string(f) + ": " + to_string(ref.key) + " trains on an untrained orientation");
      if (test_refs.count(ref))
        fail("fold " + std::to_string(f) + ": window " + to_string(ref.key) + "#" +
             std::to_string(ref.window) + " in both train and test");
      else if (plan.granularity == FoldGranularity::Trial && test_trials.count(ref.key))
        fail("fold " + std::to_string(f) + ": trial " + to_string(ref.key) + " straddles train and test");
    }
  }
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (tested[i] != 1)
      fail(to_string(windows[i].key) + "#" + std::to_string(windows[i].window) + " tested " +
           std::to_string(tested[i]) + " times");
  return a;
}

namespace {

Window slice_window(const Window& w, std::size_t first, std::size_t count) {
  Window out;
  out.key = w.key;
  out.index = w.index;
  out.n_channels = count;
  out.length = w.length;
  out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(first * w.length),
                     w.samples.begin() + static_cast<std::ptrdiff_t>((first + count) * w.length));
  return out;
}

SubjectWindows select_position(const SubjectWindows& all, std::optional<ElectrodePosition> pos) {
  if (!pos) return all;
  SubjectWindows out;
  out.subject = all.subject;
  out.refs = all.refs;
  out.warnings = all.warnings;
  out.windows.reserve(all.windows.size());
  for (const auto& w : all.windows) {
    if (w.n_channels != kFullChannels)
      throw Error(ErrorCode::WrongLayout, "electrode position needs 8-channel recordings");
    out.windows.push_back(slice_window(w, channel_offset(*pos), kChannelsPerPosition));
  }
  return out;
}

}  // namespace

SubjectWindows windowize(const Dataset& ds, int subject, std::optional<ElectrodePosition> position,
                         const PipelineOptions& opt) {
  std::vector<const Recording*> recs;
  for (const auto& r : ds.recordings)
    if (r.key.subject == subject) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(), [](const Recording* a, const Recording* b) { return a->key < b->key; });

  std::vector<std::vector<Window>> per(recs.size());
  std::vector<std::vector<std::string>> warn(recs.size());
  std::vector<std::exception_ptr> errors(recs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(recs.size()); ++i) {
    try {
      const Recording& rec = *recs[i];
      const Segment seg = detect_active_segment(rec, opt.segment);
      for (const auto& w : seg.warnings) warn[i].push_back(to_string(rec.key) + ": " + w);
      per[i] = make_windows(preprocess_serial(rec, opt.filter), seg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoActivityDetected || e.code() == ErrorCode::ActiveTooShort)
        warn[i].push_back(to_string(recs[i]->key) + " skipped: " + e.what());
      else
        errors[i] = std::current_exception();
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  SubjectWindows all;
  all.subject = subject;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (auto& w : per[i]) {
      all.refs.push_back({w.key, w.index});
      all.windows.push_back(std::move(w));
    }
    for (auto& s : warn[i]) all.warnings.push_back(std::move(s));
  }
  return select_position(all, position);
}

FeatureMatrix featurize(const SubjectWindows& w, FeatureMethod method, const FeatureOptions& opt) {
  FeatureMatrix fm;
  fm.refs = w.refs;
  const auto vecs = extract_batch(method, w.windows, opt);
  const std::size_t d = vecs.empty() ? 0 : vecs.front().values.size();
  fm.X.resize(static_cast<Eigen::Index>(vecs.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j)
      fm.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vecs[i].values[j];
    fm.labels.push_back(index_of(w.windows[i].key.gesture));
    fm.flags |= vecs[i].flags;
  }
  return fm;
}

FitPredict pipeline_fit_predict(ClassifierKind kind, const Hyper& hyper) {
  return [kind, hyper](const Eigen::MatrixXd& train_x, std::span<const int> train_y,
                       const Eigen::MatrixXd& test_x) {
    const TrainedModel m = train(kind, train_x, train_y, kNumGestures, hyper);
    return predict_rows(m, test_x);
  };
}

ConfusionMatrix run_fold(const FeatureMatrix& fm, const Fold& fold, const FitPredict& fit_predict,
                         int n_classes) {
  Eigen::MatrixXd train_x(static_cast<Eigen::Index>(fold.train.size()), fm.X.cols());
  std::vector<int> train_y;
  train_y.reserve(fold.train.size());
  for (std::size_t r = 0; r < fold.train.size(); ++r) {
    train_x.row(static_cast<Eigen::Index>(r)) = fm.X.row(static_cast<Eigen::Index>(fold.train[r]));
    train_y.push_back(fm.labels[fold.train[r]]);
  }
  Eigen::MatrixXd test_x(static_cast<Eigen::Index>(fold.test.size()), fm.X.cols());
  for (std::size_t r = 0; r < fold.test.size(); ++r)
    test_x.row(static_cast<Eigen::Index>(r)) = fm.X.row(static_cast<Eigen::Index>(fold.test[r]));

  const std::vector<int> pred = fit_predict(train_x, train_y, test_x);
  if (pred.size() != fold.test.size())
    throw Error(ErrorCode::DimensionMismatch, "prediction count differs from test count");
  ConfusionMatrix cm(n_classes);
  for (std::size_t r = 0; r < fold.test.size(); ++r) cm.add(fm.labels[fold.test[r]], pred[r]);
  return cm;
}

namespace {

std::optional<ElectrodePosition> effective_position(SchemeKind s,
                                                    std::optional<ElectrodePosition> pos) {
  return s == SchemeKind::CaseC ? std::nullopt : pos;
}

CellResult run_cell(const CellKey& key, const FeatureMatrix& fm, const SubjectWindows& w,
                    const RunOptions& opt) {
  const TrainingScheme scheme = make_scheme(key.scheme);
  if (scheme.both_positions && !w.windows.empty() && w.windows.front().n_channels != kFullChannels)
    throw Error(ErrorCode::WrongLayout, "caseC needs both electrode rings");
  CellResult cell;
  cell.key = key;
  cell.warnings = w.warnings;
  const FoldPlan plan = plan_folds(fm.refs, scheme, opt.k, opt.seed, opt.granularity);
  cell.warnings.insert(cell.warnings.end(), plan.warnings.begin(), plan.warnings.end());
  const LeakageAudit audit = audit_plan(plan, fm.refs, scheme);
  cell.leakage_violations = audit.violations;
  cell.warnings.insert(cell.warnings.end(), audit.details.begin(), audit.details.end());
  const FitPredict fp = pipeline_fit_predict(key.classifier, opt.hyper);
  for (const auto& fold : plan.folds) {
    cell.confusions.push_back(run_fold(fm, fold, fp));
    cell.folds.push_back(metrics(cell.confusions.back()));
  }
  return cell;
}

}  // namespace

std::vector<CellResult> run_scheme(const Dataset& ds, SchemeKind scheme, FeatureMethod method,
                                   ClassifierKind classifier,
                                   std::optional<ElectrodePosition> position, const RunOptions& opt) {
  GridSpec g;
  g.schemes = {scheme};
  if (position) g.positions = {*position};
  g.methods = {method};
  g.classifiers = {classifier};
  return run_grid(ds, g, opt);
}

std::vector<CellResult> run_grid(const Dataset& ds, const GridSpec& grid, const RunOptions& opt) {
  // Channel selections in output order: each listed position for single-ring
  // schemes, or all channels when no position is given / for caseC.
  struct Group {
    SchemeKind scheme;
    std::optional<ElectrodePosition> position;
  };
  std::vector<Group> groups;
  for (SchemeKind s : grid.schemes) {
    if (s == SchemeKind::CaseC || grid.positions.empty())
      groups.push_back({s, effective_position(s, std::nullopt)});
    else
      for (ElectrodePosition p : grid.positions) groups.push_back({s, p});
  }

  const std::vector<int> subjects = ds.subjects();
  const std::size_t per_subject = groups.size() * grid.methods.size() * grid.classifiers.size();
  std::vector<CellResult> out(per_subject * subjects.size());

  for (std::size_t si = 0; si < subjects.size(); ++si) {
    const SubjectWindows all = windowize(ds, subjects[si], std::nullopt, opt.pipeline);

    std::vector<std::optional<ElectrodePosition>> selections;
    for (const auto& g : groups)
      if (std::find(selections.begin(), selections.end(), g.position) == selections.end())
        selections.push_back(g.position);
    std::map<std::optional<ElectrodePosition>, SubjectWindows> windows;
    for (const auto& sel : selections) windows.emplace(sel, select_position(all, sel));

    std::map<std::pair<std::optional<ElectrodePosition>, FeatureMethod>, FeatureMatrix> features;
    for (const auto& sel : selections)
      for (FeatureMethod m : grid.methods)
        features.emplace(std::make_pair(sel, m), featurize(windows.at(sel), m, opt.pipeline.features));

    std::vector<CellKey> keys;
    for (const auto& g : groups)
      for (FeatureMethod m : grid.methods)
        for (ClassifierKind c : grid.classifiers) keys.push_back({g.scheme, g.position, m, c, subjects[si]});

    std::vector<CellResult> cells(keys.size());
    std::vector<std::exception_ptr> errors(keys.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(keys.size()); ++i) {
      try {
        const auto& key = keys[i];
        cells[i] = run_cell(key, features.at({key.position, key.method}), windows.at(key.position), opt);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    // Output order: group, method, classifier, subject.
    for (std::size_t i = 0; i < keys.size(); ++i) out[i * subjects.size() + si] = std::move(cells[i]);
  }
  return out;
}

}  // namespace emgo
