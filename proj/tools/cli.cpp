#include "cli.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "emgo/dataset.hpp"
#include "emgo/error.hpp"
#include "emgo/evaluation.hpp"
#include "emgo/model_io.hpp"
#include "emgo/quality.hpp"
#include "emgo/report.hpp"
#include "emgo/segment.hpp"
#include "emgo/synth.hpp"

namespace emgo::cli {

namespace fs = std::filesystem;

std::vector<std::pair<std::string, std::string>> parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(lineno) + ": empty key");
    for (char& c : key)
      if (c == '.' || c == '_') c = '-';
    out.emplace_back(key, value);
  }
  return out;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void usage_error(const std::string& msg) { throw CLI::ValidationError(msg); }

std::vector<FeatureMethod> methods_from(const std::string& s) {
  if (lower(s) == "all") return {kAllMethods.begin(), kAllMethods.end()};
  std::vector<FeatureMethod> out;
  for (const auto& m : split_list(s)) {
    const auto p = parse_method(m);
    if (!p) usage_error("unknown feature method '" + m + "'");
    out.push_back(*p);
  }
  return out;
}

std::vector<ClassifierKind> classifiers_from(const std::string& s) {
  if (lower(s) == "all") return {kAllClassifiers.begin(), kAllClassifiers.end()};
  std::vector<ClassifierKind> out;
  for (const auto& m : split_list(s)) {
    const auto p = parse_classifier(m);
    if (!p) usage_error("unknown classifier '" + m + "'");
    out.push_back(*p);
  }
  return out;
}

std::vector<SchemeKind> schemes_from(const std::string& s) {
  if (lower(s) == "all") return {SchemeKind::CaseA, SchemeKind::CaseB, SchemeKind::CaseC};
  std::vector<SchemeKind> out;
  for (const auto& m : split_list(s)) {
    const auto p = parse_scheme(m);
    if (!p) usage_error("unknown scheme '" + m + "'");
    out.push_back(*p);
  }
  return out;
}

// Empty optional selects both rings.
std::optional<ElectrodePosition> position_from(const std::string& s) {
  if (lower(s) == "both") return std::nullopt;
  const auto p = parse_position(s);
  if (!p) usage_error("unknown electrode position '" + s + "'");
  return p;
}

std::vector<ElectrodePosition> positions_from(const std::string& s) {
  if (lower(s) == "all") return {ElectrodePosition::Elbow, ElectrodePosition::Forearm};
  std::vector<ElectrodePosition> out;
  for (const auto& m : split_list(s)) {
    const auto p = parse_position(m);
    if (!p) usage_error("unknown electrode position '" + m + "'");
    out.push_back(*p);
  }
  return out;
}

std::optional<TrialKey> parse_trial_key(const std::string& s) {
  const auto parts = [&] {
    std::vector<std::string> v;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, '/')) v.push_back(cur);
    return v;
  }();
  if (parts.size() != 4 || parts[0].size() < 2 || parts[3].size() < 2) return std::nullopt;
  if (std::toupper(static_cast<unsigned char>(parts[0][0])) != 'S' ||
      std::tolower(static_cast<unsigned char>(parts[3][0])) != 't')
    return std::nullopt;
  const auto g = parse_gesture(parts[1]);
  const auto o = parse_orientation(parts[2]);
  if (!g || !o) return std::nullopt;
  try {
    return TrialKey{std::stoi(parts[0].substr(1)), *g, *o, std::stoi(parts[3].substr(1))};
  } catch (const std::logic_error&) {
    return std::nullopt;
  }
}

struct FilterFlags {
  FilterSpec spec;
  void add(CLI::App* app) {
    app->add_option("--filter-band-low-hz", spec.band_low, "Band-pass lower edge");
    app->add_option("--filter-band-high-hz", spec.band_high, "Band-pass upper edge");
    app->add_option("--filter-band-order", spec.band_order, "Order of each band-pass half");
    app->add_option("--filter-notch-hz", spec.notch_freq, "Notch centre frequency");
    app->add_option("--filter-notch-bw-hz", spec.notch_bandwidth, "Notch -3 dB bandwidth");
  }
};

Dataset load(const std::string& path, std::ostream& err) {
  ValidationReport report;
  Dataset ds = load_dataset(path, &report);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  for (const auto& v : report.violations) err << "warning: " << to_string(v.key) << ": " << v.message << "\n";
  return ds;
}

// Windows of the selected subjects, orientations and ring, in key order.
std::vector<Window> collect_windows(const Dataset& ds, int subject, std::optional<ElectrodePosition> pos,
                                    const std::vector<Orientation>& orientations,
                                    const PipelineOptions& opt, std::ostream& err) {
  std::vector<Window> out;
  for (int s : ds.subjects()) {
    if (subject != 0 && s != subject) continue;
    SubjectWindows sw = windowize(ds, s, pos, opt);
    for (const auto& w : sw.warnings) err << "warning: " << w << "\n";
    for (auto& w : sw.windows)
      if (std::find(orientations.begin(), orientations.end(), w.key.orientation) != orientations.end())
        out.push_back(std::move(w));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "no windows match the selection");
  return out;
}

std::optional<ElectrodePosition> dataset_position(const Dataset& ds, std::optional<ElectrodePosition> pos) {
  // Single-ring datasets already hold just that ring.
  return ds.layout == Layout::Full8 ? pos : std::nullopt;
}

Eigen::MatrixXd to_matrix(const std::vector<FeatureVector>& v) {
  const std::size_t d = v.empty() ? 0 : v.front().values.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i].values[j];
  return X;
}

ByteSource tcp_source(const std::string& address, std::ostream& err, int& client_fd, int& listen_fd) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) usage_error("--listen expects host:port");
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    throw Error(ErrorCode::IoError, "cannot resolve " + address);
  listen_fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int yes = 1;
  if (listen_fd >= 0) ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  const bool ok = listen_fd >= 0 && ::bind(listen_fd, res->ai_addr, res->ai_addrlen) == 0 &&
                  ::listen(listen_fd, 1) == 0;
  ::freeaddrinfo(res);
  if (!ok) throw Error(ErrorCode::IoError, "cannot listen on " + address + ": " + std::strerror(errno));
  err << "listening on " << address << "\n";
  client_fd = ::accept(listen_fd, nullptr, nullptr);
  if (client_fd < 0) throw Error(ErrorCode::IoError, std::string("accept failed: ") + std::strerror(errno));
  const int fd = client_fd;
  return [fd](std::span<std::uint8_t> buf) -> std::size_t {
    for (;;) {
      const ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno != EINTR) return 0;
    }
  };
}

std::string latency_csv(const LatencyReport& r) {
  std::ostringstream o;
  o << "windows,min_ms,mean_ms,p95_ms,p99_ms,max_ms,budget_ms,processing_budget_ms,violations,dropped\n"
    << r.windows << "," << r.min_ms << "," << r.mean_ms << "," << r.p95_ms << "," << r.p99_ms << ","
    << r.max_ms << "," << LatencyReport::kBudgetMs << "," << LatencyReport::kProcessingBudgetMs << ","
    << r.violations << "," << r.dropped << "\n";
  return o.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err,
            const ByteSource& stdin_source) {
  CLI::App app{"Orientation-invariant EMG gesture recognition toolkit", "emgo"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  std::string config_path;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_out, synth_profile;
  int synth_subjects = 5;
  std::uint64_t synth_seed = 42;
  std::optional<double> synth_theta, synth_noise, synth_jitter;
  synth->add_option("--out", synth_out, "Dataset directory")->required();
  synth->add_option("--subjects", synth_subjects, "Number of subjects")->check(CLI::Range(1, 1000));
  synth->add_option("--seed", synth_seed, "Noise seed");
  synth->add_option("--profile", synth_profile, "JSON profile overriding the built-in one")->check(CLI::ExistingFile);
  synth->add_option("--theta", synth_theta, "Neighbour leakage for pronation and supination");
  synth->add_option("--noise-rms", synth_noise, "White noise RMS");
  synth->add_option("--subject-jitter", synth_jitter, "Per-subject amplitude jitter fraction");

  // quality
  auto* quality = app.add_subcommand("quality", "Signal quality indices per gesture");
  std::string q_data, q_out = ".";
  quality->add_option("--data", q_data, "Dataset directory")->required();
  quality->add_option("--out", q_out, "Output directory");

  // features
  auto* features = app.add_subcommand("features", "Extract one feature family to CSV");
  std::string f_data, f_method, f_position = "forearm", f_out;
  int f_subject = 0;
  FilterFlags f_filter;
  features->add_option("--data,--in", f_data, "Dataset directory")->required();
  features->add_option("--method", f_method, "Feature method or all")->required();
  features->add_option("--position", f_position, "elbow, forearm or both");
  features->add_option("--subject", f_subject, "Subject number, 0 for all");
  features->add_option("--out", f_out, "Output CSV file; a directory when --method all");
  f_filter.add(features);

  // train
  auto* trainc = app.add_subcommand("train", "Fit SRDA and a classifier, write a model file");
  std::string t_data, t_method, t_classifier, t_position = "forearm", t_orient = "rest", t_out = "model.bin";
  int t_subject = 0;
  Hyper t_hyper;
  FilterFlags t_filter;
  trainc->add_option("--data", t_data, "Dataset directory")->required();
  trainc->add_option("--method", t_method, "Feature method")->required();
  trainc->add_option("--classifier", t_classifier, "lda, svm or knn")->required();
  trainc->add_option("--position", t_position, "elbow, forearm or both");
  trainc->add_option("--orientations", t_orient, "Comma list of training orientations");
  trainc->add_option("--subject", t_subject, "Subject number, 0 for all");
  trainc->add_option("--srda-alpha", t_hyper.srda_alpha, "SRDA ridge parameter");
  trainc->add_option("--out", t_out, "Model file");
  t_filter.add(trainc);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Orientation-stratified cross-validation");
  std::string e_data, e_scheme = "caseA", e_method = "all", e_classifier = "all", e_position = "all",
                      e_out = ".", e_gran = "trial", e_model;
  int e_k = 5, e_subject = 0;
  std::uint64_t e_seed = 42;
  Hyper e_hyper;
  FilterFlags e_filter;
  evaluate->add_option("--data", e_data, "Dataset directory")->required();
  evaluate->add_option("--scheme", e_scheme, "caseA, caseB, caseC, a comma list or all");
  evaluate->add_option("--method", e_method, "Feature method, comma list or all");
  evaluate->add_option("--classifier", e_classifier, "lda, svm, knn, comma list or all");
  evaluate->add_option("--position", e_position, "elbow, forearm, comma list or all");
  evaluate->add_option("--k", e_k, "Number of folds")->check(CLI::Range(2, 100));
  evaluate->add_option("--seed", e_seed, "Fold assignment seed");
  evaluate->add_option("--granularity", e_gran, "trial or window");
  evaluate->add_option("--srda-alpha", e_hyper.srda_alpha, "SRDA ridge parameter");
  evaluate->add_option("--model", e_model, "Score a trained model on the data instead of cross-validating")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--subject", e_subject, "Subject for --model scoring, 0 for all");
  evaluate->add_option("--out", e_out, "Output directory");
  e_filter.add(evaluate);

  // stats
  auto* stats = app.add_subcommand("stats", "ANOVA of F1 over result CSVs");
  std::vector<std::string> s_results;
  int s_m = 0;
  std::string s_out = ".";
  stats->add_option("--results", s_results, "results.csv files")->required()->check(CLI::ExistingFile)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  stats->add_option("--bonferroni", s_m, "Number of comparisons, 0 for the factor count");
  stats->add_option("--out", s_out, "Output directory");

  // stream
  auto* stream = app.add_subcommand("stream", "Causal real-time classification of a framed sample stream");
  std::string st_model, st_listen, st_replay, st_trial, st_position = "forearm", st_policy, st_out;
  std::optional<double> st_gain;
  stream->add_option("--model", st_model, "Model file")->required()->check(CLI::ExistingFile);
  stream->add_option("--listen", st_listen, "Accept one TCP client on host:port");
  stream->add_option("--replay", st_replay, "Dataset directory to replay a trial from");
  stream->add_option("--trial", st_trial, "Trial key to replay, e.g. S1/TU/rest/t1");
  stream->add_option("--position", st_position, "Ring to replay for single-ring models");
  stream->add_option("--policy", st_policy, "Buffer overflow policy: drop or block");
  stream->add_option("--gain", st_gain, "Physical units per count");
  stream->add_option("--out", st_out, "Directory for latency.csv and decisions.csv");

  // report
  auto* report = app.add_subcommand("report", "Compare result CSVs of several schemes");
  std::vector<std::string> r_results;
  std::string r_out = ".";
  report->add_option("--results", r_results, "results.csv files")->required()->check(CLI::ExistingFile)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  report->add_option("--out", r_out, "Output directory");

  for (auto* sub : app.get_subcommands({}))
    sub->add_option("--config", config_path, "Flat key = value config file; flags win");

  std::vector<std::string> args = args_in;
  try {
    // Config values go in front of the command-line flags so the flags win.
    for (std::size_t i = 1; i + 1 < args.size(); ++i) {
      if (args[i] != "--config") continue;
      CLI::App* sub = nullptr;
      for (std::size_t j = 1; j < args.size() && !sub; ++j)
        for (auto* s : app.get_subcommands({}))
          if (s->get_name() == args[j]) sub = s;
      if (!sub) break;
      std::vector<std::string> extra;
      for (const auto& [key, value] : parse_config(read_text(args[i + 1]))) {
        if (key == "config" || !sub->get_option_no_throw("--" + key)) {
          err << "warning: config key '" << key << "' does not apply to " << sub->get_name() << "\n";
          continue;
        }
        extra.push_back("--" + key);
        extra.push_back(value);
      }
      const auto pos = std::find(args.begin() + 1, args.end(), sub->get_name());
      args.insert(pos + 1, extra.begin(), extra.end());
      break;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (synth->parsed()) {
      SynthConfig cfg = default_synth_config();
      if (!synth_profile.empty()) cfg = load_profile(synth_profile, cfg);
      cfg.seed = synth_seed;
      cfg.n_subjects = synth_subjects;
      if (synth_theta) {
        cfg.orientation_shift[index_of(Orientation::Pronation)] = *synth_theta;
        cfg.orientation_shift[index_of(Orientation::Supination)] = *synth_theta;
      }
      if (synth_noise) cfg.noise_rms = *synth_noise;
      if (synth_jitter) cfg.subject_jitter = *synth_jitter;
      cfg.validate();
      const Dataset ds = generate_dataset(cfg, synth_out);
      save_profile(cfg, fs::path(synth_out) / "profile.json");
      out << "wrote " << ds.recordings.size() << " trials to " << synth_out << "\n";
      return 0;
    }

    if (quality->parsed()) {
      const Dataset ds = load(q_data, err);
      const QualityReport q = assess_quality(ds);
      const std::string csv = format_quality_csv(q);
      write_text(fs::path(q_out) / "quality.csv", csv);
      out << csv;
      return 0;
    }

    if (features->parsed()) {
      const auto methods = methods_from(f_method);
      const Dataset ds = load(f_data, err);
      PipelineOptions opt;
      opt.filter = f_filter.spec;
      opt.filter.validate();
      const auto windows = collect_windows(ds, f_subject, dataset_position(ds, position_from(f_position)),
                                           {kAllOrientations.begin(), kAllOrientations.end()}, opt, err);
      for (FeatureMethod method : methods) {
        const auto vecs = extract_batch(method, windows, opt.features);
        std::ostringstream csv;
        csv.precision(17);
        csv << "subject,gesture,orientation,trial,window";
        for (std::size_t j = 0; j < vecs.front().values.size(); ++j) csv << ",f" << j + 1;
        csv << "\n";
        for (const auto& v : vecs) {
          csv << v.key.subject << "," << to_string(v.key.gesture) << "," << to_string(v.key.orientation) << ","
              << v.key.trial << "," << v.window_index;
          for (double x : v.values) csv << "," << x;
          csv << "\n";
        }
        const fs::path path =
            lower(f_method) == "all"
                ? fs::path(f_out.empty() ? "." : f_out) / ("features_" + std::string(to_string(method)) + ".csv")
                : fs::path(f_out.empty() ? "features.csv" : f_out);
        write_text(path, csv.str());
        out << "wrote " << vecs.size() << " " << to_string(method) << " vectors of dimension "
            << vecs.front().values.size() << " to " << path.string() << "\n";
      }
      return 0;
    }

    if (trainc->parsed()) {
      const auto method = parse_method(t_method);
      if (!method) usage_error("unknown feature method '" + t_method + "'");
      const auto kind = parse_classifier(t_classifier);
      if (!kind) usage_error("unknown classifier '" + t_classifier + "'");
      std::vector<Orientation> orients;
      for (const auto& o : split_list(t_orient)) {
        const auto p = parse_orientation(o);
        if (!p) usage_error("unknown orientation '" + o + "'");
        orients.push_back(*p);
      }
      const Dataset ds = load(t_data, err);
      PipelineOptions opt;
      opt.filter = t_filter.spec;
      opt.filter.validate();
      const auto windows = collect_windows(ds, t_subject, dataset_position(ds, position_from(t_position)),
                                           orients, opt, err);
      const auto vecs = extract_batch(*method, windows, opt.features);
      std::vector<int> labels;
      for (const auto& w : windows) labels.push_back(index_of(w.key.gesture));
      PipelineInfo info;
      info.method = *method;
      info.n_channels = static_cast<std::uint32_t>(windows.front().n_channels);
      info.filter = opt.filter;
      info.features = opt.features;
      const TrainedModel m = train(*kind, to_matrix(vecs), labels, kNumGestures, t_hyper, info);
      if (const auto* lda = std::get_if<LdaParams>(&m.classifier.params); lda && lda->singular_before_shrinkage)
        err << "warning: SingularCovariance: pooled covariance was singular before shrinkage\n";
      if (!m.classifier.converged()) err << "warning: NonConvergence: SVM pass limit reached\n";
      save_model(m, t_out);
      out << "trained " << to_string(*kind) << " on " << windows.size() << " " << to_string(*method)
          << " windows, wrote " << t_out << "\n";
      return 0;
    }

    if (evaluate->parsed()) {
      const Dataset ds = load(e_data, err);
      RunOptions opt;
      opt.k = e_k;
      opt.seed = e_seed;
      opt.hyper = e_hyper;
      opt.pipeline.filter = e_filter.spec;
      opt.pipeline.filter.validate();
      if (lower(e_gran) == "trial")
        opt.granularity = FoldGranularity::Trial;
      else if (lower(e_gran) == "window")
        opt.granularity = FoldGranularity::Window;
      else
        usage_error("granularity must be trial or window");

      if (!e_model.empty()) {
        const TrainedModel m = load_model(e_model);
        PipelineOptions po = opt.pipeline;
        po.filter = m.pipeline.filter;
        po.features = m.pipeline.features;
        std::optional<ElectrodePosition> pos;
        if (ds.layout == Layout::Full8 && m.pipeline.n_channels == kChannelsPerPosition)
          pos = positions_from(e_position == "all" ? "forearm" : e_position).front();
        std::vector<CellResult> cells;
        for (int s : ds.subjects()) {
          if (e_subject != 0 && s != e_subject) continue;
          const SubjectWindows sw = windowize(ds, s, pos, po);
          const FeatureMatrix fm = featurize(sw, m.pipeline.method, po.features);
          if (static_cast<std::uint32_t>(sw.windows.front().n_channels) != m.pipeline.n_channels)
            throw Error(ErrorCode::ChannelMismatch, "model and data channel counts differ");
          const auto pred = predict_rows(m, fm.X);
          CellResult cell;
          cell.key = {SchemeKind::CaseA, pos, m.pipeline.method, m.kind(), s};
          ConfusionMatrix cm;
          for (std::size_t i = 0; i < pred.size(); ++i) cm.add(fm.labels[i], pred[i]);
          cell.confusions.push_back(cm);
          cell.folds.push_back(metrics(cm));
          cells.push_back(std::move(cell));
        }
        auto rows = result_rows(cells);
        for (auto& r : rows) r.scheme = "model";
        write_text(fs::path(e_out) / "results.csv", format_results_csv(rows));
        write_text(fs::path(e_out) / "confusion_fold1.csv", format_confusion_csv(cells, 0));
        const std::string table = format_results_table(rows);
        write_text(fs::path(e_out) / "table.txt", table);
        out << table;
        return 0;
      }

      GridSpec grid;
      grid.schemes = schemes_from(e_scheme);
      grid.methods = methods_from(e_method);
      grid.classifiers = classifiers_from(e_classifier);
      grid.positions = positions_from(e_position);
      if (ds.layout != Layout::Full8) grid.positions.clear();
      const auto cells = run_grid(ds, grid, opt);
      std::size_t leaks = 0;
      for (const auto& c : cells) {
        leaks += c.leakage_violations;
        for (const auto& w : c.warnings) err << "warning: " << w << "\n";
      }
      const auto rows = result_rows(cells);
      write_text(fs::path(e_out) / "results.csv", format_results_csv(rows));
      for (int f = 0; f < opt.k; ++f)
        write_text(fs::path(e_out) / ("confusion_fold" + std::to_string(f + 1) + ".csv"),
                   format_confusion_csv(cells, static_cast<std::size_t>(f)));
      const std::string table = format_results_table(rows);
      write_text(fs::path(e_out) / "table.txt", table);
      out << table;
      if (leaks > 0) throw Error(ErrorCode::InvalidConfig, "fold leakage audit found " + std::to_string(leaks) + " violations");
      return 0;
    }

    if (stats->parsed()) {
      std::vector<ResultRow> rows;
      for (const auto& p : s_results) {
        auto r = parse_results_csv(read_text(p));
        rows.insert(rows.end(), r.begin(), r.end());
      }
      const std::string csv = format_anova_csv(anova_f1(rows, s_m));
      write_text(fs::path(s_out) / "anova.csv", csv);
      out << csv;
      return 0;
    }

    if (stream->parsed()) {
      const TrainedModel m = load_model(st_model);
      StreamOptions so;
      so.gain = st_gain.value_or(1.0);
      ByteSource source = stdin_source;
      std::vector<std::uint8_t> replay_bytes;
      int client_fd = -1, listen_fd = -1;
      if (!st_replay.empty()) {
        if (!st_listen.empty()) usage_error("--replay and --listen are exclusive");
        const auto key = parse_trial_key(st_trial);
        if (!key) usage_error("--trial expects a key like S1/TU/rest/t1");
        const Dataset ds = load(st_replay, err);
        const Recording* rec = ds.find(*key);
        if (!rec) throw Error(ErrorCode::InvalidConfig, "trial " + st_trial + " not in dataset");
        const Segment seg = detect_active_segment(*rec);
        Recording sel = *rec;
        if (rec->n_channels == kFullChannels && m.pipeline.n_channels == kChannelsPerPosition) {
          const auto pos = position_from(st_position);
          if (!pos) usage_error("a single-ring model needs --position elbow or forearm");
          sel = slice_position(*rec, *pos);
        }
        replay_bytes = frame_recording(sel, seg.active);
        so.gain = st_gain.value_or(ds.gain);
        so.overflow = OverflowPolicy::Block;
        source = [&replay_bytes, pos = std::size_t{0}](std::span<std::uint8_t> buf) mutable {
          const std::size_t n = std::min(buf.size(), replay_bytes.size() - pos);
          std::copy_n(replay_bytes.begin() + static_cast<std::ptrdiff_t>(pos), n, buf.begin());
          pos += n;
          return n;
        };
      } else if (!st_listen.empty()) {
        source = tcp_source(st_listen, err, client_fd, listen_fd);
      }
      if (!source) usage_error("no input stream");
      if (!st_policy.empty()) {
        if (lower(st_policy) == "drop")
          so.overflow = OverflowPolicy::DropOldest;
        else if (lower(st_policy) == "block")
          so.overflow = OverflowPolicy::Block;
        else
          usage_error("policy must be drop or block");
      }
      std::ostringstream decisions;
      decisions << "window,timestamp_ms,gesture,processing_ms\n";
      out << "timestamp_ms,gesture,processing_ms\n";
      StreamResult res;
      try {
        res = run_stream(m, source, so, [&](const Decision& d) {
          out << d.timestamp_ms << "," << to_string(kAllGestures[d.gesture]) << "," << d.processing_ms << "\n";
          out.flush();
          decisions << d.window << "," << d.timestamp_ms << "," << to_string(kAllGestures[d.gesture]) << ","
                    << d.processing_ms << "\n";
        });
      } catch (...) {
        if (client_fd >= 0) ::close(client_fd);
        if (listen_fd >= 0) ::close(listen_fd);
        throw;
      }
      if (client_fd >= 0) ::close(client_fd);
      if (listen_fd >= 0) ::close(listen_fd);
      for (const auto& w : res.warnings) err << "warning: " << w << "\n";
      const auto& l = res.latency;
      err << "latency: windows=" << l.windows << " min=" << l.min_ms << "ms mean=" << l.mean_ms
          << "ms p95=" << l.p95_ms << "ms p99=" << l.p99_ms << "ms max=" << l.max_ms << "ms budget="
          << LatencyReport::kBudgetMs << "ms (" << LatencyReport::kWindowMs << " window + "
          << LatencyReport::kProcessingBudgetMs << " processing) violations=" << l.violations
          << " dropped=" << l.dropped << "\n";
      if (!st_out.empty()) {
        write_text(fs::path(st_out) / "latency.csv", latency_csv(l));
        write_text(fs::path(st_out) / "decisions.csv", decisions.str());
      }
      return 0;
    }

    if (report->parsed()) {
      std::vector<std::vector<ResultRow>> runs;
      std::vector<ResultRow> all;
      for (const auto& p : r_results) {
        runs.push_back(parse_results_csv(read_text(p)));
        all.insert(all.end(), runs.back().begin(), runs.back().end());
      }
      std::string md = format_comparison(runs);
      md += "\n## Results\n\n```\n" + format_results_table(all) + "```\n";
      write_text(fs::path(r_out) / "report.md", md);
      out << md;
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace emgo::cli
