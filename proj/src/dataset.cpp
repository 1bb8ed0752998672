#include "emgo/dataset.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "emgo/error.hpp"

namespace emgo {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim_cr(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  return line;
}

}  // namespace

std::vector<int> Dataset::subjects() const {
  std::set<int> s;
  for (const auto& r : recordings) s.insert(r.key.subject);
  return {s.begin(), s.end()};
}

const Recording* Dataset::find(const TrialKey& key) const {
  for (const auto& r : recordings)
    if (r.key == key) return &r;
  return nullptr;
}

fs::path trial_relpath(const TrialKey& key) {
  return fs::path("S" + std::to_string(key.subject)) / std::string(to_string(key.gesture)) /
         std::string(to_string(key.orientation)) / ("t" + std::to_string(key.trial) + ".csv");
}

std::string format_trial_csv(const Recording& rec) {
  std::string out;
  out.reserve(rec.n_samples * rec.n_channels * 5 + 64);
  for (std::size_t c = 0; c < rec.n_channels; ++c) {
    if (c) out += ',';
    out += "ch" + std::to_string(c + 1);
  }
  out += '\n';
  char buf[32];
  for (std::size_t t = 0; t < rec.n_samples; ++t) {
    for (std::size_t c = 0; c < rec.n_channels; ++c) {
      if (c) out += ',';
      const long long count = std::llround(rec.samples[c * rec.n_samples + t] / rec.gain);
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, count);
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

Recording parse_trial_csv(const std::string& text, const TrialKey& key, Layout layout,
                          double sample_rate, double gain, const std::string& source) {
  const std::size_t expected = static_cast<std::size_t>(channel_count(layout));
  auto malformed = [&](std::size_t line, const std::string& why) {
    return Error(ErrorCode::MalformedTrialFile, source + ":" + std::to_string(line) + ": " + why);
  };

  std::vector<std::vector<double>> columns(expected);
  std::string_view rest(text);
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    std::string_view line = trim_cr(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    std::size_t fields = 1;
    for (char ch : line) fields += ch == ',';
    if (fields != expected) {
      throw malformed(line_no, std::to_string(fields) + " columns, layout " +
                                   std::string(to_string(layout)) + " needs " +
                                   std::to_string(expected));
    }
    if (!header_seen) {
      header_seen = true;
      if (line.substr(0, 2) == "ch") continue;
      throw malformed(line_no, "missing header row");
    }
    std::size_t col = 0;
    std::size_t pos = 0;
    while (col < expected) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string_view::npos) comma = line.size();
      long long v = 0;
      const char* first = line.data() + pos;
      const char* last = line.data() + comma;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last) {
        throw malformed(line_no, "non-integer sample '" + std::string(first, last) + "'");
      }
      columns[col].push_back(static_cast<double>(v) * gain);
      pos = comma + 1;
      ++col;
    }
  }
  if (!header_seen) throw malformed(line_no, "empty file");

  Recording rec(key, layout, expected, columns[0].size(), sample_rate, gain);
  for (std::size_t c = 0; c < expected; ++c)
    std::copy(columns[c].begin(), columns[c].end(), rec.channel(c).begin());
  return rec;
}

Dataset load_dataset(const fs::path& root, ValidationReport* report) {
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path))
    throw Error(ErrorCode::MissingManifest, "no manifest.json under " + root.string());

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(slurp(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "manifest.json: " + std::string(e.what()));
  }

  Dataset ds;
  struct Entry {
    TrialKey key;
    fs::path path;
  };
  std::vector<Entry> entries;
  try {
    ds.sample_rate = manifest.at("sample_rate").get<double>();
    ds.gain = manifest.at("gain_mv_per_count").get<double>();
    const auto layout = parse_layout(manifest.at("layout").get<std::string>());
    if (!layout) throw Error(ErrorCode::InvalidConfig, "manifest.json: unknown layout");
    ds.layout = *layout;

    std::set<TrialKey> seen;
    for (const auto& t : manifest.at("trials")) {
      TrialKey key;
      key.subject = t.at("subject").get<int>();
      const auto g = parse_gesture(t.at("gesture").get<std::string>());
      const auto o = parse_orientation(t.at("orientation").get<std::string>());
      if (!g || !o) throw Error(ErrorCode::InvalidConfig, "manifest.json: bad trial labels");
      key.gesture = *g;
      key.orientation = *o;
      key.trial = t.at("trial").get<int>();
      if (!seen.insert(key).second)
        throw Error(ErrorCode::DuplicateKey, "manifest.json: " + to_string(key));
      entries.push_back({key, root / t.at("path").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "manifest.json: " + std::string(e.what()));
  }

  ds.recordings.resize(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(entries.size()); ++i) {
    try {
      const auto& e = entries[i];
      if (!fs::exists(e.path))
        throw Error(ErrorCode::MalformedTrialFile, e.path.string() + ":0: file missing");
      ds.recordings[i] = parse_trial_csv(slurp(e.path), e.key, ds.layout, ds.sample_rate,
                                         ds.gain, e.path.string());
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  if (report) *report = validate(ds);
  return ds;
}

void write_dataset(const Dataset& ds, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + root.string());

  nlohmann::ordered_json manifest;
  manifest["sample_rate"] = ds.sample_rate;
  manifest["gain_mv_per_count"] = ds.gain;
  manifest["layout"] = std::string(to_string(ds.layout));
  auto trials = nlohmann::ordered_json::array();
  for (const auto& r : ds.recordings) {
    nlohmann::ordered_json t;
    t["subject"] = r.key.subject;
    t["gesture"] = std::string(to_string(r.key.gesture));
    t["orientation"] = std::string(to_string(r.key.orientation));
    t["trial"] = r.key.trial;
    t["path"] = trial_relpath(r.key).generic_string();
    trials.push_back(std::move(t));
  }
  manifest["trials"] = std::move(trials);

  for (const auto& r : ds.recordings) {
    const fs::path p = root / trial_relpath(r.key);
    fs::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
    out << format_trial_csv(r);
  }
  std::ofstream out(root / "manifest.json", std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest.json");
  out << manifest.dump(2) << '\n';
}

Recording slice_position(const Recording& rec, ElectrodePosition pos) {
  if (rec.n_channels != kFullChannels || rec.layout != Layout::Full8)
    throw Error(ErrorCode::WrongLayout,
                to_string(rec.key) + " has " + std::to_string(rec.n_channels) + " channels");
  Recording out(rec.key, pos == ElectrodePosition::Elbow ? Layout::Elbow4 : Layout::Forearm4,
                kChannelsPerPosition, rec.n_samples, rec.sample_rate, rec.gain);
  const std::size_t offset = channel_offset(pos);
  for (std::size_t c = 0; c < kChannelsPerPosition; ++c) {
    auto src = rec.channel(offset + c);
    std::copy(src.begin(), src.end(), out.channel(c).begin());
  }
  return out;
}

ValidationReport validate(const Dataset& ds) {
  ValidationReport rep;
  std::map<int, std::set<std::tuple<int, int, int>>> cells;
  std::set<std::pair<TrialKey, Layout>> keys;

  for (const auto& r : ds.recordings) {
    auto violate = [&](const std::string& m) { rep.violations.push_back({r.key, m}); };
    if (!keys.insert({r.key, r.layout}).second) violate("duplicate key");
    if (r.sample_rate != kSampleRate)
      violate("sample rate " + std::to_string(r.sample_rate) + " Hz, expected 1000");
    if (r.n_channels != 4 && r.n_channels != 8)
      violate(std::to_string(r.n_channels) + " channels");
    else if (static_cast<int>(r.n_channels) != channel_count(r.layout))
      violate("channel count does not match layout " + std::string(to_string(r.layout)));
    if (r.samples.size() != r.n_channels * r.n_samples) violate("sample buffer size mismatch");
    if (r.key.trial < 1 || r.key.trial > kTrialsPerCondition)
      violate("trial index " + std::to_string(r.key.trial) + " outside 1..5");
    const auto bad = std::count_if(r.samples.begin(), r.samples.end(),
                                   [](double v) { return !std::isfinite(v); });
    if (bad > 0) violate(std::to_string(bad) + " non-finite samples");
    const double d = r.duration_s();
    if (d < 7.5 || d > 8.5)
      rep.warnings.push_back(to_string(r.key) + ": duration " + std::to_string(d) + " s");
    cells[r.key.subject].insert(
        {index_of(r.key.gesture), index_of(r.key.orientation), r.key.trial});
  }
  for (const auto& [subject, set] : cells) rep.completeness[subject] = set.size();
  return rep;
}

}  // namespace emgo
