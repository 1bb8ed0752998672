#include "emgo/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "emgo/error.hpp"

namespace emgo {

namespace {

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string position_name(const std::optional<ElectrodePosition>& p) {
  return p ? std::string(to_string(*p)) : std::string("both");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

const char* kResultsHeader =
    "scheme,position,method,classifier,subject,accuracy,sensitivity,specificity,precision,f1,mcc,f1_fold_std";


}  // namespace

std::vector<ResultRow> result_rows(const std::vector<CellResult>& cells) {
  std::vector<ResultRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) {
    const MetricsSummary s = c.summary();
    ResultRow r;
    r.scheme = to_string(c.key.scheme);
    r.position = position_name(c.key.position);
    r.method = to_string(c.key.method);
    r.classifier = to_string(c.key.classifier);
    r.subject = c.key.subject;
    r.accuracy = s.accuracy.mean;
    r.sensitivity = s.sensitivity.mean;
    r.specificity = s.specificity.mean;
    r.precision = s.precision.mean;
    r.f1 = s.f1.mean;
    r.mcc = s.mcc.mean;
    r.f1_fold_std = s.f1.std;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_results_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : rows) {
    out += r.scheme + "," + r.position + "," + r.method + "," + r.classifier + "," +
           std::to_string(r.subject) + "," + fmt(r.accuracy) + "," + fmt(r.sensitivity) + "," +
           fmt(r.specificity) + "," + fmt(r.precision) + "," + fmt(r.f1) + "," + fmt(r.mcc) + "," +
           fmt(r.f1_fold_std) + "\n";
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader)
    throw Error(ErrorCode::InvalidConfig, "results CSV: unexpected header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 12)
      throw Error(ErrorCode::InvalidConfig, "results CSV line " + std::to_string(lineno) + ": expected 12 fields");
    try {
      ResultRow r;
      r.scheme = f[0];
      r.position = f[1];
      r.method = f[2];
      r.classifier = f[3];
      r.subject = std::stoi(f[4]);
      r.accuracy = std::stod(f[5]);
      r.sensitivity = std::stod(f[6]);
      r.specificity = std::stod(f[7]);
      r.precision = std::stod(f[8]);
      r.f1 = std::stod(f[9]);
      r.mcc = std::stod(f[10]);
      r.f1_fold_std = std::stod(f[11]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidConfig, "results CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

std::string format_results_table(const std::vector<ResultRow>& rows) {
  std::vector<std::string> methods;
  std::vector<std::tuple<std::string, std::string, std::string>> groups;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    const auto g = std::make_tuple(r.scheme, r.position, r.classifier);
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  static const std::pair<const char*, double ResultRow::*> kMetrics[] = {
      {"Accuracy", &ResultRow::accuracy},   {"Sensitivity", &ResultRow::sensitivity},
      {"Specificity", &ResultRow::specificity}, {"Precision", &ResultRow::precision},
      {"F1", &ResultRow::f1},               {"MCC", &ResultRow::mcc}};

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {"Metric", "Scheme", "Position", "Classifier"};
  header.insert(header.end(), methods.begin(), methods.end());
  table.push_back(header);
  for (const auto& [name, field] : kMetrics) {
    for (const auto& [scheme, position, classifier] : groups) {
      std::vector<std::string> line = {name, scheme, position, classifier};
      for (const auto& m : methods) {
        std::vector<double> v;
        for (const auto& r : rows)
          if (r.scheme == scheme && r.position == position && r.classifier == classifier && r.method == m)
            v.push_back(r.*field * 100.0);
        if (v.empty()) {
          line.push_back("-");
        } else {
          const MeanStd ms = mean_std(v);
          line.push_back(fmt(ms.mean, 2) + "±" + fmt(ms.std, 2));
        }
      }
      table.push_back(line);
    }
  }
  auto width = [](const std::string& s) {
    // Count code points so the plus-minus sign occupies one column.
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
      return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
  };
  std::vector<std::size_t> w(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t i = 0; i < line.size(); ++i) w[i] = std::max(w[i], width(line[i]));
  std::string out;
  for (std::size_t li = 0; li < table.size(); ++li) {
    const auto& line = table[li];
    for (std::size_t i = 0; i < line.size(); ++i) {
      const std::size_t fill = w[i] - width(line[i]);
      if (i < 4)
        out += line[i] + std::string(fill, ' ');
      else
        out += std::string(fill, ' ') + line[i];
      out += i + 1 < line.size() ? "  " : "\n";
    }
    if (li == 0) {
      std::size_t total = 0;
      for (std::size_t x : w) total += x + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  return out;
}

std::string format_confusion_csv(const std::vector<CellResult>& cells, std::size_t fold) {
  std::string out = "scheme,position,method,classifier,subject,fold,true,predicted,count\n";
  for (const auto& c : cells) {
    if (fold >= c.confusions.size()) continue;
    const auto& cm = c.confusions[fold];
    const std::string prefix = std::string(to_string(c.key.scheme)) + "," + position_name(c.key.position) + "," +
                               std::string(to_string(c.key.method)) + "," +
                               std::string(to_string(c.key.classifier)) + "," + std::to_string(c.key.subject) +
                               "," + std::to_string(fold + 1) + ",";
    for (int t = 0; t < cm.classes(); ++t)
      for (int p = 0; p < cm.classes(); ++p)
        out += prefix + std::string(to_string(kAllGestures[t])) + "," + std::string(to_string(kAllGestures[p])) +
               "," + std::to_string(cm.at(t, p)) + "\n";
  }
  return out;
}

std::string format_quality_csv(const QualityReport& q) {
  std::string out =
      "gesture,snr_elbow_db,snr_elbow_std,snr_forearm_db,snr_forearm_std,snr_p,"
      "smr_elbow,smr_elbow_std,smr_forearm,smr_forearm_std,smr_p,fer,fer_std,below_noise\n";
  for (const auto& r : q.rows) {
    out += std::string(to_string(r.gesture)) + "," + fmt(r.snr[0].mean, 4) + "," + fmt(r.snr[0].std, 4) + "," +
           fmt(r.snr[1].mean, 4) + "," + fmt(r.snr[1].std, 4) + "," + fmt(r.snr_p, 6) + "," +
           fmt(r.smr[0].mean, 4) + "," + fmt(r.smr[0].std, 4) + "," + fmt(r.smr[1].mean, 4) + "," +
           fmt(r.smr[1].std, 4) + "," + fmt(r.smr_p, 6) + "," + fmt(r.fer.mean, 4) + "," +
           fmt(r.fer.std, 4) + "," + std::to_string(r.below_noise) + "\n";
  }
  return out;
}

AnovaResult anova_f1(const std::vector<ResultRow>& rows, int bonferroni_m) {
  using Field = std::string ResultRow::*;
  const std::pair<const char*, Field> candidates[] = {{"scheme", &ResultRow::scheme},
                                                      {"position", &ResultRow::position},
                                                      {"method", &ResultRow::method},
                                                      {"classifier", &ResultRow::classifier}};
  AnovaTable t;
  std::vector<std::pair<Field, std::vector<std::string>>> used;
  for (const auto& [name, field] : candidates) {
    std::set<std::string> levels;
    for (const auto& r : rows) levels.insert(r.*field);
    if (levels.size() > 1) {
      t.factors.push_back(name);
      used.emplace_back(field, std::vector<std::string>(levels.begin(), levels.end()));
    }
  }
  if (t.factors.empty()) throw Error(ErrorCode::InvalidConfig, "no factor varies across the result rows");
  for (const auto& r : rows) {
    std::vector<int> lv;
    for (const auto& [field, levels] : used)
      lv.push_back(static_cast<int>(std::lower_bound(levels.begin(), levels.end(), r.*field) - levels.begin()));
    t.levels.push_back(std::move(lv));
    t.values.push_back(r.f1);
  }
  return anova(t, bonferroni_m > 0 ? bonferroni_m : static_cast<int>(t.factors.size()));
}

std::string format_anova_csv(const AnovaResult& r) {
  std::string out = "factor,ss,df,f,p,p_adjusted,significant\n";
  for (const auto& e : r.effects)
    out += e.factor + "," + fmt(e.ss, 8) + "," + std::to_string(e.df) + "," + fmt(e.f, 6) + "," + fmt(e.p, 8) +
           "," + fmt(e.p_adjusted, 8) + "," + (e.p_adjusted < 0.05 ? "yes" : "no") + "\n";
  out += "error," + fmt(r.ss_error, 8) + "," + std::to_string(r.df_error) + ",,,,\n";
  return out;
}

double mean_f1(const std::vector<ResultRow>& rows) {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.f1;
  return s / static_cast<double>(rows.size());
}

std::string format_comparison(const std::vector<std::vector<ResultRow>>& runs) {
  std::vector<std::string> schemes;
  std::map<std::string, std::vector<ResultRow>> by_scheme;
  for (const auto& run : runs)
    for (const auto& r : run) {
      if (!by_scheme.count(r.scheme)) schemes.push_back(r.scheme);
      by_scheme[r.scheme].push_back(r);
    }
  std::string out = "# Scheme comparison\n\n| Scheme | Rows | Mean F1 (%) | Mean accuracy (%) | Mean MCC |\n|---|---:|---:|---:|---:|\n";
  for (const auto& s : schemes) {
    const auto& rows = by_scheme[s];
    double acc = 0.0, mcc = 0.0;
    for (const auto& r : rows) {
      acc += r.accuracy;
      mcc += r.mcc;
    }
    const double n = static_cast<double>(rows.size());
    out += "| " + s + " | " + std::to_string(rows.size()) + " | " + fmt(mean_f1(rows) * 100.0, 2) + " | " +
           fmt(acc / n * 100.0, 2) + " | " + fmt(mcc / n, 4) + " |\n";
  }
  if (schemes.size() > 1) {
    out += "\n## F1 deltas\n\n| Comparison | Delta (points) | Relative (%) |\n|---|---:|---:|\n";
    for (std::size_t i = 0; i < schemes.size(); ++i)
      for (std::size_t j = i + 1; j < schemes.size(); ++j) {
        const double a = mean_f1(by_scheme[schemes[i]]) * 100.0;
        const double b = mean_f1(by_scheme[schemes[j]]) * 100.0;
        const double rel = a != 0.0 ? (b - a) / a * 100.0 : 0.0;
        out += "| " + schemes[j] + " vs " + schemes[i] + " | " + (b - a >= 0 ? "+" : "") + fmt(b - a, 2) + " | " +
               (rel >= 0 ? "+" : "") + fmt(rel, 2) + " |\n";
      }
  }
  return out;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  f << s;
  if (!f) throw Error(ErrorCode::IoError, "write failed: " + p.string());
}

}  // namespace emgo
