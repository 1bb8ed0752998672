#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emgo/anova.hpp"
#include "emgo/evaluation.hpp"
#include "emgo/quality.hpp"

namespace emgo {

// One row per (scheme, position, method, classifier, subject) with the
// fold-mean of every metric.
struct ResultRow {
  std::string scheme, position, method, classifier;
  int subject = 0;
  double accuracy = 0, sensitivity = 0, specificity = 0, precision = 0, f1 = 0, mcc = 0;
  double f1_fold_std = 0;
};

std::vector<ResultRow> result_rows(const std::vector<CellResult>& cells);
std::string format_results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(const std::string& text);  // throws InvalidConfig

// Aligned text table: metric x (position, classifier) rows, method columns,
// mean±std across subjects.
std::string format_results_table(const std::vector<ResultRow>& rows);

// Long-format confusion rows for fold `fold` of every cell.
std::string format_confusion_csv(const std::vector<CellResult>& cells, std::size_t fold);

std::string format_quality_csv(const QualityReport& q);

// ANOVA of F1 over whichever of position/method/classifier vary in `rows`,
// subjects as replicates.
AnovaResult anova_f1(const std::vector<ResultRow>& rows, int bonferroni_m = 0);
std::string format_anova_csv(const AnovaResult& r);

// Markdown comparison of mean F1 per scheme and the pairwise deltas.
std::string format_comparison(const std::vector<std::vector<ResultRow>>& runs);

double mean_f1(const std::vector<ResultRow>& rows);

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& s);

}  // namespace emgo
