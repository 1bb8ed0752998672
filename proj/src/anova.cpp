#include "emgo/anova.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/special_functions/beta.hpp>

#include "emgo/error.hpp"

namespace emgo {

double f_upper_tail(double f, double d1, double d2) {
  if (std::isnan(f)) return 1.0;
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F > f) = I_{d2/(d2+d1 f)}(d2/2, d1/2)
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double bonferroni(double p, int m) { return std::min(1.0, p * std::max(1, m)); }

AnovaResult anova(const AnovaTable& t, int bonferroni_m) {
  const std::size_t n = t.values.size();
  const std::size_t nf = t.factors.size();
  if (t.levels.size() != n) throw Error(ErrorCode::DimensionMismatch, "levels and values differ in length");
  if (n == 0 || nf == 0) throw Error(ErrorCode::TooFewReplicates, "empty table");

  std::vector<int> n_levels(nf, 0);
  for (const auto& row : t.levels) {
    if (row.size() != nf) throw Error(ErrorCode::DimensionMismatch, "level row has wrong width");
    for (std::size_t f = 0; f < nf; ++f) {
      if (row[f] < 0) throw Error(ErrorCode::InvalidConfig, "negative level index");
      n_levels[f] = std::max(n_levels[f], row[f] + 1);
    }
  }
  std::map<std::vector<int>, std::size_t> cells;
  for (const auto& row : t.levels) ++cells[row];
  std::size_t expected_cells = 1;
  for (int l : n_levels) expected_cells *= static_cast<std::size_t>(l);
  const std::size_t reps = cells.begin()->second;
  if (cells.size() != expected_cells ||
      std::any_of(cells.begin(), cells.end(), [&](const auto& c) { return c.second != reps; }))
    throw Error(ErrorCode::Unbalanced, "every level combination needs the same number of observations");

  double grand = 0.0;
  for (double v : t.values) grand += v;
  grand /= static_cast<double>(n);
  double ss_total = 0.0;
  for (double v : t.values) ss_total += (v - grand) * (v - grand);

  AnovaResult r;
  double ss_factors = 0.0;
  int df_factors = 0;
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<double> sum(n_levels[f], 0.0);
    std::vector<double> cnt(n_levels[f], 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[t.levels[i][f]] += t.values[i];
      cnt[t.levels[i][f]] += 1.0;
    }
    double ss = 0.0;
    for (int l = 0; l < n_levels[f]; ++l) {
      const double d = sum[l] / cnt[l] - grand;
      ss += cnt[l] * d * d;
    }
    FactorEffect e;
    e.factor = t.factors[f];
    e.ss = ss;
    e.df = n_levels[f] - 1;
    ss_factors += ss;
    df_factors += e.df;
    r.effects.push_back(e);
  }
  r.df_error = static_cast<int>(n) - 1 - df_factors;
  if (r.df_error <= 0) throw Error(ErrorCode::TooFewReplicates, "no degrees of freedom left for error");
  r.ss_error = std::max(0.0, ss_total - ss_factors);
  // Rounding noise in an exactly-fitting model.
  if (r.ss_error <= 1e-12 * std::max(ss_total, 1e-300)) r.ss_error = 0.0;

  const double ms_error = r.ss_error / r.df_error;
  for (auto& e : r.effects) {
    if (e.df == 0 || e.ss <= 1e-12 * std::max(ss_total, 1e-300)) {
      e.f = 0.0;
      e.p = 1.0;
    } else if (ms_error == 0.0) {
      e.f = std::numeric_limits<double>::infinity();
      e.p = 0.0;
    } else {
      e.f = (e.ss / e.df) / ms_error;
      e.p = f_upper_tail(e.f, e.df, r.df_error);
    }
    e.p_adjusted = bonferroni(e.p, bonferroni_m);
  }
  return r;
}

}  // namespace emgo
