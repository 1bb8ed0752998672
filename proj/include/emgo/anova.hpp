#pragma once

#include <string>
#include <vector>

namespace emgo {

// Long-format factorial table: `levels[i][f]` is the level index of
// observation i on factor f. Replicates are repeated level combinations.
struct AnovaTable {
  std::vector<std::string> factors;
  std::vector<std::vector<int>> levels;
  std::vector<double> values;
};

struct FactorEffect {
  std::string factor;
  double ss = 0.0;
  int df = 0;
  double f = 0.0;
  double p = 1.0;
  double p_adjusted = 1.0;
};

struct AnovaResult {
  std::vector<FactorEffect> effects;
  double ss_error = 0.0;
  int df_error = 0;
};

// Main-effects fixed-model ANOVA on a balanced design. Throws Unbalanced or
// TooFewReplicates. p values are Bonferroni-adjusted with `bonferroni_m`.
AnovaResult anova(const AnovaTable& table, int bonferroni_m = 1);

// Upper tail P(F > f) of the F(d1, d2) distribution.
double f_upper_tail(double f, double d1, double d2);
double bonferroni(double p, int m);

}  // namespace emgo
