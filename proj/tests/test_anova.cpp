#include <cmath>
#include <tuple>

#include "doctest.h"
#include "emgo/anova.hpp"
#include "emgo/error.hpp"

using namespace emgo;

namespace {

// P(F > f) by Simpson quadrature of the F density after x = u^2.
double f_tail_quadrature(double f, double d1, double d2) {
  const double log_b = std::lgamma(d1 / 2) + std::lgamma(d2 / 2) - std::lgamma((d1 + d2) / 2);
  const auto pdf = [&](double x) {
    if (x <= 0.0) return 0.0;
    return std::exp((d1 / 2) * std::log(d1 / d2) + (d1 / 2 - 1) * std::log(x) -
                    ((d1 + d2) / 2) * std::log1p(d1 * x / d2) - log_b);
  };
  const auto g = [&](double u) { return u == 0.0 ? (d1 == 1.0 ? 2.0 * std::exp(0.5 * std::log(1.0 / d2) - log_b) : 0.0)
                                                 : pdf(u * u) * 2.0 * u; };
  const int n = 200000;
  const double b = std::sqrt(f), h = b / n;
  double s = g(0.0) + g(b);
  for (int i = 1; i < n; ++i) s += g(i * h) * (i % 2 ? 4.0 : 2.0);
  return 1.0 - s * h / 3.0;
}

AnovaTable one_way(const std::vector<std::vector<double>>& groups) {
  AnovaTable t;
  t.factors = {"group"};
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (double v : groups[g]) {
      t.levels.push_back({static_cast<int>(g)});
      t.values.push_back(v);
    }
  return t;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("anova") {
  TEST_CASE("two groups give F = 13.5") {
    const AnovaResult r = anova(one_way({{1, 2, 3}, {4, 5, 6}}));
    REQUIRE(r.effects.size() == 1);
    CHECK(r.effects[0].ss == doctest::Approx(13.5));
    CHECK(r.ss_error == doctest::Approx(4.0));
    CHECK(r.effects[0].df == 1);
    CHECK(r.df_error == 4);
    CHECK(r.effects[0].f == doctest::Approx(13.5));
    CHECK(r.effects[0].p == doctest::Approx(0.0213).epsilon(0.01));
    CHECK(std::abs(r.effects[0].p - f_tail_quadrature(13.5, 1, 4)) <= 1e-6);
  }

  TEST_CASE("F tail agrees with quadrature") {
    for (auto [f, d1, d2] : {std::tuple{0.5, 2.0, 10.0}, {2.7, 3.0, 20.0}, {4.1, 5.0, 7.0},
                             {1.0, 1.0, 1.0}, {9.0, 11.0, 50.0}})
      CHECK(std::abs(f_upper_tail(f, d1, d2) - f_tail_quadrature(f, d1, d2)) <= 1e-6);
    CHECK(f_upper_tail(0.0, 3, 7) == 1.0);
  }

  TEST_CASE("equal observations give F = 0 and p = 1") {
    AnovaTable t;
    t.factors = {"a", "b"};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 3; ++b)
        for (int r = 0; r < 2; ++r) {
          t.levels.push_back({a, b});
          t.values.push_back(0.75);
        }
    const AnovaResult r = anova(t, 2);
    for (const auto& e : r.effects) {
      CHECK(e.f == 0.0);
      CHECK(e.p == 1.0);
      CHECK(e.p_adjusted == 1.0);
    }
  }

  TEST_CASE("bonferroni multiplies and caps") {
    CHECK(bonferroni(0.02, 3) == doctest::Approx(0.06));
    CHECK(bonferroni(0.5, 3) == 1.0);
    CHECK(bonferroni(0.01, 1) == 0.01);
    const AnovaResult r = anova(one_way({{1, 2, 3}, {4, 5, 6}}), 3);
    CHECK(r.effects[0].p_adjusted == doctest::Approx(3 * r.effects[0].p));
  }

  TEST_CASE("main effects of a balanced two-factor design") {
    // y = 10 + 2*a + b with replicate noise +-0.5.
    AnovaTable t;
    t.factors = {"a", "b"};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 3; ++b)
        for (int r = 0; r < 2; ++r) {
          t.levels.push_back({a, b});
          t.values.push_back(10.0 + 2.0 * a + b + (r ? 0.5 : -0.5));
        }
    const AnovaResult r = anova(t);
    // Grand mean 12; factor a means 11, 13; factor b means 11, 12, 13.
    CHECK(r.effects[0].ss == doctest::Approx(12.0));
    CHECK(r.effects[1].ss == doctest::Approx(8.0));
    CHECK(r.ss_error == doctest::Approx(3.0));
    CHECK(r.df_error == 12 - 1 - 1 - 2);
    CHECK(r.effects[0].f == doctest::Approx(12.0 / (3.0 / 8)));
  }

  TEST_CASE("unbalanced and under-replicated designs are rejected") {
    CHECK(code_of([] { anova(one_way({{1, 2, 3}, {4, 5}})); }) == ErrorCode::Unbalanced);
    CHECK(code_of([] { anova(one_way({{1}, {4}})); }) == ErrorCode::TooFewReplicates);
  }
}
