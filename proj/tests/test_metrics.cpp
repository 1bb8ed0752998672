#include <numeric>

#include "doctest.h"
#include "emgo/error.hpp"
#include "emgo/metrics.hpp"
#include "emgo/rng.hpp"

using namespace emgo;

namespace {

struct Counts {
  double tp = 0, tn = 0, fp = 0, fn = 0;
};

// Recounts one-vs-rest cells by visiting every (truth, predicted) cell.
Counts recount(const ConfusionMatrix& cm, int cls) {
  Counts c;
  for (int t = 0; t < cm.classes(); ++t)
    for (int p = 0; p < cm.classes(); ++p) {
      const double n = static_cast<double>(cm.at(t, p));
      if (t == cls && p == cls) c.tp += n;
      else if (t == cls) c.fn += n;
      else if (p == cls) c.fp += n;
      else c.tn += n;
    }
  return c;
}

double ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

ClassMetrics oracle(const Counts& c) {
  ClassMetrics m;
  m.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  m.mcc = ratio(c.tp * c.tn - c.fp * c.fn,
                std::sqrt((c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)));
  return m;
}

ConfusionMatrix random_matrix(Xoshiro256& rng, int classes) {
  ConfusionMatrix cm(classes);
  for (int t = 0; t < classes; ++t)
    for (int p = 0; p < classes; ++p) {
      const double u = rng.uniform();
      if (u < 0.3) continue;  // keep some zero cells
      cm.add(t, p, static_cast<std::uint64_t>(rng.uniform() * (t == p ? 60 : 12)));
    }
  if (cm.total() == 0) cm.add(0, 0);
  return cm;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("diagonal matrix scores perfectly") {
    ConfusionMatrix cm;
    for (int k = 0; k < 12; ++k) cm.add(k, k, 10);
    const MetricsReport r = metrics(cm);
    for (double v : {r.accuracy, r.sensitivity, r.specificity, r.precision, r.f1, r.mcc}) CHECK(v == 1.0);
    CHECK_FALSE(r.zero_denominator);
  }

  TEST_CASE("binary cell example") {
    const ClassMetrics m = binary_metrics({5, 90, 3, 2});
    CHECK(m.mcc == doctest::Approx(444.0 / std::sqrt(8.0 * 7 * 93 * 92)));
    CHECK(m.mcc == doctest::Approx(0.6414).epsilon(1e-4));
    CHECK(m.f1 == doctest::Approx(2.0 * (5.0 / 8) * (5.0 / 7) / (5.0 / 8 + 5.0 / 7)));
    CHECK(m.f1 == doctest::Approx(0.6667).epsilon(1e-4));
    CHECK(m.accuracy == doctest::Approx(0.95));
    CHECK(m.sensitivity == doctest::Approx(5.0 / 7));
    CHECK(m.specificity == doctest::Approx(90.0 / 93));
    CHECK(m.precision == doctest::Approx(5.0 / 8));
  }

  TEST_CASE("random matrices agree with a brute-force recount") {
    Xoshiro256 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
      const int classes = 2 + static_cast<int>(rng.uniform() * 11);
      const ConfusionMatrix cm = random_matrix(rng, classes);
      const MetricsReport r = metrics(cm);
      REQUIRE(r.per_class.size() == static_cast<std::size_t>(classes));
      ClassMetrics mean;
      for (int k = 0; k < classes; ++k) {
        const Counts c = recount(cm, k);
        const ClassCounts got = one_vs_rest(cm, k);
        REQUIRE(static_cast<double>(got.tp) == c.tp);
        REQUIRE(static_cast<double>(got.tn) == c.tn);
        REQUIRE(static_cast<double>(got.fp) == c.fp);
        REQUIRE(static_cast<double>(got.fn) == c.fn);
        const ClassMetrics o = oracle(c);
        REQUIRE(r.per_class[k].f1 == doctest::Approx(o.f1).epsilon(1e-12));
        REQUIRE(r.per_class[k].mcc == doctest::Approx(o.mcc).epsilon(1e-12));
        mean.accuracy += o.accuracy / classes;
        mean.sensitivity += o.sensitivity / classes;
        mean.specificity += o.specificity / classes;
        mean.precision += o.precision / classes;
        mean.f1 += o.f1 / classes;
        mean.mcc += o.mcc / classes;
      }
      REQUIRE(r.accuracy == doctest::Approx(mean.accuracy).epsilon(1e-12));
      REQUIRE(r.sensitivity == doctest::Approx(mean.sensitivity).epsilon(1e-12));
      REQUIRE(r.specificity == doctest::Approx(mean.specificity).epsilon(1e-12));
      REQUIRE(r.precision == doctest::Approx(mean.precision).epsilon(1e-12));
      REQUIRE(r.f1 == doctest::Approx(mean.f1).epsilon(1e-12));
      REQUIRE(r.mcc == doctest::Approx(mean.mcc).epsilon(1e-12));
      for (double v : {r.accuracy, r.sensitivity, r.specificity, r.precision, r.f1}) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
      }
      REQUIRE(std::abs(r.mcc) <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("macro accuracy equals the pooled one-vs-rest identity") {
    Xoshiro256 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const ConfusionMatrix cm = random_matrix(rng, 12);
      double hits = 0;
      for (int k = 0; k < 12; ++k) {
        const Counts c = recount(cm, k);
        hits += c.tp + c.tn;
      }
      const double expected = hits / (12.0 * static_cast<double>(cm.total()));
      CHECK(metrics(cm).accuracy == doctest::Approx(expected).epsilon(1e-14));
    }
  }

  TEST_CASE("relabeling permutes per-class metrics only") {
    Xoshiro256 rng(77);
    const ConfusionMatrix cm = random_matrix(rng, 12);
    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 11; i > 0; --i) std::swap(perm[i], perm[static_cast<int>(rng.uniform() * (i + 1))]);
    ConfusionMatrix pm;
    for (int t = 0; t < 12; ++t)
      for (int p = 0; p < 12; ++p) pm.add(perm[t], perm[p], cm.at(t, p));
    const MetricsReport a = metrics(cm), b = metrics(pm);
    for (int k = 0; k < 12; ++k) {
      CHECK(b.per_class[perm[k]].f1 == a.per_class[k].f1);
      CHECK(b.per_class[perm[k]].mcc == a.per_class[k].mcc);
    }
    CHECK(b.f1 == doctest::Approx(a.f1).epsilon(1e-14));
    CHECK(b.mcc == doctest::Approx(a.mcc).epsilon(1e-14));
    CHECK(b.accuracy == doctest::Approx(a.accuracy).epsilon(1e-14));
  }

  TEST_CASE("constant classifier on balanced data") {
    ConfusionMatrix cm;
    for (int k = 0; k < 12; ++k) cm.add(k, 4, 20);
    const MetricsReport r = metrics(cm);
    CHECK(r.sensitivity == doctest::Approx(1.0 / 12));
    CHECK(r.specificity == doctest::Approx(11.0 / 12));
    CHECK(r.zero_denominator);
  }

  TEST_CASE("empty matrix is an error and zero denominators are flagged") {
    try {
      metrics(ConfusionMatrix{});
      FAIL("expected EmptyMatrix");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyMatrix);
    }
    bool flag = false;
    const ClassMetrics m = binary_metrics({0, 10, 0, 0}, &flag);
    CHECK(flag);
    CHECK(m.precision == 0.0);
    CHECK(m.mcc == 0.0);
  }

  TEST_CASE("summaries average across reports") {
    MetricsReport a, b;
    a.f1 = 0.5;
    b.f1 = 0.7;
    const std::vector<MetricsReport> v = {a, b};
    const MetricsSummary s = summarize(v);
    CHECK(s.f1.mean == doctest::Approx(0.6));
    CHECK(s.f1.std == doctest::Approx(std::sqrt(0.02)));
    CHECK(s.f1.n == 2);
  }
}
