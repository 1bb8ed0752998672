#include "doctest.h"
#include "emgo/dataset.hpp"
#include "emgo/error.hpp"
#include "emgo/quality.hpp"
#include "emgo/synth.hpp"
#include "helpers.hpp"

using namespace emgo;
using testing::sine;
using testing::white;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

TrialQuality tq(Gesture g, std::initializer_list<std::pair<double, double>> raw_noise) {
  TrialQuality q;
  q.key.gesture = g;
  for (auto [raw, noise] : raw_noise) {
    ChannelQuality c;
    c.raw_rms = raw;
    c.noise_rms = noise;
    c.below_noise = !(raw > noise);
    q.channels.push_back(c);
  }
  return q;
}

std::vector<double> with_dither(std::vector<double> x, std::uint64_t seed) {
  const auto d = white(x.size(), seed, 1e-4);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += d[i];
  return x;
}

}  // namespace

TEST_SUITE("quality") {
  TEST_CASE("snr examples") {
    const double n = 3.7;
    CHECK(snr_db(std::sqrt(2.0) * n, n) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(snr_db(std::sqrt(101.0) * n, n) == doctest::Approx(20.0));
    CHECK(code_of([&] { snr_db(n, n); }) == ErrorCode::SignalBelowNoise);
    CHECK(code_of([&] { snr_db(1.0, 2.0); }) == ErrorCode::SignalBelowNoise);
    CHECK(corrected_rms(5.0, 3.0) == doctest::Approx(4.0));
  }

  TEST_CASE("snr increases strictly with raw rms") {
    double prev = -1e300;
    for (double raw = 1.01; raw < 50.0; raw *= 1.1) {
      const double v = snr_db(raw, 1.0);
      CHECK(v > prev);
      prev = v;
    }
  }

  TEST_CASE("welch locates a 100 Hz tone") {
    const Psd p = welch_psd(sine(100, 1, 4000), 1000.0);
    CHECK(p.df == doctest::Approx(1000.0 / 256.0));
    const auto it = std::max_element(p.power.begin(), p.power.end());
    const double f = p.freq[static_cast<std::size_t>(it - p.power.begin())];
    CHECK(std::abs(f - 100.0) <= p.df / 2.0);
    for (double v : p.power) CHECK(v >= 0.0);
  }

  TEST_CASE("welch satisfies Parseval") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto x = white(5000, seed, 2.0);
      const Psd p = welch_psd(x, 1000.0);
      double total = 0.0;
      for (double v : p.power) total += v;
      const double ms = testing::rms_of(x) * testing::rms_of(x);
      CHECK(total * p.df == doctest::Approx(ms).epsilon(0.05));
    }
    const auto s = sine(123, 3.0, 4096);
    const Psd p = welch_psd(s, 1000.0);
    double total = 0.0;
    for (double v : p.power) total += v;
    CHECK(total * p.df == doctest::Approx(4.5).epsilon(0.05));
  }

  TEST_CASE("white noise has a flat spectrum") {
    const Psd p = welch_psd(white(20000, 77), 1000.0);
    std::vector<double> bands;
    double acc = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < p.freq.size(); ++k) {
      if (p.freq[k] < 20.0 || p.freq[k] > 450.0) continue;
      acc += p.power[k];
      if (++count == 8) {
        bands.push_back(acc / 8.0);
        acc = 0.0;
        count = 0;
      }
    }
    const auto [lo, hi] = std::minmax_element(bands.begin(), bands.end());
    CHECK(*hi / *lo < 3.0);
  }

  TEST_CASE("zero signal gives zero PSD, short signals fail") {
    const std::vector<double> z(1000, 0.0);
    for (double v : welch_psd(z, 1000.0).power) CHECK(v == 0.0);
    const std::vector<double> short_x(255, 1.0);
    CHECK(code_of([&] { welch_psd(short_x, 1000.0); }) == ErrorCode::TooShort);
    CHECK(code_of([&] { smr(z, 1000.0); }) == ErrorCode::DegenerateSpectrum);
  }

  TEST_CASE("smr of tones and equal bands") {
    Psd p;
    p.df = 10.0;
    p.freq = {0.0, 10.0, 20.0, 30.0};
    p.power = {1.0, 1.0, 0.5, 1.5};
    CHECK(smr_from_psd(p) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(smr(with_dither(sine(100, 1, 4000), 1), 1000.0) >= 20.0);
    CHECK(smr(with_dither(sine(5, 1, 4000), 2), 1000.0) <= -10.0);
  }

  TEST_CASE("smr is invariant to amplitude scaling") {
    auto x = white(3000, 5);
    const auto s = sine(8, 1.5, 3000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s[i];
    const double base = smr(x, 1000.0);
    for (double a : {0.01, 3.0, 1000.0}) {
      std::vector<double> y(x);
      for (double& v : y) v *= a;
      CHECK(smr(y, 1000.0) == doctest::Approx(base).epsilon(1e-9));
    }
  }

  TEST_CASE("fer examples") {
    const std::vector<TrialQuality> same = {tq(Gesture::HC, {{5, 3}, {10, 6}, {13, 5}, {2, 1}})};
    CHECK(fer(same, same, Gesture::HC) == 1.0);
    const std::vector<TrialQuality> elbow = {tq(Gesture::HC, {{5, 3}, {5, 3}, {5, 3}, {5, 3}})};
    const std::vector<TrialQuality> fore = {tq(Gesture::HC, {{std::sqrt(73.0), 3}, {std::sqrt(73.0), 3},
                                                             {std::sqrt(73.0), 3}, {std::sqrt(73.0), 3}})};
    CHECK(fer(fore, elbow, Gesture::HC) == doctest::Approx(2.0));
    const std::vector<TrialQuality> dead = {tq(Gesture::HC, {{2, 3}, {5, 3}, {5, 3}, {5, 3}})};
    CHECK(code_of([&] { fer(dead, elbow, Gesture::HC); }) == ErrorCode::SignalBelowNoise);
  }

  TEST_CASE("fer recovers the generator's forearm/elbow ratio") {
    SynthConfig cfg = default_synth_config();
    cfg.subject_jitter = 0.0;
    cfg.orientation_shift = {0.0, 0.0, 0.0};
    for (auto& row : cfg.amplitude)
      for (std::size_t c = 0; c < 8; ++c) row[c] = c < 4 ? 20.0 : 30.0;
    std::vector<TrialQuality> fore, elbow;
    Segment seg;
    seg.rest = {0, rest_samples(cfg)};
    seg.active = {seg.rest.end, seg.rest.end + active_samples(cfg)};
    for (int t = 1; t <= 5; ++t) {
      const Recording r = generate_trial(cfg, {1, Gesture::TL, Orientation::Rest, t});
      fore.push_back(trial_quality(slice_position(r, ElectrodePosition::Forearm), seg));
      elbow.push_back(trial_quality(slice_position(r, ElectrodePosition::Elbow), seg));
    }
    CHECK(fer(fore, elbow, Gesture::TL) == doctest::Approx(1.5).epsilon(0.1 / 1.5));
  }

  TEST_CASE("quality report covers every gesture") {
    SynthConfig cfg = default_synth_config();
    cfg.n_subjects = 1;
    const QualityReport rep = assess_quality(generate_dataset(cfg));
    REQUIRE(rep.rows.size() == 12);
    for (const auto& row : rep.rows) {
      CHECK(row.fer.mean > 0.0);
      for (int p = 0; p < 2; ++p) {
        CHECK(std::isfinite(row.snr[p].mean));
        CHECK(std::isfinite(row.smr[p].mean));
        CHECK(row.snr[p].n == 15);
      }
      CHECK(row.below_noise == 0);
    }
  }

  TEST_CASE("mean_std uses the sample deviation") {
    const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
    const MeanStd m = mean_std(v);
    CHECK(m.mean == 5.0);
    CHECK(m.std == doctest::Approx(std::sqrt(32.0 / 7.0)));
    CHECK(m.n == 8);
  }
}
