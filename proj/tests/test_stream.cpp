#include <chrono>
#include <thread>

#include "doctest.h"
#include "emgo/dataset.hpp"
#include "emgo/error.hpp"
#include "emgo/segment.hpp"
#include "emgo/stream.hpp"
#include "fixtures.hpp"

using namespace emgo;

namespace {

ByteSource memory_source(std::vector<std::uint8_t> bytes, std::size_t chunk = 333) {
  auto data = std::make_shared<std::vector<std::uint8_t>>(std::move(bytes));
  auto pos = std::make_shared<std::size_t>(0);
  return [data, pos, chunk](std::span<std::uint8_t> buf) {
    const std::size_t n = std::min({chunk, buf.size(), data->size() - *pos});
    std::copy_n(data->begin() + static_cast<std::ptrdiff_t>(*pos), n, buf.begin());
    *pos += n;
    return n;
  };
}

Frame make_frame(std::uint8_t channels, std::uint16_t samples, int base) {
  Frame f;
  f.n_channels = channels;
  f.n_samples = samples;
  for (int i = 0; i < channels * samples; ++i) f.samples.push_back(static_cast<std::int16_t>(base + i - 300));
  return f;
}

const TrainedModel& sntdf_lda() {
  static const TrainedModel m = testing::forearm_model(FeatureMethod::SNTDF, ClassifierKind::LDA);
  return m;
}

Recording forearm_trial(Gesture g, Orientation o, int t) {
  return slice_position(*testing::synth_subject().find({1, g, o, t}), ElectrodePosition::Forearm);
}

Span true_active() { return {1500, 7500}; }

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

TEST_SUITE("stream") {
  TEST_CASE("frames round-trip through any split") {
    const Frame a = make_frame(4, 3, 0), b = make_frame(4, 50, 1000);
    std::vector<std::uint8_t> bytes = encode_frame(a);
    CHECK(bytes.size() == kFrameHeaderBytes + 2 * 4 * 3);
    CHECK(bytes[0] == 0xE5);
    CHECK(bytes[1] == 0x47);
    CHECK(bytes[2] == 4);
    CHECK(bytes[3] == 3);
    CHECK(bytes[4] == 0);
    const auto eb = encode_frame(b);
    bytes.insert(bytes.end(), eb.begin(), eb.end());
    for (std::size_t cut = 0; cut <= bytes.size(); ++cut) {
      FrameDecoder d;
      auto out = d.feed({bytes.data(), cut});
      const auto rest = d.feed({bytes.data() + cut, bytes.size() - cut});
      out.insert(out.end(), rest.begin(), rest.end());
      REQUIRE(out.size() == 2);
      CHECK(out[0].samples == a.samples);
      CHECK(out[1].samples == b.samples);
      CHECK(out[1].n_samples == 50);
      CHECK(d.idle());
    }
  }

  TEST_CASE("corrupted header reports its byte offset") {
    std::vector<std::uint8_t> bytes = encode_frame(make_frame(4, 10, 0));
    const std::size_t good = bytes.size();
    auto second = encode_frame(make_frame(4, 10, 5));
    second[1] = 0x00;
    bytes.insert(bytes.end(), second.begin(), second.end());
    FrameDecoder d;
    try {
      d.feed(bytes);
      FAIL("expected FrameDesync");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FrameDesync);
      CHECK(std::string(e.what()).find(std::to_string(good)) != std::string::npos);
    }
    std::vector<std::uint8_t> zero = encode_frame(make_frame(1, 1, 0));
    zero[2] = 0;
    FrameDecoder z;
    CHECK(code_of([&] { z.feed(zero); }) == ErrorCode::FrameDesync);
  }

  TEST_CASE("latency percentiles use nearest rank") {
    std::vector<double> t;
    for (int i = 100; i >= 1; --i) t.push_back(i);
    const LatencyReport r = latency_report(t, 3);
    CHECK(r.windows == 100);
    CHECK(r.min_ms == 1.0);
    CHECK(r.max_ms == 100.0);
    CHECK(r.mean_ms == doctest::Approx(50.5));
    CHECK(r.p95_ms == 95.0);
    CHECK(r.p99_ms == 99.0);
    CHECK(r.violations == 50);
    CHECK(r.dropped == 3);
    CHECK(LatencyReport::kProcessingBudgetMs == 50.0);
  }

  TEST_CASE("six seconds of activity give 24 decisions matching the offline path") {
    const Recording rec = forearm_trial(Gesture::HC, Orientation::Rest, 2);
    StreamOptions opt;
    opt.overflow = OverflowPolicy::Block;
    std::vector<Decision> seen;
    const StreamResult r =
        run_stream(sntdf_lda(), memory_source(frame_recording(rec, true_active())), opt,
                   [&](const Decision& d) { seen.push_back(d); });
    REQUIRE(r.decisions.size() == 24);
    CHECK(seen.size() == 24);
    CHECK(r.latency.windows == 24);
    CHECK(r.latency.dropped == 0);
    CHECK(r.warnings.empty());
    const auto offline = offline_causal_decisions(sntdf_lda(), rec, true_active());
    REQUIRE(offline.size() == 24);
    int correct = 0;
    for (std::size_t i = 0; i < 24; ++i) {
      CHECK(r.decisions[i].window == i);
      CHECK(r.decisions[i].timestamp_ms == doctest::Approx(250.0 * (i + 1)));
      CHECK(r.decisions[i].gesture == offline[i]);
      CHECK(r.decisions[i].processing_ms >= 0.0);
      correct += r.decisions[i].gesture == index_of(Gesture::HC);
    }
    CHECK(correct > 12);
  }

  TEST_CASE("majority decision matches the replayed gesture") {
    for (Gesture g : {Gesture::TU, Gesture::PCE, Gesture::WE, Gesture::RD}) {
      const Recording rec = forearm_trial(g, Orientation::Rest, 4);
      StreamOptions opt;
      opt.overflow = OverflowPolicy::Block;
      const StreamResult r = run_stream(sntdf_lda(), memory_source(frame_recording(rec, true_active(), 37)), opt);
      std::vector<int> votes(12, 0);
      for (const auto& d : r.decisions) ++votes[d.gesture];
      CHECK(std::max_element(votes.begin(), votes.end()) - votes.begin() == index_of(g));
    }
  }

  TEST_CASE("leftover samples are reported") {
    const Recording rec = forearm_trial(Gesture::IL, Orientation::Rest, 1);
    StreamOptions opt;
    opt.overflow = OverflowPolicy::Block;
    const StreamResult r = run_stream(sntdf_lda(), memory_source(frame_recording(rec, {1500, 2100})), opt);
    CHECK(r.decisions.size() == 2);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("100") != std::string::npos);
  }

  TEST_CASE("channel count must match the model") {
    const Recording full = *testing::synth_subject().find({1, Gesture::IL, Orientation::Rest, 1});
    CHECK(code_of([&] { run_stream(sntdf_lda(), memory_source(frame_recording(full, {0, 1000}))); }) ==
          ErrorCode::ChannelMismatch);
    CHECK(code_of([&] { offline_causal_decisions(sntdf_lda(), full, {0, 1000}); }) ==
          ErrorCode::ChannelMismatch);
  }

  TEST_CASE("truncated stream is a desync") {
    const Recording rec = forearm_trial(Gesture::IL, Orientation::Rest, 1);
    auto bytes = frame_recording(rec, {1500, 2000});
    bytes.resize(bytes.size() - 3);
    CHECK(code_of([&] { run_stream(sntdf_lda(), memory_source(bytes)); }) == ErrorCode::FrameDesync);
  }

  TEST_CASE("slow inference drops the oldest windows") {
    const Recording rec = forearm_trial(Gesture::HO, Orientation::Rest, 1);
    StreamOptions opt;
    opt.overflow = OverflowPolicy::DropOldest;
    std::size_t calls = 0;
    const StreamResult r = run_stream(sntdf_lda(), memory_source(frame_recording(rec, true_active()), 1 << 16), opt,
                                      [&](const Decision&) {
                                        if (calls++ == 0) std::this_thread::sleep_for(std::chrono::milliseconds(300));
                                      });
    CHECK(r.latency.dropped > 0);
    CHECK(r.decisions.size() + r.latency.dropped == 24);
    CHECK(r.decisions.size() >= 4);
    CHECK(r.decisions.back().window == 23);
    for (std::size_t i = 1; i < r.decisions.size(); ++i) CHECK(r.decisions[i].window > r.decisions[i - 1].window);
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings[0].find("dropped") != std::string::npos);

    opt.overflow = OverflowPolicy::Block;
    calls = 0;
    const StreamResult b = run_stream(sntdf_lda(), memory_source(frame_recording(rec, true_active()), 1 << 16), opt,
                                      [&](const Decision&) {
                                        if (calls++ == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
                                      });
    CHECK(b.decisions.size() == 24);
    CHECK(b.latency.dropped == 0);
  }

  TEST_CASE("frame_recording quantizes to counts") {
    Recording rec({1, Gesture::TU, Orientation::Rest, 1}, Layout::Forearm4, 2, 3, 1000.0, 0.5);
    rec.samples = {1.0, -1.5, 2.2, 0.0, 3.0, -0.4};
    const auto bytes = frame_recording(rec, {0, 3}, 2);
    FrameDecoder d;
    const auto frames = d.feed(bytes);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].n_samples == 2);
    CHECK(frames[1].n_samples == 1);
    CHECK(frames[0].samples == std::vector<std::int16_t>{2, 0, -3, 6});
    CHECK(frames[1].samples == std::vector<std::int16_t>{4, -1});
  }
}
