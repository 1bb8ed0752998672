#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "emgo/classifiers.hpp"
#include "emgo/types.hpp"

namespace emgo {

// Wire format, little-endian:
//   magic(2B) = 0xE5 0x47 | n_channels(1B) | n_samples(2B) | int16[n_samples * n_channels]
// with samples interleaved by channel (t0c0 t0c1 ... t1c0 ...).
inline constexpr std::array<std::uint8_t, 2> kFrameMagic = {0xE5, 0x47};
inline constexpr std::size_t kFrameHeaderBytes = 5;

struct Frame {
  std::uint8_t n_channels = 0;
  std::uint16_t n_samples = 0;
  std::vector<std::int16_t> samples;  // interleaved
};

std::vector<std::uint8_t> encode_frame(const Frame& f);

// Incremental decoder; bytes may arrive split at any position. Throws
// FrameDesync naming the absolute byte offset of the bad header.
class FrameDecoder {
 public:
  std::vector<Frame> feed(std::span<const std::uint8_t> bytes);
  std::size_t offset() const { return consumed_; }
  bool idle() const { return pending_.empty(); }

 private:
  std::vector<std::uint8_t> pending_;
  std::size_t consumed_ = 0;
};

// Frames `span` of a recording as raw counts, `per_frame` samples per frame.
std::vector<std::uint8_t> frame_recording(const Recording& rec, Span span,
                                          std::size_t per_frame = 50);

struct Decision {
  std::size_t window = 0;
  double timestamp_ms = 0.0;  // stream time at the end of the window
  int gesture = 0;
  double processing_ms = 0.0;
};

struct LatencyReport {
  static constexpr double kBudgetMs = 300.0;
  static constexpr double kWindowMs = 250.0;
  static constexpr double kProcessingBudgetMs = kBudgetMs - kWindowMs;

  std::size_t windows = 0;
  double min_ms = 0, mean_ms = 0, p95_ms = 0, p99_ms = 0, max_ms = 0;
  std::size_t violations = 0;  // windows whose processing exceeded 50 ms
  std::size_t dropped = 0;     // windows discarded on buffer overflow
};

LatencyReport latency_report(std::span<const double> processing_ms, std::size_t dropped = 0);

// Causal per-window inference with persistent filter state.
class WindowClassifier {
 public:
  WindowClassifier(const TrainedModel& model, double gain);

  // `counts` is channel-major raw counts for one window.
  int classify(std::span<const double> counts, std::size_t window_index);
  std::size_t channels() const { return channels_; }

 private:
  const TrainedModel& model_;
  double gain_;
  std::size_t channels_;
  CausalFilterBank filters_;
  std::vector<double> scratch_;
};

enum class OverflowPolicy { DropOldest, Block };

struct StreamOptions {
  std::size_t buffer_windows = 4;
  OverflowPolicy overflow = OverflowPolicy::DropOldest;
  double gain = 1.0;
  double sample_rate = kSampleRate;
};

struct StreamResult {
  std::vector<Decision> decisions;
  LatencyReport latency;
  std::vector<std::string> warnings;
};

// Returns bytes read into `buf`, 0 at end of stream.
using ByteSource = std::function<std::size_t(std::span<std::uint8_t> buf)>;
using DecisionSink = std::function<void(const Decision&)>;

// Two stages: an acquisition thread decodes frames and queues complete
// windows into a bounded buffer; the calling thread runs inference.
// Throws FrameDesync or ChannelMismatch.
StreamResult run_stream(const TrainedModel& model, const ByteSource& source,
                        const StreamOptions& opt = {}, const DecisionSink& sink = {});

// Offline reference: causal filtering of the whole span in one pass, then
// disjoint windows, features and prediction.
std::vector<int> offline_causal_decisions(const TrainedModel& model, const Recording& rec,
                                          Span span);

}  // namespace emgo
