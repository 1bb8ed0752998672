#include "emgo/stream.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "emgo/error.hpp"

namespace emgo {

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + f.samples.size() * 2);
  out.push_back(kFrameMagic[0]);
  out.push_back(kFrameMagic[1]);
  out.push_back(f.n_channels);
  out.push_back(static_cast<std::uint8_t>(f.n_samples & 0xFF));
  out.push_back(static_cast<std::uint8_t>(f.n_samples >> 8));
  for (std::int16_t s : f.samples) {
    const auto u = static_cast<std::uint16_t>(s);
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  }
  return out;
}

std::vector<Frame> FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  std::vector<Frame> frames;
  std::size_t pos = 0;
  while (pending_.size() - pos >= kFrameHeaderBytes) {
    const std::uint8_t* h = pending_.data() + pos;
    if (h[0] != kFrameMagic[0] || h[1] != kFrameMagic[1])
      throw Error(ErrorCode::FrameDesync, "bad frame magic at byte offset " + std::to_string(consumed_));
    Frame f;
    f.n_channels = h[2];
    f.n_samples = static_cast<std::uint16_t>(h[3] | (h[4] << 8));
    if (f.n_channels == 0)
      throw Error(ErrorCode::FrameDesync, "zero-channel frame at byte offset " + std::to_string(consumed_));
    const std::size_t payload = static_cast<std::size_t>(f.n_channels) * f.n_samples * 2;
    if (pending_.size() - pos < kFrameHeaderBytes + payload) break;
    const std::uint8_t* d = h + kFrameHeaderBytes;
    f.samples.resize(payload / 2);
    for (std::size_t i = 0; i < f.samples.size(); ++i)
      f.samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(d[2 * i] | (d[2 * i + 1] << 8)));
    pos += kFrameHeaderBytes + payload;
    consumed_ += kFrameHeaderBytes + payload;
    frames.push_back(std::move(f));
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos));
  return frames;
}

namespace {
std::int16_t to_count(double v, double gain) {
  const double c = std::nearbyint(v / gain);
  return static_cast<std::int16_t>(std::clamp(c, -32768.0, 32767.0));
}
}  // namespace

std::vector<std::uint8_t> frame_recording(const Recording& rec, Span span, std::size_t per_frame) {
  if (rec.n_channels == 0 || rec.n_channels > 255)
    throw Error(ErrorCode::ChannelMismatch, "cannot frame " + std::to_string(rec.n_channels) + " channels");
  per_frame = std::clamp<std::size_t>(per_frame, 1, 65535);
  span.end = std::min(span.end, rec.n_samples);
  std::vector<std::uint8_t> out;
  for (std::size_t t0 = span.begin; t0 < span.end; t0 += per_frame) {
    const std::size_t n = std::min(per_frame, span.end - t0);
    Frame f;
    f.n_channels = static_cast<std::uint8_t>(rec.n_channels);
    f.n_samples = static_cast<std::uint16_t>(n);
    f.samples.reserve(n * rec.n_channels);
    for (std::size_t t = t0; t < t0 + n; ++t)
      for (std::size_t c = 0; c < rec.n_channels; ++c)
        f.samples.push_back(to_count(rec.samples[c * rec.n_samples + t], rec.gain));
    const auto bytes = encode_frame(f);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

LatencyReport latency_report(std::span<const double> ms, std::size_t dropped) {
  LatencyReport r;
  r.windows = ms.size();
  r.dropped = dropped;
  if (ms.empty()) return r;
  std::vector<double> s(ms.begin(), ms.end());
  std::sort(s.begin(), s.end());
  auto rank = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s.size())));
    return s[std::clamp<std::size_t>(idx, 1, s.size()) - 1];
  };
  r.min_ms = s.front();
  r.max_ms = s.back();
  double sum = 0.0;
  for (double v : s) sum += v;
  r.mean_ms = sum / static_cast<double>(s.size());
  r.p95_ms = rank(0.95);
  r.p99_ms = rank(0.99);
  r.violations = static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](double v) { return v > LatencyReport::kProcessingBudgetMs; }));
  return r;
}

namespace {
FilterSpec causal(FilterSpec s) {
  s.mode = FilterMode::Streaming;
  return s;
}
}  // namespace

WindowClassifier::WindowClassifier(const TrainedModel& model, double gain)
    : model_(model),
      gain_(gain),
      channels_(model.pipeline.n_channels),
      filters_(model.pipeline.n_channels, causal(model.pipeline.filter)) {}

int WindowClassifier::classify(std::span<const double> counts, std::size_t window_index) {
  if (counts.size() % channels_ != 0)
    throw Error(ErrorCode::ChannelMismatch, "window size is not a multiple of the channel count");
  const std::size_t len = counts.size() / channels_;
  scratch_.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) scratch_[i] = counts[i] * gain_;
  filters_.process(scratch_, len);
  Window w;
  w.index = window_index;
  w.n_channels = channels_;
  w.length = len;
  w.samples = scratch_;
  const FeatureVector fv = extract(model_.pipeline.method, w, model_.pipeline.features);
  return predict(model_, Eigen::Map<const Eigen::VectorXd>(fv.values.data(),
                                                           static_cast<Eigen::Index>(fv.values.size())));
}

namespace {

using Clock = std::chrono::steady_clock;

struct PendingWindow {
  std::size_t index = 0;
  std::vector<double> counts;  // channel-major
  Clock::time_point completed;
};

class WindowQueue {
 public:
  WindowQueue(std::size_t capacity, OverflowPolicy policy) : cap_(std::max<std::size_t>(capacity, 1)), policy_(policy) {}

  // Returns the number of windows dropped to make room.
  std::size_t push(PendingWindow w) {
    std::unique_lock lk(m_);
    std::size_t dropped = 0;
    if (policy_ == OverflowPolicy::Block) {
      not_full_.wait(lk, [&] { return q_.size() < cap_ || stopped_; });
      if (stopped_) return 0;
    } else {
      while (q_.size() >= cap_) {
        q_.pop_front();
        ++dropped;
      }
    }
    q_.push_back(std::move(w));
    not_empty_.notify_one();
    return dropped;
  }

  std::optional<PendingWindow> pop() {
    std::unique_lock lk(m_);
    not_empty_.wait(lk, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    PendingWindow w = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return w;
  }

  void close() {
    std::lock_guard lk(m_);
    closed_ = true;
    not_empty_.notify_all();
  }

  void stop() {
    std::lock_guard lk(m_);
    stopped_ = true;
    not_full_.notify_all();
  }

  bool stopped() {
    std::lock_guard lk(m_);
    return stopped_;
  }

 private:
  std::size_t cap_;
  OverflowPolicy policy_;
  std::mutex m_;
  std::condition_variable not_empty_, not_full_;
  std::deque<PendingWindow> q_;
  bool closed_ = false;
  bool stopped_ = false;
};

}  // namespace

StreamResult run_stream(const TrainedModel& model, const ByteSource& source, const StreamOptions& opt,
                        const DecisionSink& sink) {
  const std::size_t channels = model.pipeline.n_channels;
  const std::size_t len = kWindowSamples;
  WindowQueue queue(opt.buffer_windows, opt.overflow);
  std::exception_ptr acq_error;
  std::size_t dropped = 0;
  std::size_t leftover = 0;

  std::thread acquisition([&] {
    try {
      FrameDecoder decoder;
      std::vector<std::uint8_t> buf(4096);
      std::vector<double> acc(channels * len);
      std::size_t filled = 0, index = 0;
      while (!queue.stopped()) {
        const std::size_t n = source(buf);
        if (n == 0) break;
        for (const Frame& f : decoder.feed({buf.data(), n})) {
          if (f.n_channels != channels)
            throw Error(ErrorCode::ChannelMismatch, "stream has " + std::to_string(f.n_channels) +
                                                        " channels, model expects " + std::to_string(channels));
          for (std::size_t t = 0; t < f.n_samples; ++t) {
            for (std::size_t c = 0; c < channels; ++c) acc[c * len + filled] = f.samples[t * channels + c];
            if (++filled == len) {
              dropped += queue.push({index++, acc, Clock::now()});
              filled = 0;
            }
          }
        }
      }
      leftover = filled;
      if (!decoder.idle())
        throw Error(ErrorCode::FrameDesync, "stream ended inside a frame at byte offset " +
                                                std::to_string(decoder.offset()));
    } catch (...) {
      acq_error = std::current_exception();
    }
    queue.close();
  });

  StreamResult result;
  std::exception_ptr inf_error;
  try {
    WindowClassifier clf(model, opt.gain);
    std::vector<double> times;
    while (auto w = queue.pop()) {
      Decision d;
      d.window = w->index;
      d.timestamp_ms = static_cast<double>((w->index + 1) * len) * 1000.0 / opt.sample_rate;
      d.gesture = clf.classify(w->counts, w->index);
      d.processing_ms = std::chrono::duration<double, std::milli>(Clock::now() - w->completed).count();
      times.push_back(d.processing_ms);
      if (sink) sink(d);
      result.decisions.push_back(d);
    }
    result.latency = latency_report(times, dropped);
  } catch (...) {
    inf_error = std::current_exception();
    queue.stop();
    while (queue.pop()) {
    }
  }
  acquisition.join();
  if (acq_error) std::rethrow_exception(acq_error);
  if (inf_error) std::rethrow_exception(inf_error);
  if (dropped > 0)
    result.warnings.push_back("buffer overflow: dropped " + std::to_string(dropped) + " oldest windows");
  if (leftover > 0)
    result.warnings.push_back("ignored " + std::to_string(leftover) + " trailing samples short of a window");
  return result;
}

std::vector<int> offline_causal_decisions(const TrainedModel& model, const Recording& rec, Span span) {
  const std::size_t channels = model.pipeline.n_channels;
  if (rec.n_channels != channels)
    throw Error(ErrorCode::ChannelMismatch, "recording has " + std::to_string(rec.n_channels) +
                                                " channels, model expects " + std::to_string(channels));
  span.end = std::min(span.end, rec.n_samples);
  const std::size_t n = span.length();
  std::vector<double> block(channels * n);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t t = 0; t < n; ++t)
      block[c * n + t] = static_cast<double>(to_count(rec.samples[c * rec.n_samples + span.begin + t], rec.gain)) * rec.gain;
  CausalFilterBank filters(channels, causal(model.pipeline.filter));
  filters.process(block, n);

  std::vector<int> out;
  for (std::size_t w = 0; (w + 1) * kWindowSamples <= n; ++w) {
    Window win;
    win.index = w;
    win.n_channels = channels;
    win.length = kWindowSamples;
    win.samples.resize(channels * kWindowSamples);
    for (std::size_t c = 0; c < channels; ++c)
      std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(c * n + w * kWindowSamples), kWindowSamples,
                  win.samples.begin() + static_cast<std::ptrdiff_t>(c * kWindowSamples));
    const FeatureVector fv = extract(model.pipeline.method, win, model.pipeline.features);
    out.push_back(predict(model, Eigen::Map<const Eigen::VectorXd>(fv.values.data(),
                                                                   static_cast<Eigen::Index>(fv.values.size()))));
  }
  return out;
}

}  // namespace emgo
