#include "emgo/segment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emgo/error.hpp"

namespace emgo {

namespace {

// Channel-averaged centred moving RMS, after removing each channel's
// baseline mean.
std::vector<double> envelope(const Recording& rec, std::size_t width, std::size_t baseline) {
  const std::size_t n = rec.n_samples;
  std::vector<double> env(n, 0.0);
  std::vector<double> prefix(n + 1);
  const std::size_t half = width / 2;
  for (std::size_t c = 0; c < rec.n_channels; ++c) {
    auto x = rec.channel(c);
    double mean = 0.0;
    for (std::size_t t = 0; t < baseline; ++t) mean += x[t];
    mean /= static_cast<double>(baseline);
    prefix[0] = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = x[t] - mean;
      prefix[t + 1] = prefix[t] + v * v;
    }
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t lo = t >= half ? t - half : 0;
      const std::size_t hi = std::min(n, t + (width - half));
      env[t] += std::sqrt(std::max(0.0, prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo));
    }
  }
  for (double& e : env) e /= static_cast<double>(rec.n_channels);
  return env;
}

}  // namespace

Segment detect_active_segment(const Recording& rec, const SegmentOptions& opt) {
  const double fs = rec.sample_rate;
  const std::size_t n = rec.n_samples;
  const auto samples = [fs](double s) { return static_cast<std::size_t>(std::lround(s * fs)); };
  const std::size_t baseline = std::min(n, samples(opt.baseline_s));
  const std::size_t width = std::max<std::size_t>(1, samples(opt.rms_window_s));
  const std::size_t hold = std::max<std::size_t>(1, samples(opt.min_hold_s));
  if (rec.n_channels == 0 || baseline == 0 || n < baseline + hold)
    throw Error(ErrorCode::NoActivityDetected, to_string(rec.key) + ": recording too short");

  const std::vector<double> env = envelope(rec, width, baseline);
  double mean = 0.0;
  for (std::size_t t = 0; t < baseline; ++t) mean += env[t];
  mean /= static_cast<double>(baseline);
  double var = 0.0;
  for (std::size_t t = 0; t < baseline; ++t) var += (env[t] - mean) * (env[t] - mean);
  const double sd = std::sqrt(var / static_cast<double>(baseline));
  const double threshold = mean + opt.k_sigma * sd;

  std::size_t onset = n;
  for (std::size_t t = baseline, run = 0; t < n; ++t) {
    run = env[t] > threshold ? run + 1 : 0;
    if (run == hold) {
      onset = t + 1 - hold;
      break;
    }
  }
  std::size_t offset = 0;
  for (std::size_t t = n, run = 0; t-- > baseline;) {
    run = env[t] > threshold ? run + 1 : 0;
    if (run == hold) {
      offset = t + hold;
      break;
    }
  }
  if (onset == n || offset <= onset)
    throw Error(ErrorCode::NoActivityDetected, to_string(rec.key));

  Segment seg;
  seg.rest = {0, onset};
  seg.active = {onset, offset};
  const double active_s = static_cast<double>(seg.active.length()) / fs;
  if (active_s < opt.expected_min_s || active_s > opt.expected_max_s)
    seg.warnings.push_back(to_string(rec.key) + ": active length " + std::to_string(active_s) +
                           " s outside expected range");
  return seg;
}

std::vector<Window> make_windows(const Recording& rec, const Segment& seg, std::size_t window_len) {
  const Span a = seg.active;
  if (a.end > rec.n_samples || a.length() < window_len)
    throw Error(ErrorCode::ActiveTooShort, to_string(rec.key) + ": active span of " +
                                               std::to_string(a.length()) + " samples");
  const std::size_t count = a.length() / window_len;
  std::vector<Window> out(count);
  for (std::size_t w = 0; w < count; ++w) {
    Window& win = out[w];
    win.key = rec.key;
    win.index = w;
    win.n_channels = rec.n_channels;
    win.length = window_len;
    win.samples.resize(rec.n_channels * window_len);
    const std::size_t start = a.begin + w * window_len;
    for (std::size_t c = 0; c < rec.n_channels; ++c) {
      auto ch = rec.channel(c);
      std::copy(ch.begin() + start, ch.begin() + start + window_len,
                win.samples.begin() + c * window_len);
    }
  }
  return out;
}

}  // namespace emgo
