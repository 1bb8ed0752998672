#pragma once

#include <span>
#include <vector>

#include "emgo/types.hpp"

namespace emgo {

enum class FilterMode { Offline, Streaming };

struct FilterSpec {
  double sample_rate = kSampleRate;
  double band_low = 20.0;
  double band_high = 450.0;
  int band_order = 4;  // order of each of the high-pass and low-pass halves
  double notch_freq = 50.0;
  double notch_bandwidth = 2.0;  // -3 dB width in Hz
  FilterMode mode = FilterMode::Offline;

  // Throws InvalidSpec.
  void validate() const;
};

// Second-order section, normalised so a0 == 1. Transposed direct form II.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  double magnitude(double freq_hz, double sample_rate) const;
};

class BiquadCascade {
 public:
  BiquadCascade() = default;
  explicit BiquadCascade(std::vector<Biquad> sections)
      : sections_(std::move(sections)), state_(sections_.size() * 2, 0.0) {}

  double step(double x) {
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      const Biquad& s = sections_[i];
      double& z1 = state_[2 * i];
      double& z2 = state_[2 * i + 1];
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      x = y;
    }
    return x;
  }

  void process(std::span<double> x) {
    for (double& v : x) v = step(v);
  }

  void reset() { std::fill(state_.begin(), state_.end(), 0.0); }

  double magnitude(double freq_hz, double sample_rate) const;
  const std::vector<Biquad>& sections() const { return sections_; }

 private:
  std::vector<Biquad> sections_;
  std::vector<double> state_;
};

// Butterworth high-pass at band_low cascaded with Butterworth low-pass at
// band_high, each of order band_order.
BiquadCascade design_bandpass(const FilterSpec& spec);
BiquadCascade design_notch(const FilterSpec& spec);

// Offline mode runs the cascade forward then backward (zero phase, squared
// magnitude); streaming mode is a single causal pass from zero state.
std::vector<double> bandpass(std::span<const double> x, const FilterSpec& spec);
std::vector<double> notch50(std::span<const double> x, const FilterSpec& spec);

// Band-pass then notch, per channel. Offline kernel parallelises over
// channels with OpenMP; preprocess_serial is the reference path.
Recording preprocess(const Recording& rec, const FilterSpec& spec);
Recording preprocess_serial(const Recording& rec, const FilterSpec& spec);

// Per-channel causal band-pass + notch whose state persists across calls.
// Feeding a signal in arbitrary chunks gives bit-identical output to
// preprocess() with FilterMode::Streaming.
class CausalFilterBank {
 public:
  CausalFilterBank(std::size_t n_channels, const FilterSpec& spec);

  // `block` is channel-major with `length` samples per channel.
  void process(std::span<double> block, std::size_t length);
  void reset();
  std::size_t channels() const { return bandpass_.size(); }

 private:
  std::vector<BiquadCascade> bandpass_;
  std::vector<BiquadCascade> notch_;
};

}  // namespace emgo
