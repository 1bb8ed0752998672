#include "emgo/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "emgo/error.hpp"

namespace emgo {

namespace {

enum class Kind { LowPass, HighPass };

Biquad rbj_section(Kind kind, double f0, double fs, double q) {
  const double w0 = 2.0 * std::numbers::pi * f0 / fs;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  if (kind == Kind::LowPass) {
    s.b0 = (1.0 - cw) / 2.0 / a0;
    s.b1 = (1.0 - cw) / a0;
    s.b2 = s.b0;
  } else {
    s.b0 = (1.0 + cw) / 2.0 / a0;
    s.b1 = -(1.0 + cw) / a0;
    s.b2 = s.b0;
  }
  s.a1 = -2.0 * cw / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

Biquad first_order_section(Kind kind, double f0, double fs) {
  const double k = std::tan(std::numbers::pi * f0 / fs);
  Biquad s;
  if (kind == Kind::LowPass) {
    s.b0 = k / (1.0 + k);
    s.b1 = s.b0;
  } else {
    s.b0 = 1.0 / (1.0 + k);
    s.b1 = -s.b0;
  }
  s.a1 = (k - 1.0) / (k + 1.0);
  return s;
}

// Butterworth of order n as a cascade; pole pairs sit at angle
// |2k+1-n| * pi / (2n) from the negative real axis.
void append_butterworth(std::vector<Biquad>& out, Kind kind, int n, double f0, double fs) {
  for (int k = 0; k < n / 2; ++k) {
    const double angle = std::abs(2 * k + 1 - n) * std::numbers::pi / (2.0 * n);
    out.push_back(rbj_section(kind, f0, fs, 1.0 / (2.0 * std::cos(angle))));
  }
  if (n % 2) out.push_back(first_order_section(kind, f0, fs));
}

void run_offline(BiquadCascade& cascade, std::span<double> x) {
  cascade.reset();
  cascade.process(x);
  std::reverse(x.begin(), x.end());
  cascade.reset();
  cascade.process(x);
  std::reverse(x.begin(), x.end());
}

std::vector<double> apply(BiquadCascade cascade, std::span<const double> x, FilterMode mode) {
  std::vector<double> y(x.begin(), x.end());
  if (mode == FilterMode::Offline)
    run_offline(cascade, y);
  else
    cascade.process(y);
  return y;
}

void filter_channel(std::span<double> x, const BiquadCascade& band, const BiquadCascade& notch,
                    FilterMode mode) {
  BiquadCascade b = band;
  BiquadCascade n = notch;
  if (mode == FilterMode::Offline) {
    run_offline(b, x);
    run_offline(n, x);
  } else {
    b.process(x);
    n.process(x);
  }
}

}  // namespace

void FilterSpec::validate() const {
  const double nyquist = sample_rate / 2.0;
  if (!(sample_rate > 0.0)) throw Error(ErrorCode::InvalidSpec, "sample rate must be positive");
  if (!(band_low > 0.0 && band_low < band_high && band_high < nyquist))
    throw Error(ErrorCode::InvalidSpec, "need 0 < band_low < band_high < fs/2");
  if (band_order < 1 || band_order > 12)
    throw Error(ErrorCode::InvalidSpec, "band_order must be in 1..12");
  if (!(notch_freq > band_low && notch_freq < band_high))
    throw Error(ErrorCode::InvalidSpec, "notch frequency must lie inside the band");
  if (!(notch_bandwidth > 0.0 && notch_bandwidth < notch_freq))
    throw Error(ErrorCode::InvalidSpec, "notch bandwidth must be in (0, notch_freq)");
}

double Biquad::magnitude(double freq_hz, double sample_rate) const {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);
  const std::complex<double> z2 = z1 * z1;
  return std::abs((b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2));
}

double BiquadCascade::magnitude(double freq_hz, double sample_rate) const {
  double m = 1.0;
  for (const auto& s : sections_) m *= s.magnitude(freq_hz, sample_rate);
  return m;
}

BiquadCascade design_bandpass(const FilterSpec& spec) {
  spec.validate();
  std::vector<Biquad> sections;
  append_butterworth(sections, Kind::HighPass, spec.band_order, spec.band_low, spec.sample_rate);
  append_butterworth(sections, Kind::LowPass, spec.band_order, spec.band_high, spec.sample_rate);
  return BiquadCascade(std::move(sections));
}

BiquadCascade design_notch(const FilterSpec& spec) {
  spec.validate();
  const double w0 = 2.0 * std::numbers::pi * spec.notch_freq / spec.sample_rate;
  const double q = spec.notch_freq / spec.notch_bandwidth;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = s.b0;
  s.a1 = s.b1;
  s.a2 = (1.0 - alpha) / a0;
  return BiquadCascade({s});
}

std::vector<double> bandpass(std::span<const double> x, const FilterSpec& spec) {
  return apply(design_bandpass(spec), x, spec.mode);
}

std::vector<double> notch50(std::span<const double> x, const FilterSpec& spec) {
  return apply(design_notch(spec), x, spec.mode);
}

Recording preprocess(const Recording& rec, const FilterSpec& spec) {
  FilterSpec s = spec;
  s.sample_rate = rec.sample_rate;
  const BiquadCascade band = design_bandpass(s);
  const BiquadCascade notch = design_notch(s);
  Recording out = rec;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(out.n_channels); ++c)
    filter_channel(out.channel(c), band, notch, s.mode);
  return out;
}

Recording preprocess_serial(const Recording& rec, const FilterSpec& spec) {
  FilterSpec s = spec;
  s.sample_rate = rec.sample_rate;
  const BiquadCascade band = design_bandpass(s);
  const BiquadCascade notch = design_notch(s);
  Recording out = rec;
  for (std::size_t c = 0; c < out.n_channels; ++c) filter_channel(out.channel(c), band, notch, s.mode);
  return out;
}

CausalFilterBank::CausalFilterBank(std::size_t n_channels, const FilterSpec& spec)
    : bandpass_(n_channels, design_bandpass(spec)), notch_(n_channels, design_notch(spec)) {}

void CausalFilterBank::process(std::span<double> block, std::size_t length) {
  for (std::size_t c = 0; c < bandpass_.size(); ++c) {
    auto ch = block.subspan(c * length, length);
    bandpass_[c].process(ch);
    notch_[c].process(ch);
  }
}

void CausalFilterBank::reset() {
  for (auto& b : bandpass_) b.reset();
  for (auto& n : notch_) n.reset();
}

}  // namespace emgo
