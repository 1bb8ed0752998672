#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emgo/dataset.hpp"
#include "emgo/types.hpp"

namespace emgo {

double rms(std::span<const double> x);

// sqrt(raw^2 - noise^2); throws SignalBelowNoise when raw <= noise.
double corrected_rms(double raw_rms, double noise_rms);

// Signal-to-noise ratio in dB from active-span and rest-span RMS.
double snr_db(double raw_rms, double noise_rms);

struct WelchOptions {
  std::size_t segment = 256;
  double overlap = 0.5;
};

struct Psd {
  std::vector<double> freq;
  std::vector<double> power;  // one-sided density, units^2 / Hz
  double df = 0.0;
};

// Hamming-windowed Welch estimate with mean averaging. sum(power) * df
// equals the mean-square value of x up to window leakage.
Psd welch_psd(std::span<const double> x, double sample_rate, const WelchOptions& opt = {});

// 10 log10 of band power in [20, Nyquist] over band power in [0, 20).
double smr(std::span<const double> x, double sample_rate);
double smr_from_psd(const Psd& psd);

struct ChannelQuality {
  double raw_rms = 0.0;
  double noise_rms = 0.0;
  double smr = 0.0;
  bool below_noise = false;
  double snr_db() const;  // NaN when below_noise
  double corrected() const;
};

struct TrialQuality {
  TrialKey key;
  std::vector<ChannelQuality> channels;
};

// Indices of an unfiltered recording given its rest/active segmentation.
TrialQuality trial_quality(const Recording& rec, const Segment& seg);

// Forearm-to-elbow ratio of noise-corrected RMS, each side averaged over its
// channels and over the trials of `gesture`. Below-noise channels propagate
// SignalBelowNoise.
double fer(std::span<const TrialQuality> forearm, std::span<const TrialQuality> elbow,
           Gesture gesture);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  std::size_t n = 0;
};
MeanStd mean_std(std::span<const double> v);

struct GestureQuality {
  Gesture gesture = Gesture::TU;
  MeanStd snr[2];  // indexed by ElectrodePosition
  MeanStd smr[2];
  double snr_p = 1.0;  // one-way ANOVA elbow vs forearm
  double smr_p = 1.0;
  MeanStd fer;         // across subjects
  std::size_t below_noise = 0;
};

struct QualityReport {
  std::vector<GestureQuality> rows;
};

// Full-8 dataset only. SNR and SMR are per-channel values averaged over a
// ring's channels, then pooled across subjects and trials.
QualityReport assess_quality(const Dataset& ds);

}  // namespace emgo
