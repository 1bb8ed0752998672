#include "emgo/quality.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "emgo/anova.hpp"
#include "emgo/error.hpp"
#include "emgo/segment.hpp"

namespace emgo {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

constexpr double kMotionBandHz = 20.0;

}  // namespace

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

double corrected_rms(double raw_rms, double noise_rms) {
  if (!(raw_rms > noise_rms))
    throw Error(ErrorCode::SignalBelowNoise, "raw RMS " + std::to_string(raw_rms) +
                                                 " <= noise RMS " + std::to_string(noise_rms));
  return std::sqrt(raw_rms * raw_rms - noise_rms * noise_rms);
}

double snr_db(double raw_rms, double noise_rms) {
  if (!(noise_rms > 0.0)) throw Error(ErrorCode::SignalBelowNoise, "noise RMS must be positive");
  return 20.0 * std::log10(corrected_rms(raw_rms, noise_rms) / noise_rms);
}

Psd welch_psd(std::span<const double> x, double sample_rate, const WelchOptions& opt) {
  const std::size_t seg = opt.segment;
  if (seg < 2 || x.size() < seg)
    throw Error(ErrorCode::TooShort, std::to_string(x.size()) + " samples, segment " +
                                         std::to_string(seg));
  const auto overlap = static_cast<std::size_t>(std::floor(opt.overlap * static_cast<double>(seg)));
  const std::size_t hop = std::max<std::size_t>(1, seg - std::min(overlap, seg - 1));

  std::vector<double> window(seg);
  double u = 0.0;
  for (std::size_t i = 0; i < seg; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(seg));
    u += window[i] * window[i];
  }

  const std::size_t bins = seg / 2 + 1;
  Psd psd;
  psd.df = sample_rate / static_cast<double>(seg);
  psd.freq.resize(bins);
  psd.power.assign(bins, 0.0);
  for (std::size_t k = 0; k < bins; ++k) psd.freq[k] = static_cast<double>(k) * psd.df;

  RealFft fft(seg);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + seg <= x.size(); start += hop, ++segments) {
    double* in = fft.input();
    for (std::size_t i = 0; i < seg; ++i) in[i] = x[start + i] * window[i];
    fft.execute();
    for (std::size_t k = 0; k < bins; ++k) psd.power[k] += fft.power(k);
  }
  const double scale = 1.0 / (sample_rate * u * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (seg % 2 == 0 && k == bins - 1);
    psd.power[k] *= edge ? scale : 2.0 * scale;
  }
  return psd;
}

double smr_from_psd(const Psd& psd) {
  double low = 0.0, high = 0.0;
  for (std::size_t k = 0; k < psd.freq.size(); ++k)
    (psd.freq[k] < kMotionBandHz ? low : high) += psd.power[k];
  if (!(low > 0.0) || !(high > 0.0))
    throw Error(ErrorCode::DegenerateSpectrum, "empty band in signal-to-motion ratio");
  return 10.0 * std::log10(high / low);
}

double smr(std::span<const double> x, double sample_rate) {
  return smr_from_psd(welch_psd(x, sample_rate));
}

double ChannelQuality::snr_db() const {
  if (below_noise) return std::numeric_limits<double>::quiet_NaN();
  return emgo::snr_db(raw_rms, noise_rms);
}

double ChannelQuality::corrected() const { return corrected_rms(raw_rms, noise_rms); }

TrialQuality trial_quality(const Recording& rec, const Segment& seg) {
  TrialQuality q;
  q.key = rec.key;
  q.channels.resize(rec.n_channels);
  for (std::size_t c = 0; c < rec.n_channels; ++c) {
    auto ch = rec.channel(c);
    auto active = ch.subspan(seg.active.begin, seg.active.length());
    ChannelQuality& cq = q.channels[c];
    cq.raw_rms = rms(active);
    cq.noise_rms = rms(ch.subspan(seg.rest.begin, seg.rest.length()));
    cq.below_noise = !(cq.raw_rms > cq.noise_rms) || !(cq.noise_rms > 0.0);
    try {
      cq.smr = smr(active, rec.sample_rate);
    } catch (const Error&) {
      cq.smr = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return q;
}

double fer(std::span<const TrialQuality> forearm, std::span<const TrialQuality> elbow,
           Gesture gesture) {
  auto side_mean = [gesture](std::span<const TrialQuality> side) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : side) {
      if (t.key.gesture != gesture) continue;
      for (const auto& c : t.channels) {
        sum += c.corrected();
        ++n;
      }
    }
    if (n == 0) throw Error(ErrorCode::InvalidConfig, "no trials of gesture for FER");
    return sum / static_cast<double>(n);
  };
  return side_mean(forearm) / side_mean(elbow);
}

MeanStd mean_std(std::span<const double> v) {
  MeanStd r;
  r.n = v.size();
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

QualityReport assess_quality(const Dataset& ds) {
  const auto& recs = ds.recordings;
  std::vector<TrialQuality> per_trial(recs.size());
  std::vector<std::exception_ptr> errors(recs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(recs.size()); ++i) {
    try {
      if (recs[i].n_channels != kFullChannels)
        throw Error(ErrorCode::WrongLayout, "quality assessment needs 8-channel recordings");
      per_trial[i] = trial_quality(recs[i], detect_active_segment(recs[i]));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  auto ring = [](const TrialQuality& t, ElectrodePosition p) {
    TrialQuality r;
    r.key = t.key;
    const std::size_t off = channel_offset(p);
    r.channels.assign(t.channels.begin() + off, t.channels.begin() + off + kChannelsPerPosition);
    return r;
  };

  QualityReport report;
  for (Gesture g : kAllGestures) {
    GestureQuality row;
    row.gesture = g;
    std::vector<double> snr[2], smr_v[2];
    std::map<int, std::pair<std::vector<TrialQuality>, std::vector<TrialQuality>>> by_subject;
    for (const auto& t : per_trial) {
      if (t.key.gesture != g) continue;
      for (int p = 0; p < 2; ++p) {
        const auto r = ring(t, static_cast<ElectrodePosition>(p));
        double s = 0.0, m = 0.0;
        std::size_t ns = 0, nm = 0;
        for (const auto& c : r.channels) {
          if (c.below_noise) {
            ++row.below_noise;
          } else {
            s += c.snr_db();
            ++ns;
          }
          if (std::isfinite(c.smr)) {
            m += c.smr;
            ++nm;
          }
        }
        if (ns) snr[p].push_back(s / static_cast<double>(ns));
        if (nm) smr_v[p].push_back(m / static_cast<double>(nm));
      }
      auto& pair = by_subject[t.key.subject];
      pair.first.push_back(ring(t, ElectrodePosition::Forearm));
      pair.second.push_back(ring(t, ElectrodePosition::Elbow));
    }
    for (int p = 0; p < 2; ++p) {
      row.snr[p] = mean_std(snr[p]);
      row.smr[p] = mean_std(smr_v[p]);
    }
    auto two_group_p = [](const std::vector<double>& a, const std::vector<double>& b) {
      if (a.size() < 2 || a.size() != b.size()) return 1.0;
      AnovaTable t;
      t.factors = {"position"};
      for (double v : a) t.levels.push_back({0}), t.values.push_back(v);
      for (double v : b) t.levels.push_back({1}), t.values.push_back(v);
      return anova(t).effects[0].p;
    };
    row.snr_p = two_group_p(snr[0], snr[1]);
    row.smr_p = two_group_p(smr_v[0], smr_v[1]);

    std::vector<double> fers;
    for (const auto& [subject, sides] : by_subject) {
      try {
        fers.push_back(fer(sides.first, sides.second, g));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SignalBelowNoise) throw;
      }
    }
    row.fer = mean_std(fers);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace emgo
