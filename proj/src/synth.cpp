#include "emgo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "emgo/error.hpp"
#include "emgo/filter.hpp"
#include "emgo/quality.hpp"
#include "emgo/rng.hpp"

namespace emgo {

namespace {

constexpr std::uint64_t kStructureSeed = 0x5EED2024ULL;
constexpr std::uint64_t kJitterTag = 0xA11CEULL;
constexpr std::size_t kFilterPad = 256;

std::size_t to_samples(double seconds) {
  return static_cast<std::size_t>(std::llround(seconds * kSampleRate));
}

template <typename T, std::size_t N>
void read_array(const nlohmann::json& j, const char* key, std::array<T, N>& out) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != N)
    throw Error(ErrorCode::InvalidConfig, std::string("profile: '") + key + "' needs " +
                                              std::to_string(N) + " values");
  for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<T>();
}

void read_table(const nlohmann::json& j, const char* key, ChannelTable& out) {
  if (!j.contains(key)) return;
  const auto& rows = j.at(key);
  if (!rows.is_array() || rows.size() != kNumGestures)
    throw Error(ErrorCode::InvalidConfig, std::string("profile: '") + key + "' needs 12 rows");
  for (std::size_t g = 0; g < kNumGestures; ++g) {
    const auto& row = rows[g];
    if (!row.is_array() || row.size() != kFullChannels)
      throw Error(ErrorCode::InvalidConfig, std::string("profile: '") + key + "' needs 8 columns");
    for (std::size_t c = 0; c < kFullChannels; ++c) out[g][c] = row[c].get<double>();
  }
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (n_subjects < 1) fail("n_subjects must be >= 1");
  for (const auto& row : amplitude)
    for (double a : row)
      if (!(a >= 0.0) || !std::isfinite(a)) fail("amplitude must be finite and >= 0");
  for (const auto& row : loading)
    for (double w : row)
      if (!(std::abs(w) < 1.0)) fail("loading must lie in (-1, 1)");
  for (const auto& row : color)
    for (double k : row)
      if (!(std::abs(k) < 1.0)) fail("color must lie in (-1, 1)");
  for (int o = 0; o < kNumOrientations; ++o) {
    if (!(orientation_gain[o] > 0.0)) fail("orientation gain must be > 0");
    if (!(orientation_shift[o] >= 0.0 && orientation_shift[o] < 1.0))
      fail("orientation shift must lie in [0, 1)");
    if (shift_direction[o] < -1 || shift_direction[o] > 1) fail("shift direction must be -1, 0 or 1");
  }
  if (!(noise_rms >= 0.0)) fail("noise_rms must be >= 0");
  if (!(powerline_amp >= 0.0)) fail("powerline_amp must be >= 0");
  if (quant_bits < 8 || quant_bits > 16) fail("quant_bits must lie in [8, 16]");
  if (!(subject_jitter >= 0.0 && subject_jitter < 1.0)) fail("subject_jitter must lie in [0, 1)");
  if (!(gain > 0.0)) fail("gain must be > 0");
  if (!(rest_duration_s > 0.0 && active_duration_s > 0.0) ||
      to_samples(rest_duration_s) + to_samples(active_duration_s) > to_samples(total_duration_s))
    fail("rest + active duration must fit in the total duration");
}

SynthConfig default_synth_config() {
  SynthConfig cfg;
  Xoshiro256 rng(kStructureSeed);
  for (std::size_t g = 0; g < kNumGestures; ++g) {
    for (std::size_t c = 0; c < kFullChannels; ++c) {
      const bool forearm = c >= kChannelsPerPosition;
      cfg.amplitude[g][c] = 36.0 * std::exp(0.3 * (2.0 * rng.uniform() - 1.0)) * (forearm ? 1.2 : 1.0);
      cfg.loading[g][c] = 0.4 * (2.0 * rng.uniform() - 1.0);
      cfg.color[g][c] = 0.35 * (2.0 * rng.uniform() - 1.0);
    }
    // Both rings see the same muscles: the elbow pattern is mostly a weaker
    // copy of the forearm one.
    constexpr double own = 0.3;
    for (std::size_t c = 0; c < kChannelsPerPosition; ++c) {
      const std::size_t f = c + kChannelsPerPosition;
      cfg.amplitude[g][c] = std::exp((1.0 - own) * std::log(cfg.amplitude[g][f] / 1.2) +
                                     own * std::log(cfg.amplitude[g][c]));
      cfg.loading[g][c] = (1.0 - own) * cfg.loading[g][f] + own * cfg.loading[g][c];
      cfg.color[g][c] = (1.0 - own) * cfg.color[g][f] + own * cfg.color[g][c];
    }
  }
  return cfg;
}

SynthConfig load_profile(const std::filesystem::path& path, SynthConfig cfg) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open profile " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    read_table(j, "amplitude", cfg.amplitude);
    read_table(j, "loading", cfg.loading);
    read_table(j, "color", cfg.color);
    read_array(j, "orientation_gain", cfg.orientation_gain);
    read_array(j, "orientation_shift", cfg.orientation_shift);
    read_array(j, "shift_direction", cfg.shift_direction);
    cfg.noise_rms = j.value("noise_rms", cfg.noise_rms);
    cfg.powerline_amp = j.value("powerline_amp", cfg.powerline_amp);
    cfg.rest_duration_s = j.value("rest_duration_s", cfg.rest_duration_s);
    cfg.active_duration_s = j.value("active_duration_s", cfg.active_duration_s);
    cfg.total_duration_s = j.value("total_duration_s", cfg.total_duration_s);
    cfg.quant_bits = j.value("quant_bits", cfg.quant_bits);
    cfg.subject_jitter = j.value("subject_jitter", cfg.subject_jitter);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "profile: " + std::string(e.what()));
  }
  cfg.validate();
  return cfg;
}

void save_profile(const SynthConfig& cfg, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["amplitude"] = cfg.amplitude;
  j["loading"] = cfg.loading;
  j["color"] = cfg.color;
  j["orientation_gain"] = cfg.orientation_gain;
  j["orientation_shift"] = cfg.orientation_shift;
  j["shift_direction"] = cfg.shift_direction;
  j["noise_rms"] = cfg.noise_rms;
  j["powerline_amp"] = cfg.powerline_amp;
  j["rest_duration_s"] = cfg.rest_duration_s;
  j["active_duration_s"] = cfg.active_duration_s;
  j["total_duration_s"] = cfg.total_duration_s;
  j["quant_bits"] = cfg.quant_bits;
  j["subject_jitter"] = cfg.subject_jitter;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write profile " + path.string());
  out << j.dump(2) << '\n';
}

std::size_t shift_neighbour(const SynthConfig& cfg, Orientation o, std::size_t c) {
  const std::size_t ring = c / kChannelsPerPosition;
  const int within = static_cast<int>(c % kChannelsPerPosition);
  const int n = kChannelsPerPosition;
  const int shifted = ((within + cfg.shift_direction[index_of(o)]) % n + n) % n;
  return ring * kChannelsPerPosition + static_cast<std::size_t>(shifted);
}

double subject_factor(const SynthConfig& cfg, int subject, Gesture g, std::size_t c) {
  Xoshiro256 rng(mix_key({cfg.seed, kJitterTag, static_cast<std::uint64_t>(subject),
                          static_cast<std::uint64_t>(index_of(g)), c}));
  return 1.0 + cfg.subject_jitter * (2.0 * rng.uniform() - 1.0);
}

double ground_truth(const SynthConfig& cfg, Gesture g, Orientation o, std::size_t c) {
  const int oi = index_of(o);
  const double theta = cfg.orientation_shift[oi];
  const auto& a = cfg.amplitude[index_of(g)];
  return cfg.orientation_gain[oi] * ((1.0 - theta) * a[c] + theta * a[shift_neighbour(cfg, o, c)]);
}

double ground_truth(const SynthConfig& cfg, int subject, Gesture g, Orientation o,
                    std::size_t c) {
  const int oi = index_of(o);
  const double theta = cfg.orientation_shift[oi];
  const std::size_t nb = shift_neighbour(cfg, o, c);
  const double a = cfg.amplitude[index_of(g)][c] * subject_factor(cfg, subject, g, c);
  const double b = cfg.amplitude[index_of(g)][nb] * subject_factor(cfg, subject, g, nb);
  return cfg.orientation_gain[oi] * ((1.0 - theta) * a + theta * b);
}

std::size_t rest_samples(const SynthConfig& cfg) { return to_samples(cfg.rest_duration_s); }
std::size_t active_samples(const SynthConfig& cfg) { return to_samples(cfg.active_duration_s); }

Recording generate_trial(const SynthConfig& cfg, const TrialKey& key) {
  cfg.validate();
  const std::size_t total = to_samples(cfg.total_duration_s);
  const std::size_t rest = rest_samples(cfg);
  const std::size_t active = active_samples(cfg);
  const std::size_t padded = active + 2 * kFilterPad;
  const int gi = index_of(key.gesture);
  const int oi = index_of(key.orientation);

  Xoshiro256 rng(mix_key({cfg.seed, static_cast<std::uint64_t>(key.subject),
                          static_cast<std::uint64_t>(gi), static_cast<std::uint64_t>(oi),
                          static_cast<std::uint64_t>(key.trial)}));

  // Sources: a shared latent plus coloured per-channel noise, band-limited.
  std::vector<double> latent(padded);
  for (double& v : latent) v = rng.normal();
  std::vector<std::vector<double>> sources(kFullChannels);
  const FilterSpec band;
  for (std::size_t c = 0; c < kFullChannels; ++c) {
    const double w = cfg.loading[gi][c];
    const double k = cfg.color[gi][c];
    const double own = std::sqrt(1.0 - w * w);
    const double norm = 1.0 / std::sqrt(1.0 + k * k);
    std::vector<double> s(padded);
    double prev = rng.normal();
    for (std::size_t t = 0; t < padded; ++t) {
      const double u = rng.normal();
      s[t] = w * latent[t] + own * norm * (u + k * prev);
      prev = u;
    }
    auto filtered = bandpass(s, band);
    sources[c].assign(filtered.begin() + kFilterPad, filtered.begin() + kFilterPad + active);
  }

  Recording rec(key, Layout::Full8, kFullChannels, total, kSampleRate, cfg.gain);
  const double theta = cfg.orientation_shift[oi];
  for (std::size_t c = 0; c < kFullChannels; ++c) {
    const auto& own = sources[c];
    const auto& nb = sources[shift_neighbour(cfg, key.orientation, c)];
    std::vector<double> mixed(active);
    for (std::size_t t = 0; t < active; ++t) mixed[t] = (1.0 - theta) * own[t] + theta * nb[t];
    const double r = rms(mixed);
    const double target = ground_truth(cfg, key.subject, key.gesture, key.orientation, c);
    const double scale = r > 0.0 ? target / r : 0.0;
    auto ch = rec.channel(c);
    for (std::size_t t = 0; t < active; ++t) ch[rest + t] = mixed[t] * scale;
  }

  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  const double w50 = 2.0 * std::numbers::pi * 50.0 / kSampleRate;
  const double hi = std::ldexp(1.0, cfg.quant_bits - 1) - 1.0;
  const double lo = -hi - 1.0;
  for (std::size_t c = 0; c < kFullChannels; ++c) {
    auto ch = rec.channel(c);
    for (std::size_t t = 0; t < total; ++t) {
      const double v = ch[t] + cfg.noise_rms * rng.normal() +
                       cfg.powerline_amp * std::sin(w50 * static_cast<double>(t) + phase);
      const double counts = std::clamp(std::nearbyint(v / cfg.gain), lo, hi);
      ch[t] = counts * cfg.gain;
    }
  }
  return rec;
}

Dataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<TrialKey> keys;
  for (int s = 1; s <= cfg.n_subjects; ++s)
    for (Gesture g : kAllGestures)
      for (Orientation o : kAllOrientations)
        for (int t = 1; t <= kTrialsPerCondition; ++t) keys.push_back({s, g, o, t});

  Dataset ds;
  ds.gain = cfg.gain;
  ds.layout = Layout::Full8;
  ds.recordings.resize(keys.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(keys.size()); ++i)
    ds.recordings[i] = generate_trial(cfg, keys[i]);
  return ds;
}

Dataset generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out) {
  Dataset ds = generate_dataset(cfg);
  write_dataset(ds, out);
  return ds;
}

}  // namespace emgo
