#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "emgo/dataset.hpp"
#include "emgo/types.hpp"

namespace emgo {

using ChannelTable = std::array<std::array<double, kFullChannels>, kNumGestures>;

// Generator parameters. Channel mixing under forearm rotation stays inside
// an electrode ring: channel c leaks into its ring neighbour c+d where d is
// the orientation's shift direction (+1, 0 or -1), wrapping within the ring.
struct SynthConfig {
  std::uint64_t seed = 42;
  int n_subjects = 1;
  ChannelTable amplitude{};  // source RMS per gesture and channel (counts x gain)
  ChannelTable loading{};    // weight of the gesture's shared latent source, |w| < 1
  ChannelTable color{};      // first-order colouring coefficient, |k| < 1
  std::array<double, kNumOrientations> orientation_gain{0.8, 1.0, 1.2};
  std::array<double, kNumOrientations> orientation_shift{0.25, 0.0, 0.25};
  std::array<int, kNumOrientations> shift_direction{+1, 0, -1};
  double noise_rms = 4.0;
  double powerline_amp = 2.0;
  double rest_duration_s = 1.5;
  double active_duration_s = 6.0;
  double total_duration_s = 8.0;
  int quant_bits = 10;
  double subject_jitter = 0.10;  // +-fraction applied to amplitude per subject
  double gain = 1.0;             // physical units per count

  // Throws InvalidConfig.
  void validate() const;
};

// Built-in profile: a fixed gesture x channel structure with forearm
// channels somewhat stronger than elbow channels.
SynthConfig default_synth_config();

// JSON profile with any subset of: amplitude, loading, color (12x8 arrays),
// orientation_gain, orientation_shift, shift_direction (3 values), noise_rms,
// powerline_amp, rest_duration_s, active_duration_s, total_duration_s,
// quant_bits, subject_jitter. Missing keys keep `base` values.
SynthConfig load_profile(const std::filesystem::path& path, SynthConfig base);
void save_profile(const SynthConfig& cfg, const std::filesystem::path& path);

// Ring neighbour that channel `c` leaks into for orientation `o`.
std::size_t shift_neighbour(const SynthConfig& cfg, Orientation o, std::size_t c);

double subject_factor(const SynthConfig& cfg, int subject, Gesture g, std::size_t c);

// Expected source RMS: G[o] * ((1 - t) A[g][c] + t A[g][neighbour]).
double ground_truth(const SynthConfig& cfg, Gesture g, Orientation o, std::size_t c);
// Same with the subject's amplitude jitter applied.
double ground_truth(const SynthConfig& cfg, int subject, Gesture g, Orientation o,
                    std::size_t c);

std::size_t rest_samples(const SynthConfig& cfg);
std::size_t active_samples(const SynthConfig& cfg);

// Full 8-channel trial; a pure function of (cfg, key).
Recording generate_trial(const SynthConfig& cfg, const TrialKey& key);

// All n_subjects x 12 x 3 x 5 trials, in manifest order.
Dataset generate_dataset(const SynthConfig& cfg);
// Same, written under `out`. Throws IoError.
Dataset generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out);

}  // namespace emgo
