#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emgo {

inline constexpr int kNumGestures = 12;
inline constexpr int kNumOrientations = 3;
inline constexpr int kTrialsPerCondition = 5;
inline constexpr int kChannelsPerPosition = 4;
inline constexpr int kFullChannels = 8;
inline constexpr double kSampleRate = 1000.0;
inline constexpr std::size_t kWindowSamples = 250;

// Integer encoding is stable (0..11) and used in every file format.
enum class Gesture : std::uint8_t { TU, IDX, RA, PCE, IL, TL, HC, HO, WE, WF, UD, RD };
enum class Orientation : std::uint8_t { Pronation, Rest, Supination };
enum class ElectrodePosition : std::uint8_t { Elbow, Forearm };

// Channel layout of a recording: both electrode rings, or a single ring.
enum class Layout : std::uint8_t { Full8, Elbow4, Forearm4 };

inline constexpr std::array<Gesture, kNumGestures> kAllGestures = {
    Gesture::TU, Gesture::IDX, Gesture::RA, Gesture::PCE, Gesture::IL, Gesture::TL,
    Gesture::HC, Gesture::HO,  Gesture::WE, Gesture::WF,  Gesture::UD, Gesture::RD};
inline constexpr std::array<Orientation, kNumOrientations> kAllOrientations = {
    Orientation::Pronation, Orientation::Rest, Orientation::Supination};

constexpr int index_of(Gesture g) { return static_cast<int>(g); }
constexpr int index_of(Orientation o) { return static_cast<int>(o); }

std::string_view to_string(Gesture g);
std::string_view to_string(Orientation o);
std::string_view to_string(ElectrodePosition p);
std::string_view to_string(Layout l);

std::optional<Gesture> parse_gesture(std::string_view s);
std::optional<Orientation> parse_orientation(std::string_view s);
std::optional<ElectrodePosition> parse_position(std::string_view s);
std::optional<Layout> parse_layout(std::string_view s);

int channel_count(Layout l);
// Zero-based index of the first channel of `p` inside a full 8-channel recording.
constexpr std::size_t channel_offset(ElectrodePosition p) {
  return p == ElectrodePosition::Elbow ? 0 : kChannelsPerPosition;
}

struct TrialKey {
  int subject = 1;
  Gesture gesture = Gesture::TU;
  Orientation orientation = Orientation::Rest;
  int trial = 1;

  auto operator<=>(const TrialKey&) const = default;
};

std::string to_string(const TrialKey& k);

// Multi-channel trial. Samples are stored channel-major in physical units
// (counts × gain); `samples[c * n_samples + t]`.
struct Recording {
  TrialKey key;
  Layout layout = Layout::Full8;
  double sample_rate = kSampleRate;
  double gain = 1.0;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::vector<double> samples;

  Recording() = default;
  Recording(TrialKey k, Layout l, std::size_t channels, std::size_t length,
            double rate = kSampleRate, double g = 1.0)
      : key(k), layout(l), sample_rate(rate), gain(g), n_channels(channels),
        n_samples(length), samples(channels * length, 0.0) {}

  std::span<double> channel(std::size_t c) {
    return {samples.data() + c * n_samples, n_samples};
  }
  std::span<const double> channel(std::size_t c) const {
    return {samples.data() + c * n_samples, n_samples};
  }
  double duration_s() const { return static_cast<double>(n_samples) / sample_rate; }
};

// Half-open sample spans [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end > begin ? end - begin : 0; }
  auto operator<=>(const Span&) const = default;
};

struct Segment {
  Span rest;
  Span active;
  std::vector<std::string> warnings;
};

// A channels × kWindowSamples slice of one trial, stored channel-major.
struct Window {
  TrialKey key;
  std::size_t index = 0;
  std::size_t n_channels = 0;
  std::size_t length = 0;
  std::vector<double> samples;

  std::span<const double> channel(std::size_t c) const {
    return {samples.data() + c * length, length};
  }
};

}  // namespace emgo
