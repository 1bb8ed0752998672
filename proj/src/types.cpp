#include "emgo/types.hpp"

#include <algorithm>
#include <cctype>

#include "emgo/error.hpp"

namespace emgo {

namespace {

constexpr std::array<std::string_view, kNumGestures> kGestureNames = {
    "TU", "IDX", "RA", "PCE", "IL", "TL", "HC", "HO", "WE", "WF", "UD", "RD"};
constexpr std::array<std::string_view, kNumOrientations> kOrientationNames = {
    "pronation", "rest", "supination"};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingManifest: return "MissingManifest";
    case ErrorCode::MalformedTrialFile: return "MalformedTrialFile";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::WrongLayout: return "WrongLayout";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NoActivityDetected: return "NoActivityDetected";
    case ErrorCode::ActiveTooShort: return "ActiveTooShort";
    case ErrorCode::SignalBelowNoise: return "SignalBelowNoise";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::ZeroEnergyChannel: return "ZeroEnergyChannel";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::Unbalanced: return "Unbalanced";
    case ErrorCode::TooFewReplicates: return "TooFewReplicates";
    case ErrorCode::InsufficientTrials: return "InsufficientTrials";
    case ErrorCode::FrameDesync: return "FrameDesync";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::BadModel: return "BadModel";
  }
  return "Unknown";
}

std::string_view to_string(Gesture g) { return kGestureNames[index_of(g)]; }
std::string_view to_string(Orientation o) { return kOrientationNames[index_of(o)]; }

std::string_view to_string(ElectrodePosition p) {
  return p == ElectrodePosition::Elbow ? "elbow" : "forearm";
}

std::string_view to_string(Layout l) {
  switch (l) {
    case Layout::Full8: return "full8";
    case Layout::Elbow4: return "elbow4";
    case Layout::Forearm4: return "forearm4";
  }
  return "full8";
}

std::optional<Gesture> parse_gesture(std::string_view s) {
  for (int i = 0; i < kNumGestures; ++i)
    if (iequals(s, kGestureNames[i])) return static_cast<Gesture>(i);
  if (iequals(s, "ID")) return Gesture::IDX;
  if (iequals(s, "PC")) return Gesture::PCE;
  return std::nullopt;
}

std::optional<Orientation> parse_orientation(std::string_view s) {
  for (int i = 0; i < kNumOrientations; ++i)
    if (iequals(s, kOrientationNames[i])) return static_cast<Orientation>(i);
  return std::nullopt;
}

std::optional<ElectrodePosition> parse_position(std::string_view s) {
  if (iequals(s, "elbow")) return ElectrodePosition::Elbow;
  if (iequals(s, "forearm")) return ElectrodePosition::Forearm;
  return std::nullopt;
}

std::optional<Layout> parse_layout(std::string_view s) {
  if (iequals(s, "full8")) return Layout::Full8;
  if (iequals(s, "elbow4")) return Layout::Elbow4;
  if (iequals(s, "forearm4")) return Layout::Forearm4;
  return std::nullopt;
}

int channel_count(Layout l) { return l == Layout::Full8 ? kFullChannels : kChannelsPerPosition; }

std::string to_string(const TrialKey& k) {
  return "S" + std::to_string(k.subject) + "/" + std::string(to_string(k.gesture)) + "/" +
         std::string(to_string(k.orientation)) + "/t" + std::to_string(k.trial);
}

}  // namespace emgo
