#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emgo/types.hpp"

namespace emgo {

inline constexpr std::size_t kTrialsPerSubject =
    static_cast<std::size_t>(kNumGestures) * kNumOrientations * kTrialsPerCondition;

struct Violation {
  TrialKey key;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
  // subject -> number of distinct (gesture, orientation, trial) cells present
  std::map<int, std::size_t> completeness;

  bool ok() const { return violations.empty(); }
};

struct Dataset {
  double sample_rate = kSampleRate;
  double gain = 1.0;  // physical units per raw count
  Layout layout = Layout::Full8;
  std::vector<Recording> recordings;

  std::vector<int> subjects() const;
  const Recording* find(const TrialKey& key) const;
};

// Relative path of a trial file below the dataset root.
std::filesystem::path trial_relpath(const TrialKey& key);

// Reads `<root>/manifest.json` and every trial it names. Throws
// MissingManifest, MalformedTrialFile or DuplicateKey; softer invariant
// violations end up in `report` (when given) rather than thrown.
Dataset load_dataset(const std::filesystem::path& root, ValidationReport* report = nullptr);

// Writes the manifest and one CSV per recording. Samples are rounded to raw
// counts using the dataset gain.
void write_dataset(const Dataset& ds, const std::filesystem::path& root);

// Serialises one recording as trial CSV text (header + integer counts).
std::string format_trial_csv(const Recording& rec);

// Parses trial CSV text; `source` is only used in error messages.
Recording parse_trial_csv(const std::string& text, const TrialKey& key, Layout layout,
                          double sample_rate, double gain, const std::string& source);

// Extracts the four channels of one electrode ring from a full 8-channel
// recording, keeping ascending channel order and all metadata.
Recording slice_position(const Recording& rec, ElectrodePosition pos);

// Per-recording invariant check plus per-subject design completeness.
ValidationReport validate(const Dataset& ds);

}  // namespace emgo
