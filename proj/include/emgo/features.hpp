#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "emgo/types.hpp"

namespace emgo {

enum class FeatureMethod : std::uint8_t { SNTDF, HSL, TSD, TDD, FTDD, ARRMS };

inline constexpr std::array<FeatureMethod, 6> kAllMethods = {
    FeatureMethod::SNTDF, FeatureMethod::HSL,  FeatureMethod::TSD,
    FeatureMethod::TDD,   FeatureMethod::FTDD, FeatureMethod::ARRMS};

std::string_view to_string(FeatureMethod m);
std::optional<FeatureMethod> parse_method(std::string_view s);  // case-insensitive

// How TSD builds its extra streams from channel differences.
enum class TsdPairing { Sequential, AllPairs };

struct FeatureOptions {
  TsdPairing tsd_pairing = TsdPairing::Sequential;
  double moment_lambda = 0.1;
  double threshold = 0.01;  // ZC/SSC threshold in unit-max normalised units
  int ar_order = 6;
};

std::size_t feature_dimension(FeatureMethod m, std::size_t channels,
                              const FeatureOptions& opt = {});

// Non-fatal conditions encountered while extracting.
enum FeatureFlag : unsigned {
  kFlagZeroEnergyStream = 1u << 0,  // a derived stream was all zero, eps substituted
  kFlagDegenerateMoments = 1u << 1, // log argument <= 0, eps substituted
  kFlagIllConditioned = 1u << 2,    // Burg reflection coefficient clamped
};

struct FeatureVector {
  FeatureMethod method = FeatureMethod::SNTDF;
  TrialKey key;
  std::size_t window_index = 0;
  std::vector<double> values;
  unsigned flags = 0;
};

FeatureVector extract_sntdf(const Window& w, const FeatureOptions& opt = {});
FeatureVector extract_hsl(const Window& w, const FeatureOptions& opt = {});
FeatureVector extract_tsd(const Window& w, const FeatureOptions& opt = {});
FeatureVector extract_tdd(const Window& w, const FeatureOptions& opt = {});
FeatureVector extract_ftdd(const Window& w, const FeatureOptions& opt = {});
FeatureVector extract_arrms(const Window& w, const FeatureOptions& opt = {});

FeatureVector extract(FeatureMethod m, const Window& w, const FeatureOptions& opt = {});
// Throws UnknownMethod for an unrecognised name.
FeatureVector extract(std::string_view method, const Window& w, const FeatureOptions& opt = {});

// Batch extraction over independent windows. The OpenMP kernel and the
// serial reference produce bit-identical output.
std::vector<FeatureVector> extract_batch(FeatureMethod m, std::span<const Window> windows,
                                         const FeatureOptions& opt = {});
std::vector<FeatureVector> extract_batch_serial(FeatureMethod m, std::span<const Window> windows,
                                                const FeatureOptions& opt = {});

namespace detail {

// Five time-domain descriptors built from power-transformed root-squared
// moments: log m0, log(m0-m2), log(m0-m4), sparseness, irregularity.
std::array<double, 5> tdd_descriptors(std::span<const double> x, double lambda, unsigned& flags);

// TDD descriptors plus log(WL(dx) / WL(d2x)).
std::array<double, 6> ftdd_descriptors(std::span<const double> x, double lambda, unsigned& flags);

// Cosine-weighted geometric fusion of two descriptor sets.
std::array<double, 6> fuse_descriptors(const std::array<double, 6>& dx,
                                       const std::array<double, 6>& dy);

// AR coefficients a1..ap for x_t + a1 x_{t-1} + ... + ap x_{t-p} = e_t.
std::vector<double> burg(std::span<const double> x, int order, bool& clamped);

struct Hjorth {
  double activity, mobility, complexity;
};
Hjorth hjorth(std::span<const double> x);

}  // namespace detail

}  // namespace emgo
