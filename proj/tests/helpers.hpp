#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include "emgo/rng.hpp"
#include "emgo/types.hpp"

namespace testing {

inline std::vector<double> sine(double freq, double amp, std::size_t n, double rate = 1000.0,
                                double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate + phase);
  return x;
}

inline std::vector<double> white(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  emgo::Xoshiro256 rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = sd * rng.normal();
  return x;
}

inline double rms_of(const std::vector<double>& x, std::size_t from = 0, std::size_t to = 0) {
  if (to == 0) to = x.size();
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(to - from));
}

inline double peak_of(const std::vector<double>& x, std::size_t from, std::size_t to) {
  double m = 0.0;
  for (std::size_t i = from; i < to; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

// Window from per-channel sample vectors of equal length.
inline emgo::Window window_of(const std::vector<std::vector<double>>& channels) {
  emgo::Window w;
  w.n_channels = channels.size();
  w.length = channels.front().size();
  for (const auto& c : channels) w.samples.insert(w.samples.end(), c.begin(), c.end());
  return w;
}

inline emgo::Window noise_window(std::size_t channels, std::uint64_t seed, std::size_t len = 250) {
  std::vector<std::vector<double>> ch;
  for (std::size_t c = 0; c < channels; ++c) ch.push_back(white(len, seed * 131 + c));
  return window_of(ch);
}

// Fresh scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("emgo_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
