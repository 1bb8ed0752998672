#pragma once

#include <vector>

#include "emgo/types.hpp"

namespace emgo {

struct SegmentOptions {
  double baseline_s = 1.0;   // leading span assumed to be rest
  double rms_window_s = 0.1;
  double k_sigma = 3.0;
  double min_hold_s = 0.2;   // threshold must hold this long
  double expected_min_s = 5.0;
  double expected_max_s = 7.0;
};

// Locates the active span from the channel-averaged moving RMS envelope.
// Throws NoActivityDetected when the threshold is never held.
Segment detect_active_segment(const Recording& rec, const SegmentOptions& opt = {});

// Consecutive disjoint windows over the active span; the tail shorter than
// one window is dropped. Throws ActiveTooShort.
std::vector<Window> make_windows(const Recording& rec, const Segment& seg,
                                 std::size_t window_len = kWindowSamples);

}  // namespace emgo
