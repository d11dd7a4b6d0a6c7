#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cleer/segments.hpp"

namespace cleer {

/// Frequency-coded three-class stand-in for labeled EEG windows: class k
/// puts a sinusoid at class_freqs_hz[k] (random phase per segment and
/// channel) on the informative channels; every channel carries unit-variance
/// Gaussian noise. Signal power / noise power = 10^(snr_db / 10).
struct SyntheticSpec {
  std::size_t n_per_class = 200;
  std::size_t t = 128;
  std::size_t c = 8;
  std::vector<std::size_t> informative_channels{2, 5};
  double snr_db = 0.0;
  std::uint64_t seed = 7;
  double sample_rate_hz = 200.0;
  std::array<double, kNumClasses> class_freqs_hz{4.0, 10.0, 20.0};
};

/// Labels are interleaved 0,1,2,0,1,2,... Deterministic given the spec.
SegmentSet make_synthetic_dataset(const SyntheticSpec& spec);

/// Names for the 62-electrode SEED-style cap in 10-20 order.
const std::vector<std::string>& seed_montage();

/// First `c` montage names, or "CH<i>" beyond the montage.
std::vector<std::string> default_channel_names(std::size_t c);

}  // namespace cleer
