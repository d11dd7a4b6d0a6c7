#include "cleer/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "cleer/error.hpp"

namespace cleer {

const std::vector<std::string>& seed_montage() {
  static const std::vector<std::string> names{
      "FP1", "FPZ", "FP2", "AF3", "AF4", "F7",  "F5",  "F3",  "F1",  "FZ",  "F2",  "F4",  "F6",
      "F8",  "FT7", "FC5", "FC3", "FC1", "FCZ", "FC2", "FC4", "FC6", "FT8", "T7",  "C5",  "C3",
      "C1",  "CZ",  "C2",  "C4",  "C6",  "T8",  "TP7", "CP5", "CP3", "CP1", "CPZ", "CP2", "CP4",
      "CP6", "TP8", "P7",  "P5",  "P3",  "P1",  "PZ",  "P2",  "P4",  "P6",  "P8",  "PO7", "PO5",
      "PO3", "POZ", "PO4", "PO6", "PO8", "CB1", "O1",  "OZ",  "O2",  "CB2"};
  return names;
}

std::vector<std::string> default_channel_names(std::size_t c) {
  const auto& montage = seed_montage();
  std::vector<std::string> out;
  out.reserve(c);
  for (std::size_t i = 0; i < c; ++i) out.push_back(i < montage.size() ? montage[i] : "CH" + std::to_string(i));
  return out;
}

SegmentSet make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.informative_channels.empty()) throw ConfigError("synthetic dataset needs at least one informative channel");
  if (spec.n_per_class == 0 || spec.t == 0 || spec.c == 0) throw ConfigError("synthetic dataset dimensions must be positive");
  std::vector<bool> informative(spec.c, false);
  for (auto ch : spec.informative_channels) {
    if (ch >= spec.c) {
      throw ConfigError("informative channel " + std::to_string(ch) + " outside [0, " + std::to_string(spec.c) + ")");
    }
    informative[ch] = true;
  }
  for (double f : spec.class_freqs_hz) {
    if (!(f > 0.0) || f >= spec.sample_rate_hz / 2.0) throw ConfigError("class frequency must lie in (0, fs/2)");
  }

  SegmentSet set;
  set.n = spec.n_per_class * kNumClasses;
  set.t = spec.t;
  set.c = spec.c;
  set.sample_rate_hz = spec.sample_rate_hz;
  set.window_seconds = static_cast<double>(spec.t) / spec.sample_rate_hz;
  set.overlap_seconds = 0.0;
  set.channel_names = default_channel_names(spec.c);
  set.data.resize(set.n * set.t * set.c);
  set.labels.resize(set.n);

  const double amplitude = std::sqrt(2.0 * std::pow(10.0, spec.snr_db / 10.0));
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

  std::vector<double> phase(spec.c);
  for (std::size_t i = 0; i < set.n; ++i) {
    const int label = static_cast<int>(i % kNumClasses);
    set.labels[i] = label;
    const double omega = 2.0 * std::numbers::pi * spec.class_freqs_hz[label] / spec.sample_rate_hz;
    for (std::size_t ch = 0; ch < spec.c; ++ch) phase[ch] = informative[ch] ? phase_dist(rng) : 0.0;
    for (std::size_t s = 0; s < spec.t; ++s) {
      for (std::size_t ch = 0; ch < spec.c; ++ch) {
        double v = noise(rng);
        if (informative[ch]) v += amplitude * std::sin(omega * static_cast<double>(s) + phase[ch]);
        set.data[(i * spec.t + s) * spec.c + ch] = static_cast<float>(v);
      }
    }
  }
  set.validate();
  return set;
}

}  // namespace cleer
