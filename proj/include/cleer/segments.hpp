#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cleer {

inline constexpr int kNumClasses = 3;  // negative, neutral, positive

/// A continuous multichannel recording before segmentation.
struct Recording {
  std::size_t channels = 0;
  std::size_t samples = 0;
  std::vector<double> signal;  // channels x samples, row-major
  double sample_rate_hz = 200.0;
  // One label per sample, or a single label for the whole recording.
  std::vector<int> label_stream;
  int subject_id = 0;
  int session_id = 0;

  double& at(std::size_t channel, std::size_t sample) { return signal[channel * samples + sample]; }
  double at(std::size_t channel, std::size_t sample) const { return signal[channel * samples + sample]; }
  int label_at(std::size_t sample) const { return label_stream.size() == 1 ? label_stream[0] : label_stream[sample]; }
  void validate() const;
};

/// Fixed-length labeled windows, n x t x c (segment-major, then time, then channel).
struct SegmentSet {
  std::size_t n = 0;
  std::size_t t = 0;
  std::size_t c = 0;
  std::vector<float> data;
  std::vector<int> labels;
  double sample_rate_hz = 200.0;
  double window_seconds = 2.0;
  double overlap_seconds = 0.2;
  std::vector<std::string> channel_names;

  std::span<const float> segment(std::size_t i) const { return {data.data() + i * t * c, t * c}; }
  float at(std::size_t i, std::size_t time, std::size_t channel) const { return data[(i * t + time) * c + channel]; }

  /// Throws ConfigError when an invariant is broken.
  void validate() const;

  SegmentSet subset(std::span<const std::size_t> indices) const;
  SegmentSet select_channels(std::span<const std::size_t> channels) const;
  std::vector<std::size_t> class_counts() const;
};

/// Windows of `window_s` seconds starting every (window_s - overlap_s)
/// seconds. Each window takes the majority label of its samples; ties go to
/// the tied label seen first in the window.
SegmentSet segment_recording(const Recording& rec, double window_s = 2.0, double overlap_s = 0.2,
                             std::vector<std::string> channel_names = {});

/// Continuous recording from CSV: a header row of channel names, then one row
/// per sample. An optional column named "label" carries per-sample labels;
/// without it every sample gets `default_label`.
struct CsvRecording {
  Recording recording;
  std::vector<std::string> channel_names;
};
CsvRecording read_recording_csv(const std::filesystem::path& path, double sample_rate_hz = 200.0,
                                int default_label = 0);

/// Number of windows produced for S samples; exposed for tests and the CLI.
std::size_t window_count(std::size_t samples, std::size_t window, std::size_t stride);

// SEGD container: "SEGD" | u32 version (1) | u32 header length | UTF-8 JSON
// header | n*t*c little-endian float32 payload.
inline constexpr std::uint32_t kSegdVersion = 1;

std::vector<char> encode_segments(const SegmentSet& set);
SegmentSet decode_segments(std::span<const char> bytes);
void save_segments(const SegmentSet& set, const std::filesystem::path& path);
SegmentSet load_segments(const std::filesystem::path& path);

}  // namespace cleer
