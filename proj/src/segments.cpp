#include "cleer/segments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "binary_io.hpp"
#include "cleer/error.hpp"

namespace cleer {

using nlohmann::json;

void Recording::validate() const {
  if (channels == 0 || samples == 0) throw ConfigError("recording is empty");
  if (signal.size() != channels * samples) {
    throw DimensionError("recording signal holds " + std::to_string(signal.size()) + " values, expected " +
                         std::to_string(channels) + " x " + std::to_string(samples));
  }
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
  if (label_stream.size() != 1 && label_stream.size() != samples) {
    throw DimensionError("label stream must hold 1 or " + std::to_string(samples) + " labels, got " +
                         std::to_string(label_stream.size()));
  }
  for (int l : label_stream) {
    if (l < 0 || l >= kNumClasses) throw ConfigError("label " + std::to_string(l) + " outside {0,1,2}");
  }
}

void SegmentSet::validate() const {
  if (n == 0 || t == 0 || c == 0) throw ConfigError("segment set has an empty dimension");
  if (data.size() != n * t * c) {
    throw DimensionError("segment payload holds " + std::to_string(data.size()) + " values, expected " +
                         std::to_string(n * t * c));
  }
  if (labels.size() != n) {
    throw DimensionError(std::to_string(labels.size()) + " labels for " + std::to_string(n) + " segments");
  }
  for (int l : labels) {
    if (l < 0 || l >= kNumClasses) throw ConfigError("label " + std::to_string(l) + " outside {0,1,2}");
  }
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
  if (static_cast<std::size_t>(std::llround(window_seconds * sample_rate_hz)) != t) {
    throw ConfigError("window of " + std::to_string(window_seconds) + " s at " + std::to_string(sample_rate_hz) +
                      " Hz does not give " + std::to_string(t) + " samples");
  }
  if (!channel_names.empty() && channel_names.size() != c) {
    throw DimensionError(std::to_string(channel_names.size()) + " channel names for " + std::to_string(c) +
                         " channels");
  }
}

SegmentSet SegmentSet::subset(std::span<const std::size_t> indices) const {
  SegmentSet out = *this;
  out.n = indices.size();
  out.data.resize(out.n * t * c);
  out.labels.resize(out.n);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) throw IndexError("segment index " + std::to_string(indices[i]) + " out of range");
    std::copy_n(data.begin() + indices[i] * t * c, t * c, out.data.begin() + i * t * c);
    out.labels[i] = labels[indices[i]];
  }
  return out;
}

SegmentSet SegmentSet::select_channels(std::span<const std::size_t> channels) const {
  SegmentSet out = *this;
  out.c = channels.size();
  out.data.assign(n * t * out.c, 0.0f);
  out.channel_names.clear();
  for (auto ch : channels) {
    if (ch >= c) throw IndexError("channel index " + std::to_string(ch) + " out of range");
    if (!channel_names.empty()) out.channel_names.push_back(channel_names[ch]);
  }
  for (std::size_t row = 0; row < n * t; ++row)
    for (std::size_t j = 0; j < channels.size(); ++j) out.data[row * out.c + j] = data[row * c + channels[j]];
  return out;
}

std::vector<std::size_t> SegmentSet::class_counts() const {
  std::vector<std::size_t> counts(kNumClasses, 0);
  for (int l : labels) ++counts.at(static_cast<std::size_t>(l));
  return counts;
}

std::size_t window_count(std::size_t samples, std::size_t window, std::size_t stride) {
  if (samples < window) return 0;
  return (samples - window) / stride + 1;
}

SegmentSet segment_recording(const Recording& rec, double window_s, double overlap_s,
                             std::vector<std::string> channel_names) {
  rec.validate();
  if (!(overlap_s >= 0.0) || !(window_s > overlap_s)) {
    throw ConfigError("segmentation needs window > overlap >= 0 (window " + std::to_string(window_s) + " s, overlap " +
                      std::to_string(overlap_s) + " s)");
  }
  const auto window = static_cast<std::size_t>(std::llround(window_s * rec.sample_rate_hz));
  const auto stride = static_cast<std::size_t>(std::llround((window_s - overlap_s) * rec.sample_rate_hz));
  if (window == 0 || stride == 0) throw ConfigError("window or stride rounds to zero samples");
  const std::size_t count = window_count(rec.samples, window, stride);
  if (count == 0) {
    throw EmptyInputError("recording of " + std::to_string(rec.samples) + " samples is shorter than one window of " +
                          std::to_string(window));
  }

  SegmentSet out;
  out.n = count;
  out.t = window;
  out.c = rec.channels;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.window_seconds = window_s;
  out.overlap_seconds = overlap_s;
  out.channel_names = std::move(channel_names);
  out.data.resize(count * window * rec.channels);
  out.labels.resize(count);

  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = i * stride;
    for (std::size_t s = 0; s < window; ++s)
      for (std::size_t ch = 0; ch < rec.channels; ++ch)
        out.data[(i * window + s) * rec.channels + ch] = static_cast<float>(rec.at(ch, start + s));

    std::array<std::size_t, kNumClasses> votes{};
    std::array<std::size_t, kNumClasses> first_seen;
    first_seen.fill(window);
    for (std::size_t s = 0; s < window; ++s) {
      const int l = rec.label_at(start + s);
      ++votes[l];
      first_seen[l] = std::min(first_seen[l], s);
    }
    int best = 0;
    for (int l = 1; l < kNumClasses; ++l) {
      if (votes[l] > votes[best] || (votes[l] == votes[best] && first_seen[l] < first_seen[best])) best = l;
    }
    out.labels[i] = best;
  }
  out.validate();
  return out;
}

CsvRecording read_recording_csv(const std::filesystem::path& path, double sample_rate_hz, int default_label) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header row at line 1");
  const auto header = split(line);
  std::ptrdiff_t label_col = -1;
  CsvRecording out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "label") {
      label_col = static_cast<std::ptrdiff_t>(i);
    } else {
      out.channel_names.push_back(header[i]);
    }
  }
  const std::size_t channels = out.channel_names.size();
  if (channels == 0) throw FormatError(path.string() + ": header names no channels");

  std::vector<std::vector<double>> columns(channels);
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " fields, header has " + std::to_string(header.size()));
    }
    std::size_t ch = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      try {
        std::size_t used = 0;
        if (static_cast<std::ptrdiff_t>(i) == label_col) {
          labels.push_back(std::stoi(cells[i], &used));
        } else {
          columns[ch++].push_back(std::stod(cells[i], &used));
        }
        if (used != cells[i].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::logic_error&) {
        throw FormatError(path.string() + ": line " + std::to_string(line_no) + " field " + std::to_string(i + 1) +
                          " is not a number: '" + cells[i] + "'");
      }
    }
  }
  const std::size_t samples = columns[0].size();
  if (samples == 0) throw EmptyInputError(path.string() + ": no samples");

  Recording& rec = out.recording;
  rec.channels = channels;
  rec.samples = samples;
  rec.sample_rate_hz = sample_rate_hz;
  rec.signal.reserve(channels * samples);
  for (const auto& col : columns) rec.signal.insert(rec.signal.end(), col.begin(), col.end());
  rec.label_stream = label_col >= 0 ? std::move(labels) : std::vector<int>{default_label};
  rec.validate();
  return out;
}

std::vector<char> encode_segments(const SegmentSet& set) {
  set.validate();
  json header = {{"n", set.n},
                 {"t", set.t},
                 {"c", set.c},
                 {"sample_rate_hz", set.sample_rate_hz},
                 {"window_seconds", set.window_seconds},
                 {"overlap_seconds", set.overlap_seconds},
                 {"labels", set.labels},
                 {"channel_names", set.channel_names}};
  const std::string text = header.dump();

  std::vector<char> out{'S', 'E', 'G', 'D'};
  out.reserve(12 + text.size() + set.data.size() * 4);
  io::put_u32(out, kSegdVersion);
  io::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (float v : set.data) io::put_f32(out, v);
  return out;
}

SegmentSet decode_segments(std::span<const char> bytes) {
  if (bytes.size() < 4 || std::string(bytes.data(), 4) != "SEGD") throw FormatError("bad magic at offset 0: expected \"SEGD\"");
  const auto version = io::get_u32(bytes, 4);
  if (version != kSegdVersion) {
    throw FormatError("unsupported SEGD version " + std::to_string(version) + " at offset 4");
  }
  const std::size_t header_len = io::get_u32(bytes, 8);
  const std::size_t payload_offset = 12 + header_len;
  if (payload_offset > bytes.size()) {
    throw FormatError("truncated header: " + std::to_string(header_len) + " bytes declared at offset 8, only " +
                      std::to_string(bytes.size() - 12) + " available after offset 12");
  }

  SegmentSet set;
  try {
    const json header = json::parse(bytes.begin() + 12, bytes.begin() + static_cast<std::ptrdiff_t>(payload_offset));
    set.n = header.at("n").get<std::size_t>();
    set.t = header.at("t").get<std::size_t>();
    set.c = header.at("c").get<std::size_t>();
    set.sample_rate_hz = header.at("sample_rate_hz").get<double>();
    set.window_seconds = header.at("window_seconds").get<double>();
    set.overlap_seconds = header.at("overlap_seconds").get<double>();
    set.labels = header.at("labels").get<std::vector<int>>();
    set.channel_names = header.at("channel_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed SEGD header at offset 12: ") + e.what());
  }

  const std::size_t expected = set.n * set.t * set.c * 4;
  const std::size_t actual = bytes.size() - payload_offset;
  if (actual != expected) {
    throw FormatError("payload at offset " + std::to_string(payload_offset) + " holds " + std::to_string(actual) +
                      " bytes but header n*t*c = " + std::to_string(set.n) + "*" + std::to_string(set.t) + "*" +
                      std::to_string(set.c) + " needs " + std::to_string(expected));
  }
  set.data.resize(set.n * set.t * set.c);
  for (std::size_t i = 0; i < set.data.size(); ++i) set.data[i] = io::get_f32(bytes, payload_offset + 4 * i);
  try {
    set.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("SEGD header at offset 12 is inconsistent: ") + e.what());
  }
  return set;
}

void save_segments(const SegmentSet& set, const std::filesystem::path& path) {
  io::write_file(path, encode_segments(set));
}

SegmentSet load_segments(const std::filesystem::path& path) { return decode_segments(io::read_file(path)); }

}  // namespace cleer
