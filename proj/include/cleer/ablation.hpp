#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cleer/model.hpp"
#include "cleer/segments.hpp"
#include "cleer/trainer.hpp"

namespace cleer {

enum class AblationMethod {
  retrain,    // one single-channel model per channel
  occlusion,  // one multichannel model per fold, all other channels zeroed at evaluation
};

std::string to_string(AblationMethod method);
AblationMethod parse_ablation_method(const std::string& text);

struct ChannelRow {
  std::size_t channel_index = 0;
  std::string channel_name;
  double mean_accuracy = 0.0;
};

struct ChannelReport {
  AblationMethod method = AblationMethod::retrain;
  std::vector<ChannelRow> rows;  // channel order

  /// Rows by descending accuracy; ties keep channel order.
  std::vector<ChannelRow> ranked() const;
  /// channel_index,channel_name,mean_accuracy
  std::string to_csv(bool ranked_order = true) const;
};

/// Every channel is evaluated against the same fold split (derived from config.seed).
/// `config.jobs` > 1 runs channels concurrently; folds inside a channel then run serially.
ChannelReport per_channel_eval(const SegmentSet& data, const TrainConfig& config,
                               AblationMethod method = AblationMethod::retrain,
                               const std::function<void(const std::string&)>& log = {});

/// Global max over time of the unmasked encoder output, one row per segment.
std::vector<std::vector<double>> pooled_representations(const Model& model, const SegmentSet& data,
                                                        std::size_t batch_size = 64);

/// CSV: segment_index,label,r_0,...,r_{D-1}
void export_representations(const Model& model, const SegmentSet& data, const std::filesystem::path& path);

}  // namespace cleer
