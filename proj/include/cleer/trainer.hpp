#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cleer/adam.hpp"
#include "cleer/folds.hpp"
#include "cleer/losses.hpp"
#include "cleer/model.hpp"
#include "cleer/segments.hpp"

namespace cleer {

enum class TrainMode { joint, classifier_only, two_step };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& text);

struct TrainConfig {
  int epochs = 50;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  int k_folds = 5;
  double lambda_class = 1.0;
  double mask_p = 0.5;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::joint;
  bool symmetrize = false;
  bool contiguous_folds = false;
  bool eval_every_epoch = true;  // fills val_accuracy in the metrics rows
  int jobs = 1;                  // folds trained concurrently

  // in_channels / in_dim are taken from the data and encoder at run time.
  EncoderConfig encoder;
  ClassifierConfig classifier;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Overlays the keys present in `j` onto `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct Batch {
  Tensor x;  // [B, T, C]
  std::vector<int> labels;
};

Batch make_batch(const SegmentSet& data, std::span<const std::size_t> indices);

enum class StepKind {
  joint,              // hcl + lambda * cross-entropy, all parameters
  contrastive,        // hcl only
  supervised,         // cross-entropy only, encoder trainable
  classifier_head,    // cross-entropy only, encoder frozen
};

/// One optimizer step. The contrastive branch draws one CropPair for the
/// whole batch and independent per-item masks for each view from `aug_rng`;
/// the classification branch encodes the full, unmasked segments.
/// Parameters outside `optimizer` are left unchanged.
LossBreakdown train_step(const Batch& batch, Model& model, Adam& optimizer, const TrainConfig& config, Rng& aug_rng,
                         StepKind kind);

struct EvalResult {
  double accuracy = 0.0;
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};  // [true][predicted]
  std::vector<int> predictions;
};

EvalResult score_predictions(std::span<const int> predictions, std::span<const int> labels);

/// Argmax of classify() over unmasked full segments (ties -> lowest class).
EvalResult evaluate(const Model& model, const SegmentSet& data, std::span<const std::size_t> indices,
                    std::size_t batch_size = 64);
EvalResult evaluate(const Model& model, const SegmentSet& data, std::size_t batch_size = 64);

struct FoldReport {
  int fold_index = 0;
  double accuracy = 0.0;
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
  std::vector<LossBreakdown> loss_history;  // epoch means
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

struct FoldTraining {
  Model model;
  FoldReport report;
  std::vector<std::string> metrics_rows;
};

/// Fresh seeded model, `config.epochs` of training on the fold's training
/// split, then evaluation on its held-out split.
FoldTraining train_fold(const SegmentSet& data, const FoldSplit& split, int fold, const TrainConfig& config);

struct SkcvResult {
  TrainMode mode = TrainMode::joint;
  FoldSplit split;
  std::vector<FoldReport> folds;
  double mean_accuracy = 0.0;
};

struct RunOutputs {
  std::ostream* metrics_csv = nullptr;        // header + one row per training step
  std::filesystem::path checkpoint_dir;       // fold_<k>.ckpt when non-empty
  std::function<void(const std::string&)> log;
};

inline constexpr const char* kMetricsHeader = "fold,epoch,step,level_losses,hcl,class_loss,total,val_accuracy";

/// Splits with stratified_kfold(seed) and trains one model per fold.
SkcvResult run_skcv(const SegmentSet& data, const TrainConfig& config, const RunOutputs& outputs = {});

/// run_skcv in two_step mode: HCL-only encoder training for the first half of
/// the epochs, then cross-entropy on a frozen encoder for the rest.
SkcvResult two_step_baseline(const SegmentSet& data, TrainConfig config, const RunOutputs& outputs = {});

struct ModeComparison {
  std::vector<std::uint64_t> seeds;
  // mean accuracy per seed, for joint / two_step / classifier_only
  std::array<std::vector<double>, 3> accuracy;

  static constexpr std::array<TrainMode, 3> kModes{TrainMode::joint, TrainMode::two_step, TrainMode::classifier_only};
  double mean(std::size_t arm) const;
  std::string table() const;
};

ModeComparison compare_modes(const SegmentSet& data, const TrainConfig& config, std::span<const std::uint64_t> seeds,
                             const std::function<void(const std::string&)>& log = {});

nlohmann::json to_json(const FoldReport& r);
nlohmann::json to_json(const SkcvResult& r);

/// Independent seed for (base, a, b); used for the split, init, order and augmentation streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

std::string format_double(double v);

}  // namespace cleer
