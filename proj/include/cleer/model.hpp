#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cleer/augment.hpp"
#include "cleer/tensor.hpp"
#include "json.hpp"

namespace cleer {

struct EncoderConfig {
  std::size_t in_channels = 62;
  std::size_t hidden_dim = 128;
  std::size_t repr_dim = 900;
  std::size_t kernel_size = 3;
  std::vector<int> dilation_schedule{1, 2, 4, 8, 16};  // one entry per residual block

  std::size_t n_blocks() const { return dilation_schedule.size(); }
  /// Timestamps that can influence one output: 1 + 2 (K - 1) sum(d).
  std::size_t receptive_field() const;
  void validate() const;

  /// Dilations 1, 2, 4, ... for `n` blocks.
  static std::vector<int> doubling_schedule(std::size_t n);
};

struct ClassifierConfig {
  std::size_t in_dim = 900;
  std::size_t conv_channels = 256;
  std::vector<std::size_t> fc_dims{64};
  std::size_t n_classes = 3;
  void validate() const;
};

struct NamedParam {
  std::string name;
  Tensor tensor;
};

/// Input projection -> optional timestamp mask -> residual dilated-conv stack
/// -> 1x1 output conv. Maps [B, L, C] to per-timestamp representations
/// [B, L, repr_dim].
class Encoder {
 public:
  Encoder(EncoderConfig config, Rng& init_rng);
  // Move-only: Tensor copies alias storage.
  Encoder(const Encoder&) = delete;
  Encoder& operator=(const Encoder&) = delete;
  Encoder(Encoder&&) = default;
  Encoder& operator=(Encoder&&) = default;

  /// Per-timestamp affine map: [B, L, C] -> [B, L, hidden_dim].
  Tensor input_projection(const Tensor& x) const;

  /// `masks` (one per item, or one shared) zero latent timestamps after the
  /// projection; pass an empty span for the unmasked path.
  Tensor encode(const Tensor& x, std::span<const MaskVector> masks = {}) const;

  const EncoderConfig& config() const { return config_; }
  std::vector<NamedParam>& parameters() { return params_; }
  const std::vector<NamedParam>& parameters() const { return params_; }

 private:
  struct Block {
    Tensor w1, b1, w2, b2;
    int dilation;
  };
  EncoderConfig config_;
  Tensor proj_w_, proj_b_;
  std::vector<Block> blocks_;
  Tensor out_w_, out_b_;
  std::vector<NamedParam> params_;
};

/// conv1d(k=3) -> global max-pool over time -> ReLU -> (FC -> ReLU)* -> FC.
class Classifier {
 public:
  Classifier(ClassifierConfig config, Rng& init_rng);
  Classifier(const Classifier&) = delete;
  Classifier& operator=(const Classifier&) = delete;
  Classifier(Classifier&&) = default;
  Classifier& operator=(Classifier&&) = default;

  /// [B, L, in_dim] -> unnormalized scores [B, n_classes].
  Tensor logits(const Tensor& r) const;
  /// softmax(logits(r)).
  Tensor classify(const Tensor& r) const;

  const ClassifierConfig& config() const { return config_; }
  std::vector<NamedParam>& parameters() { return params_; }
  const std::vector<NamedParam>& parameters() const { return params_; }

 private:
  ClassifierConfig config_;
  Tensor conv_w_, conv_b_;
  std::vector<std::pair<Tensor, Tensor>> fc_;
  std::vector<NamedParam> params_;
};

class Model {
 public:
  Model(const EncoderConfig& encoder, const ClassifierConfig& classifier, Rng& init_rng);

  Encoder encoder;
  Classifier classifier;

  std::vector<Tensor> encoder_tensors() const;
  std::vector<Tensor> classifier_tensors() const;
  std::vector<Tensor> all_tensors() const;
  std::vector<NamedParam> named_parameters() const;

  /// Rounds every parameter to the nearest float32 so a CKPT round-trip is lossless.
  void snap_to_float32();
  void zero_grad();
};

// CKPT container: "CKPT" | u32 version (1) | u32 header length | JSON header
// {encoder, classifier, params: [{name, shape, offset}], meta} | float32
// little-endian payload (offsets in bytes from the payload start).
inline constexpr std::uint32_t kCkptVersion = 1;

void save_checkpoint(const Model& model, const std::filesystem::path& path, const nlohmann::json& meta = {});

struct LoadedCheckpoint {
  Model model;
  nlohmann::json meta;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const EncoderConfig& c);
nlohmann::json to_json(const ClassifierConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);

}  // namespace cleer
