#include "cleer/model.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "cleer/error.hpp"
#include "cleer/ops.hpp"

namespace cleer {

using nlohmann::json;

namespace {

// Uniform in +-1/sqrt(fan_in), the usual fan-in scaled default.
Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::from(std::move(shape), std::move(values), true);
}

}  // namespace

std::size_t EncoderConfig::receptive_field() const {
  std::size_t total = 0;
  for (int d : dilation_schedule) total += static_cast<std::size_t>(d);
  return 1 + 2 * (kernel_size - 1) * total;
}

void EncoderConfig::validate() const {
  if (in_channels == 0) throw ConfigError("encoder in_channels must be positive");
  if (hidden_dim == 0 || repr_dim == 0) throw ConfigError("encoder hidden_dim and repr_dim must be positive");
  if (kernel_size % 2 == 0) throw ConfigError("encoder kernel_size must be odd");
  if (dilation_schedule.empty()) throw ConfigError("encoder needs at least one residual block");
  for (int d : dilation_schedule) {
    if (d < 1) throw ConfigError("dilations must be >= 1");
  }
}

std::vector<int> EncoderConfig::doubling_schedule(std::size_t n) {
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = 1 << i;
  return out;
}

void ClassifierConfig::validate() const {
  if (in_dim == 0 || conv_channels == 0) throw ConfigError("classifier dimensions must be positive");
  for (auto d : fc_dims) {
    if (d == 0) throw ConfigError("classifier fc dims must be positive");
  }
  if (n_classes != 3) throw ConfigError("the emotion task has exactly 3 classes");
}

Encoder::Encoder(EncoderConfig config, Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const auto C = config_.in_channels, H = config_.hidden_dim, R = config_.repr_dim, K = config_.kernel_size;
  proj_w_ = init_uniform({C, H}, C, rng);
  proj_b_ = init_uniform({H}, C, rng);
  params_.push_back({"encoder.proj.weight", proj_w_});
  params_.push_back({"encoder.proj.bias", proj_b_});
  for (std::size_t i = 0; i < config_.n_blocks(); ++i) {
    Block b{init_uniform({H, H, K}, H * K, rng), init_uniform({H}, H * K, rng), init_uniform({H, H, K}, H * K, rng),
            init_uniform({H}, H * K, rng), config_.dilation_schedule[i]};
    const std::string prefix = "encoder.block" + std::to_string(i);
    params_.push_back({prefix + ".conv1.weight", b.w1});
    params_.push_back({prefix + ".conv1.bias", b.b1});
    params_.push_back({prefix + ".conv2.weight", b.w2});
    params_.push_back({prefix + ".conv2.bias", b.b2});
    blocks_.push_back(std::move(b));
  }
  out_w_ = init_uniform({R, H, 1}, H, rng);
  out_b_ = init_uniform({R}, H, rng);
  params_.push_back({"encoder.out.weight", out_w_});
  params_.push_back({"encoder.out.bias", out_b_});
}

Tensor Encoder::input_projection(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(2) != config_.in_channels) {
    throw DimensionError("encoder expects [B, L, " + std::to_string(config_.in_channels) + "], got " +
                         shape_str(x.shape()));
  }
  return ops::linear(x, proj_w_, proj_b_);
}

Tensor Encoder::encode(const Tensor& x, std::span<const MaskVector> masks) const {
  Tensor z = input_projection(x);
  if (!masks.empty()) z = apply_mask(z, masks);
  Tensor h = ops::transpose12(z);
  for (const auto& b : blocks_) {
    Tensor inner = ops::relu(ops::conv1d_dilated(h, b.w1, b.dilation, b.b1));
    h = ops::add(h, ops::conv1d_dilated(inner, b.w2, b.dilation, b.b2));
  }
  return ops::transpose12(ops::conv1d_dilated(h, out_w_, 1, out_b_));
}

Classifier::Classifier(ClassifierConfig config, Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const auto R = config_.in_dim, Cc = config_.conv_channels;
  conv_w_ = init_uniform({Cc, R, 3}, R * 3, rng);
  conv_b_ = init_uniform({Cc}, R * 3, rng);
  params_.push_back({"classifier.conv.weight", conv_w_});
  params_.push_back({"classifier.conv.bias", conv_b_});
  std::size_t prev = Cc;
  std::vector<std::size_t> dims = config_.fc_dims;
  dims.push_back(config_.n_classes);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    Tensor w = init_uniform({prev, dims[i]}, prev, rng);
    Tensor b = init_uniform({dims[i]}, prev, rng);
    params_.push_back({"classifier.fc" + std::to_string(i) + ".weight", w});
    params_.push_back({"classifier.fc" + std::to_string(i) + ".bias", b});
    fc_.emplace_back(std::move(w), std::move(b));
    prev = dims[i];
  }
}

Tensor Classifier::logits(const Tensor& r) const {
  if (r.rank() != 3 || r.dim(2) != config_.in_dim) {
    throw DimensionError("classifier expects [B, L, " + std::to_string(config_.in_dim) + "], got " +
                         shape_str(r.shape()));
  }
  Tensor h = ops::conv1d_dilated(ops::transpose12(r), conv_w_, 1, conv_b_);
  h = ops::relu(ops::global_max_pool(h));
  for (std::size_t i = 0; i < fc_.size(); ++i) {
    h = ops::linear(h, fc_[i].first, fc_[i].second);
    if (i + 1 < fc_.size()) h = ops::relu(h);
  }
  return h;
}

Tensor Classifier::classify(const Tensor& r) const { return ops::softmax(logits(r)); }

Model::Model(const EncoderConfig& enc, const ClassifierConfig& cls, Rng& rng) : encoder(enc, rng), classifier(cls, rng) {
  if (cls.in_dim != enc.repr_dim) {
    throw ConfigError("classifier in_dim " + std::to_string(cls.in_dim) + " must equal encoder repr_dim " +
                      std::to_string(enc.repr_dim));
  }
}

std::vector<Tensor> Model::encoder_tensors() const {
  std::vector<Tensor> out;
  for (const auto& p : encoder.parameters()) out.push_back(p.tensor);
  return out;
}

std::vector<Tensor> Model::classifier_tensors() const {
  std::vector<Tensor> out;
  for (const auto& p : classifier.parameters()) out.push_back(p.tensor);
  return out;
}

std::vector<Tensor> Model::all_tensors() const {
  auto out = encoder_tensors();
  auto cls = classifier_tensors();
  out.insert(out.end(), cls.begin(), cls.end());
  return out;
}

std::vector<NamedParam> Model::named_parameters() const {
  auto out = encoder.parameters();
  out.insert(out.end(), classifier.parameters().begin(), classifier.parameters().end());
  return out;
}

void Model::snap_to_float32() {
  for (auto& t : all_tensors())
    for (auto& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

void Model::zero_grad() {
  for (auto& t : all_tensors()) t.clear_grad();
}

json to_json(const EncoderConfig& c) {
  return {{"in_channels", c.in_channels},
          {"hidden_dim", c.hidden_dim},
          {"repr_dim", c.repr_dim},
          {"kernel_size", c.kernel_size},
          {"dilation_schedule", c.dilation_schedule}};
}

json to_json(const ClassifierConfig& c) {
  return {{"in_dim", c.in_dim}, {"conv_channels", c.conv_channels}, {"fc_dims", c.fc_dims}, {"n_classes", c.n_classes}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig c;
  c.in_channels = j.at("in_channels").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.repr_dim = j.at("repr_dim").get<std::size_t>();
  c.kernel_size = j.at("kernel_size").get<std::size_t>();
  c.dilation_schedule = j.at("dilation_schedule").get<std::vector<int>>();
  return c;
}

ClassifierConfig classifier_config_from_json(const json& j) {
  ClassifierConfig c;
  c.in_dim = j.at("in_dim").get<std::size_t>();
  c.conv_channels = j.at("conv_channels").get<std::size_t>();
  c.fc_dims = j.at("fc_dims").get<std::vector<std::size_t>>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  return c;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path, const json& meta) {
  json manifest = json::array();
  std::size_t offset = 0;
  const auto params = model.named_parameters();
  for (const auto& p : params) {
    manifest.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    offset += p.tensor.numel() * 4;
  }
  json header = {{"encoder", to_json(model.encoder.config())},
                 {"classifier", to_json(model.classifier.config())},
                 {"params", manifest},
                 {"meta", meta.is_null() ? json::object() : meta}};
  const std::string text = header.dump();

  std::vector<char> out{'C', 'K', 'P', 'T'};
  io::put_u32(out, kCkptVersion);
  io::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : params)
    for (double v : p.tensor.data()) io::put_f32(out, static_cast<float>(v));
  io::write_file(path, out);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  const std::span<const char> view(bytes);
  if (bytes.size() < 4 || std::string(bytes.data(), 4) != "CKPT") throw FormatError("bad magic at offset 0: expected \"CKPT\"");
  const auto version = io::get_u32(view, 4);
  if (version != kCkptVersion) throw FormatError("unsupported CKPT version " + std::to_string(version) + " at offset 4");
  const std::size_t header_len = io::get_u32(view, 8);
  const std::size_t payload = 12 + header_len;
  if (payload > bytes.size()) throw FormatError("truncated CKPT header declared at offset 8");

  json header;
  EncoderConfig enc;
  ClassifierConfig cls;
  try {
    header = json::parse(bytes.begin() + 12, bytes.begin() + static_cast<std::ptrdiff_t>(payload));
    enc = encoder_config_from_json(header.at("encoder"));
    cls = classifier_config_from_json(header.at("classifier"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed CKPT header at offset 12: ") + e.what());
  }

  Rng unused(0);
  LoadedCheckpoint out{Model(enc, cls, unused), header.value("meta", json::object())};
  auto params = out.model.named_parameters();
  const auto& manifest = header.at("params");
  if (manifest.size() != params.size()) {
    throw FormatError("CKPT manifest lists " + std::to_string(manifest.size()) + " tensors, model has " +
                      std::to_string(params.size()));
  }
  std::size_t expected_bytes = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = manifest[i];
    if (entry.at("name").get<std::string>() != params[i].name ||
        entry.at("shape").get<Shape>() != params[i].tensor.shape()) {
      throw FormatError("CKPT tensor " + std::to_string(i) + " (" + entry.at("name").get<std::string>() +
                        ") does not match the configured model");
    }
    const std::size_t off = payload + entry.at("offset").get<std::size_t>();
    auto values = params[i].tensor.data();
    if (off + values.size() * 4 > bytes.size()) {
      throw FormatError("CKPT payload truncated: tensor " + params[i].name + " at offset " + std::to_string(off));
    }
    for (std::size_t j = 0; j < values.size(); ++j) values[j] = io::get_f32(view, off + 4 * j);
    expected_bytes += values.size() * 4;
  }
  if (payload + expected_bytes != bytes.size()) {
    throw FormatError("CKPT payload at offset " + std::to_string(payload) + " has " +
                      std::to_string(bytes.size() - payload) + " bytes, manifest needs " + std::to_string(expected_bytes));
  }
  return out;
}

}  // namespace cleer
