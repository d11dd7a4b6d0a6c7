#include "cleer/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <future>
#include <map>
#include <random>
#include <sstream>

#include "cleer/error.hpp"
#include "cleer/ops.hpp"

namespace cleer {

using nlohmann::json;

namespace {

enum Stream : std::uint64_t { kSplit = 0x5EED, kInit = 1, kOrder = 2, kAugment = 3 };

std::string format_levels(const LossBreakdown& b) {
  std::string out;
  for (const auto& l : b.per_level) {
    if (!out.empty()) out += '|';
    out += std::to_string(l.length) + ':' + format_double(l.tcl) + ':' + format_double(l.icl);
  }
  return out;
}

// Per-epoch mean of the step breakdowns; per-level entries are averaged over
// the steps that reached that level and report the longest length seen.
LossBreakdown epoch_mean(const std::vector<LossBreakdown>& steps) {
  LossBreakdown m;
  if (steps.empty()) return m;
  std::vector<std::size_t> counts;
  for (const auto& s : steps) {
    m.hcl += s.hcl;
    m.class_loss += s.class_loss;
    m.total += s.total;
    for (std::size_t i = 0; i < s.per_level.size(); ++i) {
      if (m.per_level.size() <= i) {
        m.per_level.push_back({static_cast<int>(i), 0, 0.0, 0.0, 0.0});
        counts.push_back(0);
      }
      auto& dst = m.per_level[i];
      dst.length = std::max(dst.length, s.per_level[i].length);
      dst.tcl += s.per_level[i].tcl;
      dst.icl += s.per_level[i].icl;
      dst.dcl += s.per_level[i].dcl;
      ++counts[i];
    }
  }
  const auto n = static_cast<double>(steps.size());
  m.hcl /= n;
  m.class_loss /= n;
  m.total /= n;
  for (std::size_t i = 0; i < m.per_level.size(); ++i) {
    const auto c = static_cast<double>(counts[i]);
    m.per_level[i].tcl /= c;
    m.per_level[i].icl /= c;
    m.per_level[i].dcl /= c;
  }
  return m;
}

json to_json(const LossBreakdown& b) {
  json levels = json::array();
  for (const auto& l : b.per_level) {
    levels.push_back({{"level", l.level}, {"length", l.length}, {"tcl", l.tcl}, {"icl", l.icl}, {"dcl", l.dcl}});
  }
  return {{"per_level", levels}, {"hcl", b.hcl}, {"class_loss", b.class_loss}, {"total", b.total}};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::joint:
      return "joint";
    case TrainMode::classifier_only:
      return "classifier_only";
    case TrainMode::two_step:
      return "two_step";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& text) {
  if (text == "joint") return TrainMode::joint;
  if (text == "classifier_only") return TrainMode::classifier_only;
  if (text == "two_step") return TrainMode::two_step;
  throw ConfigError("unknown training mode '" + text + "' (expected joint, classifier_only or two_step)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lambda_class >= 0.0)) throw ConfigError("lambda_class must be >= 0");
  if (!(mask_p >= 0.0 && mask_p < 1.0)) throw ConfigError("mask_p must lie in [0, 1)");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (mode != TrainMode::classifier_only && batch_size < 2) {
    throw ConfigError("contrastive training needs batch_size >= 2 (instance contrast is degenerate at 1)");
  }
  if (mode == TrainMode::two_step && epochs < 2) throw ConfigError("two_step mode needs at least 2 epochs");
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"k_folds", c.k_folds},
          {"lambda_class", c.lambda_class},
          {"mask_p", c.mask_p},
          {"seed", c.seed},
          {"mode", to_string(c.mode)},
          {"symmetrize", c.symmetrize},
          {"contiguous_folds", c.contiguous_folds},
          {"eval_every_epoch", c.eval_every_epoch},
          {"jobs", c.jobs},
          {"encoder", to_json(c.encoder)},
          {"classifier", to_json(c.classifier)}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  auto take = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("epochs", c.epochs);
  take("lr", c.lr);
  take("batch_size", c.batch_size);
  take("k_folds", c.k_folds);
  take("lambda_class", c.lambda_class);
  take("mask_p", c.mask_p);
  take("seed", c.seed);
  take("symmetrize", c.symmetrize);
  take("contiguous_folds", c.contiguous_folds);
  take("eval_every_epoch", c.eval_every_epoch);
  take("jobs", c.jobs);
  if (j.contains("mode")) c.mode = parse_train_mode(j.at("mode").get<std::string>());
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    if (e.contains("in_channels")) c.encoder.in_channels = e.at("in_channels").get<std::size_t>();
    if (e.contains("hidden_dim")) c.encoder.hidden_dim = e.at("hidden_dim").get<std::size_t>();
    if (e.contains("repr_dim")) c.encoder.repr_dim = e.at("repr_dim").get<std::size_t>();
    if (e.contains("kernel_size")) c.encoder.kernel_size = e.at("kernel_size").get<std::size_t>();
    if (e.contains("dilation_schedule")) c.encoder.dilation_schedule = e.at("dilation_schedule").get<std::vector<int>>();
  }
  if (j.contains("classifier")) {
    const auto& k = j.at("classifier");
    if (k.contains("conv_channels")) c.classifier.conv_channels = k.at("conv_channels").get<std::size_t>();
    if (k.contains("fc_dims")) c.classifier.fc_dims = k.at("fc_dims").get<std::vector<std::size_t>>();
  }
  return c;
}

Batch make_batch(const SegmentSet& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw EmptyInputError("empty batch");
  const std::size_t per = data.t * data.c;
  std::vector<double> values(indices.size() * per);
  std::vector<int> labels(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= data.n) throw IndexError("segment index " + std::to_string(indices[i]) + " out of range");
    const auto seg = data.segment(indices[i]);
    std::copy(seg.begin(), seg.end(), values.begin() + static_cast<std::ptrdiff_t>(i * per));
    labels[i] = data.labels[indices[i]];
  }
  return {Tensor::from({indices.size(), data.t, data.c}, std::move(values)), std::move(labels)};
}

LossBreakdown train_step(const Batch& batch, Model& model, Adam& optimizer, const TrainConfig& config, Rng& aug_rng,
                         StepKind kind) {
  const std::size_t B = batch.labels.size();
  if (B == 0) throw EmptyInputError("train_step on an empty batch");
  const bool contrastive = kind == StepKind::joint || kind == StepKind::contrastive;
  const bool supervised = kind != StepKind::contrastive;
  if (contrastive && B < 2) throw ConfigError("contrastive step needs at least 2 items per batch");

  LossResult result;
  if (contrastive) {
    const CropPair crop = sample_crop_pair(batch.x.dim(1), aug_rng);
    auto [v1, v2] = crop_views(batch.x, crop);
    const auto m1 = sample_masks(B, v1.view.dim(1), config.mask_p, aug_rng);
    const auto m2 = sample_masks(B, v2.view.dim(1), config.mask_p, aug_rng);
    const Tensor r1 = model.encoder.encode(v1.view, m1);
    const Tensor r2 = model.encoder.encode(v2.view, m2);
    const std::size_t k = crop.overlap_length();
    const Tensor z = ops::slice_axis1(r1, v1.overlap_offset, v1.overlap_offset + k);
    const Tensor zp = ops::slice_axis1(r2, v2.overlap_offset, v2.overlap_offset + k);
    result = hcl_loss(z, zp, {config.symmetrize});
  }
  if (supervised) {
    Tensor r;
    if (kind == StepKind::classifier_head) {
      NoGradGuard frozen;
      r = model.encoder.encode(batch.x);
    } else {
      r = model.encoder.encode(batch.x);
    }
    const Tensor logits = model.classifier.logits(r);
    if (contrastive) {
      result = joint_loss(result, logits, batch.labels, config.lambda_class);
    } else {
      result.loss = ops::cross_entropy(logits, batch.labels);
      result.breakdown.class_loss = result.loss.item();
      result.breakdown.total = result.breakdown.class_loss;
    }
  }

  result.loss.backward();
  optimizer.step();
  model.zero_grad();
  return result.breakdown;
}

EvalResult score_predictions(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw DimensionError("prediction and label counts differ");
  EvalResult r;
  r.predictions.assign(predictions.begin(), predictions.end());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++r.confusion.at(static_cast<std::size_t>(labels[i])).at(static_cast<std::size_t>(predictions[i]));
    correct += predictions[i] == labels[i];
  }
  r.accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
  return r;
}

EvalResult evaluate(const Model& model, const SegmentSet& data, std::span<const std::size_t> indices,
                    std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("evaluation batch size must be positive");
  NoGradGuard no_grad;
  std::vector<int> predictions, labels;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const auto chunk = indices.subspan(start, std::min(batch_size, indices.size() - start));
    const Batch batch = make_batch(data, chunk);
    const Tensor logits = model.classifier.logits(model.encoder.encode(batch.x));
    const std::size_t k = logits.dim(1);
    const auto v = logits.data();
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto row = v.subspan(i * k, k);
      predictions.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
      labels.push_back(batch.labels[i]);
    }
  }
  return score_predictions(predictions, labels);
}

EvalResult evaluate(const Model& model, const SegmentSet& data, std::size_t batch_size) {
  std::vector<std::size_t> all(data.n);
  for (std::size_t i = 0; i < data.n; ++i) all[i] = i;
  return evaluate(model, data, all, batch_size);
}

FoldTraining train_fold(const SegmentSet& data, const FoldSplit& split, int fold, const TrainConfig& config) {
  config.validate();
  data.validate();
  EncoderConfig enc = config.encoder;
  enc.in_channels = data.c;
  ClassifierConfig cls = config.classifier;
  cls.in_dim = enc.repr_dim;

  Rng init_rng(derive_seed(config.seed, kInit, static_cast<std::uint64_t>(fold)));
  Rng order_rng(derive_seed(config.seed, kOrder, static_cast<std::uint64_t>(fold)));
  Rng aug_rng(derive_seed(config.seed, kAugment, static_cast<std::uint64_t>(fold)));
  FoldTraining out{Model(enc, cls, init_rng), {}, {}};
  Model& model = out.model;
  FoldReport& report = out.report;
  report.fold_index = fold;
  report.train_indices = split.train_indices(fold);
  report.val_indices = split.val_indices(fold);
  if (report.train_indices.empty() || report.val_indices.empty()) {
    throw EmptyInputError("fold " + std::to_string(fold) + " has an empty train or validation split");
  }
  std::vector<bool> is_val(data.n, false);
  for (auto i : report.val_indices) is_val[i] = true;

  struct Phase {
    int epochs;
    StepKind kind;
    std::vector<Tensor> params;
  };
  std::vector<Phase> phases;
  switch (config.mode) {
    case TrainMode::joint:
      phases.push_back({config.epochs, StepKind::joint, model.all_tensors()});
      break;
    case TrainMode::classifier_only:
      phases.push_back({config.epochs, StepKind::supervised, model.all_tensors()});
      break;
    case TrainMode::two_step: {
      const int first = (config.epochs + 1) / 2;
      phases.push_back({first, StepKind::contrastive, model.encoder_tensors()});
      phases.push_back({config.epochs - first, StepKind::classifier_head, model.classifier_tensors()});
      break;
    }
  }

  // Full batches only; a training split smaller than one batch trains as a single batch.
  const std::size_t bs = std::min(config.batch_size, report.train_indices.size());
  int epoch = 0;
  std::vector<std::size_t> order = report.train_indices;
  for (auto& phase : phases) {
    Adam optimizer(phase.params, config.lr);
    for (int e = 0; e < phase.epochs; ++e, ++epoch) {
      std::shuffle(order.begin(), order.end(), order_rng);
      std::vector<LossBreakdown> steps;
      const std::size_t n_batches = order.size() / bs;
      for (std::size_t b = 0; b < n_batches; ++b) {
        const std::span<const std::size_t> idx(order.data() + b * bs, bs);
        for (auto i : idx) {
          if (is_val[i]) throw ContractError("validation segment " + std::to_string(i) + " reached a training batch");
        }
        steps.push_back(train_step(make_batch(data, idx), model, optimizer, config, aug_rng, phase.kind));
      }
      std::string val;
      if (config.eval_every_epoch) val = format_double(evaluate(model, data, report.val_indices).accuracy);
      for (std::size_t s = 0; s < steps.size(); ++s) {
        const auto& st = steps[s];
        out.metrics_rows.push_back(std::to_string(fold) + ',' + std::to_string(epoch) + ',' + std::to_string(s) + ',' +
                                   format_levels(st) + ',' + format_double(st.hcl) + ',' +
                                   format_double(st.class_loss) + ',' + format_double(st.total) + ',' +
                                   (s + 1 == steps.size() ? val : std::string()));
      }
      report.loss_history.push_back(epoch_mean(steps));
    }
  }

  model.snap_to_float32();
  const EvalResult eval = evaluate(model, data, report.val_indices);
  report.accuracy = eval.accuracy;
  report.confusion = eval.confusion;
  return out;
}

SkcvResult run_skcv(const SegmentSet& data, const TrainConfig& config, const RunOutputs& outputs) {
  config.validate();
  data.validate();
  SkcvResult result;
  result.mode = config.mode;
  result.split = stratified_kfold(data.labels, config.k_folds, derive_seed(config.seed, kSplit), config.contiguous_folds);

  if (outputs.metrics_csv) *outputs.metrics_csv << kMetricsHeader << '\n';
  auto finish = [&](FoldTraining&& ft) {
    if (outputs.metrics_csv)
      for (const auto& row : ft.metrics_rows) *outputs.metrics_csv << row << '\n';
    if (!outputs.checkpoint_dir.empty()) {
      save_checkpoint(ft.model, outputs.checkpoint_dir / ("fold_" + std::to_string(ft.report.fold_index) + ".ckpt"),
                      {{"fold", ft.report.fold_index},
                       {"seed", config.seed},
                       {"mode", to_string(config.mode)},
                       {"val_accuracy", ft.report.accuracy},
                       {"val_indices", ft.report.val_indices}});
    }
    if (outputs.log) {
      outputs.log("fold " + std::to_string(ft.report.fold_index) + " [" + to_string(config.mode) +
                  "] accuracy " + format_double(ft.report.accuracy));
    }
    result.folds.push_back(std::move(ft.report));
  };

  const int k = config.k_folds;
  for (int start = 0; start < k; start += config.jobs) {
    const int end = std::min(k, start + config.jobs);
    if (end - start == 1) {
      finish(train_fold(data, result.split, start, config));
      continue;
    }
    std::vector<std::future<FoldTraining>> pending;
    for (int f = start; f < end; ++f) {
      pending.push_back(std::async(std::launch::async, [&, f] { return train_fold(data, result.split, f, config); }));
    }
    for (auto& p : pending) finish(p.get());
  }

  double total = 0.0;
  for (const auto& f : result.folds) total += f.accuracy;
  result.mean_accuracy = total / static_cast<double>(result.folds.size());
  return result;
}

SkcvResult two_step_baseline(const SegmentSet& data, TrainConfig config, const RunOutputs& outputs) {
  config.mode = TrainMode::two_step;
  return run_skcv(data, config, outputs);
}

double ModeComparison::mean(std::size_t arm) const {
  const auto& v = accuracy.at(arm);
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

std::string ModeComparison::table() const {
  std::ostringstream os;
  os << "mode";
  for (auto s : seeds) os << ",seed_" << s;
  os << ",mean\n";
  for (std::size_t arm = 0; arm < kModes.size(); ++arm) {
    os << to_string(kModes[arm]);
    for (double a : accuracy[arm]) os << ',' << format_double(a);
    os << ',' << format_double(mean(arm)) << '\n';
  }
  return os.str();
}

ModeComparison compare_modes(const SegmentSet& data, const TrainConfig& config, std::span<const std::uint64_t> seeds,
                             const std::function<void(const std::string&)>& log) {
  ModeComparison cmp;
  cmp.seeds.assign(seeds.begin(), seeds.end());
  for (auto seed : seeds) {
    for (std::size_t arm = 0; arm < ModeComparison::kModes.size(); ++arm) {
      TrainConfig c = config;
      c.seed = seed;
      c.mode = ModeComparison::kModes[arm];
      const auto r = run_skcv(data, c);
      cmp.accuracy[arm].push_back(r.mean_accuracy);
      if (log) log("seed " + std::to_string(seed) + " " + to_string(c.mode) + " mean accuracy " + format_double(r.mean_accuracy));
    }
  }
  return cmp;
}

json to_json(const FoldReport& r) {
  json history = json::array();
  for (const auto& b : r.loss_history) history.push_back(to_json(b));
  return {{"fold_index", r.fold_index},
          {"accuracy", r.accuracy},
          {"confusion", r.confusion},
          {"train_size", r.train_indices.size()},
          {"val_indices", r.val_indices},
          {"loss_history", history}};
}

json to_json(const SkcvResult& r) {
  json folds = json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f));
  return {{"mode", to_string(r.mode)},
          {"k", r.split.k},
          {"fold_assignments", r.split.fold_assignments},
          {"folds", folds},
          {"mean_accuracy", r.mean_accuracy}};
}

}  // namespace cleer
