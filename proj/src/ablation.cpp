#include "cleer/ablation.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include "cleer/error.hpp"
#include "cleer/ops.hpp"

namespace cleer {

std::string to_string(AblationMethod method) {
  return method == AblationMethod::retrain ? "retrain" : "occlusion";
}

AblationMethod parse_ablation_method(const std::string& text) {
  if (text == "retrain") return AblationMethod::retrain;
  if (text == "occlusion") return AblationMethod::occlusion;
  throw ConfigError("unknown ablation method '" + text + "' (expected retrain or occlusion)");
}

std::vector<ChannelRow> ChannelReport::ranked() const {
  auto out = rows;
  std::stable_sort(out.begin(), out.end(),
                   [](const ChannelRow& a, const ChannelRow& b) { return a.mean_accuracy > b.mean_accuracy; });
  return out;
}

std::string ChannelReport::to_csv(bool ranked_order) const {
  std::ostringstream os;
  os << "channel_index,channel_name,mean_accuracy\n";
  for (const auto& r : ranked_order ? ranked() : rows) {
    os << r.channel_index << ',' << r.channel_name << ',' << format_double(r.mean_accuracy) << '\n';
  }
  return os.str();
}

namespace {

std::string channel_name(const SegmentSet& data, std::size_t c) {
  return c < data.channel_names.size() ? data.channel_names[c] : "ch" + std::to_string(c);
}

template <class Fn>
std::vector<double> run_grouped(std::size_t count, int jobs, Fn&& fn) {
  std::vector<double> out(count);
  const auto step = static_cast<std::size_t>(std::max(jobs, 1));
  for (std::size_t start = 0; start < count; start += step) {
    const std::size_t end = std::min(count, start + step);
    if (end - start == 1) {
      out[start] = fn(start);
      continue;
    }
    std::vector<std::future<double>> pending;
    for (std::size_t i = start; i < end; ++i) pending.push_back(std::async(std::launch::async, fn, i));
    for (std::size_t i = start; i < end; ++i) out[i] = pending[i - start].get();
  }
  return out;
}

ChannelReport retrain(const SegmentSet& data, const TrainConfig& config,
                      const std::function<void(const std::string&)>& log) {
  TrainConfig inner = config;
  inner.jobs = 1;
  const auto acc = run_grouped(data.c, config.jobs, [&](std::size_t c) {
    const std::size_t ch[] = {c};
    const double mean = run_skcv(data.select_channels(ch), inner).mean_accuracy;
    if (log) log("channel " + std::to_string(c) + " (" + channel_name(data, c) + ") accuracy " + format_double(mean));
    return mean;
  });
  ChannelReport report{AblationMethod::retrain, {}};
  for (std::size_t c = 0; c < data.c; ++c) report.rows.push_back({c, channel_name(data, c), acc[c]});
  return report;
}

ChannelReport occlusion(const SegmentSet& data, const TrainConfig& config,
                        const std::function<void(const std::string&)>& log) {
  config.validate();
  const FoldSplit split =
      stratified_kfold(data.labels, config.k_folds, derive_seed(config.seed, 0x5EED), config.contiguous_folds);
  TrainConfig inner = config;
  inner.jobs = 1;
  std::vector<double> totals(data.c, 0.0);
  for (int f = 0; f < config.k_folds; ++f) {
    const FoldTraining trained = train_fold(data, split, f, inner);
    const SegmentSet val = data.subset(trained.report.val_indices);
    const auto acc = run_grouped(data.c, config.jobs, [&](std::size_t keep) {
      SegmentSet masked = val;
      for (std::size_t i = 0; i < masked.n * masked.t; ++i) {
        for (std::size_t c = 0; c < masked.c; ++c) {
          if (c != keep) masked.data[i * masked.c + c] = 0.0F;
        }
      }
      return evaluate(trained.model, masked).accuracy;
    });
    for (std::size_t c = 0; c < data.c; ++c) totals[c] += acc[c];
    if (log) log("occlusion fold " + std::to_string(f) + " done");
  }
  ChannelReport report{AblationMethod::occlusion, {}};
  for (std::size_t c = 0; c < data.c; ++c) {
    report.rows.push_back({c, channel_name(data, c), totals[c] / static_cast<double>(config.k_folds)});
  }
  return report;
}

}  // namespace

ChannelReport per_channel_eval(const SegmentSet& data, const TrainConfig& config, AblationMethod method,
                               const std::function<void(const std::string&)>& log) {
  data.validate();
  if (data.c < 1) throw ConfigError("per_channel_eval needs at least one channel");
  return method == AblationMethod::retrain ? retrain(data, config, log) : occlusion(data, config, log);
}

std::vector<std::vector<double>> pooled_representations(const Model& model, const SegmentSet& data,
                                                        std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  NoGradGuard no_grad;
  std::vector<std::vector<double>> out;
  out.reserve(data.n);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.n; start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.n, start + batch_size); ++i) idx.push_back(i);
    const Batch batch = make_batch(data, idx);
    // [B, L, D] -> [B, D, L] -> max over L
    const Tensor pooled = ops::global_max_pool(ops::transpose12(model.encoder.encode(batch.x)));
    const std::size_t d = pooled.dim(1);
    const auto v = pooled.data();
    for (std::size_t i = 0; i < idx.size(); ++i) out.emplace_back(v.begin() + i * d, v.begin() + (i + 1) * d);
  }
  return out;
}

void export_representations(const Model& model, const SegmentSet& data, const std::filesystem::path& path) {
  const auto reps = pooled_representations(model, data);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "segment_index,label";
  const std::size_t d = reps.empty() ? model.encoder.config().repr_dim : reps.front().size();
  for (std::size_t j = 0; j < d; ++j) os << ",r_" << j;
  os << '\n';
  for (std::size_t i = 0; i < reps.size(); ++i) {
    os << i << ',' << data.labels[i];
    for (double x : reps[i]) os << ',' << format_double(x);
    os << '\n';
  }
  if (!os) throw Error("failed writing " + path.string());
}

}  // namespace cleer
