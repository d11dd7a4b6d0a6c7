// cleer: command-line front end for data generation, preprocessing,
// training, evaluation, channel ablation and gradient checks.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "cleer/ablation.hpp"
#include "cleer/error.hpp"
#include "cleer/gradcheck_suite.hpp"
#include "cleer/preprocess.hpp"
#include "cleer/segments.hpp"
#include "cleer/synthetic.hpp"
#include "cleer/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cleer;

namespace {

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kFormat = 3, kContract = 4 };

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string() + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CLEER_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("CLEER_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return 0;
}

void log_line(const std::string& msg) { std::cerr << "[cleer] " << msg << std::endl; }

// Every command records what it read, what it wrote and how long it took.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const fs::path& p) { outputs_.push_back(p); }
  json& config() { return config_; }
  void seed(std::uint64_t s) { seed_ = s; }

  void write(const fs::path& path) const {
    auto entries = [](const std::vector<fs::path>& paths) {
      json arr = json::array();
      for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
      return arr;
    };
    json j = {{"command", command_},
              {"config", config_},
              {"inputs", entries(inputs_)},
              {"outputs", entries(outputs_)},
              {"duration_seconds",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
    if (seed_) j["seed"] = *seed_;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream(path) << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  std::vector<fs::path> inputs_, outputs_;
  json config_ = json::object();
  std::optional<std::uint64_t> seed_;
};

fs::path manifest_path_for(const fs::path& output) {
  return output.has_parent_path() ? output.parent_path() / (output.filename().string() + ".manifest.json")
                                  : fs::path(output.filename().string() + ".manifest.json");
}

// Flags mirroring TrainConfig. Values start at the given defaults so --help
// shows them; only flags actually passed override the --config file.
struct TrainFlags {
  std::string config_path;
  TrainConfig defaults;
  std::string mode;
  int epochs;
  double lr;
  std::size_t batch_size;
  int k_folds;
  double lambda_class;
  double mask_p;
  std::uint64_t seed;
  std::size_t hidden_dim, repr_dim, kernel_size, conv_channels;
  std::size_t blocks;
  std::vector<int> dilations;
  std::vector<std::size_t> fc_dims;
  bool symmetrize = false, contiguous = false, no_eval = false;
  int jobs;
  std::vector<CLI::Option*> options;
  std::map<std::string, CLI::Option*> by_name;

  explicit TrainFlags(TrainConfig d) : defaults(std::move(d)) {
    mode = to_string(defaults.mode);
    epochs = defaults.epochs;
    lr = defaults.lr;
    batch_size = defaults.batch_size;
    k_folds = defaults.k_folds;
    lambda_class = defaults.lambda_class;
    mask_p = defaults.mask_p;
    seed = defaults.seed;
    hidden_dim = defaults.encoder.hidden_dim;
    repr_dim = defaults.encoder.repr_dim;
    kernel_size = defaults.encoder.kernel_size;
    blocks = defaults.encoder.n_blocks();
    conv_channels = defaults.classifier.conv_channels;
    fc_dims = defaults.classifier.fc_dims;
    jobs = defaults.jobs;
  }

  void add(CLI::App* app) {
    auto reg = [&](CLI::Option* o) {
      by_name[o->get_name()] = o;
      return o;
    };
    app->add_option("--config", config_path, "JSON file with TrainConfig fields (flags take precedence)")
        ->check(CLI::ExistingFile);
    reg(app->add_option("--mode", mode, "joint | classifier_only | two_step")
            ->check(CLI::IsMember({"joint", "classifier_only", "two_step"}))
            ->capture_default_str());
    reg(app->add_option("--epochs", epochs, "Training epochs per fold")->capture_default_str());
    reg(app->add_option("--lr", lr, "Adam learning rate")->capture_default_str());
    reg(app->add_option("--batch-size", batch_size, "Mini-batch size")->capture_default_str());
    reg(app->add_option("--k-folds", k_folds, "Stratified cross-validation folds")->capture_default_str());
    reg(app->add_option("--lambda", lambda_class, "Weight of the cross-entropy term")->capture_default_str());
    reg(app->add_option("--mask-p", mask_p, "Timestamp masking probability")->capture_default_str());
    reg(app->add_option("--seed", seed, "Random seed (default: $CLEER_SEED, else 0)")->capture_default_str());
    reg(app->add_option("--hidden-dim", hidden_dim, "Encoder hidden width")->capture_default_str());
    reg(app->add_option("--repr-dim", repr_dim, "Representation width")->capture_default_str());
    reg(app->add_option("--kernel-size", kernel_size, "Encoder conv kernel size (odd)")->capture_default_str());
    reg(app->add_option("--blocks", blocks, "Residual blocks with dilations 1, 2, 4, ...")->capture_default_str());
    reg(app->add_option("--dilations", dilations, "Explicit dilation per block (overrides --blocks)")
            ->delimiter(','));
    reg(app->add_option("--conv-channels", conv_channels, "Classifier conv channels")->capture_default_str());
    reg(app->add_option("--fc-dims", fc_dims, "Classifier hidden FC widths")->delimiter(',')->capture_default_str());
    reg(app->add_flag("--symmetrize", symmetrize, "Average contrastive losses over both view orders"));
    reg(app->add_flag("--contiguous-folds", contiguous, "Cut each class into consecutive fold blocks"));
    reg(app->add_flag("--no-epoch-eval", no_eval, "Skip per-epoch validation accuracy in metrics.csv"));
    reg(app->add_option("--jobs", jobs, "Folds (or channels) trained concurrently")->capture_default_str());
  }

  bool given(const std::string& name) const {
    auto it = by_name.find(name);
    return it != by_name.end() && it->second->count() > 0;
  }

  TrainConfig resolve() const {
    TrainConfig c = defaults;
    c.seed = default_seed();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw FormatError("config " + config_path + ": " + e.what());
      }
      c = train_config_from_json(j, c);
    }
    if (given("--mode")) c.mode = parse_train_mode(mode);
    if (given("--epochs")) c.epochs = epochs;
    if (given("--lr")) c.lr = lr;
    if (given("--batch-size")) c.batch_size = batch_size;
    if (given("--k-folds")) c.k_folds = k_folds;
    if (given("--lambda")) c.lambda_class = lambda_class;
    if (given("--mask-p")) c.mask_p = mask_p;
    if (given("--seed")) c.seed = seed;
    if (given("--hidden-dim")) c.encoder.hidden_dim = hidden_dim;
    if (given("--repr-dim")) c.encoder.repr_dim = repr_dim;
    if (given("--kernel-size")) c.encoder.kernel_size = kernel_size;
    if (given("--blocks")) c.encoder.dilation_schedule = EncoderConfig::doubling_schedule(blocks);
    if (given("--dilations")) c.encoder.dilation_schedule = dilations;
    if (given("--conv-channels")) c.classifier.conv_channels = conv_channels;
    if (given("--fc-dims")) c.classifier.fc_dims = fc_dims;
    if (given("--symmetrize")) c.symmetrize = symmetrize;
    if (given("--contiguous-folds")) c.contiguous_folds = contiguous;
    if (given("--no-epoch-eval")) c.eval_every_epoch = !no_eval;
    if (given("--jobs")) c.jobs = jobs;
    c.encoder.validate();
    c.classifier.in_dim = c.encoder.repr_dim;
    c.classifier.validate();
    c.validate();
    return c;
  }
};

SegmentSet load_input(const fs::path& path, Manifest& manifest) {
  manifest.input(path);
  return load_segments(path);
}

// ---- commands ---------------------------------------------------------------

struct GenDataArgs {
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  fs::path out;
};

int cmd_gen_data(const GenDataArgs& a, bool seed_given) {
  Manifest m("gen-data");
  SyntheticSpec spec = a.spec;
  spec.seed = seed_given ? a.seed : default_seed();
  const auto set = make_synthetic_dataset(spec);
  save_segments(set, a.out);
  m.seed(spec.seed);
  m.config() = {{"n_per_class", spec.n_per_class}, {"t", spec.t},       {"c", spec.c},
                {"channels", spec.informative_channels}, {"snr_db", spec.snr_db}, {"seed", spec.seed}};
  m.output(a.out);
  m.write(manifest_path_for(a.out));
  std::cout << json{{"segments", set.n}, {"t", set.t}, {"c", set.c}, {"out", a.out.string()}}.dump() << '\n';
  return kOk;
}

struct PreprocessArgs {
  fs::path in, out;
  PreprocessOptions options;
  bool no_average_reference = false;
  double fs_hz = 200.0;
  double window_s = 2.0, overlap_s = 0.2;
  int label = 0;
};

int cmd_preprocess(const PreprocessArgs& a) {
  Manifest m("preprocess");
  PreprocessOptions opt = a.options;
  opt.average_reference = !a.no_average_reference;
  m.input(a.in);
  SegmentSet out;
  if (a.in.extension() == ".csv") {
    // Continuous recording: filter the whole signal, then segment.
    auto csv = read_recording_csv(a.in, a.fs_hz, a.label);
    const auto filtered = preprocess_recording(csv.recording, opt);
    out = segment_recording(filtered, a.window_s, a.overlap_s, csv.channel_names);
  } else {
    out = preprocess_segments(load_segments(a.in), opt);
  }
  save_segments(out, a.out);
  m.config() = {{"average_reference", opt.average_reference}, {"low_hz", opt.low_hz},
                {"high_hz", opt.high_hz},                     {"order", opt.order},
                {"notch_hz", opt.notch_hz},                   {"notch_quality", opt.notch_quality},
                {"window_seconds", a.window_s},               {"overlap_seconds", a.overlap_s}};
  m.output(a.out);
  m.write(manifest_path_for(a.out));
  std::cout << json{{"segments", out.n}, {"t", out.t}, {"c", out.c}, {"out", a.out.string()}}.dump() << '\n';
  return kOk;
}

int cmd_train(const fs::path& data_path, const fs::path& out_dir, bool checkpoints, const TrainFlags& flags) {
  Manifest m("train");
  TrainConfig cfg = flags.resolve();
  const auto data = load_input(data_path, m);
  cfg.encoder.in_channels = data.c;
  fs::create_directories(out_dir);
  const fs::path metrics_path = out_dir / "metrics.csv";
  std::ofstream metrics(metrics_path, std::ios::binary);
  RunOutputs outputs;
  outputs.metrics_csv = &metrics;
  if (checkpoints) outputs.checkpoint_dir = out_dir / "checkpoints";
  outputs.log = log_line;
  const auto result = run_skcv(data, cfg, outputs);
  metrics.close();

  const fs::path folds_path = out_dir / "folds.json";
  json report = to_json(result);
  report["config"] = to_json(cfg);
  std::ofstream(folds_path) << report.dump(2) << '\n';

  m.seed(cfg.seed);
  m.config() = to_json(cfg);
  m.output(metrics_path);
  m.output(folds_path);
  if (checkpoints)
    for (int f = 0; f < cfg.k_folds; ++f) m.output(outputs.checkpoint_dir / ("fold_" + std::to_string(f) + ".ckpt"));
  m.write(out_dir / "manifest.json");

  json fold_acc = json::array();
  for (const auto& f : result.folds) fold_acc.push_back(f.accuracy);
  std::cout << json{{"mode", to_string(cfg.mode)}, {"mean_accuracy", result.mean_accuracy}, {"fold_accuracy", fold_acc}}
                   .dump()
            << '\n';
  return kOk;
}

int cmd_evaluate(const fs::path& ckpt_path, const fs::path& data_path, bool all) {
  Manifest m("evaluate");
  m.input(ckpt_path);
  const auto loaded = load_checkpoint(ckpt_path);
  const auto data = load_input(data_path, m);
  EvalResult r;
  if (!all && loaded.meta.contains("val_indices")) {
    const auto idx = loaded.meta.at("val_indices").get<std::vector<std::size_t>>();
    r = evaluate(loaded.model, data, idx);
  } else {
    r = evaluate(loaded.model, data);
  }
  json out = {{"accuracy", r.accuracy}, {"confusion", r.confusion}, {"n", r.predictions.size()}};
  if (loaded.meta.contains("val_accuracy")) out["stored_val_accuracy"] = loaded.meta.at("val_accuracy");
  std::cout << out.dump() << '\n';
  return kOk;
}

int cmd_ablate(const fs::path& data_path, const fs::path& out, const std::string& method, const TrainFlags& flags) {
  Manifest m("ablate");
  const TrainConfig cfg = flags.resolve();
  const auto data = load_input(data_path, m);
  const auto report = per_channel_eval(data, cfg, parse_ablation_method(method), log_line);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out, std::ios::binary) << report.to_csv(true);
  m.seed(cfg.seed);
  m.config() = to_json(cfg);
  m.config()["method"] = method;
  m.output(out);
  m.write(manifest_path_for(out));
  json rows = json::array();
  for (const auto& r : report.ranked()) rows.push_back({r.channel_index, r.channel_name, r.mean_accuracy});
  std::cout << json{{"method", method}, {"ranked", rows}}.dump() << '\n';
  return kOk;
}

int cmd_compare(const fs::path& data_path, const fs::path& out, const std::vector<std::uint64_t>& seeds,
                const TrainFlags& flags) {
  Manifest m("compare-modes");
  TrainConfig cfg = flags.resolve();
  const auto data = load_input(data_path, m);
  cfg.encoder.in_channels = data.c;
  const auto cmp = compare_modes(data, cfg, seeds, log_line);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out, std::ios::binary) << cmp.table();
  m.config() = to_json(cfg);
  m.config()["seeds"] = seeds;
  m.output(out);
  m.write(manifest_path_for(out));
  std::cout << cmp.table();
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, double tol) {
  GradCheckOptions opt;
  opt.tol_rel = tol;
  const auto checks = run_gradcheck_suite(seed, opt);
  bool ok = true;
  json rows = json::array();
  for (const auto& c : checks) {
    ok &= c.report.passed;
    std::cout << c.name << "  " << c.report.summary() << '\n';
    rows.push_back({{"kernel", c.name}, {"passed", c.report.passed}, {"max_rel_error", c.report.max_rel_error}});
  }
  std::cout << json{{"passed", ok}, {"checked", checks.size()}, {"tolerance", tol}}.dump() << '\n';
  return ok ? kOk : kContract;
}

int cmd_export(const fs::path& ckpt_path, const fs::path& data_path, const fs::path& out) {
  Manifest m("export-reprs");
  m.input(ckpt_path);
  const auto loaded = load_checkpoint(ckpt_path);
  const auto data = load_input(data_path, m);
  export_representations(loaded.model, data, out);
  m.output(out);
  m.write(manifest_path_for(out));
  std::cout << json{{"rows", data.n}, {"columns", loaded.model.encoder.config().repr_dim + 2}, {"out", out.string()}}
                   .dump()
            << '\n';
  return kOk;
}

int fail(int code, const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cleer: hierarchical contrastive EEG representation learning"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);

  // gen-data
  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic frequency-coded SEGD dataset");
  gen_cmd->add_option("--n-per-class", gen.spec.n_per_class, "Segments per class")->capture_default_str();
  gen_cmd->add_option("--t", gen.spec.t, "Samples per segment")->capture_default_str();
  gen_cmd->add_option("--c", gen.spec.c, "Channels")->capture_default_str();
  gen_cmd->add_option("--channels", gen.spec.informative_channels, "Informative channel indices")
      ->delimiter(',')
      ->capture_default_str();
  gen_cmd->add_option("--snr-db", gen.spec.snr_db, "Signal-to-noise ratio in dB")->capture_default_str();
  auto* gen_seed = gen_cmd->add_option("--seed", gen.seed, "Random seed (default: $CLEER_SEED, else 0)")
                       ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output SEGD path")->required();

  // preprocess
  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Average reference, bandpass and notch; CSV recordings are segmented");
  pre_cmd->add_option("--in", pre.in, "Input SEGD file, or CSV recording (header of channel names, optional label column)")
      ->required()
      ->check(CLI::ExistingFile);
  pre_cmd->add_option("--out", pre.out, "Output SEGD path")->required();
  pre_cmd->add_option("--low", pre.options.low_hz, "Bandpass low edge (Hz)")->capture_default_str();
  pre_cmd->add_option("--high", pre.options.high_hz, "Bandpass high edge (Hz)")->capture_default_str();
  pre_cmd->add_option("--order", pre.options.order, "Butterworth prototype order")->capture_default_str();
  pre_cmd->add_option("--notch", pre.options.notch_hz, "Notch frequency (Hz, <= 0 disables)")->capture_default_str();
  pre_cmd->add_option("--notch-quality", pre.options.notch_quality, "Notch quality factor")->capture_default_str();
  pre_cmd->add_flag("--no-average-reference", pre.no_average_reference, "Skip common average referencing");
  pre_cmd->add_option("--fs", pre.fs_hz, "Sample rate of a CSV recording (Hz)")->capture_default_str();
  pre_cmd->add_option("--window", pre.window_s, "Segment length for CSV input (s)")->capture_default_str();
  pre_cmd->add_option("--overlap", pre.overlap_s, "Segment overlap for CSV input (s)")->capture_default_str();
  pre_cmd->add_option("--label", pre.label, "Label for CSV input without a label column")->capture_default_str();

  // train
  fs::path train_data, train_out = "run";
  bool no_ckpt = false;
  TrainFlags train_flags{TrainConfig{}};
  auto* train_cmd = app.add_subcommand("train", "Stratified k-fold training; writes metrics.csv, folds.json, checkpoints");
  train_cmd->add_option("--data", train_data, "SEGD dataset")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out-dir", train_out, "Output directory")->capture_default_str();
  train_cmd->add_flag("--no-checkpoints", no_ckpt, "Do not write per-fold checkpoints");
  train_flags.add(train_cmd);

  // evaluate
  fs::path eval_ckpt, eval_data;
  bool eval_all = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy of a checkpoint on its stored validation split");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "CKPT file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "SEGD dataset")->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--all", eval_all, "Evaluate every segment instead of the stored validation split");

  // ablate
  TrainConfig ablate_defaults;
  ablate_defaults.epochs = 10;
  ablate_defaults.encoder.hidden_dim = 16;
  ablate_defaults.encoder.repr_dim = 32;
  ablate_defaults.encoder.dilation_schedule = EncoderConfig::doubling_schedule(3);
  ablate_defaults.classifier.conv_channels = 32;
  ablate_defaults.classifier.fc_dims = {32};
  TrainFlags ablate_flags{ablate_defaults};
  fs::path ablate_data, ablate_out = "channels.csv";
  std::string ablate_method = "retrain";
  auto* ablate_cmd =
      app.add_subcommand("ablate", "Per-channel accuracy (reduced default config: 10 epochs, hidden 16, repr 32)");
  ablate_cmd->add_option("--data", ablate_data, "SEGD dataset")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--out", ablate_out, "ChannelReport CSV (ranked)")->capture_default_str();
  ablate_cmd->add_option("--method", ablate_method, "retrain | occlusion")
      ->check(CLI::IsMember({"retrain", "occlusion"}))
      ->capture_default_str();
  ablate_flags.add(ablate_cmd);

  // compare-modes
  TrainFlags cmp_flags{TrainConfig{}};
  fs::path cmp_data, cmp_out = "modes.csv";
  std::vector<std::uint64_t> cmp_seeds{0, 1, 2, 3, 4};
  auto* cmp_cmd = app.add_subcommand("compare-modes", "joint / two_step / classifier_only over several seeds");
  cmp_cmd->add_option("--data", cmp_data, "SEGD dataset")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--out", cmp_out, "Comparison table CSV")->capture_default_str();
  cmp_cmd->add_option("--seeds", cmp_seeds, "Seeds")->delimiter(',')->capture_default_str();
  cmp_flags.add(cmp_cmd);

  // gradcheck
  std::uint64_t gc_seed = 0;
  double gc_tol = 1e-4;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable kernel");
  gc_cmd->add_option("--seed", gc_seed, "Seed for the random inputs")->capture_default_str();
  gc_cmd->add_option("--tol", gc_tol, "Relative error tolerance")->capture_default_str();

  // export-reprs
  fs::path ex_ckpt, ex_data, ex_out = "reprs.csv";
  auto* ex_cmd = app.add_subcommand("export-reprs", "Write max-pooled representations per segment as CSV");
  ex_cmd->add_option("--checkpoint", ex_ckpt, "CKPT file")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--data", ex_data, "SEGD dataset")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--out", ex_out, "Output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "UsageError", e.what());
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, gen_seed->count() > 0);
    if (*pre_cmd) return cmd_preprocess(pre);
    if (*train_cmd) return cmd_train(train_data, train_out, !no_ckpt, train_flags);
    if (*eval_cmd) return cmd_evaluate(eval_ckpt, eval_data, eval_all);
    if (*ablate_cmd) return cmd_ablate(ablate_data, ablate_out, ablate_method, ablate_flags);
    if (*cmp_cmd) return cmd_compare(cmp_data, cmp_out, cmp_seeds, cmp_flags);
    if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_tol);
    if (*ex_cmd) return cmd_export(ex_ckpt, ex_data, ex_out);
  } catch (const FormatError& e) {
    return fail(kFormat, "FormatError", e.what());
  } catch (const ContractError& e) {
    return fail(kContract, "ContractError", e.what());
  } catch (const ConfigError& e) {
    return fail(kUsage, "ConfigError", e.what());
  } catch (const StratificationError& e) {
    return fail(kUsage, "StratificationError", e.what());
  } catch (const DesignError& e) {
    return fail(kUsage, "DesignError", e.what());
  } catch (const DimensionError& e) {
    return fail(kFormat, "DimensionError", e.what());
  } catch (const Error& e) {
    return fail(kOther, "Error", e.what());
  } catch (const std::exception& e) {
    return fail(kOther, "InternalError", e.what());
  }
  return kUsage;
}
