#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kDir = fs::temp_directory_path() / "cleer_cli_tests";

struct Run {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Run cli(const std::string& args, const std::string& env = "") {
  fs::create_directories(kDir);
  const auto out = kDir / "stdout.txt", err = kDir / "stderr.txt";
  const std::string cmd = "cd '" + kDir.string() + "' && " + env + " '" CLEER_CLI_PATH "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

const char* kSmallTrain =
    " --epochs 2 --batch-size 8 --k-folds 3 --hidden-dim 8 --repr-dim 8 --blocks 2 --conv-channels 8 --fc-dims 8";

}  // namespace

TEST_CASE("gen-data with a repeated seed writes identical files") {
  REQUIRE(cli("gen-data --n-per-class 5 --t 32 --c 4 --channels 1 --seed 4 --out a.segd").code == 0);
  REQUIRE(cli("gen-data --n-per-class 5 --t 32 --c 4 --channels 1 --seed 4 --out b.segd").code == 0);
  REQUIRE(cli("gen-data --n-per-class 5 --t 32 --c 4 --channels 1 --seed 5 --out c.segd").code == 0);
  CHECK(slurp(kDir / "a.segd") == slurp(kDir / "b.segd"));
  CHECK(slurp(kDir / "a.segd") != slurp(kDir / "c.segd"));
  const auto manifest = json::parse(slurp(kDir / "a.segd.manifest.json"));
  CHECK(manifest.at("command") == "gen-data");
  CHECK(manifest.at("seed") == 4);
  CHECK(manifest.at("outputs")[0].at("sha256").get<std::string>().size() == 64);
}

TEST_CASE("CLEER_SEED is the fallback seed") {
  REQUIRE(cli("gen-data --n-per-class 5 --t 32 --c 4 --channels 1 --out e.segd", "CLEER_SEED=4").code == 0);
  REQUIRE(cli("gen-data --n-per-class 5 --t 32 --c 4 --channels 1 --seed 4 --out a.segd").code == 0);
  CHECK(slurp(kDir / "e.segd") == slurp(kDir / "a.segd"));
  CHECK(cli("gen-data --out e.segd", "CLEER_SEED=abc").code == 2);
}

TEST_CASE("defaults produce a dataset the trainer accepts") {
  REQUIRE(cli("gen-data --n-per-class 10 --t 32 --out d.segd").code == 0);
  const auto r = cli(std::string("train --data d.segd --out-dir run") + kSmallTrain);
  REQUIRE(r.code == 0);
  const auto printed = json::parse(r.out);
  const auto persisted = json::parse(slurp(kDir / "run" / "folds.json"));
  CHECK(printed.at("mean_accuracy") == persisted.at("mean_accuracy"));
  CHECK(fs::exists(kDir / "run" / "metrics.csv"));
  CHECK(fs::exists(kDir / "run" / "checkpoints" / "fold_2.ckpt"));
  const auto manifest = json::parse(slurp(kDir / "run" / "manifest.json"));
  CHECK(manifest.at("config").at("encoder").at("in_channels") == 8);
  CHECK(manifest.at("outputs").size() == 5);

  const auto ev = cli("evaluate --checkpoint run/checkpoints/fold_1.ckpt --data d.segd");
  REQUIRE(ev.code == 0);
  const auto e = json::parse(ev.out);
  CHECK(e.at("accuracy") == e.at("stored_val_accuracy"));

  REQUIRE(cli("export-reprs --checkpoint run/checkpoints/fold_0.ckpt --data d.segd --out r.csv").code == 0);
  std::ifstream reprs(kDir / "r.csv");
  std::string header;
  std::getline(reprs, header);
  CHECK(header.rfind("segment_index,label,r_0,", 0) == 0);
}

TEST_CASE("flags override the config file") {
  REQUIRE(cli("gen-data --n-per-class 6 --t 32 --c 3 --channels 1 --out d3.segd").code == 0);
  {
    std::ofstream cfg(kDir / "cfg.json");
    cfg << R"({"epochs": 3, "lr": 0.005, "k_folds": 3})";
  }
  REQUIRE(cli(std::string("train --data d3.segd --out-dir runc --config cfg.json") + " --epochs 2 --batch-size 6"
              " --hidden-dim 8 --repr-dim 8 --blocks 2 --conv-channels 8 --fc-dims 8 --no-checkpoints")
              .code == 0);
  const auto cfg = json::parse(slurp(kDir / "runc" / "manifest.json")).at("config");
  CHECK(cfg.at("epochs") == 2);
  CHECK(cfg.at("lr") == 0.005);
  CHECK(cfg.at("k_folds") == 3);
}

TEST_CASE("modes, ablation and the comparison table") {
  REQUIRE(cli("gen-data --n-per-class 6 --t 32 --c 3 --channels 1 --out d3.segd").code == 0);
  CHECK(cli(std::string("train --mode two_step --no-checkpoints --data d3.segd --out-dir run2") + kSmallTrain)
            .code == 0);
  const auto ab = cli(std::string("ablate --data d3.segd --out ch.csv --method occlusion") + kSmallTrain);
  REQUIRE(ab.code == 0);
  CHECK(slurp(kDir / "ch.csv").rfind("channel_index,channel_name,mean_accuracy\n", 0) == 0);
  const auto cmp = cli(std::string("compare-modes --data d3.segd --seeds 1 --out modes.csv") + kSmallTrain);
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("classifier_only") != std::string::npos);
}

TEST_CASE("gradcheck reports every kernel") {
  const auto r = cli("gradcheck");
  CHECK(r.code == 0);
  CHECK(r.out.find("joint_loss") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("errors map to exit codes with JSON on stderr") {
  REQUIRE(cli("gen-data --n-per-class 5 --t 32 --c 4 --channels 1 --out a.segd").code == 0);
  SUBCASE("truncated SEGD is a format error") {
    const auto bytes = slurp(kDir / "a.segd");
    std::ofstream(kDir / "cut.segd", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    const auto r = cli("train --data cut.segd");
    CHECK(r.code == 3);
    CHECK(json::parse(r.err).at("error").at("type") == "FormatError");
  }
  SUBCASE("usage errors") {
    CHECK(cli("train --data missing.segd").code == 2);
    CHECK(cli("train --data a.segd --bogus").code == 2);
    CHECK(cli("train --data a.segd --mode sideways").code == 2);
    CHECK(cli("").code == 2);
  }
  SUBCASE("invalid configuration") {
    const auto r = cli("train --data a.segd --epochs 0");
    CHECK(r.code == 2);
    CHECK(json::parse(r.err).at("error").at("type") == "ConfigError");
  }
  SUBCASE("stratification") {
    CHECK(cli("train --data a.segd --k-folds 9").code == 2);
  }
}

TEST_CASE("help lists every flag with its default") {
  const auto r = cli("train --help");
  CHECK(r.code == 0);
  for (const char* flag : {"--epochs INT [50]", "--lr FLOAT [0.001]", "--batch-size UINT [32]", "--k-folds INT [5]",
                           "--lambda FLOAT [1]", "--mask-p FLOAT [0.5]", "--mode", "--seed", "--hidden-dim UINT [128]",
                           "--repr-dim UINT [900]", "--jobs INT [1]", "--config"}) {
    INFO(flag);
    CHECK(r.out.find(flag) != std::string::npos);
  }
  CHECK(cli("ablate --help").out.find("--epochs INT [10]") != std::string::npos);
  CHECK(cli("preprocess --help").out.find("--notch FLOAT [60]") != std::string::npos);
}

TEST_CASE("preprocess segments a CSV recording") {
  {
    std::ofstream csv(kDir / "rec.csv");
    csv << "O1,O2,label\n";
    for (int s = 0; s < 1000; ++s) csv << std::sin(s * 0.3) << ',' << std::cos(s * 0.1) << ',' << (s < 500 ? 0 : 2) << '\n';
  }
  const auto r = cli("preprocess --in rec.csv --out rec.segd");
  REQUIRE(r.code == 0);
  const auto info = json::parse(r.out);
  CHECK(info.at("segments") == 2);
  CHECK(info.at("t") == 400);
  CHECK(info.at("c") == 2);
  CHECK(cli("preprocess --in rec.segd --out rec2.segd --no-average-reference --notch 0").code == 0);
  CHECK(cli("preprocess --in rec.csv --out bad.segd --low 60 --high 10").code == 2);
}
