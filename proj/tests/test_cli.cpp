#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

int run_cli(const std::string& args, const std::filesystem::path& log, const std::string& env = "") {
  const std::string cmd = env + " \"" MDRBM_CLI_PATH "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_config(const std::filesystem::path& path, const std::filesystem::path& data_dir, const std::string& file) {
  std::ofstream(path) << R"({"name": "cli", "data_dir": ")" << data_dir.string() << R"(",
    "dataset": {"name": "toy", "format": "csv", "train_files": [")" << file << R"("], "n_train": 90, "n_test": 30},
    "layers": {"width": 5, "hidden": 4},
    "training": {"epochs": 2, "batch_size": 15, "eval_every": 1, "rate": 0.01},
    "gbrbm": {"epochs": 2},
    "sampling": {"s_train": 2, "s_infer": 3},
    "seed": 11, "repeats": 1, "noise_grid": [0, 1]})";
}

}  // namespace

TEST_CASE("command-line exit codes") {
  const auto dir = oracle::scratch_dir("cli");
  const auto log = dir / "log.txt";
  fixture::write_cluster_csv(dir / "toy.csv", 150, 3, 2, 5);
  write_config(dir / "ok.json", dir, "toy.csv");

  SUBCASE("help and usage") {
    CHECK(run_cli("--help", log) == 0);
    CHECK(slurp(log).find("sweep") != std::string::npos);
    CHECK(run_cli("run --help", log) == 0);
    CHECK(slurp(log).find("--noise-before-standardize") != std::string::npos);
    CHECK(run_cli("", log) == 2);
    CHECK(run_cli("frobnicate", log) == 2);
    CHECK(run_cli("run --seed notanumber --dataset mnist", log) == 2);
  }
  SUBCASE("configuration errors exit with 2") {
    CHECK(run_cli("run --dataset imagenet", log) == 2);
    CHECK(run_cli("run", log) == 2);
    CHECK(run_cli("run --config \"" + (dir / "absent.json").string() + "\"", log) == 2);
    std::ofstream(dir / "typo.json") << R"({"sede": 3})";
    CHECK(run_cli("run --config \"" + (dir / "typo.json").string() + "\"", log) == 2);
    CHECK(slurp(log).find("sede") != std::string::npos);
    CHECK(run_cli("run --config \"" + (dir / "ok.json").string() + "\" --model 4nn --theta0 gbrbm", log) == 2);
    CHECK(run_cli("run --config \"" + (dir / "ok.json").string() + "\" --noise-grid 0.5,1", log) == 2);
    CHECK(run_cli("run --dataset mnist", log, "MDRBM_DATA_DIR=\"" + dir.string() + "\"") == 2);
    CHECK(slurp(log).find(dir.string()) != std::string::npos);
  }
  SUBCASE("malformed data exits with 3") {
    std::ofstream(dir / "ragged.csv") << "f0,f1,class\n1,2,a\n3,b\n";
    write_config(dir / "ragged.json", dir, "ragged.csv");
    CHECK(run_cli("run --config \"" + (dir / "ragged.json").string() + "\" --out \"" + (dir / "o3").string() + "\"", log) == 3);
    CHECK(slurp(log).find("row 3") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "o3" / "INCOMPLETE"));
  }
  SUBCASE("non-finite data exits with 4") {
    std::ofstream(dir / "inf.csv") << "f0,class\n1,a\ninf,b\n";
    write_config(dir / "inf.json", dir, "inf.csv");
    CHECK(run_cli("run --config \"" + (dir / "inf.json").string() + "\" --out \"" + (dir / "o4").string() + "\"", log) == 4);
  }
  SUBCASE("full pipeline and report") {
    const auto out = dir / "run";
    CHECK(run_cli("run --config \"" + (dir / "ok.json").string() + "\" --out \"" + out.string() + "\"", log) == 0);
    CHECK(std::filesystem::exists(out / "report.json"));
    CHECK_FALSE(std::filesystem::exists(out / "INCOMPLETE"));
    const std::string text = slurp(log);
    CHECK(text.find("MDRBM(G)") != std::string::npos);
    CHECK(text.find("report hash") != std::string::npos);
    CHECK(run_cli("report \"" + (out / "report.json").string() + "\"", log) == 0);
    CHECK(slurp(log).find("4NN") != std::string::npos);
    CHECK(run_cli("report \"" + (out / "report.json").string() + "\" \"" + (out / "report.json").string() +
                      "\" --out \"" + (dir / "merged").string() + "\"",
                  log) == 0);
    CHECK(std::filesystem::exists(dir / "merged" / "report.json"));
    std::ofstream(dir / "bad-report.json") << "{}";
    CHECK(run_cli("report \"" + (dir / "bad-report.json").string() + "\"", log) == 3);
  }
  SUBCASE("staged commands") {
    const std::string cfg = " --config \"" + (dir / "ok.json").string() + "\"";
    const auto stage = dir / "stage";
    CHECK(run_cli("pretrain" + cfg + " --out \"" + stage.string() + "\"", log) == 0);
    CHECK(std::filesystem::exists(stage / "pelm.bin"));
    CHECK(run_cli("train" + cfg + " --model mdrbm --theta0 gbrbm --layer \"" + (stage / "pelm.bin").string() +
                      "\" --out \"" + stage.string() + "\"",
                  log) == 0);
    CHECK(std::filesystem::exists(stage / "mdrbm-g.bin"));
    CHECK(run_cli("train" + cfg + " --model mdrbm --theta0 random --layer \"" + (stage / "pelm.bin").string() +
                      "\" --out \"" + stage.string() + "\"",
                  log) == 2);
    CHECK(run_cli("eval" + cfg + " --model-file \"" + (stage / "mdrbm-g.bin").string() + "\"", log) == 0);
    CHECK(slurp(log).find("clean test accuracy") != std::string::npos);
    CHECK(run_cli("sweep" + cfg + " --s-infer 2 --repeats 2 --model-file \"" + (stage / "mdrbm-g.bin").string() +
                      "\" --out \"" + stage.string() + "\"",
                  log) == 0);
    CHECK(std::filesystem::exists(stage / "report.csv"));
    std::ofstream(dir / "junk.bin") << "junk";
    CHECK(run_cli("eval" + cfg + " --model-file \"" + (dir / "junk.bin").string() + "\"", log) == 3);
  }
  SUBCASE("data directory override") {
    const auto data = dir / "data";
    std::filesystem::create_directories(data / "ulc");
    fixture::write_cluster_csv(data / "ulc" / "training.csv", 400, 4, 3, 1);
    fixture::write_cluster_csv(data / "ulc" / "testing.csv", 300, 4, 3, 2);
    CHECK(run_cli("run --dataset ulc --model drbm --epochs 1 --repeats 1 --out \"" + (dir / "ulc").string() + "\"",
                  log, "MDRBM_DATA_DIR=\"" + data.string() + "\"") == 0);
    CHECK(std::filesystem::exists(dir / "ulc" / "report.json"));
  }
}
