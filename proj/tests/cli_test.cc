#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "fadersynth/checkpoint.h"
#include "fadersynth/config.h"
#include "fadersynth/corpus.h"
#include "fadersynth/evaluation.h"
#include "fadersynth/training.h"

namespace fs = std::filesystem;

namespace fadersynth {
namespace {

struct RunResult {
  int code = -1;
  std::string out;  // stdout and stderr
};

RunResult RunCli(const std::string& args) {
  const std::string cmd = std::string(FADERSYNTH_CLI) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fadersynth_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TrainConfig SmallConfig() {
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e-3;
  cfg.chunk_length = 8192;
  cfg.toy_items = 16;
  cfg.beta_warmup = {300, 600};
  cfg.lambda_warmup = {600, 1200};
  return cfg;
}

// Untrained model with fitted statistics, saved with a small toy config.
std::string MakeCheckpoint(const fs::path& dir) {
  const TrainConfig cfg = SmallConfig();
  const PreparedData data = PrepareData(cfg);
  auto model = CreateModel(cfg.MakeModelConfig(), 1);
  FitDescriptorStatistics(*model, data.train);
  CheckpointMeta meta;
  meta.train_config = DumpTrainConfig(cfg);
  const std::string path = (dir / "model.ckpt").string();
  SaveCheckpoint(path, *model, meta);
  return path;
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(RunCli("").code, 2);
  EXPECT_EQ(RunCli("frobnicate").code, 2);
  EXPECT_EQ(RunCli("eval --bogus-flag").code, 2);
  EXPECT_EQ(RunCli("eval --split test --report r.json").code, 2);
  EXPECT_EQ(RunCli("--help").code, 0);
}

TEST(CliTest, MissingCheckpointNamesPath) {
  const RunResult r = RunCli("eval --checkpoint /nonexistent/model.ckpt --split test --report /tmp/r.json");
  EXPECT_EQ(r.code, 1);
  const auto line = r.out.substr(0, r.out.find('\n'));
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["error"], "IoError");
  EXPECT_NE(j["message"].get<std::string>().find("/nonexistent/model.ckpt"), std::string::npos);
}

TEST(CliTest, MakeToyAndPrepareData) {
  const fs::path dir = TempDir("toy");
  ASSERT_EQ(RunCli("make-toy --n 20 --out " + (dir / "corpus").string()).code, 0);
  int wavs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "corpus")) wavs += e.path().extension() == ".wav";
  EXPECT_EQ(wavs, 20);
  const RunResult r = RunCli("prepare-data --root " + (dir / "corpus").string() + " --out " +
                          (dir / "manifest.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_FALSE(manifest.empty());
  EXPECT_EQ(nlohmann::json::parse(r.out)["train"], 16);
}

TEST(CliTest, EvalWritesReport) {
  const fs::path dir = TempDir("eval");
  const std::string ckpt = MakeCheckpoint(dir);
  const RunResult r = RunCli("eval --checkpoint " + ckpt + " --split test --max-items 2 --report " +
                          (dir / "report.json").string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(dir / "report.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["n_items"], 2);
  EXPECT_NE(j["metric"].get<std::string>().find("PROXY"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
}

TEST(CliTest, SelfTransferMatchesReconstruction) {
  const fs::path dir = TempDir("transfer");
  const std::string ckpt = MakeCheckpoint(dir);
  const AudioBuffer x = MakeToyCorpus(16, 16000, 8, ChunkPolicy{8192, 0.0}).Chunks(Split::kTrain)[0];
  WriteWav((dir / "x.wav").string(), x);
  const std::string src = (dir / "x.wav").string();
  const RunResult r = RunCli("transfer --checkpoint " + ckpt + " --source " + src + " --attrs-from " + src +
                          " --out " + (dir / "y.wav").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const AudioBuffer y = ReadWav((dir / "y.wav").string());
  const FaderAudioModel model(LoadCheckpoint(ckpt).model);
  const AudioBuffer expected = AttributeTransfer(model, x, model.Describe(x));
  ASSERT_EQ(y.size(), expected.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, double(std::abs(y.samples[i] - expected.samples[i])));
  EXPECT_LE(worst, 1e-6);
}

TEST(CliTest, ToyCorpusTrainSmokeRun) {
  const fs::path dir = TempDir("smoke");
  ASSERT_EQ(RunCli("make-toy --n 64 --out " + (dir / "corpus").string()).code, 0);
  TrainConfig cfg = SmallConfig();
  cfg.corpus = (dir / "corpus").string();
  cfg.stage1_steps = 1500;
  cfg.stage2_steps = 500;
  cfg.checkpoint_dir = (dir / "run").string();
  cfg.checkpoint_interval = 1000;
  cfg.log_interval = 100;
  std::ofstream(dir / "config.yaml") << DumpTrainConfig(cfg);
  const RunResult r = RunCli("train --config " + (dir / "config.yaml").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(nlohmann::json::parse(r.out.substr(r.out.rfind('{')))["steps"], 2000);
  EXPECT_TRUE(fs::exists(dir / "run" / "final.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "run" / "step_00001000.ckpt"));
  EXPECT_EQ(LoadCheckpoint((dir / "run" / "final.ckpt").string()).meta.stage, 2);
}

}  // namespace
}  // namespace fadersynth
