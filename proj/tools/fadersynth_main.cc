// fadersynth command-line tool.
//
//   fadersynth train --config PATH [--resume CKPT]
//   fadersynth eval --checkpoint PATH --split test --report PATH
//   fadersynth transfer --checkpoint PATH --source WAV --attrs-from WAV --out WAV
//   fadersynth serve --checkpoint PATH --port N
//   fadersynth prepare-data --root DIR --out MANIFEST
//   fadersynth make-toy --n 64 --out DIR
//
// Exit status: 0 on success, 2 on usage errors, 1 otherwise with one JSON
// line {"error": TYPE, "message": TEXT} on stderr.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

#include "fadersynth/checkpoint.h"
#include "fadersynth/config.h"
#include "fadersynth/corpus.h"
#include "fadersynth/errors.h"
#include "fadersynth/evaluation.h"
#include "fadersynth/log.h"
#include "fadersynth/service.h"
#include "fadersynth/training.h"

namespace fs = std::filesystem;
using namespace fadersynth;

namespace {

std::string ErrorType(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const LengthError*>(&e)) return "LengthError";
  if (dynamic_cast<const ShapeError*>(&e)) return "ShapeError";
  if (dynamic_cast<const NumericError*>(&e)) return "NumericError";
  if (dynamic_cast<const DegenerateDistributionError*>(&e)) return "DegenerateDistributionError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  return "Error";
}

LoadedCheckpoint RequireCheckpoint(const std::string& path) {
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path);
  return LoadCheckpoint(path);
}

int RunTrain(const std::string& config, const std::string& resume, const std::string& checkpoint_dir) {
  TrainConfig cfg = LoadTrainConfig(config);
  if (!checkpoint_dir.empty()) cfg.checkpoint_dir = checkpoint_dir;
  const TrainSummary s = Train(cfg, resume, [&cfg](const LossReport& r) {
    if (cfg.log_interval > 0 && r.step % cfg.log_interval == 0) {
      LogInfo("step " + std::to_string(r.step) + " stage " + std::to_string(r.stage) +
              " recon " + std::to_string(r.recon));
    }
  });
  std::cout << nlohmann::json{{"checkpoint", s.final_checkpoint}, {"metrics", s.metrics_csv}, {"steps", s.steps}}.dump()
            << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint, split = "test", report, data;
  std::size_t max_items = 0;
  bool probe = false;
};

int RunEval(const EvalArgs& a) {
  const LoadedCheckpoint ck = RequireCheckpoint(a.checkpoint);
  TrainConfig cfg = ck.meta.train_config.empty() ? TrainConfig{} : ParseTrainConfig(ck.meta.train_config);
  if (!a.data.empty()) cfg.corpus = a.data;
  const PreparedData data = PrepareData(cfg);
  const Split split = ParseSplit(a.split);
  std::vector<AudioBuffer> items = split == Split::kTrain ? data.train : split == Split::kValid ? data.valid : data.test;
  if (a.max_items > 0 && items.size() > a.max_items) items.resize(a.max_items);

  const FaderAudioModel model(ck.model);
  const LogMelL1Proxy metric;
  const MetricsReport report = EvaluateModel(model, items, metric, 1, cfg.silence_threshold);
  nlohmann::json manifest = {{"checkpoint", fs::absolute(a.checkpoint).string()},
                             {"step", ck.meta.step},
                             {"split", a.split},
                             {"corpus", cfg.corpus.empty() ? "toy" : cfg.corpus},
                             {"perceptual_metric", metric.Name()},
                             {"control_pooling", "per item over non-silent frames, averaged across items"},
                             {"swap_sources", "rolled by one item"},
                             {"quantizer", ck.model->quantizer().ToJson()}};
  if (a.probe) {
    nlohmann::json probes = nlohmann::json::object();
    for (DescriptorKind k : ck.model->config().kinds) {
      const ProbeResult p = ProbeLatent(*ck.model, data.train, items, k);
      probes[DescriptorName(k)] = {{"accuracy", p.accuracy}, {"chance", p.chance}, {"majority", p.majority}};
    }
    manifest["probe"] = probes;
  }
  const fs::path json_path(a.report);
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
  WriteReport(report, manifest, json_path.string(), csv_path.string());
  std::cout << report.ToJson().dump() << "\n";
  return 0;
}

int RunTransfer(const std::string& checkpoint, const std::string& source, const std::string& attrs_from,
                const std::string& out) {
  const LoadedCheckpoint ck = RequireCheckpoint(checkpoint);
  const int sr = ck.model->config().sample_rate;
  auto load = [sr](const std::string& path) {
    AudioBuffer x = ReadWav(path);
    return x.sample_rate == sr ? x : Resample(x, sr);
  };
  const AudioBuffer x = load(source);
  const AudioBuffer y = load(attrs_from);
  const FaderAudioModel model(ck.model);
  WriteWav(out, TimbreTransfer(model, x, y));
  return 0;
}

HttpFrontend* g_frontend = nullptr;

int RunServe(const std::string& checkpoint, const std::string& host, int port) {
  const LoadedCheckpoint ck = RequireCheckpoint(checkpoint);
  InferenceService service(ck.model);
  HttpFrontend frontend(service);
  if (!frontend.Bind(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  g_frontend = &frontend;
  std::signal(SIGINT, [](int) { if (g_frontend) g_frontend->Stop(); });
  std::signal(SIGTERM, [](int) { if (g_frontend) g_frontend->Stop(); });
  LogInfo("serving on " + host + ":" + std::to_string(port));
  frontend.ListenAfterBind();
  g_frontend = nullptr;
  return 0;
}

int RunPrepareData(const std::string& root, const std::string& out, int sample_rate, std::uint64_t seed,
                   std::size_t chunk_length) {
  const Corpus corpus = LoadCorpus(root, sample_rate, ChunkPolicy{chunk_length, 0.0}, seed);
  corpus.SaveManifest(out);
  std::cout << nlohmann::json{{"items", corpus.items().size()},
                              {"train", corpus.Count(Split::kTrain)},
                              {"valid", corpus.Count(Split::kValid)},
                              {"test", corpus.Count(Split::kTest)}}
                   .dump()
            << "\n";
  return 0;
}

int RunMakeToy(int n, const std::string& out, int sample_rate, std::uint64_t seed) {
  const Corpus corpus = MakeToyCorpus(n, sample_rate, seed);
  corpus.WriteToDirectory(out);
  std::cout << nlohmann::json{{"items", corpus.items().size()}, {"dir", out}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Timbre and attribute control for audio synthesis"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  std::string config, resume, checkpoint_dir;
  auto* train = app.add_subcommand("train", "Train a model from a YAML config");
  train->add_option("--config", config, "Training config")->required()->check(CLI::ExistingFile);
  train->add_option("--resume", resume, "Checkpoint to resume from");
  train->add_option("--checkpoint-dir", checkpoint_dir, "Override the config's checkpoint directory");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  eval->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval->add_option("--split", eval_args.split)->check(CLI::IsMember({"train", "valid", "test"}));
  eval->add_option("--report", eval_args.report, "JSON report path; a CSV is written next to it")->required();
  eval->add_option("--data", eval_args.data, "Corpus directory overriding the training config");
  eval->add_option("--max-items", eval_args.max_items, "Evaluate at most this many chunks");
  eval->add_flag("--probe", eval_args.probe, "Also probe the latent for each attribute");

  std::string checkpoint, source, attrs_from, out;
  auto* transfer = app.add_subcommand("transfer", "Decode a source with the attributes of another file");
  transfer->add_option("--checkpoint", checkpoint)->required();
  transfer->add_option("--source", source)->required()->check(CLI::ExistingFile);
  transfer->add_option("--attrs-from", attrs_from)->required()->check(CLI::ExistingFile);
  transfer->add_option("--out", out)->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP inference service");
  serve->add_option("--checkpoint", checkpoint)->required();
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--host", host);

  std::string root;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  std::size_t chunk_length = 65536;
  auto* prepare = app.add_subcommand("prepare-data", "Scan a WAV folder and write its split manifest");
  prepare->add_option("--root", root)->required()->check(CLI::ExistingDirectory);
  prepare->add_option("--out", out)->required();
  prepare->add_option("--sample-rate", sample_rate);
  prepare->add_option("--seed", seed);
  prepare->add_option("--chunk-length", chunk_length);

  int n_items = 64;
  std::uint64_t toy_seed = 1234;
  auto* toy = app.add_subcommand("make-toy", "Write a synthetic corpus of WAV files");
  toy->add_option("--n", n_items)->check(CLI::Range(16, 100000));
  toy->add_option("--out", out)->required();
  toy->add_option("--sample-rate", sample_rate);
  toy->add_option("--seed", toy_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  SetLogLevel(verbose ? LogLevel::kInfo : LogLevel::kWarning);

  try {
    if (*train) return RunTrain(config, resume, checkpoint_dir);
    if (*eval) return RunEval(eval_args);
    if (*transfer) return RunTransfer(checkpoint, source, attrs_from, out);
    if (*serve) return RunServe(checkpoint, host, port);
    if (*prepare) return RunPrepareData(root, out, sample_rate, seed, chunk_length);
    if (*toy) return RunMakeToy(n_items, out, sample_rate, toy_seed);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", ErrorType(e)}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 2;
}
