#include "fadersynth/config.h"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fadersynth/errors.h"

namespace fadersynth {

double Ramp::At(long step) const {
  if (step <= start) return 0.0;
  if (step >= end) return target;
  return target * static_cast<double>(step - start) / static_cast<double>(end - start);
}

ModelConfig TrainConfig::MakeModelConfig() const {
  ModelConfig m;
  m.sample_rate = sample_rate;
  m.latent_dim = latent_dim;
  m.ratios = ratios;
  m.channels = channels;
  m.kinds = kinds;
  m.num_bins = num_bins;
  return m;
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (beta_target < 0.0 || lambda_target < 0.0) throw ConfigError("loss weights must be >= 0");
  if (beta_warmup.first < 0 || beta_warmup.first >= beta_warmup.second) {
    throw ConfigError("beta_warmup start must be >= 0 and before its end");
  }
  if (lambda_warmup.first < 0 || lambda_warmup.first >= lambda_warmup.second) {
    throw ConfigError("lambda_warmup start must be >= 0 and before its end");
  }
  if (stage1_steps < 0 || stage2_steps < 0) throw ConfigError("step counts must be >= 0");
  if (chunk_overlap < 0.0 || chunk_overlap >= 1.0) throw ConfigError("chunk_overlap must be in [0, 1)");
  if (silence_threshold < 0.0) throw ConfigError("silence_threshold must be >= 0");
  if (checkpoint_interval < 1 || log_interval < 1) throw ConfigError("intervals must be >= 1");
  if (toy_items < 16 && corpus.empty()) throw ConfigError("toy_items must be >= 16");
  const ModelConfig m = MakeModelConfig();
  m.Validate();
  if (chunk_length <= 0 || chunk_length % m.hop_length() != 0) {
    throw ConfigError("chunk_length must be a positive multiple of " + std::to_string(m.hop_length()));
  }
  if (chunk_length < kDefaultFrameSize) throw ConfigError("chunk_length is shorter than a descriptor frame");
  std::set<DescriptorKind> unique(kinds.begin(), kinds.end());
  if (unique.size() != kinds.size()) throw ConfigError("kinds must not repeat");
  if (!unique.contains(DescriptorKind::kRms)) {
    throw ConfigError("kinds must include rms (it defines the silence mask)");
  }
}

namespace {

const std::set<std::string>& KnownKeys() {
  static const std::set<std::string> keys = {
      "batch_size", "learning_rate", "adam_beta1", "adam_beta2", "beta_target",
      "lambda_target", "beta_warmup", "lambda_warmup", "stage1_steps", "stage2_steps",
      "chunk_length", "chunk_overlap", "num_bins", "kinds", "silence_threshold", "seed",
      "corpus", "sample_rate", "toy_items", "toy_seed", "latent_dim", "ratios", "channels",
      "checkpoint_dir", "checkpoint_interval", "log_interval"};
  return keys;
}

template <typename T>
void Read(const YAML::Node& root, const char* key, T& out) {
  if (const YAML::Node n = root[key]) {
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

void ReadWarmup(const YAML::Node& root, const char* key, std::pair<long, long>& out) {
  if (const YAML::Node n = root[key]) {
    std::vector<long> v;
    Read(root, key, v);
    if (v.size() != 2) throw ConfigError(std::string("config key '") + key + "' needs [start, end]");
    out = {v[0], v[1]};
  }
}

}  // namespace

TrainConfig ParseTrainConfig(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  TrainConfig cfg;
  if (root.IsNull()) {
    cfg.Validate();
    return cfg;
  }
  if (!root.IsMap()) throw ConfigError("config must be a key-value mapping");
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!KnownKeys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  Read(root, "batch_size", cfg.batch_size);
  Read(root, "learning_rate", cfg.learning_rate);
  Read(root, "adam_beta1", cfg.adam_beta1);
  Read(root, "adam_beta2", cfg.adam_beta2);
  Read(root, "beta_target", cfg.beta_target);
  Read(root, "lambda_target", cfg.lambda_target);
  ReadWarmup(root, "beta_warmup", cfg.beta_warmup);
  ReadWarmup(root, "lambda_warmup", cfg.lambda_warmup);
  Read(root, "stage1_steps", cfg.stage1_steps);
  Read(root, "stage2_steps", cfg.stage2_steps);
  Read(root, "chunk_length", cfg.chunk_length);
  Read(root, "chunk_overlap", cfg.chunk_overlap);
  Read(root, "num_bins", cfg.num_bins);
  if (root["kinds"]) {
    std::vector<std::string> names;
    Read(root, "kinds", names);
    cfg.kinds = ParseDescriptorKinds(names);
  }
  Read(root, "silence_threshold", cfg.silence_threshold);
  Read(root, "seed", cfg.seed);
  Read(root, "corpus", cfg.corpus);
  Read(root, "sample_rate", cfg.sample_rate);
  Read(root, "toy_items", cfg.toy_items);
  Read(root, "toy_seed", cfg.toy_seed);
  Read(root, "latent_dim", cfg.latent_dim);
  Read(root, "ratios", cfg.ratios);
  Read(root, "channels", cfg.channels);
  Read(root, "checkpoint_dir", cfg.checkpoint_dir);
  Read(root, "checkpoint_interval", cfg.checkpoint_interval);
  Read(root, "log_interval", cfg.log_interval);
  cfg.Validate();
  return cfg;
}

TrainConfig LoadTrainConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseTrainConfig(ss.str());
}

std::string DumpTrainConfig(const TrainConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "batch_size" << YAML::Value << cfg.batch_size;
  out << YAML::Key << "learning_rate" << YAML::Value << cfg.learning_rate;
  out << YAML::Key << "adam_beta1" << YAML::Value << cfg.adam_beta1;
  out << YAML::Key << "adam_beta2" << YAML::Value << cfg.adam_beta2;
  out << YAML::Key << "beta_target" << YAML::Value << cfg.beta_target;
  out << YAML::Key << "lambda_target" << YAML::Value << cfg.lambda_target;
  out << YAML::Key << "beta_warmup" << YAML::Value << YAML::Flow
      << std::vector<long>{cfg.beta_warmup.first, cfg.beta_warmup.second};
  out << YAML::Key << "lambda_warmup" << YAML::Value << YAML::Flow
      << std::vector<long>{cfg.lambda_warmup.first, cfg.lambda_warmup.second};
  out << YAML::Key << "stage1_steps" << YAML::Value << cfg.stage1_steps;
  out << YAML::Key << "stage2_steps" << YAML::Value << cfg.stage2_steps;
  out << YAML::Key << "chunk_length" << YAML::Value << cfg.chunk_length;
  out << YAML::Key << "chunk_overlap" << YAML::Value << cfg.chunk_overlap;
  out << YAML::Key << "num_bins" << YAML::Value << cfg.num_bins;
  out << YAML::Key << "kinds" << YAML::Value << YAML::Flow << DescriptorNames(cfg.kinds);
  out << YAML::Key << "silence_threshold" << YAML::Value << cfg.silence_threshold;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "corpus" << YAML::Value << cfg.corpus;
  out << YAML::Key << "sample_rate" << YAML::Value << cfg.sample_rate;
  out << YAML::Key << "toy_items" << YAML::Value << cfg.toy_items;
  out << YAML::Key << "toy_seed" << YAML::Value << cfg.toy_seed;
  out << YAML::Key << "latent_dim" << YAML::Value << cfg.latent_dim;
  out << YAML::Key << "ratios" << YAML::Value << YAML::Flow << cfg.ratios;
  out << YAML::Key << "channels" << YAML::Value << YAML::Flow << cfg.channels;
  out << YAML::Key << "checkpoint_dir" << YAML::Value << cfg.checkpoint_dir;
  out << YAML::Key << "checkpoint_interval" << YAML::Value << cfg.checkpoint_interval;
  out << YAML::Key << "log_interval" << YAML::Value << cfg.log_interval;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace fadersynth
