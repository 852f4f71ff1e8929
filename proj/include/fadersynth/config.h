#ifndef FADERSYNTH_CONFIG_H_
#define FADERSYNTH_CONFIG_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fadersynth/descriptors.h"
#include "fadersynth/model.h"

namespace fadersynth {

// Linear ramp from 0 to `target` between steps `start` and `end`.
struct Ramp {
  double target = 0.0;
  long start = 0;
  long end = 1;
  double At(long step) const;
};

// Training hyperparameters. Stored as a flat YAML mapping whose keys are the
// field names below; unknown keys are rejected.
struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  double beta_target = 0.1;
  double lambda_target = 0.5;
  std::pair<long, long> beta_warmup = {5000, 10000};
  std::pair<long, long> lambda_warmup = {15000, 30000};
  long stage1_steps = 30000;
  long stage2_steps = 10000;
  int chunk_length = 65536;
  double chunk_overlap = 0.0;
  int num_bins = kDefaultNumBins;
  std::vector<DescriptorKind> kinds = {DescriptorKind::kRms, DescriptorKind::kCentroid};
  double silence_threshold = kDefaultSilenceThreshold;
  std::uint64_t seed = 0;

  // Data: a directory of WAV files, or a generated toy corpus when empty.
  std::string corpus;
  int sample_rate = 16000;
  int toy_items = 128;
  std::uint64_t toy_seed = 1234;

  // Architecture (see ModelConfig).
  int latent_dim = 16;
  std::vector<int> ratios = {4, 4, 4};
  std::vector<int> channels = {32, 64, 96, 128};

  std::string checkpoint_dir = "checkpoints";
  long checkpoint_interval = 1000;
  long log_interval = 100;

  Ramp beta_ramp() const { return {beta_target, beta_warmup.first, beta_warmup.second}; }
  Ramp lambda_ramp() const { return {lambda_target, lambda_warmup.first, lambda_warmup.second}; }
  ModelConfig MakeModelConfig() const;

  // Throws ConfigError on invalid values.
  void Validate() const;
};

TrainConfig ParseTrainConfig(const std::string& text);
TrainConfig LoadTrainConfig(const std::string& path);
std::string DumpTrainConfig(const TrainConfig& cfg);

}  // namespace fadersynth

#endif  // FADERSYNTH_CONFIG_H_
