#ifndef FADERSYNTH_TRAINING_H_
#define FADERSYNTH_TRAINING_H_

#include <torch/torch.h>

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fadersynth/config.h"
#include "fadersynth/corpus.h"
#include "fadersynth/losses.h"
#include "fadersynth/model.h"

namespace fadersynth {

// (beta, lambda) at `step` under the config's warmup ramps.
std::pair<double, double> Warmup(long step, const TrainConfig& cfg);

struct LossReport {
  long step = 0;
  int stage = 1;
  double recon = 0.0;
  double kl = 0.0;
  double fader_dis = 0.0;
  double fader_enc = 0.0;
  double hinge_d = 0.0;
  double hinge_g = 0.0;
  double feature_match = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  // Share of non-silent frames the fader discriminator labels correctly.
  double fader_accuracy = 0.0;

  static std::string CsvHeader();
  std::string CsvRow() const;
  bool operator==(const LossReport&) const = default;
};

struct Batch {
  torch::Tensor audio;   // (b, 1, n)
  torch::Tensor attrs;   // (b, N, m) normalized conditioning
  torch::Tensor labels;  // (b, N, m) int64 bins, -1 on silent frames
  torch::Tensor mask;    // (b, m) bool, true for non-silent frames
};

// Fits the normalizer and quantizer on the descriptor tracks of `chunks`
// (resampled to the latent rate) and installs them in the model.
void FitDescriptorStatistics(FaderModel& model, const std::vector<AudioBuffer>& chunks,
                             double silence_threshold = kDefaultSilenceThreshold);

// Computes descriptors of every chunk on the fly, quantizes them and builds
// the conditioning. Chunks must share a length that is a multiple of the
// model hop.
Batch MakeBatch(const FaderModel& model, const std::vector<AudioBuffer>& chunks);

// Seeds torch, then builds and initializes a model.
std::shared_ptr<FaderModel> CreateModel(const ModelConfig& cfg, std::uint64_t seed);

// Order-sensitive digest of every parameter and buffer value.
std::uint64_t ParameterHash(const torch::nn::Module& module);

struct PreparedData {
  Corpus corpus;
  std::vector<AudioBuffer> train;
  std::vector<AudioBuffer> valid;
  std::vector<AudioBuffer> test;
};

// Loads `cfg.corpus` (or generates the toy corpus) and chunks every split.
PreparedData PrepareData(const TrainConfig& cfg);

// Two-stage optimizer state around one model. Stage 1 trains the encoder,
// decoder and latent discriminators; stage 2 freezes the encoder and latent
// discriminators and trains the decoder against the waveform discriminator.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::shared_ptr<FaderModel> model, std::vector<AudioBuffer> train_chunks);

  const TrainConfig& config() const { return cfg_; }
  FaderModel& model() { return *model_; }
  std::shared_ptr<FaderModel> shared_model() const { return model_; }
  long step() const { return step_; }
  int stage() const { return step_ < cfg_.stage1_steps ? 1 : 2; }
  bool done() const { return step_ >= cfg_.stage1_steps + cfg_.stage2_steps; }

  // Draws the next batch from the training chunks (seeded, reproducible).
  Batch NextBatch();

  // One update of each player; neither advances the step counter.
  LossReport Stage1Step(const Batch& batch);
  // Throws ContractViolation when a frozen parameter receives a gradient.
  LossReport Stage2Step(const Batch& batch);

  // NextBatch plus the step of the current stage; advances the counter.
  LossReport Step();

  // Runs until `last_step` (exclusive) or the configured end. Appends to
  // `metrics_csv` every log interval and checkpoints to the configured
  // directory every checkpoint interval. On a non-finite loss, saves
  // `abort.ckpt` and rethrows.
  void Run(long last_step, const std::function<void(const LossReport&)>& on_step = {},
           const std::string& metrics_csv = {});

  // Includes optimizer and RNG state so that a resumed run continues
  // bit-identically.
  void SaveCheckpoint(const std::string& path) const;
  static std::unique_ptr<Trainer> Resume(const std::string& path, std::vector<AudioBuffer> train_chunks);

 private:
  void EnterStage2();

  TrainConfig cfg_;
  std::shared_ptr<FaderModel> model_;
  std::vector<AudioBuffer> chunks_;
  std::mt19937_64 rng_;
  long step_ = 0;
  std::unique_ptr<torch::optim::Adam> generator_opt_;
  std::unique_ptr<torch::optim::Adam> latent_opt_;
  std::unique_ptr<torch::optim::Adam> decoder_opt_;
  std::unique_ptr<torch::optim::Adam> wave_opt_;
};

struct TrainSummary {
  std::string final_checkpoint;
  std::string metrics_csv;
  long steps = 0;
};

// Full run: prepares data, fits descriptor statistics, trains both stages
// and writes config.yaml, quantizer.json, metrics.csv and checkpoints under
// cfg.checkpoint_dir. Resumes from `resume_from` when given.
TrainSummary Train(const TrainConfig& cfg, const std::string& resume_from = {},
                   const std::function<void(const LossReport&)>& on_step = {});

}  // namespace fadersynth

#endif  // FADERSYNTH_TRAINING_H_
