#ifndef FADERSYNTH_EVALUATION_H_
#define FADERSYNTH_EVALUATION_H_

#include <torch/torch.h>

#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fadersynth/audio.h"
#include "fadersynth/descriptors.h"
#include "fadersynth/model.h"
#include "fadersynth/spectral.h"

namespace fadersynth {

// Perceptual distance between a reference and an estimate; lower is closer.
class PerceptualMetric {
 public:
  virtual ~PerceptualMetric() = default;
  virtual std::string Name() const = 0;
  virtual double Distance(const AudioBuffer& reference, const AudioBuffer& estimate) const = 0;
};

// Mean absolute difference of log mel magnitudes. Stands in for a learned
// just-noticeable-difference metric and is labelled as a proxy in reports.
class LogMelL1Proxy : public PerceptualMetric {
 public:
  explicit LogMelL1Proxy(int mel_bands = 64, int fft_size = 1024, int hop = 256, double floor = 1e-5)
      : mel_bands_(mel_bands), fft_size_(fft_size), hop_(hop), floor_(floor) {}
  std::string Name() const override { return "log-mel-L1 (PROXY)"; }
  double Distance(const AudioBuffer& reference, const AudioBuffer& estimate) const override;

 private:
  int mel_bands_, fft_size_, hop_;
  double floor_;
};

// Mean absolute difference of mel magnitudes (64 bands, 1024 / 256 framing).
double MelL1(const AudioBuffer& a, const AudioBuffer& b);

// What the evaluation needs from a synthesis model. Encode is deterministic
// (posterior mean); Decode takes attribute tracks at the descriptor frame
// rate and resamples them itself.
class AudioModel {
 public:
  virtual ~AudioModel() = default;
  virtual std::vector<DescriptorKind> kinds() const = 0;
  virtual int frame_size() const { return kDefaultFrameSize; }
  virtual int frame_hop() const { return kDefaultFrameHop; }
  virtual const AttributeNormalizer& normalizer() const = 0;
  virtual torch::Tensor Encode(const AudioBuffer& x) const = 0;
  virtual AudioBuffer Decode(const torch::Tensor& z, const AttributeTrack& attrs, int sample_rate) const = 0;
  AttributeTrack Describe(const AudioBuffer& x) const {
    return ComputeAttributeSet(x, kinds(), frame_size(), frame_hop());
  }
};

// Adapter over a trained FaderModel. Inference only: runs under NoGradGuard
// with the model in evaluation mode.
class FaderAudioModel : public AudioModel {
 public:
  explicit FaderAudioModel(std::shared_ptr<const FaderModel> model);
  std::vector<DescriptorKind> kinds() const override { return model_->config().kinds; }
  int frame_size() const override { return model_->config().frame_size; }
  int frame_hop() const override { return model_->config().frame_hop; }
  const AttributeNormalizer& normalizer() const override { return model_->normalizer(); }
  torch::Tensor Encode(const AudioBuffer& x) const override;
  AudioBuffer Decode(const torch::Tensor& z, const AttributeTrack& attrs, int sample_rate) const override;
  const FaderModel& model() const { return *model_; }

 private:
  std::shared_ptr<const FaderModel> model_;
};

// Debug model: the "latent" is the waveform itself and decoding returns it
// unchanged, ignoring the attributes.
class IdentityAudioModel : public AudioModel {
 public:
  IdentityAudioModel(std::vector<DescriptorKind> kinds, AttributeNormalizer normalizer)
      : kinds_(std::move(kinds)), normalizer_(std::move(normalizer)) {}
  std::vector<DescriptorKind> kinds() const override { return kinds_; }
  const AttributeNormalizer& normalizer() const override { return normalizer_; }
  torch::Tensor Encode(const AudioBuffer& x) const override;
  AudioBuffer Decode(const torch::Tensor& z, const AttributeTrack& attrs, int sample_rate) const override;

 private:
  std::vector<DescriptorKind> kinds_;
  AttributeNormalizer normalizer_;
};

struct MetricsReport {
  double jnd_proxy = 0.0;
  double mel_l1 = 0.0;
  double mstft = 0.0;
  double control_spearman = 0.0;
  double control_l1 = 0.0;
  double cycle_jnd_proxy = 0.0;
  std::size_t n_items = 0;
  std::map<std::string, double> spearman_by_kind;
  std::map<std::string, double> l1_by_kind;
  std::map<std::string, double> pooled_spearman_by_kind;
  std::string metric_name;

  nlohmann::json ToJson() const;
};

// decode(encode(x), f_a(x)) for every item; averages the perceptual proxy,
// mel L1 and multiscale distance. Throws LengthError on an empty split.
MetricsReport EvalReconstruction(const AudioModel& model, const std::vector<AudioBuffer>& items,
                                 const PerceptualMetric& metric);

// Attribute tracks of `target` for the kinds in `swap`, of `own` otherwise.
AttributeTrack MixAttributes(const AttributeTrack& own, const AttributeTrack& target,
                             const std::vector<DescriptorKind>& swap);

struct ControlResult {
  // Spearman within each item over its non-silent frames, averaged over
  // items, then over swapped kinds.
  double spearman = 0.0;
  double l1 = 0.0;  // normalized units, mean over all non-silent frames
  std::map<std::string, double> spearman_by_kind;
  std::map<std::string, double> l1_by_kind;
  // Spearman over the non-silent frames of all items pooled together.
  double pooled_spearman = 0.0;
  std::map<std::string, double> pooled_spearman_by_kind;
  std::size_t n_items = 0;
  std::size_t undefined = 0;  // item/kind pairs with a constant track
};

// For each item, decodes its latent with the attributes of swap_sources[i]
// for the kinds in `swap` (all model kinds when empty) and re-measures the
// output. Frames whose target RMS is below `silence_threshold` are dropped.
// Throws ConfigError for a kind the model does not know.
ControlResult EvalControl(const AudioModel& model, const std::vector<AudioBuffer>& items,
                          const std::vector<AudioBuffer>& swap_sources,
                          const std::vector<DescriptorKind>& swap = {},
                          double silence_threshold = kDefaultSilenceThreshold);

// Same as EvalControl with a random subset of 1..min(4, N) kinds swapped per
// item, drawn from `rng`.
ControlResult EvalControlRandomSubsets(const AudioModel& model, const std::vector<AudioBuffer>& items,
                                       const std::vector<AudioBuffer>& swap_sources, std::mt19937_64& rng,
                                       double silence_threshold = kDefaultSilenceThreshold);

// items[(i + shift) mod n]: a deterministic foreign-attribute source.
std::vector<AudioBuffer> RolledSources(const std::vector<AudioBuffer>& items, std::size_t shift);

struct CycleResult {
  double cycle = 0.0;   // metric(x, decode(encode(transfer(x)), f_a(x)))
  double direct = 0.0;  // metric(x, decode(encode(x), f_a(x)))
  std::size_t n_items = 0;
};

CycleResult EvalCycle(const AudioModel& model, const std::vector<AudioBuffer>& items,
                      const std::vector<AudioBuffer>& swap_sources, const PerceptualMetric& metric);

// decode(encode(x_source), attrs_target). attrs_target is at the descriptor
// frame rate of x_source's length.
AudioBuffer AttributeTransfer(const AudioModel& model, const AudioBuffer& x_source,
                              const AttributeTrack& attrs_target);

// decode(encode(x_timbre), f_a(x_attrs)); x_attrs is cropped or zero-padded
// to the length of x_timbre.
AudioBuffer TimbreTransfer(const AudioModel& model, const AudioBuffer& x_timbre, const AudioBuffer& x_attrs);

struct ProbeOptions {
  int iterations = 1500;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double accuracy = 0.0;  // on non-silent test frames
  double chance = 0.0;    // 1 / K
  double majority = 0.0;  // share of the most frequent test label
  std::size_t test_frames = 0;
};

// Trains a fresh classifier with the latent discriminator's architecture to
// predict the bins of `kind` from frozen posterior means of `train`, then
// scores it on `test`.
ProbeResult ProbeLatent(const FaderModel& model, const std::vector<AudioBuffer>& train,
                        const std::vector<AudioBuffer>& test, DescriptorKind kind,
                        const ProbeOptions& options = {});

// Reconstruction, control (rolled sources, all kinds swapped) and cycle
// consistency over `items` in one report.
MetricsReport EvaluateModel(const AudioModel& model, const std::vector<AudioBuffer>& items,
                            const PerceptualMetric& metric, std::size_t swap_shift = 1,
                            double silence_threshold = kDefaultSilenceThreshold);

// Writes the report as JSON (with `manifest` merged in) and as a one-row CSV.
void WriteReport(const MetricsReport& report, const nlohmann::json& manifest, const std::string& json_path,
                 const std::string& csv_path);

}  // namespace fadersynth

#endif  // FADERSYNTH_EVALUATION_H_
