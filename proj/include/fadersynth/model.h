#ifndef FADERSYNTH_MODEL_H_
#define FADERSYNTH_MODEL_H_

#include <torch/torch.h>

#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "fadersynth/descriptors.h"
#include "fadersynth/pqmf.h"
#include "fadersynth/quantizer.h"
#include "fadersynth/tensor_util.h"

namespace fadersynth {

struct ModelConfig {
  int sample_rate = 16000;
  int num_bands = 8;
  int pqmf_taps = 64;
  double pqmf_attenuation_db = 100.0;
  int latent_dim = 16;
  // Strides of the encoder over the band signal; their product is r.
  std::vector<int> ratios = {4, 4, 4};
  // Encoder widths (first conv, then one per stride). The decoder mirrors them.
  std::vector<int> channels = {32, 64, 96, 128};
  std::vector<DescriptorKind> kinds = {DescriptorKind::kRms, DescriptorKind::kCentroid};
  int num_bins = kDefaultNumBins;
  int latent_disc_channels = 64;
  int wave_disc_scales = 3;
  int wave_disc_channels = 16;
  int frame_size = kDefaultFrameSize;
  int frame_hop = kDefaultFrameHop;

  int num_kinds() const { return static_cast<int>(kinds.size()); }
  // r: latent frames per band sample.
  int ratio() const;
  // B * r: waveform samples per latent frame.
  int hop_length() const { return num_bands * ratio(); }
  // Throws ConfigError on invalid values.
  void Validate() const;

  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

// Posterior over the latent trajectory, each (b, d, m).
struct LatentTrajectory {
  torch::Tensor mean;
  torch::Tensor scale;
  torch::Tensor sample;
};

class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const ModelConfig& cfg);
  // bands: (b, B, n / B). Returns (mean, scale), each (b, d, m).
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& bands);

 private:
  torch::nn::Sequential net_{nullptr};
};
TORCH_MODULE(Encoder);

class ResidualBlockImpl : public torch::nn::Module {
 public:
  ResidualBlockImpl(int channels, int dilation);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv1d dilated_{nullptr};
  torch::nn::Conv1d pointwise_{nullptr};
};
TORCH_MODULE(ResidualBlock);

class DecoderImpl : public torch::nn::Module {
 public:
  explicit DecoderImpl(const ModelConfig& cfg);
  // z: (b, d, m), attrs: (b, N, m) normalized. Returns bands (b, B, m r).
  torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& attrs);

 private:
  torch::nn::Sequential net_{nullptr};
  torch::nn::Conv1d wave_{nullptr};
  torch::nn::Conv1d amplitude_{nullptr};
};
TORCH_MODULE(Decoder);

// Three convolutional blocks over the latent channels that keep the time
// axis: (conv, batch norm, leaky ReLU) twice, then a conv to K logits.
class LatentDiscriminatorImpl : public torch::nn::Module {
 public:
  LatentDiscriminatorImpl(int latent_dim, int hidden, int num_bins);
  // z: (b, d, m) -> logits (b, K, m).
  torch::Tensor forward(const torch::Tensor& z);

 private:
  torch::nn::Sequential net_{nullptr};
};
TORCH_MODULE(LatentDiscriminator);

struct DiscriminatorOutput {
  std::vector<torch::Tensor> scores;                     // per scale, (b, 1, t)
  std::vector<std::vector<torch::Tensor>> feature_maps;  // per scale, per layer
};

// Multi-scale waveform discriminator: the input, then 2x and 4x average-pooled
// copies, each through its own strided convolution stack.
class WaveformDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit WaveformDiscriminatorImpl(const ModelConfig& cfg);
  DiscriminatorOutput forward(const torch::Tensor& x);
  int num_scales() const { return static_cast<int>(scales_.size()); }

 private:
  std::vector<torch::nn::ModuleList> scales_;
};
TORCH_MODULE(WaveformDiscriminator);

// normal(0, 0.02) weights and zero biases for every convolution.
void InitializeWeights(torch::nn::Module& module);

// The complete network set plus the descriptor statistics it was trained with.
// Training mutates it; inference should go through a const snapshot.
class FaderModel {
 public:
  explicit FaderModel(const ModelConfig& cfg);
  FaderModel(const FaderModel&) = delete;
  FaderModel& operator=(const FaderModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const PqmfBank& bank() const { return bank_; }

  TorchPqmf pqmf() const { return pqmf_; }
  Encoder encoder() const { return encoder_; }
  Decoder decoder() const { return decoder_; }
  const std::vector<LatentDiscriminator>& latent_discriminators() const { return latent_discs_; }
  WaveformDiscriminator waveform_discriminator() const { return wave_disc_; }

  // Modules in a fixed order, for serialization and parameter hashing.
  std::vector<std::pair<std::string, std::shared_ptr<torch::nn::Module>>> Modules() const;
  std::vector<torch::Tensor> EncoderParameters() const;
  std::vector<torch::Tensor> DecoderParameters() const;
  std::vector<torch::Tensor> LatentDiscriminatorParameters() const;

  const Quantizer& quantizer() const { return quantizer_; }
  const AttributeNormalizer& normalizer() const { return normalizer_; }
  void SetDescriptorStatistics(Quantizer quantizer, AttributeNormalizer normalizer);
  bool has_statistics() const { return normalizer_.fitted(); }

  // x: (b, 1, n) with n a multiple of hop_length(). Sampled latents use the
  // reparameterization; deterministic mode sets sample = mean. Throws
  // ShapeError on bad length, NumericError on non-finite activations.
  LatentTrajectory Encode(const torch::Tensor& x, bool deterministic) const;
  // z: (b, d, m), attrs: (b, N, m). Returns (b, 1, m * hop_length()).
  torch::Tensor Decode(const torch::Tensor& z, const torch::Tensor& attrs) const;
  // Per-attribute logits, each (b, K, m).
  std::vector<torch::Tensor> DiscriminateLatent(const torch::Tensor& z) const;
  // Per-attribute softmax distributions stacked to (b, N, m, K).
  torch::Tensor LatentDistributions(const torch::Tensor& z) const;
  DiscriminatorOutput DiscriminateWaveform(const torch::Tensor& x) const;

  // Switches every module between training and inference behaviour.
  void SetTraining(bool on);

  // Descriptor helpers on raw audio (length must be a multiple of
  // hop_length()). Tracks are computed at the descriptor frame rate, then
  // resampled to m and normalized.
  int LatentLength(std::size_t num_samples) const;
  AttributeTrack Describe(const AudioBuffer& x) const;
  torch::Tensor ConditioningFor(const AttributeTrack& track, int m) const;
  torch::Tensor ConditioningFor(const AudioBuffer& x) const;

 private:
  ModelConfig config_;
  PqmfBank bank_;
  // Forward passes are not const in libtorch; inference through a const
  // FaderModel still leaves the parameters untouched.
  mutable TorchPqmf pqmf_{nullptr};
  mutable Encoder encoder_{nullptr};
  mutable Decoder decoder_{nullptr};
  mutable std::vector<LatentDiscriminator> latent_discs_;
  mutable WaveformDiscriminator wave_disc_{nullptr};
  Quantizer quantizer_;
  AttributeNormalizer normalizer_;
};

// Pads at the end to a multiple of `multiple` samples; the original length
// is returned through `padded_from` when given.
AudioBuffer PadForModel(const AudioBuffer& x, int multiple, std::size_t* padded_from = nullptr);

}  // namespace fadersynth

#endif  // FADERSYNTH_MODEL_H_
