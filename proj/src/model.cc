#include "fadersynth/model.h"

#include <numeric>

#include "fadersynth/errors.h"

namespace fadersynth {
namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

constexpr double kLeakySlope = 0.2;

nn::LeakyReLU Leaky() { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(kLeakySlope)); }

nn::Conv1d Conv(int in, int out, int kernel, int stride = 1, int padding = 0, int dilation = 1,
                int groups = 1) {
  return nn::Conv1d(nn::Conv1dOptions(in, out, kernel)
                        .stride(stride)
                        .padding(padding)
                        .dilation(dilation)
                        .groups(groups));
}

}  // namespace

int ModelConfig::ratio() const {
  return std::accumulate(ratios.begin(), ratios.end(), 1, std::multiplies<int>());
}

void ModelConfig::Validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
  if (ratios.empty()) throw ConfigError("at least one encoder ratio is required");
  for (int r : ratios) {
    if (r < 2 || r % 2 != 0) throw ConfigError("encoder ratios must be even and >= 2");
  }
  if (channels.size() != ratios.size() + 1) {
    throw ConfigError("need one channel width per ratio plus the input width");
  }
  for (int c : channels) {
    if (c < 1) throw ConfigError("channel widths must be positive");
  }
  if (kinds.empty()) throw ConfigError("at least one descriptor kind is required");
  if (num_bins < 2) throw ConfigError("num_bins must be >= 2");
  if (wave_disc_scales < 1) throw ConfigError("wave_disc_scales must be >= 1");
  if (wave_disc_channels < 4 || wave_disc_channels % 4 != 0) {
    throw ConfigError("wave_disc_channels must be a positive multiple of 4");
  }
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"sample_rate", sample_rate},
          {"num_bands", num_bands},
          {"pqmf_taps", pqmf_taps},
          {"pqmf_attenuation_db", pqmf_attenuation_db},
          {"latent_dim", latent_dim},
          {"ratios", ratios},
          {"channels", channels},
          {"kinds", DescriptorNames(kinds)},
          {"num_bins", num_bins},
          {"latent_disc_channels", latent_disc_channels},
          {"wave_disc_scales", wave_disc_scales},
          {"wave_disc_channels", wave_disc_channels},
          {"frame_size", frame_size},
          {"frame_hop", frame_hop}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.sample_rate = j.at("sample_rate");
    c.num_bands = j.at("num_bands");
    c.pqmf_taps = j.at("pqmf_taps");
    c.pqmf_attenuation_db = j.at("pqmf_attenuation_db");
    c.latent_dim = j.at("latent_dim");
    c.ratios = j.at("ratios").get<std::vector<int>>();
    c.channels = j.at("channels").get<std::vector<int>>();
    c.kinds = ParseDescriptorKinds(j.at("kinds").get<std::vector<std::string>>());
    c.num_bins = j.at("num_bins");
    c.latent_disc_channels = j.at("latent_disc_channels");
    c.wave_disc_scales = j.at("wave_disc_scales");
    c.wave_disc_channels = j.at("wave_disc_channels");
    c.frame_size = j.at("frame_size");
    c.frame_hop = j.at("frame_hop");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.Validate();
  return c;
}

EncoderImpl::EncoderImpl(const ModelConfig& cfg) {
  nn::Sequential net;
  net->push_back(Conv(cfg.num_bands, cfg.channels[0], 7, 1, 3));
  net->push_back(Leaky());
  for (std::size_t i = 0; i < cfg.ratios.size(); ++i) {
    const int r = cfg.ratios[i];
    net->push_back(Conv(cfg.channels[i], cfg.channels[i + 1], 2 * r, r, r / 2));
    net->push_back(nn::BatchNorm1d(cfg.channels[i + 1]));
    net->push_back(Leaky());
  }
  net->push_back(Conv(cfg.channels.back(), 2 * cfg.latent_dim, 3, 1, 1));
  net_ = register_module("net", net);
}

std::pair<torch::Tensor, torch::Tensor> EncoderImpl::forward(const torch::Tensor& bands) {
  const auto parts = net_->forward(bands).chunk(2, 1);
  return {parts[0], F::softplus(parts[1]) + 1e-4};
}

ResidualBlockImpl::ResidualBlockImpl(int channels, int dilation) {
  dilated_ = register_module("dilated", Conv(channels, channels, 3, 1, dilation, dilation));
  pointwise_ = register_module("pointwise", Conv(channels, channels, 1));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  const auto leaky = F::LeakyReLUFuncOptions().negative_slope(kLeakySlope);
  return x + pointwise_(F::leaky_relu(dilated_(F::leaky_relu(x, leaky)), leaky));
}

DecoderImpl::DecoderImpl(const ModelConfig& cfg) {
  std::vector<int> widths(cfg.channels.rbegin(), cfg.channels.rend());
  std::vector<int> ratios(cfg.ratios.rbegin(), cfg.ratios.rend());
  nn::Sequential net;
  net->push_back(Conv(cfg.latent_dim + cfg.num_kinds(), widths[0], 3, 1, 1));
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const int r = ratios[i];
    net->push_back(Leaky());
    net->push_back(nn::ConvTranspose1d(
        nn::ConvTranspose1dOptions(widths[i], widths[i + 1], 2 * r).stride(r).padding(r / 2)));
    net->push_back(ResidualBlock(widths[i + 1], 1));
    net->push_back(ResidualBlock(widths[i + 1], 3));
  }
  net->push_back(Leaky());
  net_ = register_module("net", net);
  wave_ = register_module("wave", Conv(widths.back(), cfg.num_bands, 7, 1, 3));
  amplitude_ = register_module("amplitude", Conv(widths.back(), cfg.num_bands, 7, 1, 3));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& z, const torch::Tensor& attrs) {
  const torch::Tensor h = net_->forward(torch::cat({z, attrs}, 1));
  return torch::tanh(wave_(h)) * torch::sigmoid(amplitude_(h));
}

LatentDiscriminatorImpl::LatentDiscriminatorImpl(int latent_dim, int hidden, int num_bins) {
  nn::Sequential net;
  net->push_back(Conv(latent_dim, hidden, 3, 1, 1));
  net->push_back(nn::BatchNorm1d(hidden));
  net->push_back(Leaky());
  net->push_back(Conv(hidden, hidden, 3, 1, 1));
  net->push_back(nn::BatchNorm1d(hidden));
  net->push_back(Leaky());
  net->push_back(Conv(hidden, num_bins, 3, 1, 1));
  net_ = register_module("net", net);
}

torch::Tensor LatentDiscriminatorImpl::forward(const torch::Tensor& z) { return net_->forward(z); }

WaveformDiscriminatorImpl::WaveformDiscriminatorImpl(const ModelConfig& cfg) {
  const int c = cfg.wave_disc_channels;
  for (int s = 0; s < cfg.wave_disc_scales; ++s) {
    nn::ModuleList layers;
    layers->push_back(Conv(1, c, 15, 1, 7));
    layers->push_back(Conv(c, 2 * c, 41, 4, 20, 1, 4));
    layers->push_back(Conv(2 * c, 4 * c, 41, 4, 20, 1, 4));
    layers->push_back(Conv(4 * c, 4 * c, 5, 1, 2));
    layers->push_back(Conv(4 * c, 1, 3, 1, 1));
    scales_.push_back(register_module("scale" + std::to_string(s), layers));
  }
}

DiscriminatorOutput WaveformDiscriminatorImpl::forward(const torch::Tensor& x) {
  DiscriminatorOutput out;
  const auto leaky = F::LeakyReLUFuncOptions().negative_slope(kLeakySlope);
  torch::Tensor input = x;
  for (std::size_t s = 0; s < scales_.size(); ++s) {
    if (s > 0) {
      input = F::avg_pool1d(input, F::AvgPool1dFuncOptions(4).stride(2).padding(1)
                                       .count_include_pad(false));
    }
    std::vector<torch::Tensor> maps;
    torch::Tensor h = input;
    auto& layers = scales_[s];
    for (std::size_t l = 0; l < layers->size(); ++l) {
      h = layers[l]->as<nn::Conv1d>()->forward(h);
      if (l + 1 < layers->size()) {
        h = F::leaky_relu(h, leaky);
        maps.push_back(h);
      }
    }
    out.scores.push_back(h);
    out.feature_maps.push_back(std::move(maps));
  }
  return out;
}

void InitializeWeights(nn::Module& module) {
  torch::NoGradGuard guard;
  for (auto& m : module.modules(/*include_self=*/true)) {
    if (auto* conv = m->as<nn::Conv1d>()) {
      conv->weight.normal_(0.0, 0.02);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* tconv = m->as<nn::ConvTranspose1d>()) {
      tconv->weight.normal_(0.0, 0.02);
      if (tconv->bias.defined()) tconv->bias.zero_();
    }
  }
}

FaderModel::FaderModel(const ModelConfig& cfg)
    : config_(cfg), bank_(PqmfBank::Design(cfg.num_bands, cfg.pqmf_taps, cfg.pqmf_attenuation_db)) {
  config_.Validate();
  pqmf_ = TorchPqmf(bank_);
  encoder_ = Encoder(config_);
  decoder_ = Decoder(config_);
  for (int i = 0; i < config_.num_kinds(); ++i) {
    latent_discs_.push_back(
        LatentDiscriminator(config_.latent_dim, config_.latent_disc_channels, config_.num_bins));
  }
  wave_disc_ = WaveformDiscriminator(config_);
  InitializeWeights(*encoder_);
  InitializeWeights(*decoder_);
  for (auto& d : latent_discs_) InitializeWeights(*d);
  InitializeWeights(*wave_disc_);
}

std::vector<std::pair<std::string, std::shared_ptr<nn::Module>>> FaderModel::Modules() const {
  std::vector<std::pair<std::string, std::shared_ptr<nn::Module>>> out;
  out.emplace_back("encoder", encoder_.ptr());
  out.emplace_back("decoder", decoder_.ptr());
  for (std::size_t i = 0; i < latent_discs_.size(); ++i) {
    out.emplace_back("latent_discriminator_" + DescriptorName(config_.kinds[i]), latent_discs_[i].ptr());
  }
  out.emplace_back("waveform_discriminator", wave_disc_.ptr());
  return out;
}

std::vector<torch::Tensor> FaderModel::EncoderParameters() const { return encoder_->parameters(); }
std::vector<torch::Tensor> FaderModel::DecoderParameters() const { return decoder_->parameters(); }

std::vector<torch::Tensor> FaderModel::LatentDiscriminatorParameters() const {
  std::vector<torch::Tensor> out;
  for (const auto& d : latent_discs_) {
    for (auto& p : d->parameters()) out.push_back(p);
  }
  return out;
}

void FaderModel::SetDescriptorStatistics(Quantizer quantizer, AttributeNormalizer normalizer) {
  if (quantizer.kinds() != config_.kinds || normalizer.kinds() != config_.kinds) {
    throw ConfigError("descriptor statistics do not match the model's descriptor kinds");
  }
  if (quantizer.num_bins() != config_.num_bins) {
    throw ConfigError("quantizer bin count differs from the model config");
  }
  quantizer_ = std::move(quantizer);
  normalizer_ = std::move(normalizer);
}

LatentTrajectory FaderModel::Encode(const torch::Tensor& x, bool deterministic) const {
  if (x.dim() != 3 || x.size(1) != 1) throw ShapeError("encoder input must be (batch, 1, samples)");
  if (x.size(2) % config_.hop_length() != 0 || x.size(2) == 0) {
    throw ShapeError("encoder input length " + std::to_string(x.size(2)) +
                     " is not a positive multiple of " + std::to_string(config_.hop_length()));
  }
  auto [mean, scale] = encoder_->forward(pqmf_->Analyze(x));
  CheckFinite(mean, "encoder mean");
  CheckFinite(scale, "encoder scale");
  LatentTrajectory z{mean, scale, mean};
  if (!deterministic) z.sample = mean + scale * torch::randn_like(mean);
  return z;
}

torch::Tensor FaderModel::Decode(const torch::Tensor& z, const torch::Tensor& attrs) const {
  if (z.dim() != 3 || z.size(1) != config_.latent_dim) {
    throw ShapeError("latent must be (batch, " + std::to_string(config_.latent_dim) + ", frames)");
  }
  if (attrs.dim() != 3 || attrs.size(1) != config_.num_kinds()) {
    throw ShapeError("conditioning must have " + std::to_string(config_.num_kinds()) + " rows");
  }
  if (attrs.size(0) != z.size(0) || attrs.size(2) != z.size(2)) {
    throw ShapeError("conditioning length " + std::to_string(attrs.size(2)) +
                     " does not match latent length " + std::to_string(z.size(2)));
  }
  const torch::Tensor y = pqmf_->Synthesize(decoder_->forward(z, attrs.to(z.dtype())));
  CheckFinite(y, "decoder output");
  return y;
}

std::vector<torch::Tensor> FaderModel::DiscriminateLatent(const torch::Tensor& z) const {
  if (z.dim() != 3 || z.size(1) != config_.latent_dim) throw ShapeError("latent shape mismatch");
  std::vector<torch::Tensor> out;
  out.reserve(latent_discs_.size());
  for (auto& d : latent_discs_) out.push_back(d->forward(z));
  return out;
}

torch::Tensor FaderModel::LatentDistributions(const torch::Tensor& z) const {
  std::vector<torch::Tensor> probs;
  for (const auto& logits : DiscriminateLatent(z)) probs.push_back(torch::softmax(logits, 1).transpose(1, 2));
  return torch::stack(probs, 1);
}

DiscriminatorOutput FaderModel::DiscriminateWaveform(const torch::Tensor& x) const {
  if (x.dim() != 3 || x.size(1) != 1) throw ShapeError("discriminator input must be (batch, 1, samples)");
  return wave_disc_->forward(x);
}

void FaderModel::SetTraining(bool on) {
  encoder_->train(on);
  decoder_->train(on);
  for (auto& d : latent_discs_) d->train(on);
  wave_disc_->train(on);
}

int FaderModel::LatentLength(std::size_t num_samples) const {
  return static_cast<int>(num_samples / static_cast<std::size_t>(config_.hop_length()));
}

AttributeTrack FaderModel::Describe(const AudioBuffer& x) const {
  return ComputeAttributeSet(x, config_.kinds, config_.frame_size, config_.frame_hop);
}

torch::Tensor FaderModel::ConditioningFor(const AttributeTrack& track, int m) const {
  if (!normalizer_.fitted()) throw ConfigError("model has no descriptor statistics");
  if (track.kinds != config_.kinds) throw ConfigError("attribute kinds differ from the model's");
  AttributeTrack resampled = ResampleAttributes(track, m);
  return MatrixToTensor(normalizer_.Normalize(resampled)).unsqueeze(0);
}

torch::Tensor FaderModel::ConditioningFor(const AudioBuffer& x) const {
  return ConditioningFor(Describe(x), LatentLength(x.size()));
}

AudioBuffer PadForModel(const AudioBuffer& x, int multiple, std::size_t* padded_from) {
  if (padded_from) *padded_from = x.size();
  return PadToMultiple(x, static_cast<std::size_t>(multiple));
}

}  // namespace fadersynth
