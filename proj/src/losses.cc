#include "fadersynth/losses.h"

#include <cmath>

#include "fadersynth/errors.h"
#include "fadersynth/log.h"

namespace fadersynth {

torch::Tensor KlDivergence(const torch::Tensor& mean, const torch::Tensor& scale) {
  if (mean.sizes() != scale.sizes()) throw ShapeError("posterior mean and scale differ in shape");
  const torch::Tensor per_dim = 0.5 * (mean.pow(2) + scale.pow(2) - 1.0 - 2.0 * torch::log(scale));
  return per_dim.sum(1).mean();
}

VaeLoss LossVae(const torch::Tensor& x, const torch::Tensor& x_hat, const LatentTrajectory& z,
                double beta, const SpectralScaleConfig& scales) {
  VaeLoss out;
  out.recon = SpectralDistance(x, x_hat, scales);
  out.kl = KlDivergence(z.mean, z.scale);
  CheckFinite(out.recon, "reconstruction loss");
  CheckFinite(out.kl, "KL divergence");
  out.total = out.recon + beta * out.kl;
  return out;
}

namespace {

void CheckFaderShapes(long attrs, const torch::Tensor& labels, const torch::Tensor& mask) {
  if (labels.dim() != 3 || labels.size(1) != attrs) {
    throw ShapeError("fader labels must be (batch, attributes, frames)");
  }
  if (mask.dim() != 2 || mask.size(0) != labels.size(0) || mask.size(1) != labels.size(2)) {
    throw ShapeError("fader mask must be (batch, frames)");
  }
}

// log_probs: (b, K, m) per attribute.
FaderLoss FaderFromLogProbs(const std::vector<torch::Tensor>& log_probs, const torch::Tensor& labels,
                            const torch::Tensor& mask) {
  CheckFaderShapes(static_cast<long>(log_probs.size()), labels, mask);
  FaderLoss out;
  const torch::Tensor weight = mask.to(log_probs.front().dtype());
  out.active_frames = mask.sum().item<long>();
  if (out.active_frames == 0) {
    LogWarning("fader loss skipped: every frame in the batch is silent");
    out.discriminator = (log_probs.front() * 0.0).sum();
    out.encoder = out.discriminator;
    return out;
  }
  torch::Tensor dis = torch::zeros({}, weight.options());
  torch::Tensor enc = torch::zeros({}, weight.options());
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    const torch::Tensor& lp = log_probs[i];
    const torch::Tensor y = labels.select(1, static_cast<long>(i)).clamp_min(0).unsqueeze(1);
    const torch::Tensor nll = -lp.gather(1, y).squeeze(1);       // (b, m)
    const torch::Tensor to_uniform = -lp.mean(1);                // (b, m)
    dis = dis + (nll * weight).sum() / weight.sum();
    enc = enc + (to_uniform * weight).sum() / weight.sum();
  }
  const double n = static_cast<double>(log_probs.size());
  out.discriminator = dis / n;
  out.encoder = enc / n;
  return out;
}

}  // namespace

FaderLoss LossFader(const std::vector<torch::Tensor>& logits, const torch::Tensor& labels,
                    const torch::Tensor& mask) {
  if (logits.empty()) throw ShapeError("fader loss needs at least one attribute");
  std::vector<torch::Tensor> log_probs;
  for (const auto& l : logits) log_probs.push_back(torch::log_softmax(l, 1));
  return FaderFromLogProbs(log_probs, labels, mask);
}

FaderLoss LossFaderFromProbabilities(const torch::Tensor& probs, const torch::Tensor& labels,
                                     const torch::Tensor& mask) {
  if (probs.dim() != 4) throw ShapeError("probabilities must be (batch, attributes, frames, bins)");
  std::vector<torch::Tensor> log_probs;
  for (long i = 0; i < probs.size(1); ++i) {
    log_probs.push_back(torch::log(probs.select(1, i).transpose(1, 2)));
  }
  return FaderFromLogProbs(log_probs, labels, mask);
}

HingeLoss LossHinge(const std::vector<torch::Tensor>& real_scores,
                    const std::vector<torch::Tensor>& fake_scores) {
  if (real_scores.empty() || real_scores.size() != fake_scores.size()) {
    throw ShapeError("hinge loss needs the same nonzero number of real and fake scales");
  }
  HingeLoss out;
  torch::Tensor d = torch::zeros({}, real_scores.front().options());
  torch::Tensor g = torch::zeros({}, fake_scores.front().options());
  for (std::size_t s = 0; s < real_scores.size(); ++s) {
    d = d + torch::relu(1.0 - real_scores[s]).mean() + torch::relu(1.0 + fake_scores[s]).mean();
    g = g - fake_scores[s].mean();
  }
  const double n = static_cast<double>(real_scores.size());
  out.discriminator = d / n;
  out.generator = g / n;
  return out;
}

torch::Tensor LossFeatureMatching(const std::vector<std::vector<torch::Tensor>>& real_maps,
                                  const std::vector<std::vector<torch::Tensor>>& fake_maps) {
  if (real_maps.empty() || real_maps.size() != fake_maps.size()) {
    throw ShapeError("feature matching needs the same nonzero number of scales");
  }
  torch::Tensor total;
  for (std::size_t s = 0; s < real_maps.size(); ++s) {
    if (real_maps[s].empty() || real_maps[s].size() != fake_maps[s].size()) {
      throw ShapeError("feature map layer counts differ");
    }
    torch::Tensor scale_sum;
    for (std::size_t l = 0; l < real_maps[s].size(); ++l) {
      if (real_maps[s][l].sizes() != fake_maps[s][l].sizes()) throw ShapeError("feature map shapes differ");
      const torch::Tensor term = (real_maps[s][l] - fake_maps[s][l]).abs().mean();
      scale_sum = scale_sum.defined() ? scale_sum + term : term;
    }
    const torch::Tensor scale_mean = scale_sum / static_cast<double>(real_maps[s].size());
    total = total.defined() ? total + scale_mean : scale_mean;
  }
  return total / static_cast<double>(real_maps.size());
}

}  // namespace fadersynth
