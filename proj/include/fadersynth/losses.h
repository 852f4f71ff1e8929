#ifndef FADERSYNTH_LOSSES_H_
#define FADERSYNTH_LOSSES_H_

#include <torch/torch.h>

#include <vector>

#include "fadersynth/model.h"
#include "fadersynth/spectral.h"

namespace fadersynth {

// KL(N(mean, scale^2) || N(0, 1)) summed over latent channels, averaged over
// batch and frames. Closed form (mu^2 + sigma^2 - 1 - 2 ln sigma) / 2.
torch::Tensor KlDivergence(const torch::Tensor& mean, const torch::Tensor& scale);

struct VaeLoss {
  torch::Tensor total;
  torch::Tensor recon;
  torch::Tensor kl;
};

// recon = SpectralDistance(x, x_hat); total = recon + beta * kl. Throws
// NumericError when a term is not finite.
VaeLoss LossVae(const torch::Tensor& x, const torch::Tensor& x_hat, const LatentTrajectory& z,
                double beta, const SpectralScaleConfig& scales = {});

struct FaderLoss {
  torch::Tensor discriminator;  // mean -log p(y | z) over non-silent frames
  torch::Tensor encoder;        // mean cross-entropy of p(. | z) to uniform
  long active_frames = 0;       // 0 means both terms are zero and skipped
};

// logits: one (b, K, m) tensor per attribute. labels: (b, N, m) int64.
// mask: (b, m) bool, true for frames that count (non-silent).
FaderLoss LossFader(const std::vector<torch::Tensor>& logits, const torch::Tensor& labels,
                    const torch::Tensor& mask);

// Same terms computed from probability tensors (b, N, m, K); used by tests
// that feed hand-made distributions.
FaderLoss LossFaderFromProbabilities(const torch::Tensor& probs, const torch::Tensor& labels,
                                     const torch::Tensor& mask);

struct HingeLoss {
  torch::Tensor discriminator;  // mean relu(1 - D(x)) + mean relu(1 + D(x_hat))
  torch::Tensor generator;      // -mean D(x_hat)
};

// Averaged over scales. Throws ShapeError when the scale counts differ or a
// list is empty.
HingeLoss LossHinge(const std::vector<torch::Tensor>& real_scores,
                    const std::vector<torch::Tensor>& fake_scores);

// Mean absolute difference per layer, averaged over layers then scales.
torch::Tensor LossFeatureMatching(const std::vector<std::vector<torch::Tensor>>& real_maps,
                                  const std::vector<std::vector<torch::Tensor>>& fake_maps);

}  // namespace fadersynth

#endif  // FADERSYNTH_LOSSES_H_
