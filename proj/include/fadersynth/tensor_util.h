#ifndef FADERSYNTH_TENSOR_UTIL_H_
#define FADERSYNTH_TENSOR_UTIL_H_

#include <torch/torch.h>

#include <Eigen/Core>
#include <string>
#include <vector>

#include "fadersynth/audio.h"
#include "fadersynth/pqmf.h"
#include "fadersynth/spectral.h"

namespace fadersynth {

// (1, 1, n) float tensor holding a copy of the samples.
torch::Tensor AudioToTensor(const AudioBuffer& x);
// Stacks equal-length buffers into (b, 1, n). Throws ShapeError on length
// mismatch.
torch::Tensor AudioBatchToTensor(const std::vector<AudioBuffer>& xs);
// Accepts (n), (1, n) or (1, 1, n).
AudioBuffer TensorToAudio(const torch::Tensor& t, int sample_rate);

torch::Tensor MatrixToTensor(const Eigen::MatrixXd& m);
Eigen::MatrixXd TensorToMatrix(const torch::Tensor& t);

// Throws NumericError naming `what` when `t` holds NaN or Inf.
void CheckFinite(const torch::Tensor& t, const std::string& what);

// Differentiable PQMF on (b, 1, n) / (b, B, n / B) tensors, numerically the
// same operator as PqmfAnalyze / PqmfSynthesize (periodic extension, delay
// compensated). n must be a multiple of B.
class TorchPqmfImpl : public torch::nn::Module {
 public:
  explicit TorchPqmfImpl(const PqmfBank& bank);

  torch::Tensor Analyze(const torch::Tensor& x) const;
  torch::Tensor Synthesize(const torch::Tensor& bands) const;
  int num_bands() const { return num_bands_; }

 private:
  int num_bands_;
  int order_;
  torch::Tensor analysis_;   // (B, 1, N + 1), time-reversed for conv1d
  torch::Tensor synthesis_;  // (B, 1, N + 1), time-reversed for conv1d
};
TORCH_MODULE(TorchPqmf);

// Batched, differentiable version of MultiscaleSpectralDistance on
// (b, 1, n) tensors: the per-example distance averaged over the batch.
torch::Tensor SpectralDistance(const torch::Tensor& x, const torch::Tensor& y,
                               const SpectralScaleConfig& cfg = {});

}  // namespace fadersynth

#endif  // FADERSYNTH_TENSOR_UTIL_H_
