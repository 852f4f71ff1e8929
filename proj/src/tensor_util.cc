#include "fadersynth/tensor_util.h"

#include <cmath>
#include <map>
#include <mutex>

#include "fadersynth/errors.h"

namespace fadersynth {
namespace F = torch::nn::functional;

torch::Tensor AudioToTensor(const AudioBuffer& x) {
  return torch::from_blob(const_cast<float*>(x.samples.data()),
                          {1, 1, static_cast<long>(x.size())}, torch::kFloat32)
      .clone();
}

torch::Tensor AudioBatchToTensor(const std::vector<AudioBuffer>& xs) {
  if (xs.empty()) throw ShapeError("empty audio batch");
  std::vector<torch::Tensor> rows;
  rows.reserve(xs.size());
  for (const auto& x : xs) {
    if (x.size() != xs.front().size()) throw ShapeError("audio batch items differ in length");
    rows.push_back(AudioToTensor(x));
  }
  return torch::cat(rows, 0);
}

AudioBuffer TensorToAudio(const torch::Tensor& t, int sample_rate) {
  if (t.numel() != t.size(-1)) throw ShapeError("expected a single waveform tensor");
  const torch::Tensor flat = t.detach().reshape({-1}).to(torch::kFloat32).contiguous();
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.assign(flat.data_ptr<float>(), flat.data_ptr<float>() + flat.numel());
  return out;
}

torch::Tensor MatrixToTensor(const Eigen::MatrixXd& m) {
  auto t = torch::empty({m.rows(), m.cols()}, torch::kFloat32);
  auto acc = t.accessor<float, 2>();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) acc[i][j] = static_cast<float>(m(i, j));
  }
  return t;
}

Eigen::MatrixXd TensorToMatrix(const torch::Tensor& t) {
  if (t.dim() != 2) throw ShapeError("expected a 2-d tensor");
  const torch::Tensor c = t.detach().to(torch::kFloat64).contiguous();
  auto acc = c.accessor<double, 2>();
  Eigen::MatrixXd m(c.size(0), c.size(1));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = acc[i][j];
  }
  return m;
}

void CheckFinite(const torch::Tensor& t, const std::string& what) {
  if (!torch::isfinite(t).all().item<bool>()) {
    const auto bad = (~torch::isfinite(t)).sum().item<long>();
    throw NumericError(what + " has " + std::to_string(bad) + " non-finite values of " +
                       std::to_string(t.numel()));
  }
}

TorchPqmfImpl::TorchPqmfImpl(const PqmfBank& bank)
    : num_bands_(bank.num_bands()), order_(bank.order()) {
  const auto to_kernel = [](const Eigen::MatrixXd& m) {
    return MatrixToTensor(m).flip({1}).unsqueeze(1).contiguous();
  };
  analysis_ = register_buffer("analysis", to_kernel(bank.analysis_filters()));
  synthesis_ = register_buffer("synthesis", to_kernel(bank.synthesis_filters()));
}

torch::Tensor TorchPqmfImpl::Analyze(const torch::Tensor& x) const {
  const long n = x.size(-1);
  if (n % num_bands_ != 0) throw ShapeError("PQMF input length must be a multiple of the band count");
  if (n < order_) throw LengthError("PQMF input shorter than the filter order");
  // u_k[j] = sum_t h_k[t] x[jB - t]: prepend the last N samples, then a valid
  // correlation with the reversed filter evaluated every B samples.
  const torch::Tensor padded = torch::cat({x.narrow(-1, n - order_, order_), x}, -1);
  return F::conv1d(padded, analysis_.to(x.dtype()), F::Conv1dFuncOptions().stride(num_bands_));
}

torch::Tensor TorchPqmfImpl::Synthesize(const torch::Tensor& bands) const {
  if (bands.size(1) != num_bands_) throw ShapeError("band count does not match the PQMF bank");
  const long b = bands.size(0), frames = bands.size(2), n = frames * num_bands_;
  // Zero-stuffed expansion, scaled by B.
  torch::Tensor up = torch::zeros({b, num_bands_, frames, num_bands_}, bands.options());
  up.select(3, 0).copy_(bands * static_cast<double>(num_bands_));
  up = up.reshape({b, num_bands_, n});
  // y[i] = sum_s g[s] e[i + N - s]: append the first N samples so the output
  // is advanced by the cascade delay.
  const torch::Tensor padded = torch::cat({up, up.narrow(-1, 0, order_)}, -1);
  const torch::Tensor y = F::conv1d(padded, synthesis_.to(bands.dtype()),
                                    F::Conv1dFuncOptions().groups(num_bands_));
  return y.sum(1, /*keepdim=*/true);
}

namespace {

torch::Tensor CachedWindow(Taper taper, int size, torch::Dtype dtype) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, torch::Tensor> cache;
  const auto key = std::make_tuple(static_cast<int>(taper), size, static_cast<int>(dtype));
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const auto w = MakeWindow(taper, size);
    torch::Tensor t = torch::tensor(w, torch::kFloat64).to(dtype);
    it = cache.emplace(key, t).first;
  }
  return it->second;
}

}  // namespace

torch::Tensor SpectralDistance(const torch::Tensor& x, const torch::Tensor& y,
                               const SpectralScaleConfig& cfg) {
  cfg.Validate();
  if (x.sizes() != y.sizes()) throw ShapeError("spectral distance inputs differ in shape");
  const torch::Tensor a = x.reshape({x.size(0), x.size(-1)});
  const torch::Tensor b = y.reshape({y.size(0), y.size(-1)});
  torch::Tensor total = torch::zeros({a.size(0)}, a.options());
  for (int size : cfg.fft_sizes) {
    const int hop = cfg.HopFor(size);
    const torch::Tensor window = CachedWindow(cfg.window, size, a.scalar_type());
    auto stft = [&](const torch::Tensor& s) {
      return torch::stft(s, size, hop, size, window, /*center=*/true, "reflect",
                         /*normalized=*/false, /*onesided=*/true, /*return_complex=*/true)
          .abs();
    };
    const torch::Tensor sa = stft(a), sb = stft(b);
    const torch::Tensor na = sa.flatten(1).norm(2, 1), nb = sb.flatten(1).norm(2, 1);
    const torch::Tensor diff = (sa - sb).flatten(1).norm(2, 1);
    // 0/0 on two silent inputs counts as agreement.
    const torch::Tensor denom = na + nb;
    const torch::Tensor linear =
        torch::where(denom > 0, diff / denom.clamp_min(1e-30), torch::zeros_like(denom));
    const torch::Tensor logs =
        (torch::log(sa + cfg.epsilon) - torch::log(sb + cfg.epsilon)).abs().flatten(1).mean(1);
    total = total + linear + logs;
  }
  return total.mean();
}

}  // namespace fadersynth
