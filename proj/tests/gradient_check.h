#ifndef FADERSYNTH_TESTS_GRADIENT_CHECK_H_
#define FADERSYNTH_TESTS_GRADIENT_CHECK_H_

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace fadersynth::testing {

// Largest relative error between the autograd gradient of `loss` at `param`
// and central differences with step h, over `samples` random entries.
// Expects float64. The default step is about cbrt(machine epsilon); 1e-4
// leaves truncation error near 1e-3 on the log-magnitude terms.
inline double MaxGradientError(const std::function<torch::Tensor(const torch::Tensor&)>& loss, torch::Tensor param,
                               int samples = 12, std::uint64_t seed = 0, double h = 6e-6) {
  param = param.detach().clone().set_requires_grad(true);
  const torch::Tensor grad = torch::autograd::grad({loss(param)}, {param})[0].flatten();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> pick(0, param.numel() - 1);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const long i = pick(rng);
    torch::Tensor plus = param.detach().clone(), minus = param.detach().clone();
    plus.view(-1)[i] += h;
    minus.view(-1)[i] -= h;
    const double numeric = (loss(plus).item<double>() - loss(minus).item<double>()) / (2 * h);
    const double analytic = grad[i].item<double>();
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  return worst;
}

}  // namespace fadersynth::testing

#endif  // FADERSYNTH_TESTS_GRADIENT_CHECK_H_
