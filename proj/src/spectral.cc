#include "fadersynth/spectral.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "fadersynth/errors.h"
#include "fadersynth/fft.h"
#include "fadersynth/log.h"

namespace fadersynth {
namespace {

void CheckFraming(int fft_size, int hop) {
  if (fft_size < 1 || hop < 1 || hop > fft_size) {
    throw ConfigError("spectrogram needs fft_size >= hop >= 1 (fft_size=" +
                      std::to_string(fft_size) + ", hop=" + std::to_string(hop) + ")");
  }
}

// Magnitudes of windowed frames read from `padded` starting at t * hop.
Eigen::MatrixXd FramesToMagnitudes(const std::vector<double>& padded, int frames,
                                   int fft_size, int hop, Taper taper) {
  const RealFft fft(fft_size);
  const std::vector<double> window = MakeWindow(taper, fft_size);
  Eigen::MatrixXd out(frames, fft.bins());
  std::vector<double> frame(static_cast<std::size_t>(fft_size));
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < fft_size; ++i) {
      const std::size_t idx = start + static_cast<std::size_t>(i);
      frame[static_cast<std::size_t>(i)] = idx < padded.size() ? padded[idx] * window[i] : 0.0;
    }
    fft.Forward(frame, spec);
    for (int k = 0; k < fft.bins(); ++k) out(t, k) = std::abs(spec[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace

Taper ParseTaper(const std::string& name) {
  if (name == "hann") return Taper::kHann;
  if (name == "hamming") return Taper::kHamming;
  if (name == "rectangular" || name == "rect" || name == "boxcar") return Taper::kRectangular;
  throw ConfigError("unknown window taper '" + name + "'");
}

std::string TaperName(Taper taper) {
  switch (taper) {
    case Taper::kHann: return "hann";
    case Taper::kHamming: return "hamming";
    case Taper::kRectangular: return "rectangular";
  }
  return "unknown";
}

std::vector<double> MakeWindow(Taper taper, int size) {
  std::vector<double> w(static_cast<std::size_t>(size), 1.0);
  const double step = 2.0 * std::numbers::pi / size;
  for (int i = 0; i < size; ++i) {
    switch (taper) {
      case Taper::kHann: w[i] = 0.5 - 0.5 * std::cos(step * i); break;
      case Taper::kHamming: w[i] = 0.54 - 0.46 * std::cos(step * i); break;
      case Taper::kRectangular: break;
    }
  }
  return w;
}

Eigen::MatrixXd Spectrogram(const AudioBuffer& x, int fft_size, int hop, Taper taper) {
  CheckFraming(fft_size, hop);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t pad = fft_size / 2;
  const bool reflect = n > pad;
  std::vector<double> padded(static_cast<std::size_t>(n + 2 * pad), 0.0);
  for (std::ptrdiff_t i = 0; i < n + 2 * pad; ++i) {
    std::ptrdiff_t src = i - pad;
    if (reflect) {
      if (src < 0) src = -src;
      if (src >= n) src = 2 * (n - 1) - src;
    }
    if (src >= 0 && src < n) padded[static_cast<std::size_t>(i)] = x.samples[static_cast<std::size_t>(src)];
  }
  const int frames = static_cast<int>(1 + n / hop);
  return FramesToMagnitudes(padded, frames, fft_size, hop, taper);
}

Eigen::MatrixXd FrameSpectrogram(const AudioBuffer& x, int fft_size, int hop, Taper taper) {
  CheckFraming(fft_size, hop);
  if (x.size() < static_cast<std::size_t>(fft_size)) {
    throw LengthError("frame of " + std::to_string(fft_size) + " samples exceeds signal of " +
                      std::to_string(x.size()));
  }
  const int frames = static_cast<int>((x.size() - fft_size) / hop + 1);
  std::vector<double> samples(x.samples.begin(), x.samples.end());
  return FramesToMagnitudes(samples, frames, fft_size, hop, taper);
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd MelFilterbank(int mel_bands, int fft_size, int sample_rate) {
  const int bins = fft_size / 2 + 1;
  if (mel_bands < 1 || mel_bands > bins) {
    throw ConfigError("mel band count must be in [1, fft_size/2+1]");
  }
  const double mel_max = HzToMel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(mel_bands) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(mel_max * static_cast<double>(i) / (mel_bands + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(mel_bands, bins);
  for (int m = 0; m < mel_bands; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f <= centre) w = (f - lo) / (centre - lo);
      else if (f > centre && f < hi) w = (hi - f) / (hi - centre);
      fb(m, k) = w;
    }
    if (fb.row(m).sum() == 0.0) {
      const int nearest = std::clamp(static_cast<int>(std::lround(centre / bin_hz)), 0, bins - 1);
      fb(m, nearest) = 1.0;
    }
  }
  return fb;
}

Eigen::MatrixXd MelSpectrogram(const AudioBuffer& x, int mel_bands, int fft_size, int hop) {
  const Eigen::MatrixXd fb = MelFilterbank(mel_bands, fft_size, x.sample_rate);
  const Eigen::MatrixXd mag = Spectrogram(x, fft_size, hop, Taper::kHann);
  return mag * fb.transpose();
}

int SpectralScaleConfig::HopFor(int fft_size) const {
  return std::max(1, static_cast<int>(std::lround(fft_size * hop_ratio)));
}

void SpectralScaleConfig::Validate() const {
  if (fft_sizes.empty()) throw ConfigError("multiscale config needs at least one FFT size");
  for (std::size_t i = 0; i < fft_sizes.size(); ++i) {
    if (fft_sizes[i] < 2) throw ConfigError("FFT sizes must be >= 2");
    if (i > 0 && fft_sizes[i] >= fft_sizes[i - 1]) {
      throw ConfigError("multiscale FFT sizes must be strictly decreasing");
    }
  }
  if (!(hop_ratio > 0.0 && hop_ratio <= 1.0)) throw ConfigError("hop_ratio must be in (0, 1]");
  if (!(epsilon > 0.0)) throw ConfigError("log floor epsilon must be positive");
}

double MultiscaleSpectralDistance(const AudioBuffer& x, const AudioBuffer& x_hat,
                                  const SpectralScaleConfig& cfg, std::size_t* padded) {
  cfg.Validate();
  AudioBuffer a = x, b = x_hat;
  const std::size_t n = std::max(a.size(), b.size());
  const std::size_t pad = n - std::min(a.size(), b.size());
  a.samples.resize(n, 0.0f);
  b.samples.resize(n, 0.0f);
  if (padded != nullptr) *padded = pad;
  if (pad > 0) LogWarning("spectral distance: zero-padded shorter input by " + std::to_string(pad));

  double total = 0.0;
  for (int size : cfg.fft_sizes) {
    const int hop = cfg.HopFor(size);
    const Eigen::MatrixXd sa = Spectrogram(a, size, hop, cfg.window);
    const Eigen::MatrixXd sb = Spectrogram(b, size, hop, cfg.window);
    const double denom = sa.norm() + sb.norm();
    const double lin = denom > 0.0 ? (sa - sb).norm() / denom : 0.0;
    const double lg =
        ((sa.array() + cfg.epsilon).log() - (sb.array() + cfg.epsilon).log()).abs().mean();
    total += lin + lg;
  }
  return total;
}

}  // namespace fadersynth
