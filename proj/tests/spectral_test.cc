#include "fadersynth/spectral.h"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "fadersynth/errors.h"
#include "test_signals.h"

namespace fadersynth {
namespace {

using testing::Sine;
using testing::WhiteNoise;

TEST(SpectrogramTest, ZeroSignal) {
  const AudioBuffer x(std::vector<float>(4096, 0.0f), 16000);
  const auto s = Spectrogram(x, 512, 128);
  EXPECT_EQ(s.rows(), 1 + 4096 / 128);
  EXPECT_EQ(s.cols(), 257);
  EXPECT_EQ(s.maxCoeff(), 0.0);
}

TEST(SpectrogramTest, ImpulseIsFlatUnderRectangularWindow) {
  AudioBuffer x(std::vector<float>(2048, 0.0f), 16000);
  x.samples[0] = 1.0f;
  // Frame 0 is centred on sample 0; reflection keeps it a lone impulse.
  const auto s = Spectrogram(x, 256, 256, Taper::kRectangular);
  for (int k = 0; k < s.cols(); ++k) EXPECT_NEAR(s(0, k), 1.0, 1e-12);
}

TEST(SpectrogramTest, SinePeakBin) {
  const auto x = Sine(1000.0, 16000);
  const auto s = Spectrogram(x, 1024, 256);
  Eigen::Index bin;
  s.row(s.rows() / 2).maxCoeff(&bin);
  EXPECT_EQ(bin, 64);  // 1000 * 1024 / 16000
}

TEST(SpectrogramTest, RejectsHopLargerThanFrame) {
  const auto x = Sine(1000.0, 4096);
  EXPECT_THROW(Spectrogram(x, 256, 512), ConfigError);
  EXPECT_THROW(Spectrogram(x, 256, 0), ConfigError);
}

// One-sided Parseval: sum_k c_k |X_k|^2 / N = sum_n (w[n] x[n])^2 with c_k = 1
// at DC and Nyquist, 2 elsewhere.
TEST(SpectrogramTest, FrameEnergyMatchesParseval) {
  const auto x = WhiteNoise(8192, 5);
  for (Taper taper : {Taper::kRectangular, Taper::kHann}) {
    const int size = 512, hop = 512;
    const auto s = FrameSpectrogram(x, size, hop, taper);
    const auto w = MakeWindow(taper, size);
    for (int t = 0; t < s.rows(); ++t) {
      double time_energy = 0.0;
      for (int i = 0; i < size; ++i) {
        const double v = w[i] * x.samples[static_cast<std::size_t>(t * hop + i)];
        time_energy += v * v;
      }
      double freq_energy = 0.0;
      for (int k = 0; k < s.cols(); ++k) {
        const double c = (k == 0 || k == size / 2) ? 1.0 : 2.0;
        freq_energy += c * s(t, k) * s(t, k);
      }
      freq_energy /= size;
      EXPECT_NEAR(freq_energy / time_energy, 1.0, 1e-6);
    }
  }
}

TEST(MelSpectrogramTest, ZeroSignal) {
  const AudioBuffer x(std::vector<float>(4096, 0.0f), 16000);
  const auto m = MelSpectrogram(x, 64, 1024, 256);
  EXPECT_EQ(m.cols(), 64);
  EXPECT_EQ(m.maxCoeff(), 0.0);
}

TEST(MelSpectrogramTest, SineLandsInBandCoveringItsFrequency) {
  const int bands = 64;
  const auto x = Sine(440.0, 16000);
  const auto m = MelSpectrogram(x, bands, 1024, 256);
  Eigen::Index best;
  m.row(m.rows() / 2).maxCoeff(&best);
  // Oracle: triangle centres equally spaced on the HTK mel scale.
  const double mel_max = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  auto centre_hz = [&](int b) {
    return 700.0 * (std::pow(10.0, mel_max * (b + 1) / (bands + 1) / 2595.0) - 1.0);
  };
  const double lo = best == 0 ? 0.0 : centre_hz(static_cast<int>(best) - 1);
  const double hi = centre_hz(static_cast<int>(best) + 1);
  EXPECT_LT(lo, 440.0);
  EXPECT_GT(hi, 440.0);
}

TEST(MelSpectrogramTest, WhiteNoiseFillsEveryBand) {
  const auto x = WhiteNoise(16000, 9);
  const auto m = MelSpectrogram(x, 80, 1024, 256);
  const Eigen::VectorXd energy = m.colwise().sum();
  for (int b = 0; b < energy.size(); ++b) EXPECT_GT(energy(b), 0.0) << "band " << b;
}

TEST(MelSpectrogramTest, RejectsTooManyBands) {
  const auto x = WhiteNoise(4096, 1);
  EXPECT_THROW(MelSpectrogram(x, 600, 1024, 256), ConfigError);
}

TEST(MultiscaleDistanceTest, IdentityIsZero) {
  const auto x = WhiteNoise(8192, 2);
  EXPECT_EQ(MultiscaleSpectralDistance(x, x), 0.0);
}

TEST(MultiscaleDistanceTest, PositiveAgainstSilence) {
  const auto x = WhiteNoise(8192, 2);
  const AudioBuffer zero(std::vector<float>(8192, 0.0f), 16000);
  EXPECT_GT(MultiscaleSpectralDistance(x, zero), MultiscaleSpectralDistance(x, x));
  EXPECT_EQ(MultiscaleSpectralDistance(zero, zero), 0.0);
}

TEST(MultiscaleDistanceTest, Symmetric) {
  const auto a = WhiteNoise(8192, 2);
  const auto b = Sine(300.0, 8192, 16000, 0.4);
  EXPECT_NEAR(MultiscaleSpectralDistance(a, b), MultiscaleSpectralDistance(b, a), 1e-12);
}

TEST(MultiscaleDistanceTest, PhaseInsensitive) {
  const auto a = Sine(440.0, 16384, 16000, 0.5);
  const auto b = Sine(440.0, 16384, 16000, 0.5, M_PI / 2);
  const AudioBuffer zero(std::vector<float>(16384, 0.0f), 16000);
  const double shifted = MultiscaleSpectralDistance(a, b);
  const double reference = MultiscaleSpectralDistance(a, zero);
  EXPECT_LE(shifted / reference, 1e-2);
}

TEST(MultiscaleDistanceTest, PadsShorterInput) {
  const auto a = WhiteNoise(8192, 2);
  AudioBuffer b = a;
  b.samples.resize(8000);
  std::size_t padded = 0;
  const double d = MultiscaleSpectralDistance(a, b, {}, &padded);
  EXPECT_EQ(padded, 192u);
  EXPECT_GT(d, 0.0);
}

TEST(MultiscaleDistanceTest, ValidatesScales) {
  SpectralScaleConfig cfg;
  cfg.fft_sizes = {256, 512};
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg.fft_sizes = {512, 256};
  cfg.hop_ratio = 1.5;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

}  // namespace
}  // namespace fadersynth
