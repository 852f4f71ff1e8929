#include "fadersynth/descriptors.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fadersynth/errors.h"
#include "fadersynth/fft.h"
#include "fadersynth/spectral.h"
#include "test_signals.h"

namespace fadersynth {
namespace {

using testing::Constant;
using testing::Sine;
using testing::WhiteNoise;

TEST(DescriptorTrackTest, FrameCount) {
  const auto x = WhiteNoise(16000, 1);
  const auto t = DescriptorTrack(DescriptorKind::kRms, x, 1024, 256);
  EXPECT_EQ(t.size(), static_cast<std::size_t>((16000 - 1024) / 256 + 1));
}

TEST(DescriptorTrackTest, RmsOfConstant) {
  for (double v : DescriptorTrack(DescriptorKind::kRms, Constant(0.5, 8192))) {
    EXPECT_NEAR(v, 0.5, 1e-7);
  }
}

TEST(DescriptorTrackTest, RmsOfFullScaleSine) {
  // 250 Hz at 16 kHz: 64 samples per period, 16 periods per 1024 frame.
  for (double v : DescriptorTrack(DescriptorKind::kRms, Sine(250.0, 16000))) {
    EXPECT_NEAR(v, 0.7071, 1e-3);
  }
}

// Oracle: direct DFT of the Hann-windowed middle frame.
TEST(DescriptorTrackTest, CentroidOfSine) {
  const auto x = Sine(1000.0, 16000);
  const auto track = DescriptorTrack(DescriptorKind::kCentroid, x);
  const int size = 1024;
  const std::size_t start = 256 * (track.size() / 2);
  double total = 0.0, weighted = 0.0;
  for (int k = 0; k <= size / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < size; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / size);
      acc += w * x.samples[start + i] * std::polar(1.0, -2.0 * M_PI * k * i / size);
    }
    total += std::abs(acc);
    weighted += std::abs(acc) * k * 16000.0 / size;
  }
  const double oracle = weighted / total;
  EXPECT_NEAR(oracle, 1000.0, 20.0);
  EXPECT_NEAR(track[track.size() / 2], oracle, 1e-6 * oracle);
  for (double v : track) EXPECT_NEAR(v, 1000.0, 20.0);
}

TEST(DescriptorTrackTest, BandwidthOfSineIsNarrow) {
  for (double v : DescriptorTrack(DescriptorKind::kBandwidth, Sine(1000.0, 16000))) {
    EXPECT_LE(v, 0.05 * 8000.0);
  }
}

TEST(DescriptorTrackTest, WhiteNoiseCentroidNearQuarterRate) {
  const auto t = DescriptorTrack(DescriptorKind::kCentroid, WhiteNoise(32000, 3));
  for (double v : t) EXPECT_NEAR(v, 4000.0, 400.0);
}

TEST(DescriptorTrackTest, SharpnessRisesWithBrightness) {
  const auto dull = DescriptorTrack(DescriptorKind::kSharpness, Sine(200.0, 8192));
  const auto bright = DescriptorTrack(DescriptorKind::kSharpness, Sine(6000.0, 8192));
  EXPECT_GT(bright[0], dull[0]);
}

TEST(DescriptorTrackTest, BoominessFavoursLowTones) {
  const auto low = DescriptorTrack(DescriptorKind::kBoominess, Sine(80.0, 8192));
  const auto high = DescriptorTrack(DescriptorKind::kBoominess, Sine(3000.0, 8192));
  EXPECT_GT(low[0], 0.5);
  EXPECT_LT(high[0], 0.2);
  EXPECT_LE(low[0], 1.0);
}

TEST(DescriptorTrackTest, SilenceGivesZeros) {
  const auto x = Constant(0.0, 4096);
  for (auto kind : {DescriptorKind::kRms, DescriptorKind::kCentroid, DescriptorKind::kBandwidth,
                    DescriptorKind::kSharpness, DescriptorKind::kBoominess}) {
    for (double v : DescriptorTrack(kind, x)) EXPECT_EQ(v, 0.0) << DescriptorName(kind);
  }
}

TEST(DescriptorTrackTest, Errors) {
  EXPECT_THROW(ParseDescriptorKind("pitch"), ConfigError);
  EXPECT_THROW(DescriptorTrack(DescriptorKind::kRms, WhiteNoise(512, 1), 1024, 256), LengthError);
  EXPECT_THROW(DescriptorTrack(DescriptorKind::kRms, WhiteNoise(4096, 1), 32, 16), ConfigError);
}

TEST(DescriptorTrackTest, ScaleBehaviour) {
  const auto x = WhiteNoise(8192, 4);
  AudioBuffer y = x;
  const double a = -0.37;
  for (auto& s : y.samples) s = static_cast<float>(s * a);
  // Use exactly representable scaling for the amplitude-invariant checks.
  AudioBuffer z = x;
  for (auto& s : z.samples) s *= 0.25f;

  const auto rx = DescriptorTrack(DescriptorKind::kRms, x);
  const auto ry = DescriptorTrack(DescriptorKind::kRms, y);
  for (std::size_t t = 0; t < rx.size(); ++t) EXPECT_NEAR(ry[t], std::abs(a) * rx[t], 1e-6 * rx[t]);
  for (auto kind : {DescriptorKind::kCentroid, DescriptorKind::kBandwidth,
                    DescriptorKind::kSharpness, DescriptorKind::kBoominess}) {
    const auto tx = DescriptorTrack(kind, x);
    const auto tz = DescriptorTrack(kind, z);
    for (std::size_t t = 0; t < tx.size(); ++t) {
      EXPECT_NEAR(tz[t], tx[t], 1e-6 * std::max(1.0, std::abs(tx[t]))) << DescriptorName(kind);
    }
  }
}

TEST(AttributeSetTest, SilenceGivesZeroRow) {
  const auto set = ComputeAttributeSet(Constant(0.0, 4096), {DescriptorKind::kRms});
  EXPECT_EQ(set.num_kinds(), 1);
  EXPECT_EQ(set.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(AttributeSetTest, MatchesPerKindCalls) {
  const auto x = WhiteNoise(8192, 8);
  const std::vector<DescriptorKind> kinds = {DescriptorKind::kCentroid, DescriptorKind::kRms,
                                             DescriptorKind::kSharpness};
  const auto set = ComputeAttributeSet(x, kinds, 1024, 256);
  ASSERT_EQ(set.num_kinds(), 3);
  EXPECT_EQ(set.kinds, kinds);
  for (int i = 0; i < 3; ++i) {
    const auto row = DescriptorTrack(kinds[i], x, 1024, 256);
    ASSERT_EQ(static_cast<std::size_t>(set.num_frames()), row.size());
    for (std::size_t t = 0; t < row.size(); ++t) EXPECT_EQ(set.values(i, static_cast<int>(t)), row[t]);
  }
}

TEST(AttributeSetTest, RejectsEmptyAndDuplicateKinds) {
  const auto x = WhiteNoise(4096, 1);
  EXPECT_THROW(ComputeAttributeSet(x, {}), ConfigError);
  EXPECT_THROW(ComputeAttributeSet(x, {DescriptorKind::kRms, DescriptorKind::kRms}), ConfigError);
}

TEST(ResampleTrackTest, LinearMidpoint) {
  const std::vector<double> t = {0.0, 1.0};
  const auto r = ResampleTrack(t, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_DOUBLE_EQ(r[0], 0.0);
  EXPECT_DOUBLE_EQ(r[1], 0.5);
  EXPECT_DOUBLE_EQ(r[2], 1.0);
}

TEST(ResampleTrackTest, ConstantStaysConstant) {
  const std::vector<double> t(17, 3.25);
  for (int m : {1, 2, 5, 64}) {
    for (double v : ResampleTrack(t, m)) EXPECT_DOUBLE_EQ(v, 3.25);
  }
}

TEST(ResampleTrackTest, PreservesEndpointsAndMonotonicity) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> step(0.0, 1.0);
  std::uniform_int_distribution<int> len(2, 200);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> t(static_cast<std::size_t>(len(rng)));
    double acc = step(rng);
    for (auto& v : t) v = (acc += step(rng));
    const int m = len(rng);
    const auto r = ResampleTrack(t, m);
    EXPECT_DOUBLE_EQ(r.front(), t.front());
    EXPECT_DOUBLE_EQ(r.back(), t.back());
    EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
  }
}

AttributeTrack SyntheticTrack(std::vector<std::vector<double>> rows, std::vector<DescriptorKind> kinds) {
  AttributeTrack tr;
  tr.kinds = std::move(kinds);
  tr.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t t = 0; t < rows[i].size(); ++t) tr.values(i, t) = rows[i][t];
  }
  return tr;
}

TEST(PairwiseIndependenceTest, SelfAndNegatedTracks) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<double> rms(500);
  for (auto& v : rms) v = u(rng);
  std::vector<double> neg(rms.size());
  std::transform(rms.begin(), rms.end(), neg.begin(), [](double v) { return -v; });
  const auto tr = SyntheticTrack({rms, rms, neg}, {DescriptorKind::kRms, DescriptorKind::kCentroid,
                                                   DescriptorKind::kBandwidth});
  const auto rho = PairwiseIndependence({tr});
  EXPECT_NEAR(rho(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(rho(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(rho(0, 2), -1.0, 1e-12);
  EXPECT_EQ(rho(1, 2), rho(2, 1));
}

TEST(PairwiseIndependenceTest, IndependentTracksAreUncorrelated) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<double> a(10000), b(10000);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  const auto rho = PairwiseIndependence(
      {SyntheticTrack({a, b}, {DescriptorKind::kRms, DescriptorKind::kCentroid})});
  EXPECT_LE(std::abs(rho(0, 1)), 0.1);
}

TEST(PairwiseIndependenceTest, Preconditions) {
  std::vector<double> a(50, 0.5), b(50, 0.1);
  EXPECT_THROW(PairwiseIndependence({SyntheticTrack({a}, {DescriptorKind::kRms})}), ConfigError);
  EXPECT_THROW(
      PairwiseIndependence({SyntheticTrack({a, b}, {DescriptorKind::kRms, DescriptorKind::kCentroid})}),
      LengthError);
}

TEST(AttributeNormalizerTest, MapsTrainingRangeToUnitInterval) {
  const auto tr = SyntheticTrack({{1e-3, 1e-2, 1e-1}, {100.0, 550.0, 1000.0}},
                                 {DescriptorKind::kRms, DescriptorKind::kCentroid});
  const auto norm = AttributeNormalizer::Fit({tr});
  const auto n = norm.Normalize(tr);
  EXPECT_NEAR(n(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(n(0, 1), 0.5, 1e-12);  // -40 dB between -60 and -20
  EXPECT_NEAR(n(0, 2), 1.0, 1e-12);
  EXPECT_NEAR(n(1, 1), 0.5, 1e-12);
  EXPECT_NEAR(norm.Normalize(1, 5000.0), 1.0, 1e-12);  // clamped
  const auto back = norm.Denormalize(n);
  EXPECT_NEAR(back(0, 1), 1e-2, 1e-12);
  EXPECT_NEAR(back(1, 2), 1000.0, 1e-9);
}

}  // namespace
}  // namespace fadersynth
