#include "fadersynth/quantizer.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>

#include "fadersynth/errors.h"

namespace fadersynth {
namespace {

// Sort-based equal-count oracle: stable sort by value, label = floor(rank K / n).
std::vector<int> OracleLabels(const std::vector<double>& v, int k) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<int> labels(v.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    labels[order[r]] = static_cast<int>(r * k / order.size());
  }
  return labels;
}

std::vector<double> Loud(std::size_t n) { return std::vector<double>(n, 1.0); }

TEST(FitQuantizerTest, SixValuesThreeBins) {
  const std::vector<double> v = {0.1, 0.9, 0.5, 0.7, 0.3, 0.2};
  const auto fit = FitQuantizer(v, 3, Loud(v.size()));
  // Ranks 0..5 in value order map to bins 0,0,1,1,2,2.
  EXPECT_EQ(fit.labels, (std::vector<int>{0, 2, 1, 2, 1, 0}));
  EXPECT_EQ(fit.labels, OracleLabels(v, 3));
  ASSERT_EQ(fit.edges.size(), 4u);
  EXPECT_DOUBLE_EQ(fit.edges.front(), 0.1);
  EXPECT_DOUBLE_EQ(fit.edges[1], 0.25);
  EXPECT_DOUBLE_EQ(fit.edges[2], 0.6);
  EXPECT_DOUBLE_EQ(fit.edges.back(), 0.9);
}

TEST(FitQuantizerTest, SingleBin) {
  const std::vector<double> v = {3.0, 1.0, 2.0};
  const auto fit = FitQuantizer(v, 1, Loud(3));
  EXPECT_EQ(fit.labels, (std::vector<int>{0, 0, 0}));
}

TEST(FitQuantizerTest, AllSilentThrows) {
  const std::vector<double> v = {0.1, 0.2, 0.3};
  const std::vector<double> rms(3, 1e-5);
  EXPECT_THROW(FitQuantizer(v, 2, rms), DegenerateDistributionError);
}

TEST(FitQuantizerTest, TooFewDistinctValuesThrows) {
  const std::vector<double> v = {1.0, 1.0, 1.0, 2.0};
  EXPECT_THROW(FitQuantizer(v, 3, Loud(4)), DegenerateDistributionError);
}

TEST(FitQuantizerTest, SilentFramesAreExcluded) {
  const std::vector<double> v = {5.0, 0.1, 0.2, 0.3, 0.4};
  const std::vector<double> rms = {1e-6, 0.1, 0.1, 0.1, 0.1};
  const auto fit = FitQuantizer(v, 2, rms);
  EXPECT_EQ(fit.labels, (std::vector<int>{-1, 0, 0, 1, 1}));
  EXPECT_DOUBLE_EQ(fit.edges.back(), 0.4);
}

TEST(FitQuantizerTest, RandomSetsMatchOracleWithEvenCounts) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size_dist(40, 2000), bins_dist(2, 32);
  std::normal_distribution<double> value(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = bins_dist(rng);
    std::vector<double> v(static_cast<std::size_t>(size_dist(rng)));
    for (auto& x : v) x = value(rng);
    const auto fit = FitQuantizer(v, k, Loud(v.size()));
    EXPECT_EQ(fit.labels, OracleLabels(v, k)) << "trial " << trial;
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int l : fit.labels) ++counts[static_cast<std::size_t>(l)];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    EXPECT_LE(*hi - *lo, 1);
    // Distinct values: interval lookup reproduces the fit labels.
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(BinIndex(fit.edges, v[i]), fit.labels[i]);
  }
}

TEST(BinIndexTest, ClampsAndIsMonotone) {
  const std::vector<double> edges = {0.0, 1.0, 2.0, 3.0};
  EXPECT_EQ(BinIndex(edges, -5.0), 0);
  EXPECT_EQ(BinIndex(edges, 0.5), 0);
  EXPECT_EQ(BinIndex(edges, 1.5), 1);
  EXPECT_EQ(BinIndex(edges, 99.0), 2);
  int prev = 0;
  for (double v = -1.0; v < 4.0; v += 0.01) {
    const int b = BinIndex(edges, v);
    EXPECT_GE(b, prev);
    prev = b;
  }
}

AttributeTrack Track(std::vector<double> rms, std::vector<double> centroid) {
  AttributeTrack t;
  t.kinds = {DescriptorKind::kRms, DescriptorKind::kCentroid};
  t.values.resize(2, static_cast<Eigen::Index>(rms.size()));
  for (std::size_t i = 0; i < rms.size(); ++i) {
    t.values(0, static_cast<Eigen::Index>(i)) = rms[i];
    t.values(1, static_cast<Eigen::Index>(i)) = centroid[i];
  }
  return t;
}

TEST(QuantizerTest, QuantizeReproducesFitLabels) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0), c(100.0, 4000.0);
  std::vector<double> rms(300), cen(300);
  for (std::size_t i = 0; i < rms.size(); ++i) {
    rms[i] = i % 17 == 0 ? 1e-5 : u(rng);
    cen[i] = c(rng);
  }
  const auto track = Track(rms, cen);
  const auto q = Quantizer::Fit({track}, 8);
  const auto labelled = q.Quantize(track);
  const auto direct = FitQuantizer(cen, 8, rms);
  ASSERT_EQ(labelled.labels.cols(), 300);
  for (int t = 0; t < 300; ++t) {
    EXPECT_EQ(labelled.silence_mask[t], rms[t] < 1e-3);
    if (!labelled.silence_mask[t]) EXPECT_EQ(labelled.labels(1, t), direct.labels[t]);
    EXPECT_GE(labelled.labels(1, t), 0);
    EXPECT_LT(labelled.labels(1, t), 8);
  }
}

TEST(QuantizerTest, KindMismatchThrows) {
  const auto track = Track({0.1, 0.2, 0.3, 0.4}, {1.0, 2.0, 3.0, 4.0});
  const auto q = Quantizer::Fit({track}, 2);
  AttributeTrack other = track;
  other.kinds = {DescriptorKind::kRms, DescriptorKind::kSharpness};
  EXPECT_THROW(q.Quantize(other), ConfigError);
}

TEST(QuantizerTest, JsonRoundTrip) {
  const auto track = Track({0.1, 0.2, 0.3, 0.4, 0.5}, {5.0, 1.0, 3.0, 2.0, 4.0});
  const auto q = Quantizer::Fit({track}, 2);
  const auto path = (std::filesystem::temp_directory_path() / "fadersynth_quantizer_test.json").string();
  q.Save(path);
  const auto back = Quantizer::Load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.kinds(), q.kinds());
  EXPECT_EQ(back.num_bins(), 2);
  EXPECT_EQ(back.edges(1), q.edges(1));
  EXPECT_EQ(back.ToJson(), q.ToJson());
  EXPECT_THROW(Quantizer::FromJson(nlohmann::json{{"format", "other"}}), IoError);
}

}  // namespace
}  // namespace fadersynth
