#ifndef FADERSYNTH_QUANTIZER_H_
#define FADERSYNTH_QUANTIZER_H_

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "fadersynth/descriptors.h"

namespace fadersynth {

constexpr int kDefaultNumBins = 16;

// Equal-density bins for one attribute.
struct BinFit {
  // K + 1 sorted edges: the minimum, K - 1 interior cut points, the maximum.
  std::vector<double> edges;
  // One label per input value; silent values get -1. Non-silent labels are
  // rank based (stable in input order for ties), so per-bin counts differ by
  // at most one.
  std::vector<int> labels;
  double rms_threshold = kDefaultSilenceThreshold;
  int num_bins() const { return static_cast<int>(edges.size()) - 1; }
};

// Keeps values whose aligned RMS is >= rms_threshold, sorts them and cuts at
// ranks ceil(k n / K). Interior edges sit halfway between the neighbouring
// sorted values. Throws DegenerateDistributionError when every frame is
// silent or fewer than K distinct values remain.
BinFit FitQuantizer(std::span<const double> values, int num_bins,
                    std::span<const double> rms_track,
                    double rms_threshold = kDefaultSilenceThreshold);

// Index of the interval containing `value`, clamped to [0, K).
int BinIndex(std::span<const double> edges, double value);

struct QuantizedAttributeTrack {
  Eigen::MatrixXi labels;            // N x T, values in [0, K)
  std::vector<bool> silence_mask;    // true = silent frame
  std::vector<DescriptorKind> kinds;
  std::vector<std::vector<double>> bin_edges;
  int num_bins = 0;
};

// Per-kind bin edges plus the silence threshold and frame configuration they
// were fitted with. Immutable after Fit().
class Quantizer {
 public:
  Quantizer() = default;

  // Pools all frames of `tracks` (which must contain an RMS row or be paired
  // with `rms_tracks`) and fits every kind.
  static Quantizer Fit(const std::vector<AttributeTrack>& tracks, int num_bins,
                       double rms_threshold = kDefaultSilenceThreshold);
  static Quantizer Fit(const std::vector<AttributeTrack>& tracks,
                       const std::vector<std::vector<double>>& rms_tracks, int num_bins,
                       double rms_threshold = kDefaultSilenceThreshold);

  const std::vector<DescriptorKind>& kinds() const { return kinds_; }
  int num_bins() const { return num_bins_; }
  double rms_threshold() const { return rms_threshold_; }
  int frame_size() const { return frame_size_; }
  int frame_hop() const { return frame_hop_; }
  const std::vector<double>& edges(int kind_index) const { return edges_.at(kind_index); }

  // Labels every frame. The silence mask comes from `rms` (one value per
  // frame). Throws ConfigError when the track's kinds are not all fitted.
  QuantizedAttributeTrack Quantize(const AttributeTrack& track, std::span<const double> rms) const;
  // Uses the track's own RMS row; throws ConfigError if it has none.
  QuantizedAttributeTrack Quantize(const AttributeTrack& track) const;

  nlohmann::json ToJson() const;
  static Quantizer FromJson(const nlohmann::json& j);
  void Save(const std::string& path) const;
  static Quantizer Load(const std::string& path);

 private:
  std::vector<DescriptorKind> kinds_;
  std::vector<std::vector<double>> edges_;
  int num_bins_ = 0;
  double rms_threshold_ = kDefaultSilenceThreshold;
  int frame_size_ = kDefaultFrameSize;
  int frame_hop_ = kDefaultFrameHop;
};

}  // namespace fadersynth

#endif  // FADERSYNTH_QUANTIZER_H_
