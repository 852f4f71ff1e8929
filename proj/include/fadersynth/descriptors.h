#ifndef FADERSYNTH_DESCRIPTORS_H_
#define FADERSYNTH_DESCRIPTORS_H_

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "fadersynth/audio.h"

namespace fadersynth {

enum class DescriptorKind { kRms, kCentroid, kBandwidth, kSharpness, kBoominess };

// Accepts "rms", "centroid", "bandwidth", "sharpness", "boominess".
DescriptorKind ParseDescriptorKind(const std::string& name);
std::string DescriptorName(DescriptorKind kind);
std::vector<DescriptorKind> ParseDescriptorKinds(const std::vector<std::string>& names);
std::vector<std::string> DescriptorNames(const std::vector<DescriptorKind>& kinds);

constexpr int kDefaultFrameSize = 1024;
constexpr int kDefaultFrameHop = 256;
// -60 dBFS.
constexpr double kDefaultSilenceThreshold = 1e-3;

// Number of analysis frames: floor((n - frame_size) / hop) + 1. Frames are
// not padded, so frame t covers samples [t * hop, t * hop + frame_size).
int DescriptorFrameCount(std::size_t n, int frame_size, int hop);

// Frame-wise descriptor values.
//   rms        root-mean-square of the raw frame
//   centroid   magnitude-weighted mean frequency (Hz) of the Hann spectrum
//   bandwidth  magnitude-weighted standard deviation around the centroid (Hz)
//   sharpness  24 Bark bands, specific loudness E^0.23, loudness-weighted mean
//              Bark index with weight 1 up to 14 Bark and exp(0.171 (z - 14))
//              above, scaled by 0.11
//   boominess  share of loudness below 200 Hz, log-compressed to [0, 1]
// Silent frames give 0 for every spectral descriptor.
// Throws ConfigError for frame_size < 64 or hop < 1, LengthError when the
// frame is longer than the signal.
std::vector<double> DescriptorTrack(DescriptorKind kind, const AudioBuffer& x,
                                    int frame_size = kDefaultFrameSize,
                                    int hop = kDefaultFrameHop);

// N x T matrix of descriptor values, one row per kind in order.
struct AttributeTrack {
  Eigen::MatrixXd values;
  std::vector<DescriptorKind> kinds;
  int frame_size = kDefaultFrameSize;
  int frame_hop = kDefaultFrameHop;

  int num_kinds() const { return static_cast<int>(values.rows()); }
  int num_frames() const { return static_cast<int>(values.cols()); }
  // Row index of `kind`, or -1.
  int IndexOf(DescriptorKind kind) const;
  std::vector<double> Row(int i) const;
};

// Throws ConfigError when kinds is empty or repeats a kind.
AttributeTrack ComputeAttributeSet(const AudioBuffer& x, const std::vector<DescriptorKind>& kinds,
                                   int frame_size = kDefaultFrameSize,
                                   int hop = kDefaultFrameHop);

// Linear interpolation over normalized position; endpoints map to endpoints.
std::vector<double> ResampleTrack(std::span<const double> track, int target_len);
AttributeTrack ResampleAttributes(const AttributeTrack& track, int target_len);

// Spearman correlation between every pair of kinds, pooled over the frames
// of all tracks whose RMS is at or above `silence_threshold` (all frames when
// the tracks carry no RMS row). Throws ConfigError for fewer than two kinds
// and LengthError for fewer than 100 pooled frames.
Eigen::MatrixXd PairwiseIndependence(const std::vector<AttributeTrack>& tracks,
                                     double silence_threshold = kDefaultSilenceThreshold);

// Min-max scaling of attribute rows to [0, 1], fitted on a training split.
// RMS is scaled in decibels (20 log10, floored at -120 dB) so the control
// range is perceptually even; other kinds are scaled linearly. Values outside
// the fitted range are clamped.
class AttributeNormalizer {
 public:
  AttributeNormalizer() = default;
  AttributeNormalizer(std::vector<DescriptorKind> kinds, std::vector<double> lo,
                      std::vector<double> hi);

  static AttributeNormalizer Fit(const std::vector<AttributeTrack>& tracks);

  const std::vector<DescriptorKind>& kinds() const { return kinds_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  bool fitted() const { return !kinds_.empty(); }

  // Maps a raw descriptor value of row `i` into the pre-scaling domain.
  double Warp(int i, double value) const;
  double Unwarp(int i, double warped) const;
  double Normalize(int i, double value) const;
  double Denormalize(int i, double normalized) const;

  // Throws ConfigError on kind mismatch.
  Eigen::MatrixXd Normalize(const AttributeTrack& track) const;
  Eigen::MatrixXd Denormalize(const Eigen::MatrixXd& normalized) const;

 private:
  std::vector<DescriptorKind> kinds_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

}  // namespace fadersynth

#endif  // FADERSYNTH_DESCRIPTORS_H_
