#include "fadersynth/descriptors.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "fadersynth/errors.h"
#include "fadersynth/spectral.h"
#include "fadersynth/stats.h"

namespace fadersynth {
namespace {

// Zwicker critical-band edges in Hz (24 bands).
constexpr std::array<double, 25> kBarkEdges = {
    0,    100,  200,  300,  400,  510,  630,  770,  920,  1080, 1270, 1480, 1720,
    2000, 2320, 2700, 3150, 3700, 4400, 5300, 6400, 7700, 9500, 12000, 15500};
constexpr double kLoudnessExponent = 0.23;
constexpr double kBoomCutoffHz = 200.0;
constexpr double kBoomCompression = 100.0;
constexpr double kRmsFloorDb = -120.0;

void CheckFrameArgs(const AudioBuffer& x, int frame_size, int hop) {
  if (frame_size < 64) throw ConfigError("descriptor frame_size must be >= 64");
  if (hop < 1) throw ConfigError("descriptor hop must be >= 1");
  if (x.size() < static_cast<std::size_t>(frame_size)) {
    throw LengthError("descriptor frame of " + std::to_string(frame_size) +
                      " samples is longer than the signal (" + std::to_string(x.size()) + ")");
  }
}

std::vector<double> RmsTrack(const AudioBuffer& x, int frame_size, int hop) {
  const int frames = DescriptorFrameCount(x.size(), frame_size, hop);
  std::vector<double> out(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    out[t] = Rms(std::span<const float>(x.samples).subspan(
        static_cast<std::size_t>(t) * hop, static_cast<std::size_t>(frame_size)));
  }
  return out;
}

// Specific loudness per Bark band from one magnitude frame.
std::array<double, 24> BarkLoudness(const Eigen::MatrixXd& mag, int row, double bin_hz) {
  std::array<double, 24> energy{};
  for (int k = 0; k < mag.cols(); ++k) {
    const double f = k * bin_hz;
    const auto it = std::upper_bound(kBarkEdges.begin(), kBarkEdges.end(), f);
    const auto band = static_cast<int>(it - kBarkEdges.begin()) - 1;
    if (band < 0 || band >= 24) continue;
    energy[band] += mag(row, k) * mag(row, k);
  }
  for (double& e : energy) e = std::pow(e, kLoudnessExponent);
  return energy;
}

double SharpnessWeight(double z) { return z <= 14.0 ? 1.0 : std::exp(0.171 * (z - 14.0)); }

}  // namespace

DescriptorKind ParseDescriptorKind(const std::string& name) {
  if (name == "rms") return DescriptorKind::kRms;
  if (name == "centroid") return DescriptorKind::kCentroid;
  if (name == "bandwidth") return DescriptorKind::kBandwidth;
  if (name == "sharpness") return DescriptorKind::kSharpness;
  if (name == "boominess") return DescriptorKind::kBoominess;
  throw ConfigError("unknown descriptor '" + name + "'");
}

std::string DescriptorName(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::kRms: return "rms";
    case DescriptorKind::kCentroid: return "centroid";
    case DescriptorKind::kBandwidth: return "bandwidth";
    case DescriptorKind::kSharpness: return "sharpness";
    case DescriptorKind::kBoominess: return "boominess";
  }
  return "unknown";
}

std::vector<DescriptorKind> ParseDescriptorKinds(const std::vector<std::string>& names) {
  std::vector<DescriptorKind> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(ParseDescriptorKind(n));
  return out;
}

std::vector<std::string> DescriptorNames(const std::vector<DescriptorKind>& kinds) {
  std::vector<std::string> out;
  out.reserve(kinds.size());
  for (auto k : kinds) out.push_back(DescriptorName(k));
  return out;
}

int DescriptorFrameCount(std::size_t n, int frame_size, int hop) {
  if (n < static_cast<std::size_t>(frame_size)) return 0;
  return static_cast<int>((n - static_cast<std::size_t>(frame_size)) / hop + 1);
}

std::vector<double> DescriptorTrack(DescriptorKind kind, const AudioBuffer& x, int frame_size,
                                    int hop) {
  CheckFrameArgs(x, frame_size, hop);
  if (kind == DescriptorKind::kRms) return RmsTrack(x, frame_size, hop);

  const Eigen::MatrixXd mag = FrameSpectrogram(x, frame_size, hop, Taper::kHann);
  const double bin_hz = static_cast<double>(x.sample_rate) / frame_size;
  const int frames = static_cast<int>(mag.rows());
  std::vector<double> out(static_cast<std::size_t>(frames), 0.0);

  for (int t = 0; t < frames; ++t) {
    switch (kind) {
      case DescriptorKind::kCentroid:
      case DescriptorKind::kBandwidth: {
        double total = 0.0, weighted = 0.0;
        for (int k = 0; k < mag.cols(); ++k) {
          total += mag(t, k);
          weighted += mag(t, k) * k * bin_hz;
        }
        if (total <= 0.0) break;
        const double centroid = weighted / total;
        if (kind == DescriptorKind::kCentroid) {
          out[t] = centroid;
          break;
        }
        double spread = 0.0;
        for (int k = 0; k < mag.cols(); ++k) {
          const double d = k * bin_hz - centroid;
          spread += mag(t, k) * d * d;
        }
        out[t] = std::sqrt(spread / total);
        break;
      }
      case DescriptorKind::kSharpness: {
        const auto loud = BarkLoudness(mag, t, bin_hz);
        double total = 0.0, weighted = 0.0;
        for (int b = 0; b < 24; ++b) {
          const double z = b + 0.5;
          total += loud[b];
          weighted += loud[b] * SharpnessWeight(z) * z;
        }
        out[t] = total > 0.0 ? 0.11 * weighted / total : 0.0;
        break;
      }
      case DescriptorKind::kBoominess: {
        const auto loud = BarkLoudness(mag, t, bin_hz);
        double total = 0.0, low = 0.0;
        for (int b = 0; b < 24; ++b) {
          total += loud[b];
          if (kBarkEdges[b + 1] <= kBoomCutoffHz) low += loud[b];
        }
        if (total <= 0.0) break;
        out[t] = std::log1p(kBoomCompression * low / total) / std::log1p(kBoomCompression);
        break;
      }
      case DescriptorKind::kRms: break;
    }
  }
  return out;
}

int AttributeTrack::IndexOf(DescriptorKind kind) const {
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == kind) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> AttributeTrack::Row(int i) const {
  std::vector<double> out(static_cast<std::size_t>(values.cols()));
  for (int t = 0; t < values.cols(); ++t) out[t] = values(i, t);
  return out;
}

AttributeTrack ComputeAttributeSet(const AudioBuffer& x, const std::vector<DescriptorKind>& kinds,
                                   int frame_size, int hop) {
  if (kinds.empty()) throw ConfigError("attribute set needs at least one descriptor");
  std::set<DescriptorKind> seen(kinds.begin(), kinds.end());
  if (seen.size() != kinds.size()) throw ConfigError("attribute set repeats a descriptor");
  CheckFrameArgs(x, frame_size, hop);

  AttributeTrack out;
  out.kinds = kinds;
  out.frame_size = frame_size;
  out.frame_hop = hop;
  out.values.resize(static_cast<Eigen::Index>(kinds.size()),
                    DescriptorFrameCount(x.size(), frame_size, hop));
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const auto row = DescriptorTrack(kinds[i], x, frame_size, hop);
    for (std::size_t t = 0; t < row.size(); ++t) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = row[t];
    }
  }
  return out;
}

std::vector<double> ResampleTrack(std::span<const double> track, int target_len) {
  if (track.empty()) throw LengthError("cannot resample an empty track");
  if (target_len < 1) throw ConfigError("resample target length must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(target_len));
  const std::size_t n = track.size();
  if (n == 1 || target_len == 1) {
    std::fill(out.begin(), out.end(), track[0]);
    return out;
  }
  for (int i = 0; i < target_len; ++i) {
    const double pos = static_cast<double>(i) * (n - 1) / (target_len - 1);
    const auto lo = std::min(static_cast<std::size_t>(pos), n - 2);
    const double frac = pos - static_cast<double>(lo);
    out[i] = track[lo] + frac * (track[lo + 1] - track[lo]);
  }
  out.back() = track[n - 1];
  return out;
}

AttributeTrack ResampleAttributes(const AttributeTrack& track, int target_len) {
  AttributeTrack out;
  out.kinds = track.kinds;
  out.frame_size = track.frame_size;
  out.frame_hop = track.frame_hop;
  out.values.resize(track.values.rows(), target_len);
  for (int i = 0; i < track.num_kinds(); ++i) {
    const auto row = ResampleTrack(track.Row(i), target_len);
    for (int t = 0; t < target_len; ++t) out.values(i, t) = row[t];
  }
  return out;
}

Eigen::MatrixXd PairwiseIndependence(const std::vector<AttributeTrack>& tracks,
                                     double silence_threshold) {
  if (tracks.empty()) throw LengthError("pairwise independence needs at least one track");
  const auto& kinds = tracks.front().kinds;
  if (kinds.size() < 2) throw ConfigError("pairwise independence needs at least two kinds");
  const int rms_row = tracks.front().IndexOf(DescriptorKind::kRms);

  std::vector<std::vector<double>> pooled(kinds.size());
  for (const auto& tr : tracks) {
    if (tr.kinds != kinds) throw ConfigError("tracks disagree on descriptor kinds");
    for (int t = 0; t < tr.num_frames(); ++t) {
      if (rms_row >= 0 && tr.values(rms_row, t) < silence_threshold) continue;
      for (std::size_t i = 0; i < kinds.size(); ++i) {
        pooled[i].push_back(tr.values(static_cast<Eigen::Index>(i), t));
      }
    }
  }
  if (pooled.front().size() < 100) {
    throw LengthError("pairwise independence needs >= 100 non-silent frames, got " +
                      std::to_string(pooled.front().size()));
  }
  const auto n = static_cast<Eigen::Index>(kinds.size());
  Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto r = Spearman(pooled[i], pooled[j]);
      const double v = r.value_or(std::numeric_limits<double>::quiet_NaN());
      rho(i, j) = v;
      rho(j, i) = v;
    }
  }
  return rho;
}

AttributeNormalizer::AttributeNormalizer(std::vector<DescriptorKind> kinds, std::vector<double> lo,
                                         std::vector<double> hi)
    : kinds_(std::move(kinds)), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != kinds_.size() || hi_.size() != kinds_.size()) {
    throw ShapeError("normalizer bounds do not match kinds");
  }
}

AttributeNormalizer AttributeNormalizer::Fit(const std::vector<AttributeTrack>& tracks) {
  if (tracks.empty()) throw LengthError("normalizer fit needs at least one track");
  AttributeNormalizer out;
  out.kinds_ = tracks.front().kinds;
  const std::size_t n = out.kinds_.size();
  out.lo_.assign(n, std::numeric_limits<double>::infinity());
  out.hi_.assign(n, -std::numeric_limits<double>::infinity());
  for (const auto& tr : tracks) {
    if (tr.kinds != out.kinds_) throw ConfigError("tracks disagree on descriptor kinds");
    for (std::size_t i = 0; i < n; ++i) {
      for (int t = 0; t < tr.num_frames(); ++t) {
        const double w = out.Warp(static_cast<int>(i), tr.values(static_cast<Eigen::Index>(i), t));
        out.lo_[i] = std::min(out.lo_[i], w);
        out.hi_[i] = std::max(out.hi_[i], w);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(out.hi_[i] > out.lo_[i])) out.hi_[i] = out.lo_[i] + 1.0;
  }
  return out;
}

double AttributeNormalizer::Warp(int i, double value) const {
  if (kinds_[static_cast<std::size_t>(i)] == DescriptorKind::kRms) {
    return std::max(kRmsFloorDb, 20.0 * std::log10(std::max(value, 1e-300)));
  }
  return value;
}

double AttributeNormalizer::Unwarp(int i, double warped) const {
  if (kinds_[static_cast<std::size_t>(i)] == DescriptorKind::kRms) {
    return std::pow(10.0, warped / 20.0);
  }
  return warped;
}

double AttributeNormalizer::Normalize(int i, double value) const {
  const auto k = static_cast<std::size_t>(i);
  return std::clamp((Warp(i, value) - lo_[k]) / (hi_[k] - lo_[k]), 0.0, 1.0);
}

double AttributeNormalizer::Denormalize(int i, double normalized) const {
  const auto k = static_cast<std::size_t>(i);
  return Unwarp(i, lo_[k] + normalized * (hi_[k] - lo_[k]));
}

Eigen::MatrixXd AttributeNormalizer::Normalize(const AttributeTrack& track) const {
  if (track.kinds != kinds_) throw ConfigError("attribute kinds do not match the normalizer");
  Eigen::MatrixXd out(track.values.rows(), track.values.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index t = 0; t < out.cols(); ++t) {
      out(i, t) = Normalize(static_cast<int>(i), track.values(i, t));
    }
  }
  return out;
}

Eigen::MatrixXd AttributeNormalizer::Denormalize(const Eigen::MatrixXd& normalized) const {
  if (normalized.rows() != static_cast<Eigen::Index>(kinds_.size())) {
    throw ShapeError("normalized attribute rows do not match the normalizer");
  }
  Eigen::MatrixXd out(normalized.rows(), normalized.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index t = 0; t < out.cols(); ++t) {
      out(i, t) = Denormalize(static_cast<int>(i), normalized(i, t));
    }
  }
  return out;
}

}  // namespace fadersynth
