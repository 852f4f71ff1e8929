#include "fadersynth/quantizer.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "fadersynth/errors.h"

namespace fadersynth {
namespace {

constexpr const char* kFormatTag = "fadersynth.quantizer";
constexpr int kFormatVersion = 1;

}  // namespace

BinFit FitQuantizer(std::span<const double> values, int num_bins, std::span<const double> rms_track,
                    double rms_threshold) {
  if (num_bins < 1) throw ConfigError("quantizer needs at least one bin");
  if (rms_track.size() != values.size()) {
    throw ShapeError("quantizer values and RMS track differ in length");
  }
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (rms_track[i] >= rms_threshold) active.push_back(i);
  }
  if (active.empty()) throw DegenerateDistributionError("every frame is below the RMS threshold");

  std::stable_sort(active.begin(), active.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> sorted(active.size());
  for (std::size_t r = 0; r < active.size(); ++r) sorted[r] = values[active[r]];
  std::vector<double> uniq = sorted;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < static_cast<std::size_t>(num_bins)) {
    throw DegenerateDistributionError("only " + std::to_string(uniq.size()) +
                                      " distinct non-silent values for " +
                                      std::to_string(num_bins) + " bins");
  }

  const std::size_t n = sorted.size();
  const auto k_bins = static_cast<std::size_t>(num_bins);
  BinFit fit;
  fit.rms_threshold = rms_threshold;
  fit.edges.reserve(k_bins + 1);
  fit.edges.push_back(sorted.front());
  for (std::size_t k = 1; k < k_bins; ++k) {
    const std::size_t cut = (k * n + k_bins - 1) / k_bins;  // first rank of bin k
    fit.edges.push_back(0.5 * (sorted[cut - 1] + sorted[cut]));
  }
  fit.edges.push_back(sorted.back());

  fit.labels.assign(values.size(), -1);
  for (std::size_t r = 0; r < n; ++r) {
    fit.labels[active[r]] = static_cast<int>(r * k_bins / n);
  }
  return fit;
}

int BinIndex(std::span<const double> edges, double value) {
  const auto k = static_cast<int>(edges.size()) - 1;
  if (k <= 1) return 0;
  const auto interior = edges.subspan(1, static_cast<std::size_t>(k - 1));
  const auto it = std::upper_bound(interior.begin(), interior.end(), value);
  return std::clamp(static_cast<int>(it - interior.begin()), 0, k - 1);
}

Quantizer Quantizer::Fit(const std::vector<AttributeTrack>& tracks, int num_bins,
                         double rms_threshold) {
  std::vector<std::vector<double>> rms;
  rms.reserve(tracks.size());
  for (const auto& tr : tracks) {
    const int row = tr.IndexOf(DescriptorKind::kRms);
    if (row < 0) throw ConfigError("quantizer fit needs an RMS row for silence detection");
    rms.push_back(tr.Row(row));
  }
  return Fit(tracks, rms, num_bins, rms_threshold);
}

Quantizer Quantizer::Fit(const std::vector<AttributeTrack>& tracks,
                         const std::vector<std::vector<double>>& rms_tracks, int num_bins,
                         double rms_threshold) {
  if (tracks.empty()) throw DegenerateDistributionError("quantizer fit set is empty");
  if (rms_tracks.size() != tracks.size()) throw ShapeError("one RMS track per attribute track");
  Quantizer q;
  q.kinds_ = tracks.front().kinds;
  q.num_bins_ = num_bins;
  q.rms_threshold_ = rms_threshold;
  q.frame_size_ = tracks.front().frame_size;
  q.frame_hop_ = tracks.front().frame_hop;

  std::vector<double> rms_pool;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].kinds != q.kinds_) throw ConfigError("tracks disagree on descriptor kinds");
    if (static_cast<int>(rms_tracks[i].size()) != tracks[i].num_frames()) {
      throw ShapeError("RMS track length differs from attribute track");
    }
    rms_pool.insert(rms_pool.end(), rms_tracks[i].begin(), rms_tracks[i].end());
  }
  for (std::size_t k = 0; k < q.kinds_.size(); ++k) {
    std::vector<double> pool;
    pool.reserve(rms_pool.size());
    for (const auto& tr : tracks) {
      const auto row = tr.Row(static_cast<int>(k));
      pool.insert(pool.end(), row.begin(), row.end());
    }
    q.edges_.push_back(FitQuantizer(pool, num_bins, rms_pool, rms_threshold).edges);
  }
  return q;
}

QuantizedAttributeTrack Quantizer::Quantize(const AttributeTrack& track,
                                            std::span<const double> rms) const {
  std::vector<int> rows;
  for (auto kind : track.kinds) {
    const auto it = std::find(kinds_.begin(), kinds_.end(), kind);
    if (it == kinds_.end()) {
      throw ConfigError("quantizer was not fitted for '" + DescriptorName(kind) + "'");
    }
    rows.push_back(static_cast<int>(it - kinds_.begin()));
  }
  if (static_cast<int>(rms.size()) != track.num_frames()) {
    throw ShapeError("RMS track length differs from attribute track");
  }
  QuantizedAttributeTrack out;
  out.kinds = track.kinds;
  out.num_bins = num_bins_;
  out.labels.resize(track.num_kinds(), track.num_frames());
  for (int i = 0; i < track.num_kinds(); ++i) {
    const auto& e = edges_[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
    out.bin_edges.push_back(e);
    for (int t = 0; t < track.num_frames(); ++t) out.labels(i, t) = BinIndex(e, track.values(i, t));
  }
  out.silence_mask.resize(rms.size());
  for (std::size_t t = 0; t < rms.size(); ++t) out.silence_mask[t] = rms[t] < rms_threshold_;
  return out;
}

QuantizedAttributeTrack Quantizer::Quantize(const AttributeTrack& track) const {
  const int row = track.IndexOf(DescriptorKind::kRms);
  if (row < 0) throw ConfigError("track has no RMS row for the silence mask");
  const auto rms = track.Row(row);
  return Quantize(track, rms);
}

nlohmann::json Quantizer::ToJson() const {
  nlohmann::json edges = nlohmann::json::object();
  for (std::size_t k = 0; k < kinds_.size(); ++k) edges[DescriptorName(kinds_[k])] = edges_[k];
  return {{"format", kFormatTag},
          {"version", kFormatVersion},
          {"kinds", DescriptorNames(kinds_)},
          {"num_bins", num_bins_},
          {"rms_threshold", rms_threshold_},
          {"frame_size", frame_size_},
          {"frame_hop", frame_hop_},
          {"edges", edges}};
}

Quantizer Quantizer::FromJson(const nlohmann::json& j) {
  if (j.value("format", "") != kFormatTag) throw IoError("not a quantizer document");
  if (j.value("version", 0) != kFormatVersion) {
    throw IoError("unsupported quantizer version " + std::to_string(j.value("version", 0)));
  }
  Quantizer q;
  q.kinds_ = ParseDescriptorKinds(j.at("kinds").get<std::vector<std::string>>());
  q.num_bins_ = j.at("num_bins").get<int>();
  q.rms_threshold_ = j.at("rms_threshold").get<double>();
  q.frame_size_ = j.at("frame_size").get<int>();
  q.frame_hop_ = j.at("frame_hop").get<int>();
  for (auto kind : q.kinds_) {
    auto e = j.at("edges").at(DescriptorName(kind)).get<std::vector<double>>();
    if (static_cast<int>(e.size()) != q.num_bins_ + 1 || !std::is_sorted(e.begin(), e.end())) {
      throw IoError("quantizer edges for '" + DescriptorName(kind) + "' are malformed");
    }
    q.edges_.push_back(std::move(e));
  }
  return q;
}

void Quantizer::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << ToJson().dump(2) << "\n";
}

Quantizer Quantizer::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace fadersynth
