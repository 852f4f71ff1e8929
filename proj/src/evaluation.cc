#include "fadersynth/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fadersynth/errors.h"
#include "fadersynth/log.h"
#include "fadersynth/stats.h"

namespace fadersynth {
namespace {

void RequireItems(const std::vector<AudioBuffer>& items, const char* what) {
  if (items.empty()) throw LengthError(std::string(what) + ": no items to evaluate");
}

void RequireSources(const std::vector<AudioBuffer>& items, const std::vector<AudioBuffer>& sources) {
  if (sources.size() != items.size()) {
    throw LengthError("need one swap source per item, got " + std::to_string(sources.size()) +
                      " for " + std::to_string(items.size()));
  }
}

// Crops or zero-pads to `n` samples.
AudioBuffer FitLength(const AudioBuffer& x, std::size_t n) {
  AudioBuffer out = x;
  out.samples.resize(n, 0.0f);
  return out;
}

AudioBuffer Reconstruct(const AudioModel& model, const AudioBuffer& x) {
  return model.Decode(model.Encode(x), model.Describe(x), x.sample_rate);
}

}  // namespace

double LogMelL1Proxy::Distance(const AudioBuffer& reference, const AudioBuffer& estimate) const {
  const std::size_t n = std::max(reference.size(), estimate.size());
  const Eigen::MatrixXd a = MelSpectrogram(FitLength(reference, n), mel_bands_, fft_size_, hop_);
  const Eigen::MatrixXd b = MelSpectrogram(FitLength(estimate, n), mel_bands_, fft_size_, hop_);
  const Eigen::ArrayXXd la = (a.array() + floor_).log();
  const Eigen::ArrayXXd lb = (b.array() + floor_).log();
  return (la - lb).abs().mean();
}

double MelL1(const AudioBuffer& a, const AudioBuffer& b) {
  const std::size_t n = std::max(a.size(), b.size());
  const Eigen::MatrixXd ma = MelSpectrogram(FitLength(a, n), 64, 1024, 256);
  const Eigen::MatrixXd mb = MelSpectrogram(FitLength(b, n), 64, 1024, 256);
  return (ma - mb).cwiseAbs().mean();
}

FaderAudioModel::FaderAudioModel(std::shared_ptr<const FaderModel> model) : model_(std::move(model)) {
  if (!model_) throw ConfigError("null model");
  if (!model_->has_statistics()) throw ConfigError("model has no descriptor statistics");
}

torch::Tensor FaderAudioModel::Encode(const AudioBuffer& x) const {
  torch::NoGradGuard no_grad;
  const AudioBuffer padded = PadForModel(x, model_->config().hop_length());
  return model_->Encode(AudioToTensor(padded), /*deterministic=*/true).mean;
}

AudioBuffer FaderAudioModel::Decode(const torch::Tensor& z, const AttributeTrack& attrs, int sample_rate) const {
  torch::NoGradGuard no_grad;
  const int m = static_cast<int>(z.size(2));
  const torch::Tensor y = model_->Decode(z, model_->ConditioningFor(attrs, m));
  return TensorToAudio(y, sample_rate);
}

torch::Tensor IdentityAudioModel::Encode(const AudioBuffer& x) const { return AudioToTensor(x); }

AudioBuffer IdentityAudioModel::Decode(const torch::Tensor& z, const AttributeTrack&, int sample_rate) const {
  return TensorToAudio(z, sample_rate);
}

nlohmann::json MetricsReport::ToJson() const {
  return {{"jnd_proxy", jnd_proxy},
          {"mel_l1", mel_l1},
          {"mstft", mstft},
          {"control_spearman", control_spearman},
          {"control_l1", control_l1},
          {"cycle_jnd_proxy", cycle_jnd_proxy},
          {"n_items", n_items},
          {"spearman_by_kind", spearman_by_kind},
          {"l1_by_kind", l1_by_kind},
          {"pooled_spearman_by_kind", pooled_spearman_by_kind},
          {"metric", metric_name}};
}

MetricsReport EvalReconstruction(const AudioModel& model, const std::vector<AudioBuffer>& items,
                                 const PerceptualMetric& metric) {
  RequireItems(items, "reconstruction");
  MetricsReport r;
  r.metric_name = metric.Name();
  for (const AudioBuffer& x : items) {
    const AudioBuffer y = FitLength(Reconstruct(model, x), x.size());
    r.jnd_proxy += metric.Distance(x, y);
    r.mel_l1 += MelL1(x, y);
    r.mstft += MultiscaleSpectralDistance(x, y);
  }
  const double n = static_cast<double>(items.size());
  r.jnd_proxy /= n;
  r.mel_l1 /= n;
  r.mstft /= n;
  r.n_items = items.size();
  return r;
}

AttributeTrack MixAttributes(const AttributeTrack& own, const AttributeTrack& target,
                             const std::vector<DescriptorKind>& swap) {
  if (own.kinds != target.kinds) throw ConfigError("attribute tracks carry different kinds");
  AttributeTrack out = own;
  const int frames = own.num_frames();
  for (DescriptorKind kind : swap) {
    const int i = own.IndexOf(kind);
    if (i < 0) throw ConfigError("cannot swap unknown attribute " + DescriptorName(kind));
    const std::vector<double> row = target.num_frames() == frames
                                        ? target.Row(i)
                                        : ResampleTrack(target.Row(i), frames);
    for (int t = 0; t < frames; ++t) out.values(i, t) = row[static_cast<std::size_t>(t)];
  }
  return out;
}

namespace {

struct ItemControl {
  // Per swapped kind: (target, measured) raw values and normalized L1 terms
  // on the item's non-silent frames.
  std::map<std::string, std::vector<double>> target, measured, l1;
};

ItemControl ScoreItem(const AudioModel& model, const AudioBuffer& x, const AudioBuffer& source,
                      const std::vector<DescriptorKind>& swap, double silence_threshold) {
  const AttributeTrack own = model.Describe(x);
  const AttributeTrack target =
      MixAttributes(own, model.Describe(FitLength(source, x.size())), swap);
  const AudioBuffer y = FitLength(model.Decode(model.Encode(x), target, x.sample_rate), x.size());
  const AttributeTrack measured = model.Describe(y);
  const AttributeNormalizer& norm = model.normalizer();

  const int rms_row = target.IndexOf(DescriptorKind::kRms);
  ItemControl out;
  for (DescriptorKind kind : swap) {
    const int i = target.IndexOf(kind);
    const std::string name = DescriptorName(kind);
    auto& a = out.target[name];
    auto& b = out.measured[name];
    auto& l1 = out.l1[name];
    for (int t = 0; t < target.num_frames(); ++t) {
      if (rms_row >= 0 && target.values(rms_row, t) < silence_threshold) continue;
      a.push_back(target.values(i, t));
      b.push_back(measured.values(i, t));
      l1.push_back(std::abs(norm.Normalize(i, target.values(i, t)) - norm.Normalize(i, measured.values(i, t))));
    }
  }
  return out;
}

ControlResult Aggregate(const std::vector<ItemControl>& items) {
  ControlResult r;
  std::map<std::string, std::vector<double>> target, measured, l1;
  std::map<std::string, std::pair<double, std::size_t>> item_rho;
  for (const ItemControl& it : items) {
    for (const auto& [k, v] : it.target) {
      const auto& m = it.measured.at(k);
      target[k].insert(target[k].end(), v.begin(), v.end());
      measured[k].insert(measured[k].end(), m.begin(), m.end());
      const auto& d = it.l1.at(k);
      l1[k].insert(l1[k].end(), d.begin(), d.end());
      const auto rho = v.size() >= 2 ? Spearman(v, m) : std::nullopt;
      if (rho) {
        item_rho[k].first += *rho;
        ++item_rho[k].second;
      } else {
        ++r.undefined;
      }
    }
  }
  double rho_sum = 0.0, l1_sum = 0.0, item_sum = 0.0;
  std::size_t rho_n = 0, l1_n = 0, item_n = 0;
  for (const auto& [k, v] : target) {
    if (const auto rho = v.size() >= 2 ? Spearman(v, measured[k]) : std::nullopt) {
      r.pooled_spearman_by_kind[k] = *rho;
      rho_sum += *rho;
      ++rho_n;
    }
    if (!l1[k].empty()) {
      r.l1_by_kind[k] = Mean(l1[k]);
      l1_sum += r.l1_by_kind[k];
      ++l1_n;
    }
    if (item_rho[k].second > 0) {
      r.spearman_by_kind[k] = item_rho[k].first / static_cast<double>(item_rho[k].second);
      item_sum += r.spearman_by_kind[k];
      ++item_n;
    }
  }
  r.pooled_spearman = rho_n ? rho_sum / static_cast<double>(rho_n) : 0.0;
  r.l1 = l1_n ? l1_sum / static_cast<double>(l1_n) : 0.0;
  r.spearman = item_n ? item_sum / static_cast<double>(item_n) : 0.0;
  r.n_items = items.size();
  if (r.undefined > 0) {
    LogWarning("control: " + std::to_string(r.undefined) + " item/attribute pairs had a constant track");
  }
  return r;
}

}  // namespace

ControlResult EvalControl(const AudioModel& model, const std::vector<AudioBuffer>& items,
                          const std::vector<AudioBuffer>& swap_sources,
                          const std::vector<DescriptorKind>& swap, double silence_threshold) {
  RequireItems(items, "control");
  RequireSources(items, swap_sources);
  const std::vector<DescriptorKind> kinds = swap.empty() ? model.kinds() : swap;
  const std::vector<DescriptorKind> known = model.kinds();
  for (DescriptorKind k : kinds) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError("model does not control " + DescriptorName(k));
    }
  }
  std::vector<ItemControl> scored;
  scored.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    scored.push_back(ScoreItem(model, items[i], swap_sources[i], kinds, silence_threshold));
  }
  return Aggregate(scored);
}

ControlResult EvalControlRandomSubsets(const AudioModel& model, const std::vector<AudioBuffer>& items,
                                       const std::vector<AudioBuffer>& swap_sources, std::mt19937_64& rng,
                                       double silence_threshold) {
  RequireItems(items, "control");
  RequireSources(items, swap_sources);
  const std::vector<DescriptorKind> known = model.kinds();
  const int max_size = std::min<int>(4, static_cast<int>(known.size()));
  std::vector<ItemControl> scored;
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::uniform_int_distribution<int> size_dist(1, max_size);
    const int size = size_dist(rng);
    std::vector<DescriptorKind> pool = known;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<std::size_t>(size));
    scored.push_back(ScoreItem(model, items[i], swap_sources[i], pool, silence_threshold));
  }
  return Aggregate(scored);
}

std::vector<AudioBuffer> RolledSources(const std::vector<AudioBuffer>& items, std::size_t shift) {
  std::vector<AudioBuffer> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back(items[(i + shift) % items.size()]);
  return out;
}

CycleResult EvalCycle(const AudioModel& model, const std::vector<AudioBuffer>& items,
                      const std::vector<AudioBuffer>& swap_sources, const PerceptualMetric& metric) {
  RequireItems(items, "cycle");
  RequireSources(items, swap_sources);
  CycleResult r;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const AudioBuffer& x = items[i];
    const AttributeTrack own = model.Describe(x);
    const AttributeTrack foreign = model.Describe(FitLength(swap_sources[i], x.size()));
    const AudioBuffer moved = FitLength(model.Decode(model.Encode(x), foreign, x.sample_rate), x.size());
    const AudioBuffer back = FitLength(model.Decode(model.Encode(moved), own, x.sample_rate), x.size());
    const AudioBuffer direct = FitLength(model.Decode(model.Encode(x), own, x.sample_rate), x.size());
    r.cycle += metric.Distance(x, back);
    r.direct += metric.Distance(x, direct);
  }
  r.cycle /= static_cast<double>(items.size());
  r.direct /= static_cast<double>(items.size());
  r.n_items = items.size();
  return r;
}

AudioBuffer AttributeTransfer(const AudioModel& model, const AudioBuffer& x_source,
                              const AttributeTrack& attrs_target) {
  return FitLength(model.Decode(model.Encode(x_source), attrs_target, x_source.sample_rate), x_source.size());
}

AudioBuffer TimbreTransfer(const AudioModel& model, const AudioBuffer& x_timbre, const AudioBuffer& x_attrs) {
  const AttributeTrack attrs = model.Describe(FitLength(x_attrs, x_timbre.size()));
  return AttributeTransfer(model, x_timbre, attrs);
}

namespace {

struct ProbeData {
  torch::Tensor z;       // (n, d, m)
  torch::Tensor labels;  // (n, m), -1 on silent frames
};

ProbeData CollectProbeData(const FaderModel& model, const std::vector<AudioBuffer>& chunks, int kind_index) {
  torch::NoGradGuard no_grad;
  std::vector<torch::Tensor> zs, ls;
  for (const AudioBuffer& raw : chunks) {
    const AudioBuffer x = PadForModel(raw, model.config().hop_length());
    const int m = model.LatentLength(x.size());
    zs.push_back(model.Encode(AudioToTensor(x), /*deterministic=*/true).mean);
    const AttributeTrack track = ResampleAttributes(model.Describe(x), m);
    const auto q = model.quantizer().Quantize(track);
    torch::Tensor l = torch::empty({1, m}, torch::kInt64);
    auto acc = l.accessor<int64_t, 2>();
    for (int t = 0; t < m; ++t) acc[0][t] = q.silence_mask[t] ? -1 : q.labels(kind_index, t);
    ls.push_back(l);
  }
  return {torch::cat(zs), torch::cat(ls)};
}

}  // namespace

ProbeResult ProbeLatent(const FaderModel& model, const std::vector<AudioBuffer>& train,
                        const std::vector<AudioBuffer>& test, DescriptorKind kind, const ProbeOptions& options) {
  RequireItems(train, "probe training");
  RequireItems(test, "probe test");
  const auto& kinds = model.config().kinds;
  const auto it = std::find(kinds.begin(), kinds.end(), kind);
  if (it == kinds.end()) throw ConfigError("model has no attribute " + DescriptorName(kind));
  const int kind_index = static_cast<int>(it - kinds.begin());
  const int num_bins = model.config().num_bins;

  const ProbeData tr = CollectProbeData(model, train, kind_index);
  const ProbeData te = CollectProbeData(model, test, kind_index);

  torch::manual_seed(options.seed);
  LatentDiscriminator probe(model.config().latent_dim, model.config().latent_disc_channels, num_bins);
  torch::optim::Adam opt(probe->parameters(), torch::optim::AdamOptions(options.learning_rate));
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<long> pick(0, tr.z.size(0) - 1);
  probe->train();
  for (int step = 0; step < options.iterations; ++step) {
    std::vector<long> idx(static_cast<std::size_t>(options.batch_size));
    for (long& v : idx) v = pick(rng);
    const torch::Tensor sel = torch::tensor(idx, torch::kInt64);
    const torch::Tensor logits = probe->forward(tr.z.index_select(0, sel));
    const torch::Tensor labels = tr.labels.index_select(0, sel);
    if ((labels >= 0).sum().item<long>() == 0) continue;
    const torch::Tensor loss = torch::nn::functional::cross_entropy(
        logits, labels, torch::nn::functional::CrossEntropyFuncOptions().ignore_index(-1));
    opt.zero_grad();
    loss.backward();
    opt.step();
  }

  probe->eval();
  torch::NoGradGuard no_grad;
  const torch::Tensor pred = probe->forward(te.z).argmax(1);
  const torch::Tensor valid = te.labels >= 0;
  const long n = valid.sum().item<long>();
  if (n == 0) throw DegenerateDistributionError("probe test split has no non-silent frames");
  ProbeResult r;
  r.test_frames = static_cast<std::size_t>(n);
  r.accuracy = (pred.eq(te.labels) & valid).sum().item<double>() / static_cast<double>(n);
  r.chance = 1.0 / num_bins;
  const torch::Tensor counts = torch::bincount(te.labels.masked_select(valid), {}, num_bins);
  r.majority = counts.max().item<double>() / static_cast<double>(n);
  return r;
}

MetricsReport EvaluateModel(const AudioModel& model, const std::vector<AudioBuffer>& items,
                            const PerceptualMetric& metric, std::size_t swap_shift, double silence_threshold) {
  MetricsReport r = EvalReconstruction(model, items, metric);
  const std::vector<AudioBuffer> sources = RolledSources(items, swap_shift);
  const ControlResult control = EvalControl(model, items, sources, {}, silence_threshold);
  r.control_spearman = control.spearman;
  r.control_l1 = control.l1;
  r.spearman_by_kind = control.spearman_by_kind;
  r.l1_by_kind = control.l1_by_kind;
  r.pooled_spearman_by_kind = control.pooled_spearman_by_kind;
  r.cycle_jnd_proxy = EvalCycle(model, items, sources, metric).cycle;
  return r;
}

void WriteReport(const MetricsReport& report, const nlohmann::json& manifest, const std::string& json_path,
                 const std::string& csv_path) {
  nlohmann::json j = report.ToJson();
  j["manifest"] = manifest;
  {
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot write " + json_path);
    out << j.dump(2) << "\n";
  }
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path);
  csv << "metric,jnd_proxy,mel_l1,mstft,control_spearman,control_l1,cycle_jnd_proxy,n_items\n";
  csv << '"' << report.metric_name << '"' << ',' << report.jnd_proxy << ',' << report.mel_l1 << ','
      << report.mstft << ',' << report.control_spearman << ',' << report.control_l1 << ','
      << report.cycle_jnd_proxy << ',' << report.n_items << "\n";
}

}  // namespace fadersynth
