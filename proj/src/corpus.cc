#include "fadersynth/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "fadersynth/errors.h"
#include "fadersynth/log.h"

namespace fadersynth {
namespace fs = std::filesystem;

std::string SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split ParseSplit(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid" || name == "validation") return Split::kValid;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + name + "'");
}

SplitCounts ComputeSplitCounts(std::size_t n, const SplitFractions& f) {
  const double total = f.train + f.valid + f.test;
  if (!(total > 0.0) || f.train < 0 || f.valid < 0 || f.test < 0) {
    throw ConfigError("split fractions must be nonnegative with a positive sum");
  }
  auto train = static_cast<std::size_t>(std::lround(n * f.train / total));
  auto valid = static_cast<std::size_t>(std::lround(n * f.valid / total));
  train = std::min(train, n);
  valid = std::min(valid, n - train);
  return {train, valid, n - train - valid};
}

Corpus::Corpus(std::vector<CorpusItem> items, int sample_rate, std::uint64_t seed,
               ChunkPolicy chunking, SplitFractions fractions)
    : items_(std::move(items)),
      sample_rate_(sample_rate),
      seed_(seed),
      chunking_(chunking),
      fractions_(fractions) {
  if (chunking_.length == 0) throw ConfigError("chunk length must be positive");
  if (!(chunking_.overlap >= 0.0 && chunking_.overlap < 1.0)) {
    throw ConfigError("chunk overlap must be in [0, 1)");
  }
  AssignSplits();
}

void Corpus::AssignSplits() {
  std::vector<std::size_t> order(items_.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed_);
  std::shuffle(order.begin(), order.end(), rng);
  const SplitCounts counts = ComputeSplitCounts(items_.size(), fractions_);
  for (std::size_t r = 0; r < order.size(); ++r) {
    Split s = Split::kTest;
    if (r < counts.train) s = Split::kTrain;
    else if (r < counts.train + counts.valid) s = Split::kValid;
    items_[order[r]].split = s;
  }
}

std::vector<const CorpusItem*> Corpus::Items(Split split) const {
  std::vector<const CorpusItem*> out;
  for (const auto& it : items_) {
    if (it.split == split) out.push_back(&it);
  }
  return out;
}

std::size_t Corpus::Count(Split split) const { return Items(split).size(); }

std::vector<AudioBuffer> ChunkAudio(const AudioBuffer& x, const ChunkPolicy& policy) {
  const std::size_t len = policy.length;
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(len) * (1.0 - policy.overlap))));
  std::vector<AudioBuffer> out;
  if (x.size() <= len) {
    AudioBuffer c = x;
    c.samples.resize(len, 0.0f);
    out.push_back(std::move(c));
    return out;
  }
  for (std::size_t start = 0; start + len <= x.size(); start += hop) {
    out.emplace_back(std::vector<float>(x.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                        x.samples.begin() + static_cast<std::ptrdiff_t>(start + len)),
                     x.sample_rate);
  }
  return out;
}

std::vector<AudioBuffer> Corpus::Chunks(Split split) const {
  std::vector<AudioBuffer> out;
  for (const auto* item : Items(split)) {
    auto c = ChunkAudio(item->audio, chunking_);
    std::move(c.begin(), c.end(), std::back_inserter(out));
  }
  return out;
}

nlohmann::json Corpus::Manifest() const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& it : items_) {
    files.push_back({{"name", it.name},
                     {"path", it.path},
                     {"duration_s", it.duration_s},
                     {"source_sample_rate", it.source_sample_rate},
                     {"split", SplitName(it.split)}});
  }
  return {{"format", "fadersynth.corpus"},
          {"version", 1},
          {"seed", seed_},
          {"sample_rate", sample_rate_},
          {"sample_rate_policy", "resampled to sample_rate, mixed to mono"},
          {"chunk_length", chunking_.length},
          {"chunk_overlap", chunking_.overlap},
          {"fractions", {{"train", fractions_.train}, {"valid", fractions_.valid},
                         {"test", fractions_.test}}},
          {"files", files}};
}

void Corpus::SaveManifest(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << Manifest().dump(2) << "\n";
}

void Corpus::WriteToDirectory(const std::string& dir) const {
  fs::create_directories(dir);
  for (const auto& it : items_) {
    WriteWav((fs::path(dir) / (it.name + ".wav")).string(), it.audio, WavFormat::kFloat32);
  }
  SaveManifest((fs::path(dir) / "manifest.json").string());
}

Corpus LoadCorpus(const std::string& root, int target_sr, const ChunkPolicy& chunking,
                  std::uint64_t seed, const SplitFractions& fractions) {
  if (!fs::is_directory(root)) throw IoError("corpus root is not a directory: " + root);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());

  std::vector<CorpusItem> items;
  for (const auto& p : paths) {
    try {
      AudioBuffer raw = ReadWav(p.string());
      ValidateAudio(raw);
      CorpusItem item;
      item.name = fs::relative(p, root).replace_extension().string();
      item.path = p.string();
      item.source_sample_rate = raw.sample_rate;
      item.duration_s = static_cast<double>(raw.size()) / raw.sample_rate;
      item.audio = Resample(raw, target_sr);
      items.push_back(std::move(item));
    } catch (const std::exception& e) {
      LogWarning(std::string("skipping undecodable file: ") + e.what());
    }
  }
  if (items.empty()) throw IoError("no decodable audio under " + root);
  return Corpus(std::move(items), target_sr, seed, chunking, fractions);
}

Corpus MakeToyCorpus(int n_items, int sample_rate, std::uint64_t seed, const ChunkPolicy& chunking,
                     const ToyCorpusOptions& options) {
  if (n_items < 16) throw ConfigError("toy corpus needs at least 16 items");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  std::vector<CorpusItem> items;
  items.reserve(static_cast<std::size_t>(n_items));
  for (int i = 0; i < n_items; ++i) {
    const double duration = uniform(options.min_duration_s, options.max_duration_s);
    const auto n = static_cast<std::size_t>(duration * sample_rate);
    const double f0 = std::exp(uniform(std::log(options.min_f0_hz), std::log(options.max_f0_hz)));

    // Amplitude envelope: dB sinusoid, 0.5-3 Hz.
    const double amp_rate = uniform(0.5, 3.0), amp_phase = uniform(0.0, kTwoPi);
    const double amp_mid = uniform(-34.0, -14.0), amp_depth = uniform(6.0, 14.0);
    // Roll-off exponent: 1/h^roll amplitude per harmonic, independent LFO.
    const double roll_rate = uniform(0.5, 3.0), roll_phase = uniform(0.0, kTwoPi);
    const double roll_mid = uniform(1.5, 3.5), roll_depth = uniform(0.6, 1.4);

    const int harmonics = std::max(1, static_cast<int>((sample_rate / 2.0) / f0));
    std::vector<double> harmonic_phase(static_cast<std::size_t>(harmonics));
    std::vector<double> log_h(static_cast<std::size_t>(harmonics));
    for (int h = 0; h < harmonics; ++h) {
      harmonic_phase[h] = uniform(0.0, kTwoPi);
      log_h[h] = std::log(static_cast<double>(h + 1));
    }

    AudioBuffer audio;
    audio.sample_rate = sample_rate;
    audio.samples.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double t = static_cast<double>(s) / sample_rate;
      const double env_db = amp_mid + amp_depth * std::sin(kTwoPi * amp_rate * t + amp_phase);
      const double roll = roll_mid + roll_depth * std::sin(kTwoPi * roll_rate * t + roll_phase);
      const double base = kTwoPi * f0 * t;
      double acc = 0.0, power = 0.0;
      for (int h = 0; h < harmonics; ++h) {
        const double w = std::exp(-roll * log_h[h]);
        acc += w * std::sin((h + 1) * base + harmonic_phase[h]);
        power += w * w;
      }
      // Normalized so the tone's RMS follows the dB envelope.
      const double gain = std::pow(10.0, env_db / 20.0) / std::sqrt(power / 2.0);
      audio.samples[s] = static_cast<float>(acc * gain);
    }

    CorpusItem item;
    char name[32];
    std::snprintf(name, sizeof(name), "toy_%04d", i);
    item.name = name;
    item.duration_s = static_cast<double>(n) / sample_rate;
    item.source_sample_rate = sample_rate;
    item.audio = std::move(audio);
    items.push_back(std::move(item));
  }
  return Corpus(std::move(items), sample_rate, seed, chunking);
}

}  // namespace fadersynth
