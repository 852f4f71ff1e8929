#ifndef FADERSYNTH_CORPUS_H_
#define FADERSYNTH_CORPUS_H_

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "fadersynth/audio.h"

namespace fadersynth {

enum class Split { kTrain, kValid, kTest };

std::string SplitName(Split split);
Split ParseSplit(const std::string& name);

struct SplitFractions {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct CorpusItem {
  std::string name;  // path relative to the corpus root, or a generated id
  std::string path;  // empty for in-memory items
  double duration_s = 0.0;
  int source_sample_rate = 0;
  Split split = Split::kTrain;
  AudioBuffer audio;  // mono, at the corpus sample rate
};

struct ChunkPolicy {
  std::size_t length = 65536;
  // Fraction of a chunk shared with the next one, in [0, 1).
  double overlap = 0.0;
};

// Audio items with a file-level train/valid/test assignment. Read-only after
// construction.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<CorpusItem> items, int sample_rate, std::uint64_t seed,
         ChunkPolicy chunking, SplitFractions fractions = {});

  const std::vector<CorpusItem>& items() const { return items_; }
  int sample_rate() const { return sample_rate_; }
  std::uint64_t seed() const { return seed_; }
  const ChunkPolicy& chunking() const { return chunking_; }
  const SplitFractions& fractions() const { return fractions_; }

  std::vector<const CorpusItem*> Items(Split split) const;
  std::size_t Count(Split split) const;

  // Fixed-length chunks of every item in `split`, in item order. An item
  // shorter than the chunk length yields one zero-padded chunk.
  std::vector<AudioBuffer> Chunks(Split split) const;

  nlohmann::json Manifest() const;
  void SaveManifest(const std::string& path) const;
  // Writes each item as 32-bit float WAV under `dir` plus manifest.json.
  void WriteToDirectory(const std::string& dir) const;

 private:
  void AssignSplits();

  std::vector<CorpusItem> items_;
  int sample_rate_ = 16000;
  std::uint64_t seed_ = 0;
  ChunkPolicy chunking_;
  SplitFractions fractions_;
};

// Split sizes for n items: round(train * n), round(valid * n), remainder.
struct SplitCounts {
  std::size_t train, valid, test;
};
SplitCounts ComputeSplitCounts(std::size_t n, const SplitFractions& fractions);

// Recursively loads every .wav under `root` (sorted by path), resampled to
// target_sr and mixed to mono. Files that fail to decode are skipped with a
// warning. Splits are assigned by a seeded shuffle of files. Throws IoError
// when nothing decodes.
Corpus LoadCorpus(const std::string& root, int target_sr, const ChunkPolicy& chunking,
                  std::uint64_t seed, const SplitFractions& fractions = {});

// Chunks of one buffer under `policy`.
std::vector<AudioBuffer> ChunkAudio(const AudioBuffer& x, const ChunkPolicy& policy);

struct ToyCorpusOptions {
  double min_f0_hz = 100.0;
  double max_f0_hz = 2000.0;
  double min_duration_s = 1.0;
  double max_duration_s = 2.0;
};

// Synthetic sustained harmonic tones. Each item draws a fundamental
// (log-uniform), a harmonic roll-off exponent that drifts slowly over time
// (driving centroid and bandwidth) and an independent slow amplitude
// envelope in dB (driving RMS). Requires n_items >= 16; bit-identical for the
// same seed.
Corpus MakeToyCorpus(int n_items, int sample_rate, std::uint64_t seed,
                     const ChunkPolicy& chunking = {},
                     const ToyCorpusOptions& options = {});

}  // namespace fadersynth

#endif  // FADERSYNTH_CORPUS_H_
