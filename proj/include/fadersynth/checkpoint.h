#ifndef FADERSYNTH_CHECKPOINT_H_
#define FADERSYNTH_CHECKPOINT_H_

#include <torch/torch.h>

#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>

#include "fadersynth/model.h"

namespace fadersynth {

constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  int version = kCheckpointVersion;
  long step = 0;
  int stage = 1;
  std::uint64_t seed = 0;
  std::string train_config;  // YAML text of the run's TrainConfig, if any
  std::string quantizer_file;  // sibling JSON copy of the quantizer, if written
};

nlohmann::json NormalizerToJson(const AttributeNormalizer& n);
AttributeNormalizer NormalizerFromJson(const nlohmann::json& j);

// Writes one torch archive holding every module's parameters and buffers,
// the model config, descriptor statistics and `meta`. `extra` may add more
// entries (optimizer and RNG state). The write goes through a temporary file
// and a rename so readers never see a partial checkpoint.
void SaveCheckpoint(const std::string& path, const FaderModel& model, const CheckpointMeta& meta,
                    const std::function<void(torch::serialize::OutputArchive&)>& extra = {});

struct LoadedCheckpoint {
  std::shared_ptr<FaderModel> model;
  CheckpointMeta meta;
};

// Throws IoError when the file is missing, unreadable or of another version.
LoadedCheckpoint LoadCheckpoint(const std::string& path);

// Opens the archive for callers that stored extra entries.
torch::serialize::InputArchive OpenCheckpointArchive(const std::string& path);

}  // namespace fadersynth

#endif  // FADERSYNTH_CHECKPOINT_H_
