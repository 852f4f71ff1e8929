#include "fadersynth/checkpoint.h"

#include <filesystem>

#include "fadersynth/errors.h"

namespace fadersynth {
namespace fs = std::filesystem;

namespace {

constexpr const char* kFormatTag = "fadersynth.checkpoint";

void WriteString(torch::serialize::OutputArchive& ar, const std::string& key, const std::string& v) {
  ar.write(key, c10::IValue(v));
}

std::string ReadString(torch::serialize::InputArchive& ar, const std::string& key) {
  c10::IValue v;
  if (!ar.try_read(key, v) || !v.isString()) throw IoError("checkpoint lacks '" + key + "'");
  return v.toStringRef();
}

}  // namespace

nlohmann::json NormalizerToJson(const AttributeNormalizer& n) {
  return {{"kinds", DescriptorNames(n.kinds())}, {"lo", n.lo()}, {"hi", n.hi()}};
}

AttributeNormalizer NormalizerFromJson(const nlohmann::json& j) {
  try {
    return AttributeNormalizer(ParseDescriptorKinds(j.at("kinds").get<std::vector<std::string>>()),
                               j.at("lo").get<std::vector<double>>(),
                               j.at("hi").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed normalizer: ") + e.what());
  }
}

void SaveCheckpoint(const std::string& path, const FaderModel& model, const CheckpointMeta& meta,
                    const std::function<void(torch::serialize::OutputArchive&)>& extra) {
  torch::serialize::OutputArchive ar;
  nlohmann::json header = {{"format", kFormatTag},
                           {"version", meta.version},
                           {"step", meta.step},
                           {"stage", meta.stage},
                           {"seed", meta.seed},
                           {"train_config", meta.train_config},
                           {"quantizer_file", meta.quantizer_file},
                           {"model", model.config().ToJson()}};
  if (model.has_statistics()) {
    header["quantizer"] = model.quantizer().ToJson();
    header["normalizer"] = NormalizerToJson(model.normalizer());
  }
  WriteString(ar, "meta", header.dump());
  for (const auto& [name, module] : model.Modules()) {
    torch::serialize::OutputArchive sub;
    module->save(sub);
    ar.write(name, sub);
  }
  if (extra) extra(ar);

  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  try {
    ar.save_to(tmp.string());
    fs::rename(tmp, target);
  } catch (const std::exception& e) {
    throw IoError("cannot write checkpoint " + path + ": " + e.what());
  }
}

torch::serialize::InputArchive OpenCheckpointArchive(const std::string& path) {
  if (!fs::is_regular_file(path)) throw IoError("checkpoint not found: " + path);
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path);
  } catch (const std::exception& e) {
    throw IoError("cannot read checkpoint " + path + ": " + e.what());
  }
  return ar;
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  auto ar = OpenCheckpointArchive(path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(ReadString(ar, "meta"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint " + path + " has a malformed header: " + e.what());
  }
  if (header.value("format", "") != kFormatTag) throw IoError(path + " is not a checkpoint");
  if (header.value("version", 0) != kCheckpointVersion) {
    throw IoError(path + ": unsupported checkpoint version " + std::to_string(header.value("version", 0)));
  }
  LoadedCheckpoint out;
  out.meta.version = header["version"];
  out.meta.step = header.value("step", 0L);
  out.meta.stage = header.value("stage", 1);
  out.meta.seed = header.value("seed", std::uint64_t{0});
  out.meta.train_config = header.value("train_config", "");
  out.meta.quantizer_file = header.value("quantizer_file", "");
  out.model = std::make_shared<FaderModel>(ModelConfig::FromJson(header.at("model")));
  if (header.contains("quantizer")) {
    out.model->SetDescriptorStatistics(Quantizer::FromJson(header["quantizer"]),
                                       NormalizerFromJson(header["normalizer"]));
  }
  for (const auto& [name, module] : out.model->Modules()) {
    torch::serialize::InputArchive sub;
    if (!ar.try_read(name, sub)) throw IoError("checkpoint " + path + " lacks module '" + name + "'");
    try {
      module->load(sub);
    } catch (const std::exception& e) {
      throw IoError("checkpoint " + path + " does not match module '" + name + "': " + e.what());
    }
  }
  out.model->SetTraining(false);
  return out;
}

}  // namespace fadersynth
