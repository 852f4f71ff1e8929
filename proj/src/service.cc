#include "fadersynth/service.h"

#include <httplib.h>

#include <cmath>
#include <cstdio>

#include "fadersynth/errors.h"
#include "fadersynth/log.h"
#include "fadersynth/tensor_util.h"

namespace fadersynth {
namespace {

using nlohmann::json;

HttpResult JsonResult(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpResult Error(int status, const std::string& message) {
  return JsonResult(status, {{"error", message}});
}

json RowsToJson(const Eigen::MatrixXd& values, const std::vector<DescriptorKind>& kinds) {
  json out = json::object();
  for (int i = 0; i < static_cast<int>(kinds.size()); ++i) {
    std::vector<double> row(values.cols());
    for (Eigen::Index t = 0; t < values.cols(); ++t) row[static_cast<std::size_t>(t)] = values(i, t);
    out[DescriptorName(kinds[static_cast<std::size_t>(i)])] = row;
  }
  return out;
}

json TensorRowsToJson(const torch::Tensor& cond, const std::vector<DescriptorKind>& kinds) {
  return RowsToJson(TensorToMatrix(cond.squeeze(0).to(torch::kFloat64)), kinds);
}

std::shared_ptr<const Session> EncodeSession(const std::string& id, const AudioBuffer& audio,
                                             std::shared_ptr<const FaderModel> model) {
  torch::NoGradGuard no_grad;
  auto s = std::make_shared<Session>();
  s->id = id;
  s->audio = audio;
  const LatentTrajectory z = model->Encode(AudioToTensor(audio), /*deterministic=*/true);
  s->mean = z.mean;
  s->scale = z.scale;
  s->m = static_cast<int>(z.mean.size(2));
  s->conditioning = model->ConditioningFor(audio);
  s->model = std::move(model);
  return s;
}

// Applies `edits` to a copy of the (1, N, m) conditioning. Returns an error
// message, empty on success.
std::string ApplyEdits(const json& edits, const std::vector<DescriptorKind>& kinds, int m, torch::Tensor& cond) {
  if (!edits.is_object()) return "edits must be an object";
  auto acc = cond.accessor<float, 3>();
  for (const auto& [name, value] : edits.items()) {
    int row = -1;
    for (int i = 0; i < static_cast<int>(kinds.size()); ++i) {
      if (DescriptorName(kinds[static_cast<std::size_t>(i)]) == name) row = i;
    }
    if (row < 0) return "unknown attribute '" + name + "'";
    auto valid = [](const json& v) {
      return v.is_number() && std::isfinite(v.get<double>()) && v.get<double>() >= 0.0 && v.get<double>() <= 1.0;
    };
    if (value.is_number()) {
      if (!valid(value)) return "knob value for '" + name + "' must lie in [0, 1]";
      for (int t = 0; t < m; ++t) acc[0][row][t] = value.get<float>();
    } else if (value.is_array()) {
      if (static_cast<int>(value.size()) != m) {
        return "track for '" + name + "' has " + std::to_string(value.size()) + " values, expected " +
               std::to_string(m);
      }
      for (int t = 0; t < m; ++t) {
        if (!valid(value[static_cast<std::size_t>(t)])) return "track for '" + name + "' leaves [0, 1]";
        acc[0][row][t] = value[static_cast<std::size_t>(t)].get<float>();
      }
    } else {
      return "edit for '" + name + "' must be a number or an array";
    }
  }
  return {};
}

}  // namespace

std::string ContentHash(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void InferenceService::LoadModel(std::shared_ptr<const FaderModel> model) {
  if (model && !model->has_statistics()) throw ConfigError("model has no descriptor statistics");
  std::lock_guard lock(model_mu_);
  model_ = std::move(model);
}

std::shared_ptr<const FaderModel> InferenceService::snapshot() const {
  std::lock_guard lock(model_mu_);
  return model_;
}

std::size_t InferenceService::num_sessions() const {
  std::lock_guard lock(session_mu_);
  return sources_.size();
}

HttpResult InferenceService::HandleModelInfo() const {
  const auto model = snapshot();
  if (!model) return Error(503, "no model loaded");
  const ModelConfig& c = model->config();
  return JsonResult(200, {{"kinds", DescriptorNames(c.kinds)},
                          {"K", c.num_bins},
                          {"m_per_second", static_cast<double>(c.sample_rate) / c.hop_length()},
                          {"sample_rate", c.sample_rate},
                          {"hop_length", c.hop_length()},
                          {"latent_dim", c.latent_dim}});
}

HttpResult InferenceService::HandleCreateSession(std::span<const std::uint8_t> wav_bytes) {
  const auto model = snapshot();
  if (!model) return Error(503, "no model loaded");
  AudioBuffer audio;
  try {
    audio = DecodeWav(wav_bytes);
    ValidateAudio(audio);
  } catch (const std::exception& e) {
    return Error(400, std::string("invalid WAV upload: ") + e.what());
  }
  const ModelConfig& c = model->config();
  if (audio.sample_rate != c.sample_rate) audio = Resample(audio, c.sample_rate);
  if (audio.duration() > kMaxSessionSeconds) return Error(400, "upload longer than the session limit");
  audio = PadForModel(audio, c.hop_length());
  if (audio.size() < static_cast<std::size_t>(std::max(c.frame_size, model->bank().prototype_length()))) {
    return Error(400, "upload too short");
  }
  const std::string id = ContentHash(wav_bytes);
  std::shared_ptr<const Session> session;
  try {
    session = EncodeSession(id, audio, model);
  } catch (const NumericError& e) {
    return Error(500, e.what());
  }
  {
    std::lock_guard lock(session_mu_);
    sources_[id] = audio;
    sessions_[id] = session;
  }
  return JsonResult(200, {{"session_id", id},
                          {"m", session->m},
                          {"duration", audio.duration()},
                          {"attribute_tracks", TensorRowsToJson(session->conditioning, c.kinds)}});
}

std::shared_ptr<const Session> InferenceService::FindSession(const std::string& id,
                                                             const std::shared_ptr<const FaderModel>& model) {
  AudioBuffer audio;
  {
    std::lock_guard lock(session_mu_);
    const auto it = sessions_.find(id);
    if (it != sessions_.end() && it->second->model == model) return it->second;
    const auto src = sources_.find(id);
    if (src == sources_.end()) return nullptr;
    audio = src->second;
  }
  // The model changed since the session was encoded.
  auto session = EncodeSession(id, audio, model);
  std::lock_guard lock(session_mu_);
  sessions_[id] = session;
  return session;
}

HttpResult InferenceService::HandleSynthesize(const std::string& request_body) {
  const auto model = snapshot();
  if (!model) return Error(503, "no model loaded");
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::parse_error& e) {
    return Error(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("session_id") || !req["session_id"].is_string()) {
    return Error(400, "request needs a string session_id");
  }
  const json edits = req.value("edits", json::object());
  if (req.contains("deterministic") && !req["deterministic"].is_boolean()) {
    return Error(400, "deterministic must be a boolean");
  }
  const bool deterministic = req.value("deterministic", true);
  if (req.contains("seed") && !req["seed"].is_number_unsigned()) return Error(400, "seed must be a non-negative integer");
  const std::uint64_t seed = req.value("seed", std::uint64_t{0});

  std::shared_ptr<const Session> session;
  try {
    session = FindSession(req["session_id"].get<std::string>(), model);
  } catch (const NumericError& e) {
    return Error(500, e.what());
  }
  if (!session) return Error(404, "unknown session " + req["session_id"].get<std::string>());

  const ModelConfig& c = model->config();
  torch::Tensor cond = session->conditioning.clone();
  if (const std::string err = ApplyEdits(edits, c.kinds, session->m, cond); !err.empty()) return Error(400, err);

  AudioBuffer y;
  try {
    torch::NoGradGuard no_grad;
    torch::Tensor z = session->mean;
    if (!deterministic) {
      auto gen = at::detail::createCPUGenerator(seed);
      z = session->mean + session->scale * torch::randn(session->mean.sizes(), gen, torch::kFloat32);
    }
    y = TensorToAudio(model->Decode(z, cond), c.sample_rate);
    y.samples.resize(session->audio.size(), 0.0f);
  } catch (const NumericError& e) {
    return Error(500, e.what());
  }

  // Float WAV, so the descriptors of the decoded bytes equal those below.
  const std::vector<std::uint8_t> wav = EncodeWav(y, WavFormat::kFloat32);
  const AttributeTrack measured = model->Describe(y);
  const torch::Tensor measured_norm = model->ConditioningFor(measured, session->m);
  return JsonResult(200, {{"session_id", session->id},
                          {"sample_rate", c.sample_rate},
                          {"deterministic", deterministic},
                          {"wav_base64", httplib::detail::base64_encode(std::string(wav.begin(), wav.end()))},
                          {"target", TensorRowsToJson(cond, c.kinds)},
                          {"measured", RowsToJson(measured.values, measured.kinds)},
                          {"measured_normalized", TensorRowsToJson(measured_norm, c.kinds)},
                          {"frame_size", measured.frame_size},
                          {"frame_hop", measured.frame_hop}});
}

namespace {

void Reply(httplib::Response& res, const HttpResult& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

HttpFrontend::HttpFrontend(InferenceService& service) : server_(std::make_unique<httplib::Server>()) {
  server_->Get("/model/info", [&service](const httplib::Request&, httplib::Response& res) {
    Reply(res, service.HandleModelInfo());
  });
  server_->Post("/session", [&service](const httplib::Request& req, httplib::Response& res) {
    const std::string& data = req.has_file("file") ? req.get_file_value("file").content : req.body;
    const auto* p = reinterpret_cast<const std::uint8_t*>(data.data());
    Reply(res, service.HandleCreateSession({p, data.size()}));
  });
  server_->Post("/synthesize", [&service](const httplib::Request& req, httplib::Response& res) {
    Reply(res, service.HandleSynthesize(req.body));
  });
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    LogError("request failed: " + what);
    Reply(res, Error(500, what));
  });
}

HttpFrontend::~HttpFrontend() { Stop(); }

int HttpFrontend::BindToAnyPort(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpFrontend::Bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

bool HttpFrontend::ListenAfterBind() { return server_->listen_after_bind(); }

void HttpFrontend::Stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace fadersynth
