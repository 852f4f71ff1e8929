#ifndef FADERSYNTH_SERVICE_H_
#define FADERSYNTH_SERVICE_H_

#include <cstdint>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <unordered_map>

#include "fadersynth/audio.h"
#include "fadersynth/model.h"

namespace httplib {
class Server;
}

namespace fadersynth {

struct HttpResult {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json Json() const { return nlohmann::json::parse(body); }
};

// One uploaded source and its latent under a particular model snapshot.
struct Session {
  std::string id;
  AudioBuffer audio;  // resampled to the model rate, padded to the hop
  std::shared_ptr<const FaderModel> model;
  torch::Tensor mean;   // (1, d, m)
  torch::Tensor scale;  // (1, d, m)
  torch::Tensor conditioning;  // (1, N, m), normalized, from the source
  int m = 0;
};

// Inference over an immutable model snapshot. Handlers are safe to call
// concurrently; LoadModel swaps the snapshot atomically, and requests
// already running keep the snapshot they started with.
//
// JSON API
//   GET  /model/info  -> {kinds, K, m_per_second, sample_rate, hop_length}
//   POST /session     WAV bytes -> {session_id, m, attribute_tracks}
//   POST /synthesize  {session_id, edits: {kind: value | [m values]},
//                      deterministic = true, seed = 0}
//                     -> {wav_base64, sample_rate, target, measured,
//                         measured_normalized}
// Tracks in attribute_tracks, target and measured_normalized are normalized
// to [0, 1] at length m; `measured` holds raw descriptor values at the
// descriptor frame rate of the returned audio.
class InferenceService {
 public:
  InferenceService() = default;
  explicit InferenceService(std::shared_ptr<const FaderModel> model) { LoadModel(std::move(model)); }

  // Throws ConfigError for a model without descriptor statistics.
  void LoadModel(std::shared_ptr<const FaderModel> model);
  std::shared_ptr<const FaderModel> snapshot() const;

  HttpResult HandleModelInfo() const;
  HttpResult HandleCreateSession(std::span<const std::uint8_t> wav_bytes);
  HttpResult HandleSynthesize(const std::string& request_body);

  std::size_t num_sessions() const;

  // Longest accepted upload, in seconds.
  static constexpr double kMaxSessionSeconds = 300.0;

 private:
  std::shared_ptr<const Session> FindSession(const std::string& id, const std::shared_ptr<const FaderModel>& model);

  mutable std::mutex model_mu_;
  std::shared_ptr<const FaderModel> model_;
  mutable std::mutex session_mu_;
  std::unordered_map<std::string, std::shared_ptr<const Session>> sessions_;
  // Source audio by session id, kept across model reloads.
  std::unordered_map<std::string, AudioBuffer> sources_;
};

// Hex FNV-1a 64 digest of the bytes.
std::string ContentHash(std::span<const std::uint8_t> bytes);

// Binds the service's routes to an httplib server.
class HttpFrontend {
 public:
  explicit HttpFrontend(InferenceService& service);
  ~HttpFrontend();
  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  // Returns the bound port, or -1.
  int BindToAnyPort(const std::string& host);
  bool Bind(const std::string& host, int port);
  // Blocks until Stop().
  bool ListenAfterBind();
  void Stop();

 private:
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace fadersynth

#endif  // FADERSYNTH_SERVICE_H_
