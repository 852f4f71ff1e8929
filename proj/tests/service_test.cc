#include "fadersynth/service.h"

#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

#include "fadersynth/corpus.h"
#include "fadersynth/evaluation.h"
#include "fadersynth/training.h"

namespace fadersynth {
namespace {

using nlohmann::json;

std::vector<std::uint8_t> Base64Decode(const std::string& in) {
  static const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::vector<std::uint8_t> out;
  std::uint32_t buf = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const auto pos = alphabet.find(c);
    if (pos == std::string::npos) continue;
    buf = (buf << 6) | static_cast<std::uint32_t>(pos);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((buf >> bits) & 0xFF));
    }
  }
  return out;
}

std::shared_ptr<const FaderModel> Model(std::uint64_t seed = 3) {
  auto m = CreateModel(ModelConfig{}, seed);
  FitDescriptorStatistics(*m, MakeToyCorpus(16, 16000, 5, ChunkPolicy{8192, 0.0}).Chunks(Split::kTrain));
  m->SetTraining(false);
  return m;
}

AudioBuffer Source() { return MakeToyCorpus(16, 16000, 11, ChunkPolicy{8192, 0.0}).Chunks(Split::kTrain)[1]; }

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = Model();
    wav_ = EncodeWav(Source());
  }
  static std::shared_ptr<const FaderModel> model_;
  static std::vector<std::uint8_t> wav_;

  std::string NewSession(InferenceService& s) {
    const HttpResult r = s.HandleCreateSession(wav_);
    EXPECT_EQ(r.status, 200) << r.body;
    return r.Json()["session_id"];
  }
};
std::shared_ptr<const FaderModel> ServiceTest::model_;
std::vector<std::uint8_t> ServiceTest::wav_;

TEST_F(ServiceTest, NoModelGives503) {
  InferenceService s;
  EXPECT_EQ(s.HandleModelInfo().status, 503);
  EXPECT_EQ(s.HandleCreateSession(wav_).status, 503);
  EXPECT_EQ(s.HandleSynthesize(R"({"session_id": "x"})").status, 503);
}

TEST_F(ServiceTest, ModelInfo) {
  InferenceService s(model_);
  const HttpResult r = s.HandleModelInfo();
  ASSERT_EQ(r.status, 200);
  const json j = r.Json();
  EXPECT_EQ(j["kinds"], json({"rms", "centroid"}));
  EXPECT_EQ(j["K"], 16);
  EXPECT_EQ(j["sample_rate"], 16000);
  EXPECT_DOUBLE_EQ(j["m_per_second"].get<double>(), 16000.0 / 512.0);
}

TEST_F(ServiceTest, SessionIsKeyedByContent) {
  InferenceService s(model_);
  const HttpResult r = s.HandleCreateSession(wav_);
  ASSERT_EQ(r.status, 200) << r.body;
  const json j = r.Json();
  EXPECT_EQ(j["session_id"], ContentHash(wav_));
  EXPECT_EQ(j["m"], 16);
  for (const auto& [kind, track] : j["attribute_tracks"].items()) {
    ASSERT_EQ(track.size(), 16u) << kind;
    for (double v : track) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(s.HandleCreateSession(wav_).Json()["session_id"], j["session_id"]);
  EXPECT_EQ(s.num_sessions(), 1u);
}

TEST_F(ServiceTest, BadUploadsGive400) {
  InferenceService s(model_);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  EXPECT_EQ(s.HandleCreateSession(junk).status, 400);
  EXPECT_EQ(s.HandleCreateSession(EncodeWav(AudioBuffer(std::vector<float>(100, 0.1f), 16000))).status, 400);
}

TEST_F(ServiceTest, EmptyEditsReconstructCachedSource) {
  InferenceService s(model_);
  const std::string id = NewSession(s);
  const HttpResult r = s.HandleSynthesize(json{{"session_id", id}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const json j = r.Json();
  const AudioBuffer y = DecodeWav(Base64Decode(j["wav_base64"]));
  const FaderAudioModel direct(model_);
  const AudioBuffer x = Source();
  const AudioBuffer expected = AttributeTransfer(direct, x, direct.Describe(x));
  EXPECT_EQ(y.samples, expected.samples);
}

TEST_F(ServiceTest, MeasuredTracksDescribeReturnedAudioExactly) {
  InferenceService s(model_);
  const std::string id = NewSession(s);
  const HttpResult r = s.HandleSynthesize(json{{"session_id", id}, {"edits", {{"rms", 0.7}}}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const json j = r.Json();
  const AudioBuffer y = DecodeWav(Base64Decode(j["wav_base64"]));
  const AttributeTrack measured = model_->Describe(y);
  for (int i = 0; i < measured.num_kinds(); ++i) {
    EXPECT_EQ(j["measured"][DescriptorName(measured.kinds[i])].get<std::vector<double>>(), measured.Row(i));
  }
  for (double v : j["target"]["rms"]) EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST_F(ServiceTest, MalformedRequests) {
  InferenceService s(model_);
  const std::string id = NewSession(s);
  EXPECT_EQ(s.HandleSynthesize("{not json").status, 400);
  EXPECT_EQ(s.HandleSynthesize(R"({"edits": {}})").status, 400);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", "feedface"}}.dump()).status, 404);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", id}, {"edits", {{"rms", 1.5}}}}.dump()).status, 400);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", id}, {"edits", {{"rms", -0.1}}}}.dump()).status, 400);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", id}, {"edits", {{"loudness", 0.5}}}}.dump()).status, 400);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", id}, {"edits", {{"rms", std::vector<double>(15, 0.5)}}}}.dump())
                .status,
            400);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", id}, {"edits", {{"rms", "loud"}}}}.dump()).status, 400);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", id}, {"edits", 3}}.dump()).status, 400);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", id}, {"deterministic", "yes"}}.dump()).status, 400);
  EXPECT_EQ(s.HandleSynthesize(json{{"session_id", id}, {"edits", {{"rms", std::vector<double>(16, 0.5)}}}}.dump())
                .status,
            200);
}

TEST_F(ServiceTest, SamplingIsSeeded) {
  InferenceService s(model_);
  const std::string id = NewSession(s);
  auto run = [&](std::uint64_t seed) {
    return s.HandleSynthesize(json{{"session_id", id}, {"deterministic", false}, {"seed", seed}}.dump())
        .Json()["wav_base64"]
        .get<std::string>();
  };
  EXPECT_EQ(run(1), run(1));
  EXPECT_NE(run(1), run(2));
}

TEST_F(ServiceTest, ConcurrentRequestsOnOneSnapshot) {
  InferenceService s(model_);
  const std::string id = NewSession(s);
  const std::string low = json{{"session_id", id}, {"edits", {{"rms", 0.1}}}}.dump();
  const std::string high = json{{"session_id", id}, {"edits", {{"rms", 0.9}}}}.dump();
  const HttpResult seq_low = s.HandleSynthesize(low);
  const HttpResult seq_high = s.HandleSynthesize(high);
  HttpResult a, b;
  std::thread ta([&] { a = s.HandleSynthesize(low); });
  std::thread tb([&] { b = s.HandleSynthesize(high); });
  ta.join();
  tb.join();
  EXPECT_EQ(a.status, 200);
  EXPECT_EQ(b.status, 200);
  EXPECT_EQ(a.body, seq_low.body);
  EXPECT_EQ(b.body, seq_high.body);
}

TEST_F(ServiceTest, ReloadReencodesSessions) {
  InferenceService s(model_);
  const std::string id = NewSession(s);
  const std::string req = json{{"session_id", id}}.dump();
  const std::string before = s.HandleSynthesize(req).body;
  const auto old_snapshot = s.snapshot();
  s.LoadModel(Model(99));
  EXPECT_NE(s.snapshot(), old_snapshot);
  const HttpResult after = s.HandleSynthesize(req);
  ASSERT_EQ(after.status, 200);
  EXPECT_NE(after.body, before);
  s.LoadModel(nullptr);
  EXPECT_EQ(s.HandleSynthesize(req).status, 503);
}

TEST_F(ServiceTest, HttpRoutes) {
  InferenceService s(model_);
  HttpFrontend frontend(s);
  const int port = frontend.BindToAnyPort("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread server([&] { frontend.ListenAfterBind(); });
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  for (int i = 0; i < 100; ++i) {
    if (auto r = client.Get("/model/info")) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  auto info = client.Get("/model/info");
  ASSERT_TRUE(info);
  EXPECT_EQ(info->status, 200);
  EXPECT_EQ(json::parse(info->body)["K"], 16);

  auto session = client.Post("/session", std::string(wav_.begin(), wav_.end()), "audio/wav");
  ASSERT_TRUE(session);
  ASSERT_EQ(session->status, 200) << session->body;
  const std::string id = json::parse(session->body)["session_id"];

  auto synth = client.Post("/synthesize", json{{"session_id", id}, {"edits", {{"centroid", 0.5}}}}.dump(),
                           "application/json");
  ASSERT_TRUE(synth);
  EXPECT_EQ(synth->status, 200);
  auto missing = client.Post("/synthesize", json{{"session_id", "nope"}}.dump(), "application/json");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  frontend.Stop();
  server.join();
}

}  // namespace
}  // namespace fadersynth
