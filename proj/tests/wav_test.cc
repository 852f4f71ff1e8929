#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "fadersynth/audio.h"
#include "fadersynth/errors.h"
#include "test_signals.h"

namespace fadersynth {
namespace {

TEST(WavTest, FloatRoundTripIsExact) {
  const auto x = testing::WhiteNoise(1234, 3, 22050);
  const auto y = DecodeWav(EncodeWav(x, WavFormat::kFloat32));
  EXPECT_EQ(y.sample_rate, 22050);
  EXPECT_EQ(y.samples, x.samples);
}

TEST(WavTest, Pcm16RoundTripWithinQuantization) {
  const auto x = testing::Sine(440.0, 2000, 16000, 0.8);
  const auto y = DecodeWav(EncodeWav(x, WavFormat::kPcm16));
  ASSERT_EQ(y.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.samples[i], x.samples[i], 2.0 / 32767);
}

TEST(WavTest, StereoIsMixedToMono) {
  // Hand-built 2-channel PCM16 stream: frames (1000, 3000), (-2000, 0).
  std::vector<std::uint8_t> bytes;
  auto put = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  };
  auto u32 = [&](std::uint32_t v) { put(&v, 4); };
  auto u16 = [&](std::uint16_t v) { put(&v, 2); };
  put("RIFF", 4); u32(36 + 8); put("WAVE", 4);
  put("fmt ", 4); u32(16); u16(1); u16(2); u32(8000); u32(8000 * 4); u16(4); u16(16);
  put("data", 4); u32(8);
  for (std::int16_t s : {1000, 3000, -2000, 0}) put(&s, 2);
  const auto y = DecodeWav(bytes);
  ASSERT_EQ(y.size(), 2u);
  EXPECT_EQ(y.sample_rate, 8000);
  EXPECT_NEAR(y.samples[0], 2000.0 / 32768, 1e-6);
  EXPECT_NEAR(y.samples[1], -1000.0 / 32768, 1e-6);
}

TEST(WavTest, RejectsGarbage) {
  const std::vector<std::uint8_t> junk = {'n', 'o', 'p', 'e'};
  EXPECT_THROW(DecodeWav(junk), IoError);
  EXPECT_THROW(ReadWav("/nonexistent/file.wav"), IoError);
}

TEST(AudioTest, ValidateRejectsBadBuffers) {
  EXPECT_THROW(ValidateAudio(AudioBuffer({}, 16000)), LengthError);
  EXPECT_THROW(ValidateAudio(AudioBuffer({0.0f}, 0)), ConfigError);
  EXPECT_THROW(ValidateAudio(AudioBuffer({NAN}, 16000)), NumericError);
}

TEST(ResampleTest, PreservesDurationAndTone) {
  const auto x = testing::Sine(440.0, 48000, 48000, 0.5);
  const auto y = Resample(x, 16000);
  EXPECT_EQ(y.size(), 16000u);
  // Compare against the analytic tone away from the edges.
  const auto ref = testing::Sine(440.0, 16000, 16000, 0.5);
  double err = 0.0;
  for (std::size_t i = 200; i + 200 < y.size(); ++i) err = std::max(err, std::abs(double(y.samples[i]) - ref.samples[i]));
  EXPECT_LE(err, 1e-2);
}

}  // namespace
}  // namespace fadersynth
