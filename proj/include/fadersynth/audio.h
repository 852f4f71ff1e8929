#ifndef FADERSYNTH_AUDIO_H_
#define FADERSYNTH_AUDIO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fadersynth {

// Mono sample sequence with its sample rate. Samples are nominally in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = 16000;

  AudioBuffer() = default;
  AudioBuffer(std::vector<float> s, int sr) : samples(std::move(s)), sample_rate(sr) {}

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::span<const float> view() const { return samples; }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Throws ConfigError for non-positive rate, LengthError for empty buffers and
// NumericError for NaN/Inf samples.
void ValidateAudio(const AudioBuffer& x);

// Zero-pads (at the end) to the next multiple of `multiple`.
AudioBuffer PadToMultiple(const AudioBuffer& x, std::size_t multiple);

// Reads a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit). Multi-channel
// input is averaged to mono and a warning is logged.
AudioBuffer ReadWav(const std::string& path);
AudioBuffer DecodeWav(std::span<const std::uint8_t> bytes);

enum class WavFormat { kPcm16, kFloat32 };

void WriteWav(const std::string& path, const AudioBuffer& x,
              WavFormat format = WavFormat::kFloat32);
std::vector<std::uint8_t> EncodeWav(const AudioBuffer& x,
                                    WavFormat format = WavFormat::kFloat32);

// Band-limited sinc resampling (Kaiser-windowed). Output length is
// round(n * target_sr / source_sr).
AudioBuffer Resample(const AudioBuffer& x, int target_sr);

double Rms(std::span<const float> x);

}  // namespace fadersynth

#endif  // FADERSYNTH_AUDIO_H_
