#include "fadersynth/audio.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "fadersynth/errors.h"
#include "fadersynth/log.h"

namespace fadersynth {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T ReadLe(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + sizeof(T) > bytes.size()) throw IoError("truncated WAV data");
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void AppendLe(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

void AppendTag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

// Zeroth-order modified Bessel function, series form.
double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace

void ValidateAudio(const AudioBuffer& x) {
  if (x.sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (x.samples.empty()) throw LengthError("audio buffer is empty");
  for (float s : x.samples) {
    if (!std::isfinite(s)) throw NumericError("audio buffer contains non-finite samples");
  }
}

AudioBuffer PadToMultiple(const AudioBuffer& x, std::size_t multiple) {
  AudioBuffer out = x;
  if (multiple == 0) return out;
  const std::size_t rem = x.size() % multiple;
  if (rem != 0) out.samples.resize(x.size() + (multiple - rem), 0.0f);
  return out;
}

double Rms(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float s : x) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

AudioBuffer DecodeWav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError("not a RIFF/WAVE stream");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_fmt = false, have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto id = bytes.subspan(pos, 4);
    const auto size = ReadLe<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(id.data(), "fmt ", 4) == 0) {
      format = ReadLe<std::uint16_t>(bytes, body);
      channels = ReadLe<std::uint16_t>(bytes, body + 2);
      rate = ReadLe<std::uint32_t>(bytes, body + 4);
      bits = ReadLe<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible && size >= 26) {
        format = ReadLe<std::uint16_t>(bytes, body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(id.data(), "data", 4) == 0) {
      data = bytes.subspan(body, avail);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || !have_data) throw IoError("WAV stream lacks fmt or data chunk");
  if (channels == 0 || rate == 0) throw IoError("WAV header has zero channels or rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw IoError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                  std::to_string(bits) + " bits); expected 16-bit PCM or 32-bit float");
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data.size() / (width * channels);
  if (channels > 1) {
    LogWarning("mixing " + std::to_string(channels) + "-channel WAV down to mono");
  }

  AudioBuffer out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = (i * channels + c) * width;
      if (pcm16) {
        acc += ReadLe<std::int16_t>(data, off) / 32768.0;
      } else {
        acc += ReadLe<float>(data, off);
      }
    }
    out.samples[i] = static_cast<float>(acc / channels);
  }
  return out;
}

AudioBuffer ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return DecodeWav(bytes);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::vector<std::uint8_t> EncodeWav(const AudioBuffer& x, WavFormat format) {
  const bool pcm = format == WavFormat::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(x.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  AppendTag(out, "RIFF");
  AppendLe<std::uint32_t>(out, 36 + data_bytes);
  AppendTag(out, "WAVE");
  AppendTag(out, "fmt ");
  AppendLe<std::uint32_t>(out, 16);
  AppendLe<std::uint16_t>(out, pcm ? kFormatPcm : kFormatFloat);
  AppendLe<std::uint16_t>(out, 1);
  AppendLe<std::uint32_t>(out, static_cast<std::uint32_t>(x.sample_rate));
  AppendLe<std::uint32_t>(out, static_cast<std::uint32_t>(x.sample_rate) * (bits / 8));
  AppendLe<std::uint16_t>(out, bits / 8);
  AppendLe<std::uint16_t>(out, bits);
  AppendTag(out, "data");
  AppendLe<std::uint32_t>(out, data_bytes);
  for (float s : x.samples) {
    if (pcm) {
      const double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
      AppendLe<std::int16_t>(out, static_cast<std::int16_t>(std::lrint(c * 32767.0)));
    } else {
      AppendLe<float>(out, s);
    }
  }
  return out;
}

void WriteWav(const std::string& path, const AudioBuffer& x, WavFormat format) {
  const auto bytes = EncodeWav(x, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

AudioBuffer Resample(const AudioBuffer& x, int target_sr) {
  if (target_sr <= 0) throw ConfigError("target sample rate must be positive");
  if (target_sr == x.sample_rate || x.empty()) {
    AudioBuffer out = x;
    out.sample_rate = target_sr;
    return out;
  }
  const double ratio = static_cast<double>(target_sr) / x.sample_rate;
  const double cutoff = std::min(1.0, ratio) * 0.95;
  constexpr int kZeroCrossings = 16;
  constexpr double kBeta = 8.6;
  const double half_width = kZeroCrossings / cutoff;
  const double i0_beta = BesselI0(kBeta);
  const std::size_t n_out =
      static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * ratio));
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());

  AudioBuffer out;
  out.sample_rate = target_sr;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = static_cast<double>(i) / ratio;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(t - half_width));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(t + half_width));
    double acc = 0.0;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(lo, 0); j <= std::min(hi, n_in - 1); ++j) {
      const double d = t - static_cast<double>(j);
      const double u = d / half_width;
      const double w = BesselI0(kBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta;
      const double a = std::numbers::pi * cutoff * d;
      const double sinc = std::abs(a) < 1e-12 ? 1.0 : std::sin(a) / a;
      acc += x.samples[static_cast<std::size_t>(j)] * cutoff * sinc * w;
    }
    out.samples[i] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace fadersynth
