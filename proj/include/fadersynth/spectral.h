#ifndef FADERSYNTH_SPECTRAL_H_
#define FADERSYNTH_SPECTRAL_H_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "fadersynth/audio.h"

namespace fadersynth {

enum class Taper { kRectangular, kHann, kHamming };

Taper ParseTaper(const std::string& name);
std::string TaperName(Taper taper);

// Periodic window of the given length.
std::vector<double> MakeWindow(Taper taper, int size);

// Frames x (fft_size / 2 + 1) magnitudes. Frames are centred: the signal is
// reflection-padded by fft_size / 2 on both sides (zero-padded when it is too
// short to reflect), giving 1 + n / hop frames. Throws ConfigError unless
// fft_size >= hop >= 1.
Eigen::MatrixXd Spectrogram(const AudioBuffer& x, int fft_size, int hop,
                            Taper taper = Taper::kHann);

// Same framing without padding: frame t covers samples [t*hop, t*hop+size).
// Used by the frame-wise descriptors.
Eigen::MatrixXd FrameSpectrogram(const AudioBuffer& x, int fft_size, int hop,
                                 Taper taper);

// mel_bands x (fft_size / 2 + 1) triangular filters on the HTK mel scale
// spanning [0, sr / 2]. A filter too narrow to touch any bin gets unit weight
// on its nearest bin, so no band is identically zero.
Eigen::MatrixXd MelFilterbank(int mel_bands, int fft_size, int sample_rate);
double HzToMel(double hz);
double MelToHz(double mel);

// Frames x mel_bands, built on Spectrogram() magnitudes with a Hann window.
Eigen::MatrixXd MelSpectrogram(const AudioBuffer& x, int mel_bands, int fft_size, int hop);

struct SpectralScaleConfig {
  std::vector<int> fft_sizes = {2048, 1024, 512, 256, 128};
  double hop_ratio = 0.25;
  Taper window = Taper::kHann;
  double epsilon = 1e-7;

  int HopFor(int fft_size) const;
  // Throws ConfigError when sizes are not strictly decreasing or the hop
  // ratio is outside (0, 1].
  void Validate() const;
};

// Sum over scales of
//   ||S - S'||_F / (||S||_F + ||S'||_F)  +  mean |log(S + eps) - log(S' + eps)|
// with S, S' the magnitude spectrograms. Symmetric, nonnegative and zero iff
// the magnitudes agree at every scale. The shorter input is zero-padded;
// the number of padded samples is written to `padded` when given.
double MultiscaleSpectralDistance(const AudioBuffer& x, const AudioBuffer& x_hat,
                                  const SpectralScaleConfig& cfg = {},
                                  std::size_t* padded = nullptr);

}  // namespace fadersynth

#endif  // FADERSYNTH_SPECTRAL_H_
