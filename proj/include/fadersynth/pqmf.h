#ifndef FADERSYNTH_PQMF_H_
#define FADERSYNTH_PQMF_H_

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "fadersynth/audio.h"

namespace fadersynth {

// Cosine-modulated pseudo-QMF bank built from a Kaiser-windowed lowpass
// prototype. The prototype has order N = taps_per_band * B - B (a multiple of
// B) and is stored zero-padded to L = taps_per_band * B coefficients, so the
// causal analysis + synthesis cascade delays the signal by exactly N samples.
//
// Both stages treat the (padded) signal as periodic; synthesis advances its
// output by N samples, which compensates the delay and keeps the band length
// at ceil(n / B) without edge loss.
//
// Immutable after construction; safe to share across threads.
class PqmfBank {
 public:
  // Throws ConfigError unless num_bands is a power of two >= 2 and
  // taps_per_band >= 8. Logs a warning when the achieved stopband attenuation
  // falls short of `attenuation_db`.
  static PqmfBank Design(int num_bands = 8, int taps_per_band = 64,
                         double attenuation_db = 100.0);

  int num_bands() const { return num_bands_; }
  int taps_per_band() const { return taps_per_band_; }
  int order() const { return order_; }
  int prototype_length() const { return static_cast<int>(prototype_.size()); }
  // Round-trip group delay of the causal cascade, compensated internally.
  int delay() const { return order_; }
  double cutoff() const { return cutoff_; }
  double requested_attenuation_db() const { return requested_attenuation_db_; }
  double achieved_attenuation_db() const { return achieved_attenuation_db_; }

  const std::vector<double>& prototype() const { return prototype_; }
  // Row k holds the length-(order+1) analysis / synthesis filter of band k.
  const Eigen::MatrixXd& analysis_filters() const { return analysis_; }
  const Eigen::MatrixXd& synthesis_filters() const { return synthesis_; }

 private:
  PqmfBank() = default;

  int num_bands_ = 0;
  int taps_per_band_ = 0;
  int order_ = 0;
  double cutoff_ = 0.0;
  double requested_attenuation_db_ = 0.0;
  double achieved_attenuation_db_ = 0.0;
  std::vector<double> prototype_;
  Eigen::MatrixXd analysis_;
  Eigen::MatrixXd synthesis_;
};

inline PqmfBank DesignPqmf(int num_bands = 8, int taps_per_band = 64,
                           double attenuation_db = 100.0) {
  return PqmfBank::Design(num_bands, taps_per_band, attenuation_db);
}

// B x ceil(n / B) decimated sub-band signals.
struct MultibandSignal {
  Eigen::MatrixXf bands;
  int sample_rate = 0;
  // Length of the waveform before padding to a multiple of B.
  std::size_t original_length = 0;

  int num_bands() const { return static_cast<int>(bands.rows()); }
  int band_length() const { return static_cast<int>(bands.cols()); }
};

// Throws LengthError when x is shorter than the prototype.
MultibandSignal PqmfAnalyze(const AudioBuffer& x, const PqmfBank& bank);

// Output has original_length samples (B * band_length when unset). Throws
// ShapeError when the band count differs from the bank.
AudioBuffer PqmfSynthesize(const MultibandSignal& mb, const PqmfBank& bank);

// Prototype design objective: peak magnitude of the prototype's
// autocorrelation at nonzero multiples of 2B, divided by its energy.
// Exposed for tests.
double PqmfReconstructionObjective(const std::vector<double>& prototype, int num_bands);

}  // namespace fadersynth

#endif  // FADERSYNTH_PQMF_H_
