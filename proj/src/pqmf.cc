#include "fadersynth/pqmf.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fadersynth/errors.h"
#include "fadersynth/log.h"

namespace fadersynth {
namespace {

constexpr double kPi = std::numbers::pi;

double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

double KaiserBeta(double attenuation_db) {
  if (attenuation_db > 50.0) return 0.1102 * (attenuation_db - 8.7);
  if (attenuation_db > 21.0) {
    return 0.5842 * std::pow(attenuation_db - 21.0, 0.4) + 0.07886 * (attenuation_db - 21.0);
  }
  return 0.0;
}

// Windowed-sinc lowpass with cutoff `wc` (rad/sample), order+1 taps, unscaled.
std::vector<double> KaiserLowpass(double wc, int order, double beta) {
  std::vector<double> h(static_cast<std::size_t>(order) + 1);
  const double i0_beta = BesselI0(beta);
  const double centre = order / 2.0;
  for (int n = 0; n <= order; ++n) {
    const double t = n - centre;
    const double sinc = t == 0.0 ? wc / kPi : std::sin(wc * t) / (kPi * t);
    const double r = order == 0 ? 0.0 : 2.0 * n / order - 1.0;
    const double w = BesselI0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[static_cast<std::size_t>(n)] = sinc * w;
  }
  return h;
}

double MagnitudeAt(const std::vector<double>& h, double omega) {
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    re += h[n] * std::cos(omega * static_cast<double>(n));
    im -= h[n] * std::sin(omega * static_cast<double>(n));
  }
  return std::hypot(re, im);
}

bool IsPowerOfTwo(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

double PqmfReconstructionObjective(const std::vector<double>& prototype, int num_bands) {
  const int len = static_cast<int>(prototype.size());
  double energy = 0.0;
  for (double v : prototype) energy += v * v;
  if (energy <= 0.0) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  // Autocorrelation at lags 2B, 4B, ... relative to the zero lag, so that a
  // vanishing filter cannot win.
  for (int lag = 2 * num_bands; lag < len; lag += 2 * num_bands) {
    double acc = 0.0;
    for (int n = 0; n + lag < len; ++n) acc += prototype[n] * prototype[n + lag];
    worst = std::max(worst, std::abs(acc));
  }
  return worst / energy;
}

PqmfBank PqmfBank::Design(int num_bands, int taps_per_band, double attenuation_db) {
  if (!IsPowerOfTwo(num_bands) || num_bands < 2) {
    throw ConfigError("PQMF band count must be a power of two >= 2, got " +
                      std::to_string(num_bands));
  }
  if (taps_per_band < 8) {
    throw ConfigError("PQMF needs at least 8 taps per band, got " +
                      std::to_string(taps_per_band));
  }
  if (!(attenuation_db > 0.0)) throw ConfigError("PQMF attenuation must be positive");

  PqmfBank bank;
  bank.num_bands_ = num_bands;
  bank.taps_per_band_ = taps_per_band;
  bank.order_ = taps_per_band * num_bands - num_bands;
  bank.requested_attenuation_db_ = attenuation_db;
  const int order = bank.order_;
  const double beta = KaiserBeta(attenuation_db);

  auto objective = [&](double wc) {
    return PqmfReconstructionObjective(KaiserLowpass(wc, order, beta), num_bands);
  };

  // Coarse grid over (0, pi/B], then golden-section refinement around the
  // best grid point. The objective is multimodal far from pi/(2B).
  const double upper = kPi / num_bands;
  constexpr int kGrid = 256;
  double best_wc = upper / 2.0, best = objective(best_wc);
  for (int i = 1; i <= kGrid; ++i) {
    const double wc = upper * i / kGrid;
    const double v = objective(wc);
    if (v < best) { best = v; best_wc = wc; }
  }
  double lo = std::max(1e-6, best_wc - upper / kGrid);
  double hi = std::min(upper, best_wc + upper / kGrid);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      hi = d; d = c; fd = fc;
      c = hi - inv_phi * (hi - lo); fc = objective(c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + inv_phi * (hi - lo); fd = objective(d);
    }
  }
  const double refined = (lo + hi) / 2.0;
  if (objective(refined) < best) best_wc = refined;
  bank.cutoff_ = best_wc;

  const std::vector<double> h = KaiserLowpass(best_wc, order, beta);
  bank.prototype_.assign(static_cast<std::size_t>(taps_per_band) * num_bands, 0.0);
  std::copy(h.begin(), h.end(), bank.prototype_.begin());

  // Stopband: everything at or above pi/B must be suppressed for the
  // non-adjacent aliasing terms to vanish.
  const double dc = MagnitudeAt(h, 0.0);
  double peak = 0.0;
  constexpr int kProbe = 2048;
  for (int i = 0; i <= kProbe; ++i) {
    const double w = upper + (kPi - upper) * i / kProbe;
    peak = std::max(peak, MagnitudeAt(h, w));
  }
  bank.achieved_attenuation_db_ = peak > 0.0 ? -20.0 * std::log10(peak / dc) : 300.0;
  if (bank.achieved_attenuation_db_ < attenuation_db) {
    std::ostringstream msg;
    msg << "PQMF prototype reaches " << bank.achieved_attenuation_db_
        << " dB stopband attenuation, requested " << attenuation_db << " dB";
    LogWarning(msg.str());
  }

  bank.analysis_.resize(num_bands, order + 1);
  bank.synthesis_.resize(num_bands, order + 1);
  for (int k = 0; k < num_bands; ++k) {
    const double phase = (k % 2 == 0 ? 1.0 : -1.0) * kPi / 4.0;
    for (int n = 0; n <= order; ++n) {
      const double arg = (2 * k + 1) * kPi / (2.0 * num_bands) * (n - order / 2.0);
      bank.analysis_(k, n) = 2.0 * h[n] * std::cos(arg + phase);
      bank.synthesis_(k, n) = 2.0 * h[n] * std::cos(arg - phase);
    }
  }
  return bank;
}

MultibandSignal PqmfAnalyze(const AudioBuffer& x, const PqmfBank& bank) {
  if (x.size() < static_cast<std::size_t>(bank.prototype_length())) {
    throw LengthError("PQMF analysis needs at least " +
                      std::to_string(bank.prototype_length()) + " samples, got " +
                      std::to_string(x.size()));
  }
  const int bands = bank.num_bands();
  const AudioBuffer padded = PadToMultiple(x, static_cast<std::size_t>(bands));
  const auto n = static_cast<std::ptrdiff_t>(padded.size());
  const std::ptrdiff_t frames = n / bands;
  const int order = bank.order();
  const Eigen::MatrixXd& h = bank.analysis_filters();

  MultibandSignal out;
  out.sample_rate = x.sample_rate;
  out.original_length = x.size();
  out.bands.resize(bands, frames);
  // u_k[j] = sum_t h_k[t] x[(jB - t) mod n]. The circular window is gathered
  // once per frame and shared by every band filter.
  std::vector<double> window(static_cast<std::size_t>(order) + 1);
  for (std::ptrdiff_t j = 0; j < frames; ++j) {
    const std::ptrdiff_t anchor = j * bands;
    for (int t = 0; t <= order; ++t) {
      std::ptrdiff_t idx = (anchor - t) % n;
      if (idx < 0) idx += n;
      window[static_cast<std::size_t>(t)] = padded.samples[static_cast<std::size_t>(idx)];
    }
    for (int k = 0; k < bands; ++k) {
      double acc = 0.0;
      for (int t = 0; t <= order; ++t) acc += h(k, t) * window[static_cast<std::size_t>(t)];
      out.bands(k, j) = static_cast<float>(acc);
    }
  }
  return out;
}

AudioBuffer PqmfSynthesize(const MultibandSignal& mb, const PqmfBank& bank) {
  const int bands = bank.num_bands();
  if (mb.num_bands() != bands) {
    throw ShapeError("multiband signal has " + std::to_string(mb.num_bands()) +
                     " bands, bank expects " + std::to_string(bands));
  }
  const std::ptrdiff_t frames = mb.band_length();
  const std::ptrdiff_t n = frames * bands;
  const int order = bank.order();
  const Eigen::MatrixXd& g = bank.synthesis_filters();

  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  // Causal output c[i] = B * sum_k sum_j g_k[i - jB] u_k[j] lags the input by
  // N samples; y[i] = c[(i + N) mod n] removes the lag.
  for (std::ptrdiff_t j = 0; j < frames; ++j) {
    for (int s = 0; s <= order; ++s) {
      double acc = 0.0;
      for (int k = 0; k < bands; ++k) acc += g(k, s) * mb.bands(k, j);
      std::ptrdiff_t idx = (j * bands + s - order) % n;
      if (idx < 0) idx += n;
      y[static_cast<std::size_t>(idx)] += bands * acc;
    }
  }

  AudioBuffer out;
  out.sample_rate = mb.sample_rate;
  std::size_t length = static_cast<std::size_t>(n);
  if (mb.original_length > 0 && mb.original_length <= length) length = mb.original_length;
  out.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i) out.samples[i] = static_cast<float>(y[i]);
  return out;
}

}  // namespace fadersynth
