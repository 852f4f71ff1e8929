#include "fadersynth/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "fadersynth/errors.h"

namespace fadersynth {
namespace {

std::mutex g_plan_mutex;

fftw_plan PlanFor(int size) {
  // Plans live for the process lifetime; FFTW's planner is not thread-safe.
  static std::map<int, fftw_plan>* cache = new std::map<int, fftw_plan>();
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto it = cache->find(size);
  if (it != cache->end()) return it->second;
  std::vector<double> in(static_cast<std::size_t>(size));
  std::vector<fftw_complex> out(static_cast<std::size_t>(size / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(size, in.data(), out.data(),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw ConfigError("FFTW could not plan size " + std::to_string(size));
  cache->emplace(size, plan);
  return plan;
}

}  // namespace

RealFft::RealFft(int size) : size_(size), plan_(nullptr) {
  if (size < 1) throw ConfigError("FFT size must be positive");
  plan_ = PlanFor(size);
}

void RealFft::Forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != static_cast<std::size_t>(size_) ||
      out.size() != static_cast<std::size_t>(bins())) {
    throw ShapeError("FFT buffer size mismatch");
  }
  // fftw_execute_dft_r2c does not modify the input for out-of-place r2c.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace fadersynth
