#ifndef FADERSYNTH_FFT_H_
#define FADERSYNTH_FFT_H_

#include <complex>
#include <span>

namespace fadersynth {

// Real-to-complex forward FFT of length `size`, backed by FFTW. Plans are
// created once per size and cached process-wide; Forward() is thread-safe.
class RealFft {
 public:
  explicit RealFft(int size);

  int size() const { return size_; }
  int bins() const { return size_ / 2 + 1; }

  // `in` has size() samples, `out` has bins() entries. Unnormalized.
  void Forward(std::span<const double> in, std::span<std::complex<double>> out) const;

 private:
  int size_;
  void* plan_;  // fftw_plan, owned by the process-wide cache
};

}  // namespace fadersynth

#endif  // FADERSYNTH_FFT_H_
