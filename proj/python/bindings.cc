#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fadersynth/checkpoint.h"
#include "fadersynth/config.h"
#include "fadersynth/corpus.h"
#include "fadersynth/descriptors.h"
#include "fadersynth/errors.h"
#include "fadersynth/evaluation.h"
#include "fadersynth/pqmf.h"
#include "fadersynth/quantizer.h"
#include "fadersynth/spectral.h"
#include "fadersynth/stats.h"
#include "fadersynth/training.h"

namespace py = pybind11;
using namespace fadersynth;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

AudioBuffer ToAudio(const FloatArray& samples, int sample_rate) {
  if (samples.ndim() != 1) throw ShapeError("audio must be a 1-d array");
  AudioBuffer x(std::vector<float>(samples.data(), samples.data() + samples.size()), sample_rate);
  ValidateAudio(x);
  return x;
}

py::array_t<float> ToArray(const AudioBuffer& x) {
  py::array_t<float> out(static_cast<py::ssize_t>(x.size()));
  std::copy(x.samples.begin(), x.samples.end(), out.mutable_data());
  return out;
}

std::vector<double> ToVector(const DoubleArray& a) { return {a.data(), a.data() + a.size()}; }

// Attribute tracks as {kind name: values}.
py::dict TrackToDict(const AttributeTrack& t) {
  py::dict d;
  for (int i = 0; i < t.num_kinds(); ++i) {
    d[py::str(DescriptorName(t.kinds[static_cast<std::size_t>(i)]))] = py::cast(t.Row(i));
  }
  return d;
}

AttributeTrack DictToTrack(const py::dict& d, const std::vector<DescriptorKind>& kinds, int frame_size, int hop) {
  AttributeTrack t;
  t.kinds = kinds;
  t.frame_size = frame_size;
  t.frame_hop = hop;
  long frames = -1;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const std::string name = DescriptorName(kinds[i]);
    if (!d.contains(name)) throw ConfigError("missing attribute track '" + name + "'");
    const auto row = d[py::str(name)].cast<std::vector<double>>();
    if (frames < 0) {
      frames = static_cast<long>(row.size());
      t.values.resize(static_cast<Eigen::Index>(kinds.size()), frames);
    } else if (static_cast<long>(row.size()) != frames) {
      throw ShapeError("attribute tracks differ in length");
    }
    for (long f = 0; f < frames; ++f) t.values(static_cast<Eigen::Index>(i), f) = row[static_cast<std::size_t>(f)];
  }
  return t;
}

// Inference wrapper over a loaded checkpoint.
class PyModel {
 public:
  explicit PyModel(const std::string& path) : ck_(LoadCheckpoint(path)), model_(ck_.model) {}

  int sample_rate() const { return ck_.model->config().sample_rate; }
  int hop_length() const { return ck_.model->config().hop_length(); }
  std::vector<std::string> kinds() const { return DescriptorNames(ck_.model->config().kinds); }
  long step() const { return ck_.meta.step; }

  Eigen::MatrixXd Encode(const FloatArray& x) const {
    const torch::Tensor z = model_.Encode(ToAudio(x, sample_rate()));
    return TensorToMatrix(z.squeeze(0).to(torch::kFloat64));
  }
  py::array_t<float> Decode(const Eigen::MatrixXd& z, const py::dict& attrs) const {
    const auto& c = ck_.model->config();
    const torch::Tensor zt = MatrixToTensor(z).unsqueeze(0);
    return ToArray(model_.Decode(zt, DictToTrack(attrs, c.kinds, c.frame_size, c.frame_hop), sample_rate()));
  }
  py::dict Describe(const FloatArray& x) const { return TrackToDict(model_.Describe(ToAudio(x, sample_rate()))); }
  py::array_t<float> AttributeTransferPy(const FloatArray& x, const py::dict& attrs) const {
    const auto& c = ck_.model->config();
    return ToArray(AttributeTransfer(model_, ToAudio(x, sample_rate()),
                                     DictToTrack(attrs, c.kinds, c.frame_size, c.frame_hop)));
  }
  py::array_t<float> TimbreTransferPy(const FloatArray& timbre, const FloatArray& attrs_from) const {
    return ToArray(TimbreTransfer(model_, ToAudio(timbre, sample_rate()), ToAudio(attrs_from, sample_rate())));
  }
  py::dict Evaluate(const std::vector<FloatArray>& items) const {
    std::vector<AudioBuffer> xs;
    for (const auto& a : items) xs.push_back(ToAudio(a, sample_rate()));
    const MetricsReport r = EvaluateModel(model_, xs, LogMelL1Proxy());
    return py::module_::import("json").attr("loads")(r.ToJson().dump());
  }

 private:
  LoadedCheckpoint ck_;
  FaderAudioModel model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core: PQMF, spectral distances, descriptors, quantization, training and inference.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<LengthError>(m, "LengthError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DegenerateDistributionError>(m, "DegenerateDistributionError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<PqmfBank>(m, "PqmfBank")
      .def_property_readonly("num_bands", &PqmfBank::num_bands)
      .def_property_readonly("prototype_length", &PqmfBank::prototype_length)
      .def_property_readonly("delay", &PqmfBank::delay)
      .def_property_readonly("achieved_attenuation_db", &PqmfBank::achieved_attenuation_db)
      .def_property_readonly("prototype", &PqmfBank::prototype);

  m.def("design_pqmf", &DesignPqmf, py::arg("num_bands") = 8, py::arg("taps_per_band") = 64,
        py::arg("attenuation_db") = 100.0);
  m.def(
      "pqmf_analyze",
      [](const FloatArray& x, const PqmfBank& bank, int sr) -> Eigen::MatrixXf {
        return PqmfAnalyze(ToAudio(x, sr), bank).bands;
      },
      py::arg("x"), py::arg("bank"), py::arg("sample_rate") = 16000);
  m.def(
      "pqmf_synthesize",
      [](const Eigen::MatrixXf& bands, const PqmfBank& bank, int sr) {
        MultibandSignal mb;
        mb.bands = bands;
        mb.sample_rate = sr;
        return ToArray(PqmfSynthesize(mb, bank));
      },
      py::arg("bands"), py::arg("bank"), py::arg("sample_rate") = 16000);

  m.def(
      "spectrogram",
      [](const FloatArray& x, int fft_size, int hop, int sr) { return Spectrogram(ToAudio(x, sr), fft_size, hop); },
      py::arg("x"), py::arg("fft_size"), py::arg("hop"), py::arg("sample_rate") = 16000);
  m.def(
      "mel_spectrogram",
      [](const FloatArray& x, int bands, int fft_size, int hop, int sr) {
        return MelSpectrogram(ToAudio(x, sr), bands, fft_size, hop);
      },
      py::arg("x"), py::arg("mel_bands") = 64, py::arg("fft_size") = 1024, py::arg("hop") = 256,
      py::arg("sample_rate") = 16000);
  m.def(
      "multiscale_spectral_distance",
      [](const FloatArray& x, const FloatArray& y, int sr) {
        return MultiscaleSpectralDistance(ToAudio(x, sr), ToAudio(y, sr));
      },
      py::arg("x"), py::arg("x_hat"), py::arg("sample_rate") = 16000);

  m.def(
      "descriptor_track",
      [](const std::string& kind, const FloatArray& x, int sr, int frame_size, int hop) {
        return DescriptorTrack(ParseDescriptorKind(kind), ToAudio(x, sr), frame_size, hop);
      },
      py::arg("kind"), py::arg("x"), py::arg("sample_rate") = 16000, py::arg("frame_size") = kDefaultFrameSize,
      py::arg("hop") = kDefaultFrameHop);
  m.def(
      "compute_attribute_set",
      [](const FloatArray& x, const std::vector<std::string>& kinds, int sr) {
        return TrackToDict(ComputeAttributeSet(ToAudio(x, sr), ParseDescriptorKinds(kinds)));
      },
      py::arg("x"), py::arg("kinds"), py::arg("sample_rate") = 16000);
  m.def(
      "resample_track", [](const DoubleArray& t, int m) { return ResampleTrack(ToVector(t), m); }, py::arg("track"),
      py::arg("target_len"));

  m.def(
      "fit_quantizer",
      [](const DoubleArray& values, int k, const DoubleArray& rms, double threshold) {
        const BinFit fit = FitQuantizer(ToVector(values), k, ToVector(rms), threshold);
        return py::make_tuple(fit.edges, fit.labels);
      },
      py::arg("values"), py::arg("num_bins"), py::arg("rms_track"),
      py::arg("rms_threshold") = kDefaultSilenceThreshold,
      "Returns (edges, labels); silent values get label -1.");
  m.def(
      "spearman",
      [](const DoubleArray& a, const DoubleArray& b) { return Spearman(ToVector(a), ToVector(b)); },
      py::arg("a"), py::arg("b"), "None when either input is constant.");

  m.def(
      "warmup",
      [](long step) { return Warmup(step, TrainConfig{}); }, py::arg("step"),
      "(beta, lambda) under the default schedule.");

  m.def(
      "make_toy_corpus",
      [](int n, int sr, std::uint64_t seed) {
        const Corpus corpus = MakeToyCorpus(n, sr, seed);
        std::vector<py::array_t<float>> out;
        for (const auto& item : corpus.items()) out.push_back(ToArray(item.audio));
        return out;
      },
      py::arg("n_items"), py::arg("sample_rate") = 16000, py::arg("seed") = 0);
  m.def(
      "read_wav",
      [](const std::string& path) {
        const AudioBuffer x = ReadWav(path);
        return py::make_tuple(ToArray(x), x.sample_rate);
      },
      py::arg("path"));
  m.def(
      "write_wav", [](const std::string& path, const FloatArray& x, int sr) { WriteWav(path, ToAudio(x, sr)); },
      py::arg("path"), py::arg("x"), py::arg("sample_rate") = 16000);

  m.def(
      "train",
      [](const std::string& config_yaml) {
        py::gil_scoped_release release;
        const TrainSummary s = Train(ParseTrainConfig(config_yaml));
        return s.final_checkpoint;
      },
      py::arg("config_yaml"), "Trains from YAML text and returns the final checkpoint path.");

  py::class_<PyModel>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def_property_readonly("sample_rate", &PyModel::sample_rate)
      .def_property_readonly("hop_length", &PyModel::hop_length)
      .def_property_readonly("kinds", &PyModel::kinds)
      .def_property_readonly("step", &PyModel::step)
      .def("encode", &PyModel::Encode, py::arg("x"), "Posterior mean, shape (d, m).")
      .def("decode", &PyModel::Decode, py::arg("z"), py::arg("attrs"))
      .def("describe", &PyModel::Describe, py::arg("x"))
      .def("attribute_transfer", &PyModel::AttributeTransferPy, py::arg("x"), py::arg("attrs"))
      .def("timbre_transfer", &PyModel::TimbreTransferPy, py::arg("x_timbre"), py::arg("x_attrs"))
      .def("evaluate", &PyModel::Evaluate, py::arg("items"));
}
