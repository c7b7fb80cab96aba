#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cohnet/connstruct.hpp"
#include "cohnet/data_model.hpp"
#include "cohnet/dsp.hpp"
#include "cohnet/eval.hpp"
#include "cohnet/graphnet.hpp"
#include "cohnet/synthgen.hpp"

namespace py = pybind11;
using namespace cohnet;

namespace {

Trial make_trial(const Eigen::MatrixXd& samples, double sample_rate_hz) {
  Trial t;
  t.subject_id = "py";
  t.trial_id = "py";
  t.sample_rate_hz = sample_rate_hz;
  t.samples = samples;
  return t;
}

CoherenceMatrix make_matrix(const Eigen::MatrixXd& values, const std::string& band) {
  CoherenceMatrix m;
  m.band = band;
  m.values = values;
  return m;
}

SynthConfig make_synth_config(std::uint64_t seed, double sample_rate_hz,
                              double duration_lo_s, double duration_hi_s,
                              int n_channels, double jitter,
                              const std::map<std::string, double>& gain_succ,
                              const std::map<std::string, double>& gain_fail) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.sample_rate_hz = sample_rate_hz;
  cfg.duration_lo_s = duration_lo_s;
  cfg.duration_hi_s = duration_hi_s;
  cfg.n_channels = n_channels;
  cfg.subject_scale_jitter = jitter;
  cfg.gain_succ = gain_succ;
  cfg.gain_fail = gain_fail;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_cohnet, m) {
  m.doc() = "Functional-connectivity feature extraction and evaluation core";

  m.def(
      "coherence_matrix",
      [](const Eigen::MatrixXd& samples, double sample_rate_hz, double lo_hz,
         double hi_hz, double segment_length_s, double overlap_fraction) {
        SpectralConfig cfg{segment_length_s, overlap_fraction};
        const FrequencyBand band{"band", lo_hz, hi_hz};
        return coherence_matrix(make_trial(samples, sample_rate_hz), band, cfg)
            .values;
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("lo_hz"),
      py::arg("hi_hz"), py::arg("segment_length_s") = 1.0,
      py::arg("overlap_fraction") = 0.5,
      "Band-averaged magnitude-squared coherence between all channel pairs");

  m.def(
      "band_log_power",
      [](const Eigen::MatrixXd& samples, double sample_rate_hz, double lo_hz,
         double hi_hz, double segment_length_s, double overlap_fraction) {
        SpectralConfig cfg{segment_length_s, overlap_fraction};
        const FrequencyBand band{"band", lo_hz, hi_hz};
        return band_log_power(make_trial(samples, sample_rate_hz), band, cfg)
            .values;
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("lo_hz"),
      py::arg("hi_hz"), py::arg("segment_length_s") = 1.0,
      py::arg("overlap_fraction") = 0.5,
      "Natural log of mean in-band power spectral density per channel");

  m.def(
      "eigen_spectrum",
      [](const Eigen::MatrixXd& coherence) {
        return eigen_spectrum(make_matrix(coherence, "band")).eigenvalues;
      },
      py::arg("coherence"), "Descending eigenvalues of a coherence matrix");

  m.def(
      "variability_features",
      [](const Eigen::MatrixXd& coherence, const std::vector<double>& costs) {
        return variability_features(make_matrix(coherence, "band"), costs).values;
      },
      py::arg("coherence"), py::arg("costs") = kDefaultCostLevels,
      "Std of APL and node degree at each wiring cost");

  m.def(
      "highpass",
      [](const Eigen::MatrixXd& samples, double sample_rate_hz, double cutoff_hz) {
        return highpass_filter(make_trial(samples, sample_rate_hz), cutoff_hz)
            .samples;
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("cutoff_hz") = 0.1,
      "Zero-phase 4th-order Butterworth highpass per channel");

  m.def(
      "notch",
      [](const Eigen::MatrixXd& samples, double sample_rate_hz, double center_hz,
         double q) {
        return notch_filter(make_trial(samples, sample_rate_hz), center_hz, q)
            .samples;
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("center_hz") = 60.0,
      py::arg("q") = 30.0, "Zero-phase biquad notch per channel");

  m.def(
      "auc",
      [](const Eigen::VectorXd& scores, const std::vector<bool>& fail) {
        return auc(scores, fail);
      },
      py::arg("scores"), py::arg("fail"),
      "Area under the ROC curve; `fail` marks the positive class");

  m.def("wilcoxon_p", &wilcoxon_rank_sum_p, py::arg("fail_scores"),
        py::arg("succ_scores"), "Two-sided rank-sum p-value");

  m.def(
      "generate_trial",
      [](std::uint64_t seed, int subject, int trial, bool digit_fail,
         bool sentence_fail, double sample_rate_hz, double duration_lo_s,
         double duration_hi_s, int n_channels, double jitter,
         const std::map<std::string, double>& gain_succ,
         const std::map<std::string, double>& gain_fail) {
        const SynthConfig cfg =
            make_synth_config(seed, sample_rate_hz, duration_lo_s, duration_hi_s,
                              n_channels, jitter, gain_succ, gain_fail);
        TrialLabels labels{digit_fail, sentence_fail};
        return generate_trial(cfg, default_bands(), subject, trial, labels).samples;
      },
      py::arg("seed"), py::arg("subject"), py::arg("trial"),
      py::arg("digit_fail") = false, py::arg("sentence_fail") = false,
      py::arg("sample_rate_hz") = 256.0, py::arg("duration_lo_s") = 3.8,
      py::arg("duration_hi_s") = 7.7, py::arg("n_channels") = 64,
      py::arg("jitter") = 0.1,
      py::arg("gain_succ") = std::map<std::string, double>{},
      py::arg("gain_fail") = std::map<std::string, double>{},
      "Deterministic synthetic trial (channels x samples)");

  m.def("default_band_edges", [] {
    std::map<std::string, std::pair<double, double>> out;
    for (const auto& b : default_bands()) out[b.name] = {b.lo_hz, b.hi_hz};
    return out;
  });
}
