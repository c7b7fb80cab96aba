#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cohnet/data_model.hpp"
#include "cohnet/dsp.hpp"
#include "cohnet/graphnet.hpp"
#include "cohnet/learn.hpp"
#include "cohnet/synthgen.hpp"

namespace cohnet {

// Every tunable of the pipeline. Loaded from a flat `key = value` file with
// dotted prefixes (e.g. `spectral.segment_length_s = 1.0`); `#` starts a
// comment line; unknown or duplicate keys are rejected.
struct PipelineConfig {
  std::vector<FrequencyBand> bands;
  SpectralConfig spectral;
  std::vector<double> graph_costs = kDefaultCostLevels;
  double pca_target_fraction = 0.90;
  CovarianceMode covariance_mode = CovarianceMode::pooled_total;
  FusionSpec fusion;
  double highpass_hz = 0.1;
  double notch_hz = 60.0;
  double notch_q = 30.0;
  SynthConfig synth;
};

PipelineConfig default_pipeline_config();
PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace cohnet
