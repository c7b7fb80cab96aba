#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace cohnet {

// One analysis band. Default edges partition [4, 50) Hz; half-open
// membership lo_hz <= f < hi_hz keeps frequency bins disjoint.
struct FrequencyBand {
  std::string name;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

// theta [4,8), alpha [8,12), beta [12,30), gamma [30,50)
std::vector<FrequencyBand> default_bands();

// Bands must be ascending, non-overlapping, with 0 < lo < hi.
void validate_bands(const std::vector<FrequencyBand>& bands);

const FrequencyBand& band_by_name(const std::vector<FrequencyBand>& bands,
                                  const std::string& name);

// One recording epoch. samples is channel-major: row c holds every sample
// of channel c. Labels store *correct* recall; the detection-positive class
// everywhere downstream is failure = !correct.
struct Trial {
  std::string subject_id;
  std::string trial_id;
  double sample_rate_hz = 0.0;
  Eigen::MatrixXd samples;  // n_channels x n_samples
  bool digit_correct = false;
  bool sentence_correct = false;

  Eigen::Index n_channels() const { return samples.rows(); }
  Eigen::Index n_samples() const { return samples.cols(); }
  double duration_s() const {
    return static_cast<double>(samples.cols()) / sample_rate_hz;
  }
};

struct TrialDescriptor {
  std::string subject_id;
  std::string trial_id;
  std::filesystem::path signal_path;  // resolved against the manifest dir
  double sample_rate_hz = 0.0;
  std::int64_t n_channels = 0;
  std::int64_t n_samples = 0;
  bool digit_correct = false;
  bool sentence_correct = false;

  double duration_s() const {
    return static_cast<double>(n_samples) / sample_rate_hz;
  }
};

struct Dataset {
  std::vector<TrialDescriptor> trials;
  std::set<std::string> subjects;
};

// Manifest CSV: header row
//   subject_id,trial_id,signal_path,sample_rate_hz,n_channels,n_samples,digit_correct,sentence_correct
// with signal paths relative to the manifest's directory.
Dataset load_manifest(const std::filesystem::path& path);
void write_manifest(const Dataset& ds, const std::filesystem::path& path);

// Signal file: raw little-endian IEEE-754 float32, channel-major,
// exactly n_channels * n_samples values, no header.
Trial load_trial(const TrialDescriptor& d);
void write_signal(const Eigen::MatrixXd& samples,
                  const std::filesystem::path& path);

// Advisory checks only; hard invariants are enforced by load_trial.
std::vector<std::string> validate_dataset(const Dataset& ds);

enum class FeatureFamily { connectivity_structure, graph_variability, log_power };

std::string to_string(FeatureFamily f);
FeatureFamily family_from_string(const std::string& s);

struct FeatureRecord {
  std::string subject_id;
  std::string trial_id;
  FeatureFamily family = FeatureFamily::connectivity_structure;
  std::string band;
  Eigen::VectorXd values;
};

// Feature store CSV (long format): subject_id,trial_id,family,band,dim,value
void write_feature_store(const std::vector<FeatureRecord>& records,
                         const std::filesystem::path& path);
std::vector<FeatureRecord> read_feature_store(const std::filesystem::path& path);

}  // namespace cohnet
