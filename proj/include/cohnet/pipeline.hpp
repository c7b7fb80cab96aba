#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cohnet/config.hpp"
#include "cohnet/data_model.hpp"
#include "cohnet/eval.hpp"
#include "cohnet/learn.hpp"

namespace cohnet {

// --------------------------------------------------------------------------
// Labels sidecar: the feature store carries no labels, so extract writes
// them next to it (features.csv -> features.labels.csv) for eval/curves.
// --------------------------------------------------------------------------

struct TrialLabelRow {
  std::string trial_id;
  std::string subject_id;
  bool digit_correct = false;
  bool sentence_correct = false;
};

std::filesystem::path labels_sidecar_path(const std::filesystem::path& features_path);
void write_labels_sidecar(const std::vector<TrialLabelRow>& rows,
                          const std::filesystem::path& path);
std::vector<TrialLabelRow> read_labels_sidecar(const std::filesystem::path& path);

// --------------------------------------------------------------------------
// Extraction
// --------------------------------------------------------------------------

// All 3 families x all bands for one already-loaded trial: highpass, notch,
// one Welch pass, then per-band eigenspectrum / graph variability / log-power.
std::vector<FeatureRecord> extract_trial_features(const Trial& trial,
                                                  const PipelineConfig& config);

struct ExtractOptions {
  bool skip_bad = false;
  bool quiet = false;
  int threads = 0;  // 0 = machine parallelism
  std::filesystem::path dump_coherence_dir;  // empty = no dump
  std::filesystem::path dump_edges_dir;
};

void run_extract(const std::filesystem::path& manifest_path,
                 const PipelineConfig& config,
                 const std::filesystem::path& features_path,
                 const ExtractOptions& options = {});

void run_synth(const PipelineConfig& config, const std::filesystem::path& out_dir);

// --------------------------------------------------------------------------
// Evaluation
// --------------------------------------------------------------------------

struct LabelEval {
  std::string label;  // digit or sentence
  std::vector<std::string> trial_ids;
  std::vector<std::string> subject_ids;
  std::vector<bool> fail;
  std::vector<EvalCell> cells;  // per family x (bands + combined), plus all/combined
  LlrCellMap llr_cells;
  std::map<FeatureFamily, Eigen::VectorXd> family_fused;
  Eigen::VectorXd all_fused;
};

LabelEval evaluate_label(const std::vector<FeatureRecord>& records,
                         const std::vector<TrialLabelRow>& labels,
                         const PipelineConfig& config, const std::string& label,
                         int threads = 0);

struct EvalOptions {
  std::string label = "both";  // digit, sentence or both
  int threads = 0;
};

void run_eval(const std::filesystem::path& features_path,
              const PipelineConfig& config, const std::filesystem::path& out_dir,
              const EvalOptions& options = {});

// --------------------------------------------------------------------------
// Figure curves
// --------------------------------------------------------------------------

void run_curves(const std::filesystem::path& features_path,
                const PipelineConfig& config, const std::filesystem::path& out_dir,
                const std::string& label = "digit");

}  // namespace cohnet
