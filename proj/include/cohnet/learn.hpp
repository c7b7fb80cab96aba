#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cohnet/data_model.hpp"

namespace cohnet {

// Per-dimension training-fold standardization. Zero-variance dimensions are
// recorded and dropped identically at fit and apply time.
struct Scaler {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
  std::vector<bool> kept;

  Eigen::Index n_kept() const;
};

Scaler fit_scaler(const Eigen::MatrixXd& train);
Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& rows);

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;   // d x m, orthonormal columns
  Eigen::VectorXd eigenvalues;  // all d covariance eigenvalues, descending
  double explained_fraction = 0.0;
};

// Keeps the minimal leading components reaching target_fraction of the
// population covariance's variance. Component signs are fixed by making the
// largest-magnitude entry positive.
PcaModel fit_pca(const Eigen::MatrixXd& scaled_train, double target_fraction = 0.90);
Eigen::MatrixXd project(const PcaModel& model, const Eigen::MatrixXd& rows);

enum class CovarianceMode { pooled_total, per_class };

struct GaussianLlrModel {
  Eigen::VectorXd mean_fail;
  Eigen::VectorXd mean_succ;
  CovarianceMode mode = CovarianceMode::pooled_total;
  // Lower Cholesky factors of the (ridged) covariances; both reference the
  // same matrix in pooled_total mode.
  Eigen::MatrixXd chol_fail;
  Eigen::MatrixXd chol_succ;
  double log_det_fail = 0.0;
  double log_det_succ = 0.0;
  double ridge = 0.0;
};

// `fail` marks the positive class (recall failure). pooled_total uses the
// covariance of all training rows about the global mean.
GaussianLlrModel fit_gaussian_llr(const Eigen::MatrixXd& projected_train,
                                  const std::vector<bool>& fail,
                                  CovarianceMode mode = CovarianceMode::pooled_total);

double score_llr(const GaussianLlrModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd score_llr(const GaussianLlrModel& model, const Eigen::MatrixXd& rows);

// Which bands each family sums over when fusing LLRs.
struct FusionSpec {
  std::map<FeatureFamily, std::vector<std::string>> bands;
};

FusionSpec default_fusion_spec(const std::vector<FrequencyBand>& bands);

using LlrCellMap = std::map<std::pair<FeatureFamily, std::string>, Eigen::VectorXd>;

Eigen::VectorXd fuse(const LlrCellMap& llrs, const FusionSpec& spec,
                     const std::vector<FeatureFamily>& families);

// One (family, band) slice of the feature store, rows in dataset order.
struct FeatureTable {
  std::vector<std::string> subject_ids;
  std::vector<std::string> trial_ids;
  Eigen::MatrixXd features;
  std::vector<bool> fail;
};

struct LosoOptions {
  double pca_target_fraction = 0.90;
  CovarianceMode covariance_mode = CovarianceMode::pooled_total;
};

struct FoldModel {
  std::string held_out_subject;
  Scaler scaler;
  PcaModel pca;
  GaussianLlrModel llr;
};

void save_fold_model(const FoldModel& model, const std::filesystem::path& path);
FoldModel load_fold_model(const std::filesystem::path& path);

// Fits one fold on every row whose subject differs from held_out_subject.
// Rows of the held-out subject may be absent entirely; the fit is identical
// either way (the no-leakage contract).
FoldModel fit_fold(const FeatureTable& table, const std::string& held_out_subject,
                   const LosoOptions& options = {});

// Scores every trial exactly once, each by the model trained without its
// subject. Fold order follows ascending subject id; scores keep table order.
Eigen::VectorXd loso_cv(const FeatureTable& table, const LosoOptions& options = {},
                        std::vector<FoldModel>* fold_models = nullptr);

}  // namespace cohnet
