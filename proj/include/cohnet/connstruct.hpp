#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cohnet/dsp.hpp"

namespace cohnet {

// Rank-ordered eigenvalue spectrum of a band coherence matrix. Rank k holds
// the (k+1)-th largest eigenvalue, so the vector is channel-permutation
// invariant.
struct EigenSpectrum {
  std::string band;
  Eigen::VectorXd eigenvalues;  // sorted descending
};

EigenSpectrum eigen_spectrum(const CoherenceMatrix& matrix);

// Z-scores each column (rank) across rows (trials) with the population
// convention. Throws if any rank has zero variance.
Eigen::MatrixXd rank_zscore(const Eigen::MatrixXd& spectra);

struct ClassMeanCurves {
  Eigen::VectorXd mean_correct;
  Eigen::VectorXd mean_incorrect;
};

// Per-rank class means of z-scored spectra. `correct` holds one flag per row.
ClassMeanCurves class_mean_curves(const Eigen::MatrixXd& zscored,
                                  const std::vector<bool>& correct);

}  // namespace cohnet
