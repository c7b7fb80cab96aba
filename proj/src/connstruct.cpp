#include "cohnet/connstruct.hpp"

#include <algorithm>
#include <cmath>

#include "cohnet/errors.hpp"
#include "cohnet/util.hpp"

namespace cohnet {

EigenSpectrum eigen_spectrum(const CoherenceMatrix& matrix) {
  const Eigen::MatrixXd& c = matrix.values;
  if (c.rows() == 0 || c.rows() != c.cols())
    throw ValidationError("coherence matrix must be square and non-empty, got " +
                          std::to_string(c.rows()) + "x" + std::to_string(c.cols()));
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw ValidationError("coherence matrix for band " + matrix.band +
                          " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
  if (solver.info() != Eigen::Success) {
    const double max_abs = c.cwiseAbs().maxCoeff();
    const double min_diag = c.diagonal().minCoeff();
    throw ValidationError("eigensolver failed on band " + matrix.band +
                          " matrix (max |entry| " + format_full(max_abs) +
                          ", min diagonal " + format_full(min_diag) + ")");
  }
  EigenSpectrum out;
  out.band = matrix.band;
  out.eigenvalues = solver.eigenvalues().reverse();  // ascending -> descending
  return out;
}

Eigen::MatrixXd rank_zscore(const Eigen::MatrixXd& spectra) {
  const Eigen::Index n = spectra.rows();
  if (n < 2)
    throw ValidationError("rank z-score needs at least 2 trials, got " +
                          std::to_string(n));
  Eigen::MatrixXd out(spectra.rows(), spectra.cols());
  for (Eigen::Index rank = 0; rank < spectra.cols(); ++rank) {
    const double mean = spectra.col(rank).mean();
    const double sd = population_std(spectra.col(rank));
    if (!(sd > 0.0))
      throw ValidationError("zero variance at feature rank " + std::to_string(rank));
    out.col(rank) = (spectra.col(rank).array() - mean) / sd;
  }
  return out;
}

ClassMeanCurves class_mean_curves(const Eigen::MatrixXd& zscored,
                                  const std::vector<bool>& correct) {
  if (static_cast<Eigen::Index>(correct.size()) != zscored.rows())
    throw ValidationError("label count " + std::to_string(correct.size()) +
                          " does not match trial count " +
                          std::to_string(zscored.rows()));
  const auto n_correct = std::count(correct.begin(), correct.end(), true);
  const auto n_incorrect = static_cast<long>(correct.size()) - n_correct;
  if (n_correct == 0 || n_incorrect == 0)
    throw ValidationError("class mean curves need both classes present");

  ClassMeanCurves out;
  out.mean_correct = Eigen::VectorXd::Zero(zscored.cols());
  out.mean_incorrect = Eigen::VectorXd::Zero(zscored.cols());
  for (Eigen::Index i = 0; i < zscored.rows(); ++i) {
    if (correct[static_cast<std::size_t>(i)])
      out.mean_correct += zscored.row(i).transpose();
    else
      out.mean_incorrect += zscored.row(i).transpose();
  }
  out.mean_correct /= static_cast<double>(n_correct);
  out.mean_incorrect /= static_cast<double>(n_incorrect);
  return out;
}

}  // namespace cohnet
