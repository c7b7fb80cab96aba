#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cohnet {

// Probability that a random failure trial scores above a random success
// trial; ties count half. `fail` marks the positive class per score.
double auc(const Eigen::VectorXd& scores, const std::vector<bool>& fail);

// Two-sided rank-sum p-value with midrank tie handling. Exact enumeration
// when both groups have <= 8 members, normal approximation with tie-corrected
// variance and continuity correction otherwise.
double wilcoxon_rank_sum_p(const std::vector<double>& fail_scores,
                           const std::vector<double>& succ_scores);

// "**" below 0.01, "*" below 0.05, empty otherwise.
std::string significance_marker(double p_value);

struct EvalCell {
  std::string family;  // connectivity_structure / graph_variability / log_power / all
  std::string band;    // band name or "combined"
  std::string label;   // digit or sentence
  double auc = 0.0;
  double p_value = 1.0;
  int n_fail = 0;
  int n_succ = 0;
};

// Renders the per-family table: one row per band plus "Comb.", value and
// significance twin columns for family x label. Throws on missing cells.
std::string build_report(const std::vector<EvalCell>& cells,
                         const std::vector<std::string>& band_order);

// Renders the all-family fusion rows (one per label).
std::string build_fusion_report(const std::vector<EvalCell>& fusion_cells);

}  // namespace cohnet
