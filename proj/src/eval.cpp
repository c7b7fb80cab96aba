#include "cohnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "cohnet/errors.hpp"
#include "cohnet/util.hpp"

namespace cohnet {

namespace {

// 1-based ranks with ties assigned their midrank.
std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double auc(const Eigen::VectorXd& scores, const std::vector<bool>& fail) {
  if (static_cast<Eigen::Index>(fail.size()) != scores.size())
    throw ValidationError("AUC label count does not match score count");
  const auto n_fail = std::count(fail.begin(), fail.end(), true);
  const auto n_succ = static_cast<long>(fail.size()) - n_fail;
  if (n_fail == 0 || n_succ == 0)
    throw ValidationError("AUC needs both classes, got " + std::to_string(n_fail) +
                          " failure / " + std::to_string(n_succ) + " success");

  const std::vector<double> values(scores.data(), scores.data() + scores.size());
  const std::vector<double> ranks = midranks(values);
  double rank_sum_fail = 0.0;
  for (std::size_t i = 0; i < fail.size(); ++i)
    if (fail[i]) rank_sum_fail += ranks[i];
  const double nf = static_cast<double>(n_fail);
  return (rank_sum_fail - nf * (nf + 1.0) / 2.0) / (nf * static_cast<double>(n_succ));
}

namespace {

// Counts size-k subsets of `ranks` whose sum deviates from the mean by at
// least `threshold`. Group sizes are capped at 8, so at most C(16,8) = 12870
// subsets are visited.
void count_extreme_subsets(const std::vector<double>& ranks, std::size_t k,
                           std::size_t start, double partial_sum, double mean,
                           double threshold, std::int64_t& extreme,
                           std::int64_t& total) {
  if (k == 0) {
    ++total;
    if (std::abs(partial_sum - mean) >= threshold - 1e-9) ++extreme;
    return;
  }
  for (std::size_t i = start; i + k <= ranks.size(); ++i)
    count_extreme_subsets(ranks, k - 1, i + 1, partial_sum + ranks[i], mean,
                          threshold, extreme, total);
}

double normal_two_sided_p(double z_abs) {
  return std::erfc(z_abs / std::sqrt(2.0));
}

}  // namespace

double wilcoxon_rank_sum_p(const std::vector<double>& fail_scores,
                           const std::vector<double>& succ_scores) {
  const std::size_t n1 = fail_scores.size();
  const std::size_t n2 = succ_scores.size();
  if (n1 == 0 || n2 == 0)
    throw ValidationError("rank-sum test needs both groups non-empty");
  const std::size_t n = n1 + n2;

  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), fail_scores.begin(), fail_scores.end());
  pooled.insert(pooled.end(), succ_scores.begin(), succ_scores.end());
  const std::vector<double> ranks = midranks(pooled);

  double t_obs = 0.0;
  for (std::size_t i = 0; i < n1; ++i) t_obs += ranks[i];
  const double mean = static_cast<double>(n1) * (static_cast<double>(n) + 1.0) / 2.0;

  if (n1 <= 8 && n2 <= 8) {
    std::int64_t extreme = 0, total = 0;
    count_extreme_subsets(ranks, n1, 0, 0.0, mean, std::abs(t_obs - mean),
                          extreme, total);
    return static_cast<double>(extreme) / static_cast<double>(total);
  }

  // Tie-corrected variance of the rank sum.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double dn = static_cast<double>(n);
  const double variance =
      static_cast<double>(n1) * static_cast<double>(n2) *
      ((dn + 1.0) - tie_term / (dn * (dn - 1.0))) / 12.0;
  if (!(variance > 0.0)) return 1.0;  // every observation tied

  const double shift = std::max(0.0, std::abs(t_obs - mean) - 0.5);
  const double p = normal_two_sided_p(shift / std::sqrt(variance));
  return std::min(1.0, std::max(p, std::numeric_limits<double>::min()));
}

std::string significance_marker(double p_value) {
  if (p_value < 0.01) return "**";
  if (p_value < 0.05) return "*";
  return "";
}

namespace {

const EvalCell& find_cell(const std::vector<EvalCell>& cells,
                          const std::string& family, const std::string& band,
                          const std::string& label) {
  for (const auto& c : cells)
    if (c.family == family && c.band == band && c.label == label) return c;
  throw ValidationError("missing report cell " + family + "/" + band + "/" + label);
}

}  // namespace

std::string build_report(const std::vector<EvalCell>& cells,
                         const std::vector<std::string>& band_order) {
  const std::vector<std::pair<std::string, std::string>> columns = {
      {"connectivity_structure", "connstruct"},
      {"graph_variability", "graphvar"},
      {"log_power", "power"},
  };
  const std::vector<std::string> labels = {"digit", "sentence"};

  std::ostringstream os;
  os << "band";
  for (const auto& label : labels)
    for (const auto& [family, short_name] : columns)
      os << ',' << label << '_' << short_name << ',' << label << '_' << short_name
         << "_sig";
  os << '\n';

  std::vector<std::string> rows = band_order;
  rows.push_back("combined");
  for (const auto& band : rows) {
    os << (band == "combined" ? "Comb." : band);
    for (const auto& label : labels)
      for (const auto& [family, short_name] : columns) {
        const EvalCell& cell = find_cell(cells, family, band, label);
        os << ',' << format_fixed(cell.auc, 4) << ','
           << significance_marker(cell.p_value);
      }
    os << '\n';
  }
  return os.str();
}

std::string build_fusion_report(const std::vector<EvalCell>& fusion_cells) {
  std::ostringstream os;
  os << "label,auc,sig,p_value,n_fail,n_succ\n";
  for (const auto& label : {"digit", "sentence"}) {
    const EvalCell& cell = find_cell(fusion_cells, "all", "combined", label);
    os << label << ',' << format_fixed(cell.auc, 4) << ','
       << significance_marker(cell.p_value) << ',' << format_fixed(cell.p_value, 6)
       << ',' << cell.n_fail << ',' << cell.n_succ << '\n';
  }
  return os.str();
}

}  // namespace cohnet
