#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cohnet/eval.hpp>
#include <cohnet/errors.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "oracle_support.hpp"

using namespace cohnet;

namespace {

double auc_of(const std::vector<double>& scores, const std::vector<bool>& fail) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(scores.size()));
  for (std::size_t i = 0; i < scores.size(); ++i)
    s[static_cast<Eigen::Index>(i)] = scores[i];
  return auc(s, fail);
}

}  // namespace

// --- AUC ------------------------------------------------------------------

TEST_CASE("AUC handles the canonical spot checks") {
  CHECK(auc_of({0.9, 0.4, 0.7}, {true, false, false}) == 1.0);
  CHECK(auc_of({0.9, 0.8, 0.7}, {false, true, false}) == 0.5);
  CHECK(auc_of({0.1, 0.8}, {true, false}) == 0.0);
  CHECK(auc_of({1.0, 1.0, 1.0, 1.0}, {true, true, false, false}) == 0.5);
  CHECK(auc_of({2.0, 1.0, 2.0}, {true, false, false}) == 0.75);
}

TEST_CASE("AUC equals exhaustive pair counting on 500 random sets") {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> n_dist(2, 50);
  std::uniform_int_distribution<int> v_dist(0, 9);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const int n = n_dist(rng);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<bool> fail(static_cast<std::size_t>(n));
    int n_fail = 0;
    for (int i = 0; i < n; ++i) {
      // Coarse integer scores force plenty of ties.
      scores[static_cast<std::size_t>(i)] =
          uni(rng) < 0.5 ? static_cast<double>(v_dist(rng)) : uni(rng);
      fail[static_cast<std::size_t>(i)] = uni(rng) < 0.5;
      if (fail[static_cast<std::size_t>(i)]) ++n_fail;
    }
    if (n_fail == 0) fail[0] = true;
    if (n_fail == n) fail[0] = false;
    CHECK(auc_of(scores, fail) == oracle::pair_count_auc(scores, fail));
  }
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> scores(40);
  std::vector<bool> fail(40);
  for (int i = 0; i < 40; ++i) {
    scores[static_cast<std::size_t>(i)] = gauss(rng);
    fail[static_cast<std::size_t>(i)] = i % 3 == 0;
  }
  const double base = auc_of(scores, fail);

  std::vector<double> expd(40), affine(40);
  for (int i = 0; i < 40; ++i) {
    expd[static_cast<std::size_t>(i)] = std::exp(scores[static_cast<std::size_t>(i)]);
    affine[static_cast<std::size_t>(i)] = 3.0 * scores[static_cast<std::size_t>(i)] + 11.0;
  }
  CHECK(std::abs(auc_of(expd, fail) - base) <= 1e-12);
  CHECK(std::abs(auc_of(affine, fail) - base) <= 1e-12);

  // Negating scores mirrors the AUC (no ties in Gaussian draws).
  std::vector<double> negated(40);
  for (int i = 0; i < 40; ++i)
    negated[static_cast<std::size_t>(i)] = -scores[static_cast<std::size_t>(i)];
  CHECK(auc_of(negated, fail) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("AUC rejects single-class inputs") {
  CHECK_THROWS_AS(auc_of({1.0, 2.0}, {true, true}), ValidationError);
  CHECK_THROWS_AS(auc_of({1.0, 2.0}, {false, false}), ValidationError);
  CHECK_THROWS_AS(auc_of({1.0, 2.0}, {true, false, false}), ValidationError);
}

// --- Wilcoxon rank-sum -------------------------------------------------------

TEST_CASE("exact rank-sum p for {1,2} vs {3,4} is 1/3") {
  CHECK(wilcoxon_rank_sum_p({1.0, 2.0}, {3.0, 4.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // Symmetric in the group order.
  CHECK(wilcoxon_rank_sum_p({3.0, 4.0}, {1.0, 2.0}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("exact enumeration matches hand-counted small cases") {
  // {1} vs {2}: both assignments are equally extreme -> p = 1.
  CHECK(wilcoxon_rank_sum_p({1.0}, {2.0}) == doctest::Approx(1.0));
  // {1,2,3} vs {4,5,6}: only 2 of C(6,3)=20 subsets are as extreme.
  CHECK(wilcoxon_rank_sum_p({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}) ==
        doctest::Approx(2.0 / 20.0).epsilon(1e-12));
  // Identical values: every subset ties the observed statistic.
  CHECK(wilcoxon_rank_sum_p({5.0, 5.0}, {5.0, 5.0}) == doctest::Approx(1.0));
}

TEST_CASE("p-values are symmetric under swapping groups") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    std::uniform_int_distribution<int> n_dist(2, 14);
    const int na = n_dist(rng), nb = n_dist(rng);
    std::vector<double> a(static_cast<std::size_t>(na)), b(static_cast<std::size_t>(nb));
    for (auto& v : a) v = std::round(gauss(rng) * 2.0) / 2.0;  // induce ties
    for (auto& v : b) v = std::round(gauss(rng) * 2.0) / 2.0;
    const double pab = wilcoxon_rank_sum_p(a, b);
    const double pba = wilcoxon_rank_sum_p(b, a);
    CHECK(std::abs(pab - pba) <= 1e-12);
    CHECK(pab > 0.0);
    CHECK(pab <= 1.0);
  }
}

TEST_CASE("normal approximation is calibrated under the null") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int above = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(20), b(25);
    for (auto& v : a) v = gauss(rng);
    for (auto& v : b) v = gauss(rng);
    if (wilcoxon_rank_sum_p(a, b) > 0.05) ++above;
  }
  CHECK(above >= 90);
}

TEST_CASE("normal approximation tracks the exact tail where they meet") {
  // 8 vs 8 uses the exact path; 8 vs 9 the approximation. A strong shift
  // should give small p on both, same order of magnitude.
  std::vector<double> lo, hi;
  for (int i = 0; i < 8; ++i) lo.push_back(static_cast<double>(i));
  for (int i = 0; i < 9; ++i) hi.push_back(static_cast<double>(20 + i));
  const double p_exact = wilcoxon_rank_sum_p(lo, std::vector<double>(hi.begin(), hi.begin() + 8));
  const double p_approx = wilcoxon_rank_sum_p(lo, hi);
  CHECK(p_exact < 0.001);
  CHECK(p_approx < 0.001);
}

TEST_CASE("wilcoxon requires both groups non-empty") {
  CHECK_THROWS_AS(wilcoxon_rank_sum_p({}, {1.0}), ValidationError);
  CHECK_THROWS_AS(wilcoxon_rank_sum_p({1.0}, {}), ValidationError);
}

TEST_CASE("significance markers follow the 0.05 / 0.01 thresholds") {
  CHECK(significance_marker(0.2) == "");
  CHECK(significance_marker(0.05) == "");
  CHECK(significance_marker(0.049) == "*");
  CHECK(significance_marker(0.01) == "*");
  CHECK(significance_marker(0.0099) == "**");
  CHECK(significance_marker(0.0) == "**");
}

// --- report rendering ---------------------------------------------------------

namespace {

std::vector<EvalCell> full_cell_grid() {
  std::vector<EvalCell> cells;
  const std::vector<std::string> families = {"connectivity_structure",
                                             "graph_variability", "log_power"};
  const std::vector<std::string> bands = {"theta", "alpha", "beta", "gamma",
                                          "combined"};
  double v = 0.50;
  for (const auto& label : {"digit", "sentence"})
    for (const auto& family : families)
      for (const auto& band : bands) {
        EvalCell c;
        c.family = family;
        c.band = band;
        c.label = label;
        c.auc = v;
        v += 0.01;
        c.p_value = band == "gamma" ? 0.004 : (band == "beta" ? 0.03 : 0.5);
        c.n_fail = 10;
        c.n_succ = 22;
        cells.push_back(c);
      }
  return cells;
}

}  // namespace

TEST_CASE("report table has band rows and family x label twin columns") {
  const auto cells = full_cell_grid();
  const auto text = build_report(cells, {"theta", "alpha", "beta", "gamma"});

  std::istringstream in(text);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "band,digit_connstruct,digit_connstruct_sig,digit_graphvar,"
        "digit_graphvar_sig,digit_power,digit_power_sig,sentence_connstruct,"
        "sentence_connstruct_sig,sentence_graphvar,sentence_graphvar_sig,"
        "sentence_power,sentence_power_sig");

  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].substr(0, 6) == "theta,");
  CHECK(rows[1].substr(0, 6) == "alpha,");
  CHECK(rows[2].substr(0, 5) == "beta,");
  CHECK(rows[3].substr(0, 6) == "gamma,");
  CHECK(rows[4].substr(0, 6) == "Comb.,");

  // theta digit connstruct was 0.50 with p = 0.5 -> no marker.
  CHECK(rows[0].find("0.5000,,") != std::string::npos);
  // gamma rows carry ** markers, beta rows * markers.
  CHECK(rows[3].find("**") != std::string::npos);
  CHECK(rows[2].find("*") != std::string::npos);
  CHECK(rows[2].find("**") == std::string::npos);
}

TEST_CASE("report rendering is deterministic and cell-order independent") {
  auto cells = full_cell_grid();
  const auto a = build_report(cells, {"theta", "alpha", "beta", "gamma"});
  std::mt19937_64 rng(3);
  std::shuffle(cells.begin(), cells.end(), rng);
  const auto b = build_report(cells, {"theta", "alpha", "beta", "gamma"});
  CHECK(a == b);
}

TEST_CASE("build_report names any missing cell") {
  auto cells = full_cell_grid();
  cells.erase(std::remove_if(cells.begin(), cells.end(),
                             [](const EvalCell& c) {
                               return c.family == "graph_variability" &&
                                      c.band == "beta" && c.label == "sentence";
                             }),
              cells.end());
  try {
    build_report(cells, {"theta", "alpha", "beta", "gamma"});
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("graph_variability") != std::string::npos);
    CHECK(msg.find("beta") != std::string::npos);
    CHECK(msg.find("sentence") != std::string::npos);
  }
}

TEST_CASE("fusion report lists one row per label") {
  std::vector<EvalCell> cells;
  for (const auto& label : {"digit", "sentence"}) {
    EvalCell c;
    c.family = "all";
    c.band = "combined";
    c.label = label;
    c.auc = label == std::string("digit") ? 0.91 : 0.77;
    c.p_value = label == std::string("digit") ? 0.002 : 0.06;
    c.n_fail = 15;
    c.n_succ = 30;
    cells.push_back(c);
  }
  const auto text = build_fusion_report(cells);
  std::istringstream in(text);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "label,auc,sig,p_value,n_fail,n_succ");
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 6) == "digit,");
  CHECK(line.find("0.9100") != std::string::npos);
  CHECK(line.find("**") != std::string::npos);
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 9) == "sentence,");
  CHECK(line.find("0.7700") != std::string::npos);
}
