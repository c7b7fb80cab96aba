#include "cohnet/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

#include "cohnet/errors.hpp"
#include "cohnet/util.hpp"

namespace cohnet {

Eigen::Index Scaler::n_kept() const {
  return static_cast<Eigen::Index>(std::count(kept.begin(), kept.end(), true));
}

Scaler fit_scaler(const Eigen::MatrixXd& train) {
  if (train.rows() < 2)
    throw ValidationError("scaler needs at least 2 training rows, got " +
                          std::to_string(train.rows()));
  Scaler s;
  s.means.resize(train.cols());
  s.stds.resize(train.cols());
  s.kept.resize(static_cast<std::size_t>(train.cols()));
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    const double mean = train.col(c).mean();
    const double sd = population_std(train.col(c));
    s.means[c] = mean;
    s.stds[c] = sd;
    // A column that is constant up to rounding noise carries no information;
    // the threshold scales with the column's magnitude.
    s.kept[static_cast<std::size_t>(c)] =
        sd > 1e-12 * std::max(1.0, std::abs(mean));
  }
  if (s.n_kept() == 0)
    throw ValidationError("every feature dimension is constant across the training rows");
  return s;
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& rows) {
  if (rows.cols() != scaler.means.size())
    throw ValidationError("scaler expects " + std::to_string(scaler.means.size()) +
                          " dimensions, got " + std::to_string(rows.cols()));
  Eigen::MatrixXd out(rows.rows(), scaler.n_kept());
  Eigen::Index o = 0;
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    if (!scaler.kept[static_cast<std::size_t>(c)]) continue;
    out.col(o++) = (rows.col(c).array() - scaler.means[c]) / scaler.stds[c];
  }
  return out;
}

PcaModel fit_pca(const Eigen::MatrixXd& scaled_train, double target_fraction) {
  if (scaled_train.rows() < 2)
    throw ValidationError("PCA needs at least 2 training rows, got " +
                          std::to_string(scaled_train.rows()));
  if (!(target_fraction > 0.0 && target_fraction <= 1.0))
    throw ValidationError("PCA target fraction must be in (0, 1], got " +
                          format_full(target_fraction));

  PcaModel model;
  model.mean = scaled_train.colwise().mean();
  const Eigen::MatrixXd centered = scaled_train.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(scaled_train.rows());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw ValidationError("PCA eigendecomposition failed");

  const Eigen::Index d = cov.rows();
  // Ascending from the solver; store descending and clamp the tiny negative
  // values a PSD matrix can produce through rounding.
  model.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  const double total = model.eigenvalues.sum();
  if (!(total > 0.0))
    throw ValidationError("PCA input has zero total variance");

  Eigen::Index m = 0;
  double cumulative = 0.0;
  while (m < d) {
    cumulative += model.eigenvalues[m];
    ++m;
    if (cumulative / total >= target_fraction - 1e-12) break;
  }
  model.explained_fraction = cumulative / total;

  model.components.resize(d, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::VectorXd component = solver.eigenvectors().col(d - 1 - k);
    Eigen::Index max_idx = 0;
    component.cwiseAbs().maxCoeff(&max_idx);
    if (component[max_idx] < 0.0) component = -component;
    model.components.col(k) = component;
  }
  return model;
}

Eigen::MatrixXd project(const PcaModel& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != model.mean.size())
    throw ValidationError("PCA projection expects " +
                          std::to_string(model.mean.size()) +
                          " dimensions, got " + std::to_string(rows.cols()));
  return (rows.rowwise() - model.mean.transpose()) * model.components;
}

namespace {

struct CholFactor {
  Eigen::MatrixXd lower;
  double log_det = 0.0;
};

// Adds ridge * mean-diagonal * I, escalating tenfold until the factorization
// succeeds. Throws once the ridge would exceed the matrix's own scale.
CholFactor ridged_cholesky(const Eigen::MatrixXd& cov, double& ridge_factor) {
  const double diag_mean = cov.diagonal().mean();
  const double base = diag_mean > 0.0 ? diag_mean : 1.0;
  double factor = ridge_factor;
  while (factor <= 1.0) {
    const Eigen::MatrixXd ridged =
        cov + factor * base * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(ridged);
    if (llt.info() == Eigen::Success) {
      CholFactor out;
      out.lower = llt.matrixL();
      out.log_det = 2.0 * out.lower.diagonal().array().log().sum();
      ridge_factor = factor;
      return out;
    }
    factor *= 10.0;
  }
  throw ValidationError("covariance not positive definite after ridge escalation");
}

Eigen::MatrixXd class_rows(const Eigen::MatrixXd& x, const std::vector<bool>& fail,
                           bool want_fail) {
  const auto n = static_cast<Eigen::Index>(
      std::count(fail.begin(), fail.end(), want_fail));
  Eigen::MatrixXd out(n, x.cols());
  Eigen::Index o = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    if (fail[static_cast<std::size_t>(r)] == want_fail) out.row(o++) = x.row(r);
  return out;
}

Eigen::MatrixXd covariance_about(const Eigen::MatrixXd& rows,
                                 const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(rows.rows());
}

}  // namespace

GaussianLlrModel fit_gaussian_llr(const Eigen::MatrixXd& projected_train,
                                  const std::vector<bool>& fail,
                                  CovarianceMode mode) {
  if (static_cast<Eigen::Index>(fail.size()) != projected_train.rows())
    throw ValidationError("label count does not match training rows");
  const Eigen::MatrixXd rows_fail = class_rows(projected_train, fail, true);
  const Eigen::MatrixXd rows_succ = class_rows(projected_train, fail, false);
  if (rows_fail.rows() < 2 || rows_succ.rows() < 2)
    throw ValidationError("Gaussian fit needs >= 2 rows per class, got " +
                          std::to_string(rows_fail.rows()) + " failure / " +
                          std::to_string(rows_succ.rows()) + " success");

  GaussianLlrModel model;
  model.mode = mode;
  model.mean_fail = rows_fail.colwise().mean();
  model.mean_succ = rows_succ.colwise().mean();

  const Eigen::Index n = projected_train.rows();
  const Eigen::Index d = projected_train.cols();
  // Under-determined covariances start from a heavier ridge.
  double ridge_factor = d > n - 1 ? 1e-3 : 1e-6;

  if (mode == CovarianceMode::pooled_total) {
    const Eigen::VectorXd global_mean = projected_train.colwise().mean();
    const Eigen::MatrixXd cov = covariance_about(projected_train, global_mean);
    const CholFactor f = ridged_cholesky(cov, ridge_factor);
    model.chol_fail = f.lower;
    model.chol_succ = f.lower;
    model.log_det_fail = f.log_det;
    model.log_det_succ = f.log_det;
    model.ridge = ridge_factor;
  } else {
    double factor_fail = ridge_factor;
    double factor_succ = ridge_factor;
    const CholFactor ff =
        ridged_cholesky(covariance_about(rows_fail, model.mean_fail), factor_fail);
    const CholFactor fs =
        ridged_cholesky(covariance_about(rows_succ, model.mean_succ), factor_succ);
    model.chol_fail = ff.lower;
    model.chol_succ = fs.lower;
    model.log_det_fail = ff.log_det;
    model.log_det_succ = fs.log_det;
    model.ridge = std::max(factor_fail, factor_succ);
  }
  return model;
}

double score_llr(const GaussianLlrModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.mean_fail.size())
    throw ValidationError("LLR expects " + std::to_string(model.mean_fail.size()) +
                          " dimensions, got " + std::to_string(x.size()));
  const auto mahalanobis_sq = [](const Eigen::MatrixXd& lower,
                                 const Eigen::VectorXd& delta) {
    return lower.triangularView<Eigen::Lower>().solve(delta).squaredNorm();
  };
  const double qf = mahalanobis_sq(model.chol_fail, x - model.mean_fail);
  const double qs = mahalanobis_sq(model.chol_succ, x - model.mean_succ);
  return 0.5 * (qs - qf) + 0.5 * (model.log_det_succ - model.log_det_fail);
}

Eigen::VectorXd score_llr(const GaussianLlrModel& model, const Eigen::MatrixXd& rows) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const Eigen::VectorXd x = rows.row(r).transpose();
    out[r] = score_llr(model, x);
  }
  return out;
}

FusionSpec default_fusion_spec(const std::vector<FrequencyBand>& bands) {
  FusionSpec spec;
  std::vector<std::string> all;
  for (const auto& b : bands) all.push_back(b.name);
  spec.bands[FeatureFamily::connectivity_structure] = all;
  spec.bands[FeatureFamily::graph_variability] = all;
  // Log-power fuses over the beta and gamma bands only.
  std::vector<std::string> high;
  for (const auto& b : bands)
    if (b.name == "beta" || b.name == "gamma") high.push_back(b.name);
  spec.bands[FeatureFamily::log_power] = high.empty() ? all : high;
  return spec;
}

Eigen::VectorXd fuse(const LlrCellMap& llrs, const FusionSpec& spec,
                     const std::vector<FeatureFamily>& families) {
  Eigen::VectorXd out;
  for (const auto family : families) {
    const auto spec_it = spec.bands.find(family);
    if (spec_it == spec.bands.end())
      throw ValidationError("fusion spec has no band list for family " +
                            to_string(family));
    for (const auto& band : spec_it->second) {
      const auto cell = llrs.find({family, band});
      if (cell == llrs.end())
        throw ValidationError("missing LLR cell " + to_string(family) + "/" + band);
      if (out.size() == 0)
        out = Eigen::VectorXd::Zero(cell->second.size());
      else if (cell->second.size() != out.size())
        throw ValidationError("LLR cell " + to_string(family) + "/" + band +
                              " has " + std::to_string(cell->second.size()) +
                              " trials, expected " + std::to_string(out.size()));
      out += cell->second;
    }
  }
  if (out.size() == 0) throw ValidationError("fusion selected no LLR cells");
  return out;
}

// ---------------------------------------------------------------------------
// Fold model container (CGM1)
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  put_u64(os, static_cast<std::uint64_t>(m.rows()));
  put_u64(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(os, m(r, c));
}

void put_vector(std::ostream& os, const Eigen::VectorXd& v) {
  put_matrix(os, Eigen::MatrixXd(v.transpose()));
}

std::uint32_t get_u32(std::istream& is, const std::filesystem::path& path) {
  std::uint32_t v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("truncated model file: " + path.string());
  return v;
}

std::uint64_t get_u64(std::istream& is, const std::filesystem::path& path) {
  std::uint64_t v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("truncated model file: " + path.string());
  return v;
}

double get_f64(std::istream& is, const std::filesystem::path& path) {
  double v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("truncated model file: " + path.string());
  return v;
}

Eigen::MatrixXd get_matrix(std::istream& is, const std::filesystem::path& path) {
  const auto rows = get_u64(is, path);
  const auto cols = get_u64(is, path);
  if (rows > (1u << 20) || cols > (1u << 20))
    throw IoError("implausible matrix shape in model file: " + path.string());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get_f64(is, path);
  return m;
}

Eigen::VectorXd get_vector(std::istream& is, const std::filesystem::path& path) {
  const Eigen::MatrixXd m = get_matrix(is, path);
  if (m.rows() != 1 && m.size() != 0)
    throw IoError("expected a row vector in model file: " + path.string());
  return m.row(0).transpose();
}

constexpr char kModelMagic[4] = {'C', 'G', 'M', '1'};

}  // namespace

void save_fold_model(const FoldModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write model file: " + path.string());
  os.write(kModelMagic, sizeof kModelMagic);
  put_u32(os, 1);  // version
  put_u32(os, model.llr.mode == CovarianceMode::pooled_total ? 0u : 1u);
  put_f64(os, model.llr.ridge);
  put_f64(os, model.pca.explained_fraction);
  put_u64(os, model.held_out_subject.size());
  os.write(model.held_out_subject.data(),
           static_cast<std::streamsize>(model.held_out_subject.size()));

  put_vector(os, model.scaler.means);
  put_vector(os, model.scaler.stds);
  Eigen::VectorXd kept(static_cast<Eigen::Index>(model.scaler.kept.size()));
  for (Eigen::Index i = 0; i < kept.size(); ++i)
    kept[i] = model.scaler.kept[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  put_vector(os, kept);

  put_vector(os, model.pca.mean);
  put_matrix(os, model.pca.components);
  put_vector(os, model.pca.eigenvalues);

  put_vector(os, model.llr.mean_fail);
  put_vector(os, model.llr.mean_succ);
  put_matrix(os, model.llr.chol_fail);
  put_matrix(os, model.llr.chol_succ);
  if (!os) throw IoError("write failed: " + path.string());
}

FoldModel load_fold_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model file: " + path.string());
  char magic[4];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, 4) != 0)
    throw IoError("not a fold model file (bad magic): " + path.string());
  const auto version = get_u32(is, path);
  if (version != 1)
    throw IoError("unsupported model version " + std::to_string(version) + ": " +
                  path.string());

  FoldModel model;
  const auto mode = get_u32(is, path);
  if (mode > 1) throw IoError("bad covariance mode in model file: " + path.string());
  model.llr.mode = mode == 0 ? CovarianceMode::pooled_total : CovarianceMode::per_class;
  model.llr.ridge = get_f64(is, path);
  model.pca.explained_fraction = get_f64(is, path);
  const auto name_len = get_u64(is, path);
  if (name_len > (1u << 16))
    throw IoError("implausible subject name length in model file: " + path.string());
  model.held_out_subject.resize(name_len);
  if (name_len > 0 &&
      !is.read(model.held_out_subject.data(), static_cast<std::streamsize>(name_len)))
    throw IoError("truncated model file: " + path.string());

  model.scaler.means = get_vector(is, path);
  model.scaler.stds = get_vector(is, path);
  const Eigen::VectorXd kept = get_vector(is, path);
  model.scaler.kept.resize(static_cast<std::size_t>(kept.size()));
  for (Eigen::Index i = 0; i < kept.size(); ++i)
    model.scaler.kept[static_cast<std::size_t>(i)] = kept[i] != 0.0;

  model.pca.mean = get_vector(is, path);
  model.pca.components = get_matrix(is, path);
  model.pca.eigenvalues = get_vector(is, path);

  model.llr.mean_fail = get_vector(is, path);
  model.llr.mean_succ = get_vector(is, path);
  model.llr.chol_fail = get_matrix(is, path);
  model.llr.chol_succ = get_matrix(is, path);
  model.llr.log_det_fail =
      2.0 * model.llr.chol_fail.diagonal().array().log().sum();
  model.llr.log_det_succ =
      2.0 * model.llr.chol_succ.diagonal().array().log().sum();
  return model;
}

// ---------------------------------------------------------------------------
// Leave-one-subject-out cross-validation
// ---------------------------------------------------------------------------

FoldModel fit_fold(const FeatureTable& table, const std::string& held_out_subject,
                   const LosoOptions& options) {
  const Eigen::Index n = table.features.rows();
  if (static_cast<Eigen::Index>(table.subject_ids.size()) != n ||
      static_cast<Eigen::Index>(table.fail.size()) != n)
    throw ValidationError("feature table rows, subjects and labels disagree");

  std::vector<Eigen::Index> train_rows;
  for (Eigen::Index r = 0; r < n; ++r)
    if (table.subject_ids[static_cast<std::size_t>(r)] != held_out_subject)
      train_rows.push_back(r);

  Eigen::MatrixXd train(static_cast<Eigen::Index>(train_rows.size()),
                        table.features.cols());
  std::vector<bool> train_fail(train_rows.size());
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    train.row(static_cast<Eigen::Index>(i)) = table.features.row(train_rows[i]);
    train_fail[i] = table.fail[static_cast<std::size_t>(train_rows[i])];
  }
  const bool has_fail = std::count(train_fail.begin(), train_fail.end(), true) > 0;
  const bool has_succ = std::count(train_fail.begin(), train_fail.end(), false) > 0;
  if (!has_fail || !has_succ)
    throw ValidationError("training fold for held-out subject " + held_out_subject +
                          " contains a single class");

  FoldModel fold;
  fold.held_out_subject = held_out_subject;
  fold.scaler = fit_scaler(train);
  const Eigen::MatrixXd scaled = apply_scaler(fold.scaler, train);
  fold.pca = fit_pca(scaled, options.pca_target_fraction);
  const Eigen::MatrixXd projected = project(fold.pca, scaled);
  fold.llr = fit_gaussian_llr(projected, train_fail, options.covariance_mode);
  return fold;
}

Eigen::VectorXd loso_cv(const FeatureTable& table, const LosoOptions& options,
                        std::vector<FoldModel>* fold_models) {
  const Eigen::Index n = table.features.rows();
  if (static_cast<Eigen::Index>(table.subject_ids.size()) != n ||
      static_cast<Eigen::Index>(table.fail.size()) != n)
    throw ValidationError("feature table rows, subjects and labels disagree");

  std::set<std::string> subject_set(table.subject_ids.begin(), table.subject_ids.end());
  if (subject_set.size() < 2)
    throw ValidationError("LOSO needs >= 2 subjects, got " +
                          std::to_string(subject_set.size()));

  Eigen::VectorXd scores(n);
  for (const auto& held_out : subject_set) {
    FoldModel fold = fit_fold(table, held_out, options);

    std::vector<Eigen::Index> test_rows;
    for (Eigen::Index r = 0; r < n; ++r)
      if (table.subject_ids[static_cast<std::size_t>(r)] == held_out)
        test_rows.push_back(r);

    Eigen::MatrixXd test(static_cast<Eigen::Index>(test_rows.size()),
                         table.features.cols());
    for (std::size_t i = 0; i < test_rows.size(); ++i)
      test.row(static_cast<Eigen::Index>(i)) = table.features.row(test_rows[i]);
    const Eigen::VectorXd test_scores =
        score_llr(fold.llr, project(fold.pca, apply_scaler(fold.scaler, test)));
    for (std::size_t i = 0; i < test_rows.size(); ++i)
      scores[test_rows[i]] = test_scores[static_cast<Eigen::Index>(i)];

    if (fold_models) fold_models->push_back(std::move(fold));
  }
  return scores;
}

}  // namespace cohnet
