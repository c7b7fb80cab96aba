#include "cohnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include "cohnet/connstruct.hpp"
#include "cohnet/errors.hpp"
#include "cohnet/graphnet.hpp"
#include "cohnet/synthgen.hpp"
#include "cohnet/util.hpp"

namespace cohnet {

// ---------------------------------------------------------------------------
// Labels sidecar
// ---------------------------------------------------------------------------

std::filesystem::path labels_sidecar_path(const std::filesystem::path& features_path) {
  std::filesystem::path p = features_path;
  p.replace_extension(".labels.csv");
  return p;
}

void write_labels_sidecar(const std::vector<TrialLabelRow>& rows,
                          const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write labels file: " + path.string());
  os << "trial_id,subject_id,digit_correct,sentence_correct\n";
  for (const auto& r : rows)
    os << r.trial_id << ',' << r.subject_id << ',' << (r.digit_correct ? 1 : 0)
       << ',' << (r.sentence_correct ? 1 : 0) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<TrialLabelRow> read_labels_sidecar(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open labels file: " + path.string());
  std::string line;
  if (!std::getline(is, line) ||
      trim(line) != "trial_id,subject_id,digit_correct,sentence_correct")
    throw ValidationError("bad labels header in " + path.string());
  std::vector<TrialLabelRow> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 4)
      throw ValidationError(path.string() + " line " + std::to_string(line_no) +
                            ": expected 4 columns, got " +
                            std::to_string(cols.size()));
    TrialLabelRow r;
    r.trial_id = trim(cols[0]);
    r.subject_id = trim(cols[1]);
    r.digit_correct = parse_bool01(trim(cols[2]), "digit_correct");
    r.sentence_correct = parse_bool01(trim(cols[3]), "sentence_correct");
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

std::vector<FeatureRecord> extract_trial_features(const Trial& trial,
                                                  const PipelineConfig& config) {
  const Trial filtered =
      notch_filter(highpass_filter(trial, config.highpass_hz), config.notch_hz,
                   config.notch_q);
  // One Welch pass serves all bands; bins above the highest band edge are
  // never read, so they are not kept.
  double max_freq = 0.0;
  for (const auto& band : config.bands) max_freq = std::max(max_freq, band.hi_hz);
  const WelchSpectra spectra = welch_spectra(filtered, config.spectral, max_freq);

  std::vector<FeatureRecord> records;
  records.reserve(config.bands.size() * 3);
  for (const auto& band : config.bands) {
    const CoherenceMatrix coh = coherence_matrix(spectra, band);

    FeatureRecord eig;
    eig.subject_id = trial.subject_id;
    eig.trial_id = trial.trial_id;
    eig.family = FeatureFamily::connectivity_structure;
    eig.band = band.name;
    eig.values = eigen_spectrum(coh).eigenvalues;
    records.push_back(std::move(eig));

    FeatureRecord var;
    var.subject_id = trial.subject_id;
    var.trial_id = trial.trial_id;
    var.family = FeatureFamily::graph_variability;
    var.band = band.name;
    var.values = variability_features(coh, config.graph_costs).values;
    records.push_back(std::move(var));

    FeatureRecord power;
    power.subject_id = trial.subject_id;
    power.trial_id = trial.trial_id;
    power.family = FeatureFamily::log_power;
    power.band = band.name;
    power.values = band_log_power(spectra, band).values;
    records.push_back(std::move(power));
  }
  return records;
}

namespace {

void dump_coherence_csv(const CoherenceMatrix& coh, const std::string& trial_id,
                        const std::filesystem::path& dir) {
  const auto path = dir / (trial_id + "_" + coh.band + "_coherence.csv");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < coh.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < coh.values.cols(); ++j) {
      if (j) os << ',';
      os << format_full(coh.values(i, j));
    }
    os << '\n';
  }
}

void dump_edges_csv(const CoherenceMatrix& coh, const std::vector<double>& costs,
                    const std::string& trial_id, const std::filesystem::path& dir) {
  for (const double cost : costs) {
    const Graph g = build_graph(coh, cost);
    std::ostringstream name;
    name << trial_id << '_' << coh.band << "_cost" << format_full(cost) << ".csv";
    const auto path = dir / name.str();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << "i,j,coherence\n";
    for (const auto& [i, j] : g.edges)
      os << i << ',' << j << ',' << format_full(coh.values(i, j)) << '\n';
  }
}

}  // namespace

void run_extract(const std::filesystem::path& manifest_path,
                 const PipelineConfig& config,
                 const std::filesystem::path& features_path,
                 const ExtractOptions& options) {
  const Dataset dataset = load_manifest(manifest_path);
  for (const auto& warning : validate_dataset(dataset))
    std::cerr << "[extract] warning: " << warning << '\n';

  const bool dump_coh = !options.dump_coherence_dir.empty();
  const bool dump_edges = !options.dump_edges_dir.empty();
  for (const auto* dir : {&options.dump_coherence_dir, &options.dump_edges_dir}) {
    if (dir->empty()) continue;
    std::error_code ec;
    std::filesystem::create_directories(*dir, ec);
    if (ec)
      throw IoError("cannot create dump directory " + dir->string() + ": " +
                    ec.message());
  }

  const std::size_t n = dataset.trials.size();
  std::vector<std::vector<FeatureRecord>> per_trial(n);
  std::vector<char> ok(n, 0);
  std::vector<std::string> failures(n);
  std::mutex log_mutex;

  parallel_for(
      n,
      [&](std::size_t t) {
        const auto& desc = dataset.trials[t];
        const auto start = std::chrono::steady_clock::now();
        try {
          const Trial trial = load_trial(desc);
          per_trial[t] = extract_trial_features(trial, config);
          if (dump_coh || dump_edges) {
            const Trial filtered = notch_filter(
                highpass_filter(trial, config.highpass_hz), config.notch_hz,
                config.notch_q);
            double max_freq = 0.0;
            for (const auto& band : config.bands)
              max_freq = std::max(max_freq, band.hi_hz);
            const WelchSpectra spectra =
                welch_spectra(filtered, config.spectral, max_freq);
            for (const auto& band : config.bands) {
              const CoherenceMatrix coh = coherence_matrix(spectra, band);
              if (dump_coh)
                dump_coherence_csv(coh, desc.trial_id, options.dump_coherence_dir);
              if (dump_edges)
                dump_edges_csv(coh, config.graph_costs, desc.trial_id,
                               options.dump_edges_dir);
            }
          }
          ok[t] = 1;
          if (!options.quiet) {
            const auto ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count();
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cerr << "[extract] " << desc.trial_id << ' '
                      << format_fixed(ms, 1) << " ms\n";
          }
        } catch (const IoError&) {
          throw;  // broken files are fatal regardless of --skip-bad
        } catch (const std::exception& e) {
          failures[t] = e.what();
        }
      },
      options.threads);

  std::vector<FeatureRecord> records;
  std::vector<TrialLabelRow> labels;
  for (std::size_t t = 0; t < n; ++t) {
    if (!ok[t]) {
      const std::string msg =
          "trial " + dataset.trials[t].trial_id + ": " + failures[t];
      if (!options.skip_bad) throw ValidationError(msg);
      std::cerr << "[extract] warning: skipping " << msg << '\n';
      continue;
    }
    for (auto& r : per_trial[t]) records.push_back(std::move(r));
    TrialLabelRow row;
    row.trial_id = dataset.trials[t].trial_id;
    row.subject_id = dataset.trials[t].subject_id;
    row.digit_correct = dataset.trials[t].digit_correct;
    row.sentence_correct = dataset.trials[t].sentence_correct;
    labels.push_back(std::move(row));
  }
  if (records.empty())
    throw ValidationError("no trials were extracted successfully");

  write_feature_store(records, features_path);
  write_labels_sidecar(labels, labels_sidecar_path(features_path));
}

void run_synth(const PipelineConfig& config, const std::filesystem::path& out_dir) {
  validate_bands(config.bands);
  validate_synth_config(config.synth, config.bands);
  const Dataset dataset = generate_dataset(config.synth, config.bands, out_dir);
  int digit_fail = 0, sentence_fail = 0;
  for (const auto& t : dataset.trials) {
    digit_fail += t.digit_correct ? 0 : 1;
    sentence_fail += t.sentence_correct ? 0 : 1;
  }
  std::cout << "wrote " << dataset.trials.size() << " trials for "
            << dataset.subjects.size() << " subjects to " << out_dir.string()
            << " (" << digit_fail << " digit failures, " << sentence_fail
            << " sentence failures)\n";
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

struct StoreIndex {
  std::vector<std::string> trial_ids;  // first-appearance order
  std::vector<std::string> subject_ids;
  // (family, band) -> n_trials x dim feature matrix
  std::map<std::pair<FeatureFamily, std::string>, Eigen::MatrixXd> tables;
  std::vector<std::string> band_order;  // first-appearance order in the store
};

StoreIndex index_store(const std::vector<FeatureRecord>& records,
                       const std::vector<FrequencyBand>& bands) {
  StoreIndex idx;
  std::map<std::string, std::size_t> trial_row;
  for (const auto& r : records) {
    if (!trial_row.count(r.trial_id)) {
      trial_row[r.trial_id] = idx.trial_ids.size();
      idx.trial_ids.push_back(r.trial_id);
      idx.subject_ids.push_back(r.subject_id);
    }
    if (std::find(idx.band_order.begin(), idx.band_order.end(), r.band) ==
        idx.band_order.end())
      idx.band_order.push_back(r.band);
  }
  // Bands named by the config must actually be present.
  std::vector<std::string> missing;
  const std::vector<FeatureFamily> families = {
      FeatureFamily::connectivity_structure, FeatureFamily::graph_variability,
      FeatureFamily::log_power};
  for (const auto& band : bands)
    for (const auto family : families) {
      bool found = false;
      for (const auto& r : records)
        if (r.band == band.name && r.family == family) {
          found = true;
          break;
        }
      if (!found) missing.push_back(to_string(family) + "/" + band.name);
    }
  if (!missing.empty()) {
    std::string msg = "feature store is missing cell(s):";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  const std::size_t n = idx.trial_ids.size();
  std::map<std::pair<FeatureFamily, std::string>, std::vector<char>> seen;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.family, r.band);
    auto table = idx.tables.find(key);
    if (table == idx.tables.end()) {
      table = idx.tables
                  .emplace(key, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                      r.values.size()))
                  .first;
      seen[key].assign(n, 0);
    }
    if (r.values.size() != table->second.cols())
      throw ValidationError("inconsistent dimension for " + to_string(r.family) +
                            "/" + r.band + " at trial " + r.trial_id);
    const auto row = static_cast<Eigen::Index>(trial_row.at(r.trial_id));
    table->second.row(row) = r.values.transpose();
    seen[key][static_cast<std::size_t>(row)] = 1;
  }
  for (const auto& [key, flags] : seen) {
    std::vector<std::string> holes;
    for (std::size_t t = 0; t < flags.size(); ++t)
      if (!flags[t]) holes.push_back(idx.trial_ids[t]);
    if (!holes.empty()) {
      std::string msg =
          "feature store cell " + to_string(key.first) + "/" + key.second +
          " is missing trial(s):";
      for (const auto& h : holes) msg += " " + h;
      throw ValidationError(msg);
    }
  }
  return idx;
}

}  // namespace

LabelEval evaluate_label(const std::vector<FeatureRecord>& records,
                         const std::vector<TrialLabelRow>& labels,
                         const PipelineConfig& config, const std::string& label,
                         int threads) {
  if (label != "digit" && label != "sentence")
    throw ValidationError("label must be digit or sentence, got " + label);

  const StoreIndex idx = index_store(records, config.bands);

  std::map<std::string, const TrialLabelRow*> by_trial;
  for (const auto& row : labels) by_trial[row.trial_id] = &row;

  LabelEval out;
  out.label = label;
  out.trial_ids = idx.trial_ids;
  out.subject_ids = idx.subject_ids;
  out.fail.resize(idx.trial_ids.size());
  for (std::size_t t = 0; t < idx.trial_ids.size(); ++t) {
    const auto it = by_trial.find(idx.trial_ids[t]);
    if (it == by_trial.end())
      throw ValidationError("labels file has no row for trial " + idx.trial_ids[t]);
    const bool correct =
        label == "digit" ? it->second->digit_correct : it->second->sentence_correct;
    out.fail[t] = !correct;
  }

  const std::vector<FeatureFamily> families = {
      FeatureFamily::connectivity_structure, FeatureFamily::graph_variability,
      FeatureFamily::log_power};
  const LosoOptions loso_options{config.pca_target_fraction, config.covariance_mode};

  // Independent (family, band) cells; LOSO per cell.
  std::vector<std::pair<FeatureFamily, std::string>> cell_keys;
  for (const auto family : families)
    for (const auto& band : config.bands) cell_keys.emplace_back(family, band.name);

  std::vector<Eigen::VectorXd> cell_scores(cell_keys.size());
  parallel_for(
      cell_keys.size(),
      [&](std::size_t c) {
        FeatureTable table;
        table.subject_ids = idx.subject_ids;
        table.trial_ids = idx.trial_ids;
        table.fail = out.fail;
        table.features = idx.tables.at(cell_keys[c]);
        cell_scores[c] = loso_cv(table, loso_options);
      },
      threads);

  for (std::size_t c = 0; c < cell_keys.size(); ++c)
    out.llr_cells[cell_keys[c]] = cell_scores[c];

  const auto n_fail =
      static_cast<int>(std::count(out.fail.begin(), out.fail.end(), true));
  const auto n_succ = static_cast<int>(out.fail.size()) - n_fail;
  const auto make_cell = [&](const std::string& family, const std::string& band,
                             const Eigen::VectorXd& scores) {
    EvalCell cell;
    cell.family = family;
    cell.band = band;
    cell.label = label;
    cell.auc = auc(scores, out.fail);
    std::vector<double> fail_scores, succ_scores;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
      (out.fail[static_cast<std::size_t>(i)] ? fail_scores : succ_scores)
          .push_back(scores[i]);
    cell.p_value = wilcoxon_rank_sum_p(fail_scores, succ_scores);
    cell.n_fail = n_fail;
    cell.n_succ = n_succ;
    return cell;
  };

  for (std::size_t c = 0; c < cell_keys.size(); ++c)
    out.cells.push_back(make_cell(to_string(cell_keys[c].first),
                                  cell_keys[c].second, cell_scores[c]));
  for (const auto family : families) {
    const Eigen::VectorXd fused = fuse(out.llr_cells, config.fusion, {family});
    out.family_fused[family] = fused;
    out.cells.push_back(make_cell(to_string(family), "combined", fused));
  }
  out.all_fused = fuse(out.llr_cells, config.fusion, families);
  out.cells.push_back(make_cell("all", "combined", out.all_fused));
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

void write_llr_csv(const LabelEval& eval, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "trial_id,family,band,llr\n";
  for (const auto& [key, scores] : eval.llr_cells)
    for (Eigen::Index i = 0; i < scores.size(); ++i)
      os << eval.trial_ids[static_cast<std::size_t>(i)] << ','
         << to_string(key.first) << ',' << key.second << ','
         << format_full(scores[i]) << '\n';
  for (Eigen::Index i = 0; i < eval.all_fused.size(); ++i)
    os << eval.trial_ids[static_cast<std::size_t>(i)] << ",all,combined,"
       << format_full(eval.all_fused[i]) << '\n';
  write_text(path, os.str());
}

void write_subject_auc_csv(const LabelEval& eval,
                           const std::filesystem::path& path) {
  std::ostringstream os;
  os << "subject_id,auc,n_fail,n_succ\n";
  std::set<std::string> subjects(eval.subject_ids.begin(), eval.subject_ids.end());
  for (const auto& subject : subjects) {
    std::vector<double> scores;
    std::vector<bool> fail;
    for (std::size_t t = 0; t < eval.subject_ids.size(); ++t) {
      if (eval.subject_ids[t] != subject) continue;
      scores.push_back(eval.all_fused[static_cast<Eigen::Index>(t)]);
      fail.push_back(eval.fail[t]);
    }
    const auto nf = std::count(fail.begin(), fail.end(), true);
    const auto ns = static_cast<long>(fail.size()) - nf;
    os << subject << ',';
    if (nf > 0 && ns > 0)
      os << format_fixed(
          auc(Eigen::Map<const Eigen::VectorXd>(scores.data(),
                                                static_cast<Eigen::Index>(scores.size())),
              fail),
          4);
    else
      os << "NA";  // single-class subject: AUC undefined
    os << ',' << nf << ',' << ns << '\n';
  }
  write_text(path, os.str());
}

void write_cells_csv(const LabelEval& eval, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "family,band,auc,sig,p_value,n_fail,n_succ\n";
  for (const auto& cell : eval.cells)
    os << cell.family << ',' << cell.band << ',' << format_fixed(cell.auc, 4)
       << ',' << significance_marker(cell.p_value) << ','
       << format_fixed(cell.p_value, 6) << ',' << cell.n_fail << ','
       << cell.n_succ << '\n';
  write_text(path, os.str());
}

}  // namespace

void run_eval(const std::filesystem::path& features_path,
              const PipelineConfig& config, const std::filesystem::path& out_dir,
              const EvalOptions& options) {
  if (options.label != "digit" && options.label != "sentence" &&
      options.label != "both")
    throw ValidationError("label must be digit, sentence or both, got " +
                          options.label);
  const std::vector<FeatureRecord> records = read_feature_store(features_path);
  const std::vector<TrialLabelRow> labels =
      read_labels_sidecar(labels_sidecar_path(features_path));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + out_dir.string() + ": " +
                  ec.message());

  std::vector<std::string> wanted;
  if (options.label == "both")
    wanted = {"digit", "sentence"};
  else
    wanted = {options.label};

  std::vector<EvalCell> all_cells;
  std::vector<EvalCell> fusion_cells;
  for (const auto& label : wanted) {
    const LabelEval eval =
        evaluate_label(records, labels, config, label, options.threads);
    write_llr_csv(eval, out_dir / ("llr_" + label + ".csv"));
    write_subject_auc_csv(eval, out_dir / ("subject_auc_" + label + ".csv"));
    write_cells_csv(eval, out_dir / ("cells_" + label + ".csv"));
    for (const auto& cell : eval.cells) {
      if (cell.family == "all")
        fusion_cells.push_back(cell);
      else
        all_cells.push_back(cell);
    }
  }

  // The Table-1-shaped report spans both labels.
  if (options.label == "both") {
    std::vector<std::string> band_order;
    for (const auto& band : config.bands) band_order.push_back(band.name);
    write_text(out_dir / "report.csv", build_report(all_cells, band_order));
    write_text(out_dir / "fusion.csv", build_fusion_report(fusion_cells));
  }
}

// ---------------------------------------------------------------------------
// Figure curves
// ---------------------------------------------------------------------------

void run_curves(const std::filesystem::path& features_path,
                const PipelineConfig& config, const std::filesystem::path& out_dir,
                const std::string& label) {
  if (label != "digit" && label != "sentence")
    throw ValidationError("label must be digit or sentence, got " + label);
  const std::vector<FeatureRecord> records = read_feature_store(features_path);
  const std::vector<TrialLabelRow> labels =
      read_labels_sidecar(labels_sidecar_path(features_path));
  const StoreIndex idx = index_store(records, config.bands);

  std::map<std::string, const TrialLabelRow*> by_trial;
  for (const auto& row : labels) by_trial[row.trial_id] = &row;
  std::vector<bool> correct(idx.trial_ids.size());
  for (std::size_t t = 0; t < idx.trial_ids.size(); ++t) {
    const auto it = by_trial.find(idx.trial_ids[t]);
    if (it == by_trial.end())
      throw ValidationError("labels file has no row for trial " + idx.trial_ids[t]);
    correct[t] =
        label == "digit" ? it->second->digit_correct : it->second->sentence_correct;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + out_dir.string() + ": " +
                  ec.message());

  // Rank-ordered eigenvalue class means, one file per band.
  for (const auto& band : config.bands) {
    const Eigen::MatrixXd& spectra =
        idx.tables.at({FeatureFamily::connectivity_structure, band.name});
    const ClassMeanCurves curves = class_mean_curves(rank_zscore(spectra), correct);
    std::ostringstream os;
    os << "rank,mean_correct,mean_incorrect\n";
    for (Eigen::Index r = 0; r < curves.mean_correct.size(); ++r)
      os << (r + 1) << ',' << format_full(curves.mean_correct[r]) << ','
         << format_full(curves.mean_incorrect[r]) << '\n';
    write_text(out_dir / ("eigen_curves_" + band.name + ".csv"), os.str());
  }

  // Graph variability class means: z-scored 8-vectors averaged per band.
  std::ostringstream os;
  os << "band,mean_correct,mean_incorrect\n";
  for (const auto& band : config.bands) {
    const Eigen::MatrixXd& features =
        idx.tables.at({FeatureFamily::graph_variability, band.name});
    const ClassMeanCurves curves = class_mean_curves(rank_zscore(features), correct);
    os << band.name << ',' << format_full(curves.mean_correct.mean()) << ','
       << format_full(curves.mean_incorrect.mean()) << '\n';
  }
  write_text(out_dir / "graph_variability_curves.csv", os.str());
}

}  // namespace cohnet
