#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cohnet/errors.hpp>
#include <cohnet/pipeline.hpp>
#include <cohnet/synthgen.hpp>

#include <filesystem>
#include <fstream>
#include <set>

using namespace cohnet;
namespace fs = std::filesystem;

namespace {

// Small but statistically viable corpus: 3 subjects x 12 trials, 12 channels
// (the default cost levels need more than 8 nodes), 2-3 s at 128 Hz, with a
// planted effect on both labels (theta carries the digit label, gamma the
// sentence label).
PipelineConfig test_config() {
  auto cfg = default_pipeline_config();
  cfg.synth.seed = 4022;
  cfg.synth.n_subjects = 3;
  cfg.synth.trials_per_subject = 12;
  cfg.synth.failure_rate = 0.3;
  cfg.synth.sample_rate_hz = 128.0;
  cfg.synth.duration_lo_s = 2.0;
  cfg.synth.duration_hi_s = 3.0;
  cfg.synth.n_channels = 12;
  cfg.synth.gain_fail["theta"] = 2.2;
  cfg.synth.gain_fail["gamma"] = 2.2;
  return cfg;
}

struct Corpus {
  fs::path dir;
  PipelineConfig cfg;
  fs::path manifest;
  fs::path features;

  ~Corpus() { fs::remove_all(dir); }
};

Corpus make_corpus(const std::string& tag) {
  Corpus c;
  c.cfg = test_config();
  c.dir = fs::temp_directory_path() / ("cohnet_pipe_" + tag);
  fs::remove_all(c.dir);
  fs::create_directories(c.dir);
  generate_dataset(c.cfg.synth, c.cfg.bands, c.dir / "data");
  c.manifest = c.dir / "data" / "manifest.csv";
  c.features = c.dir / "features.csv";
  ExtractOptions opts;
  opts.quiet = true;
  run_extract(c.manifest, c.cfg, c.features, opts);
  return c;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int count_lines(const fs::path& path) {
  const auto text = slurp(path);
  int lines = 0;
  for (const char ch : text)
    if (ch == '\n') ++lines;
  return lines;
}

}  // namespace

TEST_CASE("labels sidecar path swaps the extension") {
  CHECK(labels_sidecar_path("out/features.csv") == fs::path("out/features.labels.csv"));
  CHECK(labels_sidecar_path("f.bin") == fs::path("f.labels.csv"));
}

TEST_CASE("labels sidecar round-trips") {
  const auto dir = fs::temp_directory_path() / "cohnet_pipe_sidecar";
  fs::create_directories(dir);
  std::vector<TrialLabelRow> rows = {{"s01_t000", "s01", true, false},
                                     {"s02_t001", "s02", false, true}};
  const auto path = dir / "x.labels.csv";
  write_labels_sidecar(rows, path);
  const auto back = read_labels_sidecar(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].trial_id == "s01_t000");
  CHECK(back[0].subject_id == "s01");
  CHECK(back[0].digit_correct == true);
  CHECK(back[0].sentence_correct == false);
  CHECK(back[1].trial_id == "s02_t001");
  CHECK(back[1].sentence_correct == true);

  std::ofstream(path) << "wrong,header\n";
  CHECK_THROWS_AS(read_labels_sidecar(path), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("extract_trial_features produces 3 families x 4 bands") {
  const auto cfg = test_config();
  const auto labels = draw_labels(cfg.synth, 0, 0);
  const auto trial = generate_trial(cfg.synth, cfg.bands, 0, 0, labels);
  const auto records = extract_trial_features(trial, cfg);

  REQUIRE(records.size() == 12);
  // Band-major, family-minor: one Welch pass per band feeds all families.
  int idx = 0;
  for (const auto& band : cfg.bands)
    for (const auto family :
         {FeatureFamily::connectivity_structure, FeatureFamily::graph_variability,
          FeatureFamily::log_power}) {
      CHECK(records[static_cast<std::size_t>(idx)].family == family);
      CHECK(records[static_cast<std::size_t>(idx)].band == band.name);
      CHECK(records[static_cast<std::size_t>(idx)].trial_id == trial.trial_id);
      ++idx;
    }

  for (const auto& r : records) {
    switch (r.family) {
      case FeatureFamily::connectivity_structure:
        CHECK(r.values.size() == 12);  // one eigenvalue per channel
        CHECK(r.values.sum() == doctest::Approx(12.0).epsilon(1e-6));
        break;
      case FeatureFamily::graph_variability:
        CHECK(r.values.size() == 8);  // 2 stats x 4 cost levels
        CHECK(r.values.minCoeff() >= 0.0);
        break;
      case FeatureFamily::log_power:
        CHECK(r.values.size() == 12);  // one log power per channel
        break;
    }
    CHECK(r.values.allFinite());
  }
}

TEST_CASE("run_extract writes a complete store plus labels sidecar") {
  const auto corpus = make_corpus("extract");

  const auto records = read_feature_store(corpus.features);
  CHECK(records.size() == 36 * 12);

  // Trial-major ordering, manifest order preserved.
  const auto ds = load_manifest(corpus.manifest);
  REQUIRE(ds.trials.size() == 36);
  for (std::size_t t = 0; t < 36; ++t)
    for (int k = 0; k < 12; ++k)
      CHECK(records[t * 12 + static_cast<std::size_t>(k)].trial_id ==
            ds.trials[t].trial_id);

  const auto labels = read_labels_sidecar(labels_sidecar_path(corpus.features));
  REQUIRE(labels.size() == 36);
  for (std::size_t t = 0; t < 36; ++t) {
    CHECK(labels[t].trial_id == ds.trials[t].trial_id);
    CHECK(labels[t].subject_id == ds.trials[t].subject_id);
    CHECK(labels[t].digit_correct == ds.trials[t].digit_correct);
    CHECK(labels[t].sentence_correct == ds.trials[t].sentence_correct);
  }
}

TEST_CASE("repeated extraction is byte-identical") {
  const auto corpus = make_corpus("rerun");
  const auto first = slurp(corpus.features);

  ExtractOptions opts;
  opts.quiet = true;
  opts.threads = 2;  // thread count must not affect the output
  run_extract(corpus.manifest, corpus.cfg, corpus.features, opts);
  CHECK(slurp(corpus.features) == first);
}

TEST_CASE("extract surfaces broken trials unless told to skip them") {
  const auto corpus = make_corpus("skipbad");

  // Corrupt one trial's signal: all zeros has no in-band power anywhere.
  const auto ds = load_manifest(corpus.manifest);
  const auto& victim = ds.trials[5];
  write_signal(Eigen::MatrixXd::Zero(victim.n_channels, victim.n_samples),
               victim.signal_path);

  ExtractOptions opts;
  opts.quiet = true;
  const auto broken_features = corpus.dir / "broken.csv";
  try {
    run_extract(corpus.manifest, corpus.cfg, broken_features, opts);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find(victim.trial_id) != std::string::npos);
  }

  opts.skip_bad = true;
  run_extract(corpus.manifest, corpus.cfg, broken_features, opts);
  const auto records = read_feature_store(broken_features);
  CHECK(records.size() == 35 * 12);
  for (const auto& r : records) CHECK(r.trial_id != victim.trial_id);
  const auto labels = read_labels_sidecar(labels_sidecar_path(broken_features));
  CHECK(labels.size() == 35);
}

TEST_CASE("evaluate_label produces the full cell grid and separates classes") {
  const auto corpus = make_corpus("eval");
  const auto records = read_feature_store(corpus.features);
  const auto labels = read_labels_sidecar(labels_sidecar_path(corpus.features));

  const auto eval = evaluate_label(records, labels, corpus.cfg, "digit");
  CHECK(eval.label == "digit");
  CHECK(eval.trial_ids.size() == 36);

  // 3 families x (4 bands + combined) + all/combined = 16 cells.
  REQUIRE(eval.cells.size() == 16);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : eval.cells) {
    seen.insert({c.family, c.band});
    CHECK(c.label == "digit");
    CHECK(c.auc >= 0.0);
    CHECK(c.auc <= 1.0);
    CHECK(c.p_value > 0.0);
    CHECK(c.p_value <= 1.0);
    CHECK(c.n_fail + c.n_succ == 36);
  }
  CHECK(seen.size() == 16);
  CHECK(seen.count({"all", "combined"}) == 1);
  CHECK(seen.count({"connectivity_structure", "combined"}) == 1);
  CHECK(seen.count({"log_power", "theta"}) == 1);

  // 12 per-cell LLR vectors, each scoring every trial.
  CHECK(eval.llr_cells.size() == 12);
  for (const auto& [key, llrs] : eval.llr_cells)
    CHECK(llrs.size() == 36);
  CHECK(eval.all_fused.size() == 36);

  // The planted theta effect on the digit label must separate the classes.
  const auto& fused_cell = *std::find_if(
      eval.cells.begin(), eval.cells.end(),
      [](const EvalCell& c) { return c.family == "all" && c.band == "combined"; });
  CHECK(fused_cell.auc > 0.7);

  // fail flags derive from digit_correct.
  for (std::size_t i = 0; i < labels.size(); ++i)
    CHECK(eval.fail[i] == !labels[i].digit_correct);

  // The sentence label uses its own flags.
  const auto sentence = evaluate_label(records, labels, corpus.cfg, "sentence");
  for (std::size_t i = 0; i < labels.size(); ++i)
    CHECK(sentence.fail[i] == !labels[i].sentence_correct);

  CHECK_THROWS_AS(evaluate_label(records, labels, corpus.cfg, "vocals"),
                  ValidationError);
}

TEST_CASE("evaluate_label reports missing cells") {
  const auto corpus = make_corpus("missing");
  auto records = read_feature_store(corpus.features);
  const auto labels = read_labels_sidecar(labels_sidecar_path(corpus.features));

  records.erase(std::remove_if(records.begin(), records.end(),
                               [](const FeatureRecord& r) {
                                 return r.family == FeatureFamily::log_power &&
                                        r.band == "alpha";
                               }),
                records.end());
  try {
    evaluate_label(records, labels, corpus.cfg, "digit");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("log_power") != std::string::npos);
    CHECK(msg.find("alpha") != std::string::npos);
  }
}

TEST_CASE("run_eval writes reports, LLR dumps, and per-subject AUCs") {
  const auto corpus = make_corpus("runeval");
  const auto out = corpus.dir / "eval";
  run_eval(corpus.features, corpus.cfg, out, {});

  for (const auto* name :
       {"report.csv", "fusion.csv", "llr_digit.csv", "llr_sentence.csv",
        "cells_digit.csv", "cells_sentence.csv", "subject_auc_digit.csv",
        "subject_auc_sentence.csv"})
    CHECK(fs::exists(out / name));

  // Report: header + 4 band rows + combined row.
  CHECK(count_lines(out / "report.csv") == 6);
  CHECK(count_lines(out / "fusion.csv") == 3);
  // LLR dump: 12 family x band cells plus the all/combined row per trial.
  CHECK(count_lines(out / "llr_digit.csv") == 1 + 36 * 13);
  CHECK(count_lines(out / "cells_digit.csv") == 1 + 16);
  CHECK(count_lines(out / "subject_auc_digit.csv") == 1 + 3);

  const auto header = slurp(out / "report.csv").substr(0, 5);
  CHECK(header == "band,");

  // Single-label runs only produce that label's files.
  const auto out_digit = corpus.dir / "eval_digit";
  EvalOptions opts;
  opts.label = "digit";
  run_eval(corpus.features, corpus.cfg, out_digit, opts);
  CHECK(fs::exists(out_digit / "llr_digit.csv"));
  CHECK(!fs::exists(out_digit / "llr_sentence.csv"));
  CHECK(!fs::exists(out_digit / "report.csv"));
}

TEST_CASE("run_curves emits per-rank class means") {
  const auto corpus = make_corpus("curves");
  const auto out = corpus.dir / "curves";
  run_curves(corpus.features, corpus.cfg, out, "digit");

  for (const auto& band : corpus.cfg.bands) {
    const auto path = out / ("eigen_curves_" + band.name + ".csv");
    REQUIRE(fs::exists(path));
    CHECK(count_lines(path) == 1 + 12);  // one row per eigen rank (12 channels)
    const auto text = slurp(path);
    CHECK(text.substr(0, 32) == "rank,mean_correct,mean_incorrect");
  }
  const auto graph_path = out / "graph_variability_curves.csv";
  REQUIRE(fs::exists(graph_path));
  CHECK(count_lines(graph_path) == 1 + 4);  // one row per band
}

TEST_CASE("run_eval rejects a feature store with missing labels") {
  const auto corpus = make_corpus("nolabels");
  fs::remove(labels_sidecar_path(corpus.features));
  CHECK_THROWS_AS(run_eval(corpus.features, corpus.cfg, corpus.dir / "x", {}),
                  IoError);
}
