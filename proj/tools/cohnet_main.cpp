#include <CLI11.hpp>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "cohnet/config.hpp"
#include "cohnet/errors.hpp"
#include "cohnet/pipeline.hpp"

namespace {

cohnet::PipelineConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return cohnet::default_pipeline_config();
  return cohnet::load_pipeline_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional-connectivity recall-failure pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_config, synth_out;
  synth->add_option("--config", synth_config, "Pipeline config file")->required();
  synth->add_option("--out", synth_out, "Output dataset directory")->required();

  // extract
  auto* extract = app.add_subcommand("extract", "Extract features from a dataset");
  std::string extract_manifest, extract_config, extract_out;
  cohnet::ExtractOptions extract_options;
  std::string dump_coherence, dump_edges;
  extract->add_option("--manifest", extract_manifest, "Dataset manifest CSV")
      ->required();
  extract->add_option("--config", extract_config, "Pipeline config file");
  extract->add_option("--out", extract_out, "Feature store CSV to write")
      ->required();
  extract->add_flag("--skip-bad", extract_options.skip_bad,
                    "Skip trials that fail extraction instead of aborting");
  extract->add_flag("--quiet", extract_options.quiet,
                    "Suppress per-trial timing logs");
  extract->add_option("--threads", extract_options.threads,
                      "Worker threads (default: machine parallelism)");
  extract->add_option("--dump-coherence", dump_coherence,
                      "Directory for per-trial/band coherence matrix CSVs");
  extract->add_option("--dump-edges", dump_edges,
                      "Directory for per-trial/band/cost edge list CSVs");

  // eval
  auto* eval = app.add_subcommand("eval", "Cross-validated evaluation report");
  std::string eval_features, eval_config, eval_out;
  cohnet::EvalOptions eval_options;
  eval->add_option("--features", eval_features, "Feature store CSV")->required();
  eval->add_option("--config", eval_config, "Pipeline config file");
  eval->add_option("--out", eval_out, "Report output directory")->required();
  eval->add_option("--label", eval_options.label,
                   "Recall label to evaluate: digit, sentence or both");
  eval->add_option("--threads", eval_options.threads,
                   "Worker threads (default: machine parallelism)");

  // curves
  auto* curves = app.add_subcommand("curves", "Plot-ready class-mean curves");
  std::string curves_features, curves_config, curves_out, curves_label = "digit";
  curves->add_option("--features", curves_features, "Feature store CSV")
      ->required();
  curves->add_option("--config", curves_config, "Pipeline config file");
  curves->add_option("--out", curves_out, "Curves output directory")->required();
  curves->add_option("--label", curves_label, "Recall label: digit or sentence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) {
      cohnet::run_synth(cohnet::load_pipeline_config(synth_config), synth_out);
    } else if (extract->parsed()) {
      extract_options.dump_coherence_dir = dump_coherence;
      extract_options.dump_edges_dir = dump_edges;
      cohnet::run_extract(extract_manifest, load_config_or_default(extract_config),
                          extract_out, extract_options);
    } else if (eval->parsed()) {
      cohnet::run_eval(eval_features, load_config_or_default(eval_config),
                       eval_out, eval_options);
    } else if (curves->parsed()) {
      cohnet::run_curves(curves_features, load_config_or_default(curves_config),
                         curves_out, curves_label);
    }
  } catch (const cohnet::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
