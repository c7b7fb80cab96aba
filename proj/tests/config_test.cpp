#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cohnet/config.hpp>
#include <cohnet/errors.hpp>

#include <filesystem>
#include <fstream>

using namespace cohnet;
namespace fs = std::filesystem;

TEST_CASE("default config mirrors the documented settings") {
  const auto cfg = default_pipeline_config();
  REQUIRE(cfg.bands.size() == 4);
  CHECK(cfg.bands[0].name == "theta");
  CHECK(cfg.spectral.segment_length_s == 1.0);
  CHECK(cfg.spectral.overlap_fraction == 0.5);
  CHECK(cfg.graph_costs == std::vector<double>{6.0, 6.5, 7.0, 7.5});
  CHECK(cfg.pca_target_fraction == 0.90);
  CHECK(cfg.covariance_mode == CovarianceMode::pooled_total);
  CHECK(cfg.highpass_hz == 0.1);
  CHECK(cfg.notch_hz == 60.0);
  CHECK(cfg.notch_q == 30.0);
  CHECK(cfg.synth.n_subjects == 8);
  CHECK(cfg.synth.trials_per_subject == 64);
  CHECK(cfg.synth.failure_rate == 0.3);
  CHECK(cfg.fusion.bands.at(FeatureFamily::log_power) ==
        std::vector<std::string>{"beta", "gamma"});
  CHECK(parse_pipeline_config("").pca_target_fraction == 0.90);
}

TEST_CASE("parser applies every supported key") {
  const std::string text = R"(
# full override
bands.theta.lo_hz = 3.0
bands.theta.hi_hz = 7.0
bands.alpha.lo_hz = 7.0
spectral.segment_length_s = 2.0
spectral.overlap_fraction = 0.25
graph.cost_levels = 4, 5.5
pca.target_fraction = 0.8
model.covariance_mode = per_class
filter.highpass_hz = 0.5
filter.notch_hz = 50
filter.notch_q = 25
fusion.log_power = theta, gamma
synth.seed = 31337
synth.n_subjects = 5
synth.trials_per_subject = 20
synth.failure_rate = 0.4
synth.sample_rate_hz = 128
synth.duration_lo_s = 2.5
synth.duration_hi_s = 3.5
synth.n_channels = 16
synth.subject_scale_jitter = 0.2
synth.gain_succ.theta = 1.1
synth.gain_fail.theta = 2.5
)";
  const auto cfg = parse_pipeline_config(text);
  CHECK(cfg.bands[0].lo_hz == 3.0);
  CHECK(cfg.bands[0].hi_hz == 7.0);
  CHECK(cfg.bands[1].lo_hz == 7.0);
  CHECK(cfg.spectral.segment_length_s == 2.0);
  CHECK(cfg.spectral.overlap_fraction == 0.25);
  CHECK(cfg.graph_costs == std::vector<double>{4.0, 5.5});
  CHECK(cfg.pca_target_fraction == 0.8);
  CHECK(cfg.covariance_mode == CovarianceMode::per_class);
  CHECK(cfg.highpass_hz == 0.5);
  CHECK(cfg.notch_hz == 50.0);
  CHECK(cfg.notch_q == 25.0);
  CHECK(cfg.fusion.bands.at(FeatureFamily::log_power) ==
        std::vector<std::string>{"theta", "gamma"});
  CHECK(cfg.synth.seed == 31337);
  CHECK(cfg.synth.n_subjects == 5);
  CHECK(cfg.synth.trials_per_subject == 20);
  CHECK(cfg.synth.failure_rate == 0.4);
  CHECK(cfg.synth.sample_rate_hz == 128.0);
  CHECK(cfg.synth.duration_lo_s == 2.5);
  CHECK(cfg.synth.duration_hi_s == 3.5);
  CHECK(cfg.synth.n_channels == 16);
  CHECK(cfg.synth.subject_scale_jitter == 0.2);
  CHECK(cfg.synth.gain_succ.at("theta") == 1.1);
  CHECK(cfg.synth.gain_fail.at("theta") == 2.5);
}

TEST_CASE("band edits feed the fusion defaults") {
  // Renamed edges still produce a valid default fusion over the new bands.
  const auto cfg = parse_pipeline_config("bands.gamma.hi_hz = 45\n");
  CHECK(cfg.bands[3].hi_hz == 45.0);
  CHECK(cfg.fusion.bands.at(FeatureFamily::connectivity_structure).size() == 4);
}

TEST_CASE("unknown keys are all reported at once") {
  try {
    parse_pipeline_config("foo = 1\nspectral.bogus = 2\nsynth.n_subjects = 4\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("foo") != std::string::npos);
    CHECK(msg.find("spectral.bogus") != std::string::npos);
    CHECK(msg.find("n_subjects") == std::string::npos);
  }
}

TEST_CASE("parser rejects malformed lines") {
  SUBCASE("no equals sign") {
    try {
      parse_pipeline_config("pca.target_fraction 0.8\n");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }
  SUBCASE("duplicate key") {
    try {
      parse_pipeline_config("filter.notch_q = 10\nfilter.notch_q = 20\n");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("filter.notch_q") != std::string::npos);
    }
  }
  SUBCASE("empty value") {
    CHECK_THROWS_AS(parse_pipeline_config("filter.notch_q =\n"), ValidationError);
  }
  SUBCASE("non-numeric value") {
    CHECK_THROWS_AS(parse_pipeline_config("filter.notch_q = often\n"),
                    ValidationError);
  }
  SUBCASE("comments and blank lines are fine") {
    CHECK_NOTHROW(parse_pipeline_config("\n  \n# just a comment\n"));
  }
}

TEST_CASE("semantic validation names the failing setting") {
  SUBCASE("overlapping bands carry both names") {
    try {
      parse_pipeline_config("bands.alpha.lo_hz = 7.5\n");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("theta") != std::string::npos);
      CHECK(msg.find("alpha") != std::string::npos);
    }
  }
  SUBCASE("pca fraction bounds") {
    CHECK_THROWS_AS(parse_pipeline_config("pca.target_fraction = 0\n"),
                    ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config("pca.target_fraction = 1.01\n"),
                    ValidationError);
    CHECK_NOTHROW(parse_pipeline_config("pca.target_fraction = 1.0\n"));
  }
  SUBCASE("bad covariance mode") {
    CHECK_THROWS_AS(parse_pipeline_config("model.covariance_mode = diagonal\n"),
                    ValidationError);
  }
  SUBCASE("non-positive cost level") {
    CHECK_THROWS_AS(parse_pipeline_config("graph.cost_levels = 6, 0\n"),
                    ValidationError);
  }
  SUBCASE("fusion band must exist") {
    CHECK_THROWS_AS(parse_pipeline_config("fusion.log_power = delta\n"),
                    ValidationError);
  }
  SUBCASE("fusion family must exist") {
    CHECK_THROWS_AS(parse_pipeline_config("fusion.bananas = theta\n"),
                    ValidationError);
  }
  SUBCASE("synth gain band must exist") {
    CHECK_THROWS_AS(parse_pipeline_config("synth.gain_fail.delta = 2\n"),
                    ValidationError);
  }
  SUBCASE("unknown band edit") {
    CHECK_THROWS_AS(parse_pipeline_config("bands.delta.lo_hz = 1\n"),
                    ValidationError);
  }
}

TEST_CASE("config files load from disk and report IO failures") {
  const auto dir = fs::temp_directory_path() / "cohnet_config";
  fs::create_directories(dir);
  const auto path = dir / "pipeline.cfg";
  std::ofstream(path) << "synth.seed = 5\nfilter.notch_q = 35\n";
  const auto cfg = load_pipeline_config(path);
  CHECK(cfg.synth.seed == 5);
  CHECK(cfg.notch_q == 35.0);
  CHECK_THROWS_AS(load_pipeline_config(dir / "missing.cfg"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("shipped preset files parse cleanly") {
  // The repo presets must stay in sync with the parser.
  const auto root = fs::path(__FILE__).parent_path().parent_path();
  for (const auto* name : {"default.cfg", "synth_planted.cfg", "synth_null.cfg"}) {
    const auto path = root / "configs" / name;
    REQUIRE(fs::exists(path));
    CHECK_NOTHROW(load_pipeline_config(path));
  }
}
