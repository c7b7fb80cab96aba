#include "cohnet/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cohnet/errors.hpp"
#include "cohnet/util.hpp"

namespace cohnet {

PipelineConfig default_pipeline_config() {
  PipelineConfig cfg;
  cfg.bands = default_bands();
  cfg.fusion = default_fusion_spec(cfg.bands);
  return cfg;
}

namespace {

std::vector<double> parse_double_list(const std::string& value,
                                      const std::string& key) {
  std::vector<double> out;
  for (const auto& piece : split(value, ','))
    out.push_back(parse_double(trim(piece), key));
  if (out.empty()) throw ValidationError(key + " must list at least one value");
  return out;
}

std::vector<std::string> parse_name_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& piece : split(value, ',')) {
    const std::string name = trim(piece);
    if (!name.empty()) out.push_back(name);
  }
  return out;
}

void validate_pipeline_config(const PipelineConfig& cfg) {
  validate_bands(cfg.bands);
  if (cfg.graph_costs.empty())
    throw ValidationError("graph.cost_levels must list at least one cost");
  for (const double c : cfg.graph_costs)
    if (!(c > 0.0) || !std::isfinite(c))
      throw ValidationError("graph cost levels must be finite and > 0");
  if (!(cfg.pca_target_fraction > 0.0 && cfg.pca_target_fraction <= 1.0))
    throw ValidationError("pca.target_fraction must be in (0, 1]");
  if (!(cfg.highpass_hz > 0.0))
    throw ValidationError("filter.highpass_hz must be > 0");
  if (!(cfg.notch_hz > 0.0)) throw ValidationError("filter.notch_hz must be > 0");
  if (!(cfg.notch_q > 0.0)) throw ValidationError("filter.notch_q must be > 0");
  for (const auto& [family, band_names] : cfg.fusion.bands)
    for (const auto& name : band_names)
      band_by_name(cfg.bands, name);  // throws on unknown names
  for (const auto* gains : {&cfg.synth.gain_succ, &cfg.synth.gain_fail})
    for (const auto& [name, g] : *gains) {
      band_by_name(cfg.bands, name);
      (void)g;
    }
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
  // First pass: raw key/value lines.
  std::map<std::string, std::string> values;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) +
                            " is not `key = value`: " + stripped);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ValidationError("config line " + std::to_string(line_no) +
                            " has an empty key or value");
    if (values.count(key))
      throw ValidationError("duplicate config key " + key + " (line " +
                            std::to_string(line_no) + ")");
    values[key] = value;
  }

  PipelineConfig cfg = default_pipeline_config();

  // Band edges first: fusion defaults and synth gains refer to band names.
  std::vector<std::string> unknown;
  for (const auto& [key, value] : values) {
    if (key.rfind("bands.", 0) != 0) continue;
    const auto rest = key.substr(6);
    const auto dot = rest.find('.');
    if (dot == std::string::npos) {
      unknown.push_back(key);
      continue;
    }
    const std::string band_name = rest.substr(0, dot);
    const std::string field = rest.substr(dot + 1);
    FrequencyBand* band = nullptr;
    for (auto& b : cfg.bands)
      if (b.name == band_name) band = &b;
    if (!band || (field != "lo_hz" && field != "hi_hz")) {
      unknown.push_back(key);
      continue;
    }
    (field == "lo_hz" ? band->lo_hz : band->hi_hz) = parse_double(value, key);
  }
  cfg.fusion = default_fusion_spec(cfg.bands);

  for (const auto& [key, value] : values) {
    if (key.rfind("bands.", 0) == 0) continue;  // handled above
    if (key == "spectral.segment_length_s")
      cfg.spectral.segment_length_s = parse_double(value, key);
    else if (key == "spectral.overlap_fraction")
      cfg.spectral.overlap_fraction = parse_double(value, key);
    else if (key == "graph.cost_levels")
      cfg.graph_costs = parse_double_list(value, key);
    else if (key == "pca.target_fraction")
      cfg.pca_target_fraction = parse_double(value, key);
    else if (key == "model.covariance_mode") {
      if (value == "pooled_total")
        cfg.covariance_mode = CovarianceMode::pooled_total;
      else if (value == "per_class")
        cfg.covariance_mode = CovarianceMode::per_class;
      else
        throw ValidationError(
            "model.covariance_mode must be pooled_total or per_class, got " +
            value);
    } else if (key == "filter.highpass_hz")
      cfg.highpass_hz = parse_double(value, key);
    else if (key == "filter.notch_hz")
      cfg.notch_hz = parse_double(value, key);
    else if (key == "filter.notch_q")
      cfg.notch_q = parse_double(value, key);
    else if (key.rfind("fusion.", 0) == 0)
      cfg.fusion.bands[family_from_string(key.substr(7))] = parse_name_list(value);
    else if (key == "synth.seed")
      cfg.synth.seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "synth.n_subjects")
      cfg.synth.n_subjects = static_cast<int>(parse_int(value, key));
    else if (key == "synth.trials_per_subject")
      cfg.synth.trials_per_subject = static_cast<int>(parse_int(value, key));
    else if (key == "synth.failure_rate")
      cfg.synth.failure_rate = parse_double(value, key);
    else if (key == "synth.sample_rate_hz")
      cfg.synth.sample_rate_hz = parse_double(value, key);
    else if (key == "synth.duration_lo_s")
      cfg.synth.duration_lo_s = parse_double(value, key);
    else if (key == "synth.duration_hi_s")
      cfg.synth.duration_hi_s = parse_double(value, key);
    else if (key == "synth.n_channels")
      cfg.synth.n_channels = static_cast<int>(parse_int(value, key));
    else if (key == "synth.subject_scale_jitter")
      cfg.synth.subject_scale_jitter = parse_double(value, key);
    else if (key.rfind("synth.gain_succ.", 0) == 0)
      cfg.synth.gain_succ[key.substr(16)] = parse_double(value, key);
    else if (key.rfind("synth.gain_fail.", 0) == 0)
      cfg.synth.gain_fail[key.substr(16)] = parse_double(value, key);
    else
      unknown.push_back(key);
  }

  if (!unknown.empty()) {
    std::string msg = "unknown config key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ValidationError(msg);
  }

  validate_pipeline_config(cfg);
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_pipeline_config(buf.str());
}

}  // namespace cohnet
