#include "cohnet/data_model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "cohnet/errors.hpp"
#include "cohnet/util.hpp"

static_assert(std::endian::native == std::endian::little,
              "signal file I/O assumes a little-endian host");

namespace cohnet {

namespace {

constexpr double kMinTrialDuration = 1.0;   // s, hard invariant
constexpr double kMaxAdvisedDuration = 30.0;  // s, warning only
constexpr int kMinTrialsPerSubject = 10;      // warning only

const char* kManifestHeader =
    "subject_id,trial_id,signal_path,sample_rate_hz,n_channels,n_samples,"
    "digit_correct,sentence_correct";

const char* kFeatureHeader = "subject_id,trial_id,family,band,dim,value";

}  // namespace

std::vector<FrequencyBand> default_bands() {
  return {{"theta", 4.0, 8.0},
          {"alpha", 8.0, 12.0},
          {"beta", 12.0, 30.0},
          {"gamma", 30.0, 50.0}};
}

void validate_bands(const std::vector<FrequencyBand>& bands) {
  if (bands.empty()) throw ValidationError("no frequency bands configured");
  for (const auto& b : bands) {
    if (!(b.lo_hz > 0.0) || !(b.hi_hz > b.lo_hz))
      throw ValidationError("band " + b.name + ": need 0 < lo_hz < hi_hz, got [" +
                            format_full(b.lo_hz) + ", " + format_full(b.hi_hz) + ")");
  }
  for (std::size_t i = 1; i < bands.size(); ++i) {
    if (bands[i].lo_hz < bands[i - 1].hi_hz)
      throw ValidationError("bands " + bands[i - 1].name + " and " + bands[i].name +
                            " overlap or are out of order");
  }
}

const FrequencyBand& band_by_name(const std::vector<FrequencyBand>& bands,
                                  const std::string& name) {
  for (const auto& b : bands)
    if (b.name == name) return b;
  throw ValidationError("unknown band: " + name);
}

Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  const auto dir = path.parent_path();

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("manifest is empty: " + path.string());
  if (trim(line) != kManifestHeader)
    throw ValidationError("manifest header mismatch in " + path.string());

  Dataset ds;
  std::unordered_set<std::string> seen_ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cols = split(line);
    const std::string ctx = path.filename().string() + " row " + std::to_string(row);
    if (cols.size() != 8)
      throw ValidationError(ctx + ": expected 8 columns, got " +
                            std::to_string(cols.size()));
    TrialDescriptor d;
    d.subject_id = trim(cols[0]);
    d.trial_id = trim(cols[1]);
    d.signal_path = dir / std::filesystem::path(trim(cols[2]));
    d.sample_rate_hz = parse_double(cols[3], ctx + " sample_rate_hz");
    d.n_channels = parse_int(cols[4], ctx + " n_channels");
    d.n_samples = parse_int(cols[5], ctx + " n_samples");
    d.digit_correct = parse_bool01(cols[6], ctx + " digit_correct");
    d.sentence_correct = parse_bool01(cols[7], ctx + " sentence_correct");
    if (d.subject_id.empty() || d.trial_id.empty())
      throw ValidationError(ctx + ": empty subject_id or trial_id");
    if (!(d.sample_rate_hz > 0.0))
      throw ValidationError(ctx + ": sample_rate_hz must be > 0");
    if (d.n_channels <= 0 || d.n_samples <= 0)
      throw ValidationError(ctx + ": n_channels and n_samples must be > 0");
    if (!seen_ids.insert(d.trial_id).second)
      throw ValidationError(ctx + ": duplicate trial_id '" + d.trial_id + "'");
    ds.subjects.insert(d.subject_id);
    ds.trials.push_back(std::move(d));
  }
  return ds;
}

void write_manifest(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  const auto dir = path.parent_path();
  out << kManifestHeader << "\n";
  for (const auto& d : ds.trials) {
    const auto rel = d.signal_path.lexically_relative(dir.empty() ? "." : dir);
    out << d.subject_id << ',' << d.trial_id << ','
        << (rel.empty() ? d.signal_path : rel).generic_string() << ','
        << format_full(d.sample_rate_hz) << ',' << d.n_channels << ','
        << d.n_samples << ',' << (d.digit_correct ? 1 : 0) << ','
        << (d.sentence_correct ? 1 : 0) << "\n";
  }
  if (!out) throw IoError("failed writing manifest: " + path.string());
}

Trial load_trial(const TrialDescriptor& d) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(d.signal_path, ec);
  if (ec) throw IoError("cannot stat signal file: " + d.signal_path.string());
  const std::uint64_t expected =
      static_cast<std::uint64_t>(d.n_channels) * d.n_samples * sizeof(float);
  if (size != expected)
    throw ValidationError("trial " + d.trial_id + ": signal file " +
                          d.signal_path.string() + " has " + std::to_string(size) +
                          " bytes, expected " + std::to_string(expected));
  if (d.duration_s() < kMinTrialDuration)
    throw ValidationError("trial " + d.trial_id + ": duration " +
                          format_full(d.duration_s()) + " s is below the 1.0 s minimum");

  std::ifstream in(d.signal_path, std::ios::binary);
  if (!in) throw IoError("cannot open signal file: " + d.signal_path.string());
  std::vector<float> raw(static_cast<std::size_t>(d.n_channels) * d.n_samples);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!in) throw IoError("short read on signal file: " + d.signal_path.string());

  Trial t;
  t.subject_id = d.subject_id;
  t.trial_id = d.trial_id;
  t.sample_rate_hz = d.sample_rate_hz;
  t.digit_correct = d.digit_correct;
  t.sentence_correct = d.sentence_correct;
  t.samples.resize(d.n_channels, d.n_samples);
  for (std::int64_t c = 0; c < d.n_channels; ++c)
    for (std::int64_t s = 0; s < d.n_samples; ++s) {
      const float v = raw[static_cast<std::size_t>(c) * d.n_samples + s];
      if (!std::isfinite(v))
        throw ValidationError("trial " + d.trial_id + ": non-finite sample at channel " +
                              std::to_string(c) + ", index " + std::to_string(s));
      t.samples(c, s) = static_cast<double>(v);
    }
  return t;
}

void write_signal(const Eigen::MatrixXd& samples,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write signal file: " + path.string());
  std::vector<float> row(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index c = 0; c < samples.rows(); ++c) {
    for (Eigen::Index s = 0; s < samples.cols(); ++s)
      row[static_cast<std::size_t>(s)] = static_cast<float>(samples(c, s));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed writing signal file: " + path.string());
}

std::vector<std::string> validate_dataset(const Dataset& ds) {
  std::vector<std::string> warnings;
  std::map<std::string, int> per_subject;
  bool any_digit[2] = {false, false};
  bool any_sentence[2] = {false, false};
  for (const auto& d : ds.trials) {
    per_subject[d.subject_id]++;
    any_digit[d.digit_correct ? 1 : 0] = true;
    any_sentence[d.sentence_correct ? 1 : 0] = true;
    const double dur = d.duration_s();
    if (dur < kMinTrialDuration || dur > kMaxAdvisedDuration)
      warnings.push_back("trial " + d.trial_id + ": duration " + format_full(dur) +
                         " s outside [1, 30] s");
  }
  if (!ds.trials.empty()) {
    if (!any_digit[0] || !any_digit[1])
      warnings.push_back("digit_correct has a single class across the dataset");
    if (!any_sentence[0] || !any_sentence[1])
      warnings.push_back("sentence_correct has a single class across the dataset");
  }
  for (const auto& [subject, count] : per_subject)
    if (count < kMinTrialsPerSubject)
      warnings.push_back("subject " + subject + " has only " + std::to_string(count) +
                         " trials");
  return warnings;
}

std::string to_string(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::connectivity_structure: return "connectivity_structure";
    case FeatureFamily::graph_variability: return "graph_variability";
    case FeatureFamily::log_power: return "log_power";
  }
  throw ValidationError("invalid feature family value");
}

FeatureFamily family_from_string(const std::string& s) {
  if (s == "connectivity_structure") return FeatureFamily::connectivity_structure;
  if (s == "graph_variability") return FeatureFamily::graph_variability;
  if (s == "log_power") return FeatureFamily::log_power;
  throw ValidationError("unknown feature family: '" + s + "'");
}

void write_feature_store(const std::vector<FeatureRecord>& records,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write feature store: " + path.string());
  out << kFeatureHeader << "\n";
  for (const auto& r : records)
    for (Eigen::Index i = 0; i < r.values.size(); ++i)
      out << r.subject_id << ',' << r.trial_id << ',' << to_string(r.family) << ','
          << r.band << ',' << i << ',' << format_full(r.values[i]) << "\n";
  if (!out) throw IoError("failed writing feature store: " + path.string());
}

std::vector<FeatureRecord> read_feature_store(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature store: " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kFeatureHeader)
    throw ValidationError("feature store header mismatch in " + path.string());

  // Rows for one (trial, family, band) group are contiguous with ascending
  // dim, the order write_feature_store produces.
  std::vector<FeatureRecord> records;
  std::vector<double> values;
  FeatureRecord cur;
  bool have_cur = false;
  auto flush = [&] {
    if (!have_cur) return;
    cur.values = Eigen::Map<Eigen::VectorXd>(values.data(),
                                             static_cast<Eigen::Index>(values.size()));
    records.push_back(cur);
    values.clear();
  };

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cols = split(line);
    const std::string ctx = path.filename().string() + " row " + std::to_string(row);
    if (cols.size() != 6)
      throw ValidationError(ctx + ": expected 6 columns, got " +
                            std::to_string(cols.size()));
    const auto family = family_from_string(trim(cols[2]));
    const auto dim = parse_int(cols[4], ctx + " dim");
    if (!have_cur || cur.trial_id != trim(cols[1]) || cur.family != family ||
        cur.band != trim(cols[3])) {
      flush();
      cur.subject_id = trim(cols[0]);
      cur.trial_id = trim(cols[1]);
      cur.family = family;
      cur.band = trim(cols[3]);
      have_cur = true;
    }
    if (dim != static_cast<long long>(values.size()))
      throw ValidationError(ctx + ": non-contiguous dim index " + std::to_string(dim));
    values.push_back(parse_double(cols[5], ctx + " value"));
  }
  flush();
  return records;
}

}  // namespace cohnet
