#include "cohnet/synthgen.hpp"

#include <cmath>
#include <numbers>

#include "cohnet/dsp.hpp"
#include "cohnet/errors.hpp"
#include "cohnet/util.hpp"

namespace cohnet {

namespace {

std::uint64_t splitmix_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

KeyedRng::KeyedRng(std::uint64_t seed, std::uint64_t subject, std::uint64_t trial,
                   std::uint64_t channel, std::uint64_t purpose) {
  std::uint64_t x = splitmix_mix(seed);
  x = splitmix_mix(x ^ subject);
  x = splitmix_mix(x ^ trial);
  x = splitmix_mix(x ^ channel);
  x = splitmix_mix(x ^ purpose);
  state_ = x;
}

std::uint64_t KeyedRng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double KeyedRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double KeyedRng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

namespace {

double gain_for(const std::map<std::string, double>& gains, const std::string& band) {
  const auto it = gains.find(band);
  return it == gains.end() ? 1.0 : it->second;
}

}  // namespace

void validate_synth_config(const SynthConfig& config,
                           const std::vector<FrequencyBand>& bands) {
  if (config.n_subjects < 2)
    throw ValidationError("synth.n_subjects must be >= 2, got " +
                          std::to_string(config.n_subjects));
  if (config.trials_per_subject < 1)
    throw ValidationError("synth.trials_per_subject must be >= 1");
  if (!(config.failure_rate > 0.0 && config.failure_rate < 1.0))
    throw ValidationError("synth.failure_rate must be in (0, 1), got " +
                          format_full(config.failure_rate));
  const double expected_fail = config.failure_rate * config.trials_per_subject;
  const double expected_succ = (1.0 - config.failure_rate) * config.trials_per_subject;
  if (expected_fail < 2.0 || expected_succ < 2.0)
    throw ValidationError(
        "synth.failure_rate and trials_per_subject expect fewer than 2 trials "
        "of one class per subject (" +
        format_fixed(expected_fail, 2) + " failure / " +
        format_fixed(expected_succ, 2) + " success)");
  if (!(config.sample_rate_hz > 0.0))
    throw ValidationError("synth.sample_rate_hz must be > 0");
  if (!(config.duration_lo_s >= 1.0))
    throw ValidationError("synth.duration_lo_s must be >= 1.0 s");
  if (!(config.duration_hi_s >= config.duration_lo_s))
    throw ValidationError("synth.duration_hi_s must be >= duration_lo_s");
  if (config.n_channels < 2)
    throw ValidationError("synth.n_channels must be >= 2");
  if (!(config.subject_scale_jitter >= 0.0) ||
      !std::isfinite(config.subject_scale_jitter))
    throw ValidationError("synth.subject_scale_jitter must be finite and >= 0");
  for (const auto& band : bands) {
    if (!(band.hi_hz < config.sample_rate_hz / 2.0))
      throw ValidationError("band " + band.name + " reaches " +
                            format_full(band.hi_hz) + " Hz, at or above Nyquist (" +
                            format_full(config.sample_rate_hz / 2.0) + " Hz)");
    for (const auto* gains : {&config.gain_succ, &config.gain_fail}) {
      const double g = gain_for(*gains, band.name);
      if (!std::isfinite(g) || g < 0.0)
        throw ValidationError("synth gain for band " + band.name +
                              " must be finite and >= 0");
    }
  }
}

TrialLabels draw_labels(const SynthConfig& config, int subject_index,
                        int trial_index) {
  const auto s = static_cast<std::uint64_t>(subject_index);
  const auto t = static_cast<std::uint64_t>(trial_index);
  TrialLabels labels;
  labels.digit_fail =
      KeyedRng(config.seed, s, t, 0, rng_purpose::digit_label).uniform() <
      config.failure_rate;
  labels.sentence_fail =
      KeyedRng(config.seed, s, t, 0, rng_purpose::sentence_label).uniform() <
      config.failure_rate;
  return labels;
}

std::string synth_subject_id(int subject_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02d", subject_index + 1);
  return buf;
}

std::string synth_trial_id(int subject_index, int trial_index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "s%02d_t%03d", subject_index + 1, trial_index);
  return buf;
}

Trial generate_trial(const SynthConfig& config,
                     const std::vector<FrequencyBand>& bands, int subject_index,
                     int trial_index, const TrialLabels& labels) {
  const auto s = static_cast<std::uint64_t>(subject_index);
  const auto t = static_cast<std::uint64_t>(trial_index);
  const double fs = config.sample_rate_hz;

  KeyedRng duration_rng(config.seed, s, t, 0, rng_purpose::duration);
  const double duration =
      config.duration_lo_s +
      duration_rng.uniform() * (config.duration_hi_s - config.duration_lo_s);
  const auto n = static_cast<Eigen::Index>(std::llround(duration * fs));

  struct LabelPlan {
    std::uint64_t shared_purpose;
    std::uint64_t weight_purpose;
    bool fail;
  };
  const LabelPlan plans[2] = {
      {rng_purpose::shared_digit, rng_purpose::weight_digit, labels.digit_fail},
      {rng_purpose::shared_sentence, rng_purpose::weight_sentence,
       labels.sentence_fail},
  };

  // Band-limited sources shared across channels. The bands interleave
  // between the two labels (digit: even indices, sentence: odd) so each
  // label's planted effect stays spectrally disjoint from the other's and
  // the two stay independently decodable.
  std::vector<std::vector<Eigen::VectorXd>> sources(2);
  for (int lp = 0; lp < 2; ++lp) {
    sources[static_cast<std::size_t>(lp)].resize(bands.size());
    for (std::size_t b = 0; b < bands.size(); ++b) {
      if (static_cast<int>(b % 2) != lp) continue;
      KeyedRng rng(config.seed, s, t, static_cast<std::uint64_t>(b),
                   plans[lp].shared_purpose);
      Eigen::VectorXd white(n);
      for (Eigen::Index i = 0; i < n; ++i) white[i] = rng.gaussian();
      const Sos bp = design_butter_bandpass(2, bands[b].lo_hz, bands[b].hi_hz, fs);
      sources[static_cast<std::size_t>(lp)][b] = filtfilt(bp, white);
    }
  }

  Trial trial;
  trial.subject_id = synth_subject_id(subject_index);
  trial.trial_id = synth_trial_id(subject_index, trial_index);
  trial.sample_rate_hz = fs;
  trial.digit_correct = !labels.digit_fail;
  trial.sentence_correct = !labels.sentence_fail;
  trial.samples.resize(config.n_channels, n);

  for (int c = 0; c < config.n_channels; ++c) {
    KeyedRng noise_rng(config.seed, s, t, static_cast<std::uint64_t>(c),
                       rng_purpose::noise);
    Eigen::VectorXd channel(n);
    for (Eigen::Index i = 0; i < n; ++i) channel[i] = noise_rng.gaussian();

    for (int lp = 0; lp < 2; ++lp) {
      const auto& gains = plans[lp].fail ? config.gain_fail : config.gain_succ;
      for (std::size_t b = 0; b < bands.size(); ++b) {
        if (static_cast<int>(b % 2) != lp) continue;
        // Mixing weights depend on (subject, channel, band) only: each
        // synthetic subject keeps a stable connectivity fingerprint.
        KeyedRng weight_rng(config.seed, s, static_cast<std::uint64_t>(b),
                            static_cast<std::uint64_t>(c), plans[lp].weight_purpose);
        const double weight =
            1.0 + config.subject_scale_jitter * weight_rng.gaussian();
        const double gain = gain_for(gains, bands[b].name);
        if (gain != 0.0)
          channel += gain * weight * sources[static_cast<std::size_t>(lp)][b];
      }
    }
    // Quantize so in-memory samples match the float32 signal files exactly.
    // The rounding goes through named float storage: GCC 11 at -O3 can fold
    // a bare double(float(x)) chain away when the arithmetic inlines into it.
    const Eigen::VectorXf quantized = channel.cast<float>();
    trial.samples.row(c) = quantized.cast<double>().transpose();
  }
  return trial;
}

Dataset generate_dataset(const SynthConfig& config,
                         const std::vector<FrequencyBand>& bands,
                         const std::filesystem::path& out_dir) {
  validate_synth_config(config, bands);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() +
                        ": " + ec.message());

  Dataset dataset;
  for (int si = 0; si < config.n_subjects; ++si) {
    for (int ti = 0; ti < config.trials_per_subject; ++ti) {
      const TrialLabels labels = draw_labels(config, si, ti);
      const Trial trial = generate_trial(config, bands, si, ti, labels);
      const std::filesystem::path signal_path = out_dir / (trial.trial_id + ".f32");
      write_signal(trial.samples, signal_path);

      TrialDescriptor desc;
      desc.subject_id = trial.subject_id;
      desc.trial_id = trial.trial_id;
      desc.signal_path = signal_path;
      desc.sample_rate_hz = trial.sample_rate_hz;
      desc.n_channels = trial.n_channels();
      desc.n_samples = trial.n_samples();
      desc.digit_correct = trial.digit_correct;
      desc.sentence_correct = trial.sentence_correct;
      dataset.trials.push_back(desc);
      dataset.subjects.insert(desc.subject_id);
    }
  }
  write_manifest(dataset, out_dir / "manifest.csv");
  return dataset;
}

}  // namespace cohnet
