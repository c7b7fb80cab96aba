#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cohnet/data_model.hpp"

namespace cohnet {

// Counter-based generator keyed by (seed, subject, trial, channel, purpose):
// every random quantity in a dataset has its own named stream, so trials can
// be produced in any order (or in parallel) with identical results. Values
// come from a splitmix64 sequence whose start is mixed from the key.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::uint64_t subject, std::uint64_t trial,
           std::uint64_t channel, std::uint64_t purpose);

  std::uint64_t next_u64();
  double uniform();   // [0, 1)
  double gaussian();  // standard normal, Box-Muller

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream purposes; values are part of the pinned generator contract.
namespace rng_purpose {
inline constexpr std::uint64_t duration = 1;
inline constexpr std::uint64_t digit_label = 2;
inline constexpr std::uint64_t sentence_label = 3;
inline constexpr std::uint64_t noise = 4;
inline constexpr std::uint64_t shared_digit = 5;
inline constexpr std::uint64_t shared_sentence = 6;
inline constexpr std::uint64_t weight_digit = 7;
inline constexpr std::uint64_t weight_sentence = 8;
}  // namespace rng_purpose

struct SynthConfig {
  std::uint64_t seed = 1;
  int n_subjects = 8;
  int trials_per_subject = 64;
  double failure_rate = 0.3;
  double sample_rate_hz = 256.0;
  double duration_lo_s = 3.8;
  double duration_hi_s = 7.7;
  int n_channels = 64;
  // Shared-source gain per band name for each class; absent bands default
  // to 1.0. Equal maps plant no effect (null data).
  std::map<std::string, double> gain_succ;
  std::map<std::string, double> gain_fail;
  double subject_scale_jitter = 0.1;
};

void validate_synth_config(const SynthConfig& config,
                           const std::vector<FrequencyBand>& bands);

// Label draws are separated from sample synthesis so callers can reproduce a
// dataset's labels without generating any signal.
struct TrialLabels {
  bool digit_fail = false;
  bool sentence_fail = false;
};

TrialLabels draw_labels(const SynthConfig& config, int subject_index,
                        int trial_index);

std::string synth_subject_id(int subject_index);
std::string synth_trial_id(int subject_index, int trial_index);

// Deterministic for a given (seed, subject, trial): channels are a weighted
// sum of band-limited sources shared across channels plus independent white
// noise. The configured bands interleave between the labels (digit: even
// indices, sentence: odd), keeping the two planted effects spectrally
// disjoint and independently decodable. Samples are quantized to float32 so
// in-memory trials match their round trip through the signal files bit for
// bit.
Trial generate_trial(const SynthConfig& config,
                     const std::vector<FrequencyBand>& bands, int subject_index,
                     int trial_index, const TrialLabels& labels);

// Writes manifest.csv plus one <trial_id>.f32 per trial under out_dir.
Dataset generate_dataset(const SynthConfig& config,
                         const std::vector<FrequencyBand>& bands,
                         const std::filesystem::path& out_dir);

}  // namespace cohnet
