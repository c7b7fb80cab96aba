#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cohnet/data_model.hpp"

namespace cohnet {

// Welch estimator parameters. Window is Hann (periodic) and detrending is
// per-segment mean removal; both are pinned, only length/overlap vary.
struct SpectralConfig {
  double segment_length_s = 1.0;
  double overlap_fraction = 0.5;
};

// --- IIR filter toolkit -----------------------------------------------------

// One second-order section, normalized so a0 = 1.
struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

using Sos = std::vector<Biquad>;

Sos design_butter_highpass(int order, double cutoff_hz, double sample_rate_hz);
Sos design_butter_bandpass(int order, double lo_hz, double hi_hz,
                           double sample_rate_hz);
Biquad design_notch(double center_hz, double q, double sample_rate_hz);

// Frequency response of the cascade at a single frequency.
std::complex<double> sos_response(const Sos& sos, double freq_hz,
                                  double sample_rate_hz);

// Zero-phase (forward-backward) filtering with odd-reflection padding of
// 3 filter lengths and steady-state initial conditions at both ends.
Eigen::VectorXd filtfilt(const Sos& sos, const Eigen::VectorXd& x);

// 4th-order Butterworth highpass, applied zero-phase to every channel.
Trial highpass_filter(const Trial& trial, double cutoff_hz = 0.1);

// Biquad notch, applied zero-phase to every channel.
Trial notch_filter(const Trial& trial, double center_hz = 60.0, double q = 30.0);

// --- Welch spectra ----------------------------------------------------------

// Welch-averaged auto- and cross-spectra. auto_spectra(c, f) = mean over
// segments of |X_c(f)|^2; cross_spectra(pair(i,j), f) = mean of
// X_i(f) * conj(X_j(f)), pairs stored i < j in lexicographic order.
struct WelchSpectra {
  Eigen::VectorXd freqs;              // Hz, one per kept bin
  Eigen::MatrixXd auto_spectra;       // n_channels x n_bins
  Eigen::MatrixXcd cross_spectra;     // n_pairs x n_bins
  int n_channels = 0;
  int n_segments = 0;
  double sample_rate_hz = 0.0;
  double window_ssq = 0.0;            // sum of squared window values
  int segment_length = 0;             // samples

  Eigen::Index n_bins() const { return freqs.size(); }
  Eigen::Index pair_index(int i, int j) const;
  std::complex<double> cross(int i, int j, Eigen::Index bin) const;
  // One-sided power spectral density at a bin (Hann/fs normalization).
  double psd(int channel, Eigen::Index bin) const;
};

// max_freq_hz < 0 keeps the full one-sided range [0, fs/2].
WelchSpectra welch_spectra(const Trial& trial, const SpectralConfig& config = {},
                           double max_freq_hz = -1.0);

// Bin indices with band.lo_hz <= f < band.hi_hz; error when empty.
std::vector<Eigen::Index> band_bins(const Eigen::VectorXd& freqs,
                                    const FrequencyBand& band);

// --- band-level features ------------------------------------------------------

// Band-averaged magnitude-squared coherence. Symmetric, unit diagonal,
// entries in [0, 1].
struct CoherenceMatrix {
  std::string band;
  Eigen::MatrixXd values;
};

CoherenceMatrix coherence_matrix(const WelchSpectra& spectra,
                                 const FrequencyBand& band);
CoherenceMatrix coherence_matrix(const Trial& trial, const FrequencyBand& band,
                                 const SpectralConfig& config = {});

// Natural log of mean in-band PSD per channel.
struct LogPowerVector {
  std::string band;
  Eigen::VectorXd values;
};

LogPowerVector band_log_power(const WelchSpectra& spectra,
                              const FrequencyBand& band);
LogPowerVector band_log_power(const Trial& trial, const FrequencyBand& band,
                              const SpectralConfig& config = {});

}  // namespace cohnet
