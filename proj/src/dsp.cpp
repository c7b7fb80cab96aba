#include "cohnet/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "cohnet/errors.hpp"
#include "cohnet/util.hpp"

namespace cohnet {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Filter design: analog prototype -> frequency transform -> bilinear -> SOS.
// ---------------------------------------------------------------------------

struct Zpk {
  std::vector<std::complex<double>> zeros;
  std::vector<std::complex<double>> poles;
  double gain = 1.0;
};

Zpk butter_prototype(int order) {
  if (order < 2 || order % 2 != 0)
    throw ValidationError("Butterworth design supports even orders >= 2");
  Zpk out;
  out.poles.reserve(order);
  for (int k = 1; k <= order; ++k) {
    const double theta = kPi * (2.0 * k + order - 1.0) / (2.0 * order);
    out.poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return out;
}

std::complex<double> product_of(const std::vector<std::complex<double>>& v) {
  std::complex<double> p{1.0, 0.0};
  for (const auto& x : v) p *= x;
  return p;
}

Zpk lp2hp(const Zpk& lp, double w0) {
  Zpk out;
  const int degree = static_cast<int>(lp.poles.size() - lp.zeros.size());
  for (const auto& z : lp.zeros) out.zeros.push_back(w0 / z);
  for (const auto& p : lp.poles) out.poles.push_back(w0 / p);
  for (int i = 0; i < degree; ++i) out.zeros.emplace_back(0.0, 0.0);
  std::vector<std::complex<double>> neg_z, neg_p;
  for (const auto& z : lp.zeros) neg_z.push_back(-z);
  for (const auto& p : lp.poles) neg_p.push_back(-p);
  out.gain = lp.gain * (product_of(neg_z) / product_of(neg_p)).real();
  return out;
}

Zpk lp2bp(const Zpk& lp, double w0, double bw) {
  Zpk out;
  const int degree = static_cast<int>(lp.poles.size() - lp.zeros.size());
  auto split = [&](const std::complex<double>& s,
                   std::vector<std::complex<double>>& into) {
    const std::complex<double> scaled = s * (bw / 2.0);
    const std::complex<double> root = std::sqrt(scaled * scaled - w0 * w0);
    into.push_back(scaled + root);
    into.push_back(scaled - root);
  };
  for (const auto& z : lp.zeros) split(z, out.zeros);
  for (const auto& p : lp.poles) split(p, out.poles);
  for (int i = 0; i < degree; ++i) out.zeros.emplace_back(0.0, 0.0);
  out.gain = lp.gain * std::pow(bw, degree);
  return out;
}

Zpk bilinear(const Zpk& analog, double sample_rate_hz) {
  const double fs2 = 2.0 * sample_rate_hz;
  Zpk out;
  std::complex<double> num{1.0, 0.0}, den{1.0, 0.0};
  for (const auto& z : analog.zeros) {
    out.zeros.push_back((fs2 + z) / (fs2 - z));
    num *= (fs2 - z);
  }
  for (const auto& p : analog.poles) {
    out.poles.push_back((fs2 + p) / (fs2 - p));
    den *= (fs2 - p);
  }
  const int degree = static_cast<int>(analog.poles.size() - analog.zeros.size());
  for (int i = 0; i < degree; ++i) out.zeros.emplace_back(-1.0, 0.0);
  out.gain = analog.gain * (num / den).real();
  return out;
}

// Pairs conjugate roots (real roots pair max-with-min) so each section gets
// real coefficients.
std::vector<std::pair<std::complex<double>, std::complex<double>>> pair_roots(
    std::vector<std::complex<double>> roots) {
  constexpr double tol = 1e-10;
  std::vector<std::pair<std::complex<double>, std::complex<double>>> pairs;
  std::vector<std::complex<double>> reals;
  std::vector<std::complex<double>> upper;
  for (const auto& r : roots) {
    if (std::abs(r.imag()) <= tol)
      reals.push_back(r);
    else if (r.imag() > 0.0)
      upper.push_back(r);
  }
  for (const auto& u : upper) pairs.emplace_back(u, std::conj(u));
  std::sort(reals.begin(), reals.end(),
            [](const auto& a, const auto& b) { return a.real() < b.real(); });
  while (reals.size() >= 2) {
    pairs.emplace_back(reals.front(), reals.back());
    reals.erase(reals.begin());
    reals.pop_back();
  }
  if (!reals.empty())
    throw ValidationError("filter design produced an odd number of real roots");
  return pairs;
}

Sos zpk_to_sos(const Zpk& zpk) {
  if (zpk.zeros.size() != zpk.poles.size() || zpk.poles.size() % 2 != 0)
    throw ValidationError("SOS conversion expects an even, matched zero/pole count");
  if (!(zpk.gain > 0.0))
    throw ValidationError("SOS conversion expects a positive gain");
  const auto zero_pairs = pair_roots(zpk.zeros);
  const auto pole_pairs = pair_roots(zpk.poles);
  const std::size_t n_sections = pole_pairs.size();
  const double g = std::pow(zpk.gain, 1.0 / static_cast<double>(n_sections));
  Sos sos;
  for (std::size_t s = 0; s < n_sections; ++s) {
    const auto& [z1, z2] = zero_pairs[s];
    const auto& [p1, p2] = pole_pairs[s];
    Biquad bi;
    bi.b0 = g;
    bi.b1 = -g * (z1 + z2).real();
    bi.b2 = g * (z1 * z2).real();
    bi.a1 = -(p1 + p2).real();
    bi.a2 = (p1 * p2).real();
    sos.push_back(bi);
  }
  return sos;
}

double prewarp(double freq_hz, double sample_rate_hz) {
  return 2.0 * sample_rate_hz * std::tan(kPi * freq_hz / sample_rate_hz);
}

void require_below_nyquist(double freq_hz, double sample_rate_hz,
                           const char* what) {
  if (!(freq_hz > 0.0))
    throw ValidationError(std::string(what) + " must be > 0 Hz");
  if (!(freq_hz < sample_rate_hz / 2.0))
    throw ValidationError(std::string(what) + " " + format_full(freq_hz) +
                          " Hz is at or above Nyquist (" +
                          format_full(sample_rate_hz / 2.0) + " Hz)");
}

// Steady-state DF2T state for unit step input, one section.
void section_step_state(const Biquad& s, double& s1, double& s2, double& dc_gain) {
  const double denom = 1.0 + s.a1 + s.a2;
  dc_gain = denom != 0.0 ? (s.b0 + s.b1 + s.b2) / denom : 0.0;
  s2 = s.b2 - s.a2 * dc_gain;
  s1 = s.b1 - s.a1 * dc_gain + s2;
}

void sos_filter_inplace(const Sos& sos, Eigen::VectorXd& y) {
  double scale = y[0];
  for (const auto& s : sos) {
    double zi1, zi2, dc;
    section_step_state(s, zi1, zi2, dc);
    double s1 = zi1 * scale;
    double s2 = zi2 * scale;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double xn = y[i];
      const double yn = s.b0 * xn + s1;
      s1 = s.b1 * xn - s.a1 * yn + s2;
      s2 = s.b2 * xn - s.a2 * yn;
      y[i] = yn;
    }
    scale *= dc;
  }
}

}  // namespace

Sos design_butter_highpass(int order, double cutoff_hz, double sample_rate_hz) {
  require_below_nyquist(cutoff_hz, sample_rate_hz, "highpass cutoff");
  const double warped = prewarp(cutoff_hz, sample_rate_hz);
  return zpk_to_sos(bilinear(lp2hp(butter_prototype(order), warped), sample_rate_hz));
}

Sos design_butter_bandpass(int order, double lo_hz, double hi_hz,
                           double sample_rate_hz) {
  require_below_nyquist(lo_hz, sample_rate_hz, "bandpass low edge");
  require_below_nyquist(hi_hz, sample_rate_hz, "bandpass high edge");
  if (!(hi_hz > lo_hz))
    throw ValidationError("bandpass edges must satisfy lo < hi");
  const double w_lo = prewarp(lo_hz, sample_rate_hz);
  const double w_hi = prewarp(hi_hz, sample_rate_hz);
  const double w0 = std::sqrt(w_lo * w_hi);
  const double bw = w_hi - w_lo;
  return zpk_to_sos(bilinear(lp2bp(butter_prototype(order), w0, bw), sample_rate_hz));
}

Biquad design_notch(double center_hz, double q, double sample_rate_hz) {
  require_below_nyquist(center_hz, sample_rate_hz, "notch center");
  if (!(q > 0.0)) throw ValidationError("notch Q must be > 0");
  const double w0 = 2.0 * kPi * center_hz / sample_rate_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * std::cos(w0) / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

std::complex<double> sos_response(const Sos& sos, double freq_hz,
                                  double sample_rate_hz) {
  const double w = 2.0 * kPi * freq_hz / sample_rate_hz;
  const std::complex<double> e1 = std::polar(1.0, -w);
  const std::complex<double> e2 = std::polar(1.0, -2.0 * w);
  std::complex<double> h{1.0, 0.0};
  for (const auto& s : sos)
    h *= (s.b0 + s.b1 * e1 + s.b2 * e2) / (1.0 + s.a1 * e1 + s.a2 * e2);
  return h;
}

Eigen::VectorXd filtfilt(const Sos& sos, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const Eigen::Index padlen = 3 * (2 * static_cast<Eigen::Index>(sos.size()) + 1);
  if (n <= padlen)
    throw ValidationError("signal too short for zero-phase filtering: " +
                          std::to_string(n) + " samples, need > " +
                          std::to_string(padlen));
  Eigen::VectorXd ext(n + 2 * padlen);
  for (Eigen::Index i = 0; i < padlen; ++i)
    ext[i] = 2.0 * x[0] - x[padlen - i];
  ext.segment(padlen, n) = x;
  for (Eigen::Index i = 0; i < padlen; ++i)
    ext[padlen + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  sos_filter_inplace(sos, ext);
  ext.reverseInPlace();
  sos_filter_inplace(sos, ext);
  ext.reverseInPlace();
  return ext.segment(padlen, n);
}

namespace {

Trial filter_trial(const Trial& trial, const Sos& sos) {
  Trial out = trial;
  for (Eigen::Index c = 0; c < trial.n_channels(); ++c) {
    const Eigen::VectorXd channel = trial.samples.row(c).transpose();
    out.samples.row(c) = filtfilt(sos, channel).transpose();
  }
  return out;
}

}  // namespace

Trial highpass_filter(const Trial& trial, double cutoff_hz) {
  return filter_trial(trial, design_butter_highpass(4, cutoff_hz, trial.sample_rate_hz));
}

Trial notch_filter(const Trial& trial, double center_hz, double q) {
  return filter_trial(trial, Sos{design_notch(center_hz, q, trial.sample_rate_hz)});
}

// ---------------------------------------------------------------------------
// Welch spectra
// ---------------------------------------------------------------------------

namespace {

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

// RAII wrapper for a real-to-complex FFTW plan. Planning/destruction are
// serialized (FFTW requirement); execution is thread-safe per instance.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(fftw_plan_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }

  void forward(const double* x, std::complex<double>* spectrum) {
    std::memcpy(in_, x, sizeof(double) * static_cast<std::size_t>(n_));
    fftw_execute(plan_);
    std::memcpy(spectrum, out_,
                sizeof(fftw_complex) * static_cast<std::size_t>(n_ / 2 + 1));
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

Eigen::Index WelchSpectra::pair_index(int i, int j) const {
  if (i == j || i < 0 || j < 0 || i >= n_channels || j >= n_channels)
    throw ValidationError("invalid channel pair (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
  if (i > j) std::swap(i, j);
  // pairs (0,1), (0,2), ..., (0,n-1), (1,2), ...
  const Eigen::Index n = n_channels;
  return static_cast<Eigen::Index>(i) * n - (static_cast<Eigen::Index>(i) * (i + 1)) / 2 +
         (j - i - 1);
}

std::complex<double> WelchSpectra::cross(int i, int j, Eigen::Index bin) const {
  if (i == j) return {auto_spectra(i, bin), 0.0};
  const auto v = cross_spectra(pair_index(i, j), bin);
  return i < j ? v : std::conj(v);
}

double WelchSpectra::psd(int channel, Eigen::Index bin) const {
  const bool is_dc = bin == 0;
  const bool is_nyquist = (segment_length % 2 == 0) && bin == segment_length / 2;
  const double one_sided = (is_dc || is_nyquist) ? 1.0 : 2.0;
  return auto_spectra(channel, bin) * one_sided / (sample_rate_hz * window_ssq);
}

WelchSpectra welch_spectra(const Trial& trial, const SpectralConfig& config,
                           double max_freq_hz) {
  if (!(config.segment_length_s > 0.0))
    throw ValidationError("spectral.segment_length_s must be > 0");
  if (!(config.overlap_fraction >= 0.0 && config.overlap_fraction < 1.0))
    throw ValidationError("spectral.overlap_fraction must be in [0, 1)");
  const double fs = trial.sample_rate_hz;
  const int seg = static_cast<int>(std::llround(config.segment_length_s * fs));
  if (seg < 32)
    throw ValidationError("segment length " + std::to_string(seg) +
                          " samples is below the 32-sample minimum");
  const int step = std::max(
      1, static_cast<int>(std::llround(seg * (1.0 - config.overlap_fraction))));
  const Eigen::Index n = trial.n_samples();
  if (n < seg + step)
    throw ValidationError("trial " + trial.trial_id + ": " + std::to_string(n) +
                          " samples fit fewer than 2 segments of " +
                          std::to_string(seg));
  const int n_segments = 1 + static_cast<int>((n - seg) / step);
  const int nch = static_cast<int>(trial.n_channels());
  const Eigen::Index full_bins = seg / 2 + 1;
  Eigen::Index n_bins = full_bins;
  if (max_freq_hz >= 0.0)
    n_bins = std::min<Eigen::Index>(
        full_bins, static_cast<Eigen::Index>(std::floor(max_freq_hz * seg / fs)) + 1);

  Eigen::VectorXd window(seg);
  for (int i = 0; i < seg; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / seg);

  WelchSpectra ws;
  ws.n_channels = nch;
  ws.n_segments = n_segments;
  ws.sample_rate_hz = fs;
  ws.window_ssq = window.squaredNorm();
  ws.segment_length = seg;
  ws.freqs.resize(n_bins);
  for (Eigen::Index k = 0; k < n_bins; ++k) ws.freqs[k] = k * fs / seg;

  const Eigen::Index n_pairs = static_cast<Eigen::Index>(nch) * (nch - 1) / 2;
  ws.auto_spectra = Eigen::MatrixXd::Zero(nch, n_bins);
  ws.cross_spectra = Eigen::MatrixXcd::Zero(n_pairs, n_bins);

  RealFft fft(seg);
  Eigen::VectorXd buf(seg);
  std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(full_bins));
  Eigen::MatrixXcd z(nch, n_bins);

  for (int s = 0; s < n_segments; ++s) {
    const Eigen::Index offset = static_cast<Eigen::Index>(s) * step;
    for (int c = 0; c < nch; ++c) {
      buf = trial.samples.row(c).segment(offset, seg).transpose();
      buf.array() -= buf.mean();
      buf.array() *= window.array();
      fft.forward(buf.data(), spectrum.data());
      for (Eigen::Index k = 0; k < n_bins; ++k) z(c, k) = spectrum[static_cast<std::size_t>(k)];
    }
    ws.auto_spectra += z.array().abs2().matrix();
    Eigen::Index p = 0;
    for (int i = 0; i < nch; ++i)
      for (int j = i + 1; j < nch; ++j, ++p)
        ws.cross_spectra.row(p) +=
            (z.row(i).array() * z.row(j).array().conjugate()).matrix();
  }
  ws.auto_spectra /= n_segments;
  ws.cross_spectra /= static_cast<double>(n_segments);
  return ws;
}

std::vector<Eigen::Index> band_bins(const Eigen::VectorXd& freqs,
                                    const FrequencyBand& band) {
  constexpr double eps = 1e-9;
  std::vector<Eigen::Index> bins;
  for (Eigen::Index k = 0; k < freqs.size(); ++k)
    if (freqs[k] >= band.lo_hz - eps && freqs[k] < band.hi_hz - eps)
      bins.push_back(k);
  if (bins.empty())
    throw ValidationError("band " + band.name + " [" + format_full(band.lo_hz) +
                          ", " + format_full(band.hi_hz) +
                          ") contains no frequency bins");
  return bins;
}

namespace {

// Guards against a band reaching past the bins a truncated spectrum kept.
void require_band_covered(const WelchSpectra& ws, const FrequencyBand& band) {
  const double spacing = ws.sample_rate_hz / ws.segment_length;
  const double covered_to = ws.freqs[ws.freqs.size() - 1] + spacing;
  const double nyquist = ws.sample_rate_hz / 2.0;
  if (band.hi_hz > nyquist + 1e-9)
    throw ValidationError("band " + band.name + " extends beyond Nyquist (" +
                          format_full(nyquist) + " Hz)");
  if (covered_to < std::min(band.hi_hz, nyquist) - 1e-9)
    throw ValidationError("band " + band.name +
                          " extends beyond the computed spectrum (kept up to " +
                          format_full(covered_to) + " Hz)");
}

}  // namespace

CoherenceMatrix coherence_matrix(const WelchSpectra& ws, const FrequencyBand& band) {
  require_band_covered(ws, band);
  const auto bins = band_bins(ws.freqs, band);
  const int nch = ws.n_channels;

  // Reject channels with no in-band power before touching any quotient.
  Eigen::MatrixXd inv_auto(nch, static_cast<Eigen::Index>(bins.size()));
  for (int c = 0; c < nch; ++c)
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const double a = ws.auto_spectra(c, bins[b]);
      if (!(a > 0.0))
        throw ValidationError("channel " + std::to_string(c) +
                              ": zero in-band power in band " + band.name);
      inv_auto(c, static_cast<Eigen::Index>(b)) = 1.0 / a;
    }

  CoherenceMatrix out;
  out.band = band.name;
  out.values = Eigen::MatrixXd::Identity(nch, nch);
  Eigen::Index p = 0;
  for (int i = 0; i < nch; ++i)
    for (int j = i + 1; j < nch; ++j, ++p) {
      double sum = 0.0;
      for (std::size_t b = 0; b < bins.size(); ++b) {
        const double num = std::norm(ws.cross_spectra(p, bins[b]));
        sum += num * inv_auto(i, static_cast<Eigen::Index>(b)) *
               inv_auto(j, static_cast<Eigen::Index>(b));
      }
      const double msc = std::clamp(sum / static_cast<double>(bins.size()), 0.0, 1.0);
      out.values(i, j) = msc;
      out.values(j, i) = msc;
    }
  return out;
}

CoherenceMatrix coherence_matrix(const Trial& trial, const FrequencyBand& band,
                                 const SpectralConfig& config) {
  return coherence_matrix(welch_spectra(trial, config), band);
}

LogPowerVector band_log_power(const WelchSpectra& ws, const FrequencyBand& band) {
  require_band_covered(ws, band);
  const auto bins = band_bins(ws.freqs, band);
  LogPowerVector out;
  out.band = band.name;
  out.values.resize(ws.n_channels);
  for (int c = 0; c < ws.n_channels; ++c) {
    double mean_psd = 0.0;
    for (const auto b : bins) mean_psd += ws.psd(c, b);
    mean_psd /= static_cast<double>(bins.size());
    if (!(mean_psd > 0.0))
      throw ValidationError("channel " + std::to_string(c) +
                            ": zero in-band power in band " + band.name);
    out.values[c] = std::log(mean_psd);
  }
  return out;
}

LogPowerVector band_log_power(const Trial& trial, const FrequencyBand& band,
                              const SpectralConfig& config) {
  return band_log_power(welch_spectra(trial, config), band);
}

}  // namespace cohnet
