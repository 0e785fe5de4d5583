// DSP primitives: FFT, FIR design and filtering, rational resampling,
// tone measurement, cross-correlation, seeded Gaussian noise.
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "fmscatter/types.hpp"

namespace fmscatter::dsp {

// ---------------------------------------------------------------------------
// FFT (iterative radix-2, double precision)
// ---------------------------------------------------------------------------

std::size_t next_pow2(std::size_t n);

/// In-place FFT; size must be a power of two. Inverse includes the 1/N factor.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse = false);

/// Forward FFT of a real buffer, zero-padded to the next power of two
/// (or to `min_size` if larger).
std::vector<std::complex<double>> fft_real(const std::vector<float>& x,
                                           std::size_t min_size = 0);

// ---------------------------------------------------------------------------
// Windows and FIR design
// ---------------------------------------------------------------------------

std::vector<double> hann_window(std::size_t n);

/// Zeroth-order modified Bessel function of the first kind (for Kaiser windows).
double bessel_i0(double x);

/// Kaiser-windowed sinc low-pass. Pass/stop edges are cutoff_hz -/+
/// transition_hz/2; DC gain is exactly 1. Returns an odd-length tap vector.
std::vector<double> design_lowpass(double cutoff_hz, double transition_hz,
                                   double sample_rate, double atten_db);

/// Band-pass from a modulated low-pass prototype; unit passband gain.
std::vector<double> design_bandpass(double f_lo, double f_hi, double transition_hz,
                                    double sample_rate, double atten_db);

/// Linear-phase FIR with the group delay compensated: output sample n is
/// time-aligned with input sample n (edges see an implicit zero pad).
/// Switches to overlap-save FFT convolution when the direct form would be slow.
std::vector<float> fir_apply(const std::vector<float>& x,
                             const std::vector<double>& taps);
std::vector<std::complex<float>> fir_apply(const std::vector<std::complex<float>>& x,
                                           const std::vector<double>& taps);

/// Filter + decimate in one pass (computes only the kept outputs).
/// Output k is time-aligned with input k*factor.
std::vector<std::complex<float>> fir_decimate(const std::vector<std::complex<float>>& x,
                                              const std::vector<double>& taps,
                                              int factor);
std::vector<float> fir_decimate(const std::vector<float>& x,
                                const std::vector<double>& taps,
                                int factor);

// ---------------------------------------------------------------------------
// Rational resampling
// ---------------------------------------------------------------------------

/// Polyphase windowed-sinc resampler. The ratio out_rate/in_rate is reduced
/// to p/q and evaluated on the exact rational time grid t_n = n*q/p, so
/// repeated runs are bit-identical and no timing drift accumulates.
/// Output sample n corresponds to input time n*in_rate/out_rate.
std::vector<float> resample(const std::vector<float>& x,
                            std::int64_t in_rate, std::int64_t out_rate);

AudioBuffer resample(const AudioBuffer& x, int out_rate);

/// Evaluate x at fractional positions n - delay_samples (windowed-sinc
/// interpolation); used to inject known sub-sample offsets in fixtures.
std::vector<float> fractional_delay(const std::vector<float>& x, double delay_samples);

// ---------------------------------------------------------------------------
// Spectrum measurement
// ---------------------------------------------------------------------------

/// Mean-square power of the band [f_lo, f_hi] (Hann-windowed periodogram,
/// averaged over segments for long buffers). Bands are additive: summing
/// disjoint bands over [0, fs/2] recovers the total mean-square power.
double band_power(const std::vector<float>& x, double sample_rate,
                  double f_lo, double f_hi);

struct ToneEstimate {
    double amplitude = 0.0;
    double phase = 0.0;     // radians at sample index 0
    double power = 0.0;     // mean-square contribution
};

/// Amplitude/phase of a sinusoid at a known frequency (windowed correlation).
ToneEstimate measure_tone(const std::vector<float>& x, double sample_rate,
                          double freq_hz);

/// Symmetric 99%-power occupied bandwidth about the buffer center frequency.
double occupied_bandwidth(const IqBuffer& iq, double fraction = 0.99);

/// Mean-square power of complex samples in [f_lo, f_hi] relative to baseband 0.
double band_power_complex(const std::vector<std::complex<float>>& x,
                          double sample_rate, double f_lo, double f_hi);

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

struct CrossCorrelation {
    std::vector<double> values; // r[l] = sum_n a[n] * b[n + lag]
    std::int64_t lag_min = 0;   // lag of values.front()

    std::int64_t lag_of(std::size_t idx) const { return lag_min + std::int64_t(idx); }
};

/// Full FFT cross-correlation r[l] = sum_n a[n]*b[n+l]. If b lags a by d
/// samples (b[n] = a[n-d]), the peak sits at l = +d.
CrossCorrelation cross_correlate(const std::vector<float>& a,
                                 const std::vector<float>& b);

struct TemplateMatch {
    std::int64_t offset = -1;  // start of best match in x
    double score = 0.0;        // normalized correlation in [-1, 1]
};

/// Slide `tmpl` over `x`; score is correlation normalized by both the
/// template energy and the local window energy of x.
TemplateMatch match_template(const std::vector<float>& x,
                             const std::vector<float>& tmpl);

/// Best-fit scale a and offset b minimizing ||y - (a*x + b)||^2, and the
/// residual power ratio 10*log10(P_resid / P_fit). Used for fit-residual
/// style assertions.
struct LinearFit {
    double scale = 0.0;
    double offset = 0.0;
    double residual_db = 0.0;
    double correlation = 0.0;  // Pearson r
};
LinearFit fit_linear(const std::vector<float>& x, const std::vector<float>& y);

// ---------------------------------------------------------------------------
// Deterministic RNG
// ---------------------------------------------------------------------------

/// SplitMix64: tiny, portable, bit-reproducible across platforms.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    /// Uniform in (0, 1].
    double uniform() {
        return (double(next() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
    }
    /// Standard normal (Box-Muller; one value per call, cached pair).
    double gaussian();

private:
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Stable per-task stream derivation from (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

} // namespace fmscatter::dsp
