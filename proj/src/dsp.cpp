#include "fmscatter/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fmscatter::dsp {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;
} // namespace

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
    const std::size_t n = x.size();
    if (n == 0) return;
    if ((n & (n - 1)) != 0)
        throw InvalidInput("fft_inplace: size must be a power of two");

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / double(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = x[i + k];
                std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / double(n);
        for (auto& v : x) v *= inv_n;
    }
}

std::vector<std::complex<double>> fft_real(const std::vector<float>& x,
                                           std::size_t min_size) {
    std::size_t n = next_pow2(std::max(x.size(), std::max<std::size_t>(min_size, 1)));
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
    fft_inplace(buf, false);
    return buf;
}

// ---------------------------------------------------------------------------
// Windows, FIR design
// ---------------------------------------------------------------------------

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    if (n == 1) { w[0] = 1.0; return w; }
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(kTwoPi * double(i) / double(n - 1));
    return w;
}

double bessel_i0(double x) {
    // power series; converges quickly for the beta range we use
    double sum = 1.0, term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (double(k) * double(k));
        sum += term;
        if (term < sum * 1e-16) break;
    }
    return sum;
}

namespace {

double kaiser_beta(double atten_db) {
    if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
    if (atten_db >= 21.0)
        return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
    return 0.0;
}

std::size_t kaiser_order(double atten_db, double transition_hz, double sample_rate) {
    const double dw = kTwoPi * transition_hz / sample_rate;
    std::size_t n = std::size_t(std::ceil((std::max(atten_db, 21.0) - 7.95) / (2.285 * dw)));
    if (n % 2 == 0) ++n; // odd length -> integral group delay
    return std::max<std::size_t>(n, 5);
}

double sinc(double x) {
    if (std::fabs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

} // namespace

std::vector<double> design_lowpass(double cutoff_hz, double transition_hz,
                                   double sample_rate, double atten_db) {
    if (cutoff_hz <= 0 || transition_hz <= 0 || sample_rate <= 0)
        throw InvalidInput("design_lowpass: non-positive frequency argument");
    if (cutoff_hz + transition_hz / 2 >= sample_rate / 2)
        throw InvalidInput("design_lowpass: cutoff + transition/2 exceeds Nyquist");

    const std::size_t n = kaiser_order(atten_db, transition_hz, sample_rate);
    const double beta = kaiser_beta(atten_db);
    const double m = double(n - 1) / 2.0;
    const double fc = cutoff_hz / sample_rate; // cycles per sample
    const double i0b = bessel_i0(beta);

    std::vector<double> taps(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = double(i) - m;
        const double r = t / m;
        const double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        taps[i] = 2.0 * fc * sinc(2.0 * fc * t) * w;
        sum += taps[i];
    }
    for (double& t : taps) t /= sum; // exact unity DC gain
    return taps;
}

std::vector<double> design_bandpass(double f_lo, double f_hi, double transition_hz,
                                    double sample_rate, double atten_db) {
    if (f_lo < 0 || f_hi <= f_lo)
        throw InvalidInput("design_bandpass: bad band edges");
    const double half_bw = (f_hi - f_lo) / 2.0;
    const double f0 = (f_hi + f_lo) / 2.0;
    std::vector<double> lp = design_lowpass(half_bw, transition_hz, sample_rate, atten_db);
    const double m = double(lp.size() - 1) / 2.0;
    for (std::size_t i = 0; i < lp.size(); ++i)
        lp[i] *= 2.0 * std::cos(kTwoPi * f0 * (double(i) - m) / sample_rate);
    return lp;
}

// ---------------------------------------------------------------------------
// FIR filtering
// ---------------------------------------------------------------------------

namespace {

// Direct group-delay-aligned convolution; T is float or complex<float>.
template <typename T>
std::vector<T> fir_direct(const std::vector<T>& x, const std::vector<double>& taps) {
    const std::int64_t n = std::int64_t(x.size());
    const std::int64_t nt = std::int64_t(taps.size());
    const std::int64_t half = (nt - 1) / 2;
    std::vector<T> y(x.size());
    for (std::int64_t i = 0; i < n; ++i) {
        // y[i] = sum_k taps[k] * x[i + half - k]
        const std::int64_t k_lo = std::max<std::int64_t>(0, i + half - (n - 1));
        const std::int64_t k_hi = std::min<std::int64_t>(nt - 1, i + half);
        if constexpr (std::is_same_v<T, float>) {
            double acc = 0.0;
            for (std::int64_t k = k_lo; k <= k_hi; ++k)
                acc += taps[k] * double(x[i + half - k]);
            y[i] = float(acc);
        } else {
            double re = 0.0, im = 0.0;
            for (std::int64_t k = k_lo; k <= k_hi; ++k) {
                const auto& v = x[i + half - k];
                re += taps[k] * double(v.real());
                im += taps[k] * double(v.imag());
            }
            y[i] = T(float(re), float(im));
        }
    }
    return y;
}

// Overlap-save convolution for long signals with long kernels.
template <typename T>
std::vector<T> fir_overlap_save(const std::vector<T>& x, const std::vector<double>& taps) {
    const std::size_t nt = taps.size();
    const std::size_t half = (nt - 1) / 2;
    const std::size_t fft_n = std::max<std::size_t>(next_pow2(8 * nt), 8192);
    const std::size_t step = fft_n - nt + 1;

    std::vector<std::complex<double>> h(fft_n);
    for (std::size_t i = 0; i < nt; ++i) h[i] = taps[i];
    fft_inplace(h, false);

    const std::size_t n = x.size();
    std::vector<T> y(n);
    std::vector<std::complex<double>> block(fft_n);

    // Input block for output chunk starting at `out`: needs x[out+half-(nt-1) .. out+half+step-1]
    for (std::size_t out = 0; out < n; out += step) {
        const std::int64_t in0 = std::int64_t(out) + std::int64_t(half) - std::int64_t(nt - 1);
        for (std::size_t i = 0; i < fft_n; ++i) {
            const std::int64_t idx = in0 + std::int64_t(i);
            if (idx < 0 || idx >= std::int64_t(n)) { block[i] = 0.0; continue; }
            if constexpr (std::is_same_v<T, float>) block[i] = double(x[idx]);
            else block[i] = std::complex<double>(x[idx].real(), x[idx].imag());
        }
        fft_inplace(block, false);
        for (std::size_t i = 0; i < fft_n; ++i) block[i] *= h[i];
        fft_inplace(block, true);
        const std::size_t count = std::min(step, n - out);
        for (std::size_t i = 0; i < count; ++i) {
            const auto& v = block[nt - 1 + i];
            if constexpr (std::is_same_v<T, float>) y[out + i] = float(v.real());
            else y[out + i] = T(float(v.real()), float(v.imag()));
        }
    }
    return y;
}

template <typename T>
std::vector<T> fir_apply_impl(const std::vector<T>& x, const std::vector<double>& taps) {
    if (taps.empty()) throw InvalidInput("fir_apply: empty taps");
    if (x.empty()) return {};
    // crossover tuned loosely; exactness is identical either way
    if (x.size() * taps.size() > std::size_t(1) << 24)
        return fir_overlap_save(x, taps);
    return fir_direct(x, taps);
}

template <typename T>
std::vector<T> fir_decimate_impl(const std::vector<T>& x, const std::vector<double>& taps,
                                 int factor) {
    if (factor < 1) throw InvalidInput("fir_decimate: factor must be >= 1");
    const std::int64_t n = std::int64_t(x.size());
    const std::int64_t nt = std::int64_t(taps.size());
    const std::int64_t half = (nt - 1) / 2;
    const std::int64_t n_out = (n + factor - 1) / factor;
    std::vector<T> y(static_cast<std::size_t>(n_out));
    for (std::int64_t o = 0; o < n_out; ++o) {
        const std::int64_t i = o * factor;
        const std::int64_t k_lo = std::max<std::int64_t>(0, i + half - (n - 1));
        const std::int64_t k_hi = std::min<std::int64_t>(nt - 1, i + half);
        if constexpr (std::is_same_v<T, float>) {
            double acc = 0.0;
            for (std::int64_t k = k_lo; k <= k_hi; ++k)
                acc += taps[k] * double(x[i + half - k]);
            y[o] = float(acc);
        } else {
            double re = 0.0, im = 0.0;
            for (std::int64_t k = k_lo; k <= k_hi; ++k) {
                const auto& v = x[i + half - k];
                re += taps[k] * double(v.real());
                im += taps[k] * double(v.imag());
            }
            y[o] = T(float(re), float(im));
        }
    }
    return y;
}

} // namespace

std::vector<float> fir_apply(const std::vector<float>& x, const std::vector<double>& taps) {
    return fir_apply_impl(x, taps);
}
std::vector<std::complex<float>> fir_apply(const std::vector<std::complex<float>>& x,
                                           const std::vector<double>& taps) {
    return fir_apply_impl(x, taps);
}
std::vector<std::complex<float>> fir_decimate(const std::vector<std::complex<float>>& x,
                                              const std::vector<double>& taps, int factor) {
    return fir_decimate_impl(x, taps, factor);
}
std::vector<float> fir_decimate(const std::vector<float>& x,
                                const std::vector<double>& taps, int factor) {
    return fir_decimate_impl(x, taps, factor);
}

// ---------------------------------------------------------------------------
// Rational resampler
// ---------------------------------------------------------------------------

namespace {

// Prototype interpolation kernel: Kaiser-windowed sinc, half-width kHalfWidth
// zero crossings, tabulated at kTableRes points per crossing.
constexpr int kHalfWidth = 16;
constexpr int kTableRes = 512;
constexpr double kKernelBeta = 7.0;      // ~70 dB images
constexpr double kKernelCutoff = 0.42;   // fraction of the lower Nyquist

struct KernelTable {
    std::vector<double> v; // kernel(u), u in [0, kHalfWidth], step 1/kTableRes
    KernelTable() {
        const int n = kHalfWidth * kTableRes + 1;
        v.resize(std::size_t(n) + 1);
        const double i0b = bessel_i0(kKernelBeta);
        for (int i = 0; i <= n; ++i) {
            const double u = double(i) / kTableRes;
            if (u >= kHalfWidth) { v[std::size_t(i)] = 0.0; continue; }
            const double r = u / kHalfWidth;
            const double w = bessel_i0(kKernelBeta * std::sqrt(1.0 - r * r)) / i0b;
            v[std::size_t(i)] = 2.0 * kKernelCutoff * sinc(2.0 * kKernelCutoff * u) * w;
        }
    }
    double operator()(double u) const {
        u = std::fabs(u);
        if (u >= kHalfWidth) return 0.0;
        const double p = u * kTableRes;
        const std::size_t i = std::size_t(p);
        const double f = p - double(i);
        return v[i] * (1.0 - f) + v[i + 1] * f;
    }
};

const KernelTable& kernel_table() {
    static const KernelTable t;
    return t;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    while (b) { std::int64_t t = a % b; a = b; b = t; }
    return a;
}

} // namespace

std::vector<float> resample(const std::vector<float>& x,
                            std::int64_t in_rate, std::int64_t out_rate) {
    if (in_rate <= 0 || out_rate <= 0)
        throw InvalidInput("resample: rates must be positive");
    if (in_rate == out_rate || x.empty()) return x;

    const std::int64_t g = gcd64(in_rate, out_rate);
    const std::int64_t p = out_rate / g; // output samples per q input samples
    const std::int64_t q = in_rate / g;

    const auto& kt = kernel_table();
    // Downsampling stretches the kernel by q/p so the cutoff tracks the
    // output Nyquist.
    const double scale = (p >= q) ? 1.0 : double(p) / double(q);
    const double span = double(kHalfWidth) / scale;
    const std::int64_t n_in = std::int64_t(x.size());
    const std::int64_t n_out = (n_in * p) / q;
    std::vector<float> y(static_cast<std::size_t>(n_out));

    // Exact polyphase when the phase count is small: one table per phase,
    // each normalized to unit gain.
    if (p <= 4096) {
        const std::int64_t ihalf = std::int64_t(std::ceil(span));
        const std::size_t taps = std::size_t(2 * ihalf + 1);
        std::vector<double> phase_taps(std::size_t(p) * taps);
        for (std::int64_t ph = 0; ph < p; ++ph) {
            const double frac = double((ph * q) % p) / double(p);
            double sum = 0.0;
            for (std::int64_t k = -ihalf; k <= ihalf; ++k) {
                const double u = (double(k) - frac) * scale;
                const double w = kt(u) * scale;
                phase_taps[std::size_t(ph) * taps + std::size_t(k + ihalf)] = w;
                sum += w;
            }
            if (sum != 0.0)
                for (std::size_t i = 0; i < taps; ++i)
                    phase_taps[std::size_t(ph) * taps + i] /= sum;
        }
        for (std::int64_t n = 0; n < n_out; ++n) {
            const std::int64_t num = n * q;
            const std::int64_t base = num / p;
            const std::int64_t ph = n % p; // frac of (n*q)/p depends only on n mod p
            const double* tp = &phase_taps[std::size_t(ph) * taps];
            double acc = 0.0;
            for (std::int64_t k = -ihalf; k <= ihalf; ++k) {
                const std::int64_t idx = base + k;
                if (idx < 0 || idx >= n_in) continue;
                acc += tp[std::size_t(k + ihalf)] * double(x[std::size_t(idx)]);
            }
            y[std::size_t(n)] = float(acc);
        }
        return y;
    }

    // General path: evaluate the kernel per output sample.
    for (std::int64_t n = 0; n < n_out; ++n) {
        const std::int64_t num = n * q;
        const std::int64_t base = num / p;
        const double frac = double(num % p) / double(p);
        const std::int64_t k_lo = base - std::int64_t(std::ceil(span)) ;
        const std::int64_t k_hi = base + std::int64_t(std::ceil(span));
        double acc = 0.0, wsum = 0.0;
        for (std::int64_t k = k_lo; k <= k_hi; ++k) {
            const double u = (double(k - base) - frac) * scale;
            const double w = kt(u);
            wsum += w;
            if (k >= 0 && k < n_in) acc += w * double(x[std::size_t(k)]);
        }
        y[std::size_t(n)] = wsum != 0.0 ? float(acc / wsum) : 0.0f;
    }
    return y;
}

AudioBuffer resample(const AudioBuffer& x, int out_rate) {
    if (x.sample_rate == out_rate) return x;
    AudioBuffer out;
    out.sample_rate = out_rate;
    out.samples = resample(x.samples, x.sample_rate, out_rate);
    return out;
}

std::vector<float> fractional_delay(const std::vector<float>& x, double delay_samples) {
    const auto& kt = kernel_table();
    const std::int64_t n = std::int64_t(x.size());
    std::vector<float> y(x.size());
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = double(i) - delay_samples;
        const std::int64_t base = std::int64_t(std::floor(t));
        const double frac = t - double(base);
        double acc = 0.0, wsum = 0.0;
        for (std::int64_t k = -kHalfWidth; k <= kHalfWidth + 1; ++k) {
            const double w = kt(double(k) - frac);
            wsum += w;
            const std::int64_t idx = base + k;
            if (idx >= 0 && idx < n) acc += w * double(x[std::size_t(idx)]);
        }
        y[std::size_t(i)] = wsum != 0.0 ? float(acc / wsum) : 0.0f;
    }
    return y;
}

// ---------------------------------------------------------------------------
// Spectrum measurement
// ---------------------------------------------------------------------------

namespace {

// Hann-windowed averaged periodogram. Calls `accum(bin_hz, psd_power)` per
// bin; psd_power sums to the buffer mean-square over all bins (Parseval).
// Short buffers use one full-length window zero-padded to a power of two;
// long buffers average over complete 64k segments.
template <typename T, typename F>
void for_each_psd_bin(const std::vector<T>& x, double sample_rate, F&& accum) {
    if (x.empty()) return;
    constexpr std::size_t kSegMax = std::size_t(1) << 16;
    const std::size_t win_len = std::min(x.size(), kSegMax);
    const std::size_t fft_n = next_pow2(win_len);
    const std::size_t hop = win_len / 2 > 0 ? win_len / 2 : 1;
    const auto w = hann_window(win_len);
    double wpow = 0.0;
    for (double v : w) wpow += v * v;

    std::vector<std::complex<double>> buf(fft_n);
    std::vector<double> psd(fft_n, 0.0);
    std::size_t n_segs = 0;
    for (std::size_t start = 0; start + win_len <= x.size(); start += hop) {
        for (std::size_t i = 0; i < fft_n; ++i) {
            if (i < win_len) {
                if constexpr (std::is_same_v<T, float>) buf[i] = w[i] * double(x[start + i]);
                else buf[i] = w[i] * std::complex<double>(x[start + i].real(), x[start + i].imag());
            } else {
                buf[i] = 0.0;
            }
        }
        fft_inplace(buf, false);
        for (std::size_t i = 0; i < fft_n; ++i) psd[i] += std::norm(buf[i]);
        ++n_segs;
    }
    const double norm = 1.0 / (double(n_segs) * double(fft_n) * wpow);
    for (std::size_t i = 0; i < fft_n; ++i) {
        double f = double(i) * sample_rate / double(fft_n);
        if constexpr (!std::is_same_v<T, float>) {
            if (i >= fft_n / 2) f -= sample_rate; // complex: map to [-fs/2, fs/2)
        }
        accum(f, psd[i] * norm);
    }
}

} // namespace

double band_power(const std::vector<float>& x, double sample_rate,
                  double f_lo, double f_hi) {
    double p = 0.0;
    for_each_psd_bin(x, sample_rate, [&](double f, double pw) {
        // fold the real-signal spectrum onto [0, fs/2]
        double fa = f <= sample_rate / 2 ? f : sample_rate - f;
        if (fa >= f_lo && fa <= f_hi) p += pw;
    });
    return p;
}

double band_power_complex(const std::vector<std::complex<float>>& x,
                          double sample_rate, double f_lo, double f_hi) {
    double p = 0.0;
    for_each_psd_bin(x, sample_rate, [&](double f, double pw) {
        if (f >= f_lo && f <= f_hi) p += pw;
    });
    return p;
}

ToneEstimate measure_tone(const std::vector<float>& x, double sample_rate,
                          double freq_hz) {
    ToneEstimate est;
    if (x.empty()) return est;
    const auto w = hann_window(x.size());
    double wsum = 0.0;
    std::complex<double> acc(0.0, 0.0);
    const double dphi = kTwoPi * freq_hz / sample_rate;
    // recurrence instead of per-sample sincos
    std::complex<double> rot(1.0, 0.0);
    const std::complex<double> step(std::cos(dphi), -std::sin(dphi));
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += w[i] * double(x[i]) * rot;
        rot *= step;
        if ((i & 0xFFF) == 0xFFF) rot /= std::abs(rot);
        wsum += w[i];
    }
    est.amplitude = 2.0 * std::abs(acc) / wsum;
    est.phase = std::arg(acc);
    est.power = est.amplitude * est.amplitude / 2.0;
    return est;
}

double occupied_bandwidth(const IqBuffer& iq, double fraction) {
    std::vector<std::pair<double, double>> bins; // |freq|, power
    double total = 0.0;
    for_each_psd_bin(iq.samples, double(iq.sample_rate), [&](double f, double pw) {
        bins.emplace_back(std::fabs(f), pw);
        total += pw;
    });
    std::sort(bins.begin(), bins.end());
    double acc = 0.0;
    for (const auto& [f, pw] : bins) {
        acc += pw;
        if (acc >= fraction * total) return 2.0 * f;
    }
    return double(iq.sample_rate);
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

CrossCorrelation cross_correlate(const std::vector<float>& a,
                                 const std::vector<float>& b) {
    CrossCorrelation out;
    if (a.empty() || b.empty()) return out;
    const std::size_t n = next_pow2(a.size() + b.size());
    std::vector<std::complex<double>> fa(n), fb(n);
    for (std::size_t i = 0; i < a.size(); ++i) fa[i] = double(a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) fb[i] = double(b[i]);
    fft_inplace(fa, false);
    fft_inplace(fb, false);
    for (std::size_t i = 0; i < n; ++i) fa[i] = std::conj(fa[i]) * fb[i];
    fft_inplace(fa, true);
    // r[l] = sum a[n] b[n+l]; l in [-(Na-1), Nb-1], circular index (l mod n)
    const std::int64_t lag_min = -std::int64_t(a.size()) + 1;
    const std::int64_t lag_max = std::int64_t(b.size()) - 1;
    out.lag_min = lag_min;
    out.values.reserve(std::size_t(lag_max - lag_min + 1));
    for (std::int64_t l = lag_min; l <= lag_max; ++l) {
        const std::size_t idx = std::size_t((l % std::int64_t(n) + std::int64_t(n)) % std::int64_t(n));
        out.values.push_back(fa[idx].real());
    }
    return out;
}

TemplateMatch match_template(const std::vector<float>& x,
                             const std::vector<float>& tmpl) {
    TemplateMatch best;
    if (tmpl.empty() || x.size() < tmpl.size()) return best;

    CrossCorrelation cc = cross_correlate(tmpl, x);
    double te = 0.0;
    for (float v : tmpl) te += double(v) * v;
    if (te <= 0.0) return best;

    // prefix energy of x for the sliding-window norm
    std::vector<double> pe(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) pe[i + 1] = pe[i] + double(x[i]) * x[i];

    const std::size_t nt = tmpl.size();
    for (std::size_t k = 0; k + nt <= x.size(); ++k) {
        const std::int64_t idx = std::int64_t(k) - cc.lag_min;
        const double we = pe[k + nt] - pe[k];
        if (we <= 0.0) continue;
        const double score = cc.values[std::size_t(idx)] / std::sqrt(te * we);
        if (score > best.score) {
            best.score = score;
            best.offset = std::int64_t(k);
        }
    }
    return best;
}

LinearFit fit_linear(const std::vector<float>& x, const std::vector<float>& y) {
    if (x.size() != y.size() || x.empty())
        throw InvalidInput("fit_linear: length mismatch");
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i];
        sxx += double(x[i]) * x[i];
        sxy += double(x[i]) * y[i];
        syy += double(y[i]) * y[i];
    }
    LinearFit fit;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    const double cxy = sxy - sx * sy / n;
    fit.scale = vx > 0 ? cxy / vx : 0.0;
    fit.offset = (sy - fit.scale * sx) / n;
    fit.correlation = (vx > 0 && vy > 0) ? cxy / std::sqrt(vx * vy) : 0.0;

    double fit_pow = 0.0, res_pow = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = fit.scale * x[i] + fit.offset;
        fit_pow += f * f;
        const double r = y[i] - f;
        res_pow += r * r;
    }
    fit.residual_db = (fit_pow > 0 && res_pow > 0) ? db_from_power(res_pow / fit_pow)
                      : (res_pow == 0.0 ? -300.0 : 300.0);
    return fit;
}

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

double SplitMix64::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return r * std::cos(kTwoPi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 rng(seed ^ (0xA5A5A5A55A5A5A5Aull + index * 0x9E3779B97F4A7C15ull));
    rng.next();
    return rng.next();
}

} // namespace fmscatter::dsp
