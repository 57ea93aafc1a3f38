#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "ssfi/bands.hpp"
#include "ssfi/channels.hpp"
#include "ssfi/eeg.hpp"
#include "ssfi/error.hpp"

namespace ssfi {

inline constexpr long kSegmentSamples = 128;  // 1 s at 128 Hz
inline constexpr long kSegmentHop = 32;       // 0.25 s shift, 0.75 s overlap
inline constexpr std::size_t kPsdBins = 65;   // 0..64 Hz inclusive, 1 Hz spacing
inline constexpr std::size_t kFeatureDim = kNumBands * kNumChannels;  // 84

// ---------------------------------------------------------------------------
// IIR highpass (Butterworth, bilinear transform with prewarping).
// ---------------------------------------------------------------------------

struct IirFilter {
    std::vector<double> b;  // numerator, descending powers of z, b.size() == order+1
    std::vector<double> a;  // denominator, a[0] == 1
    int order = 0;
    double cutoff_hz = 0.0;
    double fs = 0.0;
};

namespace detail {

// Monic polynomial from roots, coefficients in descending powers.
inline std::vector<std::complex<double>> poly_from_roots(
    const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : roots) {
        c.push_back(0.0);
        for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= r * c[i - 1];
    }
    return c;
}

}  // namespace detail

inline IirFilter design_highpass(int order, double cutoff_hz, double fs) {
    if (order < 1 || order > 12) throw argument_error("filter order out of range");
    if (fs <= 0) throw argument_error("fs must be positive");
    if (cutoff_hz <= 0 || cutoff_hz >= fs / 2)
        throw argument_error("cutoff must lie strictly between 0 and Nyquist");

    const double pi = 3.14159265358979323846;
    const double warped = 2.0 * fs * std::tan(pi * cutoff_hz / fs);

    // Butterworth lowpass prototype poles on the unit circle (left half-plane),
    // mapped to highpass by s -> warped / s, then to z by the bilinear transform.
    std::vector<std::complex<double>> zpoles;
    for (int k = 0; k < order; ++k) {
        double theta = pi * (2.0 * k + order + 1.0) / (2.0 * order);
        std::complex<double> lp(std::cos(theta), std::sin(theta));
        std::complex<double> hp = warped / lp;
        zpoles.push_back((2.0 * fs + hp) / (2.0 * fs - hp));
    }
    for (const auto& p : zpoles) {
        if (std::abs(p) >= 1.0) throw argument_error("designed filter is unstable");
    }

    auto den = detail::poly_from_roots(zpoles);

    // All `order` zeros sit at z = +1; numerator is K*(z-1)^order with K set
    // so that |H| = 1 at Nyquist (z = -1).
    std::complex<double> den_at_m1 = 0.0;
    for (const auto& c : den) den_at_m1 = den_at_m1 * -1.0 + c;
    double num_at_m1 = (order % 2 == 0) ? std::pow(2.0, order) : -std::pow(2.0, order);
    double gain = den_at_m1.real() / num_at_m1;

    IirFilter f;
    f.order = order;
    f.cutoff_hz = cutoff_hz;
    f.fs = fs;
    f.a.resize(order + 1);
    f.b.resize(order + 1);
    for (int i = 0; i <= order; ++i) f.a[i] = den[i].real();
    double binom = 1.0;
    for (int i = 0; i <= order; ++i) {
        f.b[i] = gain * binom * ((i % 2 == 0) ? 1.0 : -1.0);
        binom = binom * (order - i) / (i + 1.0);
    }
    return f;
}

// Causal single-pass direct form II transposed. Zero initial state.
inline std::vector<double> filter_signal(const IirFilter& f, std::span<const double> x) {
    const std::size_t n = f.b.size();
    std::vector<double> state(n - 1, 0.0);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double yi = f.b[0] * x[i] + state[0];
        for (std::size_t j = 1; j < n - 1; ++j)
            state[j - 1] = f.b[j] * x[i] + state[j] - f.a[j] * yi;
        state[n - 2] = f.b[n - 1] * x[i] - f.a[n - 1] * yi;
        y[i] = yi;
    }
    return y;
}

inline EegRecording apply_filter(const IirFilter& f, const EegRecording& rec) {
    if (rec.fs != f.fs) throw argument_error("recording/filter sampling rate mismatch");
    EegRecording out = rec;
    for (auto& ch : out.samples) ch = filter_signal(f, ch);
    return out;
}

// ---------------------------------------------------------------------------
// Artifact stage. The real ATAR algorithm lives elsewhere; this stage is a
// pluggable stand-in that soft-clips per channel at a robust threshold
// T = MAD / beta (k = 1/beta). The compressor is identity up to T/2 and
// saturates at 0.99*T, so every output sample lands strictly inside (-T, T).
// ---------------------------------------------------------------------------

enum class ArtifactMethod { none, threshold_default };

struct ArtifactConfig {
    ArtifactMethod method = ArtifactMethod::threshold_default;
    double beta = 0.1;
};

namespace detail {

inline double median_inplace(std::vector<double>& v) {
    if (v.empty()) return 0.0;
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    return 0.5 * (v[mid - 1] + hi);
}

}  // namespace detail

inline double mad(std::span<const double> x) {
    std::vector<double> tmp(x.begin(), x.end());
    double med = detail::median_inplace(tmp);
    for (auto& v : tmp) v = std::abs(v - med);
    return detail::median_inplace(tmp);
}

inline EegRecording remove_artifacts(const EegRecording& rec, const ArtifactConfig& cfg) {
    if (cfg.beta < 0) throw argument_error("artifact beta must be >= 0");
    if (cfg.method == ArtifactMethod::none) return rec;

    EegRecording out = rec;
    for (auto& ch : out.samples) {
        double m = mad(ch);
        if (m <= 0.0 || cfg.beta == 0.0) continue;  // flat channel or infinite threshold
        double threshold = m / cfg.beta;
        double knee = threshold / 2.0;
        double ceil = 0.99 * threshold;  // saturation strictly below the threshold
        for (auto& v : ch) {
            double mag = std::abs(v);
            if (mag > knee) {
                double clipped = knee + (ceil - knee) * std::tanh((mag - knee) / (ceil - knee));
                v = std::copysign(clipped, v);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Segmentation: fixed windows inside each annotation, starting at the
// annotation start; windows that would cross the boundary are dropped.
// ---------------------------------------------------------------------------

struct LabeledSegment {
    std::array<double, kNumChannels * kSegmentSamples> samples;  // channel-major
    TaskLabel label = TaskLabel::Listening;
    int task_index = 1;
    int subject_id = 1;
    long start_sample = 0;

    std::span<const double> channel(std::size_t c) const {
        return {samples.data() + c * kSegmentSamples, kSegmentSamples};
    }
    std::span<double> channel(std::size_t c) {
        return {samples.data() + c * kSegmentSamples, kSegmentSamples};
    }
};

inline std::vector<LabeledSegment> segment_recording(const EegRecording& rec,
                                                     long window = kSegmentSamples,
                                                     long hop = kSegmentHop) {
    if (window != kSegmentSamples)
        throw argument_error("segment window must be 128 samples");
    if (hop < 1) throw argument_error("hop must be >= 1");
    rec.validate();

    std::vector<LabeledSegment> out;
    for (const auto& ann : rec.annotations) {
        for (long start = ann.start_sample; start + window <= ann.end_sample; start += hop) {
            LabeledSegment seg;
            seg.label = ann.label;
            seg.task_index = ann.task_index;
            seg.subject_id = rec.subject_id;
            seg.start_sample = start;
            for (std::size_t c = 0; c < kNumChannels; ++c) {
                const auto& ch = rec.samples[c];
                std::copy(ch.begin() + start, ch.begin() + start + window,
                          seg.channel(c).begin());
            }
            out.push_back(seg);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Welch PSD. On a 1 s segment the estimator degenerates to a single
// Hamming-windowed periodogram: sub-windows shorter than 128 samples would
// push the resolution above 1 Hz and delta/theta could no longer be told
// apart. One-sided, window-power normalized; the integral over 0..64 Hz
// approximates the signal's mean square.
// ---------------------------------------------------------------------------

namespace detail {

// Iterative radix-2 FFT, in place. n must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    const double pi = 3.14159265358979323846;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * pi / static_cast<double>(len);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = x[i + k];
                std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace detail

inline std::array<double, kPsdBins> welch_psd(std::span<const double> x, double fs = 128.0) {
    if (x.size() != kSegmentSamples)
        throw argument_error("welch_psd expects exactly 128 samples");
    if (fs != 128.0) throw argument_error("welch_psd expects fs = 128");

    const std::size_t n = x.size();
    const double pi = 3.14159265358979323846;

    std::vector<std::complex<double>> buf(n);
    double window_power = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(i) /
                                          static_cast<double>(n - 1));
        window_power += w * w;
        buf[i] = w * x[i];
    }
    detail::fft_radix2(buf);

    std::array<double, kPsdBins> psd{};
    const double scale = 1.0 / (fs * window_power);
    for (std::size_t k = 0; k < kPsdBins; ++k) {
        double p = std::norm(buf[k]) * scale;
        if (k != 0 && k != n / 2) p *= 2.0;  // fold negative frequencies
        psd[k] = p;
    }
    return psd;
}

// Band power: 1 Hz bins assigned by bin-center membership in [lo, hi);
// bin 0 belongs to no band (delta starts at 0.1 Hz) and bin 64 closes gamma2.
inline std::array<double, kNumBands> band_powers(std::span<const double> psd) {
    if (psd.size() != kPsdBins) throw argument_error("expected 65 PSD bins (0..64 Hz)");
    std::array<double, kNumBands> out{};
    for (std::size_t k = 0; k < kPsdBins; ++k) {
        double f = static_cast<double>(k);
        for (std::size_t b = 0; b < kNumBands; ++b) {
            bool inside = f >= kBands[b].lo_hz && f < kBands[b].hi_hz;
            if (b == kNumBands - 1 && f == kBands[b].hi_hz) inside = true;
            if (inside) {
                out[b] += psd[k];  // bin width is 1 Hz
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// 84-dimensional feature vector: six band blocks of 14 channel powers,
// band-major, channel order as recorded.
// ---------------------------------------------------------------------------

struct BandPowerVector {
    std::array<double, kFeatureDim> values{};
    TaskLabel label = TaskLabel::Listening;
    int task_index = 1;
    int subject_id = 1;
};

inline BandPowerVector feature_vector(const LabeledSegment& seg) {
    BandPowerVector f;
    f.label = seg.label;
    f.task_index = seg.task_index;
    f.subject_id = seg.subject_id;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        auto psd = welch_psd(seg.channel(c));
        auto bp = band_powers(psd);
        for (std::size_t b = 0; b < kNumBands; ++b) {
            f.values[b * kNumChannels + c] = bp[b];
        }
    }
    return f;
}

}  // namespace ssfi
