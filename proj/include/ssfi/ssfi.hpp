#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ssfi/bands.hpp"
#include "ssfi/binio.hpp"
#include "ssfi/dsp.hpp"
#include "ssfi/error.hpp"
#include "ssfi/interp.hpp"

namespace ssfi {

// Spatio-spectral feature image: one interpolated scalp grid per band,
// stacked channel-last. Stored as 32-bit floats, matching the on-disk
// format bit for bit.
struct SsfiArray {
    int d1 = 0;  // grid rows
    int d2 = 0;  // grid cols
    int d3 = 0;  // bands
    std::vector<float> values;  // row-major [d1][d2][d3]

    static SsfiArray zeros(int d1, int d2, int d3) {
        SsfiArray a;
        a.d1 = d1;
        a.d2 = d2;
        a.d3 = d3;
        a.values.assign(static_cast<std::size_t>(d1) * d2 * d3, 0.0f);
        return a;
    }

    float& at(int i, int j, int b) {
        return values[(static_cast<std::size_t>(i) * d2 + j) * d3 + b];
    }
    float at(int i, int j, int b) const {
        return values[(static_cast<std::size_t>(i) * d2 + j) * d3 + b];
    }
    std::size_t size() const { return values.size(); }
};

struct SsfiSample {
    SsfiArray image;
    TaskLabel label = TaskLabel::Listening;
    int task_index = 1;
    int subject_id = 1;
};

inline SsfiArray build_ssfi(const BandPowerVector& f, const Interpolator& interp,
                            int grid_size = 64) {
    SsfiArray out = SsfiArray::zeros(grid_size, grid_size, static_cast<int>(kNumBands));
    for (std::size_t b = 0; b < kNumBands; ++b) {
        std::span<const double> block(f.values.data() + b * kNumChannels, kNumChannels);
        auto grid = interp.interpolate(block, grid_size);
        for (int i = 0; i < grid_size; ++i) {
            for (int j = 0; j < grid_size; ++j) {
                out.at(i, j, static_cast<int>(b)) =
                    static_cast<float>(grid[static_cast<std::size_t>(i) * grid_size + j]);
            }
        }
    }
    return out;
}

inline SsfiArray build_ssfi(const BandPowerVector& f, const MontageLayout& layout,
                            int grid_size = 64) {
    return build_ssfi(f, Interpolator(layout), grid_size);
}

// ---------------------------------------------------------------------------
// Per-band z-scoring. Statistics come from the training set alone; the
// provenance tag travels with the fitted object (and into checkpoints) so
// that tests can assert where the numbers came from.
// ---------------------------------------------------------------------------

struct Normalizer {
    std::array<double, kNumBands> mean{};
    std::array<double, kNumBands> stddev{};
    bool fitted = false;
    std::string provenance;  // e.g. "train:subject3"

    static constexpr double kStdFloor = 1e-8;
};

inline Normalizer fit_normalizer(std::span<const SsfiSample> train,
                                 const std::string& provenance = "train") {
    if (train.size() < 2) throw argument_error("normalizer needs at least 2 training arrays");
    Normalizer nz;
    nz.provenance = provenance;
    const int d3 = train[0].image.d3;
    if (d3 != static_cast<int>(kNumBands)) throw argument_error("expected 6-band arrays");

    std::array<double, kNumBands> sum{}, sumsq{};
    std::array<std::size_t, kNumBands> count{};
    for (const auto& s : train) {
        const auto& img = s.image;
        for (std::size_t i = 0; i < img.values.size(); ++i) {
            std::size_t b = i % kNumBands;
            double v = img.values[i];
            sum[b] += v;
            sumsq[b] += v * v;
            ++count[b];
        }
    }
    for (std::size_t b = 0; b < kNumBands; ++b) {
        double m = sum[b] / static_cast<double>(count[b]);
        double var = sumsq[b] / static_cast<double>(count[b]) - m * m;
        nz.mean[b] = m;
        nz.stddev[b] = std::sqrt(std::max(var, 0.0));
        if (nz.stddev[b] < Normalizer::kStdFloor) nz.stddev[b] = Normalizer::kStdFloor;
    }
    nz.fitted = true;
    return nz;
}

inline SsfiArray apply_normalizer(const Normalizer& nz, const SsfiArray& in) {
    if (!nz.fitted) throw argument_error("normalizer has not been fitted");
    SsfiArray out = in;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        std::size_t b = i % kNumBands;
        out.values[i] =
            static_cast<float>((static_cast<double>(out.values[i]) - nz.mean[b]) / nz.stddev[b]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binary formats (little-endian).
//   Single array ("SSFI"): magic, version, d1, d2, d3, band names, f32 data.
//   Dataset     ("SSFD"): magic, version, d1, d2, d3, band names, count,
//                          then per sample: label u8, task u32, subject u32,
//                          f32 data row-major.
// ---------------------------------------------------------------------------

inline void save_ssfi(const SsfiArray& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out.write("SSFI", 4);
    binio::write_raw<std::uint32_t>(out, 1);
    binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(a.d1));
    binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(a.d2));
    binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(a.d3));
    for (int b = 0; b < a.d3; ++b)
        binio::write_string(out, std::string(kBands[b % kNumBands].name));
    binio::write_f32s(out, a.values.data(), a.values.size());
    if (!out) throw io_error("write failed: " + path);
}

inline SsfiArray load_ssfi(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    binio::expect_magic(in, "SSFI", "SSFI array");
    auto version = binio::read_raw<std::uint32_t>(in);
    if (version != 1) throw parse_error("unsupported SSFI version");
    int d1 = static_cast<int>(binio::read_raw<std::uint32_t>(in));
    int d2 = static_cast<int>(binio::read_raw<std::uint32_t>(in));
    int d3 = static_cast<int>(binio::read_raw<std::uint32_t>(in));
    for (int b = 0; b < d3; ++b) binio::read_string(in);
    SsfiArray a = SsfiArray::zeros(d1, d2, d3);
    binio::read_f32s(in, a.values.data(), a.values.size());
    return a;
}

inline void save_dataset(std::span<const SsfiSample> samples, const std::string& path) {
    if (samples.empty()) throw argument_error("refusing to write an empty dataset");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    const auto& first = samples[0].image;
    out.write("SSFD", 4);
    binio::write_raw<std::uint32_t>(out, 1);
    binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(first.d1));
    binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(first.d2));
    binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(first.d3));
    for (int b = 0; b < first.d3; ++b)
        binio::write_string(out, std::string(kBands[b % kNumBands].name));
    binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(samples.size()));
    for (const auto& s : samples) {
        if (s.image.d1 != first.d1 || s.image.d2 != first.d2 || s.image.d3 != first.d3)
            throw argument_error("dataset arrays must share one shape");
        binio::write_raw<std::uint8_t>(out, static_cast<std::uint8_t>(s.label));
        binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.task_index));
        binio::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.subject_id));
        binio::write_f32s(out, s.image.values.data(), s.image.values.size());
    }
    if (!out) throw io_error("write failed: " + path);
}

inline std::vector<SsfiSample> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    binio::expect_magic(in, "SSFD", "SSFI dataset");
    auto version = binio::read_raw<std::uint32_t>(in);
    if (version != 1) throw parse_error("unsupported SSFD version");
    int d1 = static_cast<int>(binio::read_raw<std::uint32_t>(in));
    int d2 = static_cast<int>(binio::read_raw<std::uint32_t>(in));
    int d3 = static_cast<int>(binio::read_raw<std::uint32_t>(in));
    for (int b = 0; b < d3; ++b) binio::read_string(in);
    auto count = binio::read_raw<std::uint32_t>(in);
    std::vector<SsfiSample> samples;
    samples.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        SsfiSample s;
        s.label = static_cast<TaskLabel>(binio::read_raw<std::uint8_t>(in));
        s.task_index = static_cast<int>(binio::read_raw<std::uint32_t>(in));
        s.subject_id = static_cast<int>(binio::read_raw<std::uint32_t>(in));
        s.image = SsfiArray::zeros(d1, d2, d3);
        binio::read_f32s(in, s.image.values.data(), s.image.values.size());
        samples.push_back(std::move(s));
    }
    return samples;
}

// Convenience: full featurization of a preprocessed recording.
inline std::vector<SsfiSample> featurize_recording(const EegRecording& rec,
                                                   const Interpolator& interp,
                                                   int grid_size = 64,
                                                   long window = kSegmentSamples,
                                                   long hop = kSegmentHop) {
    std::vector<SsfiSample> out;
    for (const auto& seg : segment_recording(rec, window, hop)) {
        BandPowerVector f = feature_vector(seg);
        out.push_back({build_ssfi(f, interp, grid_size), f.label, f.task_index, f.subject_id});
    }
    return out;
}

}  // namespace ssfi
