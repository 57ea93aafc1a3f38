#include <catch2/catch.hpp>

#include <cmath>
#include <numeric>

#include "ssfi/dsp.hpp"
#include "support/oracles.hpp"

using namespace ssfi;

TEST_CASE("highpass design blocks DC and passes Nyquist") {
    IirFilter f = design_highpass(5, 1.0, 128.0);
    REQUIRE(f.b.size() == 6);
    REQUIRE(f.a.size() == 6);
    REQUIRE(f.a[0] == 1.0);
    CHECK(oracles::transfer_magnitude(f.b, f.a, 0.0, f.fs) < 1e-6);
    double nyq = oracles::transfer_magnitude(f.b, f.a, 64.0, f.fs);
    CHECK(nyq >= 0.99);
    CHECK(nyq <= 1.01);
}

TEST_CASE("prewarped Butterworth sits at -3 dB on the cutoff") {
    IirFilter f = design_highpass(5, 1.0, 128.0);
    double mag = oracles::transfer_magnitude(f.b, f.a, 1.0, f.fs);
    CHECK(mag == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("designed filter is stable by the Schur-Cohn test") {
    for (int order : {1, 2, 3, 5, 8}) {
        IirFilter f = design_highpass(order, 1.0, 128.0);
        CHECK(oracles::schur_cohn_stable(f.a));
    }
}

TEST_CASE("magnitude response is monotone for a Butterworth highpass") {
    IirFilter f = design_highpass(5, 1.0, 128.0);
    double prev = 0.0;
    for (double hz = 0.0; hz <= 64.0; hz += 0.5) {
        double mag = oracles::transfer_magnitude(f.b, f.a, hz, f.fs);
        REQUIRE(mag >= prev - 1e-9);
        prev = mag;
    }
}

TEST_CASE("cutoff at or above Nyquist is rejected") {
    REQUIRE_THROWS_AS(design_highpass(5, 70.0, 128.0), argument_error);
    REQUIRE_THROWS_AS(design_highpass(5, 64.0, 128.0), argument_error);
    REQUIRE_THROWS_AS(design_highpass(5, 0.0, 128.0), argument_error);
}

namespace {

EegRecording flat_recording(long n, double value) {
    EegRecording rec;
    rec.samples.assign(kNumChannels, std::vector<double>(n, value));
    return rec;
}

}  // namespace

TEST_CASE("constant input decays to zero through the highpass") {
    IirFilter f = design_highpass(5, 1.0, 128.0);
    EegRecording rec = flat_recording(1024, 10.0);
    EegRecording out = apply_filter(f, rec);
    for (long s = 512; s < 1024; ++s) REQUIRE(std::abs(out.samples[0][s]) < 1e-3 * 10.0);
}

TEST_CASE("zero input stays zero") {
    IirFilter f = design_highpass(5, 1.0, 128.0);
    EegRecording out = apply_filter(f, flat_recording(256, 0.0));
    for (double v : out.samples[3]) REQUIRE(v == 0.0);
}

TEST_CASE("30 Hz sinusoid passes at unit gain") {
    IirFilter f = design_highpass(5, 1.0, 128.0);
    EegRecording rec = flat_recording(2048, 0.0);
    for (long s = 0; s < 2048; ++s)
        rec.samples[0][s] = std::sin(2.0 * oracles::kPi * 30.0 * s / 128.0);
    EegRecording out = apply_filter(f, rec);
    double peak = 0.0;
    for (long s = 1024; s < 2048; ++s) peak = std::max(peak, std::abs(out.samples[0][s]));
    CHECK(peak == Approx(1.0).margin(0.02));
    // and the steady-state gain agrees with the coefficient oracle
    CHECK(peak == Approx(oracles::transfer_magnitude(f.b, f.a, 30.0, f.fs)).margin(0.02));
}

TEST_CASE("sampling-rate mismatch is an argument error") {
    IirFilter f = design_highpass(5, 1.0, 128.0);
    EegRecording rec = flat_recording(10, 0.0);
    rec.fs = 256.0;
    REQUIRE_THROWS_AS(apply_filter(f, rec), argument_error);
}

TEST_CASE("filtering is linear") {
    IirFilter f = design_highpass(5, 1.0, 128.0);
    Rng rng(42);
    std::vector<double> x(512), y(512), mix(512);
    const double a = 1.7, b = -0.4;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
        mix[i] = a * x[i] + b * y[i];
    }
    auto fx = filter_signal(f, x);
    auto fy = filter_signal(f, y);
    auto fmix = filter_signal(f, mix);
    // normwise: worst pointwise deviation relative to the signal's peak
    double maxdiff = 0.0, maxamp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        maxdiff = std::max(maxdiff, std::abs(fmix[i] - (a * fx[i] + b * fy[i])));
        maxamp = std::max(maxamp, std::abs(fmix[i]));
    }
    REQUIRE(maxdiff / maxamp < 1e-9);
}

TEST_CASE("artifact method none is the identity") {
    SyntheticSpec spec;
    spec.n_experiments = 1;
    spec.seed = 3;
    EegRecording rec = synth_recording(spec);
    EegRecording out = remove_artifacts(rec, {ArtifactMethod::none, 0.1});
    for (std::size_t c = 0; c < kNumChannels; ++c) REQUIRE(out.samples[c] == rec.samples[c]);
}

TEST_CASE("a large spike is clipped below the MAD threshold") {
    EegRecording rec;
    rec.samples.assign(kNumChannels, {});
    Rng rng(11);
    for (auto& ch : rec.samples) {
        ch.resize(1024);
        for (auto& v : ch) v = rng.uniform(-10.0, 10.0);
    }
    rec.samples[0][500] = 500.0;

    // threshold oracle: direct MAD of the constructed channel
    double threshold = mad(rec.samples[0]) / 0.1;
    REQUIRE(threshold < 500.0);

    EegRecording out = remove_artifacts(rec, {ArtifactMethod::threshold_default, 0.1});
    CHECK(std::abs(out.samples[0][500]) < threshold);
    REQUIRE(out.samples[0].size() == rec.samples[0].size());
    // small samples pass through: anything under half the threshold is untouched
    for (long s = 0; s < 1024; ++s) {
        if (s != 500 && std::abs(rec.samples[0][s]) < threshold / 2.0)
            REQUIRE(out.samples[0][s] == rec.samples[0][s]);
    }
}

TEST_CASE("all-zero recording passes the artifact stage unchanged") {
    EegRecording rec = flat_recording(128, 0.0);
    EegRecording out = remove_artifacts(rec, {});
    for (const auto& ch : out.samples) {
        for (double v : ch) REQUIRE(v == 0.0);
    }
}

namespace {

EegRecording annotated_recording(const std::vector<std::pair<TaskLabel, long>>& blocks) {
    long total = 0;
    for (auto& [label, len] : blocks) total += len;
    EegRecording rec;
    rec.samples.assign(kNumChannels, std::vector<double>(total, 0.0));
    long cursor = 0;
    int task = 1;
    for (auto& [label, len] : blocks) {
        rec.annotations.push_back({label, task++, cursor, cursor + len, std::nullopt});
        cursor += len;
    }
    return rec;
}

}  // namespace

TEST_CASE("segmentation walks each annotation with hop 32") {
    EegRecording rec = annotated_recording({{TaskLabel::Listening, 256}});
    auto segs = segment_recording(rec);
    REQUIRE(segs.size() == 5);
    for (std::size_t i = 0; i < segs.size(); ++i) {
        CHECK(segs[i].start_sample == static_cast<long>(32 * i));
        CHECK(segs[i].label == TaskLabel::Listening);
    }
}

TEST_CASE("a window that does not fit yields no segments") {
    EegRecording rec = annotated_recording({{TaskLabel::Writing, 127}});
    REQUIRE(segment_recording(rec).empty());
}

TEST_CASE("segments never span annotation boundaries") {
    EegRecording rec =
        annotated_recording({{TaskLabel::Listening, 128}, {TaskLabel::Writing, 128}});
    auto segs = segment_recording(rec);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].start_sample == 0);
    CHECK(segs[0].label == TaskLabel::Listening);
    CHECK(segs[1].start_sample == 128);
    CHECK(segs[1].label == TaskLabel::Writing);
}

TEST_CASE("segment count follows floor((L-128)/32)+1") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        long len = 128 + static_cast<long>(rng.index(512));
        EegRecording rec = annotated_recording({{TaskLabel::Resting, len}});
        auto segs = segment_recording(rec);
        REQUIRE(segs.size() == static_cast<std::size_t>((len - 128) / 32 + 1));
    }
}

TEST_CASE("welch matches the direct DFT periodogram") {
    Rng rng(21);
    std::vector<double> x(128);
    for (auto& v : x) v = rng.normal();
    auto psd = welch_psd(x);
    auto want = oracles::direct_periodogram(x, 128.0);
    REQUIRE(psd.size() == want.size());
    for (std::size_t k = 0; k < psd.size(); ++k)
        REQUIRE(psd[k] == Approx(want[k]).margin(1e-10));
}

TEST_CASE("a 10 Hz sinusoid concentrates its PSD in the alpha bins") {
    std::vector<double> x(128);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(2.0 * oracles::kPi * 10.0 * i / 128.0);
    auto psd = welch_psd(x);
    double alpha = 0.0, total = 0.0;
    for (std::size_t k = 0; k < psd.size(); ++k) {
        total += psd[k];
        if (k >= 8 && k < 14) alpha += psd[k];
    }
    REQUIRE(alpha / total >= 0.90);
}

TEST_CASE("zero signal has an all-zero PSD") {
    std::vector<double> x(128, 0.0);
    for (double p : welch_psd(x)) REQUIRE(p == 0.0);
}

TEST_CASE("white-noise PSD integrates to the variance") {
    double mean_integral = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(1000 + seed);
        std::vector<double> x(128);
        for (auto& v : x) v = rng.normal();
        auto psd = welch_psd(x);
        mean_integral += std::accumulate(psd.begin(), psd.end(), 0.0);  // 1 Hz bins
    }
    mean_integral /= 100.0;
    CHECK(mean_integral == Approx(1.0).epsilon(0.10));
}

TEST_CASE("wrong segment length is rejected") {
    std::vector<double> x(127, 0.0);
    REQUIRE_THROWS_AS(welch_psd(x), argument_error);
}

TEST_CASE("band powers follow the bin-center assignment rule") {
    std::array<double, kPsdBins> flat;
    flat.fill(1.0);
    auto bp = band_powers(flat);

    // via explicit enumeration of the documented rule
    std::array<double, kNumBands> want{};
    for (int k = 0; k <= 64; ++k) {
        for (std::size_t b = 0; b < kNumBands; ++b) {
            bool in = k >= kBands[b].lo_hz && k < kBands[b].hi_hz;
            if (b == kNumBands - 1 && k == 64) in = true;
            if (in) want[b] += 1.0;
        }
    }
    REQUIRE(want[0] == 3.0);  // delta: bins 1..3, bin 0 excluded
    for (std::size_t b = 0; b < kNumBands; ++b) CHECK(bp[b] == want[b]);
    CHECK(std::accumulate(bp.begin(), bp.end(), 0.0) == 64.0);
}

TEST_CASE("zero PSD gives six zero band powers") {
    std::array<double, kPsdBins> psd{};
    for (double v : band_powers(psd)) REQUIRE(v == 0.0);
}

TEST_CASE("an impulse at 10 Hz lands entirely in alpha") {
    std::array<double, kPsdBins> psd{};
    psd[10] = 7.0;
    auto bp = band_powers(psd);
    CHECK(bp[band_index("alpha")] == 7.0);
    CHECK(bp[0] + bp[1] + bp[3] + bp[4] + bp[5] == 0.0);
}

namespace {

LabeledSegment sinusoid_segment(std::size_t channel, double freq, double amp) {
    LabeledSegment seg;
    seg.samples.fill(0.0);
    auto ch = seg.channel(channel);
    for (long i = 0; i < kSegmentSamples; ++i)
        ch[i] = amp * std::sin(2.0 * oracles::kPi * freq * i / 128.0);
    return seg;
}

}  // namespace

TEST_CASE("feature vectors have exactly 84 entries") {
    LabeledSegment seg = sinusoid_segment(0, 10.0, 1.0);
    BandPowerVector f = feature_vector(seg);
    REQUIRE(f.values.size() == 84);
}

TEST_CASE("a zero segment maps to a zero feature vector") {
    LabeledSegment seg;
    seg.samples.fill(0.0);
    for (double v : feature_vector(seg).values) REQUIRE(v == 0.0);
}

TEST_CASE("O1 alpha sinusoid puts the maximum at the alpha x O1 entry") {
    std::size_t o1 = channel_index("O1");
    LabeledSegment seg = sinusoid_segment(o1, 10.0, 3.0);
    BandPowerVector f = feature_vector(seg);
    std::size_t want = band_index("alpha") * kNumChannels + o1;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (i != want) REQUIRE(f.values[i] < f.values[want]);
    }
    // cross-check the winning entry against the direct DFT oracle
    auto psd = oracles::direct_periodogram(seg.channel(o1), 128.0);
    double alpha = 0.0;
    for (int k = 8; k < 14; ++k) alpha += psd[k];
    REQUIRE(f.values[want] == Approx(alpha).epsilon(1e-9));
}

TEST_CASE("features scale with the square of the signal") {
    Rng rng(77);
    LabeledSegment seg;
    for (auto& v : seg.samples) v = rng.normal();
    LabeledSegment scaled = seg;
    const double c = 3.25;
    for (auto& v : scaled.samples) v *= c;

    BandPowerVector f = feature_vector(seg);
    BandPowerVector g = feature_vector(scaled);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        REQUIRE(g.values[i] == Approx(c * c * f.values[i]).epsilon(1e-9).margin(1e-15));
}

TEST_CASE("band powers account for the PSD integral over 0.1-64 Hz") {
    // trapezoid integral as the independent route
    double ratio_sum = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(500 + seed);
        std::vector<double> x(128);
        for (auto& v : x) v = rng.normal();
        auto psd = welch_psd(x);
        auto bp = band_powers(psd);
        double bands = std::accumulate(bp.begin(), bp.end(), 0.0);

        double integral = 0.0;
        for (int k = 1; k < 64; ++k) integral += 0.5 * (psd[k] + psd[k + 1]);
        // sliver 0.1..1 Hz, linear between bins 0 and 1
        auto lerp = [&](double f) { return psd[0] + (psd[1] - psd[0]) * f; };
        integral += 0.5 * (lerp(0.1) + psd[1]) * 0.9;
        ratio_sum += bands / integral;
    }
    CHECK(ratio_sum / 100.0 == Approx(1.0).margin(0.05));
}
