#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssfi/bands.hpp"
#include "ssfi/channels.hpp"
#include "ssfi/error.hpp"
#include "ssfi/rng.hpp"

namespace ssfi {

enum class TaskLabel : int { Listening = 0, Writing = 1, Resting = 2 };

inline char label_char(TaskLabel l) {
    switch (l) {
        case TaskLabel::Listening: return 'L';
        case TaskLabel::Writing: return 'W';
        case TaskLabel::Resting: return 'R';
    }
    return '?';
}

inline const char* label_name(TaskLabel l) {
    switch (l) {
        case TaskLabel::Listening: return "listening";
        case TaskLabel::Writing: return "writing";
        case TaskLabel::Resting: return "resting";
    }
    return "?";
}

// Auditory conditions attached to a task period. Not serialized in the CSV
// schema; carried through when a loader for richer sources fills them in.
struct TaskConditions {
    double noise_level = 0.0;
    int message_length = 0;
    bool semantic = true;
    double attention_score = 0.0;
};

struct TaskAnnotation {
    TaskLabel label = TaskLabel::Listening;
    int task_index = 1;  // experiment number, 1..144
    long start_sample = 0;
    long end_sample = 0;  // exclusive
    std::optional<TaskConditions> conditions;

    long length() const { return end_sample - start_sample; }
};

struct EegRecording {
    // samples[channel][sample], microvolts, kChannelNames order.
    std::vector<std::vector<double>> samples;
    double fs = 128.0;
    int subject_id = 1;
    std::vector<TaskAnnotation> annotations;

    long n_samples() const { return samples.empty() ? 0 : static_cast<long>(samples[0].size()); }

    void validate() const {
        if (samples.size() != kNumChannels)
            throw argument_error("recording must have exactly 14 channels");
        for (const auto& ch : samples) {
            if (static_cast<long>(ch.size()) != n_samples())
                throw argument_error("channel lengths differ");
        }
        long prev_end = 0;
        int prev_task = 0;
        for (const auto& a : annotations) {
            if (a.start_sample >= a.end_sample)
                throw argument_error("annotation with empty sample range");
            if (a.start_sample < prev_end)
                throw argument_error("annotations overlap or are unsorted");
            if (a.task_index < prev_task)
                throw argument_error("task indices decrease across annotations");
            if (a.end_sample > n_samples())
                throw argument_error("annotation extends past end of recording");
            prev_end = a.end_sample;
            prev_task = a.task_index;
        }
    }
};

// ---------------------------------------------------------------------------
// CSV schema: header row of the 14 channel names in montage order, then
// "label" (L/W/R/none) and "task" (experiment number). One row per sample.
// Samples labeled none belong to no task and produce no annotation.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, long row) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw parse_error("row " + std::to_string(row) + ": bad number '" + s + "'");
    return v;
}

}  // namespace detail

inline EegRecording load_recording(const std::string& path, int subject_id = 1) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw parse_error(path + ": empty file, header row required");
    auto header = detail::split_csv_row(line);

    for (std::size_t i = 0; i < kNumChannels; ++i) {
        if (i >= header.size() || header[i] != kChannelNames[i]) {
            std::string found = i < header.size() ? header[i] : "<nothing>";
            throw parse_error(path + ": expected channel column \"" +
                              std::string(kChannelNames[i]) + "\" at position " +
                              std::to_string(i) + ", found \"" + found + "\"");
        }
    }
    if (header.size() != kNumChannels + 2 || header[kNumChannels] != "label" ||
        header[kNumChannels + 1] != "task") {
        throw parse_error(path + ": header must end with \"label\",\"task\" and no extra columns");
    }

    EegRecording rec;
    rec.subject_id = subject_id;
    rec.samples.assign(kNumChannels, {});

    // Label runs become annotations: a run is a maximal block of consecutive
    // rows sharing (label, task). none-rows are retained as samples only.
    bool in_run = false;
    TaskLabel run_label = TaskLabel::Listening;
    int run_task = 0;
    long run_start = 0;
    int prev_task = 0;
    long row = 0;

    auto close_run = [&](long end) {
        if (in_run) {
            rec.annotations.push_back({run_label, run_task, run_start, end, std::nullopt});
            in_run = false;
        }
    };

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_row(line);
        ++row;
        if (cells.size() != kNumChannels + 2)
            throw parse_error(path + ": row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " columns, expected " +
                              std::to_string(kNumChannels + 2));
        for (std::size_t c = 0; c < kNumChannels; ++c)
            rec.samples[c].push_back(detail::parse_double(cells[c], row));

        const std::string& lab = cells[kNumChannels];
        long sample = row - 1;
        if (lab == "none") {
            close_run(sample);
            continue;
        }
        TaskLabel label;
        if (lab == "L") label = TaskLabel::Listening;
        else if (lab == "W") label = TaskLabel::Writing;
        else if (lab == "R") label = TaskLabel::Resting;
        else throw parse_error(path + ": row " + std::to_string(row) + ": unknown label \"" + lab + "\"");

        int task = 0;
        auto [p, ec] = std::from_chars(cells[kNumChannels + 1].data(),
                                       cells[kNumChannels + 1].data() + cells[kNumChannels + 1].size(), task);
        if (ec != std::errc())
            throw parse_error(path + ": row " + std::to_string(row) + ": bad task index \"" +
                              cells[kNumChannels + 1] + "\"");
        if (task < prev_task)
            throw parse_error(path + ": row " + std::to_string(row) + ": task index decreases");
        prev_task = task;

        if (in_run && (label != run_label || task != run_task)) close_run(sample);
        if (!in_run) {
            in_run = true;
            run_label = label;
            run_task = task;
            run_start = sample;
        }
    }
    close_run(rec.n_samples());
    rec.validate();
    return rec;
}

inline void save_recording(const EegRecording& rec, const std::string& path) {
    rec.validate();
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);

    for (std::size_t c = 0; c < kNumChannels; ++c) out << kChannelNames[c] << ',';
    out << "label,task\n";

    std::size_t next_ann = 0;
    char buf[40];
    for (long s = 0; s < rec.n_samples(); ++s) {
        while (next_ann < rec.annotations.size() && rec.annotations[next_ann].end_sample <= s)
            ++next_ann;
        for (std::size_t c = 0; c < kNumChannels; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", rec.samples[c][s]);
            out << buf << ',';
        }
        if (next_ann < rec.annotations.size() && rec.annotations[next_ann].start_sample <= s) {
            const auto& a = rec.annotations[next_ann];
            out << label_char(a.label) << ',' << a.task_index << '\n';
        } else {
            out << "none,0\n";
        }
    }
    if (!out) throw io_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Synthetic recordings. Each experiment is a contiguous L/W/R block followed
// by an unlabeled gap; each class plants band-limited sinusoidal bursts at
// its (channel, band) signature on top of a white noise floor. The seed
// fully determines the output.
// ---------------------------------------------------------------------------

struct SignatureComponent {
    std::size_t channel = 0;  // kChannelNames index
    double band_lo = 8.0;
    double band_hi = 14.0;
    double amplitude = 0.0;  // microvolts, sinusoid peak
};

inline SignatureComponent signature(std::string_view channel, std::string_view band,
                                    double amplitude) {
    const Band& b = kBands[band_index(band)];
    return {channel_index(channel), b.lo_hz, b.hi_hz, amplitude};
}

struct SyntheticSpec {
    int subject_id = 1;
    int n_experiments = 144;                          // task_index runs 1..n
    std::array<long, 3> task_samples = {160, 224, 160};  // L, W, R block lengths
    long gap_samples = 32;                            // none-labeled gap per experiment
    double noise_amp = 5.0;                           // white noise stddev, microvolts
    std::uint64_t seed = 0;
    std::array<std::vector<SignatureComponent>, 3> signatures;  // per class
};

// Burst carrier frequency: band center rounded to the nearest whole hertz,
// kept inside the band. Whole-hertz carriers land on PSD bin centers.
inline double burst_frequency(double lo, double hi) {
    double f = std::round((lo + hi) / 2.0);
    if (f <= lo) f = std::ceil(lo);
    if (f >= hi) f = std::floor(hi);
    return f;
}

inline EegRecording synth_recording(const SyntheticSpec& spec) {
    if (spec.n_experiments < 1) throw argument_error("n_experiments must be >= 1");
    if (spec.noise_amp < 0) throw argument_error("noise_amp must be >= 0");
    for (const auto& cls : spec.signatures) {
        for (const auto& c : cls) {
            if (c.channel >= kNumChannels) throw argument_error("signature channel out of range");
            if (c.band_lo < 0.1 || c.band_hi > 64.0 || c.band_lo >= c.band_hi)
                throw argument_error("signature band must lie within 0.1-64 Hz");
        }
    }

    const double fs = 128.0;
    const long exp_len = spec.task_samples[0] + spec.task_samples[1] + spec.task_samples[2];
    const long total = spec.n_experiments * (exp_len + spec.gap_samples);

    EegRecording rec;
    rec.fs = fs;
    rec.subject_id = spec.subject_id;
    rec.samples.assign(kNumChannels, std::vector<double>(total, 0.0));

    Rng rng(spec.seed);

    // Noise first, in channel-major order, so the noise field does not
    // depend on the signature table.
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        for (long s = 0; s < total; ++s) {
            rec.samples[c][s] = spec.noise_amp * rng.normal();
        }
    }

    long cursor = 0;
    for (int e = 1; e <= spec.n_experiments; ++e) {
        for (int cls = 0; cls < 3; ++cls) {
            long len = spec.task_samples[cls];
            if (len > 0) {
                rec.annotations.push_back(
                    {static_cast<TaskLabel>(cls), e, cursor, cursor + len, std::nullopt});
                for (const auto& comp : spec.signatures[cls]) {
                    double f = burst_frequency(comp.band_lo, comp.band_hi);
                    double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
                    auto& ch = rec.samples[comp.channel];
                    for (long s = 0; s < len; ++s) {
                        ch[cursor + s] +=
                            comp.amplitude * std::sin(2.0 * 3.14159265358979323846 * f *
                                                          static_cast<double>(s) / fs +
                                                      phase);
                    }
                }
            }
            cursor += len;
        }
        cursor += spec.gap_samples;
    }
    rec.validate();
    return rec;
}

}  // namespace ssfi
