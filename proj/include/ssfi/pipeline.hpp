#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssfi/dsp.hpp"
#include "ssfi/eeg.hpp"
#include "ssfi/error.hpp"
#include "ssfi/fetch.hpp"
#include "ssfi/isd.hpp"
#include "ssfi/ssfi.hpp"
#include "ssfi/train.hpp"
#include "ssfi/viz.hpp"

namespace ssfi {

// ---------------------------------------------------------------------------
// Pipeline configuration. Every omitted JSON field keeps its default, and
// the defaults are the standard processing parameters: 5th-order 1 Hz
// highpass, 128/32 segmentation, six bands, 64x64 grid, dropout 0.3,
// l2 = 0.01.
// ---------------------------------------------------------------------------

struct VizConfig {
    std::string layer = "CNV1";
    std::vector<int> units = {0, 1, 2, 3};
    bool per_channel = false;
    int steps = 200;
    double step_size = 0.1;
};

struct PipelineConfig {
    std::string data_dir = "data";
    std::string out_dir = "out";
    std::vector<int> subjects = {1};
    std::string source = "csv";  // csv | synthetic | fetch
    FetchConfig fetch;
    SyntheticSpec synthetic;
    int grid = 64;
    int filter_order = 5;
    double cutoff_hz = 1.0;
    long window = kSegmentSamples;
    long hop = kSegmentHop;
    ArtifactConfig artifact;
    TrainConfig train;
    SplitSpec split;
    std::uint64_t seed = 0;
    VizConfig viz;
};

namespace detail {

inline SignatureComponent signature_from_json(const nlohmann::json& j) {
    return signature(j.at("channel").get<std::string>(), j.at("band").get<std::string>(),
                     j.at("amplitude").get<double>());
}

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
    PipelineConfig c;
    c.data_dir = j.value("data_dir", c.data_dir);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("subjects")) c.subjects = j.at("subjects").get<std::vector<int>>();
    c.source = j.value("source", c.source);
    c.fetch.base_url = j.value("base_url", c.fetch.base_url);
    c.fetch.timeout_seconds = j.value("fetch_timeout_s", c.fetch.timeout_seconds);
    c.grid = j.value("grid", c.grid);
    c.filter_order = j.value("filter_order", c.filter_order);
    c.cutoff_hz = j.value("cutoff_hz", c.cutoff_hz);
    c.window = j.value("window", c.window);
    c.hop = j.value("hop", c.hop);
    std::string method = j.value("artifact_method", std::string("threshold_default"));
    if (method == "none") c.artifact.method = ArtifactMethod::none;
    else if (method == "threshold_default") c.artifact.method = ArtifactMethod::threshold_default;
    else throw argument_error("unknown artifact method: " + method);
    c.artifact.beta = j.value("artifact_beta", c.artifact.beta);
    c.seed = j.value("seed", c.seed);

    if (j.contains("train")) {
        const auto& t = j.at("train");
        c.train.lr = t.value("lr", c.train.lr);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
        c.train.patience = t.value("patience", c.train.patience);
        c.train.l2_lambda = t.value("l2", c.train.l2_lambda);
        c.train.dropout_rate = t.value("dropout", c.train.dropout_rate);
    }
    c.train.grid = c.grid;

    if (j.contains("split")) {
        const auto& s = j.at("split");
        c.split.train_lo = s.value("train_lo", c.split.train_lo);
        c.split.train_hi = s.value("train_hi", c.split.train_hi);
        c.split.test_lo = s.value("test_lo", c.split.test_lo);
        c.split.test_hi = s.value("test_hi", c.split.test_hi);
    }

    if (j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        c.synthetic.n_experiments = s.value("n_experiments", c.synthetic.n_experiments);
        if (s.contains("task_samples")) {
            auto v = s.at("task_samples").get<std::vector<long>>();
            if (v.size() != 3) throw argument_error("task_samples needs 3 entries (L, W, R)");
            c.synthetic.task_samples = {v[0], v[1], v[2]};
        }
        c.synthetic.gap_samples = s.value("gap_samples", c.synthetic.gap_samples);
        c.synthetic.noise_amp = s.value("noise_amp", c.synthetic.noise_amp);
        if (s.contains("signatures")) {
            const auto& sig = s.at("signatures");
            const char* keys[3] = {"L", "W", "R"};
            for (int k = 0; k < 3; ++k) {
                c.synthetic.signatures[k].clear();
                if (sig.contains(keys[k])) {
                    for (const auto& comp : sig.at(keys[k]))
                        c.synthetic.signatures[k].push_back(detail::signature_from_json(comp));
                }
            }
        }
    }

    if (j.contains("viz")) {
        const auto& v = j.at("viz");
        c.viz.layer = v.value("layer", c.viz.layer);
        if (v.contains("units")) c.viz.units = v.at("units").get<std::vector<int>>();
        c.viz.per_channel = v.value("per_channel", c.viz.per_channel);
        c.viz.steps = v.value("steps", c.viz.steps);
        c.viz.step_size = v.value("step_size", c.viz.step_size);
    }
    return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config " + path);
    nlohmann::json j;
    in >> j;
    return parse_pipeline_config(j);
}

inline nlohmann::json pipeline_config_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["data_dir"] = c.data_dir;
    j["out_dir"] = c.out_dir;
    j["subjects"] = c.subjects;
    j["source"] = c.source;
    j["base_url"] = c.fetch.base_url;
    j["grid"] = c.grid;
    j["filter_order"] = c.filter_order;
    j["cutoff_hz"] = c.cutoff_hz;
    j["window"] = c.window;
    j["hop"] = c.hop;
    j["artifact_method"] =
        c.artifact.method == ArtifactMethod::none ? "none" : "threshold_default";
    j["artifact_beta"] = c.artifact.beta;
    j["seed"] = c.seed;
    j["train"] = {{"lr", c.train.lr},
                  {"batch_size", c.train.batch_size},
                  {"max_epochs", c.train.max_epochs},
                  {"patience", c.train.patience},
                  {"l2", c.train.l2_lambda},
                  {"dropout", c.train.dropout_rate}};
    j["split"] = {{"train_lo", c.split.train_lo},
                  {"train_hi", c.split.train_hi},
                  {"test_lo", c.split.test_lo},
                  {"test_hi", c.split.test_hi}};
    j["synthetic"] = {{"n_experiments", c.synthetic.n_experiments},
                      {"task_samples", c.synthetic.task_samples},
                      {"gap_samples", c.synthetic.gap_samples},
                      {"noise_amp", c.synthetic.noise_amp}};
    j["viz"] = {{"layer", c.viz.layer},
                {"units", c.viz.units},
                {"per_channel", c.viz.per_channel},
                {"steps", c.viz.steps}};
    return j;
}

// ---------------------------------------------------------------------------
// Content hashing and the run manifest. A stage is skipped when all its
// outputs exist and the manifest shows the same input hashes under the same
// config hash; otherwise it runs and the manifest is rewritten.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fnv1a_hex(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot hash missing file " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        std::size_t got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace detail

class Manifest {
public:
    Manifest(std::string path, nlohmann::json config, std::string config_hash,
             std::uint64_t seed)
        : path_(std::move(path)), config_hash_(std::move(config_hash)), seed_(seed) {
        std::ifstream in(path_);
        if (in) {
            try {
                in >> doc_;
            } catch (...) {
                doc_ = nlohmann::json::object();  // corrupt manifest: start over
            }
        }
        if (!doc_.is_object()) doc_ = nlohmann::json::object();
        doc_["config"] = std::move(config);  // everything needed to rerun
        doc_["config_hash"] = config_hash_;
        doc_["seed"] = seed_;
        if (!doc_.contains("stages") || !doc_["stages"].is_object())
            doc_["stages"] = nlohmann::json::object();
    }

    bool stage_cached(const std::string& name, const std::vector<std::string>& inputs,
                      const std::vector<std::string>& outputs) const {
        namespace fs = std::filesystem;
        for (const auto& o : outputs) {
            if (!fs::exists(o)) return false;
        }
        if (!doc_["stages"].contains(name)) return false;
        const auto& rec = doc_["stages"][name];
        if (rec.value("config_hash", "") != config_hash_) return false;
        nlohmann::json want = nlohmann::json::object();
        for (const auto& i : inputs) want[i] = detail::hash_file(i);
        return rec.value("inputs", nlohmann::json::object()) == want;
    }

    void record_stage(const std::string& name, const std::vector<std::string>& inputs,
                      const std::vector<std::string>& outputs) {
        nlohmann::json rec;
        rec["config_hash"] = config_hash_;
        nlohmann::json in = nlohmann::json::object();
        for (const auto& i : inputs) in[i] = detail::hash_file(i);
        rec["inputs"] = in;
        rec["outputs"] = outputs;
        doc_["stages"][name] = rec;
        save();
    }

    void save() const {
        std::ofstream out(path_);
        if (!out) throw io_error("cannot write manifest " + path_);
        out << doc_.dump(2) << '\n';
    }

private:
    std::string path_;
    std::string config_hash_;
    std::uint64_t seed_;
    nlohmann::json doc_;
};

struct StageStatus {
    std::string name;
    bool ran = false;  // false = cache hit
};

using RunSummary = std::vector<StageStatus>;

// ---------------------------------------------------------------------------
// Stage implementations.
// ---------------------------------------------------------------------------

namespace stages {

inline std::string subject_csv(const PipelineConfig& c, int subject) {
    return (std::filesystem::path(c.data_dir) / subject_file_name(subject)).string();
}
inline std::string preprocessed_csv(const PipelineConfig& c, int subject) {
    return (std::filesystem::path(c.out_dir) / "preprocessed" / subject_file_name(subject))
        .string();
}
inline std::string ssfi_file(const PipelineConfig& c, int subject) {
    return (std::filesystem::path(c.out_dir) / "ssfi" /
            ("subject_" + std::to_string(subject) + ".ssfid"))
        .string();
}
inline std::string checkpoint_file(const PipelineConfig& c, int subject) {
    return (std::filesystem::path(c.out_dir) / "models" /
            ("subject_" + std::to_string(subject) + ".ckpt"))
        .string();
}
inline std::string history_file(const PipelineConfig& c, int subject) {
    return (std::filesystem::path(c.out_dir) / "models" /
            ("subject_" + std::to_string(subject) + "_history.csv"))
        .string();
}
inline std::string report_file(const PipelineConfig& c, int subject) {
    return (std::filesystem::path(c.out_dir) / "reports" /
            ("subject_" + std::to_string(subject) + ".json"))
        .string();
}

inline nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json j;
    j["accuracy"] = r.accuracy;
    j["naive_accuracy"] = r.naive_accuracy;
    j["chance"] = r.chance;
    j["confusion"] = r.confusion;
    j["class_counts"] = r.class_counts;
    j["n_samples"] = r.n_samples;
    return j;
}

}  // namespace stages

// Writes through a .partial path and renames on success, so an interrupted
// stage never leaves a plausible-looking output behind.
template <typename WriteFn>
void atomic_write(const std::string& path, WriteFn&& write) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(path).parent_path());
    std::string partial = path + ".partial";
    write(partial);
    fs::rename(partial, path);
}

inline RunSummary run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    cfg.train.validate();
    cfg.split.validate();
    if (cfg.subjects.empty()) throw argument_error("pipeline needs at least one subject");

    fs::create_directories(cfg.out_dir);
    nlohmann::json cfg_json = pipeline_config_json(cfg);
    std::string cfg_dump = cfg_json.dump();
    std::string cfg_hash = detail::fnv1a_hex(cfg_dump.data(), cfg_dump.size());
    Manifest manifest((fs::path(cfg.out_dir) / "manifest.json").string(), std::move(cfg_json),
                      cfg_hash, cfg.seed);

    RunSummary summary;
    auto run_stage = [&](const std::string& name, const std::vector<std::string>& inputs,
                         const std::vector<std::string>& outputs, auto&& body) {
        if (manifest.stage_cached(name, inputs, outputs)) {
            summary.push_back({name, false});
            return;
        }
        try {
            body();
        } catch (const std::exception& e) {
            throw std::runtime_error("stage " + name + " failed: " + e.what());
        }
        manifest.record_stage(name, inputs, outputs);
        summary.push_back({name, true});
    };

    // --- data acquisition ---------------------------------------------------
    for (int subject : cfg.subjects) {
        std::string csv = stages::subject_csv(cfg, subject);
        std::string name = "source:subject_" + std::to_string(subject);
        if (cfg.source == "synthetic") {
            run_stage(name, {}, {csv}, [&] {
                SyntheticSpec spec = cfg.synthetic;
                spec.subject_id = subject;
                spec.seed = cfg.seed + static_cast<std::uint64_t>(subject);
                atomic_write(csv, [&](const std::string& p) {
                    save_recording(synth_recording(spec), p);
                });
            });
        } else if (cfg.source == "fetch") {
            run_stage(name, {}, {csv},
                      [&] { fetch_subject(subject, cfg.fetch, cfg.data_dir); });
        } else if (cfg.source == "csv") {
            if (!fs::exists(csv))
                throw std::runtime_error("stage " + name + " failed: missing input file " + csv);
            summary.push_back({name, false});  // nothing to produce, data supplied by the user
        } else {
            throw argument_error("unknown source: " + cfg.source);
        }
    }

    // --- preprocess -----------------------------------------------------------
    IirFilter hp = design_highpass(cfg.filter_order, cfg.cutoff_hz, 128.0);
    for (int subject : cfg.subjects) {
        std::string in = stages::subject_csv(cfg, subject);
        std::string out = stages::preprocessed_csv(cfg, subject);
        run_stage("preprocess:subject_" + std::to_string(subject), {in}, {out}, [&] {
            EegRecording rec = load_recording(in, subject);
            rec = apply_filter(hp, rec);
            rec = remove_artifacts(rec, cfg.artifact);
            atomic_write(out, [&](const std::string& p) { save_recording(rec, p); });
        });
    }

    // --- featurize ------------------------------------------------------------
    Interpolator interp(project_montage());
    for (int subject : cfg.subjects) {
        std::string in = stages::preprocessed_csv(cfg, subject);
        std::string out = stages::ssfi_file(cfg, subject);
        run_stage("featurize:subject_" + std::to_string(subject), {in}, {out}, [&] {
            EegRecording rec = load_recording(in, subject);
            auto samples = featurize_recording(rec, interp, cfg.grid, cfg.window, cfg.hop);
            if (samples.empty()) throw argument_error("no segments produced");
            atomic_write(out, [&](const std::string& p) { save_dataset(samples, p); });
        });
    }

    // --- train + evaluate -------------------------------------------------------
    for (int subject : cfg.subjects) {
        std::string in = stages::ssfi_file(cfg, subject);
        std::string ckpt = stages::checkpoint_file(cfg, subject);
        std::string hist = stages::history_file(cfg, subject);
        std::string report = stages::report_file(cfg, subject);
        run_stage("train:subject_" + std::to_string(subject), {in}, {ckpt, hist, report}, [&] {
            auto samples = load_dataset(in);
            auto [train_set, test_set] =
                serial_split(std::span<const SsfiSample>(samples), cfg.split);
            TrainConfig tc = cfg.train;
            tc.grid = cfg.grid;
            tc.seed = cfg.seed + static_cast<std::uint64_t>(subject);
            auto result =
                train_model(train_set, tc, "train:subject" + std::to_string(subject));
            atomic_write(ckpt, [&](const std::string& p) { result.model.save(p); });
            atomic_write(hist, [&](const std::string& p) { save_history(result.history, p); });
            EvalReport rep = evaluate(result.model, test_set.empty()
                                                        ? std::span<const SsfiSample>(train_set)
                                                        : std::span<const SsfiSample>(test_set));
            atomic_write(report, [&](const std::string& p) {
                std::ofstream o(p);
                o << stages::report_json(rep).dump(2) << '\n';
            });
        });
    }

    // --- inter-subject dependency ------------------------------------------------
    {
        std::vector<std::string> inputs;
        for (int subject : cfg.subjects) {
            inputs.push_back(stages::checkpoint_file(cfg, subject));
            inputs.push_back(stages::ssfi_file(cfg, subject));
        }
        std::string csv = (fs::path(cfg.out_dir) / "isd" / "matrix.csv").string();
        std::string ppm = (fs::path(cfg.out_dir) / "isd" / "matrix.ppm").string();
        run_stage("isd", inputs, {csv, ppm}, [&] {
            std::vector<CnnModel<float>> models;
            std::vector<SubjectData> data;
            for (int subject : cfg.subjects) {
                models.push_back(CnnModel<float>::load(stages::checkpoint_file(cfg, subject)));
                data.push_back({subject, load_dataset(stages::ssfi_file(cfg, subject))});
            }
            IsdMatrix m = isd_matrix(models, data);
            atomic_write(csv, [&](const std::string& p) { save_isd_csv(m, p); });
            atomic_write(ppm, [&](const std::string& p) { save_isd_heatmap(m, p); });
        });
    }

    // --- deep representation -----------------------------------------------------
    for (int subject : cfg.subjects) {
        std::string ckpt = stages::checkpoint_file(cfg, subject);
        fs::path viz_dir = fs::path(cfg.out_dir) / "viz" / ("subject_" + std::to_string(subject));
        std::vector<std::string> outputs;
        int layer = parse_layer_id(cfg.viz.layer);
        for (int unit : cfg.viz.units) {
            if (cfg.viz.per_channel) {
                for (std::size_t b = 0; b < kNumBands; ++b)
                    outputs.push_back((viz_dir / (cfg.viz.layer + "_" + std::to_string(unit) +
                                                  "_" + std::string(kBands[b].name) + ".ppm"))
                                          .string());
            } else {
                outputs.push_back(
                    (viz_dir / (cfg.viz.layer + "_" + std::to_string(unit) + ".ppm")).string());
            }
        }
        outputs.push_back((viz_dir / "kernels_CNV1.ppm").string());
        outputs.push_back((viz_dir / "kernels_CNV5.ppm").string());

        run_stage("viz:subject_" + std::to_string(subject), {ckpt}, outputs, [&] {
            auto model = CnnModel<float>::load(ckpt);
            std::size_t out_i = 0;
            for (int unit : cfg.viz.units) {
                AscentConfig ac;
                ac.layer = layer;
                ac.unit = unit;
                ac.steps = cfg.viz.steps;
                ac.step_size = cfg.viz.step_size;
                ac.per_channel = cfg.viz.per_channel;
                ac.seed = cfg.seed + static_cast<std::uint64_t>(subject) * 1000 +
                          static_cast<std::uint64_t>(unit);
                auto patterns = activation_maximization(model, ac);
                for (const auto& p : patterns) {
                    int band = p.band >= 0 ? p.band : 0;
                    atomic_write(outputs[out_i++], [&](const std::string& path) {
                        render_topomap_band(p.pattern, band, path);
                    });
                }
            }
            atomic_write(outputs[out_i++],
                         [&](const std::string& p) { export_kernels(model, 0, p); });
            atomic_write(outputs[out_i++],
                         [&](const std::string& p) { export_kernels(model, 4, p); });
        });
    }

    return summary;
}

}  // namespace ssfi
