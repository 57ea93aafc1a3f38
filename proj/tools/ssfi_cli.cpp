// Command-line front end for the SSFI pipeline: data acquisition,
// preprocessing, featurization, per-subject training, evaluation,
// inter-subject analysis and pattern visualization.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssfi/dsp.hpp"
#include "ssfi/eeg.hpp"
#include "ssfi/fetch.hpp"
#include "ssfi/isd.hpp"
#include "ssfi/model.hpp"
#include "ssfi/pipeline.hpp"
#include "ssfi/ssfi.hpp"
#include "ssfi/train.hpp"
#include "ssfi/viz.hpp"

namespace fs = std::filesystem;

namespace {

// Loads a subject's featurized data, falling back to featurizing the raw
// CSV with default parameters when no .ssfid cache is present.
std::vector<ssfi::SsfiSample> load_subject_data(const std::string& dir, int subject, int grid) {
    fs::path ssfid = fs::path(dir) / ("subject_" + std::to_string(subject) + ".ssfid");
    if (fs::exists(ssfid)) return ssfi::load_dataset(ssfid.string());

    fs::path csv = fs::path(dir) / ssfi::subject_file_name(subject);
    if (!fs::exists(csv))
        throw ssfi::io_error("no data for subject " + std::to_string(subject) + " in " + dir);
    ssfi::EegRecording rec = ssfi::load_recording(csv.string(), subject);
    rec = ssfi::apply_filter(ssfi::design_highpass(5, 1.0, 128.0), rec);
    rec = ssfi::remove_artifacts(rec, {});
    ssfi::Interpolator interp(ssfi::project_montage());
    return ssfi::featurize_recording(rec, interp, grid);
}

ssfi::TrainConfig train_config_from_file(const std::string& path) {
    ssfi::TrainConfig tc;
    if (path.empty()) return tc;
    std::ifstream in(path);
    if (!in) throw ssfi::io_error("cannot open config " + path);
    nlohmann::json j;
    in >> j;
    tc.lr = j.value("lr", tc.lr);
    tc.batch_size = j.value("batch_size", tc.batch_size);
    tc.max_epochs = j.value("max_epochs", tc.max_epochs);
    tc.patience = j.value("patience", tc.patience);
    tc.seed = j.value("seed", tc.seed);
    tc.l2_lambda = j.value("l2", tc.l2_lambda);
    tc.dropout_rate = j.value("dropout", tc.dropout_rate);
    tc.grid = j.value("grid", tc.grid);
    return tc;
}

// "0..31" or "3,7,9" or "5"
std::vector<int> parse_units(const std::string& spec) {
    std::vector<int> units;
    auto range_pos = spec.find("..");
    if (range_pos != std::string::npos) {
        int lo = std::stoi(spec.substr(0, range_pos));
        int hi = std::stoi(spec.substr(range_pos + 2));
        for (int u = lo; u <= hi; ++u) units.push_back(u);
        return units;
    }
    std::string cur;
    for (char c : spec + ",") {
        if (c == ',') {
            if (!cur.empty()) units.push_back(std::stoi(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    return units;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatio-spectral feature image pipeline for EEG task classification"};
    app.require_subcommand(1);

    // --- fetch ---------------------------------------------------------------
    auto* fetch_cmd = app.add_subcommand("fetch", "Download a subject's recording");
    int fetch_subject_id = 1;
    ssfi::FetchConfig fetch_cfg;
    std::string fetch_dest = "data";
    fetch_cmd->add_option("--subject", fetch_subject_id, "Subject id (1..25)")->required();
    fetch_cmd->add_option("--base-url", fetch_cfg.base_url, "Dataset base URL");
    fetch_cmd->add_option("--dest", fetch_dest, "Destination directory");
    fetch_cmd->add_option("--timeout", fetch_cfg.timeout_seconds, "Timeout in seconds");

    // --- preprocess ------------------------------------------------------------
    auto* pre_cmd = app.add_subcommand("preprocess", "Highpass filter + artifact removal");
    std::string pre_in, pre_out;
    int pre_order = 5;
    double pre_cutoff = 1.0;
    std::string pre_artifact = "threshold_default";
    double pre_beta = 0.1;
    int pre_subject = 1;
    pre_cmd->add_option("--in", pre_in, "Input CSV")->required();
    pre_cmd->add_option("--out", pre_out, "Output CSV")->required();
    pre_cmd->add_option("--subject", pre_subject, "Subject id");
    pre_cmd->add_option("--order", pre_order, "Highpass order");
    pre_cmd->add_option("--cutoff", pre_cutoff, "Highpass cutoff (Hz)");
    pre_cmd->add_option("--artifact", pre_artifact, "none | threshold_default");
    pre_cmd->add_option("--beta", pre_beta, "Artifact shrinkage parameter");

    // --- featurize -------------------------------------------------------------
    auto* feat_cmd = app.add_subcommand("featurize", "Segment and build SSFI arrays");
    std::string feat_in, feat_out;
    int feat_grid = 64;
    int feat_subject = 1;
    feat_cmd->add_option("--in", feat_in, "Preprocessed CSV")->required();
    feat_cmd->add_option("--out", feat_out, "Output .ssfid dataset")->required();
    feat_cmd->add_option("--grid", feat_grid, "Grid size (multiple of 16)");
    feat_cmd->add_option("--subject", feat_subject, "Subject id");

    // --- train -----------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train a subject-specific model");
    int train_subject = 1;
    std::string train_data = "data", train_config, train_out = "model.ckpt", train_history;
    train_cmd->add_option("--subject", train_subject, "Subject id")->required();
    train_cmd->add_option("--data", train_data, "Directory with .ssfid or .csv data");
    train_cmd->add_option("--config", train_config, "JSON training config");
    train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
    train_cmd->add_option("--history", train_history, "History CSV (default: <out>.history.csv)");

    // --- eval ------------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string eval_ckpt, eval_data = "data", eval_split = "test", eval_out;
    int eval_subject = 1;
    eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint path")->required();
    eval_cmd->add_option("--data", eval_data, "Data directory");
    eval_cmd->add_option("--subject", eval_subject, "Subject id")->required();
    eval_cmd->add_option("--split", eval_split, "test | train | all");
    eval_cmd->add_option("--out", eval_out, "Write report JSON here");

    // --- isd -------------------------------------------------------------------
    auto* isd_cmd = app.add_subcommand("isd", "Inter-subject dependency matrix");
    std::string isd_models = "out/models", isd_data = "out/ssfi";
    std::string isd_subjects = "1", isd_csv = "isd.csv", isd_image;
    isd_cmd->add_option("--models", isd_models, "Directory with subject_<k>.ckpt");
    isd_cmd->add_option("--data", isd_data, "Directory with subject_<k>.ssfid");
    isd_cmd->add_option("--subjects", isd_subjects, "Comma list or lo..hi range")->required();
    isd_cmd->add_option("--out-csv", isd_csv, "Matrix CSV path");
    isd_cmd->add_option("--out-image", isd_image, "Heatmap PPM path");

    // --- viz -------------------------------------------------------------------
    auto* viz_cmd = app.add_subcommand("viz", "Deep representation visualizations");
    viz_cmd->require_subcommand(1);

    auto* patterns_cmd = viz_cmd->add_subcommand("patterns", "Gradient-ascent patterns");
    std::string pat_ckpt, pat_layer = "CNV1", pat_units = "0", pat_out = "patterns";
    bool pat_per_channel = false;
    int pat_steps = 200;
    std::uint64_t pat_seed = 0;
    patterns_cmd->add_option("--ckpt", pat_ckpt, "Checkpoint path")->required();
    patterns_cmd->add_option("--layer", pat_layer, "CNV1..CNV5, FC1, FC2, OUT");
    patterns_cmd->add_option("--units", pat_units, "Unit list: 0..31 or 3,5,7");
    patterns_cmd->add_option("--out", pat_out, "Output directory")->required();
    patterns_cmd->add_flag("--per-channel", pat_per_channel, "One pattern per band");
    patterns_cmd->add_option("--steps", pat_steps, "Ascent steps");
    patterns_cmd->add_option("--seed", pat_seed, "Init seed");

    auto* kernels_cmd = viz_cmd->add_subcommand("kernels", "Tiled kernel sheet");
    std::string ker_ckpt, ker_layer = "CNV1", ker_out = "kernels.ppm";
    kernels_cmd->add_option("--ckpt", ker_ckpt, "Checkpoint path")->required();
    kernels_cmd->add_option("--layer", ker_layer, "CNV1..CNV5");
    kernels_cmd->add_option("--out", ker_out, "Output PPM path")->required();

    auto* topo_cmd = viz_cmd->add_subcommand("topomap", "Render one band of an SSFI array");
    std::string topo_ssfi, topo_band = "alpha", topo_out = "topomap.ppm";
    bool topo_markers = false;
    int topo_index = 0;
    topo_cmd->add_option("--ssfi", topo_ssfi, "Single .ssfi array or .ssfid dataset")->required();
    topo_cmd->add_option("--band", topo_band, "delta|theta|alpha|beta|gamma1|gamma2");
    topo_cmd->add_option("--index", topo_index, "Sample index when reading a dataset");
    topo_cmd->add_option("--out", topo_out, "Output PPM path")->required();
    topo_cmd->add_flag("--markers", topo_markers, "Overlay electrode markers");

    // --- pipeline ----------------------------------------------------------------
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full pipeline from a config");
    std::string pipe_config;
    std::int64_t pipe_seed = -1;
    pipe_cmd->add_option("--config", pipe_config, "Pipeline JSON config")->required();
    pipe_cmd->add_option("--seed", pipe_seed, "Override config seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fetch_cmd) {
            std::string path = ssfi::fetch_subject(fetch_subject_id, fetch_cfg, fetch_dest);
            std::printf("fetched: %s\n", path.c_str());
        } else if (*pre_cmd) {
            ssfi::EegRecording rec = ssfi::load_recording(pre_in, pre_subject);
            rec = ssfi::apply_filter(ssfi::design_highpass(pre_order, pre_cutoff, 128.0), rec);
            ssfi::ArtifactConfig ac;
            ac.beta = pre_beta;
            if (pre_artifact == "none") ac.method = ssfi::ArtifactMethod::none;
            else if (pre_artifact == "threshold_default")
                ac.method = ssfi::ArtifactMethod::threshold_default;
            else throw ssfi::argument_error("unknown artifact method " + pre_artifact);
            rec = ssfi::remove_artifacts(rec, ac);
            ssfi::save_recording(rec, pre_out);
            std::printf("preprocessed: %s (%ld samples)\n", pre_out.c_str(), rec.n_samples());
        } else if (*feat_cmd) {
            ssfi::EegRecording rec = ssfi::load_recording(feat_in, feat_subject);
            ssfi::Interpolator interp(ssfi::project_montage());
            auto samples = ssfi::featurize_recording(rec, interp, feat_grid);
            if (samples.empty()) throw ssfi::argument_error("no segments produced");
            ssfi::save_dataset(samples, feat_out);
            std::printf("featurized: %zu segments -> %s\n", samples.size(), feat_out.c_str());
        } else if (*train_cmd) {
            ssfi::TrainConfig tc = train_config_from_file(train_config);
            auto samples = load_subject_data(train_data, train_subject, tc.grid);
            if (!samples.empty()) tc.grid = samples[0].image.d1;  // cached arrays win
            auto [train_set, test_set] =
                ssfi::serial_split(std::span<const ssfi::SsfiSample>(samples), {});
            auto result = ssfi::train_model(
                train_set, tc, "train:subject" + std::to_string(train_subject));
            result.model.save(train_out);
            std::string hist =
                train_history.empty() ? train_out + ".history.csv" : train_history;
            ssfi::save_history(result.history, hist);
            std::printf("trained subject %d: %zu train segments, %d epochs, checkpoint %s\n",
                        train_subject, train_set.size(),
                        static_cast<int>(result.history.size()), train_out.c_str());
            if (!test_set.empty()) {
                auto rep = ssfi::evaluate(result.model, test_set);
                std::printf("test accuracy %.4f (naive %.4f, chance %.4f)\n", rep.accuracy,
                            rep.naive_accuracy, rep.chance);
            }
        } else if (*eval_cmd) {
            auto model = ssfi::CnnModel<float>::load(eval_ckpt);
            auto samples = load_subject_data(eval_data, eval_subject, model.config().grid);
            std::vector<ssfi::SsfiSample> chosen;
            if (eval_split == "all") {
                chosen = samples;
            } else {
                auto [train_set, test_set] =
                    ssfi::serial_split(std::span<const ssfi::SsfiSample>(samples), {});
                chosen = eval_split == "train" ? train_set : test_set;
            }
            auto rep = ssfi::evaluate(model, chosen);
            nlohmann::json j = ssfi::stages::report_json(rep);
            if (!eval_out.empty()) {
                std::ofstream out(eval_out);
                out << j.dump(2) << '\n';
            }
            std::printf("%s\n", j.dump(2).c_str());
        } else if (*isd_cmd) {
            std::vector<int> subjects = parse_units(isd_subjects);
            std::vector<ssfi::CnnModel<float>> models;
            std::vector<ssfi::SubjectData> data;
            for (int s : subjects) {
                fs::path ckpt = fs::path(isd_models) / ("subject_" + std::to_string(s) + ".ckpt");
                if (!fs::exists(ckpt))
                    throw ssfi::io_error("missing checkpoint for subject " + std::to_string(s));
                models.push_back(ssfi::CnnModel<float>::load(ckpt.string()));
                data.push_back({s, load_subject_data(isd_data, s, models.back().config().grid)});
            }
            ssfi::IsdMatrix m = ssfi::isd_matrix(models, data);
            ssfi::save_isd_csv(m, isd_csv);
            if (!isd_image.empty()) ssfi::save_isd_heatmap(m, isd_image);
            auto subj_avg = ssfi::subject_averages(m);
            auto model_avg = ssfi::model_averages(m);
            for (std::size_t i = 0; i < subjects.size(); ++i) {
                std::printf("subject %d: diag %.4f, subject-avg %.4f, model-avg %.4f\n",
                            subjects[i], m.at(static_cast<int>(i), static_cast<int>(i)),
                            subj_avg[i], model_avg[i]);
            }
            std::printf("isd matrix: %s\n", isd_csv.c_str());
        } else if (*patterns_cmd) {
            auto model = ssfi::CnnModel<float>::load(pat_ckpt);
            fs::create_directories(pat_out);
            for (int unit : parse_units(pat_units)) {
                ssfi::AscentConfig ac;
                ac.layer = ssfi::parse_layer_id(pat_layer);
                ac.unit = unit;
                ac.steps = pat_steps;
                ac.per_channel = pat_per_channel;
                ac.seed = pat_seed + static_cast<std::uint64_t>(unit);
                auto patterns = ssfi::activation_maximization(model, ac);
                for (const auto& p : patterns) {
                    std::string name = pat_layer + "_" + std::to_string(unit);
                    int band = 0;
                    if (p.band >= 0) {
                        name += "_" + std::string(ssfi::kBands[p.band].name);
                        band = p.band;
                    }
                    fs::path file = fs::path(pat_out) / (name + ".ppm");
                    ssfi::render_topomap_band(p.pattern, band, file.string());
                    std::printf("%s: activation %.6g -> %.6g%s\n", file.string().c_str(),
                                p.activations.front(), p.activations.back(),
                                p.degenerate ? " (degenerate)" : "");
                }
            }
        } else if (*kernels_cmd) {
            auto model = ssfi::CnnModel<float>::load(ker_ckpt);
            int layer = ssfi::parse_layer_id(ker_layer);
            ssfi::export_kernels(model, layer, ker_out);
            std::printf("kernels: %s\n", ker_out.c_str());
        } else if (*topo_cmd) {
            ssfi::SsfiArray a;
            std::ifstream probe(topo_ssfi, std::ios::binary);
            char magic[4] = {};
            probe.read(magic, 4);
            if (std::string(magic, 4) == "SSFD") {
                auto samples = ssfi::load_dataset(topo_ssfi);
                if (topo_index < 0 || topo_index >= static_cast<int>(samples.size()))
                    throw ssfi::argument_error("sample index out of range");
                a = samples[topo_index].image;
            } else {
                a = ssfi::load_ssfi(topo_ssfi);
            }
            int band = static_cast<int>(ssfi::band_index(topo_band));
            ssfi::TopomapOptions opts;
            ssfi::MontageLayout layout = ssfi::project_montage();
            if (topo_markers) {
                opts.electrode_markers = true;
                opts.layout = &layout;
            }
            ssfi::render_topomap_band(a, band, topo_out, opts);
            std::printf("topomap: %s\n", topo_out.c_str());
        } else if (*pipe_cmd) {
            ssfi::PipelineConfig cfg = ssfi::load_pipeline_config(pipe_config);
            if (pipe_seed >= 0) cfg.seed = static_cast<std::uint64_t>(pipe_seed);
            auto summary = ssfi::run_pipeline(cfg);
            for (const auto& s : summary)
                std::printf("%-7s %s\n", s.ran ? "ran" : "cached", s.name.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
