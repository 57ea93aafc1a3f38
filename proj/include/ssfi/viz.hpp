#pragma once

#include <cctype>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ssfi/error.hpp"
#include "ssfi/image.hpp"
#include "ssfi/model.hpp"
#include "ssfi/montage.hpp"
#include "ssfi/rng.hpp"

namespace ssfi {

// Layer naming used by the CLI and configs: CNV1..CNV5, FC1, FC2, OUT.
inline int parse_layer_id(std::string name) {
    for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (name.rfind("CNV", 0) == 0 || name.rfind("CONV", 0) == 0) {
        int k = name.back() - '1';
        if (k < 0 || k > 4) throw argument_error("conv layer index must be 1..5");
        return k;
    }
    if (name == "FC1") return CnnModel<float>::kLayerFc1;
    if (name == "FC2") return CnnModel<float>::kLayerFc2;
    if (name == "OUT" || name == "OUTPUT") return CnnModel<float>::kLayerLogits;
    throw argument_error("unknown layer name: " + name);
}

inline std::string layer_name(int layer) {
    if (layer >= 0 && layer < 5) return "CNV" + std::to_string(layer + 1);
    if (layer == CnnModel<float>::kLayerFc1) return "FC1";
    if (layer == CnnModel<float>::kLayerFc2) return "FC2";
    return "OUT";
}

struct AscentConfig {
    int layer = 0;            // model layer id (see parse_layer_id)
    int unit = 0;             // filter / unit index within the layer
    int steps = 200;
    double step_size = 0.1;
    double input_decay = 1e-4;  // l2 pull toward zero, scaled by the step
    bool per_channel = false;   // optimize each band separately, others zero
    std::uint64_t seed = 0;
    int max_halvings = 30;
};

struct PatternResult {
    SsfiArray pattern;                 // optimized input, normalized units
    std::vector<double> activations;   // length steps + 1, non-decreasing
    std::string target;                // e.g. "CNV1[7]" or "CNV1[7]/alpha"
    bool degenerate = false;           // zero gradient at the start
    int band = -1;                     // set in per-channel mode
};

namespace detail {

template <typename S>
Tensor<S> random_input(const ModelConfig& mc, Rng& rng, int only_band) {
    Tensor<S> x(1, mc.grid, mc.grid, mc.in_channels);
    for (long i = 0; i < mc.grid; ++i) {
        for (long j = 0; j < mc.grid; ++j) {
            for (long b = 0; b < mc.in_channels; ++b) {
                double u = rng.uniform();  // consume identically in both modes
                if (only_band < 0 || b == only_band) x.at(0, i, j, b) = static_cast<S>(u);
            }
        }
    }
    return x;
}

template <typename S>
SsfiArray to_ssfi(const Tensor<S>& x) {
    SsfiArray a = SsfiArray::zeros(static_cast<int>(x.h()), static_cast<int>(x.w()),
                                   static_cast<int>(x.c()));
    for (std::size_t i = 0; i < a.values.size(); ++i)
        a.values[i] = static_cast<float>(x.data[i]);
    return a;
}

// One ascent run over a fixed band mask (-1 = all bands free).
template <typename S>
PatternResult ascend(CnnModel<S>& model, const AscentConfig& cfg, Rng& rng, int only_band) {
    PatternResult res;
    res.band = only_band;
    res.target = layer_name(cfg.layer) + "[" + std::to_string(cfg.unit) + "]";
    if (only_band >= 0) res.target += "/" + std::string(kBands[only_band].name);

    Tensor<S> x = random_input<S>(model.config(), rng, only_band);
    auto [act, grad] = model.input_gradient(x, cfg.layer, cfg.unit);
    res.activations.push_back(act);

    double grad_norm = 0.0;
    for (S v : grad.data) grad_norm += static_cast<double>(v) * v;
    if (grad_norm == 0.0) {
        res.degenerate = true;
        res.activations.resize(cfg.steps + 1, act);
        res.pattern = to_ssfi(x);
        return res;
    }

    for (int step = 0; step < cfg.steps; ++step) {
        double s = cfg.step_size;
        bool accepted = false;
        for (int h = 0; h < cfg.max_halvings && !accepted; ++h, s *= 0.5) {
            Tensor<S> cand = x;
            for (std::size_t i = 0; i < cand.size(); ++i) {
                long band = static_cast<long>(i % cand.c());
                if (only_band >= 0 && band != only_band) continue;
                double step_dir = static_cast<double>(grad.data[i]) -
                                  cfg.input_decay * static_cast<double>(x.data[i]);
                cand.data[i] += static_cast<S>(s * step_dir);
            }
            auto [cand_act, cand_grad] = model.input_gradient(cand, cfg.layer, cfg.unit);
            if (cand_act >= act) {
                x = std::move(cand);
                act = cand_act;
                grad = std::move(cand_grad);
                accepted = true;
            }
        }
        // No acceptable step: keep the current point; the trace stays flat.
        res.activations.push_back(act);
    }
    res.pattern = to_ssfi(x);
    return res;
}

}  // namespace detail

// Gradient-ascent pattern generation against a trained model (inference
// mode). Backtracking halves the step until the target activation does not
// decrease, so the recorded trace is non-decreasing by construction. In
// per-channel mode each band is optimized on its own with the remaining
// bands frozen at zero, yielding one pattern per band.
template <typename S>
std::vector<PatternResult> activation_maximization(CnnModel<S>& model, const AscentConfig& cfg) {
    if (cfg.steps < 1) throw argument_error("ascent needs at least one step");
    if (cfg.unit < 0 || cfg.unit >= model.layer_units(cfg.layer))
        throw argument_error("target unit out of range for layer");

    std::vector<PatternResult> out;
    if (cfg.per_channel) {
        for (int band = 0; band < model.config().in_channels; ++band) {
            Rng rng(cfg.seed + static_cast<std::uint64_t>(band));
            out.push_back(detail::ascend(model, cfg, rng, band));
        }
    } else {
        Rng rng(cfg.seed);
        out.push_back(detail::ascend(model, cfg, rng, -1));
    }
    return out;
}

// Exact gradient of the target activation with respect to the input.
template <typename S>
std::pair<double, Tensor<S>> input_gradient(CnnModel<S>& model, const Tensor<S>& input, int layer,
                                            int unit) {
    return model.input_gradient(input, layer, unit);
}

// ---------------------------------------------------------------------------
// Rendering.
// ---------------------------------------------------------------------------

struct TopomapOptions {
    int upscale = 4;               // output pixels per grid cell
    bool electrode_markers = false;
    const MontageLayout* layout = nullptr;
};

// Min-max normalized diverging rendering of one grid; a constant grid comes
// out as the uniform mid color.
inline void render_topomap(std::span<const double> grid, int grid_size, const std::string& path,
                           const TopomapOptions& opts = {}) {
    if (grid.size() != static_cast<std::size_t>(grid_size) * grid_size)
        throw argument_error("grid buffer does not match grid size");
    if (opts.upscale < 1) throw argument_error("upscale must be >= 1");

    auto t = minmax_normalize(grid);
    Image img(grid_size * opts.upscale, grid_size * opts.upscale);
    for (int i = 0; i < grid_size; ++i) {
        for (int j = 0; j < grid_size; ++j) {
            Rgb color = diverging_color(t[static_cast<std::size_t>(i) * grid_size + j]);
            for (int dy = 0; dy < opts.upscale; ++dy) {
                for (int dx = 0; dx < opts.upscale; ++dx) {
                    img.at(i * opts.upscale + dy, j * opts.upscale + dx) = color;
                }
            }
        }
    }
    if (opts.electrode_markers && opts.layout != nullptr) {
        for (const auto& e : opts.layout->electrodes) {
            auto [ci, cj] = Interpolator::nearest_cell(e.x, e.y, grid_size);
            int py = ci * opts.upscale + opts.upscale / 2;
            int px = cj * opts.upscale + opts.upscale / 2;
            img.at(py, px) = {0, 0, 0};
        }
    }
    write_ppm(img, path);
}

inline void render_topomap_band(const SsfiArray& a, int band, const std::string& path,
                                const TopomapOptions& opts = {}) {
    if (band < 0 || band >= a.d3) throw argument_error("band index out of range");
    std::vector<double> grid(static_cast<std::size_t>(a.d1) * a.d2);
    for (int i = 0; i < a.d1; ++i) {
        for (int j = 0; j < a.d2; ++j)
            grid[static_cast<std::size_t>(i) * a.d2 + j] = a.at(i, j, band);
    }
    render_topomap(grid, a.d1, path, opts);
}

// Tiled kernel sheet for one conv layer: rows are filters, columns are the
// six band kernels, each 3x3 tile min-max normalized on its own.
template <typename S>
void export_kernels(const CnnModel<S>& model, int layer, const std::string& path,
                    int tile_px = 16, int gap_px = 2) {
    if (layer < 0 || layer >= CnnModel<S>::kBlocks)
        throw argument_error("kernel export targets conv layers only");
    const int co = model.block_out_channels(layer);
    const int ci = model.block_in_channels(layer);
    std::span<const S> k = model.kernels(layer);  // [3][3][ci][co]

    const int tile = 3 * tile_px;
    Image img(ci * tile + (ci + 1) * gap_px, co * tile + (co + 1) * gap_px);
    for (auto& px : img.pixels) px = {32, 32, 32};

    for (int f = 0; f < co; ++f) {
        for (int b = 0; b < ci; ++b) {
            std::array<double, 9> vals{};
            for (int u = 0; u < 3; ++u) {
                for (int v = 0; v < 3; ++v)
                    vals[u * 3 + v] =
                        static_cast<double>(k[((u * 3 + v) * ci + b) * co + f]);
            }
            auto t = minmax_normalize(vals);
            int oy = gap_px + f * (tile + gap_px);
            int ox = gap_px + b * (tile + gap_px);
            for (int u = 0; u < 3; ++u) {
                for (int v = 0; v < 3; ++v) {
                    Rgb color = gray_color(t[u * 3 + v]);
                    for (int dy = 0; dy < tile_px; ++dy) {
                        for (int dx = 0; dx < tile_px; ++dx)
                            img.at(oy + u * tile_px + dy, ox + v * tile_px + dx) = color;
                    }
                }
            }
        }
    }
    write_ppm(img, path);
}

}  // namespace ssfi
