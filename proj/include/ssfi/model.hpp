#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ssfi/adam.hpp"
#include "ssfi/binio.hpp"
#include "ssfi/error.hpp"
#include "ssfi/layers.hpp"
#include "ssfi/rng.hpp"
#include "ssfi/ssfi.hpp"
#include "ssfi/tensor.hpp"

namespace ssfi {

enum class Mode { train, infer };

struct ModelConfig {
    int grid = 64;          // SSFI side length; must be a multiple of 16
    int in_channels = 6;    // frequency bands
    int conv1_filters = 32;
    int conv_filters = 16;  // CNV2..CNV5
    int fc1_units = 64;
    int fc2_units = 32;
    int num_classes = 3;
    double dropout_rate = 0.3;
    double l2_lambda = 0.01;
    double bn_momentum = 0.9;
    double bn_epsilon = 1e-5;
    std::uint64_t seed = 0;

    void validate() const {
        if (grid < 16 || grid % 16 != 0)
            throw argument_error("grid size must be a positive multiple of 16");
        if (conv1_filters < 1 || conv_filters < 1 || fc1_units < 1 || fc2_units < 1)
            throw argument_error("layer widths must be positive");
        if (num_classes < 2) throw argument_error("need at least 2 classes");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw argument_error("dropout rate must be in [0, 1)");
    }

    // Spatial size after the four pooled blocks; CNV5 keeps it.
    int final_spatial() const { return grid / 16; }
    long flatten_len() const {
        return static_cast<long>(final_spatial()) * final_spatial() * conv_filters;
    }
};

// Five 3x3 conv blocks (conv -> ReLU -> pool -> batchnorm -> dropout; the
// fifth block is conv -> ReLU only), then FC1 -> FC2 -> 3-way softmax head.
// All trainable parameters live in one flat buffer in declaration order:
// per block kernels+bias (+gamma+beta for pooled blocks), then the three
// dense layers' weights+bias. Checkpoints serialize that buffer directly.
template <typename S>
class CnnModel {
public:
    static constexpr int kBlocks = 5;

    struct Range {
        std::size_t offset = 0;
        std::size_t count = 0;
        bool l2 = false;
    };

    explicit CnnModel(const ModelConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        allocate();
        init_params();
    }

    const ModelConfig& config() const { return cfg_; }
    std::size_t parameter_count() const { return params_.size(); }
    std::span<S> parameters() { return params_; }
    std::span<const S> parameters() const { return params_; }
    std::span<S> gradients() { return grads_; }

    Normalizer& normalizer() { return normalizer_; }
    const Normalizer& normalizer() const { return normalizer_; }
    std::array<long, 3>& class_counts() { return class_counts_; }
    const std::array<long, 3>& class_counts() const { return class_counts_; }

    int block_in_channels(int b) const { return b == 0 ? cfg_.in_channels
                                              : b == 1 ? cfg_.conv1_filters
                                                       : cfg_.conv_filters; }
    int block_out_channels(int b) const { return b == 0 ? cfg_.conv1_filters : cfg_.conv_filters; }
    bool block_pooled(int b) const { return b < 4; }

    std::span<const S> kernels(int b) const { return view_c(conv_k_[b]); }
    std::span<S> kernels(int b) { return view(conv_k_[b]); }

    // ---- forward / backward -------------------------------------------------

    struct BlockCache {
        Tensor<S> input;
        Tensor<S> conv_pre;
        std::array<long, 4> prepool_shape{};
        std::vector<std::size_t> pool_argmax;
        BnCache<S> bn;
        std::vector<S> dropout_mask;
    };

    struct Cache {
        Mode mode = Mode::infer;
        std::array<BlockCache, kBlocks> blocks;
        Tensor<S> flat;
        Tensor<S> fc1_pre, fc1_out, fc2_pre, fc2_out;
        Tensor<S> logits;
    };

    Tensor<S> forward(const Tensor<S>& input, Mode mode, Rng* rng, Cache& cache) {
        if (input.h() != cfg_.grid || input.w() != cfg_.grid || input.c() != cfg_.in_channels)
            throw argument_error("model input shape mismatch");
        if (mode == Mode::train && cfg_.dropout_rate > 0.0 && rng == nullptr)
            throw argument_error("train mode needs an rng for dropout");

        cache.mode = mode;
        Tensor<S> x = input;
        for (int b = 0; b < kBlocks; ++b) x = block_forward(b, x, mode, rng, cache.blocks[b]);
        cache.flat = x.reshaped(x.n(), 1, 1, cfg_.flatten_len());

        cache.fc1_pre = dense(cache.flat, view_c(fc1_w_), view_c(fc1_b_), cfg_.fc1_units);
        assert_finite(cache.fc1_pre, "FC1");
        cache.fc1_out = relu(cache.fc1_pre);
        cache.fc2_pre = dense(cache.fc1_out, view_c(fc2_w_), view_c(fc2_b_), cfg_.fc2_units);
        assert_finite(cache.fc2_pre, "FC2");
        cache.fc2_out = relu(cache.fc2_pre);
        cache.logits = dense(cache.fc2_out, view_c(out_w_), view_c(out_b_), cfg_.num_classes);
        assert_finite(cache.logits, "output layer");
        return cache.logits;
    }

    Tensor<S> infer(const Tensor<S>& input) {
        Cache cache;
        return forward(input, Mode::infer, nullptr, cache);
    }

    // Backpropagates to parameters (into gradients()) and to the input.
    // Hidden-layer weight decay (2*lambda*W) is folded in here.
    Tensor<S> backward(const Cache& cache, const Tensor<S>& dlogits, bool add_l2 = true) {
        std::fill(grads_.begin(), grads_.end(), S(0));

        auto g3 = dense_backward(cache.fc2_out, view_c(out_w_), dlogits);
        add_into(out_w_, g3.dweights);
        add_into(out_b_, g3.dbias);
        auto d2 = relu_backward(cache.fc2_pre, g3.dinput);
        auto g2 = dense_backward(cache.fc1_out, view_c(fc2_w_), d2);
        add_into(fc2_w_, g2.dweights);
        add_into(fc2_b_, g2.dbias);
        auto d1 = relu_backward(cache.fc1_pre, g2.dinput);
        auto g1 = dense_backward(cache.flat, view_c(fc1_w_), d1);
        add_into(fc1_w_, g1.dweights);
        add_into(fc1_b_, g1.dbias);

        const auto& last = cache.blocks[kBlocks - 1].conv_pre;
        Tensor<S> d = g1.dinput.reshaped(last.n(), last.h(), last.w(), last.c());
        for (int b = kBlocks - 1; b >= 0; --b) d = block_backward(b, cache.blocks[b], d);

        if (add_l2 && cfg_.l2_lambda > 0.0) {
            for (const Range& r : l2_ranges()) {
                for (std::size_t i = 0; i < r.count; ++i)
                    grads_[r.offset + i] +=
                        static_cast<S>(2.0 * cfg_.l2_lambda) * params_[r.offset + i];
            }
        }
        return d;
    }

    // lambda * sum of squared hidden conv/FC weights (biases, batchnorm and
    // the output layer carry no penalty).
    double l2_penalty() const {
        double acc = 0.0;
        for (const Range& r : l2_ranges()) {
            for (std::size_t i = 0; i < r.count; ++i) {
                double w = static_cast<double>(params_[r.offset + i]);
                acc += w * w;
            }
        }
        return cfg_.l2_lambda * acc;
    }

    // ---- activation targeting (deep-representation machinery) ---------------

    // layer ids: 0..4 conv blocks, 5 = FC1, 6 = FC2, 7 = output logits.
    static constexpr int kLayerFc1 = 5, kLayerFc2 = 6, kLayerLogits = 7;

    int layer_units(int layer) const {
        if (layer >= 0 && layer < kBlocks) return block_out_channels(layer);
        if (layer == kLayerFc1) return cfg_.fc1_units;
        if (layer == kLayerFc2) return cfg_.fc2_units;
        if (layer == kLayerLogits) return cfg_.num_classes;
        throw argument_error("unknown layer id");
    }

    // Activation of one unit in inference mode and its exact gradient with
    // respect to the input. Conv units report the spatial mean of their
    // post-ReLU map; FC units their post-ReLU value; the output layer its
    // logit. Scratches the parameter gradient buffer.
    std::pair<double, Tensor<S>> input_gradient(const Tensor<S>& input, int layer, int unit) {
        if (unit < 0 || unit >= layer_units(layer))
            throw argument_error("target unit out of range for layer");
        if (input.n() != 1) throw argument_error("input_gradient expects a single input");
        Cache cache;
        forward(input, Mode::infer, nullptr, cache);
        std::fill(grads_.begin(), grads_.end(), S(0));

        double activation = 0.0;
        Tensor<S> d;
        int start_block = kBlocks - 1;

        if (layer < kBlocks) {
            const Tensor<S>& pre = cache.blocks[layer].conv_pre;
            const double scale = 1.0 / (static_cast<double>(pre.h()) * pre.w());
            d = Tensor<S>(pre.n(), pre.h(), pre.w(), pre.c());
            for (long n = 0; n < pre.n(); ++n) {
                for (long y = 0; y < pre.h(); ++y) {
                    for (long x = 0; x < pre.w(); ++x) {
                        S v = pre.at(n, y, x, unit);
                        if (v > S(0)) {
                            activation += static_cast<double>(v) * scale;
                            d.at(n, y, x, unit) = static_cast<S>(scale);
                        }
                    }
                }
            }
            auto g = conv2d_backward(cache.blocks[layer].input, view_c(conv_k_[layer]), d);
            d = std::move(g.dinput);
            start_block = layer - 1;
        } else if (layer == kLayerFc1 || layer == kLayerFc2) {
            const Tensor<S>& pre = layer == kLayerFc1 ? cache.fc1_pre : cache.fc2_pre;
            S v = pre.data[unit];
            activation = v > S(0) ? static_cast<double>(v) : 0.0;
            Tensor<S> dpre(pre.n(), 1, 1, pre.c());
            if (v > S(0)) dpre.data[unit] = S(1);
            if (layer == kLayerFc2) {
                auto g2 = dense_backward(cache.fc1_out, view_c(fc2_w_), dpre);
                dpre = relu_backward(cache.fc1_pre, g2.dinput);
            }
            auto g1 = dense_backward(cache.flat, view_c(fc1_w_), dpre);
            const auto& last = cache.blocks[kBlocks - 1].conv_pre;
            d = g1.dinput.reshaped(last.n(), last.h(), last.w(), last.c());
        } else {
            activation = static_cast<double>(cache.logits.data[unit]);
            Tensor<S> dlogits(1, 1, 1, cfg_.num_classes);
            dlogits.data[unit] = S(1);
            auto g3 = dense_backward(cache.fc2_out, view_c(out_w_), dlogits);
            auto d2 = relu_backward(cache.fc2_pre, g3.dinput);
            auto g2 = dense_backward(cache.fc1_out, view_c(fc2_w_), d2);
            auto d1 = relu_backward(cache.fc1_pre, g2.dinput);
            auto g1 = dense_backward(cache.flat, view_c(fc1_w_), d1);
            const auto& last = cache.blocks[kBlocks - 1].conv_pre;
            d = g1.dinput.reshaped(last.n(), last.h(), last.w(), last.c());
        }

        for (int b = start_block; b >= 0; --b) d = block_backward(b, cache.blocks[b], d);
        return {activation, std::move(d)};
    }

    // ---- checkpoint I/O ------------------------------------------------------

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot write " + path);
        out.write("SSFC", 4);
        binio::write_raw<std::uint32_t>(out, 1);
        binio::write_raw<std::int32_t>(out, cfg_.grid);
        binio::write_raw<std::int32_t>(out, cfg_.in_channels);
        binio::write_raw<std::int32_t>(out, cfg_.conv1_filters);
        binio::write_raw<std::int32_t>(out, cfg_.conv_filters);
        binio::write_raw<std::int32_t>(out, cfg_.fc1_units);
        binio::write_raw<std::int32_t>(out, cfg_.fc2_units);
        binio::write_raw<std::int32_t>(out, cfg_.num_classes);
        binio::write_raw<double>(out, cfg_.dropout_rate);
        binio::write_raw<double>(out, cfg_.l2_lambda);
        binio::write_raw<double>(out, cfg_.bn_momentum);
        binio::write_raw<double>(out, cfg_.bn_epsilon);
        binio::write_raw<std::uint64_t>(out, cfg_.seed);

        binio::write_raw<std::uint8_t>(out, normalizer_.fitted ? 1 : 0);
        for (double v : normalizer_.mean) binio::write_raw<double>(out, v);
        for (double v : normalizer_.stddev) binio::write_raw<double>(out, v);
        binio::write_string(out, normalizer_.provenance);
        for (long v : class_counts_) binio::write_raw<std::int64_t>(out, v);

        binio::write_raw<std::uint64_t>(out, params_.size());
        write_scalars(out, params_);
        for (int b = 0; b < 4; ++b) {
            write_scalars(out, running_mean_[b]);
            write_scalars(out, running_var_[b]);
        }
        if (!out) throw io_error("write failed: " + path);
    }

    static CnnModel load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot open " + path);
        binio::expect_magic(in, "SSFC", "model checkpoint");
        auto version = binio::read_raw<std::uint32_t>(in);
        if (version != 1) throw parse_error("unsupported checkpoint version");

        ModelConfig cfg;
        cfg.grid = binio::read_raw<std::int32_t>(in);
        cfg.in_channels = binio::read_raw<std::int32_t>(in);
        cfg.conv1_filters = binio::read_raw<std::int32_t>(in);
        cfg.conv_filters = binio::read_raw<std::int32_t>(in);
        cfg.fc1_units = binio::read_raw<std::int32_t>(in);
        cfg.fc2_units = binio::read_raw<std::int32_t>(in);
        cfg.num_classes = binio::read_raw<std::int32_t>(in);
        cfg.dropout_rate = binio::read_raw<double>(in);
        cfg.l2_lambda = binio::read_raw<double>(in);
        cfg.bn_momentum = binio::read_raw<double>(in);
        cfg.bn_epsilon = binio::read_raw<double>(in);
        cfg.seed = binio::read_raw<std::uint64_t>(in);

        CnnModel model(cfg);
        model.normalizer_.fitted = binio::read_raw<std::uint8_t>(in) != 0;
        for (double& v : model.normalizer_.mean) v = binio::read_raw<double>(in);
        for (double& v : model.normalizer_.stddev) v = binio::read_raw<double>(in);
        model.normalizer_.provenance = binio::read_string(in);
        for (long& v : model.class_counts_) v = binio::read_raw<std::int64_t>(in);

        auto n = binio::read_raw<std::uint64_t>(in);
        if (n != model.params_.size())
            throw parse_error("checkpoint parameter count does not match architecture");
        read_scalars(in, model.params_);
        for (int b = 0; b < 4; ++b) {
            read_scalars(in, model.running_mean_[b]);
            read_scalars(in, model.running_var_[b]);
        }
        return model;
    }

private:
    Tensor<S> block_forward(int b, const Tensor<S>& input, Mode mode, Rng* rng,
                            BlockCache& cache) {
        cache.input = input;
        cache.conv_pre = conv2d(input, view_c(conv_k_[b]), view_c(conv_b_[b]),
                                block_out_channels(b));
        assert_finite(cache.conv_pre, "conv");
        Tensor<S> x = relu(cache.conv_pre);
        if (!block_pooled(b)) return x;

        cache.prepool_shape = x.shape;
        auto pooled = maxpool2x2(x);
        cache.pool_argmax = std::move(pooled.argmax);
        x = std::move(pooled.out);

        if (mode == Mode::train) {
            x = batchnorm_train(x, view_c(bn_gamma_[b]), view_c(bn_beta_[b]),
                                std::span<S>(running_mean_[b]), std::span<S>(running_var_[b]),
                                cfg_.bn_momentum, cfg_.bn_epsilon, cache.bn);
        } else {
            x = batchnorm_infer(x, view_c(bn_gamma_[b]), view_c(bn_beta_[b]),
                                std::span<const S>(running_mean_[b]),
                                std::span<const S>(running_var_[b]), cfg_.bn_epsilon, &cache.bn);
        }
        assert_finite(x, "batchnorm");

        if (mode == Mode::train && cfg_.dropout_rate > 0.0) {
            auto dropped = dropout_train(x, cfg_.dropout_rate, *rng);
            cache.dropout_mask = std::move(dropped.mask);
            x = std::move(dropped.out);
        } else {
            cache.dropout_mask.clear();
        }
        return x;
    }

    Tensor<S> block_backward(int b, const BlockCache& cache, const Tensor<S>& dout) {
        Tensor<S> d = dout;
        if (block_pooled(b)) {
            if (!cache.dropout_mask.empty()) {
                for (std::size_t i = 0; i < d.size(); ++i) d.data[i] *= cache.dropout_mask[i];
            }
            auto bn = batchnorm_backward(cache.bn, view_c(bn_gamma_[b]), d);
            add_into(bn_gamma_[b], bn.dgamma);
            add_into(bn_beta_[b], bn.dbeta);
            d = maxpool2x2_backward(bn.dinput, cache.pool_argmax, cache.prepool_shape);
        }
        d = relu_backward(cache.conv_pre, d);
        auto g = conv2d_backward(cache.input, view_c(conv_k_[b]), d);
        add_into(conv_k_[b], g.dkernels);
        add_into(conv_b_[b], g.dbias);
        return std::move(g.dinput);
    }

    void allocate() {
        auto add_range = [&](std::size_t count, bool l2) {
            Range r{params_.size(), count, l2};
            params_.resize(params_.size() + count, S(0));
            return r;
        };
        for (int b = 0; b < kBlocks; ++b) {
            std::size_t ci = block_in_channels(b), co = block_out_channels(b);
            conv_k_[b] = add_range(9 * ci * co, true);
            conv_b_[b] = add_range(co, false);
            if (block_pooled(b)) {
                bn_gamma_[b] = add_range(co, false);
                bn_beta_[b] = add_range(co, false);
                running_mean_[b].assign(co, S(0));
                running_var_[b].assign(co, S(1));
            }
        }
        const long flat = cfg_.flatten_len();
        fc1_w_ = add_range(static_cast<std::size_t>(flat) * cfg_.fc1_units, true);
        fc1_b_ = add_range(cfg_.fc1_units, false);
        fc2_w_ = add_range(static_cast<std::size_t>(cfg_.fc1_units) * cfg_.fc2_units, true);
        fc2_b_ = add_range(cfg_.fc2_units, false);
        out_w_ = add_range(static_cast<std::size_t>(cfg_.fc2_units) * cfg_.num_classes, false);
        out_b_ = add_range(cfg_.num_classes, false);
        grads_.assign(params_.size(), S(0));
    }

    void init_params() {
        Rng rng(cfg_.seed);
        for (int b = 0; b < kBlocks; ++b) {
            double std = std::sqrt(2.0 / (9.0 * block_in_channels(b)));
            for (std::size_t i = 0; i < conv_k_[b].count; ++i)
                params_[conv_k_[b].offset + i] = static_cast<S>(rng.normal(0.0, std));
            if (block_pooled(b)) {
                for (std::size_t i = 0; i < bn_gamma_[b].count; ++i)
                    params_[bn_gamma_[b].offset + i] = S(1);
            }
        }
        auto init_dense = [&](const Range& r, long fan_in) {
            double std = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (std::size_t i = 0; i < r.count; ++i)
                params_[r.offset + i] = static_cast<S>(rng.normal(0.0, std));
        };
        init_dense(fc1_w_, cfg_.flatten_len());
        init_dense(fc2_w_, cfg_.fc1_units);
        init_dense(out_w_, cfg_.fc2_units);
    }

    std::vector<Range> l2_ranges() const {
        std::vector<Range> out;
        for (int b = 0; b < kBlocks; ++b) out.push_back(conv_k_[b]);
        out.push_back(fc1_w_);
        out.push_back(fc2_w_);
        return out;
    }

    std::span<S> view(const Range& r) { return {params_.data() + r.offset, r.count}; }
    std::span<const S> view_c(const Range& r) const { return {params_.data() + r.offset, r.count}; }

    template <typename V>
    void add_into(const Range& r, const V& values) {
        for (std::size_t i = 0; i < r.count; ++i) grads_[r.offset + i] += values[i];
    }

    static void write_scalars(std::ostream& out, const std::vector<S>& v) {
        for (S x : v) binio::write_raw<float>(out, static_cast<float>(x));
    }
    static void read_scalars(std::istream& in, std::vector<S>& v) {
        for (S& x : v) x = static_cast<S>(binio::read_raw<float>(in));
    }

    ModelConfig cfg_;
    std::vector<S> params_;
    std::vector<S> grads_;
    std::array<Range, kBlocks> conv_k_{}, conv_b_{};
    std::array<Range, 4> bn_gamma_{}, bn_beta_{};
    Range fc1_w_, fc1_b_, fc2_w_, fc2_b_, out_w_, out_b_;
    std::array<std::vector<S>, 4> running_mean_, running_var_;
    Normalizer normalizer_;
    std::array<long, 3> class_counts_{0, 0, 0};
};

}  // namespace ssfi
