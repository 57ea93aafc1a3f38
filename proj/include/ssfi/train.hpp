#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ssfi/adam.hpp"
#include "ssfi/error.hpp"
#include "ssfi/model.hpp"
#include "ssfi/ssfi.hpp"

namespace ssfi {

// ---------------------------------------------------------------------------
// Serial split: assignment is purely by experiment number, so window overlap
// can never leak across the train/test boundary.
// ---------------------------------------------------------------------------

struct SplitSpec {
    int train_lo = 1;
    int train_hi = 100;
    int test_lo = 101;
    int test_hi = 144;

    void validate() const {
        if (train_lo > train_hi || test_lo > test_hi || train_hi + 1 != test_lo)
            throw argument_error("split ranges must be disjoint and contiguous");
    }
};

template <typename Item>
std::pair<std::vector<Item>, std::vector<Item>> serial_split(std::span<const Item> items,
                                                             const SplitSpec& spec = {}) {
    spec.validate();
    std::pair<std::vector<Item>, std::vector<Item>> out;
    for (const auto& it : items) {
        if (it.task_index < spec.train_lo || it.task_index > spec.test_hi)
            throw argument_error("task index " + std::to_string(it.task_index) +
                                 " outside split range");
        if (it.task_index <= spec.train_hi)
            out.first.push_back(it);
        else
            out.second.push_back(it);
    }
    if (!items.empty() && out.second.empty())
        std::fprintf(stderr, "warning: serial split produced an empty test set\n");
    return out;
}

// Majority-class predictor; ties break by label order (L < W < R).
inline double naive_baseline(std::span<const TaskLabel> train_labels,
                             std::span<const TaskLabel> test_labels) {
    if (train_labels.empty()) throw argument_error("naive baseline needs train labels");
    std::array<long, 3> counts{0, 0, 0};
    for (TaskLabel l : train_labels) counts[static_cast<int>(l)] += 1;
    int majority = 0;
    for (int k = 1; k < 3; ++k) {
        if (counts[k] > counts[majority]) majority = k;
    }
    if (test_labels.empty()) return 0.0;
    long hits = 0;
    for (TaskLabel l : test_labels) {
        if (static_cast<int>(l) == majority) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test_labels.size());
}

inline TaskLabel majority_label(const std::array<long, 3>& counts) {
    int majority = 0;
    for (int k = 1; k < 3; ++k) {
        if (counts[k] > counts[majority]) majority = k;
    }
    return static_cast<TaskLabel>(majority);
}

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------

struct TrainConfig {
    double lr = 1e-3;
    int batch_size = 32;
    int max_epochs = 50;
    int patience = 5;        // early stop after this many epochs without
    double min_delta = 1e-5; // at least min_delta improvement in mean loss
    std::uint64_t seed = 0;
    double l2_lambda = 0.01;
    double dropout_rate = 0.3;
    int grid = 64;

    void validate() const {
        if (lr < 0 || batch_size < 1 || max_epochs < 1 || patience < 1 || grid < 16)
            throw argument_error("train config values must be positive");
    }
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

inline void save_history(const TrainHistory& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << "epoch,loss,train_acc\n";
    char buf[80];
    for (const auto& e : h) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.mean_loss, e.train_accuracy);
        out << buf;
    }
}

namespace detail {

template <typename S>
Tensor<S> batch_tensor(std::span<const SsfiSample> samples, std::span<const std::size_t> idx,
                       const Normalizer& nz) {
    const auto& first = samples[idx[0]].image;
    Tensor<S> t(static_cast<long>(idx.size()), first.d1, first.d2, first.d3);
    std::size_t per = first.values.size();
    for (std::size_t b = 0; b < idx.size(); ++b) {
        SsfiArray norm = apply_normalizer(nz, samples[idx[b]].image);
        for (std::size_t i = 0; i < per; ++i)
            t.data[b * per + i] = static_cast<S>(norm.values[i]);
    }
    return t;
}

}  // namespace detail

struct TrainResult {
    CnnModel<float> model;
    TrainHistory history;
};

// Subject-specific training: z-score statistics are fitted on the training
// set alone, minibatch Adam on softmax cross-entropy plus the hidden-layer
// l2 penalty, early stop on a training-loss plateau. Single-threaded and
// bit-reproducible for a fixed seed.
inline TrainResult train_model(std::span<const SsfiSample> train, const TrainConfig& cfg,
                               const std::string& provenance = "train") {
    cfg.validate();
    if (train.size() < 2)
        throw argument_error("training needs at least one batch of two samples");
    const auto& first = train[0].image;
    if (first.d1 != cfg.grid || first.d2 != cfg.grid)
        throw argument_error("training arrays do not match configured grid size");

    ModelConfig mc;
    mc.grid = cfg.grid;
    mc.dropout_rate = cfg.dropout_rate;
    mc.l2_lambda = cfg.l2_lambda;
    mc.seed = cfg.seed;

    TrainResult result{CnnModel<float>(mc), {}};
    CnnModel<float>& model = result.model;
    model.normalizer() = fit_normalizer(train, provenance);
    for (const auto& s : train) model.class_counts()[static_cast<int>(s.label)] += 1;

    AdamState<float> adam(model.parameter_count(), cfg.lr);
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);  // decoupled from init stream

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    double best_loss = 1e300;
    int stale_epochs = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        long correct = 0;
        long seen = 0;
        long batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> idx(order.data() + start, stop - start);
            if (idx.size() < 2) continue;  // batchnorm needs >= 2 rows

            Tensor<float> batch = detail::batch_tensor<float>(train, idx, model.normalizer());
            std::vector<int> labels(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i)
                labels[i] = static_cast<int>(train[idx[i]].label);

            typename CnnModel<float>::Cache cache;
            double batch_loss;
            SoftmaxCeResult<float> ce;
            try {
                Tensor<float> logits = model.forward(batch, Mode::train, &rng, cache);
                ce = softmax_crossentropy(logits, labels);
                batch_loss = ce.loss + model.l2_penalty();
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batches) + ": " + e.what());
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batches));
            loss_sum += batch_loss;
            ++batches;
            seen += static_cast<long>(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const float* row = ce.probs.data.data() + i * 3;
                int arg = 0;
                if (row[1] > row[arg]) arg = 1;
                if (row[2] > row[arg]) arg = 2;
                if (arg == labels[i]) ++correct;
            }

            model.backward(cache, ce.dlogits);
            adam_step(model.parameters(), std::span<const float>(model.gradients().data(),
                                                                 model.gradients().size()),
                      adam);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = batches > 0 ? loss_sum / batches : 0.0;
        stats.train_accuracy = seen > 0 ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
        result.history.push_back(stats);

        if (cfg.lr == 0.0) continue;  // nothing can improve; run the epochs out
        if (stats.mean_loss < best_loss - cfg.min_delta) {
            best_loss = stats.mean_loss;
            stale_epochs = 0;
        } else if (++stale_epochs >= cfg.patience) {
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation (inference mode: dropout off, running batch-norm statistics).
// ---------------------------------------------------------------------------

struct EvalReport {
    double accuracy = 0.0;
    std::array<std::array<long, 3>, 3> confusion{};  // [true][predicted]
    double naive_accuracy = 0.0;
    double chance = 1.0 / 3.0;
    std::array<long, 3> class_counts{0, 0, 0};  // of the evaluated set
    long n_samples = 0;

    bool operator==(const EvalReport&) const = default;
};

inline EvalReport evaluate(CnnModel<float>& model, std::span<const SsfiSample> test,
                           int batch_size = 64) {
    if (test.empty()) throw argument_error("evaluation set is empty");

    EvalReport report;
    report.n_samples = static_cast<long>(test.size());
    const TaskLabel naive = majority_label(model.class_counts());

    std::vector<std::size_t> idx(test.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    long correct = 0, naive_correct = 0;
    for (std::size_t start = 0; start < test.size(); start += batch_size) {
        std::size_t stop = std::min(test.size(), start + static_cast<std::size_t>(batch_size));
        std::span<const std::size_t> batch_idx(idx.data() + start, stop - start);
        Tensor<float> batch = detail::batch_tensor<float>(test, batch_idx, model.normalizer());
        Tensor<float> logits = model.infer(batch);
        for (std::size_t i = 0; i < batch_idx.size(); ++i) {
            const float* row = logits.data.data() + i * 3;
            int arg = 0;
            if (row[1] > row[arg]) arg = 1;
            if (row[2] > row[arg]) arg = 2;
            int truth = static_cast<int>(test[batch_idx[i]].label);
            report.confusion[truth][arg] += 1;
            report.class_counts[truth] += 1;
            if (arg == truth) ++correct;
            if (static_cast<TaskLabel>(truth) == naive) ++naive_correct;
        }
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    report.naive_accuracy = static_cast<double>(naive_correct) / static_cast<double>(test.size());
    return report;
}

}  // namespace ssfi
