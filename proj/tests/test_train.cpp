#include <catch2/catch.hpp>

#include <cmath>

#include "ssfi/train.hpp"
#include "support/models.hpp"
#include "support/oracles.hpp"
#include "support/tmp.hpp"

using namespace ssfi;

namespace {

struct TaskItem {
    int task_index;
};

}  // namespace

TEST_CASE("serial split assigns tasks 99,100 to train and 101 to test") {
    std::vector<TaskItem> items{{99}, {100}, {101}};
    auto [train, test] = serial_split(std::span<const TaskItem>(items), {});
    REQUIRE(train.size() == 2);
    REQUIRE(test.size() == 1);
    CHECK(train[0].task_index == 99);
    CHECK(train[1].task_index == 100);
    CHECK(test[0].task_index == 101);
}

TEST_CASE("empty input splits into two empty sets") {
    std::vector<TaskItem> items;
    auto [train, test] = serial_split(std::span<const TaskItem>(items), {});
    CHECK(train.empty());
    CHECK(test.empty());
}

TEST_CASE("a single task leaves the test set empty") {
    std::vector<TaskItem> items{{50}, {50}, {50}};
    auto [train, test] = serial_split(std::span<const TaskItem>(items), {});
    CHECK(train.size() == 3);
    CHECK(test.empty());
}

TEST_CASE("task indices outside the split range are rejected") {
    std::vector<TaskItem> bad{{0}};
    REQUIRE_THROWS_AS(serial_split(std::span<const TaskItem>(bad), {}), argument_error);
    std::vector<TaskItem> bad2{{145}};
    REQUIRE_THROWS_AS(serial_split(std::span<const TaskItem>(bad2), {}), argument_error);
}

TEST_CASE("split spec must be contiguous and disjoint") {
    SplitSpec s;
    s.train_hi = 90;
    s.test_lo = 95;
    REQUIRE_THROWS_AS(s.validate(), argument_error);
}

TEST_CASE("naive baseline predicts the training majority") {
    std::vector<TaskLabel> train(10, TaskLabel::Writing);
    train[0] = TaskLabel::Listening;
    std::vector<TaskLabel> test;
    for (int i = 0; i < 6; ++i) test.push_back(TaskLabel::Writing);
    for (int i = 0; i < 4; ++i) test.push_back(TaskLabel::Resting);
    REQUIRE(naive_baseline(train, test) == Approx(0.6));
}

TEST_CASE("exact ties fall back to label order, listening first") {
    std::vector<TaskLabel> train{TaskLabel::Listening, TaskLabel::Writing, TaskLabel::Resting};
    std::vector<TaskLabel> test{TaskLabel::Listening};
    REQUIRE(naive_baseline(train, test) == 1.0);
    std::array<long, 3> counts{5, 5, 5};
    REQUIRE(majority_label(counts) == TaskLabel::Listening);
}

TEST_CASE("an empty train set cannot seed the baseline") {
    std::vector<TaskLabel> train, test{TaskLabel::Writing};
    REQUIRE_THROWS_AS(naive_baseline(train, test), argument_error);
}

TEST_CASE("writing-heavy data makes the baseline a constant writing predictor") {
    // mirrors the dominant-writing regime: W segments outnumber L and R
    SyntheticSpec spec = synth::separable_spec(6, 11);
    auto samples = testutil::featurized(spec, 16);
    std::array<long, 3> counts{0, 0, 0};
    for (const auto& s : samples) counts[static_cast<int>(s.label)] += 1;
    REQUIRE(counts[1] > counts[0]);
    REQUIRE(counts[1] > counts[2]);
    REQUIRE(majority_label(counts) == TaskLabel::Writing);
}

TEST_CASE("zero learning rate leaves the parameters at initialization") {
    SyntheticSpec spec = synth::separable_spec(4, 21);
    auto samples = testutil::featurized(spec, 16);
    TrainConfig tc;
    tc.grid = 16;
    tc.max_epochs = 2;
    tc.lr = 0.0;
    tc.seed = 5;
    auto result = train_model(samples, tc);

    ModelConfig mc;
    mc.grid = 16;
    mc.dropout_rate = tc.dropout_rate;
    mc.l2_lambda = tc.l2_lambda;
    mc.seed = tc.seed;
    CnnModel<float> fresh(mc);
    REQUIRE(std::equal(result.model.parameters().begin(), result.model.parameters().end(),
                       fresh.parameters().begin()));
}

TEST_CASE("training twice with one seed gives bit-identical checkpoints") {
    SyntheticSpec spec = synth::separable_spec(6, 33);
    auto samples = testutil::featurized(spec, 16);
    TrainConfig tc;
    tc.grid = 16;
    tc.max_epochs = 3;
    tc.seed = 7;

    testutil::TempDir tmp("det");
    train_model(samples, tc).model.save(tmp.file("a.ckpt"));
    train_model(samples, tc).model.save(tmp.file("b.ckpt"));
    REQUIRE(testutil::read_bytes(tmp.file("a.ckpt")) == testutil::read_bytes(tmp.file("b.ckpt")));
}

TEST_CASE("training fits a separable grid-32 set within 20 epochs") {
    testutil::TinyRun run = testutil::tiny_run(36, 32, 20, 1234, 25);

    // the features must be separable before the network is blamed
    SyntheticSpec spec = synth::separable_spec(36, 1234);
    EegRecording rec = apply_filter(design_highpass(5, 1.0, 128.0), synth_recording(spec));
    std::vector<BandPowerVector> feats;
    for (auto& seg : segment_recording(rec)) feats.push_back(feature_vector(seg));
    oracles::LinearProbe probe;
    probe.fit(feats, 150, 0.5);
    REQUIRE(probe.accuracy(feats) >= 0.95);

    REQUIRE(run.result.history.size() <= 20);
    REQUIRE(run.result.history.back().train_accuracy >= 0.95);
}

TEST_CASE("history records one row per epoch") {
    SyntheticSpec spec = synth::separable_spec(4, 3);
    auto samples = testutil::featurized(spec, 16);
    TrainConfig tc;
    tc.grid = 16;
    tc.max_epochs = 3;
    auto result = train_model(samples, tc);
    REQUIRE(result.history.size() == 3);
    for (int e = 0; e < 3; ++e) REQUIRE(result.history[e].epoch == e + 1);

    testutil::TempDir tmp("hist");
    save_history(result.history, tmp.file("h.csv"));
    std::string text = testutil::read_bytes(tmp.file("h.csv"));
    CHECK(text.rfind("epoch,loss,train_acc\n", 0) == 0);
}

TEST_CASE("normalizer provenance marks the training set") {
    SyntheticSpec spec = synth::separable_spec(4, 13);
    auto samples = testutil::featurized(spec, 16);
    TrainConfig tc;
    tc.grid = 16;
    tc.max_epochs = 1;
    auto result = train_model(samples, tc, "train:subject3");
    CHECK(result.model.normalizer().fitted);
    CHECK(result.model.normalizer().provenance == "train:subject3");
}

TEST_CASE("labels independent of the inputs score near chance") {
    // binomial concentration: accuracy within 1/3 +- 0.05 at N = 2000
    Rng rng(99);
    Interpolator interp(project_montage());
    std::vector<SsfiSample> eval_set;
    for (int i = 0; i < 2000; ++i) {
        BandPowerVector f;
        for (auto& v : f.values) v = rng.uniform(0.0, 10.0);
        eval_set.push_back({build_ssfi(f, interp, 16), static_cast<TaskLabel>(rng.index(3)),
                            1 + static_cast<int>(rng.index(144)), 1});
    }
    // any fixed model will do; labels carry no signal
    SyntheticSpec spec = synth::separable_spec(4, 5);
    auto train_samples = testutil::featurized(spec, 16);
    TrainConfig tc;
    tc.grid = 16;
    tc.max_epochs = 2;
    auto result = train_model(train_samples, tc);

    EvalReport rep = evaluate(result.model, eval_set);
    CHECK(rep.accuracy == Approx(1.0 / 3.0).margin(0.05));
    CHECK(rep.chance == Approx(1.0 / 3.0));
    CHECK(rep.n_samples == 2000);
    long confusion_total = 0;
    for (auto& row : rep.confusion) {
        for (long v : row) confusion_total += v;
    }
    CHECK(confusion_total == 2000);
}

TEST_CASE("a converged model evaluates perfectly on its training data") {
    testutil::TinyRun run = testutil::tiny_run(12, 16, 60, 77, 8);
    EvalReport rep = evaluate(run.result.model, run.train);
    REQUIRE(rep.accuracy == 1.0);
    for (int t = 0; t < 3; ++t) {
        for (int p = 0; p < 3; ++p) {
            if (t != p) REQUIRE(rep.confusion[t][p] == 0);
        }
    }
    // row sums match class counts
    for (int t = 0; t < 3; ++t) {
        long row = rep.confusion[t][0] + rep.confusion[t][1] + rep.confusion[t][2];
        REQUIRE(row == rep.class_counts[t]);
    }
}

TEST_CASE("divergence is reported with the epoch and batch") {
    SyntheticSpec spec = synth::separable_spec(4, 8);
    auto samples = testutil::featurized(spec, 16);
    TrainConfig tc;
    tc.grid = 16;
    tc.max_epochs = 4;
    tc.lr = 1e30;  // guarantees a blow-up within the first epochs
    REQUIRE_THROWS_WITH(train_model(samples, tc), Catch::Contains("epoch"));
}

TEST_CASE("evaluating an empty set is an argument error") {
    SyntheticSpec spec = synth::separable_spec(4, 4);
    auto samples = testutil::featurized(spec, 16);
    TrainConfig tc;
    tc.grid = 16;
    tc.max_epochs = 1;
    auto result = train_model(samples, tc);
    std::vector<SsfiSample> empty;
    REQUIRE_THROWS_AS(evaluate(result.model, empty), argument_error);
}

TEST_CASE("checkpoint round-trip reproduces the evaluation bit for bit") {
    testutil::TinyRun run = testutil::tiny_run(8, 16, 4, 2025, 5);
    testutil::TempDir tmp("rt");
    run.result.model.save(tmp.file("m.ckpt"));
    CnnModel<float> loaded = CnnModel<float>::load(tmp.file("m.ckpt"));
    EvalReport a = evaluate(run.result.model, run.test);
    EvalReport b = evaluate(loaded, run.test);
    REQUIRE(a == b);
}
