#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "gcims/core.hpp"
#include "gcims/errors.hpp"
#include "gcims/eval.hpp"
#include "gcims/rng.hpp"

#include "support.hpp"

using namespace gcims;
using testutil::make_spectrum;

namespace {

std::vector<SampleLabel> two_class_labels(std::size_t infected, std::size_t not_infected) {
    std::vector<SampleLabel> labels;
    labels.insert(labels.end(), infected, SampleLabel::Infected);
    labels.insert(labels.end(), not_infected, SampleLabel::NotInfected);
    return labels;
}

std::size_t count_infected(const std::vector<SampleLabel>& labels,
                           const std::vector<std::size_t>& idx) {
    std::size_t c = 0;
    for (std::size_t i : idx) c += labels[i] == SampleLabel::Infected ? 1 : 0;
    return c;
}

// O(n^2) concordant-pair AUC with half credit for ties
double pair_counting_auc(const std::vector<double>& scores, const std::vector<SampleLabel>& labels) {
    double num = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != SampleLabel::Infected) continue;
        ++n_pos;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] == SampleLabel::Infected) continue;
            if (scores[i] > scores[j]) num += 1.0;
            else if (scores[i] == scores[j]) num += 0.5;
        }
    }
    n_neg = labels.size() - n_pos;
    return num / (double(n_pos) * double(n_neg));
}

// 20 labeled spectra with a class-dependent bump on a noisy floor
Dataset tiny_dataset(std::uint64_t seed) {
    const std::size_t n = 20, rows = 24, cols = 26;
    Rng rng(seed);
    std::vector<SampleRecord> records;
    std::map<std::string, IMSSpectrum> spectra;
    for (std::size_t s = 0; s < n; ++s) {
        const SampleLabel label = s % 2 ? SampleLabel::Infected : SampleLabel::NotInfected;
        Matrix m(rows, cols);
        for (double& v : m.data) v = rng.uniform(0.0, 0.2);
        if (label == SampleLabel::Infected) {
            for (std::size_t r = 8; r < 13; ++r) {
                for (std::size_t c = 10; c < 15; ++c) m(r, c) += 1.0;
            }
        }
        const std::string id = "S" + std::to_string(100 + s);
        records.push_back({id, 30 + int(s), s % 2 ? "F" : "M", "siteA", "2024-01-15", label});
        spectra.emplace(id, make_spectrum(std::move(m), id));
    }
    return Dataset(std::move(records), std::move(spectra));
}

}  // namespace

TEST_CASE("stratified split takes 8 + 7 of a 40/36 cohort at one fifth") {
    const std::vector<SampleLabel> labels = two_class_labels(40, 36);
    const SplitPlan plan = stratified_split(labels, 0.2, 7);
    CHECK(plan.test_indices.size() == 15);
    CHECK(plan.train_indices.size() == 61);
    CHECK(count_infected(labels, plan.test_indices) == 8);   // 40 * 0.2
    CHECK(15 - count_infected(labels, plan.test_indices) == 7);  // 36 * 0.2 rounded

    CHECK(std::is_sorted(plan.train_indices.begin(), plan.train_indices.end()));
    CHECK(std::is_sorted(plan.test_indices.begin(), plan.test_indices.end()));

    const SplitPlan again = stratified_split(labels, 0.2, 7);
    CHECK(plan.train_indices == again.train_indices);
    CHECK(plan.test_indices == again.test_indices);
}

TEST_CASE("stratified split balances a 5/5 cohort and rejects bad input") {
    const std::vector<SampleLabel> labels = two_class_labels(5, 5);
    const SplitPlan plan = stratified_split(labels, 0.2, 3);
    CHECK(plan.test_indices.size() == 2);
    CHECK(count_infected(labels, plan.test_indices) == 1);

    CHECK_THROWS_AS(stratified_split(two_class_labels(6, 0), 0.2, 1), ClassTooSmall);
    CHECK_THROWS_AS(stratified_split(labels, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(stratified_split(labels, 1.0, 1), InvalidArgument);
    CHECK_THROWS_AS(stratified_split(labels, -0.1, 1), InvalidArgument);
}

TEST_CASE("five folds of 76 samples come out 16,15,15,15,15") {
    const std::vector<SampleLabel> labels = two_class_labels(40, 36);
    const FoldPlan plan = stratified_kfold(labels, 5, 11);
    std::vector<std::size_t> sizes;
    for (const auto& fold : plan.folds) sizes.push_back(fold.size());
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    CHECK(sizes == std::vector<std::size_t>{16, 15, 15, 15, 15});

    const std::vector<SampleLabel> small = two_class_labels(5, 5);
    const FoldPlan even = stratified_kfold(small, 5, 2);
    for (const auto& fold : even.folds) {
        CHECK(fold.size() == 2);
        CHECK(count_infected(small, fold) == 1);
    }

    CHECK_THROWS_AS(stratified_kfold(small, 11, 1), KTooLarge);
    CHECK_THROWS_AS(stratified_kfold(small, 1, 1), InvalidArgument);
}

TEST_CASE("split and fold invariants hold across random cohorts") {
    Rng rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 6 + rng.below(195);  // 6..200
        std::vector<SampleLabel> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.below(2) ? SampleLabel::Infected : SampleLabel::NotInfected;
        }
        labels[0] = SampleLabel::Infected;  // force both classes
        labels[1] = SampleLabel::NotInfected;
        const std::size_t n_inf = std::size_t(std::count(labels.begin(), labels.end(),
                                                         SampleLabel::Infected));
        const double fraction = trial % 2 ? 0.2 : 0.35;
        const std::uint64_t seed = rng.next_u64();

        const SplitPlan plan = stratified_split(labels, fraction, seed);
        // disjoint and complete
        std::vector<std::size_t> all = plan.train_indices;
        all.insert(all.end(), plan.test_indices.begin(), plan.test_indices.end());
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> expect(n);
        std::iota(expect.begin(), expect.end(), std::size_t{0});
        REQUIRE(all == expect);
        // pinned size and per-class proportionality within one
        REQUIRE(plan.test_indices.size() ==
                std::size_t(std::llround(double(n) * fraction)));
        const double inf_share = double(n_inf) * fraction;
        REQUIRE(std::fabs(double(count_infected(labels, plan.test_indices)) - inf_share) <= 1.0);

        const std::size_t k = 5;
        const FoldPlan folds = stratified_kfold(labels, k, seed);
        std::vector<std::size_t> pooled;
        std::size_t largest = 0, smallest = n;
        for (const auto& fold : folds.folds) {
            pooled.insert(pooled.end(), fold.begin(), fold.end());
            largest = std::max(largest, fold.size());
            smallest = std::min(smallest, fold.size());
            const double fold_inf_share = double(n_inf) / double(k);
            REQUIRE(std::fabs(double(count_infected(labels, fold)) - fold_inf_share) <= 1.0);
        }
        std::sort(pooled.begin(), pooled.end());
        REQUIRE(pooled == expect);
        REQUIRE(largest - smallest <= 1);
    }
}

TEST_CASE("metrics on a perfect prediction") {
    const std::vector<SampleLabel> labels = two_class_labels(2, 2);
    const MetricSet m = compute_metrics(labels, {0.9, 0.8, 0.1, 0.2}, labels);
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.tp == 2);
    CHECK(m.tn == 2);
    CHECK(m.fp == 0);
    CHECK(m.fn == 0);
    REQUIRE(m.roc_auc.has_value());
    CHECK(*m.roc_auc == 1.0);
}

TEST_CASE("rank auc on the worked four-sample example is 0.75") {
    const std::vector<SampleLabel> labels = {SampleLabel::NotInfected, SampleLabel::NotInfected,
                                             SampleLabel::Infected, SampleLabel::Infected};
    const std::vector<double> scores = {0.1, 0.4, 0.35, 0.8};
    const auto auc = rank_auc(scores, labels);
    REQUIRE(auc.has_value());
    CHECK(*auc == Catch::Approx(0.75));
}

TEST_CASE("constant scores earn chance-level auc and one-class labels none") {
    const std::vector<SampleLabel> labels = two_class_labels(3, 5);
    const auto flat = rank_auc(std::vector<double>(8, 0.42), labels);
    REQUIRE(flat.has_value());
    CHECK(*flat == Catch::Approx(0.5));

    CHECK_FALSE(rank_auc({0.1, 0.2}, two_class_labels(2, 0)).has_value());
    const MetricSet m = compute_metrics(two_class_labels(2, 0), {0.9, 0.8}, two_class_labels(2, 0));
    CHECK_FALSE(m.roc_auc.has_value());
}

TEST_CASE("midrank auc equals pair counting on random score vectors") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(49);  // 2..50
        std::vector<SampleLabel> labels(n);
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.below(2) ? SampleLabel::Infected : SampleLabel::NotInfected;
            // discrete levels so ties actually occur
            scores[i] = trial % 2 ? double(rng.below(8)) / 4.0 : rng.uniform();
        }
        labels[0] = SampleLabel::Infected;
        if (n > 1) labels[1] = SampleLabel::NotInfected;

        const auto auc = rank_auc(scores, labels);
        REQUIRE(auc.has_value());
        REQUIRE(*auc == pair_counting_auc(scores, labels));  // bit-for-bit
    }
}

TEST_CASE("degenerate predictions fall back to zero precision and f1") {
    const std::vector<SampleLabel> labels = two_class_labels(2, 2);
    const std::vector<SampleLabel> all_neg(4, SampleLabel::NotInfected);
    const MetricSet m = compute_metrics(all_neg, {0.1, 0.1, 0.1, 0.1}, labels);
    CHECK(m.accuracy == 0.5);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);

    CHECK_THROWS_AS(compute_metrics(all_neg, {0.1}, labels), LengthMismatch);
    CHECK_THROWS_AS(compute_metrics({}, {}, {}), InvalidArgument);
}

TEST_CASE("accuracy equals the confusion-count ratio on random predictions") {
    Rng rng(5150);
    const std::size_t n = 64;
    std::vector<SampleLabel> labels(n), pred(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = rng.below(2) ? SampleLabel::Infected : SampleLabel::NotInfected;
        pred[i] = rng.below(2) ? SampleLabel::Infected : SampleLabel::NotInfected;
        scores[i] = rng.uniform();
    }
    const MetricSet m = compute_metrics(pred, scores, labels);
    CHECK(m.tp + m.fp + m.tn + m.fn == n);
    CHECK(m.accuracy == Catch::Approx(double(m.tp + m.tn) / double(n)));
}

namespace {

// margin-separated continuous xor: class depends on the sign pair
std::pair<Matrix, std::vector<SampleLabel>> xor_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X(n, 2);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = (rng.below(2) ? 1.0 : -1.0) * rng.uniform(0.3, 1.0);
        const double b = (rng.below(2) ? 1.0 : -1.0) * rng.uniform(0.3, 1.0);
        X(i, 0) = a;
        X(i, 1) = b;
        y[i] = (a > 0.0) != (b > 0.0) ? SampleLabel::Infected : SampleLabel::NotInfected;
    }
    return {std::move(X), std::move(y)};
}

}  // namespace

TEST_CASE("grid search prefers the cell that can represent the boundary") {
    const auto [X, y] = xor_cloud(40, 88);
    const FoldPlan folds = stratified_kfold(y, 4, 19);
    const std::vector<ClassifierSpec> grid = {TreeSpec{1, 1}, TreeSpec{4, 1}};
    const GridSearchResult result = grid_search(X, y, grid, folds, TrainSeed{5});

    REQUIRE(result.table.size() == 2);
    CHECK(result.best_index == 1);
    CHECK(result.table[1].mean_accuracy > result.table[0].mean_accuracy);
    for (const GridCell& cell : result.table) {
        REQUIRE(cell.fold_accuracies.size() == 4);
        double mean = 0.0;
        for (double acc : cell.fold_accuracies) {
            CHECK(acc >= 0.0);
            CHECK(acc <= 1.0);
            mean += acc;
        }
        CHECK(cell.mean_accuracy == Catch::Approx(mean / 4.0));
    }

    const GridSearchResult again = grid_search(X, y, grid, folds, TrainSeed{5});
    CHECK(again.best_index == result.best_index);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(again.table[c].fold_accuracies == result.table[c].fold_accuracies);
    }
}

TEST_CASE("grid search ties resolve to the earliest cell and empty grids throw") {
    const auto [X, y] = xor_cloud(24, 31);
    const FoldPlan folds = stratified_kfold(y, 3, 6);
    const std::vector<ClassifierSpec> twins = {TreeSpec{4, 1}, TreeSpec{4, 1}};
    const GridSearchResult result = grid_search(X, y, twins, folds, TrainSeed{2});
    CHECK(result.table[0].mean_accuracy == result.table[1].mean_accuracy);
    CHECK(result.best_index == 0);

    CHECK_THROWS_AS(grid_search(X, y, {}, folds, TrainSeed{2}), InvalidArgument);
}

TEST_CASE("default algorithm plans cover the five families in report order") {
    const std::vector<AlgorithmPlan> plans = default_algorithm_plans();
    REQUIRE(plans.size() == 5);
    CHECK(plans[0].kind == ClassifierKind::DecisionTree);
    CHECK(plans[1].kind == ClassifierKind::LogisticRegression);
    CHECK(plans[2].kind == ClassifierKind::RandomForest);
    CHECK(plans[3].kind == ClassifierKind::Svm);
    CHECK(plans[4].kind == ClassifierKind::Plsda);
    CHECK(plans[0].selection_k == 100);
    CHECK(plans[1].selection_k == 84);
    CHECK(plans[2].selection_k == 100);
    CHECK(plans[3].selection_k == 304);
    CHECK(plans[4].selection_k == 304);
    CHECK(plans[0].selection_method == SelectionMethod::Importance);
    CHECK(plans[1].selection_method == SelectionMethod::AbsWeight);
    for (const AlgorithmPlan& plan : plans) CHECK_FALSE(plan.grid.empty());

    const AlgorithmPlan svm = default_plan(ClassifierKind::Svm, 17);
    CHECK(svm.kind == ClassifierKind::Svm);
    CHECK(svm.selection_k == 17);
}

TEST_CASE("evaluate_all runs the whole chain deterministically") {
    const Dataset data = tiny_dataset(321);

    EvalConfig config;
    config.preprocess = PreprocessConfig{};  // identity: structure is under test here
    config.pca_components = 5;
    config.test_fraction = 0.2;
    config.cv_folds = 3;
    config.algorithms = {
        {ClassifierKind::DecisionTree, 5, SelectionMethod::Importance, {TreeSpec{2, 1}}},
        {ClassifierKind::Plsda, 3, SelectionMethod::AbsWeight, {PlsdaSpec{2, 0.5}}},
    };

    const EvaluationReport report = evaluate_all(data, config, 9);
    CHECK(report.seed == 9);
    CHECK(report.n_samples == 20);
    CHECK(report.n_test == 4);
    CHECK(report.n_train == 16);
    CHECK(report.pca_requested == 5);
    CHECK(report.pca_components == 5);
    CHECK_FALSE(report.pca_clamped);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].kind == ClassifierKind::DecisionTree);
    CHECK(report.rows[1].kind == ClassifierKind::Plsda);
    CHECK(report.rows[0].feature_count == 5);
    CHECK(report.rows[1].feature_count == 3);
    CHECK(report.rows[0].best_description == describe(ClassifierSpec{TreeSpec{2, 1}}));
    for (const AlgorithmResult& row : report.rows) {
        CHECK(row.cv_mean_accuracy >= 0.0);
        CHECK(row.cv_mean_accuracy <= 1.0);
        CHECK(row.cv_table.size() == 1);
    }

    const EvaluationReport replay = evaluate_all(data, config, 9);
    CHECK(report_to_json(report) == report_to_json(replay));
    CHECK(report_to_csv(report) == report_to_csv(replay));
}

TEST_CASE("evaluate_all refuses unlabeled samples") {
    Dataset data = tiny_dataset(99);
    std::vector<SampleRecord> records = data.records;
    records[3].label.reset();
    const Dataset unlabeled(std::move(records), std::map<std::string, IMSSpectrum>(data.spectra));

    EvalConfig config;
    config.preprocess = PreprocessConfig{};
    config.pca_components = 3;
    config.cv_folds = 2;
    config.algorithms = {{ClassifierKind::DecisionTree, 3, SelectionMethod::Importance,
                          {TreeSpec{2, 1}}}};
    CHECK_THROWS_AS(evaluate_all(unlabeled, config, 1), UnlabeledSamples);
}

TEST_CASE("report serialization embeds the run configuration") {
    const Dataset data = tiny_dataset(55);
    EvalConfig config;
    config.preprocess = PreprocessConfig{};
    config.pca_components = 4;
    config.cv_folds = 2;
    config.algorithms = {
        {ClassifierKind::DecisionTree, 4, SelectionMethod::Importance, {TreeSpec{2, 1}}},
        {ClassifierKind::Plsda, 4, SelectionMethod::AbsWeight, {PlsdaSpec{2, 0.5}}},
    };
    const EvaluationReport report = evaluate_all(data, config, 123);

    const nlohmann::json j = nlohmann::json::parse(report_to_json(report));
    CHECK(j["seed"] == 123);
    CHECK(j["dataset"]["n_samples"] == 20);
    CHECK(j["config"]["cv_folds"] == 2);
    CHECK(j["config"]["pca_components"] == 4);
    REQUIRE(j["algorithms"].size() == 2);
    CHECK(j["algorithms"][0]["algorithm"] == "decision_tree");
    CHECK(j["algorithms"][1]["algorithm"] == "plsda");
    CHECK(j["algorithms"][0]["selection"]["method"] == "importance");
    CHECK(j["algorithms"][0]["test"].contains("roc_auc"));
    CHECK(j["algorithms"][0]["cv_table"].size() == 1);

    const std::string csv = report_to_csv(report);
    const std::string header =
        "algorithm,best_hyperparameters,feature_count,cv_mean_accuracy,cv_std_accuracy,"
        "test_accuracy,test_precision,test_recall,test_f1,test_roc_auc,tp,fp,tn,fn,"
        "seed,pca_components,test_fraction,cv_folds,preprocess\n";
    REQUIRE(csv.substr(0, header.size()) == header);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + two rows
    CHECK(csv.find("decision_tree,\"decision_tree(max_depth=2") != std::string::npos);
    // each row carries the run configuration for standalone replay
    CHECK(csv.find(",123,4,0.200000,2,\"\"") != std::string::npos);
}
