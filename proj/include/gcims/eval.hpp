#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcims/core.hpp"
#include "gcims/errors.hpp"
#include "gcims/features.hpp"
#include "gcims/matrix.hpp"
#include "gcims/models.hpp"
#include "gcims/preprocess.hpp"
#include "gcims/rng.hpp"

namespace gcims {

// ---------------------------------------------------------------------------
// splits and folds
// ---------------------------------------------------------------------------

struct SplitPlan {
    std::vector<std::size_t> train_indices;  // ascending
    std::vector<std::size_t> test_indices;   // ascending
};

struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds;  // each ascending
};

namespace detail {

// Stream offsets: every consumer of the run seed draws from its own derived
// stream so adding an algorithm or reordering steps never shifts another
// step's randomness.
namespace streams {
inline constexpr std::uint64_t split_class_base = 1;       // +class id
inline constexpr std::uint64_t fold_class_base = 4;        // +class id
inline constexpr std::uint64_t selection_base = 10;        // +algorithm index
inline constexpr std::uint64_t grid_base = 40;             // +algorithm index
inline constexpr std::uint64_t refit_base = 70;            // +algorithm index
}  // namespace streams

inline std::array<std::vector<std::size_t>, 2> indices_by_class(
    const std::vector<SampleLabel>& labels) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i] == SampleLabel::Infected ? 1 : 0].push_back(i);
    }
    return by_class;
}

}  // namespace detail

/// Seeded stratified train/test split. The total test count is n*fraction
/// rounded to nearest; class quotas come from largest-remainder rounding of
/// each class's exact share (ties toward class 0), so every class lands
/// within one sample of proportionality. Membership within a class is a
/// seeded shuffle.
inline SplitPlan stratified_split(const std::vector<SampleLabel>& labels, double test_fraction,
                                  std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw InvalidArgument("stratified_split: test_fraction must lie in (0, 1)");
    }
    auto by_class = detail::indices_by_class(labels);
    if (by_class[0].empty() || by_class[1].empty()) {
        throw ClassTooSmall("stratified_split: both classes must be present");
    }

    const auto total_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(labels.size()) * test_fraction));
    std::array<std::size_t, 2> quota{};
    std::array<double, 2> remainder{};
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
        const double exact = static_cast<double>(by_class[c].size()) * test_fraction;
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - std::floor(exact);
        assigned += quota[c];
    }
    while (assigned < total_test) {
        const int pick = remainder[1] > remainder[0] ? 1 : 0;
        ++quota[pick];
        remainder[pick] = -1.0;
        ++assigned;
    }

    SplitPlan plan;
    for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t>& members = by_class[c];
        Rng rng(derive_seed(seed, detail::streams::split_class_base + static_cast<std::uint64_t>(c)));
        rng.shuffle(members);
        const std::size_t take = std::min(quota[c], members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            (i < take ? plan.test_indices : plan.train_indices).push_back(members[i]);
        }
    }
    std::sort(plan.train_indices.begin(), plan.train_indices.end());
    std::sort(plan.test_indices.begin(), plan.test_indices.end());
    return plan;
}

/// Seeded stratified k-fold assignment. Classes are shuffled independently,
/// then dealt one sample at a time onto the currently smallest fold (ties to
/// the lower fold index), which keeps fold sizes within one of each other
/// and per-fold class counts within one of proportionality.
inline FoldPlan stratified_kfold(const std::vector<SampleLabel>& labels, std::size_t k,
                                 std::uint64_t seed) {
    if (k < 2) throw InvalidArgument("stratified_kfold: k must be >= 2");
    if (k > labels.size()) {
        throw KTooLarge("stratified_kfold: k=" + std::to_string(k) + " exceeds n=" +
                        std::to_string(labels.size()));
    }
    auto by_class = detail::indices_by_class(labels);

    FoldPlan plan;
    plan.folds.assign(k, {});
    for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t>& members = by_class[c];
        if (members.empty()) continue;
        Rng rng(derive_seed(seed, detail::streams::fold_class_base + static_cast<std::uint64_t>(c)));
        rng.shuffle(members);
        for (std::size_t m : members) {
            std::size_t target = 0;
            for (std::size_t f = 1; f < k; ++f) {
                if (plan.folds[f].size() < plan.folds[target].size()) target = f;
            }
            plan.folds[target].push_back(m);
        }
    }
    for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
    return plan;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

/// Confusion counts and derived scores; Infected is the positive class.
/// roc_auc is absent when only one class appears in the labels.
struct MetricSet {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> roc_auc;
};

/// ROC-AUC via the rank statistic with midranks for tied scores:
/// (sum of positive ranks - n+(n+1)/2) / (n+ * n-).
inline std::optional<double> rank_auc(const std::vector<double>& scores,
                                      const std::vector<SampleLabel>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<double> ranks(n);
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos;
        while (end + 1 < n && scores[order[end + 1]] == scores[order[pos]]) ++end;
        const double midrank = 0.5 * static_cast<double>(pos + 1 + end + 1);
        for (std::size_t i = pos; i <= end; ++i) ranks[order[i]] = midrank;
        pos = end + 1;
    }

    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == SampleLabel::Infected) {
            rank_sum += ranks[i];
            ++n_pos;
        }
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    return (rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline MetricSet compute_metrics(const std::vector<SampleLabel>& predictions,
                                 const std::vector<double>& scores,
                                 const std::vector<SampleLabel>& labels) {
    if (predictions.size() != labels.size() || scores.size() != labels.size()) {
        throw LengthMismatch("compute_metrics: predictions, scores and labels must align");
    }
    if (labels.empty()) throw InvalidArgument("compute_metrics: empty input");

    MetricSet m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool truth = labels[i] == SampleLabel::Infected;
        const bool said = predictions[i] == SampleLabel::Infected;
        if (said && truth) ++m.tp;
        else if (said && !truth) ++m.fp;
        else if (!said && !truth) ++m.tn;
        else ++m.fn;
    }
    const double n = static_cast<double>(labels.size());
    m.accuracy = static_cast<double>(m.tp + m.tn) / n;
    m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
    m.roc_auc = rank_auc(scores, labels);
    return m;
}

// ---------------------------------------------------------------------------
// grid search
// ---------------------------------------------------------------------------

struct GridCell {
    ClassifierSpec spec;
    std::vector<double> fold_accuracies;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
};

struct GridSearchResult {
    std::size_t best_index = 0;
    std::vector<GridCell> table;

    const ClassifierSpec& best_spec() const { return table[best_index].spec; }
};

namespace detail {

inline Matrix take_rows(const Matrix& X, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), X.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(X.row(rows[i]), X.row(rows[i]) + X.cols, out.row(i));
    }
    return out;
}

template <typename T>
inline std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

inline double accuracy_of(const std::vector<SampleLabel>& pred,
                          const std::vector<SampleLabel>& truth) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace detail

/// Exhaustive cross-validated search over the given specs. Each (cell, fold)
/// fit draws a seed hashed from the master seed and both indices, so the
/// table is identical no matter how cells are scheduled. Best cell = highest
/// mean accuracy, ties to the earliest grid position.
inline GridSearchResult grid_search(const Matrix& X, const std::vector<SampleLabel>& y,
                                    const std::vector<ClassifierSpec>& grid, const FoldPlan& folds,
                                    TrainSeed seed) {
    if (grid.empty()) throw InvalidArgument("grid_search: empty grid");
    const std::size_t k = folds.folds.size();

    // Per-fold training row lists, shared across cells.
    std::vector<std::vector<std::size_t>> train_rows(k);
    for (std::size_t f = 0; f < k; ++f) {
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            train_rows[f].insert(train_rows[f].end(), folds.folds[g].begin(), folds.folds[g].end());
        }
        std::sort(train_rows[f].begin(), train_rows[f].end());
    }

    GridSearchResult result;
    result.table.reserve(grid.size());
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        GridCell entry;
        entry.spec = grid[cell];
        entry.fold_accuracies.resize(k);
        const std::uint64_t cell_seed = derive_seed(seed.master_seed, cell);
        for (std::size_t f = 0; f < k; ++f) {
            const Matrix Xtr = detail::take_rows(X, train_rows[f]);
            const std::vector<SampleLabel> ytr = detail::take(y, train_rows[f]);
            const Matrix Xva = detail::take_rows(X, folds.folds[f]);
            const std::vector<SampleLabel> yva = detail::take(y, folds.folds[f]);
            const ClassifierModel model = fit(Xtr, ytr, grid[cell], TrainSeed{derive_seed(cell_seed, f)});
            entry.fold_accuracies[f] = detail::accuracy_of(predict(model, Xva), yva);
        }
        double mean = 0.0;
        for (double a : entry.fold_accuracies) mean += a;
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (double a : entry.fold_accuracies) var += (a - mean) * (a - mean);
        entry.mean_accuracy = mean;
        entry.std_accuracy = std::sqrt(var / static_cast<double>(k));
        result.table.push_back(std::move(entry));
    }

    for (std::size_t cell = 1; cell < result.table.size(); ++cell) {
        if (result.table[cell].mean_accuracy > result.table[result.best_index].mean_accuracy) {
            result.best_index = cell;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// full evaluation
// ---------------------------------------------------------------------------

/// One algorithm's slot in an evaluation run: which classifier family, how
/// many post-PCA features it keeps and by what ranking, and its search grid.
struct AlgorithmPlan {
    ClassifierKind kind = ClassifierKind::DecisionTree;
    std::size_t selection_k = 100;
    SelectionMethod selection_method = SelectionMethod::Importance;
    std::vector<ClassifierSpec> grid;
};

inline std::vector<ClassifierSpec> default_grid(ClassifierKind kind) {
    std::vector<ClassifierSpec> grid;
    switch (kind) {
        case ClassifierKind::DecisionTree:
            for (std::size_t depth : {2, 4, 8}) {
                for (std::size_t leaf : {1, 3}) grid.push_back(TreeSpec{depth, leaf});
            }
            break;
        case ClassifierKind::LogisticRegression:
            for (Penalty pen : {Penalty::L1, Penalty::L2}) {
                for (double lambda : {0.001, 0.01, 0.1}) {
                    grid.push_back(LogisticSpec{pen, lambda, 0.1, 1000, 1e-6});
                }
            }
            break;
        case ClassifierKind::RandomForest:
            for (std::size_t trees : {50, 100}) {
                for (std::size_t depth : {4, 8}) {
                    ForestSpec spec;
                    spec.n_trees = trees;
                    spec.max_depth = depth;
                    grid.push_back(spec);
                }
            }
            break;
        case ClassifierKind::Svm:
            for (double c : {0.1, 1.0, 10.0}) {
                SvmSpec spec;
                spec.kernel = SvmKernel::Linear;
                spec.C = c;
                grid.push_back(spec);
            }
            for (double gamma : {0.01, 0.1}) {
                for (double c : {1.0, 10.0}) {
                    SvmSpec spec;
                    spec.kernel = SvmKernel::Poly;
                    spec.degree = 2;
                    spec.gamma = gamma;
                    spec.coef0 = 1.0;
                    spec.C = c;
                    grid.push_back(spec);
                }
            }
            break;
        case ClassifierKind::Plsda:
            for (std::size_t comps : {2, 4, 8, 16}) grid.push_back(PlsdaSpec{comps, 0.5});
            break;
    }
    return grid;
}

/// The five algorithms in report order with their selection sizes:
/// tree and forest rank 100 features by forest importance, logistic keeps 84
/// by coefficient magnitude, svm and plsda take the full component set.
inline std::vector<AlgorithmPlan> default_algorithm_plans(std::size_t pca_components = 304) {
    return {
        {ClassifierKind::DecisionTree, 100, SelectionMethod::Importance,
         default_grid(ClassifierKind::DecisionTree)},
        {ClassifierKind::LogisticRegression, 84, SelectionMethod::AbsWeight,
         default_grid(ClassifierKind::LogisticRegression)},
        {ClassifierKind::RandomForest, 100, SelectionMethod::Importance,
         default_grid(ClassifierKind::RandomForest)},
        {ClassifierKind::Svm, pca_components, SelectionMethod::AbsWeight,
         default_grid(ClassifierKind::Svm)},
        {ClassifierKind::Plsda, pca_components, SelectionMethod::AbsWeight,
         default_grid(ClassifierKind::Plsda)},
    };
}

inline AlgorithmPlan default_plan(ClassifierKind kind, std::size_t pca_components = 304) {
    for (AlgorithmPlan& plan : default_algorithm_plans(pca_components)) {
        if (plan.kind == kind) return plan;
    }
    throw InvalidArgument("no default plan for classifier kind");
}

struct EvalConfig {
    PreprocessConfig preprocess = PreprocessConfig::standard();
    std::size_t pca_components = 304;
    double test_fraction = 0.2;
    std::size_t cv_folds = 5;
    std::vector<AlgorithmPlan> algorithms = default_algorithm_plans();
};

struct AlgorithmResult {
    ClassifierKind kind = ClassifierKind::DecisionTree;
    ClassifierSpec best_spec;
    std::string best_description;
    double cv_mean_accuracy = 0.0;
    double cv_std_accuracy = 0.0;
    MetricSet test_metrics;
    std::size_t feature_count = 0;  // features the final model consumed
    SelectionMethod selection_method = SelectionMethod::Importance;
    std::size_t selection_requested = 0;
    bool selection_clamped = false;
    std::vector<GridCell> cv_table;
};

struct EvaluationReport {
    std::uint64_t seed = 0;
    std::size_t n_samples = 0, n_train = 0, n_test = 0;
    double test_fraction = 0.2;
    std::size_t cv_folds = 5;
    std::string preprocess_text;
    std::size_t pca_requested = 0, pca_components = 0;
    bool pca_clamped = false;
    std::vector<AlgorithmResult> rows;
};

/// End-to-end evaluation: preprocess every spectrum, flatten, one stratified
/// train/test split shared by all algorithms, standardize + PCA fitted on
/// the training portion only, then per algorithm: feature selection, 5-fold
/// grid search, refit on the full training portion, metrics on the held-out
/// test set. Everything downstream of (dataset, config, seed) is
/// deterministic.
inline EvaluationReport evaluate_all(const Dataset& dataset, const EvalConfig& config,
                                     std::uint64_t seed) {
    std::vector<SampleLabel> labels;
    labels.reserve(dataset.records.size());
    for (const SampleRecord& rec : dataset.records) {
        if (!rec.label.has_value()) {
            throw UnlabeledSamples("evaluate_all: sample '" + rec.sample_id + "' has no label");
        }
        labels.push_back(*rec.label);
    }

    std::vector<IMSSpectrum> processed;
    processed.reserve(dataset.records.size());
    for (const SampleRecord& rec : dataset.records) {
        processed.push_back(run_pipeline(dataset.spectrum(rec.sample_id), config.preprocess));
    }
    const FeatureMatrix flat = flatten_spectra(processed);

    const SplitPlan split = stratified_split(labels, config.test_fraction, seed);
    const std::vector<SampleLabel> y_train = detail::take(labels, split.train_indices);
    const std::vector<SampleLabel> y_test = detail::take(labels, split.test_indices);

    FeatureMatrix train(detail::take_rows(flat.values, split.train_indices), flat.feature_names,
                        detail::take(flat.sample_ids, split.train_indices));
    FeatureMatrix test(detail::take_rows(flat.values, split.test_indices), flat.feature_names,
                       detail::take(flat.sample_ids, split.test_indices));

    const StandardizeResult standardized = standardize_fit_transform(train);
    const FeatureMatrix test_std = standardize_apply(standardized.standardizer, test);

    const PcaModel pca = pca_fit(standardized.transformed, config.pca_components);
    const FeatureMatrix train_pca = pca_transform(pca, standardized.transformed);
    const FeatureMatrix test_pca = pca_transform(pca, test_std);

    const FoldPlan folds = stratified_kfold(y_train, config.cv_folds, seed);

    EvaluationReport report;
    report.seed = seed;
    report.n_samples = dataset.size();
    report.n_train = split.train_indices.size();
    report.n_test = split.test_indices.size();
    report.test_fraction = config.test_fraction;
    report.cv_folds = config.cv_folds;
    report.preprocess_text = config.preprocess.to_text();
    report.pca_requested = config.pca_components;
    report.pca_components = pca.n_components();
    report.pca_clamped = pca.clamped;

    for (std::size_t a = 0; a < config.algorithms.size(); ++a) {
        const AlgorithmPlan& plan = config.algorithms[a];
        const SelectionMask mask =
            select_top_k(train_pca, y_train, plan.selection_k, plan.selection_method,
                         derive_seed(seed, detail::streams::selection_base + a));
        const FeatureMatrix train_sel = apply_selection(mask, train_pca);
        const FeatureMatrix test_sel = apply_selection(mask, test_pca);

        GridSearchResult search =
            grid_search(train_sel.values, y_train, plan.grid, folds,
                        TrainSeed{derive_seed(seed, detail::streams::grid_base + a)});

        const ClassifierModel model =
            fit(train_sel.values, y_train, search.best_spec(),
                TrainSeed{derive_seed(seed, detail::streams::refit_base + a)});
        const std::vector<double> scores = decision_score(model, test_sel.values);
        const std::vector<SampleLabel> predictions = predict(model, test_sel.values);

        AlgorithmResult row;
        row.kind = plan.kind;
        row.best_spec = search.best_spec();
        row.best_description = describe(search.best_spec());
        row.cv_mean_accuracy = search.table[search.best_index].mean_accuracy;
        row.cv_std_accuracy = search.table[search.best_index].std_accuracy;
        row.test_metrics = compute_metrics(predictions, scores, y_test);
        row.feature_count = mask.kept_indices.size();
        row.selection_method = plan.selection_method;
        row.selection_requested = plan.selection_k;
        row.selection_clamped = mask.clamped;
        row.cv_table = std::move(search.table);
        report.rows.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// report serialization (no timestamps anywhere: artifacts must replay
// byte-identically from the same inputs and seed)
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json metrics_to_json(const MetricSet& m) {
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    if (m.roc_auc.has_value()) {
        j["roc_auc"] = *m.roc_auc;
    } else {
        j["roc_auc"] = nullptr;
    }
    j["confusion"] = {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
    return j;
}

inline std::string format_fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace detail

inline std::string report_to_json(const EvaluationReport& report) {
    nlohmann::ordered_json j;
    j["seed"] = report.seed;
    j["dataset"] = {{"n_samples", report.n_samples},
                    {"n_train", report.n_train},
                    {"n_test", report.n_test}};
    j["config"] = {{"preprocess", report.preprocess_text},
                   {"pca_components", report.pca_requested},
                   {"test_fraction", report.test_fraction},
                   {"cv_folds", report.cv_folds}};
    j["pca"] = {{"components", report.pca_components}, {"clamped", report.pca_clamped}};

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const AlgorithmResult& row : report.rows) {
        nlohmann::ordered_json r;
        r["algorithm"] = kind_name(row.kind);
        r["best_hyperparameters"] = row.best_description;
        r["selection"] = {
            {"method", row.selection_method == SelectionMethod::Importance ? "importance" : "abs_weight"},
            {"requested", row.selection_requested},
            {"kept", row.feature_count},
            {"clamped", row.selection_clamped}};
        // cross-validation estimate (model tuning) vs held-out test metrics
        r["cv_mean_accuracy"] = row.cv_mean_accuracy;
        r["cv_std_accuracy"] = row.cv_std_accuracy;
        r["test"] = detail::metrics_to_json(row.test_metrics);
        nlohmann::ordered_json table = nlohmann::ordered_json::array();
        for (const GridCell& cell : row.cv_table) {
            table.push_back({{"spec", describe(cell.spec)},
                             {"mean_accuracy", cell.mean_accuracy},
                             {"std_accuracy", cell.std_accuracy},
                             {"fold_accuracies", cell.fold_accuracies}});
        }
        r["cv_table"] = std::move(table);
        rows.push_back(std::move(r));
    }
    j["algorithms"] = std::move(rows);
    return j.dump(2) + "\n";
}

/// Flat per-algorithm table; cv columns are tuning estimates, test columns
/// come from the held-out split.
inline std::string report_to_csv(const EvaluationReport& report) {
    // trailing columns repeat the run configuration so a row is replayable
    // on its own; the preprocess steps collapse onto one line
    std::string preprocess = report.preprocess_text;
    while (!preprocess.empty() && preprocess.back() == '\n') preprocess.pop_back();
    for (std::size_t i = 0; i + 1 < preprocess.size(); ++i) {
        if (preprocess[i] == '\n') preprocess.replace(i, 1, "; ");
    }
    std::string out =
        "algorithm,best_hyperparameters,feature_count,cv_mean_accuracy,cv_std_accuracy,"
        "test_accuracy,test_precision,test_recall,test_f1,test_roc_auc,tp,fp,tn,fn,"
        "seed,pca_components,test_fraction,cv_folds,preprocess\n";
    for (const AlgorithmResult& row : report.rows) {
        const MetricSet& m = row.test_metrics;
        out += kind_name(row.kind);
        out += ",\"" + row.best_description + "\"";
        out += "," + std::to_string(row.feature_count);
        out += "," + detail::format_fixed(row.cv_mean_accuracy);
        out += "," + detail::format_fixed(row.cv_std_accuracy);
        out += "," + detail::format_fixed(m.accuracy);
        out += "," + detail::format_fixed(m.precision);
        out += "," + detail::format_fixed(m.recall);
        out += "," + detail::format_fixed(m.f1);
        out += "," + (m.roc_auc.has_value() ? detail::format_fixed(*m.roc_auc) : std::string());
        out += "," + std::to_string(m.tp);
        out += "," + std::to_string(m.fp);
        out += "," + std::to_string(m.tn);
        out += "," + std::to_string(m.fn);
        out += "," + std::to_string(report.seed);
        out += "," + std::to_string(report.pca_requested);
        out += "," + detail::format_fixed(report.test_fraction);
        out += "," + std::to_string(report.cv_folds);
        out += ",\"" + preprocess + "\"";
        out += "\n";
    }
    return out;
}

}  // namespace gcims
