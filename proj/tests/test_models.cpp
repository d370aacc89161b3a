#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "gcims/errors.hpp"
#include "gcims/models.hpp"
#include "gcims/rng.hpp"

#include "support.hpp"

using namespace gcims;
using testutil::make_matrix;

namespace {

const std::vector<SampleLabel>& xor_labels() {
    static const std::vector<SampleLabel> y = {SampleLabel::NotInfected, SampleLabel::Infected,
                                               SampleLabel::Infected, SampleLabel::NotInfected};
    return y;
}

Matrix xor_points() { return make_matrix({{0, 0}, {0, 1}, {1, 0}, {1, 1}}); }

std::size_t agreement(const std::vector<SampleLabel>& a, const std::vector<SampleLabel>& b) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
    return same;
}

// exhaustive best stump: lowest weighted child gini over every feature and
// every midpoint between consecutive distinct sorted values
struct StumpChoice {
    bool split = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();
};

double gini_pair(std::size_t n0, std::size_t n1) {
    const double total = double(n0 + n1);
    const double p0 = double(n0) / total, p1 = double(n1) / total;
    // grouped so gini_pair(a, b) == gini_pair(b, a) bit-exactly; sequential
    // subtraction would order mathematically tied split candidates by ulps
    return 1.0 - (p0 * p0 + p1 * p1);
}

StumpChoice best_stump_exhaustive(const Matrix& X, const std::vector<SampleLabel>& y) {
    StumpChoice best;
    const std::size_t n = X.rows;
    for (std::size_t f = 0; f < X.cols; ++f) {
        std::vector<std::pair<double, int>> column(n);
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = {X(i, f), y[i] == SampleLabel::Infected ? 1 : 0};
        }
        std::sort(column.begin(), column.end());
        std::size_t total1 = 0;
        for (const auto& [v, lab] : column) total1 += std::size_t(lab);
        const std::size_t total0 = n - total1;

        std::size_t left0 = 0, left1 = 0;
        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
            ++(column[pos].second == 1 ? left1 : left0);
            if (column[pos].first == column[pos + 1].first) continue;
            const std::size_t nl = left0 + left1, nr = n - nl;
            const double score = (double(nl) * gini_pair(left0, left1) +
                                  double(nr) * gini_pair(total0 - left0, total1 - left1)) /
                                 double(n);
            if (score < best.score) {
                best = {true, f, 0.5 * (column[pos].first + column[pos + 1].first), score};
            }
        }
    }
    return best;
}

// test-local gaussian elimination with partial pivoting for the OLS oracle
std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
        }
        for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a(r, col) / a(col, col);
            for (std::size_t c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t back = n; back-- > 0;) {
        double acc = b[back];
        for (std::size_t c = back + 1; c < n; ++c) acc -= a(back, c) * x[c];
        x[back] = acc / a(back, back);
    }
    return x;
}

}  // namespace

TEST_CASE("gini impurity on hand-computed class counts") {
    CHECK(gini_impurity({3, 1}) == Catch::Approx(0.375));
    CHECK(gini_impurity({2, 2}) == Catch::Approx(0.5));
    CHECK(gini_impurity({4, 0}) == 0.0);
    CHECK(gini_impurity({1, 1, 2}) == Catch::Approx(1.0 - (0.25 * 0.25 * 2 + 0.25)));
    CHECK_THROWS_AS(gini_impurity({0, 0}), EmptyNode);
    CHECK_THROWS_AS(gini_impurity({}), EmptyNode);
}

TEST_CASE("tree on single-class data is one pure leaf") {
    const Matrix X = make_matrix({{1}, {2}, {3}});
    const std::vector<SampleLabel> y(3, SampleLabel::NotInfected);
    const TreeModel tree = fit_tree(X, y, TreeSpec{});
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].is_leaf());
    const std::vector<SampleLabel> pred = predict(ClassifierModel{tree}, X);
    for (SampleLabel l : pred) CHECK(l == SampleLabel::NotInfected);
}

TEST_CASE("depth-two tree solves xor exactly") {
    TreeSpec spec;
    spec.max_depth = 2;
    const TreeModel tree = fit_tree(xor_points(), xor_labels(), spec);
    const std::vector<SampleLabel> pred = predict(ClassifierModel{tree}, xor_points());
    CHECK(agreement(pred, xor_labels()) == 4);  // needs the zero-gain first cut
}

TEST_CASE("depth-one stumps match exhaustive search over all split candidates") {
    Rng rng(404);
    TreeSpec spec;
    spec.max_depth = 1;
    const double levels[] = {0.0, 0.5, 1.0, 2.0, 3.0};
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + rng.below(7);  // 2..8
        const std::size_t d = 1 + rng.below(3);  // 1..3
        Matrix X(n, d);
        std::vector<SampleLabel> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.below(2) ? SampleLabel::Infected : SampleLabel::NotInfected;
            for (std::size_t j = 0; j < d; ++j) X(i, j) = levels[rng.below(5)];
        }

        const TreeModel tree = fit_tree(X, y, spec);
        const StumpChoice oracle = best_stump_exhaustive(X, y);

        bool pure = true;
        for (std::size_t i = 1; i < n; ++i) pure = pure && y[i] == y[0];
        if (pure || !oracle.split) {
            CHECK(tree.nodes[0].is_leaf());
            continue;
        }
        REQUIRE_FALSE(tree.nodes[0].is_leaf());
        CHECK(std::size_t(tree.nodes[0].feature) == oracle.feature);
        CHECK(tree.nodes[0].threshold == oracle.threshold);
    }
}

TEST_CASE("tree decisions are invariant under monotone feature transforms") {
    Rng rng(91);
    const std::size_t n = 14, d = 3;
    Matrix X(n, d);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.below(2) ? SampleLabel::Infected : SampleLabel::NotInfected;
        for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-2.0, 2.0);
    }
    Matrix Xc = X;
    for (double& v : Xc.data) v = v * v * v;  // strictly increasing

    const TreeModel base = fit_tree(X, y, TreeSpec{});
    const TreeModel cubed = fit_tree(Xc, y, TreeSpec{});
    CHECK(base.nodes.size() == cubed.nodes.size());
    CHECK(base.nodes[0].feature == cubed.nodes[0].feature);
    CHECK(predict(ClassifierModel{base}, X) == predict(ClassifierModel{cubed}, Xc));
}

TEST_CASE("tree rejects malformed training input") {
    CHECK_THROWS_AS(fit_tree(Matrix(0, 0), {}, TreeSpec{}), InvalidArgument);
    CHECK_THROWS_AS(fit_tree(make_matrix({{1}, {2}}), {SampleLabel::Infected}, TreeSpec{}),
                    LengthMismatch);
    TreeSpec bad;
    bad.max_depth = 0;
    CHECK_THROWS_AS(fit_tree(make_matrix({{1}, {2}}),
                             {SampleLabel::Infected, SampleLabel::NotInfected}, bad),
                    InvalidArgument);
}

TEST_CASE("all-zero logistic model scores one half everywhere") {
    LogisticModel zero;
    zero.weights = {0.0, 0.0};
    const std::vector<double> s = decision_score(ClassifierModel{zero}, make_matrix({{3, -4}, {0, 9}}));
    CHECK(s[0] == 0.5);
    CHECK(s[1] == 0.5);
    // exactly at the cutoff resolves to NotInfected
    const std::vector<SampleLabel> pred = predict(ClassifierModel{zero}, make_matrix({{1, 1}}));
    CHECK(pred[0] == SampleLabel::NotInfected);
}

TEST_CASE("logistic regression separates a one-dimensional threshold problem") {
    const Matrix X = make_matrix({{-2.0}, {-1.5}, {-1.0}, {1.0}, {1.5}, {2.0}});
    const std::vector<SampleLabel> y = {SampleLabel::NotInfected, SampleLabel::NotInfected,
                                        SampleLabel::NotInfected, SampleLabel::Infected,
                                        SampleLabel::Infected,    SampleLabel::Infected};
    LogisticSpec spec;
    spec.penalty = Penalty::None;
    spec.lambda = 0.0;
    const LogisticModel model = fit_logistic(X, y, spec);
    CHECK(model.weights[0] > 0.0);
    CHECK(agreement(predict(ClassifierModel{model}, X), y) == 6);

    // training cross-entropy beats the p = 1/2 baseline of ln 2
    const std::vector<double> p = decision_score(ClassifierModel{model}, X);
    double ce = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double target = y[i] == SampleLabel::Infected ? 1.0 : 0.0;
        ce += -(target * std::log(p[i]) + (1.0 - target) * std::log(1.0 - p[i]));
    }
    ce /= double(y.size());
    CHECK(ce < std::log(2.0));
}

TEST_CASE("crushing l1 penalty zeroes weights and leaves the prior intercept") {
    Rng rng(7);
    const std::size_t n = 10;
    Matrix X(n, 4);
    for (double& v : X.data) v = rng.uniform(-1.0, 1.0);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = i < 6 ? SampleLabel::Infected : SampleLabel::NotInfected;

    LogisticSpec spec;
    spec.penalty = Penalty::L1;
    spec.lambda = 1e6;
    const LogisticModel model = fit_logistic(X, y, spec);
    for (double w : model.weights) CHECK(w == 0.0);
    const double prior_logit = std::log(0.6 / 0.4);
    CHECK(model.intercept == Catch::Approx(prior_logit).margin(1e-3));
}

TEST_CASE("logistic regression refuses single-class training data") {
    const Matrix X = make_matrix({{1}, {2}});
    CHECK_THROWS_AS(fit_logistic(X, {SampleLabel::Infected, SampleLabel::Infected}, LogisticSpec{}),
                    SingleClassTraining);
    LogisticSpec bad;
    bad.lambda = -1.0;
    CHECK_THROWS_AS(fit_logistic(X, {SampleLabel::Infected, SampleLabel::NotInfected}, bad),
                    InvalidArgument);
}

TEST_CASE("single-tree forest without bagging predicts like a plain tree") {
    Rng rng(23);
    const std::size_t n = 20, d = 4;
    Matrix X(n, d);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
        y[i] = X(i, 2) > 0.1 ? SampleLabel::Infected : SampleLabel::NotInfected;
    }
    ForestSpec fs;
    fs.n_trees = 1;
    fs.bootstrap = false;
    fs.features_per_split = FeatureSubset::All;
    const ForestModel forest = fit_forest(X, y, fs, TrainSeed{9});
    const TreeModel tree = fit_tree(X, y, TreeSpec{fs.max_depth, fs.min_samples_leaf});
    CHECK(predict(ClassifierModel{forest}, X) == predict(ClassifierModel{tree}, X));
}

TEST_CASE("forest score is the infected vote fraction") {
    const auto leaf_tree = [](std::size_t not_infected, std::size_t infected) {
        TreeModel t;
        t.n_features = 1;
        TreeNode leaf;
        leaf.counts = {not_infected, infected};
        t.nodes.push_back(leaf);
        return t;
    };
    ForestModel forest;
    forest.n_features = 1;
    forest.trees = {leaf_tree(0, 1), leaf_tree(0, 1), leaf_tree(1, 0)};
    const std::vector<double> s = decision_score(ClassifierModel{forest}, make_matrix({{0.0}}));
    CHECK(s[0] == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("forest training is reproducible and importances form a distribution") {
    Rng rng(31);
    const std::size_t n = 30, d = 5;
    Matrix X(n, d);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
        y[i] = X(i, 3) > 0.0 ? SampleLabel::Infected : SampleLabel::NotInfected;
    }
    ForestSpec fs;
    fs.n_trees = 50;
    const ForestModel a = fit_forest(X, y, fs, TrainSeed{77});
    const ForestModel b = fit_forest(X, y, fs, TrainSeed{77});
    CHECK(decision_score(ClassifierModel{a}, X) == decision_score(ClassifierModel{b}, X));
    CHECK(a.importances == b.importances);

    double total = 0.0;
    for (double v : a.importances) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-9));
    const std::size_t top =
        std::size_t(std::max_element(a.importances.begin(), a.importances.end()) -
                    a.importances.begin());
    CHECK(top == 3);  // the only informative feature dominates

    CHECK_THROWS_AS(fit_forest(X, std::vector<SampleLabel>(n, SampleLabel::Infected), fs, TrainSeed{1}),
                    SingleClassTraining);
    ForestSpec bad;
    bad.n_trees = 0;
    CHECK_THROWS_AS(fit_forest(X, y, bad, TrainSeed{1}), InvalidArgument);
}

TEST_CASE("linear svm separates two opposite points") {
    const Matrix X = make_matrix({{-1.0}, {1.0}});
    const std::vector<SampleLabel> y = {SampleLabel::NotInfected, SampleLabel::Infected};
    const SvmModel model = fit_svm(X, y, SvmSpec{});
    const std::vector<double> s = decision_score(ClassifierModel{model}, X);
    CHECK(s[0] < 0.0);
    CHECK(s[1] > 0.0);
    CHECK(agreement(predict(ClassifierModel{model}, X), y) == 2);
}

TEST_CASE("linear svm cannot beat 3/4 on xor but the quadratic kernel solves it") {
    const std::vector<SampleLabel> labels = xor_labels();
    const SvmModel linear = fit_svm(xor_points(), labels, SvmSpec{});
    CHECK(agreement(predict(ClassifierModel{linear}, xor_points()), labels) <= 3);

    SvmSpec poly;
    poly.kernel = SvmKernel::Poly;
    poly.degree = 2;
    poly.gamma = 1.0;
    poly.coef0 = 1.0;
    poly.C = 10.0;
    const SvmModel quad = fit_svm(xor_points(), labels, poly);
    CHECK(agreement(predict(ClassifierModel{quad}, xor_points()), labels) == 4);
}

TEST_CASE("svm predictions follow the sign of the decision score") {
    Rng rng(19);
    const std::size_t n = 24, d = 3;
    Matrix X(n, d);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
        y[i] = X(i, 0) + X(i, 1) > 0.0 ? SampleLabel::Infected : SampleLabel::NotInfected;
    }
    const SvmModel model = fit_svm(X, y, SvmSpec{});

    Matrix probes(100, d);
    for (double& v : probes.data) v = rng.uniform(-2.0, 2.0);
    const std::vector<double> s = decision_score(ClassifierModel{model}, probes);
    const std::vector<SampleLabel> pred = predict(ClassifierModel{model}, probes);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(pred[i] == (s[i] > 0.0 ? SampleLabel::Infected : SampleLabel::NotInfected));
    }

    CHECK_THROWS_AS(fit_svm(X, std::vector<SampleLabel>(n, SampleLabel::NotInfected), SvmSpec{}),
                    SingleClassTraining);
    SvmSpec bad;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(fit_svm(X, y, bad), InvalidArgument);
    SvmSpec shallow;
    shallow.kernel = SvmKernel::Poly;
    shallow.degree = 1;
    CHECK_THROWS_AS(fit_svm(X, y, shallow), InvalidArgument);
}

TEST_CASE("polynomial decision score evaluates the kernel expansion") {
    SvmModel m;
    m.spec.kernel = SvmKernel::Poly;
    m.spec.degree = 2;
    m.spec.gamma = 0.5;
    m.spec.coef0 = 1.0;
    m.n_features = 2;
    m.support_vectors = make_matrix({{1.0, 2.0}});
    m.dual_coefs = {1.0};
    m.intercept = 0.0;
    const std::vector<double> s = decision_score(ClassifierModel{m}, make_matrix({{3.0, 4.0}}));
    CHECK(s[0] == Catch::Approx(42.25));  // (0.5 * 11 + 1)^2
}

TEST_CASE("plsda reproduces a label column exactly") {
    const Matrix X = make_matrix({{0.0}, {1.0}, {0.0}, {1.0}, {1.0}, {0.0}});
    std::vector<SampleLabel> y(6);
    for (std::size_t i = 0; i < 6; ++i) {
        y[i] = X(i, 0) > 0.5 ? SampleLabel::Infected : SampleLabel::NotInfected;
    }
    PlsdaSpec spec;
    spec.n_components = 1;
    const PlsdaModel model = fit_plsda(X, y, spec);
    const std::vector<double> s = decision_score(ClassifierModel{model}, X);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(s[i] == Catch::Approx(y[i] == SampleLabel::Infected ? 1.0 : 0.0).margin(1e-12));
    }
    CHECK(agreement(predict(ClassifierModel{model}, X), y) == 6);
}

TEST_CASE("first plsda weight vector is the normalized covariance direction") {
    Rng rng(47);
    const std::size_t n = 10, d = 4;
    Matrix X(n, d);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 2 ? SampleLabel::Infected : SampleLabel::NotInfected;
        for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    }
    const PlsdaModel model = fit_plsda(X, y, PlsdaSpec{});

    std::vector<double> mean(d, 0.0);
    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y_mean += y[i] == SampleLabel::Infected ? 1.0 : 0.0;
        for (std::size_t j = 0; j < d; ++j) mean[j] += X(i, j);
    }
    y_mean /= double(n);
    for (double& v : mean) v /= double(n);
    std::vector<double> w(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            w[j] += (X(i, j) - mean[j]) * ((y[i] == SampleLabel::Infected ? 1.0 : 0.0) - y_mean);
        }
    }
    double norm = 0.0;
    for (double v : w) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < d; ++j) {
        CHECK(model.weights(0, j) == Catch::Approx(w[j] / norm).margin(1e-12));
    }
}

TEST_CASE("plsda training scores are mutually orthogonal") {
    Rng rng(53);
    const std::size_t n = 12, d = 6;
    Matrix X(n, d);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.below(2) ? SampleLabel::Infected : SampleLabel::NotInfected;
        for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    }
    if (agreement(y, std::vector<SampleLabel>(n, y[0])) == n) y[0] = SampleLabel::Infected;
    PlsdaSpec spec;
    spec.n_components = 4;
    const PlsdaModel model = fit_plsda(X, y, spec);
    REQUIRE(model.achieved_components >= 2);

    // replay the deflating projection to recover the score vectors
    Matrix Xc(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) Xc(i, j) = X(i, j) - model.x_mean[j];
    }
    std::vector<std::vector<double>> scores;
    for (std::size_t a = 0; a < model.achieved_components; ++a) {
        std::vector<double> t(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) t[i] += Xc(i, j) * model.weights(a, j);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) Xc(i, j) -= t[i] * model.loadings(a, j);
        }
        scores.push_back(std::move(t));
    }
    for (std::size_t a = 0; a < scores.size(); ++a) {
        for (std::size_t b = a + 1; b < scores.size(); ++b) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dot += scores[a][i] * scores[b][i];
                na += scores[a][i] * scores[a][i];
                nb += scores[b][i] * scores[b][i];
            }
            CHECK(dot / std::sqrt(na * nb) == Catch::Approx(0.0).margin(1e-8));
        }
    }
}

TEST_CASE("full-rank plsda matches ordinary least squares") {
    Rng rng(61);
    const std::size_t n = 12, d = 4;
    Matrix X(n, d);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 3 == 0 ? SampleLabel::Infected : SampleLabel::NotInfected;
        for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    }
    PlsdaSpec spec;
    spec.n_components = d;
    const PlsdaModel model = fit_plsda(X, y, spec);
    REQUIRE(model.achieved_components == d);

    // OLS oracle via the normal equations on centered data
    std::vector<double> mean(d, 0.0);
    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y_mean += y[i] == SampleLabel::Infected ? 1.0 : 0.0;
        for (std::size_t j = 0; j < d; ++j) mean[j] += X(i, j);
    }
    y_mean /= double(n);
    for (double& v : mean) v /= double(n);
    Matrix gram(d, d, 0.0);
    std::vector<double> xty(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double yc = (y[i] == SampleLabel::Infected ? 1.0 : 0.0) - y_mean;
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = X(i, a) - mean[a];
            xty[a] += xa * yc;
            for (std::size_t b = 0; b < d; ++b) gram(a, b) += xa * (X(i, b) - mean[b]);
        }
    }
    const std::vector<double> beta = solve_linear(gram, xty);

    const std::vector<double> s = decision_score(ClassifierModel{model}, X);
    for (std::size_t i = 0; i < n; ++i) {
        double ols = y_mean;
        for (std::size_t j = 0; j < d; ++j) ols += beta[j] * (X(i, j) - mean[j]);
        CHECK(s[i] == Catch::Approx(ols).margin(1e-6));
    }
}

TEST_CASE("plsda degenerates gracefully on constant features") {
    const Matrix X(4, 3, 2.0);
    const std::vector<SampleLabel> y = {SampleLabel::Infected, SampleLabel::NotInfected,
                                        SampleLabel::Infected, SampleLabel::NotInfected};
    const PlsdaModel model = fit_plsda(X, y, PlsdaSpec{});
    CHECK(model.achieved_components == 0);
    const std::vector<double> s = decision_score(ClassifierModel{model}, X);
    CHECK(s[0] == Catch::Approx(0.5));
    // the 0.5 prior sits exactly on the threshold, which resolves NotInfected
    CHECK(predict(ClassifierModel{model}, X)[0] == SampleLabel::NotInfected);

    CHECK_THROWS_AS(fit_plsda(X, std::vector<SampleLabel>(4, SampleLabel::Infected), PlsdaSpec{}),
                    SingleClassTraining);
    PlsdaSpec bad;
    bad.n_components = 0;
    CHECK_THROWS_AS(fit_plsda(X, y, bad), InvalidArgument);
}

TEST_CASE("spec descriptions and kind names spell out the configuration") {
    CHECK(kind_name(ClassifierKind::DecisionTree) == "decision_tree");
    CHECK(kind_name(ClassifierKind::Plsda) == "plsda");
    CHECK(describe(ClassifierSpec{TreeSpec{}}) == "decision_tree(max_depth=8, min_samples_leaf=1)");
    const std::string forest = describe(ClassifierSpec{ForestSpec{}});
    CHECK(forest.find("random_forest(n_trees=100") != std::string::npos);
    CHECK(forest.find("features_per_split=sqrt") != std::string::npos);
    SvmSpec poly;
    poly.kernel = SvmKernel::Poly;
    const std::string svm = describe(ClassifierSpec{poly});
    CHECK(svm.find("kernel=poly") != std::string::npos);
    CHECK(svm.find("degree=2") != std::string::npos);
}

TEST_CASE("fit dispatches every spec to its own model family") {
    Rng rng(101);
    const std::size_t n = 12, d = 3;
    Matrix X(n, d);
    std::vector<SampleLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 2 ? SampleLabel::Infected : SampleLabel::NotInfected;
        for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    }
    ForestSpec small_forest;
    small_forest.n_trees = 5;
    const std::vector<ClassifierSpec> specs = {TreeSpec{}, LogisticSpec{}, small_forest, SvmSpec{},
                                               PlsdaSpec{}};
    for (const ClassifierSpec& spec : specs) {
        const ClassifierModel model = fit(X, y, spec, TrainSeed{3});
        CHECK(kind_of(model) == kind_of(spec));
        CHECK(model_dimension(model) == d);
        CHECK(decision_score(model, X).size() == n);
        CHECK_THROWS_AS(decision_score(model, Matrix(2, d + 1, 0.0)), DimensionMismatch);
    }
}
