#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gcims/core.hpp"
#include "gcims/errors.hpp"
#include "gcims/matrix.hpp"
#include "gcims/rng.hpp"

namespace gcims {

// ---------------------------------------------------------------------------
// classifier specs
// ---------------------------------------------------------------------------

enum class ClassifierKind : std::uint8_t {
    DecisionTree = 1,
    LogisticRegression = 2,
    RandomForest = 3,
    Svm = 4,
    Plsda = 5,
};

inline std::string kind_name(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::DecisionTree: return "decision_tree";
        case ClassifierKind::LogisticRegression: return "logistic_regression";
        case ClassifierKind::RandomForest: return "random_forest";
        case ClassifierKind::Svm: return "svm";
        case ClassifierKind::Plsda: return "plsda";
    }
    throw InvalidArgument("unknown classifier kind");
}

enum class Penalty : std::uint8_t { None = 0, L1 = 1, L2 = 2 };
enum class SvmKernel : std::uint8_t { Linear = 0, Poly = 1 };

/// How many candidate features a forest node examines.
enum class FeatureSubset : std::uint8_t { Sqrt = 0, All = 1, Fixed = 2 };

struct TreeSpec {
    std::size_t max_depth = 8;
    std::size_t min_samples_leaf = 1;
};

struct LogisticSpec {
    Penalty penalty = Penalty::L2;
    double lambda = 0.01;
    double learning_rate = 0.1;
    std::size_t max_iters = 1000;
    double tol = 1e-6;
};

struct ForestSpec {
    std::size_t n_trees = 100;
    std::size_t max_depth = 8;
    std::size_t min_samples_leaf = 1;
    bool bootstrap = true;
    FeatureSubset features_per_split = FeatureSubset::Sqrt;
    std::size_t fixed_features = 0;  // used when features_per_split == Fixed
};

struct SvmSpec {
    SvmKernel kernel = SvmKernel::Linear;
    std::size_t degree = 2;  // poly only
    double gamma = 1.0;
    double coef0 = 0.0;
    double C = 1.0;
    std::size_t max_iters = 20000;
    double tol = 1e-3;
};

struct PlsdaSpec {
    std::size_t n_components = 2;
    double threshold = 0.5;
};

using ClassifierSpec = std::variant<TreeSpec, LogisticSpec, ForestSpec, SvmSpec, PlsdaSpec>;

inline ClassifierKind kind_of(const ClassifierSpec& spec) {
    if (std::holds_alternative<TreeSpec>(spec)) return ClassifierKind::DecisionTree;
    if (std::holds_alternative<LogisticSpec>(spec)) return ClassifierKind::LogisticRegression;
    if (std::holds_alternative<ForestSpec>(spec)) return ClassifierKind::RandomForest;
    if (std::holds_alternative<SvmSpec>(spec)) return ClassifierKind::Svm;
    return ClassifierKind::Plsda;
}

inline void validate_spec(const TreeSpec& s) {
    if (s.max_depth < 1) throw InvalidArgument("decision_tree: max_depth must be >= 1");
    if (s.min_samples_leaf < 1) throw InvalidArgument("decision_tree: min_samples_leaf must be >= 1");
}
inline void validate_spec(const LogisticSpec& s) {
    if (s.lambda < 0.0) throw InvalidArgument("logistic_regression: lambda must be >= 0");
    if (!(s.learning_rate > 0.0)) throw InvalidArgument("logistic_regression: learning_rate must be > 0");
    if (s.max_iters < 1) throw InvalidArgument("logistic_regression: max_iters must be >= 1");
    if (!(s.tol > 0.0)) throw InvalidArgument("logistic_regression: tol must be > 0");
}
inline void validate_spec(const ForestSpec& s) {
    if (s.n_trees < 1) throw InvalidArgument("random_forest: n_trees must be >= 1");
    if (s.max_depth < 1) throw InvalidArgument("random_forest: max_depth must be >= 1");
    if (s.min_samples_leaf < 1) throw InvalidArgument("random_forest: min_samples_leaf must be >= 1");
    if (s.features_per_split == FeatureSubset::Fixed && s.fixed_features < 1) {
        throw InvalidArgument("random_forest: fixed feature count must be >= 1");
    }
}
inline void validate_spec(const SvmSpec& s) {
    if (s.kernel == SvmKernel::Poly && s.degree < 2) throw InvalidArgument("svm: degree must be >= 2");
    if (!(s.gamma > 0.0)) throw InvalidArgument("svm: gamma must be > 0");
    if (!(s.C > 0.0)) throw InvalidArgument("svm: C must be > 0");
    if (s.max_iters < 1) throw InvalidArgument("svm: max_iters must be >= 1");
    if (!(s.tol > 0.0)) throw InvalidArgument("svm: tol must be > 0");
}
inline void validate_spec(const PlsdaSpec& s) {
    if (s.n_components < 1) throw InvalidArgument("plsda: n_components must be >= 1");
    if (!std::isfinite(s.threshold)) throw InvalidArgument("plsda: threshold must be finite");
}
inline void validate_spec(const ClassifierSpec& spec) {
    std::visit([](const auto& s) { validate_spec(s); }, spec);
}

inline std::string describe(const ClassifierSpec& spec) {
    std::ostringstream out;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, TreeSpec>) {
                out << "decision_tree(max_depth=" << s.max_depth
                    << ", min_samples_leaf=" << s.min_samples_leaf << ")";
            } else if constexpr (std::is_same_v<T, LogisticSpec>) {
                const char* pen = s.penalty == Penalty::L1 ? "l1" : s.penalty == Penalty::L2 ? "l2" : "none";
                out << "logistic_regression(penalty=" << pen << ", lambda=" << s.lambda
                    << ", learning_rate=" << s.learning_rate << ", max_iters=" << s.max_iters
                    << ", tol=" << s.tol << ")";
            } else if constexpr (std::is_same_v<T, ForestSpec>) {
                out << "random_forest(n_trees=" << s.n_trees << ", max_depth=" << s.max_depth
                    << ", min_samples_leaf=" << s.min_samples_leaf
                    << ", bootstrap=" << (s.bootstrap ? "on" : "off") << ", features_per_split=";
                if (s.features_per_split == FeatureSubset::Sqrt) {
                    out << "sqrt";
                } else if (s.features_per_split == FeatureSubset::All) {
                    out << "all";
                } else {
                    out << s.fixed_features;
                }
                out << ")";
            } else if constexpr (std::is_same_v<T, SvmSpec>) {
                out << "svm(kernel=" << (s.kernel == SvmKernel::Linear ? "linear" : "poly");
                if (s.kernel == SvmKernel::Poly) out << ", degree=" << s.degree;
                out << ", gamma=" << s.gamma << ", coef0=" << s.coef0 << ", C=" << s.C
                    << ", max_iters=" << s.max_iters << ", tol=" << s.tol << ")";
            } else {
                out << "plsda(n_components=" << s.n_components << ", threshold=" << s.threshold << ")";
            }
        },
        spec);
    return out.str();
}

/// Master seed for everything stochastic in training; per-tree streams are
/// derived from it, so results never depend on execution order.
struct TrainSeed {
    std::uint64_t master_seed = 0;
};

// ---------------------------------------------------------------------------
// impurity
// ---------------------------------------------------------------------------

/// Gini impurity 1 - sum(p_c^2); 0 for a pure node, 0.5 at a two-class
/// fifty-fifty split.
inline double gini_impurity(const std::vector<std::size_t>& class_counts) {
    std::size_t total = 0;
    for (std::size_t c : class_counts) total += c;
    if (total == 0) throw EmptyNode("gini_impurity: no samples in node");
    double sum_sq = 0.0;
    for (std::size_t c : class_counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

namespace detail {

inline double gini2(std::size_t n0, std::size_t n1) {
    const double total = static_cast<double>(n0 + n1);
    const double p0 = static_cast<double>(n0) / total;
    const double p1 = static_cast<double>(n1) / total;
    return 1.0 - (p0 * p0 + p1 * p1);
}

inline std::vector<int> to_binary_labels(const std::vector<SampleLabel>& y) {
    std::vector<int> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] == SampleLabel::Infected ? 1 : 0;
    return out;
}

inline void check_training_inputs(const Matrix& X, const std::vector<SampleLabel>& y) {
    if (X.rows == 0 || X.cols == 0) throw InvalidArgument("training matrix must be nonempty");
    if (X.rows != y.size()) {
        throw LengthMismatch("labels length " + std::to_string(y.size()) + " != sample count " +
                             std::to_string(X.rows));
    }
}

inline void check_both_classes(const std::vector<SampleLabel>& y, const char* who) {
    bool seen0 = false, seen1 = false;
    for (SampleLabel l : y) (l == SampleLabel::Infected ? seen1 : seen0) = true;
    if (!seen0 || !seen1) {
        throw SingleClassTraining(std::string(who) + ": training data contains a single class");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// decision tree
// ---------------------------------------------------------------------------

/// Flat binary-tree node; left < 0 marks a leaf. counts holds the training
/// samples that reached the node as {not infected, infected}.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<std::size_t, 2> counts = {0, 0};

    bool is_leaf() const { return left < 0; }
    SampleLabel majority() const {
        return counts[1] > counts[0] ? SampleLabel::Infected : SampleLabel::NotInfected;
    }
};

struct TreeModel {
    TreeSpec spec;
    std::size_t n_features = 0;
    std::vector<TreeNode> nodes;  // node 0 is the root
};

namespace detail {

struct TreeBuilder {
    const Matrix& X;
    const std::vector<int>& y;
    TreeSpec spec;
    Rng* rng = nullptr;             // forest mode: per-node feature subsets
    std::size_t features_per_split; // == X.cols when rng is null
    std::vector<TreeNode> nodes;

    // Picks the features this node may split on: everything in tree mode, a
    // seeded draw without replacement in forest mode (returned sorted so the
    // lower-index tie-break stays meaningful).
    std::vector<std::size_t> candidate_features() {
        std::vector<std::size_t> all(X.cols);
        std::iota(all.begin(), all.end(), std::size_t{0});
        if (rng == nullptr || features_per_split >= X.cols) return all;
        for (std::size_t i = 0; i < features_per_split; ++i) {
            const std::size_t j = i + rng->below(X.cols - i);
            std::swap(all[i], all[j]);
        }
        all.resize(features_per_split);
        std::sort(all.begin(), all.end());
        return all;
    }

    int build(std::vector<std::size_t>& indices, std::size_t depth) {
        TreeNode node;
        for (std::size_t i : indices) ++node.counts[static_cast<std::size_t>(y[i])];

        const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
        if (pure || depth >= spec.max_depth || indices.size() < 2 * spec.min_samples_leaf) {
            // In forest mode the subset draw still happens on internal nodes
            // only, so skipping it here keeps leaves cheap and deterministic.
            nodes.push_back(node);
            return static_cast<int>(nodes.size() - 1);
        }

        // Best split: lowest weighted child Gini; ties fall to the lower
        // feature index, then the lower threshold (guaranteed by scan order
        // and strict comparison). A zero-gain split is still taken — XOR-like
        // data needs the first cut even though it looks useless on its own.
        double best_score = std::numeric_limits<double>::infinity();
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        std::vector<std::pair<double, int>> column(indices.size());
        for (std::size_t f : candidate_features()) {
            for (std::size_t i = 0; i < indices.size(); ++i) {
                column[i] = {X(indices[i], f), y[indices[i]]};
            }
            std::sort(column.begin(), column.end());

            std::size_t left0 = 0, left1 = 0;
            const std::size_t total0 = node.counts[0], total1 = node.counts[1];
            const double total = static_cast<double>(indices.size());
            for (std::size_t pos = 0; pos + 1 < column.size(); ++pos) {
                ++(column[pos].second == 1 ? left1 : left0);
                if (column[pos].first == column[pos + 1].first) continue;  // not a boundary
                const std::size_t nl = left0 + left1;
                const std::size_t nr = indices.size() - nl;
                if (nl < spec.min_samples_leaf || nr < spec.min_samples_leaf) continue;
                const double score = (static_cast<double>(nl) * gini2(left0, left1) +
                                      static_cast<double>(nr) * gini2(total0 - left0, total1 - left1)) /
                                     total;
                if (score < best_score) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = 0.5 * (column[pos].first + column[pos + 1].first);
                    found = true;
                }
            }
        }

        if (!found) {
            nodes.push_back(node);
            return static_cast<int>(nodes.size() - 1);
        }

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : indices) {
            (X(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
        }
        node.feature = static_cast<int>(best_feature);
        node.threshold = best_threshold;
        nodes.push_back(node);
        const int self = static_cast<int>(nodes.size() - 1);
        indices.clear();
        indices.shrink_to_fit();

        const int left = build(left_idx, depth + 1);
        const int right = build(right_idx, depth + 1);
        nodes[self].left = left;
        nodes[self].right = right;
        return self;
    }
};

inline const TreeNode& descend(const TreeModel& model, const Matrix& X, std::size_t row) {
    const TreeNode* node = &model.nodes[0];
    while (!node->is_leaf()) {
        node = X(row, static_cast<std::size_t>(node->feature)) <= node->threshold
                   ? &model.nodes[static_cast<std::size_t>(node->left)]
                   : &model.nodes[static_cast<std::size_t>(node->right)];
    }
    return *node;
}

inline TreeModel fit_tree_impl(const Matrix& X, const std::vector<int>& y, const TreeSpec& spec,
                               Rng* rng, std::size_t features_per_split) {
    TreeBuilder builder{X, y, spec, rng, features_per_split, {}};
    std::vector<std::size_t> indices(X.rows);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    builder.build(indices, 0);
    TreeModel model;
    model.spec = spec;
    model.n_features = X.cols;
    model.nodes = std::move(builder.nodes);
    return model;
}

}  // namespace detail

/// Greedy CART with Gini impurity. Split candidates are midpoints between
/// consecutive distinct sorted values of each feature.
inline TreeModel fit_tree(const Matrix& X, const std::vector<SampleLabel>& y, const TreeSpec& spec) {
    validate_spec(spec);
    detail::check_training_inputs(X, y);
    const std::vector<int> yb = detail::to_binary_labels(y);
    return detail::fit_tree_impl(X, yb, spec, nullptr, X.cols);
}

// ---------------------------------------------------------------------------
// logistic regression
// ---------------------------------------------------------------------------

struct LogisticModel {
    LogisticSpec spec;
    std::vector<double> weights;
    double intercept = 0.0;
    std::size_t iterations = 0;  // steps actually taken
};

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace detail

/// Full-batch gradient descent on mean cross-entropy plus the configured
/// penalty. Weights start at zero; the intercept is never penalized. L1 is
/// handled by a soft-threshold (proximal) step, and the stop test uses the
/// proximal-gradient mapping so it stays meaningful for all penalties.
inline LogisticModel fit_logistic(const Matrix& X, const std::vector<SampleLabel>& y,
                                  const LogisticSpec& spec) {
    validate_spec(spec);
    detail::check_training_inputs(X, y);
    detail::check_both_classes(y, "logistic_regression");

    const std::size_t n = X.rows, d = X.cols;
    const std::vector<int> yb = detail::to_binary_labels(y);
    std::vector<double> w(d, 0.0), grad(d), w_new(d), residual(n);
    double b = 0.0;
    std::size_t iterations = 0;

    for (std::size_t iter = 0; iter < spec.max_iters; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * X(i, j);
            residual[i] = detail::sigmoid(z) - static_cast<double>(yb[i]);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) grad[j] += residual[i] * X(i, j);
            grad_b += residual[i];
        }
        for (double& g : grad) g /= static_cast<double>(n);
        grad_b /= static_cast<double>(n);

        if (spec.penalty == Penalty::L2) {
            for (std::size_t j = 0; j < d; ++j) grad[j] += spec.lambda * w[j];
        }
        for (std::size_t j = 0; j < d; ++j) w_new[j] = w[j] - spec.learning_rate * grad[j];
        if (spec.penalty == Penalty::L1) {
            for (double& v : w_new) v = detail::soft_threshold(v, spec.learning_rate * spec.lambda);
        }
        const double b_new = b - spec.learning_rate * grad_b;

        double step_sq = (b - b_new) * (b - b_new);
        for (std::size_t j = 0; j < d; ++j) step_sq += (w[j] - w_new[j]) * (w[j] - w_new[j]);
        w.swap(w_new);
        b = b_new;
        ++iterations;
        if (std::sqrt(step_sq) / spec.learning_rate < spec.tol) break;
    }

    LogisticModel model;
    model.spec = spec;
    model.weights = std::move(w);
    model.intercept = b;
    model.iterations = iterations;
    return model;
}

// ---------------------------------------------------------------------------
// random forest
// ---------------------------------------------------------------------------

struct ForestModel {
    ForestSpec spec;
    std::uint64_t master_seed = 0;
    std::size_t n_features = 0;
    std::vector<TreeModel> trees;
    std::vector<double> importances;  // sums to 1 when any split occurred
};

namespace detail {

inline std::size_t resolve_features_per_split(const ForestSpec& spec, std::size_t d) {
    switch (spec.features_per_split) {
        case FeatureSubset::Sqrt:
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(
                                                static_cast<double>(d)))));
        case FeatureSubset::All: return d;
        case FeatureSubset::Fixed: return std::min(spec.fixed_features, d);
    }
    return d;
}

// Total impurity decrease contributed by each feature, weighted by node
// sample counts.
inline void accumulate_importance(const TreeModel& tree, std::vector<double>& acc) {
    for (const TreeNode& node : tree.nodes) {
        if (node.is_leaf()) continue;
        const TreeNode& l = tree.nodes[static_cast<std::size_t>(node.left)];
        const TreeNode& r = tree.nodes[static_cast<std::size_t>(node.right)];
        const auto weight = [](const TreeNode& nd) {
            return static_cast<double>(nd.counts[0] + nd.counts[1]);
        };
        const double decrease = weight(node) * gini2(node.counts[0], node.counts[1]) -
                                weight(l) * gini2(l.counts[0], l.counts[1]) -
                                weight(r) * gini2(r.counts[0], r.counts[1]);
        acc[static_cast<std::size_t>(node.feature)] += decrease;
    }
}

}  // namespace detail

/// Bagged CART ensemble. Tree t draws its bootstrap sample and per-node
/// feature subsets from a dedicated stream hashed off the master seed, so the
/// model is identical no matter how or in what order trees get built.
inline ForestModel fit_forest(const Matrix& X, const std::vector<SampleLabel>& y,
                              const ForestSpec& spec, TrainSeed seed) {
    validate_spec(spec);
    detail::check_training_inputs(X, y);
    detail::check_both_classes(y, "random_forest");

    const std::vector<int> yb = detail::to_binary_labels(y);
    const std::size_t m = detail::resolve_features_per_split(spec, X.cols);
    const TreeSpec tree_spec{spec.max_depth, spec.min_samples_leaf};

    ForestModel model;
    model.spec = spec;
    model.master_seed = seed.master_seed;
    model.n_features = X.cols;
    model.trees.reserve(spec.n_trees);

    std::vector<double> importance_acc(X.cols, 0.0);
    for (std::size_t t = 0; t < spec.n_trees; ++t) {
        Rng rng(derive_seed(seed.master_seed, t));

        Matrix Xt = X;
        std::vector<int> yt = yb;
        if (spec.bootstrap) {
            Xt = Matrix(X.rows, X.cols);
            for (std::size_t i = 0; i < X.rows; ++i) {
                const std::size_t pick = rng.below(X.rows);
                for (std::size_t j = 0; j < X.cols; ++j) Xt(i, j) = X(pick, j);
                yt[i] = yb[pick];
            }
        }
        TreeModel tree = detail::fit_tree_impl(Xt, yt, tree_spec, &rng, m);
        detail::accumulate_importance(tree, importance_acc);
        model.trees.push_back(std::move(tree));
    }

    double total = 0.0;
    for (double v : importance_acc) total += v;
    if (total > 0.0) {
        for (double& v : importance_acc) v /= total;
    }
    model.importances = std::move(importance_acc);
    return model;
}

// ---------------------------------------------------------------------------
// support vector machine
// ---------------------------------------------------------------------------

struct SvmModel {
    SvmSpec spec;
    // linear kernel
    std::vector<double> weights;
    // poly kernel: dual coefficients alpha_i * y_i against stored vectors
    Matrix support_vectors{0, 0};
    std::vector<double> dual_coefs;
    double intercept = 0.0;
    std::size_t n_features = 0;
    std::size_t iterations = 0;
};

namespace detail {

inline double poly_kernel(const double* a, const double* b, std::size_t d, const SvmSpec& spec) {
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += a[j] * b[j];
    double base = spec.gamma * dot + spec.coef0;
    double out = 1.0;
    for (std::size_t p = 0; p < spec.degree; ++p) out *= base;
    return out;
}

/// Deterministic projected-subgradient descent on the bias-augmented primal
///   lambda/2 * ||(w,b)||^2 + mean hinge,  lambda = 1/(C*n),
/// with step 1/(lambda*t) and projection onto the ball of radius
/// 1/sqrt(lambda) that contains the optimum. Regularizing b is the price of
/// an exact projection step; tests only rely on margins, not on b itself.
inline SvmModel fit_svm_linear(const Matrix& X, const std::vector<int>& ypm, const SvmSpec& spec) {
    const std::size_t n = X.rows, d = X.cols;
    const double lambda = 1.0 / (spec.C * static_cast<double>(n));
    const double radius = 1.0 / std::sqrt(lambda);

    std::vector<double> w(d + 1, 0.0), g(d + 1);
    std::size_t iterations = 0;
    for (std::size_t t = 1; t <= spec.max_iters; ++t) {
        for (std::size_t j = 0; j <= d; ++j) g[j] = lambda * w[j];
        for (std::size_t i = 0; i < n; ++i) {
            double margin = w[d];
            for (std::size_t j = 0; j < d; ++j) margin += w[j] * X(i, j);
            margin *= ypm[i];
            if (margin < 1.0) {
                const double scale = static_cast<double>(ypm[i]) / static_cast<double>(n);
                for (std::size_t j = 0; j < d; ++j) g[j] -= scale * X(i, j);
                g[d] -= scale;
            }
        }
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        double norm_sq = 0.0, step_sq = 0.0;
        for (std::size_t j = 0; j <= d; ++j) {
            const double next = w[j] - eta * g[j];
            step_sq += (next - w[j]) * (next - w[j]);
            w[j] = next;
            norm_sq += next * next;
        }
        if (norm_sq > radius * radius) {
            const double shrink = radius / std::sqrt(norm_sq);
            for (double& v : w) v *= shrink;
        }
        ++iterations;
        if (std::sqrt(step_sq) <= spec.tol * (1.0 + std::sqrt(norm_sq))) break;
    }

    SvmModel model;
    model.spec = spec;
    model.weights.assign(w.begin(), w.begin() + static_cast<long>(d));
    model.intercept = w[d];
    model.n_features = d;
    model.iterations = iterations;
    return model;
}

/// Dual coordinate ascent with deterministic maximal-violating-pair working
/// sets (first-order selection, ties to the lower index). Updates move along
/// the equality constraint sum(alpha_i y_i) = 0, so it holds throughout.
inline SvmModel fit_svm_poly(const Matrix& X, const std::vector<int>& ypm, const SvmSpec& spec) {
    const std::size_t n = X.rows, d = X.cols;

    Matrix K(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double k = poly_kernel(&X.data[i * d], &X.data[j * d], d, spec);
            K(i, j) = k;
            K(j, i) = k;
        }
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - sum(a), Q_ij = y_i y_j K_ij
    std::size_t iterations = 0;

    const auto in_up = [&](std::size_t i) {
        return (ypm[i] > 0 && alpha[i] < spec.C) || (ypm[i] < 0 && alpha[i] > 0.0);
    };
    const auto in_low = [&](std::size_t i) {
        return (ypm[i] < 0 && alpha[i] < spec.C) || (ypm[i] > 0 && alpha[i] > 0.0);
    };

    double m_up = 0.0, m_low = 0.0;
    while (iterations < spec.max_iters) {
        long i_sel = -1, j_sel = -1;
        m_up = -std::numeric_limits<double>::infinity();
        m_low = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = -static_cast<double>(ypm[i]) * grad[i];
            if (in_up(i) && v > m_up) {
                m_up = v;
                i_sel = static_cast<long>(i);
            }
            if (in_low(i) && v < m_low) {
                m_low = v;
                j_sel = static_cast<long>(i);
            }
        }
        if (i_sel < 0 || j_sel < 0 || m_up - m_low <= spec.tol) break;

        const std::size_t i = static_cast<std::size_t>(i_sel), j = static_cast<std::size_t>(j_sel);
        // Move alpha_i by y_i*t and alpha_j by -y_j*t; the unconstrained
        // optimum is t* = (m_up - m_low) / (K_ii + K_jj - 2 K_ij).
        double curvature = K(i, i) + K(j, j) - 2.0 * K(i, j);
        if (curvature <= 1e-12) curvature = 1e-12;
        double t_step = (m_up - m_low) / curvature;

        const auto bounds = [&](int yv, double a) {
            // allowed t so that a + y*t stays in [0, C]
            return yv > 0 ? std::pair<double, double>{-a, spec.C - a}
                          : std::pair<double, double>{a - spec.C, a};
        };
        const auto [ilo, ihi] = bounds(ypm[i], alpha[i]);
        auto [jlo, jhi] = bounds(-ypm[j], alpha[j]);  // alpha_j moves by -y_j*t
        t_step = std::min(t_step, std::min(ihi, jhi));
        t_step = std::max(t_step, std::max(ilo, jlo));

        const double dai = static_cast<double>(ypm[i]) * t_step;
        const double daj = -static_cast<double>(ypm[j]) * t_step;
        alpha[i] += dai;
        alpha[j] += daj;
        for (std::size_t k = 0; k < n; ++k) {
            grad[k] += static_cast<double>(ypm[k]) *
                       (static_cast<double>(ypm[i]) * K(k, i) * dai +
                        static_cast<double>(ypm[j]) * K(k, j) * daj);
        }
        ++iterations;
    }

    // Intercept: average KKT value over free vectors, else the midpoint of
    // the feasible interval [m_low, m_up] (recomputed so it is never stale
    // when the iteration cap cut the loop short).
    m_up = -std::numeric_limits<double>::infinity();
    m_low = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = -static_cast<double>(ypm[i]) * grad[i];
        if (in_up(i)) m_up = std::max(m_up, v);
        if (in_low(i)) m_low = std::min(m_low, v);
    }
    double b = 0.0;
    std::size_t free_count = 0;
    const double bound_eps = 1e-8 * spec.C;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > bound_eps && alpha[i] < spec.C - bound_eps) {
            b += -static_cast<double>(ypm[i]) * grad[i];
            ++free_count;
        }
    }
    if (free_count > 0) {
        b /= static_cast<double>(free_count);
    } else {
        b = 0.5 * (m_up + m_low);
        if (!std::isfinite(b)) b = 0.0;  // degenerate: nothing selectable
    }

    SvmModel model;
    model.spec = spec;
    model.n_features = d;
    model.iterations = iterations;
    model.intercept = b;
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > bound_eps) sv.push_back(i);
    }
    model.support_vectors = Matrix(sv.size(), d);
    model.dual_coefs.resize(sv.size());
    for (std::size_t s = 0; s < sv.size(); ++s) {
        for (std::size_t j = 0; j < d; ++j) model.support_vectors(s, j) = X(sv[s], j);
        model.dual_coefs[s] = alpha[sv[s]] * static_cast<double>(ypm[sv[s]]);
    }
    return model;
}

}  // namespace detail

inline SvmModel fit_svm(const Matrix& X, const std::vector<SampleLabel>& y, const SvmSpec& spec,
                        TrainSeed /*seed: both solvers are deterministic*/ = {}) {
    validate_spec(spec);
    detail::check_training_inputs(X, y);
    detail::check_both_classes(y, "svm");

    std::vector<int> ypm(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) ypm[i] = y[i] == SampleLabel::Infected ? +1 : -1;
    return spec.kernel == SvmKernel::Linear ? detail::fit_svm_linear(X, ypm, spec)
                                            : detail::fit_svm_poly(X, ypm, spec);
}

// ---------------------------------------------------------------------------
// PLS-DA
// ---------------------------------------------------------------------------

struct PlsdaModel {
    PlsdaSpec spec;
    std::size_t n_features = 0;
    std::size_t achieved_components = 0;  // may stop short of the request
    Matrix weights{0, 0};   // achieved x d, unit rows
    Matrix loadings{0, 0};  // achieved x d
    std::vector<double> y_loadings;
    std::vector<double> x_mean;
    double y_mean = 0.0;
};

/// PLS1 by NIPALS on centered X and {0,1}-coded centered y: each component
/// takes the covariance direction w_a = X'y (unit norm), scores t_a = X w_a,
/// loadings p_a = X't_a / t't, regression q_a = y't_a / t't, then deflates
/// both X and y. Stops early once a score vector degenerates.
inline PlsdaModel fit_plsda(const Matrix& X, const std::vector<SampleLabel>& y, const PlsdaSpec& spec) {
    validate_spec(spec);
    detail::check_training_inputs(X, y);
    detail::check_both_classes(y, "plsda");

    const std::size_t n = X.rows, d = X.cols;
    PlsdaModel model;
    model.spec = spec;
    model.n_features = d;
    model.x_mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) model.x_mean[j] += X(i, j);
    }
    for (double& v : model.x_mean) v /= static_cast<double>(n);

    Matrix Xc(n, d);
    std::vector<double> yc(n);
    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) y_mean += y[i] == SampleLabel::Infected ? 1.0 : 0.0;
    y_mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        yc[i] = (y[i] == SampleLabel::Infected ? 1.0 : 0.0) - y_mean;
        for (std::size_t j = 0; j < d; ++j) Xc(i, j) = X(i, j) - model.x_mean[j];
    }
    model.y_mean = y_mean;

    std::vector<std::vector<double>> weights, loadings;
    std::vector<double> w(d), t(n), p(d);
    for (std::size_t a = 0; a < spec.n_components; ++a) {
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += Xc(i, j) * yc[i];
            w[j] = acc;
        }
        double w_norm = 0.0;
        for (double v : w) w_norm += v * v;
        w_norm = std::sqrt(w_norm);
        if (w_norm < 1e-12) break;
        for (double& v : w) v /= w_norm;

        double tt = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += Xc(i, j) * w[j];
            t[i] = acc;
            tt += acc * acc;
        }
        if (tt < 1e-12) break;

        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i) q += yc[i] * t[i];
        q /= tt;
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += Xc(i, j) * t[i];
            p[j] = acc / tt;
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) Xc(i, j) -= t[i] * p[j];
            yc[i] -= q * t[i];
        }
        weights.push_back(w);
        loadings.push_back(p);
        model.y_loadings.push_back(q);
    }

    model.achieved_components = weights.size();
    model.weights = Matrix(weights.size(), d);
    model.loadings = Matrix(loadings.size(), d);
    for (std::size_t a = 0; a < weights.size(); ++a) {
        for (std::size_t j = 0; j < d; ++j) {
            model.weights(a, j) = weights[a][j];
            model.loadings(a, j) = loadings[a][j];
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// common predict / score contract
// ---------------------------------------------------------------------------

using ClassifierModel = std::variant<TreeModel, LogisticModel, ForestModel, SvmModel, PlsdaModel>;

inline ClassifierKind kind_of(const ClassifierModel& model) {
    if (std::holds_alternative<TreeModel>(model)) return ClassifierKind::DecisionTree;
    if (std::holds_alternative<LogisticModel>(model)) return ClassifierKind::LogisticRegression;
    if (std::holds_alternative<ForestModel>(model)) return ClassifierKind::RandomForest;
    if (std::holds_alternative<SvmModel>(model)) return ClassifierKind::Svm;
    return ClassifierKind::Plsda;
}

inline ClassifierSpec spec_of(const ClassifierModel& model) {
    return std::visit([](const auto& m) -> ClassifierSpec { return m.spec; }, model);
}

inline std::size_t model_dimension(const ClassifierModel& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticModel>) {
                return m.weights.size();
            } else {
                return m.n_features;
            }
        },
        model);
}

/// Score over which every model classifies: higher always means "more
/// Infected". Probability for logistic, leaf/vote Infected fraction for
/// tree and forest, signed margin for SVM, regression response for PLS-DA.
inline std::vector<double> decision_score(const ClassifierModel& model, const Matrix& X) {
    if (X.cols != model_dimension(model)) {
        throw DimensionMismatch("predict: expected " + std::to_string(model_dimension(model)) +
                                " features, got " + std::to_string(X.cols));
    }
    std::vector<double> scores(X.rows);
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, TreeModel>) {
                for (std::size_t i = 0; i < X.rows; ++i) {
                    const TreeNode& leaf = detail::descend(m, X, i);
                    scores[i] = static_cast<double>(leaf.counts[1]) /
                                static_cast<double>(leaf.counts[0] + leaf.counts[1]);
                }
            } else if constexpr (std::is_same_v<T, LogisticModel>) {
                for (std::size_t i = 0; i < X.rows; ++i) {
                    double z = m.intercept;
                    for (std::size_t j = 0; j < X.cols; ++j) z += m.weights[j] * X(i, j);
                    scores[i] = detail::sigmoid(z);
                }
            } else if constexpr (std::is_same_v<T, ForestModel>) {
                for (std::size_t i = 0; i < X.rows; ++i) {
                    std::size_t votes = 0;
                    for (const TreeModel& tree : m.trees) {
                        if (detail::descend(tree, X, i).majority() == SampleLabel::Infected) ++votes;
                    }
                    scores[i] = static_cast<double>(votes) / static_cast<double>(m.trees.size());
                }
            } else if constexpr (std::is_same_v<T, SvmModel>) {
                if (m.spec.kernel == SvmKernel::Linear) {
                    for (std::size_t i = 0; i < X.rows; ++i) {
                        double z = m.intercept;
                        for (std::size_t j = 0; j < X.cols; ++j) z += m.weights[j] * X(i, j);
                        scores[i] = z;
                    }
                } else {
                    for (std::size_t i = 0; i < X.rows; ++i) {
                        double z = m.intercept;
                        for (std::size_t s = 0; s < m.support_vectors.rows; ++s) {
                            z += m.dual_coefs[s] *
                                 detail::poly_kernel(&m.support_vectors.data[s * X.cols],
                                                     &X.data[i * X.cols], X.cols, m.spec);
                        }
                        scores[i] = z;
                    }
                }
            } else {  // PLS-DA: iterative deflating projection
                std::vector<double> xc(X.cols);
                for (std::size_t i = 0; i < X.rows; ++i) {
                    for (std::size_t j = 0; j < X.cols; ++j) xc[j] = X(i, j) - m.x_mean[j];
                    double yhat = m.y_mean;
                    for (std::size_t a = 0; a < m.achieved_components; ++a) {
                        double t = 0.0;
                        for (std::size_t j = 0; j < X.cols; ++j) t += xc[j] * m.weights(a, j);
                        yhat += m.y_loadings[a] * t;
                        for (std::size_t j = 0; j < X.cols; ++j) xc[j] -= t * m.loadings(a, j);
                    }
                    scores[i] = yhat;
                }
            }
        },
        model);
    return scores;
}

/// Classification cutoff matching decision_score's scale; scores exactly at
/// the cutoff go to NotInfected.
inline double decision_cutoff(const ClassifierModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, PlsdaModel>) {
                return m.spec.threshold;
            } else {
                (void)m;
                return 0.5;
            }
        },
        model);
}

inline std::vector<SampleLabel> predict(const ClassifierModel& model, const Matrix& X) {
    const std::vector<double> scores = decision_score(model, X);
    const double cutoff = decision_cutoff(model);
    std::vector<SampleLabel> labels(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        labels[i] = scores[i] > cutoff ? SampleLabel::Infected : SampleLabel::NotInfected;
    }
    return labels;
}

/// Single entry point used by grid search and the CLI.
inline ClassifierModel fit(const Matrix& X, const std::vector<SampleLabel>& y,
                           const ClassifierSpec& spec, TrainSeed seed) {
    return std::visit(
        [&](const auto& s) -> ClassifierModel {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, TreeSpec>) {
                return fit_tree(X, y, s);
            } else if constexpr (std::is_same_v<T, LogisticSpec>) {
                return fit_logistic(X, y, s);
            } else if constexpr (std::is_same_v<T, ForestSpec>) {
                return fit_forest(X, y, s, seed);
            } else if constexpr (std::is_same_v<T, SvmSpec>) {
                return fit_svm(X, y, s, seed);
            } else {
                return fit_plsda(X, y, s);
            }
        },
        spec);
}

}  // namespace gcims
