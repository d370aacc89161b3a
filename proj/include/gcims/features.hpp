#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "gcims/core.hpp"
#include "gcims/errors.hpp"
#include "gcims/matrix.hpp"
#include "gcims/models.hpp"

namespace gcims {

// ---------------------------------------------------------------------------
// feature matrix
// ---------------------------------------------------------------------------

/// n_samples x n_features table with names for both axes. Finite values and
/// unique feature names are enforced at construction.
struct FeatureMatrix {
    Matrix values{0, 0};
    std::vector<std::string> feature_names;
    std::vector<std::string> sample_ids;

    FeatureMatrix() = default;
    FeatureMatrix(Matrix v, std::vector<std::string> names, std::vector<std::string> ids)
        : values(std::move(v)), feature_names(std::move(names)), sample_ids(std::move(ids)) {
        if (feature_names.size() != values.cols) {
            throw DimensionMismatch("feature matrix: " + std::to_string(feature_names.size()) +
                                    " names for " + std::to_string(values.cols) + " columns");
        }
        if (sample_ids.size() != values.rows) {
            throw DimensionMismatch("feature matrix: " + std::to_string(sample_ids.size()) +
                                    " sample ids for " + std::to_string(values.rows) + " rows");
        }
        if (!values.all_finite()) throw InvalidArgument("feature matrix contains NaN or Inf");
        std::unordered_set<std::string> seen;
        for (const std::string& name : feature_names) {
            if (!seen.insert(name).second) {
                throw InvalidArgument("duplicate feature name '" + name + "'");
            }
        }
    }

    std::size_t n_samples() const { return values.rows; }
    std::size_t n_features() const { return values.cols; }
};

/// Stacks flattened spectra (all sharing one shape) into rows; columns are
/// named r{row}c{col} after their cell in the intensity matrix.
inline FeatureMatrix flatten_spectra(const std::vector<IMSSpectrum>& spectra) {
    if (spectra.empty()) throw InvalidArgument("flatten_spectra: no spectra");
    const std::size_t rows = spectra.front().intensity.rows;
    const std::size_t cols = spectra.front().intensity.cols;
    Matrix values(spectra.size(), rows * cols);
    std::vector<std::string> ids;
    ids.reserve(spectra.size());
    for (std::size_t i = 0; i < spectra.size(); ++i) {
        const IMSSpectrum& s = spectra[i];
        if (s.intensity.rows != rows || s.intensity.cols != cols) {
            throw DimensionMismatch("flatten_spectra: spectrum '" + s.sample_id +
                                    "' has a different shape");
        }
        std::copy(s.intensity.data.begin(), s.intensity.data.end(), values.row(i));
        ids.push_back(s.sample_id);
    }
    std::vector<std::string> names;
    names.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            names.push_back("r" + std::to_string(r) + "c" + std::to_string(c));
        }
    }
    return FeatureMatrix(std::move(values), std::move(names), std::move(ids));
}

// ---------------------------------------------------------------------------
// standardization
// ---------------------------------------------------------------------------

/// Column means and population standard deviations fitted on training data.
/// Zero-variance columns record std 1 so they standardize to all zeros.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;
};

struct StandardizeResult {
    FeatureMatrix transformed;
    Standardizer standardizer;
};

inline FeatureMatrix standardize_apply(const Standardizer& st, const FeatureMatrix& X) {
    if (X.n_features() != st.means.size()) {
        throw DimensionMismatch("standardize: fitted on " + std::to_string(st.means.size()) +
                                " features, got " + std::to_string(X.n_features()));
    }
    Matrix out(X.values.rows, X.values.cols);
    for (std::size_t i = 0; i < X.values.rows; ++i) {
        for (std::size_t j = 0; j < X.values.cols; ++j) {
            out(i, j) = (X.values(i, j) - st.means[j]) / st.stds[j];
        }
    }
    return FeatureMatrix(std::move(out), X.feature_names, X.sample_ids);
}

inline StandardizeResult standardize_fit_transform(const FeatureMatrix& X) {
    const std::size_t n = X.n_samples(), d = X.n_features();
    if (n < 2) throw InvalidArgument("standardize: need at least 2 samples");

    Standardizer st;
    st.means.assign(d, 0.0);
    st.stds.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) st.means[j] += X.values(i, j);
    }
    for (double& m : st.means) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double delta = X.values(i, j) - st.means[j];
            st.stds[j] += delta * delta;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(st.stds[j] / static_cast<double>(n));
        // constant column (up to rounding): map to zeros, record std 1
        st.stds[j] = sd < 1e-12 * std::max(1.0, std::fabs(st.means[j])) ? 1.0 : sd;
    }
    return {standardize_apply(st, X), std::move(st)};
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PcaModel {
    std::vector<double> mean;                       // length d
    Matrix components{0, 0};                        // k x d, orthonormal rows
    std::vector<double> explained_variance;         // nonincreasing
    std::vector<double> explained_variance_ratio;   // sums to <= 1
    std::size_t requested_components = 0;
    bool clamped = false;  // requested exceeded the centered rank

    std::size_t n_components() const { return components.rows; }
};

namespace detail {

// Flip so the largest-magnitude entry is positive; ties go to the first such
// entry. Removes the eigenvector sign ambiguity from golden values.
inline void fix_component_sign(Matrix& components, std::size_t row) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < components.cols; ++j) {
        const double mag = std::fabs(components(row, j));
        if (mag > best) {
            best = mag;
            arg = j;
        }
    }
    if (components(row, arg) < 0.0) {
        for (std::size_t j = 0; j < components.cols; ++j) components(row, j) = -components(row, j);
    }
}

}  // namespace detail

/// PCA of the rows of X via the n x n Gram matrix of centered rows — the
/// economical path when samples are few and features many. Eigenvalue lambda
/// of the Gram matrix maps to explained variance lambda/(n-1) and its unit
/// eigenvector u to the component Xc'u / ||Xc'u||. The request is clamped to
/// the centered rank, with the clamp recorded on the model.
inline PcaModel pca_fit(const FeatureMatrix& X, std::size_t k) {
    const std::size_t n = X.n_samples(), d = X.n_features();
    if (n < 2) throw InvalidArgument("pca_fit: need at least 2 samples");
    if (k < 1) throw InvalidArgument("pca_fit: need at least 1 component");

    PcaModel model;
    model.requested_components = k;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += X.values(i, j);
    }
    for (double& m : model.mean) m /= static_cast<double>(n);

    Matrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = X.values(i, j) - model.mean[j];
    }

    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += centered(i, c) * centered(j, c);
            gram(i, j) = acc;
            gram(j, i) = acc;
        }
    }

    const SymmetricEigen eig = jacobi_eigen_symmetric(gram);
    const double lambda_max = eig.values.empty() ? 0.0 : eig.values.front();
    double trace = 0.0;
    for (double v : eig.values) trace += std::max(v, 0.0);

    std::size_t rank = 0;
    while (rank < n && eig.values[rank] > lambda_max * 1e-10 && eig.values[rank] > 0.0) ++rank;
    if (rank == 0) throw DegenerateData("pca_fit: all rows are identical (centered rank 0)");

    const std::size_t kept = std::min(k, rank);
    model.clamped = kept < k;
    model.components = Matrix(kept, d);
    model.explained_variance.resize(kept);
    model.explained_variance_ratio.resize(kept);

    for (std::size_t a = 0; a < kept; ++a) {
        // component = Xc' u / ||Xc' u||  (the norm equals sqrt(lambda))
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += centered(i, j) * eig.vectors(i, a);
            model.components(a, j) = acc;
            norm_sq += acc * acc;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t j = 0; j < d; ++j) model.components(a, j) *= inv;
        model.explained_variance[a] = eig.values[a] / static_cast<double>(n - 1);
        model.explained_variance_ratio[a] = trace > 0.0 ? eig.values[a] / trace : 0.0;
    }

    // Modified Gram-Schmidt polish: the vectors are already near-orthonormal,
    // this pins the invariant down to machine precision even when the kept
    // eigenvalues span many orders of magnitude.
    for (std::size_t a = 0; a < kept; ++a) {
        for (std::size_t b = 0; b < a; ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += model.components(a, j) * model.components(b, j);
            for (std::size_t j = 0; j < d; ++j) model.components(a, j) -= dot * model.components(b, j);
        }
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) norm_sq += model.components(a, j) * model.components(a, j);
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t j = 0; j < d; ++j) model.components(a, j) *= inv;
        detail::fix_component_sign(model.components, a);
    }
    return model;
}

/// Projects rows onto the fitted components: scores = (X - mean) * C'.
inline FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& X) {
    const std::size_t d = model.mean.size();
    if (X.n_features() != d) {
        throw DimensionMismatch("pca_transform: model spans " + std::to_string(d) +
                                " features, got " + std::to_string(X.n_features()));
    }
    const std::size_t k = model.n_components();
    Matrix scores(X.n_samples(), k);
    for (std::size_t i = 0; i < X.n_samples(); ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                acc += (X.values(i, j) - model.mean[j]) * model.components(a, j);
            }
            scores(i, a) = acc;
        }
    }
    std::vector<std::string> names(k);
    for (std::size_t a = 0; a < k; ++a) names[a] = "PC" + std::to_string(a + 1);
    return FeatureMatrix(std::move(scores), std::move(names), X.sample_ids);
}

// ---------------------------------------------------------------------------
// top-k feature selection
// ---------------------------------------------------------------------------

enum class SelectionMethod : std::uint8_t { Importance = 0, AbsWeight = 1 };

/// Kept column indices (strictly increasing) with their ranking scores.
struct SelectionMask {
    std::vector<std::size_t> kept_indices;
    std::vector<double> scores;       // aligned with kept_indices
    std::size_t source_features = 0;  // column count of the matrix it was fit on
    bool clamped = false;             // k exceeded the feature count
};

/// Ranks features and keeps the top k. importance scores come from a seeded
/// 100-tree forest's impurity importances; abs_weight from the absolute
/// coefficients of a preliminary L2 logistic fit (the seed is unused there —
/// that fit is deterministic). Ties break toward the lower index; k larger
/// than the feature count clamps with a flag.
inline SelectionMask select_top_k(const FeatureMatrix& X, const std::vector<SampleLabel>& labels,
                                  std::size_t k, SelectionMethod method, std::uint64_t seed) {
    if (k < 1) throw InvalidArgument("select_top_k: k must be >= 1");
    const std::size_t d = X.n_features();

    std::vector<double> scores;
    if (method == SelectionMethod::Importance) {
        ForestSpec spec;
        spec.n_trees = 100;
        spec.max_depth = 8;
        spec.min_samples_leaf = 1;
        spec.bootstrap = true;
        spec.features_per_split = FeatureSubset::Sqrt;
        scores = fit_forest(X.values, labels, spec, TrainSeed{seed}).importances;
    } else {
        LogisticSpec spec;
        spec.penalty = Penalty::L2;
        spec.lambda = 0.01;
        spec.learning_rate = 0.1;
        spec.max_iters = 500;
        spec.tol = 1e-6;
        const LogisticModel fitted = fit_logistic(X.values, labels, spec);
        scores.resize(d);
        for (std::size_t j = 0; j < d; ++j) scores[j] = std::fabs(fitted.weights[j]);
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    SelectionMask mask;
    mask.source_features = d;
    mask.clamped = k > d;
    const std::size_t kept = std::min(k, d);
    order.resize(kept);
    std::sort(order.begin(), order.end());
    mask.kept_indices = std::move(order);
    mask.scores.reserve(kept);
    for (std::size_t idx : mask.kept_indices) mask.scores.push_back(scores[idx]);
    return mask;
}

/// Restricts a matrix to the masked columns; names follow the kept features.
inline FeatureMatrix apply_selection(const SelectionMask& mask, const FeatureMatrix& X) {
    if (X.n_features() != mask.source_features) {
        throw DimensionMismatch("apply_selection: mask fit on " +
                                std::to_string(mask.source_features) + " features, got " +
                                std::to_string(X.n_features()));
    }
    Matrix out(X.n_samples(), mask.kept_indices.size());
    std::vector<std::string> names;
    names.reserve(mask.kept_indices.size());
    for (std::size_t c = 0; c < mask.kept_indices.size(); ++c) {
        const std::size_t src = mask.kept_indices[c];
        for (std::size_t i = 0; i < X.n_samples(); ++i) out(i, c) = X.values(i, src);
        names.push_back(X.feature_names[mask.kept_indices[c]]);
    }
    return FeatureMatrix(std::move(out), std::move(names), X.sample_ids);
}

}  // namespace gcims
