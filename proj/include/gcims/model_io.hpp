#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "gcims/core.hpp"
#include "gcims/errors.hpp"
#include "gcims/eval.hpp"
#include "gcims/features.hpp"
#include "gcims/io.hpp"
#include "gcims/models.hpp"
#include "gcims/preprocess.hpp"

namespace gcims {

// ---------------------------------------------------------------------------
// trained pipeline = everything inference needs in one object
// ---------------------------------------------------------------------------

/// A classifier together with the exact transform chain it was fitted
/// behind: preprocessing steps, column standardization, PCA projection and
/// feature-selection mask. Prediction therefore accepts a raw spectrum and
/// needs no side information.
struct TrainedPipeline {
    PreprocessConfig preprocess;
    Standardizer standardizer;
    PcaModel pca;
    SelectionMask mask;
    SelectionMethod mask_method = SelectionMethod::Importance;
    ClassifierModel model;
};

// ---------------------------------------------------------------------------
// VOCM container
//
// Layout, little-endian throughout:
//   bytes 0..3  magic "VOCM"
//   bytes 4..5  format version, u16 (currently 1)
//   byte  6     classifier kind tag, u8
//   then        preprocess config (u32 length + "key = value" text)
//   then        standardizer, PCA model, selection mask, classifier
//   floats are 64-bit; the file ends exactly after the classifier block
// ---------------------------------------------------------------------------

inline constexpr char kVocmMagic[4] = {'V', 'O', 'C', 'M'};
inline constexpr std::uint16_t kVocmVersion = 1;

namespace detail {

inline void put_i64le(std::string& out, std::int64_t v) {
    put_u64le(out, static_cast<std::uint64_t>(v));
}

inline std::int64_t get_i64le(ByteReader& r, const char* what) {
    return static_cast<std::int64_t>(r.u64le(what));
}

inline void put_f64_span(std::string& out, const std::vector<double>& v) {
    for (double x : v) put_f64le(out, x);
}

inline std::vector<double> get_f64_span(ByteReader& r, std::size_t n, const char* what) {
    std::vector<double> v(n);
    for (double& x : v) x = r.f64le(what);
    return v;
}

inline void put_matrix(std::string& out, const Matrix& m) {
    put_u64le(out, m.rows);
    put_u64le(out, m.cols);
    put_f64_span(out, m.data);
}

inline Matrix get_matrix(ByteReader& r, const char* what) {
    const std::uint64_t rows = r.u64le(what);
    const std::uint64_t cols = r.u64le(what);
    Matrix m(rows, cols);
    for (double& x : m.data) x = r.f64le(what);
    return m;
}

// --- classifier specs -------------------------------------------------------

inline void put_spec(std::string& out, const TreeSpec& s) {
    put_u64le(out, s.max_depth);
    put_u64le(out, s.min_samples_leaf);
}
inline TreeSpec get_tree_spec(ByteReader& r) {
    TreeSpec s;
    s.max_depth = r.u64le("tree spec");
    s.min_samples_leaf = r.u64le("tree spec");
    return s;
}

inline void put_spec(std::string& out, const LogisticSpec& s) {
    out.push_back(static_cast<char>(s.penalty));
    put_f64le(out, s.lambda);
    put_f64le(out, s.learning_rate);
    put_u64le(out, s.max_iters);
    put_f64le(out, s.tol);
}
inline LogisticSpec get_logistic_spec(ByteReader& r) {
    LogisticSpec s;
    std::uint8_t pen = 0;
    r.read_bytes(&pen, 1, "logistic spec");
    if (pen > 2) throw MalformedHeader("logistic spec: unknown penalty tag " + std::to_string(pen));
    s.penalty = static_cast<Penalty>(pen);
    s.lambda = r.f64le("logistic spec");
    s.learning_rate = r.f64le("logistic spec");
    s.max_iters = r.u64le("logistic spec");
    s.tol = r.f64le("logistic spec");
    return s;
}

inline void put_spec(std::string& out, const ForestSpec& s) {
    put_u64le(out, s.n_trees);
    put_u64le(out, s.max_depth);
    put_u64le(out, s.min_samples_leaf);
    out.push_back(s.bootstrap ? 1 : 0);
    out.push_back(static_cast<char>(s.features_per_split));
    put_u64le(out, s.fixed_features);
}
inline ForestSpec get_forest_spec(ByteReader& r) {
    ForestSpec s;
    s.n_trees = r.u64le("forest spec");
    s.max_depth = r.u64le("forest spec");
    s.min_samples_leaf = r.u64le("forest spec");
    std::uint8_t flags[2];
    r.read_bytes(flags, 2, "forest spec");
    s.bootstrap = flags[0] != 0;
    if (flags[1] > 2) throw MalformedHeader("forest spec: unknown feature subset tag");
    s.features_per_split = static_cast<FeatureSubset>(flags[1]);
    s.fixed_features = r.u64le("forest spec");
    return s;
}

inline void put_spec(std::string& out, const SvmSpec& s) {
    out.push_back(static_cast<char>(s.kernel));
    put_u64le(out, s.degree);
    put_f64le(out, s.gamma);
    put_f64le(out, s.coef0);
    put_f64le(out, s.C);
    put_u64le(out, s.max_iters);
    put_f64le(out, s.tol);
}
inline SvmSpec get_svm_spec(ByteReader& r) {
    SvmSpec s;
    std::uint8_t kernel = 0;
    r.read_bytes(&kernel, 1, "svm spec");
    if (kernel > 1) throw MalformedHeader("svm spec: unknown kernel tag " + std::to_string(kernel));
    s.kernel = static_cast<SvmKernel>(kernel);
    s.degree = r.u64le("svm spec");
    s.gamma = r.f64le("svm spec");
    s.coef0 = r.f64le("svm spec");
    s.C = r.f64le("svm spec");
    s.max_iters = r.u64le("svm spec");
    s.tol = r.f64le("svm spec");
    return s;
}

inline void put_spec(std::string& out, const PlsdaSpec& s) {
    put_u64le(out, s.n_components);
    put_f64le(out, s.threshold);
}
inline PlsdaSpec get_plsda_spec(ByteReader& r) {
    PlsdaSpec s;
    s.n_components = r.u64le("plsda spec");
    s.threshold = r.f64le("plsda spec");
    return s;
}

// --- tree nodes (shared by tree and forest blocks) ---------------------------

inline void put_nodes(std::string& out, const std::vector<TreeNode>& nodes) {
    put_u64le(out, nodes.size());
    for (const TreeNode& n : nodes) {
        put_i64le(out, n.feature);
        put_f64le(out, n.threshold);
        put_i64le(out, n.left);
        put_i64le(out, n.right);
        put_u64le(out, n.counts[0]);
        put_u64le(out, n.counts[1]);
    }
}

inline std::vector<TreeNode> get_nodes(ByteReader& r) {
    const std::uint64_t count = r.u64le("tree nodes");
    std::vector<TreeNode> nodes(count);
    for (TreeNode& n : nodes) {
        n.feature = static_cast<int>(get_i64le(r, "tree node"));
        n.threshold = r.f64le("tree node");
        n.left = static_cast<int>(get_i64le(r, "tree node"));
        n.right = static_cast<int>(get_i64le(r, "tree node"));
        n.counts[0] = r.u64le("tree node");
        n.counts[1] = r.u64le("tree node");
    }
    return nodes;
}

// --- classifier models -------------------------------------------------------

inline void put_model(std::string& out, const TreeModel& m) {
    put_spec(out, m.spec);
    put_u64le(out, m.n_features);
    put_nodes(out, m.nodes);
}

inline TreeModel get_tree_model(ByteReader& r) {
    TreeModel m;
    m.spec = get_tree_spec(r);
    m.n_features = r.u64le("tree model");
    m.nodes = get_nodes(r);
    return m;
}

inline void put_model(std::string& out, const LogisticModel& m) {
    put_spec(out, m.spec);
    put_u64le(out, m.weights.size());
    put_f64_span(out, m.weights);
    put_f64le(out, m.intercept);
}

inline LogisticModel get_logistic_model(ByteReader& r) {
    LogisticModel m;
    m.spec = get_logistic_spec(r);
    const std::uint64_t d = r.u64le("logistic model");
    m.weights = get_f64_span(r, d, "logistic weights");
    m.intercept = r.f64le("logistic model");
    return m;
}

inline void put_model(std::string& out, const ForestModel& m) {
    put_spec(out, m.spec);
    put_u64le(out, m.master_seed);
    put_u64le(out, m.n_features);
    put_u64le(out, m.trees.size());
    for (const TreeModel& tree : m.trees) put_nodes(out, tree.nodes);
    put_f64_span(out, m.importances);
}

inline ForestModel get_forest_model(ByteReader& r) {
    ForestModel m;
    m.spec = get_forest_spec(r);
    m.master_seed = r.u64le("forest model");
    m.n_features = r.u64le("forest model");
    const std::uint64_t n_trees = r.u64le("forest model");
    m.trees.reserve(n_trees);
    for (std::uint64_t t = 0; t < n_trees; ++t) {
        TreeModel tree;
        tree.spec = TreeSpec{m.spec.max_depth, m.spec.min_samples_leaf};
        tree.n_features = m.n_features;
        tree.nodes = get_nodes(r);
        m.trees.push_back(std::move(tree));
    }
    m.importances = get_f64_span(r, m.n_features, "forest importances");
    return m;
}

inline void put_model(std::string& out, const SvmModel& m) {
    put_spec(out, m.spec);
    put_u64le(out, m.n_features);
    if (m.spec.kernel == SvmKernel::Linear) {
        put_f64_span(out, m.weights);
    } else {
        put_matrix(out, m.support_vectors);
        put_u64le(out, m.dual_coefs.size());
        put_f64_span(out, m.dual_coefs);
    }
    put_f64le(out, m.intercept);
}

inline SvmModel get_svm_model(ByteReader& r) {
    SvmModel m;
    m.spec = get_svm_spec(r);
    m.n_features = r.u64le("svm model");
    if (m.spec.kernel == SvmKernel::Linear) {
        m.weights = get_f64_span(r, m.n_features, "svm weights");
    } else {
        m.support_vectors = get_matrix(r, "svm support vectors");
        const std::uint64_t n = r.u64le("svm model");
        m.dual_coefs = get_f64_span(r, n, "svm dual coefficients");
        if (m.support_vectors.rows != m.dual_coefs.size() || m.support_vectors.cols != m.n_features) {
            throw MalformedHeader("svm model: support vector block sizes disagree");
        }
    }
    m.intercept = r.f64le("svm model");
    return m;
}

inline void put_model(std::string& out, const PlsdaModel& m) {
    put_spec(out, m.spec);
    put_u64le(out, m.n_features);
    put_u64le(out, m.achieved_components);
    put_f64_span(out, m.weights.data);
    put_f64_span(out, m.loadings.data);
    put_f64_span(out, m.y_loadings);
    put_f64_span(out, m.x_mean);
    put_f64le(out, m.y_mean);
}

inline PlsdaModel get_plsda_model(ByteReader& r) {
    PlsdaModel m;
    m.spec = get_plsda_spec(r);
    m.n_features = r.u64le("plsda model");
    m.achieved_components = r.u64le("plsda model");
    m.weights = Matrix(m.achieved_components, m.n_features);
    m.loadings = Matrix(m.achieved_components, m.n_features);
    for (double& v : m.weights.data) v = r.f64le("plsda weights");
    for (double& v : m.loadings.data) v = r.f64le("plsda loadings");
    m.y_loadings = get_f64_span(r, m.achieved_components, "plsda y loadings");
    m.x_mean = get_f64_span(r, m.n_features, "plsda x mean");
    m.y_mean = r.f64le("plsda model");
    return m;
}

}  // namespace detail

inline std::string encode_model(const TrainedPipeline& p) {
    std::string out;
    out.append(kVocmMagic, 4);
    detail::put_u16le(out, kVocmVersion);
    out.push_back(static_cast<char>(kind_of(p.model)));

    const std::string preprocess_text = p.preprocess.to_text();
    detail::put_u32le(out, static_cast<std::uint32_t>(preprocess_text.size()));
    out += preprocess_text;

    detail::put_u64le(out, p.standardizer.means.size());
    detail::put_f64_span(out, p.standardizer.means);
    detail::put_f64_span(out, p.standardizer.stds);

    detail::put_u64le(out, p.pca.mean.size());
    detail::put_u64le(out, p.pca.n_components());
    detail::put_u64le(out, p.pca.requested_components);
    out.push_back(p.pca.clamped ? 1 : 0);
    detail::put_f64_span(out, p.pca.mean);
    detail::put_f64_span(out, p.pca.components.data);
    detail::put_f64_span(out, p.pca.explained_variance);
    detail::put_f64_span(out, p.pca.explained_variance_ratio);

    detail::put_u64le(out, p.mask.source_features);
    detail::put_u64le(out, p.mask.kept_indices.size());
    out.push_back(static_cast<char>(p.mask_method));
    out.push_back(p.mask.clamped ? 1 : 0);
    for (std::size_t idx : p.mask.kept_indices) detail::put_u64le(out, idx);
    detail::put_f64_span(out, p.mask.scores);

    std::visit([&](const auto& m) { detail::put_model(out, m); }, p.model);
    return out;
}

inline TrainedPipeline decode_model(const std::string& bytes) {
    detail::ByteReader r(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());

    char magic[4];
    r.read_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kVocmMagic, 4) != 0) {
        throw BadMagic("bad magic at byte offset 0: expected \"VOCM\"");
    }
    const std::uint16_t version = r.u16le("format version");
    if (version != kVocmVersion) {
        throw UnsupportedVersion("unsupported VOCM version " + std::to_string(version) +
                                 " at byte offset 4");
    }
    std::uint8_t kind_tag = 0;
    r.read_bytes(&kind_tag, 1, "classifier kind");
    if (kind_tag < 1 || kind_tag > 5) {
        throw MalformedHeader("unknown classifier kind tag " + std::to_string(kind_tag) +
                              " at byte offset 6");
    }

    TrainedPipeline p;
    const std::uint32_t preprocess_len = r.u32le("preprocess config length");
    std::string preprocess_text(preprocess_len, '\0');
    r.read_bytes(preprocess_text.data(), preprocess_len, "preprocess config");
    p.preprocess = PreprocessConfig::parse(preprocess_text);

    const std::uint64_t d = r.u64le("standardizer size");
    p.standardizer.means = detail::get_f64_span(r, d, "standardizer means");
    p.standardizer.stds = detail::get_f64_span(r, d, "standardizer stds");

    const std::uint64_t pca_d = r.u64le("pca size");
    const std::uint64_t pca_k = r.u64le("pca components");
    p.pca.requested_components = r.u64le("pca requested");
    std::uint8_t clamped = 0;
    r.read_bytes(&clamped, 1, "pca clamp flag");
    p.pca.clamped = clamped != 0;
    p.pca.mean = detail::get_f64_span(r, pca_d, "pca mean");
    p.pca.components = Matrix(pca_k, pca_d);
    for (double& v : p.pca.components.data) v = r.f64le("pca components");
    p.pca.explained_variance = detail::get_f64_span(r, pca_k, "pca variance");
    p.pca.explained_variance_ratio = detail::get_f64_span(r, pca_k, "pca variance ratio");

    p.mask.source_features = r.u64le("mask source size");
    const std::uint64_t kept = r.u64le("mask size");
    std::uint8_t mask_meta[2];
    r.read_bytes(mask_meta, 2, "mask flags");
    if (mask_meta[0] > 1) throw MalformedHeader("unknown selection method tag");
    p.mask_method = static_cast<SelectionMethod>(mask_meta[0]);
    p.mask.clamped = mask_meta[1] != 0;
    p.mask.kept_indices.resize(kept);
    for (std::size_t& idx : p.mask.kept_indices) idx = r.u64le("mask indices");
    p.mask.scores = detail::get_f64_span(r, kept, "mask scores");

    switch (static_cast<ClassifierKind>(kind_tag)) {
        case ClassifierKind::DecisionTree: p.model = detail::get_tree_model(r); break;
        case ClassifierKind::LogisticRegression: p.model = detail::get_logistic_model(r); break;
        case ClassifierKind::RandomForest: p.model = detail::get_forest_model(r); break;
        case ClassifierKind::Svm: p.model = detail::get_svm_model(r); break;
        case ClassifierKind::Plsda: p.model = detail::get_plsda_model(r); break;
    }

    if (r.remaining() != 0) {
        throw TruncatedPayload("container has " + std::to_string(r.remaining()) +
                               " unexpected trailing bytes at offset " + std::to_string(r.offset()));
    }
    return p;
}

inline void write_model(const TrainedPipeline& p, const std::filesystem::path& destination) {
    detail::write_file_bytes(destination, encode_model(p));
}

inline TrainedPipeline read_model(const std::filesystem::path& source) {
    return decode_model(detail::read_file_bytes(source));
}

// ---------------------------------------------------------------------------
// inference on raw spectra
// ---------------------------------------------------------------------------

struct Prediction {
    SampleLabel label = SampleLabel::NotInfected;
    double score = 0.0;
};

/// Replays the embedded chain on one raw spectrum: preprocess, flatten,
/// standardize, project, select, classify.
inline Prediction pipeline_predict(const TrainedPipeline& p, const IMSSpectrum& spectrum) {
    const IMSSpectrum processed = run_pipeline(spectrum, p.preprocess);
    const std::vector<double> flat = flatten(processed);
    if (flat.size() != p.standardizer.means.size()) {
        throw DimensionMismatch("pipeline expects " + std::to_string(p.standardizer.means.size()) +
                                " preprocessed cells, spectrum yields " + std::to_string(flat.size()));
    }

    std::vector<double> z(flat.size());
    for (std::size_t j = 0; j < flat.size(); ++j) {
        z[j] = (flat[j] - p.standardizer.means[j]) / p.standardizer.stds[j];
    }

    if (z.size() != p.pca.mean.size()) {
        throw DimensionMismatch("pca block disagrees with standardizer width");
    }
    std::vector<double> scores(p.pca.n_components());
    for (std::size_t a = 0; a < scores.size(); ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            acc += (z[j] - p.pca.mean[j]) * p.pca.components(a, j);
        }
        scores[a] = acc;
    }

    if (scores.size() != p.mask.source_features) {
        throw DimensionMismatch("selection mask disagrees with pca output width");
    }
    Matrix selected(1, p.mask.kept_indices.size());
    for (std::size_t c = 0; c < p.mask.kept_indices.size(); ++c) {
        selected(0, c) = scores[p.mask.kept_indices[c]];
    }

    const double score = decision_score(p.model, selected)[0];
    Prediction out;
    out.score = score;
    out.label = score > decision_cutoff(p.model) ? SampleLabel::Infected : SampleLabel::NotInfected;
    return out;
}

// ---------------------------------------------------------------------------
// end-to-end training
// ---------------------------------------------------------------------------

struct TrainOptions {
    PreprocessConfig preprocess = PreprocessConfig::standard();
    std::size_t pca_components = 304;
    std::size_t cv_folds = 5;
    AlgorithmPlan plan;
};

/// Fits one deployable pipeline on the full labeled dataset: preprocess,
/// standardize, PCA, select, grid-search with cross-validation, then refit
/// the winning spec on everything.
inline TrainedPipeline train_pipeline(const Dataset& dataset, const TrainOptions& options,
                                      std::uint64_t seed) {
    std::vector<SampleLabel> labels;
    for (const SampleRecord& rec : dataset.records) {
        if (!rec.label.has_value()) {
            throw UnlabeledSamples("train: sample '" + rec.sample_id + "' has no label");
        }
        labels.push_back(*rec.label);
    }
    std::vector<IMSSpectrum> processed;
    processed.reserve(dataset.records.size());
    for (const SampleRecord& rec : dataset.records) {
        processed.push_back(run_pipeline(dataset.spectrum(rec.sample_id), options.preprocess));
    }
    const FeatureMatrix flat = flatten_spectra(processed);
    const StandardizeResult standardized = standardize_fit_transform(flat);
    const PcaModel pca = pca_fit(standardized.transformed, options.pca_components);
    const FeatureMatrix projected = pca_transform(pca, standardized.transformed);

    const SelectionMask mask =
        select_top_k(projected, labels, options.plan.selection_k, options.plan.selection_method,
                     derive_seed(seed, detail::streams::selection_base));
    const FeatureMatrix selected = apply_selection(mask, projected);

    const FoldPlan folds = stratified_kfold(labels, options.cv_folds, seed);
    const GridSearchResult search =
        grid_search(selected.values, labels, options.plan.grid, folds,
                    TrainSeed{derive_seed(seed, detail::streams::grid_base)});

    TrainedPipeline pipeline;
    pipeline.preprocess = options.preprocess;
    pipeline.standardizer = standardized.standardizer;
    pipeline.pca = pca;
    pipeline.mask = mask;
    pipeline.mask_method = options.plan.selection_method;
    pipeline.model = fit(selected.values, labels, search.best_spec(),
                         TrainSeed{derive_seed(seed, detail::streams::refit_base)});
    return pipeline;
}

}  // namespace gcims
