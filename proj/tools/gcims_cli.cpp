// gcims: command-line front end for the GC-IMS infection screening toolkit.
//
// Subcommands: generate, validate, evaluate, train, predict, render.
// Exit codes: 0 success, 1 unexpected error, 2 validation/data failure,
// 3 invalid configuration or arguments, 4 missing input file.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gcims/gcims.hpp"

namespace fs = std::filesystem;

namespace {

bool g_verbose = false;

void note(const std::string& msg) {
    if (g_verbose) std::fprintf(stderr, "gcims: %s\n", msg.c_str());
}

gcims::PreprocessConfig load_preprocess(const std::string& path) {
    if (path.empty()) return gcims::PreprocessConfig::standard();
    return gcims::PreprocessConfig::parse(gcims::detail::read_file_bytes(path));
}

gcims::ClassifierKind parse_kind(const std::string& name) {
    if (name == "dt" || name == "decision_tree") return gcims::ClassifierKind::DecisionTree;
    if (name == "lr" || name == "logistic_regression") return gcims::ClassifierKind::LogisticRegression;
    if (name == "rf" || name == "random_forest") return gcims::ClassifierKind::RandomForest;
    if (name == "svm") return gcims::ClassifierKind::Svm;
    if (name == "plsda" || name == "pls_da") return gcims::ClassifierKind::Plsda;
    throw gcims::InvalidArgument("unknown algorithm '" + name +
                                 "' (expected dt, lr, rf, svm, plsda, or all)");
}

std::vector<gcims::AlgorithmPlan> parse_algorithms(const std::string& list, std::size_t pca,
                                                   std::size_t k_override) {
    std::vector<gcims::AlgorithmPlan> plans;
    if (list == "all") {
        plans = gcims::default_algorithm_plans(pca);
    } else {
        std::size_t start = 0;
        while (start <= list.size()) {
            const std::size_t comma = list.find(',', start);
            const std::string token =
                list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (token.empty()) throw gcims::InvalidArgument("empty algorithm name in --algorithms");
            plans.push_back(gcims::default_plan(parse_kind(token), pca));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    if (k_override > 0) {
        for (auto& p : plans) p.selection_k = k_override;
    }
    return plans;
}

std::string render_pgm(const gcims::IMSSpectrum& s, bool log_scale) {
    const std::size_t height = s.intensity.rows;  // retention
    const std::size_t width = s.intensity.cols;   // drift
    std::vector<double> v = s.intensity.data;
    if (log_scale) {
        for (double& x : v) x = std::log10(1.0 + std::max(x, 0.0));
    }
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.reserve(out.size() + v.size());
    for (double x : v) {
        long pixel = 0;
        if (hi > lo) pixel = std::lround(255.0 * (x - lo) / (hi - lo));
        pixel = std::max(0L, std::min(255L, pixel));
        out.push_back(static_cast<char>(static_cast<unsigned char>(pixel)));
    }
    return out;
}

// --- subcommand bodies ------------------------------------------------------

struct GenerateArgs {
    std::string out_dir;
    gcims::SynthConfig config;
};

int cmd_generate(const GenerateArgs& a) {
    const gcims::Dataset ds = gcims::generate(a.config);  // validates before any file is touched
    fs::create_directories(a.out_dir);

    std::size_t infected = 0;
    for (const auto& rec : ds.records) {
        const fs::path file = fs::path(a.out_dir) / (rec.sample_id + ".imsx");
        gcims::write_imsx(ds.spectrum(rec.sample_id), file, rec.label);
        if (rec.label == gcims::SampleLabel::Infected) ++infected;
        note("wrote " + file.string());
    }
    gcims::write_metadata(ds.records, fs::path(a.out_dir) / "metadata.csv");

    std::printf("wrote %zu spectra (%zu Infected, %zu NotInfected) and metadata.csv to %s\n",
                ds.records.size(), infected, ds.records.size() - infected, a.out_dir.c_str());
    return 0;
}

struct ValidateArgs {
    std::string data_dir;
    std::string meta_path;
};

int cmd_validate(const ValidateArgs& a) {
    const gcims::DatasetScan scan = gcims::scan_dataset(a.data_dir, a.meta_path);
    for (const auto& report : scan.reports) {
        if (report.overall()) {
            std::printf("%s PASS\n", report.sample_id.c_str());
        } else {
            std::printf("%s FAIL %s\n", report.sample_id.c_str(), report.failing_checks().c_str());
        }
    }
    return scan.all_passed() ? 0 : 2;
}

struct EvaluateArgs {
    std::string data_dir;
    std::string meta_path;
    std::string algorithms = "all";
    std::string report_path;
    std::string preprocess_path;
    std::size_t cv_folds = 5;
    double test_fraction = 0.2;
    std::size_t k_features = 0;  // 0 = per-algorithm default
    std::size_t pca_components = 304;
    std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
    gcims::EvalConfig config;
    config.preprocess = load_preprocess(a.preprocess_path);
    config.pca_components = a.pca_components;
    config.test_fraction = a.test_fraction;
    config.cv_folds = a.cv_folds;
    config.algorithms = parse_algorithms(a.algorithms, a.pca_components, a.k_features);

    note("loading dataset from " + a.data_dir);
    const gcims::LoadedDataset loaded = gcims::load_dataset(a.data_dir, a.meta_path);
    note("evaluating " + std::to_string(loaded.dataset.size()) + " samples");
    const gcims::EvaluationReport report = gcims::evaluate_all(loaded.dataset, config, a.seed);

    fs::path json_path(a.report_path);
    fs::path csv_path(a.report_path);
    csv_path.replace_extension(".csv");
    if (json_path == csv_path) json_path.replace_extension(".json");
    gcims::detail::write_file_bytes(json_path, gcims::report_to_json(report));
    gcims::detail::write_file_bytes(csv_path, gcims::report_to_csv(report));

    std::printf("%-20s %8s %8s %8s %8s %8s %8s\n", "algorithm", "features", "cv_mean", "cv_std",
                "test_acc", "f1", "roc_auc");
    for (const auto& row : report.rows) {
        const std::string auc =
            row.test_metrics.roc_auc ? gcims::detail::format_fixed(*row.test_metrics.roc_auc, 3) : "-";
        std::printf("%-20s %8zu %8s %8s %8s %8s %8s\n", gcims::kind_name(row.kind).c_str(),
                    row.feature_count, gcims::detail::format_fixed(row.cv_mean_accuracy, 3).c_str(),
                    gcims::detail::format_fixed(row.cv_std_accuracy, 3).c_str(),
                    gcims::detail::format_fixed(row.test_metrics.accuracy, 3).c_str(),
                    gcims::detail::format_fixed(row.test_metrics.f1, 3).c_str(), auc.c_str());
    }
    std::printf("reports written to %s and %s\n", json_path.string().c_str(),
                csv_path.string().c_str());
    return 0;
}

struct TrainArgs {
    std::string data_dir;
    std::string meta_path;
    std::string model_path;
    std::string algorithm = "rf";
    std::string preprocess_path;
    std::size_t cv_folds = 5;
    std::size_t k_features = 0;
    std::size_t pca_components = 304;
    std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
    gcims::TrainOptions options;
    options.preprocess = load_preprocess(a.preprocess_path);
    options.pca_components = a.pca_components;
    options.cv_folds = a.cv_folds;
    options.plan = gcims::default_plan(parse_kind(a.algorithm), a.pca_components);
    if (a.k_features > 0) options.plan.selection_k = a.k_features;

    const gcims::LoadedDataset loaded = gcims::load_dataset(a.data_dir, a.meta_path);
    note("training on " + std::to_string(loaded.dataset.size()) + " samples");
    const gcims::TrainedPipeline pipeline = gcims::train_pipeline(loaded.dataset, options, a.seed);
    gcims::write_model(pipeline, a.model_path);

    std::printf("wrote %s (%s, %zu features)\n", a.model_path.c_str(),
                gcims::describe(gcims::spec_of(pipeline.model)).c_str(),
                pipeline.mask.kept_indices.size());
    return 0;
}

struct PredictArgs {
    std::string model_path;
    std::string sample_path;
};

int cmd_predict(const PredictArgs& a) {
    const gcims::TrainedPipeline pipeline = gcims::read_model(a.model_path);
    const gcims::IMSSpectrum spectrum = gcims::read_imsx(a.sample_path);
    const gcims::Prediction pred = gcims::pipeline_predict(pipeline, spectrum);
    std::printf("%s %s %s\n", spectrum.sample_id.c_str(), gcims::label_name(pred.label),
                gcims::detail::format_fixed(pred.score, 6).c_str());
    return 0;
}

struct RenderArgs {
    std::string sample_path;
    std::string out_path;
    bool log_scale = false;
};

int cmd_render(const RenderArgs& a) {
    const gcims::IMSSpectrum spectrum = gcims::read_imsx(a.sample_path);
    const std::string pgm = render_pgm(spectrum, a.log_scale);
    gcims::detail::write_file_bytes(a.out_path, pgm);
    std::printf("wrote %s (%zux%zu)\n", a.out_path.c_str(), spectrum.intensity.cols,
                spectrum.intensity.rows);
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"GC-IMS infection screening toolkit"};
    app.set_config("--config", "", "read flags from a key = value file");
    app.require_subcommand(1);
    app.add_flag("--verbose", g_verbose, "progress details on stderr");

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "write a synthetic labelled dataset");
    generate->add_option("--out", gen.out_dir, "output directory")->required();
    generate->add_option("--n", gen.config.n_samples, "number of samples");
    generate->add_option("--rows", gen.config.rows, "retention-axis points");
    generate->add_option("--cols", gen.config.cols, "drift-axis points");
    generate->add_option("--common-peaks", gen.config.n_common_peaks, "peaks shared by both classes");
    generate->add_option("--biomarker-peaks", gen.config.n_biomarker_peaks, "Infected-only peaks");
    generate->add_option("--separation", gen.config.separation, "biomarker amplitude multiplier");
    generate->add_option("--noise", gen.config.noise_sigma, "additive noise sigma");
    generate->add_option("--drift", gen.config.baseline_drift, "baseline drift amplitude");
    generate->add_option("--infected-fraction", gen.config.infected_fraction, "Infected share");
    generate->add_option("--seed", gen.config.seed, "master seed");

    ValidateArgs val;
    CLI::App* validate = app.add_subcommand("validate", "run quality checks on a dataset");
    validate->add_option("--data", val.data_dir, "spectra directory")->required();
    validate->add_option("--meta", val.meta_path, "metadata table")->required();

    EvaluateArgs eval;
    CLI::App* evaluate = app.add_subcommand("evaluate", "benchmark classifiers on a dataset");
    evaluate->add_option("--data", eval.data_dir, "spectra directory")->required();
    evaluate->add_option("--meta", eval.meta_path, "metadata table")->required();
    evaluate->add_option("--algorithms", eval.algorithms, "all or comma list (dt,lr,rf,svm,plsda)");
    evaluate->add_option("--cv", eval.cv_folds, "cross-validation folds");
    evaluate->add_option("--test-fraction", eval.test_fraction, "held-out test share");
    evaluate->add_option("--k-features", eval.k_features, "features kept per algorithm (0 = default)");
    evaluate->add_option("--pca", eval.pca_components, "PCA components before selection");
    evaluate->add_option("--report", eval.report_path, "report path (.json; .csv written beside)")
        ->required();
    evaluate->add_option("--preprocess", eval.preprocess_path, "preprocess config file");
    evaluate->add_option("--seed", eval.seed, "master seed");

    TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "fit one classifier and write a model file");
    train_cmd->add_option("--data", train.data_dir, "spectra directory")->required();
    train_cmd->add_option("--meta", train.meta_path, "metadata table")->required();
    train_cmd->add_option("--model", train.model_path, "output model path")->required();
    train_cmd->add_option("--algorithm", train.algorithm, "dt, lr, rf, svm, or plsda");
    train_cmd->add_option("--cv", train.cv_folds, "cross-validation folds for tuning");
    train_cmd->add_option("--k-features", train.k_features, "features kept (0 = default)");
    train_cmd->add_option("--pca", train.pca_components, "PCA components before selection");
    train_cmd->add_option("--preprocess", train.preprocess_path, "preprocess config file");
    train_cmd->add_option("--seed", train.seed, "master seed");

    PredictArgs pred;
    CLI::App* predict = app.add_subcommand("predict", "classify one spectrum with a model file");
    predict->add_option("--model", pred.model_path, "model path")->required();
    predict->add_option("--sample", pred.sample_path, "spectrum file")->required();

    RenderArgs render;
    CLI::App* render_cmd = app.add_subcommand("render", "write a grayscale PGM image of a spectrum");
    render_cmd->add_option("--sample", render.sample_path, "spectrum file")->required();
    render_cmd->add_option("--out", render.out_path, "output .pgm path")->required();
    render_cmd->add_flag("--log", render.log_scale, "log10(1+x) intensity scale");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 3;  // bad flags/config are an invocation error
    }

    if (app.got_subcommand(generate)) return cmd_generate(gen);
    if (app.got_subcommand(validate)) return cmd_validate(val);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(eval);
    if (app.got_subcommand(train_cmd)) return cmd_train(train);
    if (app.got_subcommand(predict)) return cmd_predict(pred);
    return cmd_render(render);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const gcims::ConfigInvalid& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const gcims::InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const gcims::KTooLarge& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const gcims::MissingMetadataFile& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const gcims::IoFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const gcims::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}
