#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "gcims/core.hpp"
#include "gcims/errors.hpp"
#include "gcims/matrix.hpp"
#include "gcims/rng.hpp"

namespace gcims {

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

/// Knobs for the synthetic GC-IMS generator. Peaks are axis-aligned 2D
/// Gaussians; `separation` multiplies the amplitude of the biomarker peaks
/// that only Infected samples carry, so 0 means no class signal at all.
struct SynthConfig {
    std::size_t n_samples = 76;
    std::size_t rows = 315;  // retention axis
    std::size_t cols = 408;  // drift axis
    std::size_t n_common_peaks = 12;
    std::size_t n_biomarker_peaks = 3;
    double separation = 1.0;
    double noise_sigma = 0.02;     // fraction of the maximum peak amplitude
    double baseline_drift = 0.05;  // amplitude of the smooth background plane
    double infected_fraction = 0.5;
    std::uint64_t seed = 0;
};

inline void validate_config(const SynthConfig& c) {
    if (c.n_samples < 1) throw ConfigInvalid("synthgen: n_samples must be >= 1");
    if (c.rows < 16 || c.cols < 16) {
        throw ConfigInvalid("synthgen: grid must be at least 16x16 to place peaks");
    }
    if (!(c.separation >= 0.0)) throw ConfigInvalid("synthgen: separation must be >= 0");
    if (!(c.noise_sigma >= 0.0)) throw ConfigInvalid("synthgen: noise_sigma must be >= 0");
    if (!(c.baseline_drift >= 0.0)) throw ConfigInvalid("synthgen: baseline_drift must be >= 0");
    if (!(c.infected_fraction >= 0.0 && c.infected_fraction <= 1.0)) {
        throw ConfigInvalid("synthgen: infected_fraction must lie in [0, 1]");
    }
}

namespace detail {

struct SynthPeak {
    double center_row = 0.0;
    double center_col = 0.0;
    double sigma_row = 1.0;
    double sigma_col = 1.0;
    double amplitude = 1.0;
};

// Shared peak layout drawn once per dataset; per-sample jitter comes later.
// Centers stay within the middle 70% of the grid so +-1 cell jitter cannot
// push a peak outside it.
inline SynthPeak draw_peak(Rng& rng, const SynthConfig& c, double amp_lo, double amp_hi) {
    SynthPeak p;
    p.center_row = rng.uniform(0.15 * static_cast<double>(c.rows), 0.85 * static_cast<double>(c.rows));
    p.center_col = rng.uniform(0.15 * static_cast<double>(c.cols), 0.85 * static_cast<double>(c.cols));
    p.sigma_row = rng.uniform(2.0, 6.0);
    p.sigma_col = rng.uniform(2.0, 6.0);
    p.amplitude = rng.uniform(amp_lo, amp_hi);
    return p;
}

inline void add_peak(Matrix& m, const SynthPeak& p, double amplitude, double dr, double dc) {
    // Evaluate only within 4 sigma of the center; the tail beyond is < 4e-4
    // of the peak and invisible next to the noise floor.
    const double cr = p.center_row + dr, cc = p.center_col + dc;
    const long r0 = std::max(0L, static_cast<long>(std::floor(cr - 4.0 * p.sigma_row)));
    const long r1 = std::min(static_cast<long>(m.rows) - 1,
                             static_cast<long>(std::ceil(cr + 4.0 * p.sigma_row)));
    const long c0 = std::max(0L, static_cast<long>(std::floor(cc - 4.0 * p.sigma_col)));
    const long c1 = std::min(static_cast<long>(m.cols) - 1,
                             static_cast<long>(std::ceil(cc + 4.0 * p.sigma_col)));
    for (long r = r0; r <= r1; ++r) {
        const double zr = (static_cast<double>(r) - cr) / p.sigma_row;
        for (long c = c0; c <= c1; ++c) {
            const double zc = (static_cast<double>(c) - cc) / p.sigma_col;
            m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) +=
                amplitude * std::exp(-0.5 * (zr * zr + zc * zc));
        }
    }
}

inline std::string sample_date(std::size_t index) {
    using namespace std::chrono;
    const sys_days day = sys_days(year{2024} / January / 1) + days(static_cast<long>(index));
    const year_month_day ymd(day);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------------

/// Deterministic synthetic dataset. One seeded stream fixes the peak layout;
/// every sample then draws from its own derived stream, so any sample's
/// content is independent of how many others are generated. Biomarker draws
/// happen only for Infected samples, which keeps NotInfected spectra
/// bit-identical across separation settings.
inline Dataset generate(const SynthConfig& config) {
    validate_config(config);

    Rng layout_rng(derive_seed(config.seed, 0));
    std::vector<detail::SynthPeak> common, biomarkers;
    for (std::size_t p = 0; p < config.n_common_peaks; ++p) {
        common.push_back(detail::draw_peak(layout_rng, config, 0.5, 1.0));
    }
    for (std::size_t p = 0; p < config.n_biomarker_peaks; ++p) {
        biomarkers.push_back(detail::draw_peak(layout_rng, config, 0.4, 0.8));
    }

    // Class quota by largest remainder, assignment interleaved so class runs
    // never correlate with acquisition order.
    const auto n_infected = static_cast<std::size_t>(std::llround(
        static_cast<double>(config.n_samples) * config.infected_fraction));
    std::vector<SampleLabel> labels(config.n_samples, SampleLabel::NotInfected);
    std::size_t infected_used = 0, healthy_used = 0;
    for (std::size_t i = 0; i < config.n_samples; ++i) {
        const bool want_infected = i % 2 == 0;
        if ((want_infected && infected_used < n_infected) ||
            (!want_infected && healthy_used >= config.n_samples - n_infected)) {
            labels[i] = SampleLabel::Infected;
            ++infected_used;
        } else {
            ++healthy_used;
        }
    }

    const double noise = config.noise_sigma;       // max peak amplitude is 1.0
    const double pedestal = 4.0 * noise;           // keeps negative cells rare (~3e-5)
    const Axis retention(AxisKind::RetentionTime, 0.0, 2.0, config.rows);
    const Axis drift(AxisKind::DriftTime, 4.0, 0.025, config.cols);
    static const char* kSites[] = {"site_a", "site_b", "site_c"};

    std::vector<SampleRecord> records;
    std::map<std::string, IMSSpectrum> spectra;
    records.reserve(config.n_samples);

    for (std::size_t i = 0; i < config.n_samples; ++i) {
        Rng rng(derive_seed(config.seed, 1000 + i));

        char id[24];
        std::snprintf(id, sizeof(id), "S%03zu", i + 1);
        SampleRecord rec;
        rec.sample_id = id;
        rec.age = 18 + static_cast<int>(rng.below(82));  // 18..99
        rec.sex = i % 2 == 0 ? "male" : "female";
        rec.site = kSites[i % 3];
        rec.collected_on = detail::sample_date(i);
        rec.label = labels[i];

        Matrix m(config.rows, config.cols);
        for (double& v : m.data) v = pedestal;

        for (const detail::SynthPeak& p : common) {
            const double jitter = rng.uniform(0.9, 1.1);
            const double dr = rng.uniform(-1.0, 1.0);
            const double dc = rng.uniform(-1.0, 1.0);
            detail::add_peak(m, p, p.amplitude * jitter, dr, dc);
        }
        if (labels[i] == SampleLabel::Infected) {
            for (const detail::SynthPeak& p : biomarkers) {
                const double jitter = rng.uniform(0.9, 1.1);
                const double dr = rng.uniform(-1.0, 1.0);
                const double dc = rng.uniform(-1.0, 1.0);
                detail::add_peak(m, p, config.separation * p.amplitude * jitter, dr, dc);
            }
        }

        // Smooth low-order background: a gently sloped plane, never below
        // half the drift amplitude.
        const double slope_r = rng.uniform(0.0, 1.0);
        const double slope_c = rng.uniform(0.0, 1.0);
        if (config.baseline_drift > 0.0) {
            for (std::size_t r = 0; r < config.rows; ++r) {
                const double fr = static_cast<double>(r) / static_cast<double>(config.rows - 1);
                for (std::size_t c = 0; c < config.cols; ++c) {
                    const double fc = static_cast<double>(c) / static_cast<double>(config.cols - 1);
                    m(r, c) += config.baseline_drift * (0.5 + 0.25 * slope_r * fr + 0.25 * slope_c * fc);
                }
            }
        }
        if (noise > 0.0) {
            for (double& v : m.data) v += rng.normal(0.0, noise);
        }

        records.push_back(rec);
        spectra.emplace(rec.sample_id, IMSSpectrum(retention, drift, rec.sample_id, std::move(m)));
    }
    return Dataset(std::move(records), std::move(spectra));
}

// ---------------------------------------------------------------------------
// acceptance benchmark
// ---------------------------------------------------------------------------

/// Bounds the benchmark dataset is expected to meet when evaluated with the
/// default pipeline.
struct BenchmarkBounds {
    double min_accuracy = 0.75;  // random_forest, svm and plsda each reach this
    bool ensemble_beats_tree = true;  // ...and each scores >= the decision tree
    double max_seconds = 300.0;
};

struct ReferenceBenchmark {
    SynthConfig config;
    Dataset dataset;
    BenchmarkBounds bounds;
};

/// The fixed benchmark configuration: seed 42, all defaults (76 samples,
/// 315x408, separation 1.0, 38/38 class balance).
inline SynthConfig reference_benchmark_config() {
    SynthConfig config;
    config.seed = 42;
    return config;
}

inline ReferenceBenchmark reference_benchmark() {
    const SynthConfig config = reference_benchmark_config();
    return {config, generate(config), BenchmarkBounds{}};
}

}  // namespace gcims
