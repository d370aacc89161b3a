#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gcims/core.hpp"
#include "gcims/errors.hpp"

namespace gcims {

// ---------------------------------------------------------------------------
// step configuration
// ---------------------------------------------------------------------------

enum class NormalizeMode { Tic, Max };

struct DespikeStep {
    int window = 3;  // odd, >= 3
};
struct SmoothStep {
    double sigma = 1.0;  // in cells
};
struct BaselineStep {
    double percentile = 10.0;  // 0..50
};
struct NormalizeStep {
    NormalizeMode mode = NormalizeMode::Tic;
};
struct BinStep {
    std::size_t factor_rows = 1;
    std::size_t factor_cols = 1;
};

using PreprocessStep = std::variant<DespikeStep, SmoothStep, BaselineStep, NormalizeStep, BinStep>;

/// Ordered, possibly empty list of steps. Serializes to one "key = value"
/// line per step, parsed back by parse().
struct PreprocessConfig {
    std::vector<PreprocessStep> steps;

    static PreprocessConfig identity() { return {}; }

    /// The pipeline applied when the CLI is given no --preprocess file:
    /// artifact removal, denoising, background subtraction, normalization,
    /// then binning to a desk-scale feature count.
    static PreprocessConfig standard() {
        PreprocessConfig c;
        c.steps = {DespikeStep{3}, SmoothStep{1.0}, BaselineStep{10.0}, NormalizeStep{NormalizeMode::Tic},
                   BinStep{3, 3}};
        return c;
    }

    std::string to_text() const;
    static PreprocessConfig parse(const std::string& text);
};

namespace detail {

inline void check_despike_window(int window) {
    if (window < 3 || window % 2 == 0) {
        throw InvalidArgument("despike: window must be odd and >= 3, got " + std::to_string(window));
    }
}

inline void check_baseline_percentile(double p) {
    if (!(p >= 0.0 && p <= 50.0)) {
        throw InvalidArgument("baseline: percentile must lie in [0, 50]");
    }
}

inline void check_smooth_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("smooth: sigma must be positive and finite");
    }
}

inline void check_bin_factors(std::size_t fr, std::size_t fc) {
    if (fr < 1 || fc < 1) throw InvalidArgument("bin: factors must be >= 1");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// steps
// ---------------------------------------------------------------------------

/// Impulse-artifact removal. A cell is replaced by the median of its
/// window x window neighborhood (center excluded, clipped at edges) when it
/// exceeds that median by more than five neighborhood standard deviations.
/// Statistics come from the input matrix, so the result is order-independent.
inline IMSSpectrum despike(const IMSSpectrum& s, int window) {
    detail::check_despike_window(window);
    const std::size_t rows = s.intensity.rows;
    const std::size_t cols = s.intensity.cols;
    if (static_cast<std::size_t>(window) > std::min(rows, cols)) {
        throw WindowTooLarge("despike: window " + std::to_string(window) +
                             " exceeds the smaller matrix dimension " +
                             std::to_string(std::min(rows, cols)));
    }

    const int radius = window / 2;
    Matrix out = s.intensity;
    std::vector<double> neighborhood;
    neighborhood.reserve(static_cast<std::size_t>(window) * window);

    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            neighborhood.clear();
            const std::size_t r0 = r >= static_cast<std::size_t>(radius) ? r - radius : 0;
            const std::size_t r1 = std::min(rows - 1, r + radius);
            const std::size_t c0 = c >= static_cast<std::size_t>(radius) ? c - radius : 0;
            const std::size_t c1 = std::min(cols - 1, c + radius);
            for (std::size_t rr = r0; rr <= r1; ++rr) {
                for (std::size_t cc = c0; cc <= c1; ++cc) {
                    if (rr == r && cc == c) continue;
                    neighborhood.push_back(s.intensity(rr, cc));
                }
            }

            std::sort(neighborhood.begin(), neighborhood.end());
            const std::size_t n = neighborhood.size();
            const double median = n % 2 == 1 ? neighborhood[n / 2]
                                             : 0.5 * (neighborhood[n / 2 - 1] + neighborhood[n / 2]);
            double mean = 0.0;
            for (double v : neighborhood) mean += v;
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (double v : neighborhood) var += (v - mean) * (v - mean);
            var /= static_cast<double>(n);
            const double stdev = std::sqrt(var);

            if (s.intensity(r, c) - median > 5.0 * stdev) {
                out(r, c) = median;
            }
        }
    }
    return IMSSpectrum(s.retention_axis, s.drift_axis, s.sample_id, std::move(out));
}

namespace detail {

/// Reflect an index into [0, n) symmetrically, edge sample included
/// (..., x1, x0 | x0, x1, ...). Folds repeatedly so any radius is legal.
inline std::size_t reflect_index(long i, long n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return static_cast<std::size_t>(i);
}

inline std::vector<double> gaussian_kernel(double sigma) {
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        const double w = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        k[i + radius] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

}  // namespace detail

/// Gaussian denoising: separable 2D convolution, kernel truncated at three
/// sigma, symmetric reflection at the edges. The normalized kernel plus
/// reflective padding keep total intensity unchanged up to rounding.
inline IMSSpectrum smooth(const IMSSpectrum& s, double sigma) {
    detail::check_smooth_sigma(sigma);
    const std::vector<double> kernel = detail::gaussian_kernel(sigma);
    const long radius = static_cast<long>(kernel.size() / 2);
    const long rows = static_cast<long>(s.intensity.rows);
    const long cols = static_cast<long>(s.intensity.cols);

    Matrix tmp(s.intensity.rows, s.intensity.cols);
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (long k = -radius; k <= radius; ++k) {
                acc += kernel[k + radius] * s.intensity(r, detail::reflect_index(c + k, cols));
            }
            tmp(r, c) = acc;
        }
    }
    Matrix out(s.intensity.rows, s.intensity.cols);
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (long k = -radius; k <= radius; ++k) {
                acc += kernel[k + radius] * tmp(detail::reflect_index(r + k, rows), c);
            }
            out(r, c) = acc;
        }
    }
    return IMSSpectrum(s.retention_axis, s.drift_axis, s.sample_id, std::move(out));
}

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value, never
/// interpolated, so every implementation agrees bit for bit.
inline double nearest_rank_percentile(std::vector<double> values, double percentile) {
    if (values.empty()) throw InvalidArgument("percentile of an empty range");
    const std::size_t n = values.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
    return values[rank - 1];
}

/// Per-row background removal along the drift axis: subtracts each retention
/// row's given percentile from every cell of that row.
inline IMSSpectrum baseline(const IMSSpectrum& s, double percentile) {
    detail::check_baseline_percentile(percentile);
    Matrix out = s.intensity;
    std::vector<double> rowbuf(s.intensity.cols);
    for (std::size_t r = 0; r < s.intensity.rows; ++r) {
        std::copy(s.intensity.row(r), s.intensity.row(r) + s.intensity.cols, rowbuf.begin());
        const double level = nearest_rank_percentile(rowbuf, percentile);
        for (std::size_t c = 0; c < s.intensity.cols; ++c) out(r, c) -= level;
    }
    return IMSSpectrum(s.retention_axis, s.drift_axis, s.sample_id, std::move(out));
}

inline IMSSpectrum normalize(const IMSSpectrum& s, NormalizeMode mode) {
    double divisor = 0.0;
    if (mode == NormalizeMode::Tic) {
        for (double v : s.intensity.data) divisor += v;
    } else {
        divisor = *std::max_element(s.intensity.data.begin(), s.intensity.data.end());
    }
    if (!(divisor > 0.0)) {
        throw DegenerateSpectrum("normalize: spectrum has no positive intensity to scale by");
    }
    Matrix out = s.intensity;
    for (double& v : out.data) v /= divisor;
    return IMSSpectrum(s.retention_axis, s.drift_axis, s.sample_id, std::move(out));
}

/// Block-mean pooling of a raw matrix; trailing partial blocks are averaged
/// over their actual size.
inline Matrix block_mean(const Matrix& m, std::size_t factor_rows, std::size_t factor_cols) {
    detail::check_bin_factors(factor_rows, factor_cols);
    const std::size_t out_rows = (m.rows + factor_rows - 1) / factor_rows;
    const std::size_t out_cols = (m.cols + factor_cols - 1) / factor_cols;
    Matrix out(out_rows, out_cols);
    for (std::size_t br = 0; br < out_rows; ++br) {
        const std::size_t r0 = br * factor_rows;
        const std::size_t r1 = std::min(m.rows, r0 + factor_rows);
        for (std::size_t bc = 0; bc < out_cols; ++bc) {
            const std::size_t c0 = bc * factor_cols;
            const std::size_t c1 = std::min(m.cols, c0 + factor_cols);
            double acc = 0.0;
            for (std::size_t r = r0; r < r1; ++r) {
                for (std::size_t c = c0; c < c1; ++c) acc += m(r, c);
            }
            out(br, bc) = acc / static_cast<double>((r1 - r0) * (c1 - c0));
        }
    }
    return out;
}

/// Downsamples by block means. Axis step scales by the factor and count by
/// ceiling division; the resulting axes must keep at least two points, the
/// floor every spectrum axis carries.
inline IMSSpectrum bin(const IMSSpectrum& s, std::size_t factor_rows, std::size_t factor_cols) {
    Matrix pooled = block_mean(s.intensity, factor_rows, factor_cols);
    if (pooled.rows < 2 || pooled.cols < 2) {
        throw InvalidArgument("bin: factors (" + std::to_string(factor_rows) + ", " +
                              std::to_string(factor_cols) + ") would leave fewer than 2 axis points");
    }
    Axis retention(AxisKind::RetentionTime, s.retention_axis.start,
                   s.retention_axis.step * static_cast<double>(factor_rows), pooled.rows);
    Axis drift(AxisKind::DriftTime, s.drift_axis.start,
               s.drift_axis.step * static_cast<double>(factor_cols), pooled.cols);
    return IMSSpectrum(retention, drift, s.sample_id, std::move(pooled));
}

/// Applies the configured steps in order; an empty config is the identity.
inline IMSSpectrum run_pipeline(const IMSSpectrum& s, const PreprocessConfig& config) {
    IMSSpectrum current = s;
    for (const auto& step : config.steps) {
        current = std::visit(
            [&](const auto& st) -> IMSSpectrum {
                using T = std::decay_t<decltype(st)>;
                if constexpr (std::is_same_v<T, DespikeStep>) {
                    return despike(current, st.window);
                } else if constexpr (std::is_same_v<T, SmoothStep>) {
                    return smooth(current, st.sigma);
                } else if constexpr (std::is_same_v<T, BaselineStep>) {
                    return baseline(current, st.percentile);
                } else if constexpr (std::is_same_v<T, NormalizeStep>) {
                    return normalize(current, st.mode);
                } else {
                    return bin(current, st.factor_rows, st.factor_cols);
                }
            },
            step);
    }
    return current;
}

// ---------------------------------------------------------------------------
// config serialization: one "key = value" line per step, in order
// ---------------------------------------------------------------------------

inline std::string PreprocessConfig::to_text() const {
    std::ostringstream out;
    for (const auto& step : steps) {
        std::visit(
            [&](const auto& st) {
                using T = std::decay_t<decltype(st)>;
                if constexpr (std::is_same_v<T, DespikeStep>) {
                    out << "despike = " << st.window << '\n';
                } else if constexpr (std::is_same_v<T, SmoothStep>) {
                    out << "smooth = " << st.sigma << '\n';
                } else if constexpr (std::is_same_v<T, BaselineStep>) {
                    out << "baseline = " << st.percentile << '\n';
                } else if constexpr (std::is_same_v<T, NormalizeStep>) {
                    out << "normalize = " << (st.mode == NormalizeMode::Tic ? "tic" : "max") << '\n';
                } else {
                    out << "bin = " << st.factor_rows << ' ' << st.factor_cols << '\n';
                }
            },
            step);
    }
    return out.str();
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline PreprocessConfig PreprocessConfig::parse(const std::string& text) {
    PreprocessConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigInvalid("preprocess config line " + std::to_string(line_no) +
                                ": expected 'key = value'");
        }
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        std::istringstream vs(value);
        try {
            if (key == "despike") {
                int window = 0;
                if (!(vs >> window)) throw InvalidArgument("despike needs an integer window");
                detail::check_despike_window(window);
                config.steps.push_back(DespikeStep{window});
            } else if (key == "smooth") {
                double sigma = 0.0;
                if (!(vs >> sigma)) throw InvalidArgument("smooth needs a numeric sigma");
                detail::check_smooth_sigma(sigma);
                config.steps.push_back(SmoothStep{sigma});
            } else if (key == "baseline") {
                double pct = 0.0;
                if (!(vs >> pct)) throw InvalidArgument("baseline needs a numeric percentile");
                detail::check_baseline_percentile(pct);
                config.steps.push_back(BaselineStep{pct});
            } else if (key == "normalize") {
                std::string mode;
                vs >> mode;
                if (mode == "tic") {
                    config.steps.push_back(NormalizeStep{NormalizeMode::Tic});
                } else if (mode == "max") {
                    config.steps.push_back(NormalizeStep{NormalizeMode::Max});
                } else {
                    throw InvalidArgument("normalize mode must be tic or max");
                }
            } else if (key == "bin") {
                long fr = 0, fc = 0;
                if (!(vs >> fr >> fc) || fr < 1 || fc < 1) {
                    throw InvalidArgument("bin needs two integer factors >= 1");
                }
                config.steps.push_back(
                    BinStep{static_cast<std::size_t>(fr), static_cast<std::size_t>(fc)});
            } else {
                throw InvalidArgument("unknown step '" + key + "'");
            }
        } catch (const InvalidArgument& e) {
            throw ConfigInvalid("preprocess config line " + std::to_string(line_no) + ": " + e.what());
        }
        std::string leftover;
        if (vs >> leftover) {
            throw ConfigInvalid("preprocess config line " + std::to_string(line_no) +
                                ": trailing tokens after value");
        }
    }
    return config;
}

}  // namespace gcims
