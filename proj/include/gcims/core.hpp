#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gcims/errors.hpp"
#include "gcims/matrix.hpp"

namespace gcims {

enum class AxisKind { DriftTime, RetentionTime };

inline const char* axis_kind_name(AxisKind k) {
    return k == AxisKind::DriftTime ? "drift_time" : "retention_time";
}

/// Uniformly sampled instrument axis: values are start + i*step.
/// Drift time in milliseconds, retention time in seconds.
struct Axis {
    AxisKind kind;
    double start;
    double step;
    std::size_t count;

    Axis(AxisKind kind_, double start_, double step_, std::size_t count_)
        : kind(kind_), start(start_), step(step_), count(count_) {
        if (!std::isfinite(start) || !std::isfinite(step)) {
            throw InvalidArgument("Axis: start/step must be finite");
        }
        if (step <= 0.0) throw InvalidArgument("Axis: step must be positive");
        if (count < 2) throw InvalidArgument("Axis: count must be at least 2");
    }

    double value(std::size_t i) const { return start + static_cast<double>(i) * step; }

    bool operator==(const Axis& o) const {
        return kind == o.kind && start == o.start && step == o.step && count == o.count;
    }
};

enum class SampleLabel { NotInfected = 0, Infected = 1 };

inline const char* label_name(SampleLabel l) {
    return l == SampleLabel::Infected ? "Infected" : "NotInfected";
}

inline std::optional<SampleLabel> parse_label(const std::string& s) {
    if (s == "Infected") return SampleLabel::Infected;
    if (s == "NotInfected") return SampleLabel::NotInfected;
    return std::nullopt;
}

/// One GC-IMS measurement: intensity over retention-time rows x drift-time
/// columns. Immutable after construction apart from whole-value assignment.
struct IMSSpectrum {
    Axis retention_axis;
    Axis drift_axis;
    std::string sample_id;
    Matrix intensity;  // rows = retention count, cols = drift count

    IMSSpectrum(Axis retention, Axis drift, std::string id, Matrix values)
        : retention_axis(std::move(retention)),
          drift_axis(std::move(drift)),
          sample_id(std::move(id)),
          intensity(std::move(values)) {
        if (retention_axis.kind != AxisKind::RetentionTime || drift_axis.kind != AxisKind::DriftTime) {
            throw InvalidArgument("IMSSpectrum: axis kinds swapped");
        }
        if (intensity.rows != retention_axis.count || intensity.cols != drift_axis.count) {
            throw InvalidArgument("IMSSpectrum: intensity dimensions do not match axes");
        }
    }

    std::pair<std::size_t, std::size_t> shape() const { return {intensity.rows, intensity.cols}; }
};

inline std::pair<std::size_t, std::size_t> spectrum_shape(const IMSSpectrum& s) { return s.shape(); }

/// Row-major vector of length rows*cols; reshape() inverts it bit-exactly.
inline std::vector<double> flatten(const IMSSpectrum& s) { return s.intensity.data; }

inline IMSSpectrum reshape(const std::vector<double>& values, const Axis& retention, const Axis& drift,
                           const std::string& sample_id) {
    if (values.size() != retention.count * drift.count) {
        throw DimensionMismatch("reshape: vector length does not match axis counts");
    }
    Matrix m(retention.count, drift.count);
    m.data = values;
    return IMSSpectrum(retention, drift, sample_id, std::move(m));
}

/// Clinic-report metadata for one sample. Range/category rules are enforced
/// by validate_record in the io module, not at construction.
struct SampleRecord {
    std::string sample_id;
    int age = 0;
    std::string sex;
    std::string site;
    std::string collected_on;  // ISO-8601 date
    std::optional<SampleLabel> label;
};

/// Records plus their spectra. Construction enforces: every record resolves
/// to exactly one spectrum and all spectra share identical axes.
struct Dataset {
    std::vector<SampleRecord> records;
    std::map<std::string, IMSSpectrum> spectra;

    Dataset(std::vector<SampleRecord> recs, std::map<std::string, IMSSpectrum> specs)
        : records(std::move(recs)), spectra(std::move(specs)) {
        const Axis* retention = nullptr;
        const Axis* drift = nullptr;
        for (const auto& r : records) {
            auto it = spectra.find(r.sample_id);
            if (it == spectra.end()) {
                throw InvalidArgument("Dataset: record '" + r.sample_id + "' has no spectrum");
            }
            if (!retention) {
                retention = &it->second.retention_axis;
                drift = &it->second.drift_axis;
            } else if (!(it->second.retention_axis == *retention) || !(it->second.drift_axis == *drift)) {
                throw InvalidArgument("Dataset: spectrum '" + r.sample_id + "' has differing axes");
            }
        }
        for (std::size_t i = 0; i < records.size(); ++i) {
            for (std::size_t j = i + 1; j < records.size(); ++j) {
                if (records[i].sample_id == records[j].sample_id) {
                    throw InvalidArgument("Dataset: duplicate sample_id '" + records[i].sample_id + "'");
                }
            }
        }
    }

    std::size_t size() const { return records.size(); }

    const IMSSpectrum& spectrum(const std::string& sample_id) const {
        return spectra.at(sample_id);
    }
};

}  // namespace gcims
