#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcims/core.hpp"
#include "gcims/errors.hpp"

namespace gcims {

// ---------------------------------------------------------------------------
// little-endian encoding helpers (shared with the model container)
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32le(std::string& out, float v) {
    put_u32le(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64le(std::string& out, double v) {
    put_u64le(out, std::bit_cast<std::uint64_t>(v));
}

/// Byte cursor over an in-memory buffer; every read reports the offset of a
/// fault so format errors can name the exact byte.
class ByteReader {
public:
    ByteReader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

    void require(std::size_t n, const char* what) const {
        if (pos_ + n > size_) {
            throw TruncatedPayload(std::string("truncated while reading ") + what + " at byte offset " +
                                   std::to_string(pos_) + " (need " + std::to_string(n) + ", have " +
                                   std::to_string(size_ - pos_) + ")");
        }
    }

    void read_bytes(void* dst, std::size_t n, const char* what) {
        require(n, what);
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }

    std::uint16_t u16le(const char* what) {
        require(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_]) |
                          static_cast<std::uint16_t>(data_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }

    std::uint32_t u32le(const char* what) {
        require(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64le(const char* what) {
        require(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    float f32le(const char* what) { return std::bit_cast<float>(u32le(what)); }
    double f64le(const char* what) { return std::bit_cast<double>(u64le(what)); }

private:
    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoFailure("read failure on '" + path.string() + "'");
    return ss.str();
}

/// Writes via a temp file plus rename so a failed write leaves nothing behind.
inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot open '" + path.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out.good()) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoFailure("write failure on '" + path.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoFailure("cannot move temp file into place for '" + path.string() + "'");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// IMSX spectrum container
//
// Layout, little-endian throughout:
//   bytes 0..3   magic "IMSX"
//   bytes 4..5   format version, u16 (currently 1)
//   bytes 6..9   header length, u32
//   then         UTF-8 JSON header: sample_id, both axes, optional label
//   then         rows*cols float32 intensities, row-major; file ends here
// ---------------------------------------------------------------------------

inline constexpr char kImsxMagic[4] = {'I', 'M', 'S', 'X'};
inline constexpr std::uint16_t kImsxVersion = 1;

namespace detail {

inline nlohmann::json axis_to_json(const Axis& a) {
    return nlohmann::json{{"start", a.start}, {"step", a.step}, {"count", a.count}};
}

inline Axis axis_from_json(const nlohmann::json& j, AxisKind kind, const char* field) {
    if (!j.is_object() || !j.contains("start") || !j.contains("step") || !j.contains("count")) {
        throw MalformedHeader(std::string("header field '") + field + "' must carry start/step/count");
    }
    try {
        return Axis(kind, j.at("start").get<double>(), j.at("step").get<double>(),
                    j.at("count").get<std::size_t>());
    } catch (const InvalidArgument& e) {
        throw MalformedHeader(std::string("header field '") + field + "': " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw MalformedHeader(std::string("header field '") + field + "': " + e.what());
    }
}

}  // namespace detail

inline std::string imsx_header_text(const IMSSpectrum& s, std::optional<SampleLabel> label = std::nullopt) {
    nlohmann::json j{
        {"sample_id", s.sample_id},
        {"retention_axis", detail::axis_to_json(s.retention_axis)},
        {"drift_axis", detail::axis_to_json(s.drift_axis)},
    };
    if (label) j["label"] = label_name(*label);
    return j.dump();
}

/// Serializes a spectrum to IMSX bytes. Intensities are stored at 32-bit
/// precision; readers widen back to double.
inline std::string encode_imsx(const IMSSpectrum& s, std::optional<SampleLabel> label = std::nullopt) {
    const std::string header = imsx_header_text(s, label);
    std::string out;
    out.reserve(10 + header.size() + 4 * s.intensity.size());
    out.append(kImsxMagic, 4);
    detail::put_u16le(out, kImsxVersion);
    detail::put_u32le(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    for (double v : s.intensity.data) detail::put_f32le(out, static_cast<float>(v));
    return out;
}

/// Writes an IMSX file, returns the byte count. No partial file survives a
/// failed write.
inline std::size_t write_imsx(const IMSSpectrum& s, const std::filesystem::path& destination,
                              std::optional<SampleLabel> label = std::nullopt) {
    const std::string bytes = encode_imsx(s, label);
    detail::write_file_bytes(destination, bytes);
    return bytes.size();
}

struct ImsxContents {
    IMSSpectrum spectrum;
    std::optional<SampleLabel> label;
};

inline ImsxContents decode_imsx(const std::string& bytes) {
    detail::ByteReader r(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());

    char magic[4];
    r.read_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kImsxMagic, 4) != 0) {
        throw BadMagic("bad magic at byte offset 0: expected \"IMSX\"");
    }
    const std::uint16_t version = r.u16le("format version");
    if (version != kImsxVersion) {
        throw UnsupportedVersion("unsupported IMSX version " + std::to_string(version) +
                                 " at byte offset 4");
    }
    const std::uint32_t header_len = r.u32le("header length");
    if (r.remaining() < header_len) {
        throw MalformedHeader("header length " + std::to_string(header_len) +
                              " exceeds file size (header starts at byte offset 10)");
    }
    std::string header(header_len, '\0');
    r.read_bytes(header.data(), header_len, "header");

    nlohmann::json j = nlohmann::json::parse(header, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw MalformedHeader("header at byte offset 10 is not a JSON object");
    }
    if (!j.contains("sample_id") || !j.at("sample_id").is_string()) {
        throw MalformedHeader("header missing string field 'sample_id'");
    }
    Axis retention = detail::axis_from_json(j.value("retention_axis", nlohmann::json()),
                                            AxisKind::RetentionTime, "retention_axis");
    Axis drift =
        detail::axis_from_json(j.value("drift_axis", nlohmann::json()), AxisKind::DriftTime, "drift_axis");

    std::optional<SampleLabel> label;
    if (j.contains("label")) {
        if (!j.at("label").is_string()) throw MalformedHeader("header field 'label' must be a string");
        label = parse_label(j.at("label").get<std::string>());
        if (!label) throw MalformedHeader("header field 'label' must be Infected or NotInfected");
    }

    const std::size_t cells = retention.count * drift.count;
    const std::size_t expected = 4 * cells;
    if (r.remaining() != expected) {
        throw TruncatedPayload("payload at byte offset " + std::to_string(r.offset()) + " has " +
                               std::to_string(r.remaining()) + " bytes, expected exactly " +
                               std::to_string(expected));
    }
    Matrix m(retention.count, drift.count);
    for (std::size_t i = 0; i < cells; ++i) {
        m.data[i] = static_cast<double>(r.f32le("payload"));
    }
    std::string sample_id = j.at("sample_id").get<std::string>();
    return ImsxContents{IMSSpectrum(retention, drift, sample_id, std::move(m)), label};
}

inline IMSSpectrum read_imsx(const std::filesystem::path& source) {
    return decode_imsx(detail::read_file_bytes(source)).spectrum;
}

inline ImsxContents read_imsx_with_label(const std::filesystem::path& source) {
    return decode_imsx(detail::read_file_bytes(source));
}

// ---------------------------------------------------------------------------
// quality checks
// ---------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool passed;
    std::string message;
};

struct ValidationReport {
    std::string sample_id;
    std::vector<CheckResult> checks;

    bool overall() const {
        for (const auto& c : checks) {
            if (!c.passed) return false;
        }
        return true;
    }

    std::string failing_checks() const {
        std::string out;
        for (const auto& c : checks) {
            if (!c.passed) {
                if (!out.empty()) out += ",";
                out += c.name;
            }
        }
        return out;
    }
};

/// Share of cells allowed below zero before a measurement is rejected.
/// Baseline-corrected data legitimately dips slightly negative.
inline constexpr double kNegativeCellTolerance = 0.01;

inline ValidationReport validate_measurement(const IMSSpectrum& s) {
    ValidationReport report;
    report.sample_id = s.sample_id;

    std::size_t non_finite = 0;
    std::size_t negative = 0;
    for (double v : s.intensity.data) {
        if (!std::isfinite(v)) ++non_finite;
        if (v < 0.0) ++negative;
    }
    report.checks.push_back({"finite_values", non_finite == 0,
                             non_finite == 0 ? "all cells finite"
                                             : std::to_string(non_finite) + " non-finite cells"});

    const bool monotonic = s.retention_axis.step > 0.0 && s.drift_axis.step > 0.0;
    report.checks.push_back(
        {"axes_monotonic", monotonic, monotonic ? "both axes strictly increasing" : "non-positive axis step"});

    const bool dims = s.intensity.rows == s.retention_axis.count && s.intensity.cols == s.drift_axis.count;
    report.checks.push_back({"dims_match_header", dims,
                             dims ? "intensity matches declared axis counts" : "dimension mismatch"});

    const double fraction =
        s.intensity.size() == 0 ? 0.0 : static_cast<double>(negative) / static_cast<double>(s.intensity.size());
    const bool neg_ok = fraction <= kNegativeCellTolerance;
    {
        std::ostringstream msg;
        msg << "negative cell fraction " << fraction << " (tolerance " << kNegativeCellTolerance << ")";
        report.checks.push_back({"nonnegative_fraction", neg_ok, msg.str()});
    }
    return report;
}

inline bool valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    const int year = std::stoi(s.substr(0, 4));
    const int month = std::stoi(s.substr(5, 2));
    const int day = std::stoi(s.substr(8, 2));
    if (month < 1 || month > 12 || day < 1) return false;
    static constexpr int days_in_month[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_day = days_in_month[month - 1];
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    if (month == 2 && leap) max_day = 29;
    return day <= max_day;
}

inline ValidationReport validate_record(const SampleRecord& r) {
    ValidationReport report;
    report.sample_id = r.sample_id;

    const bool age_ok = r.age >= 0 && r.age < 100;
    report.checks.push_back(
        {"age_range", age_ok, "age " + std::to_string(r.age) + (age_ok ? " within [0, 100)" : " outside [0, 100)")});

    const bool sex_ok = r.sex == "male" || r.sex == "female";
    report.checks.push_back({"sex_category", sex_ok,
                             sex_ok ? "sex category valid" : "sex '" + r.sex + "' not in {male, female}"});

    report.checks.push_back(
        {"id_nonempty", !r.sample_id.empty(), r.sample_id.empty() ? "empty sample_id" : "sample_id present"});

    const bool date_ok = valid_iso_date(r.collected_on);
    report.checks.push_back({"date_parseable", date_ok,
                             date_ok ? "collected_on is a valid ISO-8601 date"
                                     : "collected_on '" + r.collected_on + "' is not a valid ISO-8601 date"});
    return report;
}

// ---------------------------------------------------------------------------
// metadata table
//
// Comma-delimited UTF-8, fixed header, one row per sample:
//   sample_id,age,sex,site,collected_on,label
// label may be empty for unlabeled samples. Extra columns are rejected.
// ---------------------------------------------------------------------------

inline constexpr const char* kMetadataHeader = "sample_id,age,sex,site,collected_on,label";

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace detail

inline std::vector<SampleRecord> parse_metadata(const std::string& text) {
    std::vector<SampleRecord> records;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw MalformedMetadata("metadata is empty (line 1)");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetadataHeader) {
        throw MalformedMetadata("line 1: header must be exactly '" + std::string(kMetadataHeader) + "'");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 6) {
            throw MalformedMetadata("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                                    std::to_string(fields.size()));
        }
        SampleRecord rec;
        rec.sample_id = fields[0];
        const auto* first = fields[1].data();
        const auto* last = first + fields[1].size();
        auto [ptr, ec] = std::from_chars(first, last, rec.age);
        if (ec != std::errc{} || ptr != last) {
            throw MalformedMetadata("line " + std::to_string(line_no) + ": age '" + fields[1] +
                                    "' is not an integer");
        }
        rec.sex = fields[2];
        rec.site = fields[3];
        rec.collected_on = fields[4];
        if (!fields[5].empty()) {
            rec.label = parse_label(fields[5]);
            if (!rec.label) {
                throw MalformedMetadata("line " + std::to_string(line_no) + ": label '" + fields[5] +
                                        "' must be Infected, NotInfected, or empty");
            }
        }
        for (const auto& prev : records) {
            if (prev.sample_id == rec.sample_id) {
                throw MalformedMetadata("line " + std::to_string(line_no) + ": duplicate sample_id '" +
                                        rec.sample_id + "'");
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<SampleRecord> read_metadata(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw MissingMetadataFile("metadata file '" + path.string() + "' does not exist");
    }
    return parse_metadata(detail::read_file_bytes(path));
}

inline std::string format_metadata(const std::vector<SampleRecord>& records) {
    std::string out = kMetadataHeader;
    out += '\n';
    for (const auto& r : records) {
        out += r.sample_id;
        out += ',';
        out += std::to_string(r.age);
        out += ',';
        out += r.sex;
        out += ',';
        out += r.site;
        out += ',';
        out += r.collected_on;
        out += ',';
        if (r.label) out += label_name(*r.label);
        out += '\n';
    }
    return out;
}

inline void write_metadata(const std::vector<SampleRecord>& records, const std::filesystem::path& path) {
    detail::write_file_bytes(path, format_metadata(records));
}

// ---------------------------------------------------------------------------
// dataset loading with CRF gatekeeping
// ---------------------------------------------------------------------------

struct DatasetScan {
    std::vector<ValidationReport> reports;  // one per metadata row, in file order
    std::vector<SampleRecord> kept_records;
    std::map<std::string, IMSSpectrum> kept_spectra;

    bool all_passed() const {
        for (const auto& r : reports) {
            if (!r.overall()) return false;
        }
        return true;
    }
};

/// Reads spectra_dir/<sample_id>.imsx for every metadata row, validating both
/// sides. A sample is kept only when record AND measurement checks all pass;
/// a failing clinic record excludes the sample even if its spectrum is clean.
inline DatasetScan scan_dataset(const std::filesystem::path& spectra_dir,
                                const std::filesystem::path& metadata_path) {
    const std::vector<SampleRecord> all_records = read_metadata(metadata_path);

    DatasetScan scan;
    std::optional<Axis> ref_retention;
    std::optional<Axis> ref_drift;

    for (const auto& rec : all_records) {
        ValidationReport report = validate_record(rec);

        const std::filesystem::path file = spectra_dir / (rec.sample_id + ".imsx");
        std::optional<IMSSpectrum> spectrum;
        try {
            spectrum = read_imsx(file);
            report.checks.push_back({"spectrum_readable", true, file.filename().string() + " parsed"});
        } catch (const Error& e) {
            report.checks.push_back({"spectrum_readable", false, e.what()});
        }

        if (spectrum) {
            ValidationReport meas = validate_measurement(*spectrum);
            for (auto& c : meas.checks) report.checks.push_back(std::move(c));

            if (!ref_retention) {
                if (report.overall()) {
                    ref_retention = spectrum->retention_axis;
                    ref_drift = spectrum->drift_axis;
                }
            } else {
                const bool same = spectrum->retention_axis == *ref_retention &&
                                  spectrum->drift_axis == *ref_drift;
                report.checks.push_back({"axes_consistent", same,
                                         same ? "axes match the rest of the dataset"
                                              : "axes differ from the rest of the dataset"});
            }
        }

        if (report.overall() && spectrum) {
            scan.kept_records.push_back(rec);
            scan.kept_spectra.emplace(rec.sample_id, std::move(*spectrum));
        }
        scan.reports.push_back(std::move(report));
    }
    return scan;
}

struct LoadedDataset {
    Dataset dataset;
    std::vector<ValidationReport> reports;  // one per metadata row, in file order
};

inline LoadedDataset load_dataset(const std::filesystem::path& spectra_dir,
                                  const std::filesystem::path& metadata_path) {
    DatasetScan scan = scan_dataset(spectra_dir, metadata_path);
    if (scan.kept_records.empty()) {
        throw NoValidSamples("no sample passed both record and measurement validation");
    }
    return LoadedDataset{Dataset(std::move(scan.kept_records), std::move(scan.kept_spectra)),
                         std::move(scan.reports)};
}

}  // namespace gcims
