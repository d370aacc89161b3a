#pragma once

// Shared helpers for the test suite: quick spectrum/matrix builders and a
// self-cleaning temp directory.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gcims/core.hpp"
#include "gcims/matrix.hpp"

namespace testutil {

inline gcims::Matrix make_matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = rows.begin()->size();
    gcims::Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

inline gcims::IMSSpectrum make_spectrum(gcims::Matrix m, const std::string& id = "T001") {
    gcims::Axis retention(gcims::AxisKind::RetentionTime, 0.0, 2.0, m.rows);
    gcims::Axis drift(gcims::AxisKind::DriftTime, 4.0, 0.025, m.cols);
    return gcims::IMSSpectrum(retention, drift, id, std::move(m));
}

inline gcims::IMSSpectrum make_spectrum(std::initializer_list<std::initializer_list<double>> rows,
                                        const std::string& id = "T001") {
    return make_spectrum(make_matrix(rows), id);
}

// Temp directory removed on destruction; unique per construction.
class TempDir {
  public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        std::ostringstream name;
        name << "gcims_test_" << std::hex << rng();
        path_ = std::filesystem::temp_directory_path() / name.str();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace testutil
