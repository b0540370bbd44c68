#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "slope/numerics.hpp"

namespace slope {

inline constexpr const char* kToolVersion = "0.1.0";

/// Header block written as '#'-prefixed lines at the top of every output file.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    Tolerances tol{};
    std::vector<std::string> outputs;
    std::vector<std::string> extra;  // free-form "key: value" lines

    void write(std::ostream& os) const;
};

/// Shortest round-trip text for a double (17 significant digits).
std::string format_double(double x);

/// Headerless CSV; blank lines and lines starting with '#' are skipped.
/// Throws InputError on unreadable files, ragged rows or bad numbers.
Matrix read_matrix_csv(const std::string& path);
/// A single column or a single row.
Vector read_vector_csv(const std::string& path);

Matrix parse_matrix_csv(std::istream& in, const std::string& source);

void write_matrix_csv(const std::string& path, const Matrix& A, const RunManifest* manifest = nullptr);
void write_vector_csv(const std::string& path, const Vector& v, const RunManifest* manifest = nullptr);
/// Writes `text` after the manifest header.
void write_text(const std::string& path, const std::string& text, const RunManifest* manifest = nullptr);

}  // namespace slope
