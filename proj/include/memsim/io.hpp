#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "memsim/matrix.hpp"

namespace memsim {

// CSV: one row per line, '.' decimal separator, no header.
void write_matrix_csv(const Matrix& m, std::ostream& os);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(std::istream& is);
Matrix read_matrix_csv(const std::filesystem::path& path);

void write_vector_csv(const Vector& v, const std::filesystem::path& path);
Vector read_vector_csv(const std::filesystem::path& path);

// JSON wrapper: {"rows": r, "cols": c, "data": [...]} (row-major)
std::string matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const std::string& text);

std::uint64_t fnv1a_checksum(const std::string& content);
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace memsim
