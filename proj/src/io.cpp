#include "memsim/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace memsim {

void write_matrix_csv(const Matrix& m, std::ostream& os) {
    os << std::setprecision(17);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) os << ',';
            os << m(r, c);
        }
        os << '\n';
    }
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    write_matrix_csv(m, f);
}

Matrix read_matrix_csv(std::istream& is) {
    std::vector<double> data;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            data.push_back(std::stod(cell));
            ++n;
        }
        if (rows == 0)
            cols = n;
        else if (n != cols)
            throw std::runtime_error("CSV: ragged row " + std::to_string(rows));
        ++rows;
    }
    return Matrix(rows, cols, std::move(data));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    return read_matrix_csv(f);
}

void write_vector_csv(const Vector& v, const std::filesystem::path& path) {
    write_matrix_csv(Matrix(v.size(), 1, v), path);
}

Vector read_vector_csv(const std::filesystem::path& path) {
    Matrix m = read_matrix_csv(path);
    if (m.cols() != 1 && m.rows() != 1)
        throw std::runtime_error("expected a single-column or single-row CSV: " +
                                 path.string());
    return m.values();
}

std::string matrix_to_json(const Matrix& m) {
    nlohmann::json j{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
    return j.dump();
}

Matrix matrix_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

std::uint64_t fnv1a_checksum(const std::string& content) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : content) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return fnv1a_checksum(ss.str());
}

}  // namespace memsim
