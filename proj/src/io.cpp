#include "slope/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "slope/errors.hpp"

namespace slope {

std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    if (ec != std::errc()) throw InputError("cannot format number");
    return std::string(buf, ptr);
}

void RunManifest::write(std::ostream& os) const {
    os << "# tool: slope " << kToolVersion << '\n';
    os << "# command: " << command << '\n';
    if (!config_path.empty()) os << "# config: " << config_path << '\n';
    os << "# seed: " << seed << '\n';
    os << "# tolerances: eq_tol=" << format_double(tol.eq_tol) << " rank_tol=" << format_double(tol.rank_tol)
       << " pattern_tol=" << format_double(tol.pattern_tol)
       << " membership_tol=" << format_double(tol.membership_tol) << '\n';
    for (const std::string& o : outputs) os << "# output: " << o << '\n';
    for (const std::string& e : extra) os << "# " << e << '\n';
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_cell(std::string_view tok, const std::string& source, std::size_t line) {
    tok = trim(tok);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw InputError(source + ":" + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
    }
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    return out;
}

}  // namespace

Matrix parse_matrix_csv(std::istream& in, const std::string& source) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::vector<double> row;
        std::size_t pos = 0;
        for (;;) {
            const std::size_t comma = body.find(',', pos);
            row.push_back(parse_cell(body.substr(pos, comma == std::string_view::npos ? body.npos : comma - pos),
                                     source, lineno));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InputError(source + ":" + std::to_string(lineno) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(source + ": no data");
    Matrix A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return A;
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    return parse_matrix_csv(in, path);
}

Vector read_vector_csv(const std::string& path) {
    const Matrix A = read_matrix_csv(path);
    if (A.cols() == 1) return A.col(0);
    if (A.rows() == 1) return A.row(0).transpose();
    throw InputError(path + ": expected a single row or column");
}

void write_matrix_csv(const std::string& path, const Matrix& A, const RunManifest* manifest) {
    std::ofstream out = open_out(path);
    if (manifest) manifest->write(out);
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            if (j) out << ',';
            out << format_double(A(i, j));
        }
        out << '\n';
    }
}

void write_vector_csv(const std::string& path, const Vector& v, const RunManifest* manifest) {
    write_matrix_csv(path, Matrix(v), manifest);
}

void write_text(const std::string& path, const std::string& text, const RunManifest* manifest) {
    std::ofstream out = open_out(path);
    if (manifest) manifest->write(out);
    out << text;
}

}  // namespace slope
