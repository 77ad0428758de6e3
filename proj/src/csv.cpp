#include "ineqgp/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ineqgp {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& field, double* out) {
    const std::string t = trim(field);
    if (t.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) return false;
    *out = v;
    return true;
}

}  // namespace

CsvTable csv_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;

    if (!std::getline(in, line)) throw CsvError(1, "expected a header row, file is empty");
    ++lineno;
    CsvTable table;
    table.header = split_fields(line);
    bool all_numeric = true;
    for (auto& h : table.header) {
        h = trim(h);
        double ignored;
        if (h.empty() || !parse_double(h, &ignored)) all_numeric = false;
    }
    if (all_numeric)
        throw CsvError(1, "expected a header row, found numeric data");
    for (const auto& h : table.header)
        if (h.empty()) throw CsvError(1, "empty header field");

    const auto ncols = static_cast<Eigen::Index>(table.header.size());
    std::vector<Eigen::VectorXd> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            // A trailing newline is fine; a blank line with data after it is not.
            std::string rest;
            if (std::getline(in, rest)) throw CsvError(lineno, "blank line inside data");
            break;
        }
        const auto fields = split_fields(line);
        if (static_cast<Eigen::Index>(fields.size()) != ncols)
            throw CsvError(lineno, "expected " + std::to_string(ncols) + " fields, found " +
                                       std::to_string(fields.size()));
        Eigen::VectorXd row(ncols);
        for (Eigen::Index j = 0; j < ncols; ++j) {
            if (!parse_double(fields[j], &row[j]))
                throw CsvError(lineno, "cannot parse '" + trim(fields[j]) + "' as a number");
        }
        rows.push_back(std::move(row));
    }

    table.values.resize(static_cast<Eigen::Index>(rows.size()), ncols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        table.values.row(static_cast<Eigen::Index>(i)) = rows[i];
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return csv_from_string(text);
}

std::string csv_to_string(const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
    if (header.empty()) throw std::invalid_argument("csv: header required");
    if (values.size() > 0 && static_cast<std::size_t>(values.cols()) != header.size())
        throw std::invalid_argument("csv: column count does not match header");
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out += ',';
        out += header[j];
    }
    out += '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", values(i, j));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << csv_to_string(header, values);
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace ineqgp
