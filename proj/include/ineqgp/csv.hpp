#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ineqgp {

// Parse failure with the 1-based line it happened on.
struct CsvError : std::runtime_error {
    int line;
    CsvError(int line_, const std::string& message)
        : std::runtime_error("line " + std::to_string(line_) + ": " + message), line(line_) {}
};

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;  // one row per data line
};

// Comma-separated, '.' decimal, numeric body, header row required. A file
// whose first line parses entirely as numbers is rejected as headerless.
CsvTable read_csv(const std::string& path);
CsvTable csv_from_string(const std::string& text);

// 17-significant-digit output so every double round-trips through the reader.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
std::string csv_to_string(const std::vector<std::string>& header, const Eigen::MatrixXd& values);

}  // namespace ineqgp
