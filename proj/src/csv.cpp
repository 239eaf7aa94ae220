#include "bridgekit/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace bridgekit::csv {

std::string format(double d) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    return buf;
}

Writer::Writer(std::ostream& os, const std::vector<std::string>& header)
    : os_(&os), columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) *os_ << ',';
        *os_ << header[i];
    }
    *os_ << '\n';
}

Writer::Writer(const std::string& path, const std::vector<std::string>& header)
    : file_(path), os_(&file_), columns_(header.size()) {
    if (!file_) throw std::runtime_error("csv: cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) *os_ << ',';
        *os_ << header[i];
    }
    *os_ << '\n';
}

void Writer::row(const std::vector<double>& values) {
    if (values.size() != columns_)
        throw std::invalid_argument("csv: row width does not match header");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) *os_ << ',';
        *os_ << format(values[i]);
    }
    *os_ << '\n';
}

void Writer::row_mixed(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw std::invalid_argument("csv: row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) *os_ << ',';
        *os_ << cells[i];
    }
    *os_ << '\n';
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t width = 0;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                row.push_back(v);
                (void)used;
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (rows.empty() && line_no == 1) continue;  // header row
            throw std::runtime_error("csv: non-numeric cell at line " +
                                     std::to_string(line_no) + " of " + path);
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw std::runtime_error("csv: ragged row at line " + std::to_string(line_no));
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace bridgekit::csv
