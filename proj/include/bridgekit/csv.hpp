#ifndef BRIDGEKIT_CSV_HPP
#define BRIDGEKIT_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bridgekit::csv {

// One-header-row CSV writer with deterministic float formatting (17
// significant digits), so identical runs produce identical bytes.
class Writer {
  public:
    Writer(std::ostream& os, const std::vector<std::string>& header);
    Writer(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& cells);

  private:
    std::ofstream file_;
    std::ostream* os_;
    std::size_t columns_;
};

std::string format(double d);

// Reads a plain numeric CSV (optional non-numeric header row is skipped).
Eigen::MatrixXd read_matrix(const std::string& path);

}  // namespace bridgekit::csv

#endif
