#pragma once

#include <cstddef>
#include <istream>
#include <string>

#include <Eigen/Dense>

namespace csl {

// Reads up to `max_rows` rows of a headerless comma-separated numeric file.
// Returns fewer rows at end of input. All rows must have `d` columns
// (d = 0 accepts the width of the first row and stores it in d).
Eigen::MatrixXd read_csv_rows(std::istream& in, int& d, std::size_t max_rows);

Eigen::MatrixXd read_csv(const std::string& path);
void write_csv(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& data);

}  // namespace csl
