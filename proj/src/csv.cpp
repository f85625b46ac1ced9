#include "csl/csv.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace csl {

namespace {

std::vector<double> parse_line(const std::string& line) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find(',', pos);
    if (next == std::string::npos) next = line.size();
    const std::string field = line.substr(pos, next - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad CSV field '" + field + "'");
    }
    for (std::size_t i = used; i < field.size(); ++i) {
      if (!std::isspace(static_cast<unsigned char>(field[i]))) {
        throw std::invalid_argument("bad CSV field '" + field + "'");
      }
    }
    out.push_back(v);
    pos = next + 1;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd read_csv_rows(std::istream& in, int& d, std::size_t max_rows) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::string line;
  while (rows < max_rows && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto row = parse_line(line);
    if (d == 0) d = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != d) {
      throw std::invalid_argument("CSV row has " + std::to_string(row.size()) +
                                  " columns, expected " + std::to_string(d));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  Eigen::MatrixXd out(rows, d);
  for (std::size_t r = 0; r < rows; ++r)
    for (int c = 0; c < d; ++c) out(r, c) = values[r * d + c];
  return out;
}

Eigen::MatrixXd read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  int d = 0;
  return read_csv_rows(in, d, static_cast<std::size_t>(-1));
}

void write_csv(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[40];
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace csl
