#include "csl/hypothesis_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "csl/errors.hpp"

namespace csl {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("cannot write a non-finite number to JSON");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hypothesis_to_json(const HypothesisRecord& rec) {
  const Hypothesis& h = rec.hypothesis;
  std::ostringstream out;
  out << "{\"family\": \"" << family_name(rec.family) << "\", \"d\": " << h.d() << ", \"k\": " << h.k()
      << ", \"centroids\": [";
  for (int l = 0; l < h.k(); ++l) {
    out << (l ? ", [" : "[");
    for (int c = 0; c < h.d(); ++c) out << (c ? ", " : "") << format_double(h.centroids(l, c));
    out << "]";
  }
  out << "], \"alphas\": [";
  for (int l = 0; l < h.k(); ++l) out << (l ? ", " : "") << format_double(h.alphas(l));
  out << "], \"eps\": " << format_double(rec.eps) << ", \"R\": " << format_double(rec.R) << "}\n";
  return out.str();
}

HypothesisRecord hypothesis_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("hypothesis JSON: ") + e.what());
  }
  try {
    HypothesisRecord rec;
    rec.family = family_from_name(j.at("family").get<std::string>().c_str());
    const int d = j.at("d").get<int>();
    const int k = j.at("k").get<int>();
    const auto& cs = j.at("centroids");
    const auto& as = j.at("alphas");
    if (d < 1 || k < 1 || static_cast<int>(cs.size()) != k || static_cast<int>(as.size()) != k) {
      throw FormatError("hypothesis JSON: sizes do not match d and k");
    }
    Eigen::MatrixXd c(k, d);
    Eigen::VectorXd a(k);
    for (int l = 0; l < k; ++l) {
      if (static_cast<int>(cs[l].size()) != d) throw FormatError("hypothesis JSON: centroid width != d");
      for (int q = 0; q < d; ++q) c(l, q) = cs[l][q].get<double>();
      a(l) = as[l].get<double>();
    }
    // Stored as written so a save/load round trip is bit-exact.
    rec.hypothesis.centroids = std::move(c);
    rec.hypothesis.alphas = std::move(a);
    rec.hypothesis.validate();
    rec.eps = j.at("eps").get<double>();
    rec.R = j.at("R").get<double>();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("hypothesis JSON: ") + e.what());
  }
}

void save_hypothesis(const HypothesisRecord& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << hypothesis_to_json(rec);
}

HypothesisRecord load_hypothesis(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hypothesis_from_json(ss.str());
}

}  // namespace csl
