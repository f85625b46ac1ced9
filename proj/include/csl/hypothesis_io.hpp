#pragma once

#include <string>

#include "csl/kernel.hpp"
#include "csl/mixture.hpp"

namespace csl {

struct HypothesisRecord {
  Family family = Family::DiracWeighted;
  Hypothesis hypothesis;
  double eps = 0.0;
  double R = 0.0;
};

// {"family","d","k","centroids","alphas","eps","R"} in that order, floats
// printed with 17 significant digits.
std::string hypothesis_to_json(const HypothesisRecord& rec);
HypothesisRecord hypothesis_from_json(const std::string& text);

void save_hypothesis(const HypothesisRecord& rec, const std::string& path);
HypothesisRecord load_hypothesis(const std::string& path);

inline constexpr int kHypothesisFormatVersion = 1;

// %.17g
std::string format_double(double v);

}  // namespace csl
