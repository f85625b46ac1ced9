#pragma once

#include <Eigen/Dense>

#include "csl/kernel.hpp"

namespace csl {

inline constexpr double kSimplexTolerance = 1e-12;

// k centroids with weights on the simplex. Repeated centroids are allowed.
struct Hypothesis {
  Eigen::MatrixXd centroids;  // k x d
  Eigen::VectorXd alphas;     // k

  int k() const { return static_cast<int>(centroids.rows()); }
  int d() const { return static_cast<int>(centroids.cols()); }

  // Uniform weights.
  static Hypothesis uniform(Eigen::MatrixXd centroids);
  // Checks alphas >= 0 and |sum - 1| <= 1e-12 (or a looser tol), then renormalizes.
  static Hypothesis weighted(Eigen::MatrixXd centroids, Eigen::VectorXd alphas,
                             double tol = kSimplexTolerance);

  void validate() const;
  SignedMeasure as_measure() const { return {centroids, alphas}; }
};

struct MixtureModel {
  KernelParams params;
  Hypothesis hypothesis;

  Family family() const { return params.family; }
  SignedMeasure as_measure() const { return hypothesis.as_measure(); }
};

// Combines exactly repeated centroids and drops zero weights.
SignedMeasure merge_duplicates(const SignedMeasure& mu);

}  // namespace csl
