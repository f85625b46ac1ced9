#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csl/kernel.hpp"
#include "csl/mixture.hpp"

namespace csl {

// Distance used for separation and radius constraints.
struct Metric {
  enum class Kind { Euclidean, Mahalanobis };
  Kind kind = Kind::Euclidean;
  Eigen::MatrixXd sigma_chol;  // used by Mahalanobis only

  static Metric euclidean() { return {}; }
  static Metric mahalanobis(const Eigen::MatrixXd& sigma_chol);
  // Euclidean for Diracs, Mahalanobis(Sigma) for Gaussians.
  static Metric of(const KernelParams& p);

  double norm(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  double distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                  const Eigen::Ref<const Eigen::VectorXd>& b) const;
};

struct SeparationViolation {
  enum class Kind { TooClose, OutsideRadius };
  Kind kind;
  int i;
  int j;  // -1 for OutsideRadius
  double value;
};

struct SeparationReport {
  bool ok = true;
  std::vector<SeparationViolation> violations;
};

// ok iff every pair of distinct centroids is >= min_distance apart and every
// centroid has norm <= R. Exact duplicates are allowed.
SeparationReport check_min_distance(const Hypothesis& h, double min_distance, double R,
                                    const Metric& metric);

// Membership in H_{k, 2 eps, R}.
SeparationReport separation_check(const Hypothesis& h, double eps, double R,
                                  const Metric& metric);

// alpha1 pi_theta1 - alpha2 pi_theta2 with rescaled distance(theta1, theta2) <= 1.
// A monopole has one weight equal to zero.
struct Dipole {
  Eigen::VectorXd theta1, theta2;
  double alpha1 = 0.0, alpha2 = 0.0;

  bool is_monopole() const { return alpha1 == 0.0 || alpha2 == 0.0; }
  SignedMeasure as_measure() const;
};

// Splits tau - tau' into at most 2k pairwise 1-separated dipoles. Both
// mixtures must be 2-separated in the eps-rescaled metric of `p`.
// Repeated centroids are merged first. Each theta_i of tau pairs with the
// nearest unused theta'_j at rescaled distance <= 1 (lowest index on ties),
// the rest become monopoles.
std::vector<Dipole> decompose_into_dipoles(const KernelParams& p, const Hypothesis& tau,
                                           const Hypothesis& tau_prime);

// Sum of dipoles as one signed measure.
SignedMeasure sum_of_dipoles(const std::vector<Dipole>& dipoles);

// |nu|_kappa.
double dipole_mmd(const KernelParams& p, const Dipole& nu);

// True when every pair of points carrying nonzero weight in different
// dipoles is at rescaled distance >= 1.
bool dipoles_pairwise_separated(const KernelParams& p, const std::vector<Dipole>& dipoles,
                                double min_rescaled = 1.0);

// |sum nu_l|^2 / sum |nu_l|^2 by exact bilinear expansion.
double ell_coherence_ratio(const KernelParams& p, const std::vector<Dipole>& dipoles);

struct CoherenceSearchConfig {
  int trials = 64;             // optimized dipole pairs
  int iterations = 200;        // ascent steps per pair
  double cross_separation = 1.0;
  std::uint64_t seed = 0;
};

struct CoherenceMeasurement {
  double max_observed = 0.0;
  double bound = 0.0;  // 4 C(K_sigma)
  double sigma = 0.0;  // normalized bandwidth
  int trials = 0;
  int rejected = 0;    // trials that ended infeasible
  // Maximizer, in eps-rescaled coordinates with the normalized kernel.
  Dipole argmax_nu, argmax_nu_prime;
};

// |<nu, nu'>| / (|nu| |nu'|) under the normalized kernel K_sigma on rescaled
// coordinates.
double normalized_dipole_correlation(double sigma, const Dipole& nu, const Dipole& nu_prime);

// Multi-start local maximization of the normalized correlation over pairs of
// dipoles whose cross distances are >= cross_separation.
// Requires effective sigma <= sigma*_k.
CoherenceMeasurement measure_mutual_coherence(const KernelParams& p, int k,
                                              const CoherenceSearchConfig& cfg);

// Same search at an explicit normalized bandwidth and dimension.
CoherenceMeasurement measure_mutual_coherence(double sigma, int d, int k,
                                              const CoherenceSearchConfig& cfg);

}  // namespace csl
