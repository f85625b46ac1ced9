#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "csl/frequencies.hpp"
#include "csl/mixture.hpp"
#include "csl/rng.hpp"

namespace csl {

// eps at which the normalized bandwidth equals sigma*_k:
// 4 s sqrt(log(ek)) for Diracs, 4 sqrt((2 + s^2) log(ek)) for Gaussians.
double theory_separation(Family family, double s, int k);

// k weighted components in the metric ball of radius R, pairwise
// 2 eps-separated (eps = p.eps). Rejection with at most `max_attempts`
// draws, then the last draw is repaired with the greedy separated cover.
Hypothesis random_separated_mixture(const KernelParams& p, int k, double R, Rng& rng,
                                    int max_attempts = 1000);

struct RipReport {
  int trials = 0;
  std::vector<double> ratios;
  double min_ratio = 0.0, max_ratio = 0.0;
  int m = 0, k = 0, d = 0;
  double s = 0.0, eps = 0.0, R = 0.0;
  std::uint64_t seed = 0;
  int skipped = 0;  // tau == tau' draws
};

// |A(tau) - A(tau')|^2 / |tau - tau'|_kappa^2 over random pairs of separated
// mixtures. Requires eps <= R.
RipReport empirical_rip(const KernelParams& p, const FrequencySet& fs, int k, int trials,
                        std::uint64_t seed, double R);

struct RipScaling {
  std::vector<int> m_grid;
  std::vector<double> deviation;  // quantile of |ratio - 1| per m
  double slope = 0.0;             // least squares slope of log deviation vs log m
  int inversions = 0;             // increases of the deviation along the grid
};

// Deviation quantile of the secant ratio for each m (fresh frequencies per m).
RipScaling rip_deviation_scaling(const KernelParams& p, int k, const std::vector<int>& m_grid,
                                 int trials, double quantile, std::uint64_t seed, double R);

struct MomentBoundReport {
  int q = 2;
  double lhs_mc = 0.0;
  double stderr_mc = 0.0;
  double rhs = 0.0;
  bool pass = false;  // lhs_mc - 4 stderr <= rhs
  long samples = 0;
};

// Right-hand side |pi_0|^2 (2 eps^2 / sigma(s)^2)^q q! / 2.
double moment_bound_rhs(const KernelParams& p, int q);

// MC estimate of E_omega |<pi_0, phi_omega>|^{2q} <omega, u>^{2q} for a unit
// vector u of the rescaled metric drawn uniformly.
MomentBoundReport moment_bound_check(const KernelParams& p, int q, long mc_samples,
                                     std::uint64_t seed);

struct WitnessRow {
  double eps = 0.0;
  double delta_loss = 0.0;        // <tau' - tau, l(., h) - l(., h')>, evaluated
  double delta_loss_closed = 0.0; // (R/2)^p ((1 + eps/R)^p - 1) + (eps/2)^p
  double delta_loss_lower = 0.0;  // p (R/2)^p eps / R
  double sketch_distance = 0.0;   // |A(tau) - A(tau')|
  double ratio = 0.0;             // delta_loss / sketch_distance
};

// tau = (delta_{theta+} + delta_{theta-}) / 2 and tau' = delta_0 with
// theta+- = +-(eps/2) e_1, against the hypotheses h, h' that separate them.
std::vector<WitnessRow> separation_witness(const std::vector<double>& eps_list, double R, int p,
                                           int k, const FrequencySet& fs);

struct PinskerTrial {
  double lhs = 0.0;  // |A(pi) - A(pi*)| with sampled frequencies
  double rhs = 0.0;  // sqrt(2 KL(pi || pi*))
  double margin = 0.0;
  bool pass = false;
};

struct PinskerReport {
  std::vector<PinskerTrial> trials;
  double mmd = 0.0;  // deterministic |pi - pi*|_kappa
  int passed = 0;
};

// Single Gaussians N(theta, Sigma) and N(theta*, Sigma) from p; a fresh
// frequency set of size m per trial.
PinskerReport pinsker_check(const KernelParams& p, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& theta_star, int m, int trials,
                            std::uint64_t seed);

}  // namespace csl
