#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csl/frequencies.hpp"
#include "csl/mixture.hpp"

namespace csl {

struct DecodeConfig {
  int k = 1;
  double eps = 1.0;
  double R = 1.0;
  int max_atoms = 0;       // 0 means 2k
  int local_iters = 60;    // refinement steps after each added atom
  int global_iters = 2000; // refinement steps after the reduction to k atoms
  double grad_tol = 1e-8;  // on the projected gradient of the residual norm
  double step_tol = 1e-10;
  int restarts = 1;        // independent full runs, best residual kept
  std::uint64_t seed = 0;
  bool enforce_separation = false;
  // Atom selection budget.
  int selection_pool = 1024;     // random candidates screened per selection
  double lattice_limit = 40000;  // lattice screening used below this many points
  int atom_starts = 8;           // ascents started from the best candidates
  int selection_iters = 100;     // ascent steps per start
  int threads = 1;           // restarts run on up to this many threads

  void validate() const;
  int atoms_budget() const { return max_atoms > 0 ? max_atoms : 2 * k; }
};

struct DecodeResult {
  Hypothesis hypothesis;
  double residual_norm = 0.0;
  std::vector<double> trace;  // residual norms over the global refinement
  bool converged = false;
  std::vector<std::string> warnings;
};

// |y - sum_l alpha_l atom(c_l)| with alpha minimized over the simplex
// (Dirac family) or taken from h (Gaussian family).
double proxy_value(const FrequencySet& fs, const KernelParams& p, const Eigen::VectorXcd& y,
                   const Hypothesis& h);
double proxy_value_clustering(const FrequencySet& fs, const Eigen::VectorXcd& y,
                              const Eigen::MatrixXd& centroids);
double proxy_value_at(const FrequencySet& fs, const KernelParams& p, const Eigen::VectorXcd& y,
                      const Hypothesis& h);

struct ProxyGradient {
  double value = 0.0;         // |y - A(C) alpha|^2
  Eigen::MatrixXd grad_c;     // k x d
  Eigen::VectorXd grad_alpha; // k
};

// F(C, alpha) = |y - sum_l alpha_l atom(c_l)|^2 and its analytic gradient.
// alpha is unconstrained here.
ProxyGradient proxy_objective(const FrequencySet& fs, const KernelParams& p,
                              const Eigen::VectorXcd& y, const Eigen::MatrixXd& centroids,
                              const Eigen::VectorXd& alpha);

// Clustering decoder: Dirac atoms Phi(c), Euclidean ball of radius R.
DecodeResult decode(const FrequencySet& fs, const KernelParams& p, const Eigen::VectorXcd& y,
                    const DecodeConfig& cfg);

// Gaussian atoms Psi(c), Mahalanobis ball of radius R, weights estimated.
DecodeResult decode_gmm(const FrequencySet& fs, const KernelParams& p, const Eigen::VectorXcd& y,
                        const DecodeConfig& cfg);

}  // namespace csl
