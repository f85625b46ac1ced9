#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "csl/dipoles.hpp"
#include "csl/mixture.hpp"

namespace csl {

struct BaselineResult {
  Hypothesis hypothesis;
  double objective = 0.0;  // k-means risk (Lloyd) or mean negative log-likelihood (EM)
  int iterations = 0;      // of the winning restart
  int restarts = 0;
};

// Lloyd iterations from k-means++ seeds; best of `restarts` runs by k-means risk.
// Weights are the cell masses.
BaselineResult lloyd_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& data, int k,
                            std::uint64_t seed, int restarts = 20, int max_iter = 300);

// EM for a k-component mixture with known shared covariance L L^T; only the
// means and weights are fitted. Best of `restarts` runs by likelihood.
BaselineResult em_fixed_covariance(const Eigen::Ref<const Eigen::MatrixXd>& data, int k,
                                   const Eigen::MatrixXd& sigma_chol, std::uint64_t seed,
                                   int restarts = 20, int max_iter = 500, double tol = 1e-10);

// Minimum-cost perfect assignment of rows to columns of a square cost matrix.
// Returns col[i] for every row i.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct Matching {
  std::vector<int> assignment;  // estimate index for each truth index
  double max_error = 0.0;       // max matched metric distance
  double max_weight_error = 0.0;
};

// Optimal matching of equally sized centroid sets minimizing the summed
// metric distance.
Matching match_centroids(const Hypothesis& truth, const Hypothesis& estimate,
                         const Metric& metric = Metric::euclidean());

}  // namespace csl
