#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "csl/dipoles.hpp"
#include "csl/mixture.hpp"

namespace csl {

enum class Task { KMeans, KMedians, GMM };
const char* task_name(Task t);
Task task_from_name(const std::string& name);

struct RiskReport {
  Task task = Task::KMeans;
  double risk = 0.0;
  Eigen::VectorXd per_cluster;  // summed loss per Voronoi cell; empty for GMM
  std::size_t n = 0;
};

// Index of the nearest centroid for every row; ties go to the lowest index.
Eigen::VectorXi voronoi_assign(const Eigen::Ref<const Eigen::MatrixXd>& data,
                               const Eigen::MatrixXd& centroids);

// Mean over rows of min_l |x - c_l|^p, p in {1, 2}.
RiskReport clustering_risk(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hypothesis& h,
                           int p);

// Risk of a weighted Dirac mixture tau: sum_i alpha_i min_l |theta_i - c_l|^p.
double mixture_clustering_risk(const Hypothesis& tau, const Eigen::MatrixXd& centroids, int p);

// P_h pi: Diracs at the centroids of h weighted by the mass of each cell.
Hypothesis voronoi_pushforward(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hypothesis& h);
Hypothesis voronoi_pushforward(const Hypothesis& tau, const Hypothesis& h);

// Mean of -log sum_l alpha_l N(x; c_l, Sigma), Sigma = L L^T.
double gmm_nll(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hypothesis& h,
               const Eigen::MatrixXd& sigma_chol);
RiskReport gmm_risk(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hypothesis& h,
                    const Eigen::MatrixXd& sigma_chol);

// KL(N(theta1, Sigma1) || N(theta2, Sigma2)). Throws on non-PD covariances.
double kl_gaussians(const Eigen::VectorXd& theta1, const Eigen::MatrixXd& sigma1,
                    const Eigen::VectorXd& theta2, const Eigen::MatrixXd& sigma2);

struct HypothesisDistance {
  double forward = 0.0;    // d(c || c')
  double backward = 0.0;   // d(c' || c)
  double symmetric = 0.0;  // max of the two
};
HypothesisDistance hypothesis_distance(const Eigen::MatrixXd& c, const Eigen::MatrixXd& c_prime,
                                       const Metric& metric = Metric::euclidean());

// i such that every other centroid equals c_i or lies at distance >= eps.
std::vector<int> isolated_set(const Eigen::MatrixXd& c, double eps,
                              const Metric& metric = Metric::euclidean());

struct CoverResult {
  Hypothesis cover;           // uniform weights
  double distance = 0.0;      // d(c, cover)
  std::vector<int> preserved_isolated;  // I_eps(c); each appears in cover
};

// Greedy eps-separated cover: take the lowest remaining centroid, drop all
// remaining centroids in its open eps-ball, repeat; pad with the last pick.
CoverResult separated_cover(const Eigen::MatrixXd& c, double eps, double R,
                            const Metric& metric = Metric::euclidean());

struct BiasBounds {
  double w_bar_2eps = 0.0;   // weight of non-2eps-isolated centroids
  double w_bar_4eps = 0.0;
  double dist_to_class = 0.0;  // upper bound on d(h*, H_{k,2eps,R*}) from the cover
  // Stated constant: 1 + (2 + nu) 500 sqrt(k log(ek)(1+delta)/(1-delta)) R / eps.
  double c_statement = 0.0;
  // Derived constant: 1 + (2 + nu) C_A L with C_A L <= 224 sqrt(...) (2R)^p / eps.
  double c_proof_kmedians = 0.0;
  double c_proof_kmeans = 0.0;
  double c_a_kmedians = 0.0;  // 56 sqrt(k / (1 - delta)) (2R)
  double c_a_kmeans = 0.0;    // 56 sqrt(k / (1 - delta)) (2R)^2
  // k-medians: C min{W(4eps) d, W(2eps) 2eps}
  double kmedians_first = 0.0, kmedians_second = 0.0;  // the two min-terms, before C
  double bound_kmedians = 0.0;        // with c_statement
  double bound_kmedians_proof = 0.0;  // with c_proof_kmedians
  // k-means: min{W(4eps)(d^2 + C' d), W(2eps)(4 eps^2 + 2 C' eps)}, C' = 4 C R
  double kmeans_first = 0.0, kmeans_second = 0.0;  // with c_statement
  double bound_kmeans = 0.0;
  double bound_kmeans_proof = 0.0;
};

BiasBounds clustering_bias_bounds(const Hypothesis& pi_star, double eps, double R, int k,
                                  double delta, double nu);

struct SketchSizeInputs {
  Task task = Task::KMeans;
  int k = 1;
  int d = 1;
  double eps = 1.0;
  double R = 1.0;
  double s = 1.0;  // GMM only
  double delta = 0.1;
  double zeta = 0.1;
  double universal_c = 1.0;
};

// Right-hand side of the sufficient sketch size, rounded up. KMeans and
// KMedians share the clustering formula.
double sketch_size_rhs(const SketchSizeInputs& in);
std::int64_t recommended_sketch_size(const SketchSizeInputs& in);

// Lower bound on sup_h [(R(pi,h) - R(pi,h0)) - (R(pi',h) - R(pi',h0))] for
// weighted Dirac mixtures, by maximizing over the candidate hypotheses given
// plus `random_budget` random and perturbed ones inside the R-ball.
struct DivergenceEstimate {
  double value = 0.0;
  Eigen::MatrixXd argmax;
  int evaluated = 0;
};
DivergenceEstimate excess_risk_divergence(const Hypothesis& pi, const Hypothesis& pi_prime,
                                          const Eigen::MatrixXd& h0, int p, double R,
                                          const std::vector<Eigen::MatrixXd>& candidates,
                                          int random_budget, std::uint64_t seed);

}  // namespace csl
