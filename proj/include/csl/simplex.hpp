#pragma once

#include <Eigen/Dense>

namespace csl {

// Euclidean projection onto {a : a >= 0, sum a = 1}.
Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

struct SimplexLsResult {
  Eigen::VectorXd alpha;
  double residual_norm = 0.0;  // |y - A alpha|
  double stationarity = 0.0;   // |alpha - P(alpha - grad / L)| * L
  int iterations = 0;
};

// min over the simplex of |y - A alpha|_2 for complex A (m x k).
// Accelerated projected gradient, then an active-set solve on the support.
SimplexLsResult simplex_least_squares(const Eigen::Ref<const Eigen::MatrixXcd>& A,
                                      const Eigen::Ref<const Eigen::VectorXcd>& y,
                                      double tol = 1e-10, int max_iter = 2000);

// Same problem posed as min a^T G a - 2 b^T a over the simplex (G symmetric PSD).
Eigen::VectorXd simplex_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, double tol,
                           int max_iter, int* iterations = nullptr,
                           const Eigen::VectorXd* start = nullptr);

// Projected-gradient stationarity of the quadratic above at a.
double simplex_qp_stationarity(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& a);

}  // namespace csl
