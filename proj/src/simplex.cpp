#include "csl/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace csl {

Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index k = v.size();
  if (k == 0) throw std::invalid_argument("empty vector");
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  Eigen::VectorXd out = (v.array() - theta).cwiseMax(0.0);
  // Exact unit sum for downstream identities.
  const double s = out.sum();
  if (s > 0.0) out /= s;
  return out;
}

namespace {

double lipschitz(const Eigen::MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return std::max(2.0 * es.eigenvalues().maxCoeff(), 1e-300);
}

double qp_value(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, const Eigen::VectorXd& a) {
  return a.dot(G * a) - 2.0 * b.dot(a);
}

// Minimizer of the quadratic on the affine face {a_S free, a_rest = 0, sum = 1}.
Eigen::VectorXd face_solve(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                           const std::vector<int>& S, Eigen::Index k) {
  const int n = static_cast<int>(S.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) K(i, j) = 2.0 * G(S[i], S[j]);
    K(i, n) = 1.0;
    K(n, i) = 1.0;
    rhs(i) = 2.0 * b(S[i]);
  }
  rhs(n) = 1.0;
  const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < n; ++i) a(S[i]) = sol(i);
  return a;
}

}  // namespace

double simplex_qp_stationarity(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& a) {
  const double L = lipschitz(G);
  const Eigen::VectorXd grad = 2.0 * (G * a - b);
  return (a - project_simplex(a - grad / L)).norm() * L;
}

Eigen::VectorXd simplex_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, double tol,
                           int max_iter, int* iterations, const Eigen::VectorXd* start) {
  const Eigen::Index k = b.size();
  if (G.rows() != k || G.cols() != k) throw std::invalid_argument("G must be k x k");
  if (k == 1) {
    if (iterations) *iterations = 0;
    return Eigen::VectorXd::Ones(1);
  }
  const double L = lipschitz(G);
  Eigen::VectorXd a = start ? project_simplex(*start) : Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::VectorXd z = a;
  double t = 1.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd grad = 2.0 * (G * z - b);
    const Eigen::VectorXd next = project_simplex(z - grad / L);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - a);
    // Restart when the momentum overshoots.
    if (qp_value(G, b, next) > qp_value(G, b, a)) {
      z = next;
      t = 1.0;
    } else {
      t = t_next;
    }
    a = next;
    if (it % 10 == 9 && simplex_qp_stationarity(G, b, a) <= tol * 1e-2) break;
  }

  // Active-set polish: exact minimizer on the current support, extended or
  // shrunk until the KKT conditions hold.
  for (int round = 0; round < 4 * static_cast<int>(k) + 20; ++round) {
    std::vector<int> S;
    for (Eigen::Index i = 0; i < k; ++i)
      if (a(i) > 0.0) S.push_back(static_cast<int>(i));
    const Eigen::VectorXd beta = face_solve(G, b, S, k);
    if (!beta.allFinite()) break;
    bool nonneg = true;
    for (int i : S) nonneg = nonneg && beta(i) >= 0.0;
    if (nonneg) {
      if (qp_value(G, b, beta) <= qp_value(G, b, a) + 1e-15 * (1.0 + std::abs(qp_value(G, b, a)))) {
        a = beta;
      }
      const Eigen::VectorXd grad = 2.0 * (G * a - b);
      double mu = 0.0;
      for (int i : S) mu += grad(i);
      mu /= static_cast<double>(S.size());
      Eigen::Index worst = -1;
      double worst_gap = -tol * 1e-2;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (a(i) > 0.0) continue;
        const double gap = grad(i) - mu;
        if (gap < worst_gap) {
          worst_gap = gap;
          worst = i;
        }
      }
      if (worst < 0) break;
      // Enter the most violating coordinate with a tiny positive mass.
      Eigen::VectorXd trial = a;
      trial(worst) = 1e-12;
      trial /= trial.sum();
      a = trial;
    } else {
      double step = 1.0;
      for (int i : S)
        if (beta(i) < a(i)) step = std::min(step, a(i) / (a(i) - beta(i)));
      a = a + step * (beta - a);
      for (Eigen::Index i = 0; i < k; ++i)
        if (a(i) <= 1e-300) a(i) = 0.0;
      a = a.cwiseMax(0.0);
      a /= a.sum();
    }
  }
  a = a.cwiseMax(0.0);
  a /= a.sum();
  if (iterations) *iterations = it;
  return a;
}

SimplexLsResult simplex_least_squares(const Eigen::Ref<const Eigen::MatrixXcd>& A,
                                      const Eigen::Ref<const Eigen::VectorXcd>& y, double tol,
                                      int max_iter) {
  if (A.rows() != y.size()) throw std::invalid_argument("A and y disagree on m");
  if (A.cols() < 1) throw std::invalid_argument("need at least one atom");
  const Eigen::MatrixXd G = (A.adjoint() * A).real();
  const Eigen::VectorXd b = (A.adjoint() * y).real();
  SimplexLsResult res;
  res.alpha = simplex_qp(G, b, tol, max_iter, &res.iterations);
  res.residual_norm = (y - A * res.alpha.cast<std::complex<double>>()).norm();
  res.stationarity = simplex_qp_stationarity(G, b, res.alpha);
  return res;
}

}  // namespace csl
