#include "csl/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "csl/risk.hpp"
#include "csl/rng.hpp"

namespace csl {

namespace {

Eigen::MatrixXd kmeanspp_seeds(const Eigen::Ref<const Eigen::MatrixXd>& data, int k, Rng& rng) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd c(k, data.cols());
  c.row(0) = data.row(static_cast<Eigen::Index>(rng.below(n)));
  Eigen::VectorXd d2 = (data.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int l = 1; l < k; ++l) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2(i);
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(n));
    }
    c.row(l) = data.row(pick);
    d2 = d2.cwiseMin((data.rowwise() - c.row(l)).rowwise().squaredNorm());
  }
  return c;
}

}  // namespace

BaselineResult lloyd_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& data, int k,
                            std::uint64_t seed, int restarts, int max_iter) {
  if (k < 1 || data.rows() < 1) throw std::invalid_argument("need k >= 1 and data");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  BaselineResult best;
  best.objective = std::numeric_limits<double>::infinity();
  best.restarts = restarts;
  const Eigen::Index n = data.rows();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    Eigen::MatrixXd c = kmeanspp_seeds(data, k, rng);
    Eigen::VectorXi labels = Eigen::VectorXi::Constant(n, -1);
    int it = 0;
    for (; it < max_iter; ++it) {
      const Eigen::VectorXi next = voronoi_assign(data, c);
      if (next == labels) break;
      labels = next;
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, data.cols());
      Eigen::VectorXd count = Eigen::VectorXd::Zero(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        sum.row(labels(i)) += data.row(i);
        count(labels(i)) += 1.0;
      }
      for (int l = 0; l < k; ++l)
        if (count(l) > 0) c.row(l) = sum.row(l) / count(l);
      // empty cells keep their previous centroid
    }
    Hypothesis h = voronoi_pushforward(data, Hypothesis::uniform(c));
    const double risk = clustering_risk(data, h, 2).risk;
    if (risk < best.objective) {
      best.objective = risk;
      best.hypothesis = h;
      best.iterations = it;
    }
  }
  return best;
}

BaselineResult em_fixed_covariance(const Eigen::Ref<const Eigen::MatrixXd>& data, int k,
                                   const Eigen::MatrixXd& sigma_chol, std::uint64_t seed,
                                   int restarts, int max_iter, double tol) {
  if (k < 1 || data.rows() < 1) throw std::invalid_argument("need k >= 1 and data");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (sigma_chol.rows() != d || sigma_chol.cols() != d) throw std::invalid_argument("covariance dimension mismatch");
  // Whitened data: the shared covariance becomes the identity.
  const Eigen::MatrixXd z =
      sigma_chol.triangularView<Eigen::Lower>().solve(data.transpose()).transpose();
  const double log_det = sigma_chol.diagonal().array().abs().log().sum();
  const double norm_const = 0.5 * d * std::log(2.0 * std::acos(-1.0)) + log_det;

  BaselineResult best;
  best.objective = std::numeric_limits<double>::infinity();
  best.restarts = restarts;
  Eigen::MatrixXd logp(n, k);
  for (int r = 0; r < restarts; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    Eigen::MatrixXd mu = kmeanspp_seeds(z, k, rng);
    Eigen::VectorXd alpha = Eigen::VectorXd::Constant(k, 1.0 / k);
    double prev = std::numeric_limits<double>::infinity();
    double nll = prev;
    int it = 0;
    for (; it < max_iter; ++it) {
      for (int l = 0; l < k; ++l)
        logp.col(l) = std::log(std::max(alpha(l), 1e-300)) -
                      0.5 * (z.rowwise() - mu.row(l)).rowwise().squaredNorm().array();
      const Eigen::VectorXd mx = logp.rowwise().maxCoeff();
      const Eigen::MatrixXd e = (logp.colwise() - mx).array().exp();
      const Eigen::VectorXd s = e.rowwise().sum();
      nll = -(mx.array() + s.array().log()).mean() + norm_const;
      const Eigen::MatrixXd resp = e.array().colwise() / s.array();
      const Eigen::VectorXd nk = resp.colwise().sum().transpose();
      alpha = nk / static_cast<double>(n);
      for (int l = 0; l < k; ++l)
        if (nk(l) > 0) mu.row(l) = (resp.col(l).transpose() * z) / nk(l);
      if (std::abs(prev - nll) <= tol * std::max(1.0, std::abs(nll))) break;
      prev = nll;
    }
    if (nll < best.objective) {
      best.objective = nll;
      best.iterations = it;
      Hypothesis h;
      h.centroids = mu * sigma_chol.transpose();
      h.alphas = alpha / alpha.sum();
      best.hypothesis = h;
    }
  }
  // objective of the final parameters
  best.objective = gmm_nll(data, best.hypothesis, sigma_chol);
  return best;
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("cost matrix must be square");
  // Shortest augmenting path formulation with potentials, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) col[p[j] - 1] = j - 1;
  return col;
}

Matching match_centroids(const Hypothesis& truth, const Hypothesis& estimate, const Metric& metric) {
  const int k = truth.k();
  if (estimate.k() != k || estimate.d() != truth.d())
    throw std::invalid_argument("hypotheses must have the same shape");
  Eigen::MatrixXd cost(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      cost(i, j) = metric.distance(truth.centroids.row(i).transpose(), estimate.centroids.row(j).transpose());
  Matching m;
  m.assignment = hungarian(cost);
  for (int i = 0; i < k; ++i) {
    const int j = m.assignment[i];
    m.max_error = std::max(m.max_error, cost(i, j));
    m.max_weight_error = std::max(m.max_weight_error, std::abs(truth.alphas(i) - estimate.alphas(j)));
  }
  return m;
}

}  // namespace csl
