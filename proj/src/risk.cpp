#include "csl/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "csl/rng.hpp"

namespace csl {

const char* task_name(Task t) {
  switch (t) {
    case Task::KMeans: return "kmeans";
    case Task::KMedians: return "kmedians";
    case Task::GMM: return "gmm";
  }
  return "?";
}

Task task_from_name(const std::string& name) {
  if (name == "kmeans") return Task::KMeans;
  if (name == "kmedians") return Task::KMedians;
  if (name == "gmm") return Task::GMM;
  throw std::invalid_argument("unknown task: " + name);
}

namespace {

void check_p(int p) {
  if (p != 1 && p != 2) throw std::invalid_argument("p must be 1 or 2");
}

double power_p(double dist, int p) { return p == 1 ? dist : dist * dist; }

// Nearest centroid and its squared distance; lowest index on ties.
std::pair<int, double> nearest(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                               const Eigen::MatrixXd& c) {
  int best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (int l = 0; l < c.rows(); ++l) {
    const double sq = (x - c.row(l)).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best = l;
    }
  }
  return {best, best_sq};
}

}  // namespace

Eigen::VectorXi voronoi_assign(const Eigen::Ref<const Eigen::MatrixXd>& data,
                               const Eigen::MatrixXd& centroids) {
  if (data.cols() != centroids.cols()) throw std::invalid_argument("dimension mismatch");
  Eigen::VectorXi out(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) out(i) = nearest(data.row(i), centroids).first;
  return out;
}

RiskReport clustering_risk(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hypothesis& h,
                           int p) {
  check_p(p);
  if (data.rows() == 0) throw std::invalid_argument("empty data");
  if (data.cols() != h.d()) throw std::invalid_argument("dimension mismatch");
  RiskReport rep;
  rep.task = p == 1 ? Task::KMedians : Task::KMeans;
  rep.per_cluster = Eigen::VectorXd::Zero(h.k());
  rep.n = static_cast<std::size_t>(data.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto [l, sq] = nearest(data.row(i), h.centroids);
    const double loss = power_p(std::sqrt(sq), p);
    rep.per_cluster(l) += loss;
    total += loss;
  }
  rep.risk = total / static_cast<double>(data.rows());
  return rep;
}

double mixture_clustering_risk(const Hypothesis& tau, const Eigen::MatrixXd& centroids, int p) {
  check_p(p);
  if (tau.d() != centroids.cols()) throw std::invalid_argument("dimension mismatch");
  double total = 0.0;
  for (int i = 0; i < tau.k(); ++i) {
    total += tau.alphas(i) * power_p(std::sqrt(nearest(tau.centroids.row(i), centroids).second), p);
  }
  return total;
}

Hypothesis voronoi_pushforward(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hypothesis& h) {
  if (data.rows() == 0) throw std::invalid_argument("empty data");
  const Eigen::VectorXi cell = voronoi_assign(data, h.centroids);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(h.k());
  for (Eigen::Index i = 0; i < cell.size(); ++i) counts(cell(i)) += 1.0;
  Hypothesis out;
  out.centroids = h.centroids;
  out.alphas = counts / static_cast<double>(data.rows());
  return out;
}

Hypothesis voronoi_pushforward(const Hypothesis& tau, const Hypothesis& h) {
  Hypothesis out;
  out.centroids = h.centroids;
  out.alphas = Eigen::VectorXd::Zero(h.k());
  for (int i = 0; i < tau.k(); ++i) out.alphas(nearest(tau.centroids.row(i), h.centroids).first) += tau.alphas(i);
  out.alphas /= out.alphas.sum();
  return out;
}

double gmm_nll(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hypothesis& h,
               const Eigen::MatrixXd& sigma_chol) {
  if (data.rows() == 0) throw std::invalid_argument("empty data");
  const int d = h.d();
  if (data.cols() != d || sigma_chol.rows() != d || sigma_chol.cols() != d) {
    throw std::invalid_argument("dimension mismatch");
  }
  if (!(sigma_chol.diagonal().array() > 0.0).all()) {
    throw std::invalid_argument("covariance is not positive definite");
  }
  h.validate();
  const auto L = sigma_chol.triangularView<Eigen::Lower>();
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - sigma_chol.diagonal().array().log().sum();
  Eigen::VectorXd log_alpha = h.alphas.array().log();
  double total = 0.0;
  Eigen::VectorXd terms(h.k());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (int l = 0; l < h.k(); ++l) {
      const Eigen::VectorXd z = L.solve((data.row(i) - h.centroids.row(l)).transpose());
      terms(l) = log_alpha(l) + log_norm - 0.5 * z.squaredNorm();
    }
    const double mx = terms.maxCoeff();
    total -= mx + std::log((terms.array() - mx).exp().sum());
  }
  return total / static_cast<double>(data.rows());
}

RiskReport gmm_risk(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hypothesis& h,
                    const Eigen::MatrixXd& sigma_chol) {
  RiskReport rep;
  rep.task = Task::GMM;
  rep.risk = gmm_nll(data, h, sigma_chol);
  rep.n = static_cast<std::size_t>(data.rows());
  return rep;
}

double kl_gaussians(const Eigen::VectorXd& theta1, const Eigen::MatrixXd& sigma1,
                    const Eigen::VectorXd& theta2, const Eigen::MatrixXd& sigma2) {
  const Eigen::Index d = theta1.size();
  if (theta2.size() != d || sigma1.rows() != d || sigma1.cols() != d || sigma2.rows() != d ||
      sigma2.cols() != d) {
    throw std::invalid_argument("dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> l1(sigma1), l2(sigma2);
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success ||
      !(l1.matrixL().toDenseMatrix().diagonal().array() > 0.0).all() ||
      !(l2.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
    throw std::invalid_argument("covariance is not positive definite");
  }
  const Eigen::MatrixXd L1 = l1.matrixL();
  const Eigen::MatrixXd L2 = l2.matrixL();
  const double logdet1 = 2.0 * L1.diagonal().array().log().sum();
  const double logdet2 = 2.0 * L2.diagonal().array().log().sum();
  // tr(Sigma2^-1 Sigma1) = |L2^-1 L1|_F^2
  const Eigen::MatrixXd M = L2.triangularView<Eigen::Lower>().solve(L1);
  const Eigen::VectorXd z = L2.triangularView<Eigen::Lower>().solve(theta1 - theta2);
  const double kl = 0.5 * (logdet2 - logdet1 + M.squaredNorm() - static_cast<double>(d) + z.squaredNorm());
  return std::max(0.0, kl);
}

HypothesisDistance hypothesis_distance(const Eigen::MatrixXd& c, const Eigen::MatrixXd& c_prime,
                                       const Metric& metric) {
  if (c.cols() != c_prime.cols()) throw std::invalid_argument("dimension mismatch");
  auto directed = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < b.rows(); ++j) {
        best = std::min(best, metric.distance(a.row(i).transpose(), b.row(j).transpose()));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  HypothesisDistance out;
  out.forward = directed(c, c_prime);
  out.backward = directed(c_prime, c);
  out.symmetric = std::max(out.forward, out.backward);
  return out;
}

std::vector<int> isolated_set(const Eigen::MatrixXd& c, double eps, const Metric& metric) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    bool isolated = true;
    for (Eigen::Index j = 0; j < c.rows() && isolated; ++j) {
      if (j == i || c.row(j) == c.row(i)) continue;
      if (metric.distance(c.row(i).transpose(), c.row(j).transpose()) < eps) isolated = false;
    }
    if (isolated) out.push_back(static_cast<int>(i));
  }
  return out;
}

CoverResult separated_cover(const Eigen::MatrixXd& c, double eps, double /*R*/,
                            const Metric& metric) {
  const Eigen::Index k = c.rows();
  if (k < 1) throw std::invalid_argument("empty centroid set");
  std::vector<bool> removed(k, false);
  std::vector<Eigen::Index> picks;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (removed[i]) continue;
    picks.push_back(i);
    for (Eigen::Index j = i; j < k; ++j) {
      if (!removed[j] && metric.distance(c.row(i).transpose(), c.row(j).transpose()) < eps) removed[j] = true;
    }
  }
  Eigen::MatrixXd cover(k, c.cols());
  for (Eigen::Index r = 0; r < k; ++r) {
    cover.row(r) = c.row(picks[std::min<std::size_t>(r, picks.size() - 1)]);
  }
  CoverResult out;
  out.cover = Hypothesis::uniform(cover);
  out.distance = hypothesis_distance(c, cover, metric).symmetric;
  out.preserved_isolated = isolated_set(c, eps, metric);
  return out;
}

BiasBounds clustering_bias_bounds(const Hypothesis& pi_star, double eps, double R, int k,
                                  double delta, double nu) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(eps > 0.0) || !(R > 0.0) || k < 1 || nu < 0.0) throw std::invalid_argument("bad bound parameters");
  pi_star.validate();
  BiasBounds b;
  auto w_bar = [&](double radius) {
    const std::vector<int> iso = isolated_set(pi_star.centroids, radius);
    std::vector<bool> isolated(pi_star.k(), false);
    for (int i : iso) isolated[i] = true;
    double w = 0.0;
    for (int i = 0; i < pi_star.k(); ++i)
      if (!isolated[i]) w += pi_star.alphas(i);
    return w;
  };
  b.w_bar_2eps = w_bar(2.0 * eps);
  b.w_bar_4eps = w_bar(4.0 * eps);
  double r_star = 0.0;
  for (int i = 0; i < pi_star.k(); ++i) r_star = std::max(r_star, pi_star.centroids.row(i).norm());
  b.dist_to_class = separated_cover(pi_star.centroids, 2.0 * eps, r_star).distance;

  const double ek = std::exp(1.0) * k;
  const double root = std::sqrt(k * std::log(ek) * (1.0 + delta) / (1.0 - delta));
  b.c_statement = 1.0 + (2.0 + nu) * 500.0 * root * R / eps;
  b.c_proof_kmedians = 1.0 + (2.0 + nu) * 224.0 * root * (2.0 * R) / eps;
  b.c_proof_kmeans = 1.0 + (2.0 + nu) * 224.0 * root * (2.0 * R) * (2.0 * R) / eps;
  b.c_a_kmedians = 56.0 * std::sqrt(k / (1.0 - delta)) * (2.0 * R);
  b.c_a_kmeans = 56.0 * std::sqrt(k / (1.0 - delta)) * (2.0 * R) * (2.0 * R);

  const double d = b.dist_to_class;
  b.kmedians_first = b.w_bar_4eps * d;
  b.kmedians_second = b.w_bar_2eps * 2.0 * eps;
  b.bound_kmedians = b.c_statement * std::min(b.kmedians_first, b.kmedians_second);
  b.bound_kmedians_proof = b.c_proof_kmedians * std::min(b.kmedians_first, b.kmedians_second);

  auto kmeans = [&](double C, double& first, double& second) {
    const double cp = 4.0 * C * R;
    first = b.w_bar_4eps * (d * d + cp * d);
    second = b.w_bar_2eps * (4.0 * eps * eps + 2.0 * cp * eps);
    return std::min(first, second);
  };
  double f2 = 0.0, s2 = 0.0;
  b.bound_kmeans = kmeans(b.c_statement, b.kmeans_first, b.kmeans_second);
  b.bound_kmeans_proof = kmeans(b.c_proof_kmeans, f2, s2);
  return b;
}

double sketch_size_rhs(const SketchSizeInputs& in) {
  if (in.k < 1 || in.d < 1) throw std::invalid_argument("k and d must be >= 1");
  if (!(in.universal_c > 0.0)) throw std::invalid_argument("universal constant must be positive");
  if (!(in.delta > 0.0 && in.delta < 1.0) || !(in.zeta > 0.0 && in.zeta < 1.0)) {
    throw std::invalid_argument("delta and zeta must lie in (0, 1)");
  }
  if (!(in.eps > 0.0) || !(in.R >= in.eps)) throw std::invalid_argument("need R >= eps > 0");
  const double k = in.k, d = in.d;
  const double ek = std::exp(1.0) * k;
  const double pre = in.universal_c / (in.delta * in.delta);
  if (in.task == Task::GMM) {
    if (!(in.s > 0.0)) throw std::invalid_argument("s must be positive");
    const double s2 = in.s * in.s;
    const double inner = k * d * (d / s2 + 1.0 + std::log(k * in.R * in.s) + std::log(1.0 / in.delta)) +
                         std::log(1.0 / in.zeta);
    const double lg = std::log(ek);
    return pre * k * inner * std::min(lg * lg, s2 * lg) * std::pow(1.0 + 2.0 / s2, d / 2.0);
  }
  const double inner = k * k * d * (1.0 + std::log(k * d) + std::log(in.R / in.eps) + std::log(1.0 / in.delta)) +
                       k * std::log(1.0 / in.zeta);
  return pre * inner * std::log(ek) * std::min(std::log(ek), d);
}

std::int64_t recommended_sketch_size(const SketchSizeInputs& in) {
  const double rhs = sketch_size_rhs(in);
  if (!(rhs < 9.0e18)) throw std::overflow_error("sketch size does not fit in 64 bits");
  return static_cast<std::int64_t>(std::ceil(rhs));
}

DivergenceEstimate excess_risk_divergence(const Hypothesis& pi, const Hypothesis& pi_prime,
                                          const Eigen::MatrixXd& h0, int p, double R,
                                          const std::vector<Eigen::MatrixXd>& candidates,
                                          int random_budget, std::uint64_t seed) {
  check_p(p);
  const double r_pi0 = mixture_clustering_risk(pi, h0, p);
  const double r_pp0 = mixture_clustering_risk(pi_prime, h0, p);
  auto gap = [&](const Eigen::MatrixXd& h) {
    return (mixture_clustering_risk(pi, h, p) - r_pi0) - (mixture_clustering_risk(pi_prime, h, p) - r_pp0);
  };
  DivergenceEstimate est;
  est.argmax = h0;
  est.value = 0.0;
  auto consider = [&](const Eigen::MatrixXd& h) {
    ++est.evaluated;
    const double v = gap(h);
    if (v > est.value) {
      est.value = v;
      est.argmax = h;
    }
  };
  for (const auto& h : candidates) consider(h);
  Rng rng(seed);
  const Eigen::Index k = h0.rows();
  const int d = static_cast<int>(h0.cols());
  auto project = [&](Eigen::MatrixXd h) {
    for (Eigen::Index l = 0; l < h.rows(); ++l) {
      const double n = h.row(l).norm();
      if (n > R) h.row(l) *= R / n;
    }
    return h;
  };
  for (int t = 0; t < random_budget; ++t) {
    Eigen::MatrixXd h(k, d);
    if (t % 2 == 0 || est.evaluated == 0) {
      for (Eigen::Index l = 0; l < k; ++l) h.row(l) = rng.in_ball(d, R).transpose();
    } else {
      h = est.argmax;
      for (Eigen::Index l = 0; l < k; ++l) h.row(l) += (0.1 * R * rng.normal_vector(d)).transpose();
      h = project(h);
    }
    consider(h);
  }
  return est;
}

}  // namespace csl
