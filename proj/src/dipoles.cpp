#include "csl/dipoles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "csl/errors.hpp"
#include "csl/rng.hpp"

namespace csl {

Metric Metric::mahalanobis(const Eigen::MatrixXd& sigma_chol) {
  Metric m;
  m.kind = Kind::Mahalanobis;
  m.sigma_chol = sigma_chol;
  return m;
}

Metric Metric::of(const KernelParams& p) {
  return p.family == Family::DiracWeighted ? euclidean() : mahalanobis(p.sigma_chol);
}

double Metric::norm(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (kind == Kind::Euclidean) return v.norm();
  if (sigma_chol.rows() != v.size()) throw std::invalid_argument("metric dimension mismatch");
  return sigma_chol.triangularView<Eigen::Lower>().solve(v).norm();
}

double Metric::distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b) const {
  return norm(a - b);
}

SeparationReport check_min_distance(const Hypothesis& h, double min_distance, double R,
                                    const Metric& metric) {
  SeparationReport rep;
  for (int i = 0; i < h.k(); ++i) {
    const double r = metric.norm(h.centroids.row(i).transpose());
    if (r > R) rep.violations.push_back({SeparationViolation::Kind::OutsideRadius, i, -1, r});
    for (int j = i + 1; j < h.k(); ++j) {
      if (h.centroids.row(i) == h.centroids.row(j)) continue;
      const double dist = metric.distance(h.centroids.row(i).transpose(), h.centroids.row(j).transpose());
      if (dist < min_distance) rep.violations.push_back({SeparationViolation::Kind::TooClose, i, j, dist});
    }
  }
  rep.ok = rep.violations.empty();
  return rep;
}

SeparationReport separation_check(const Hypothesis& h, double eps, double R,
                                  const Metric& metric) {
  return check_min_distance(h, 2.0 * eps, R, metric);
}

SignedMeasure Dipole::as_measure() const {
  SignedMeasure mu;
  mu.locations.resize(2, theta1.size());
  mu.locations.row(0) = theta1.transpose();
  mu.locations.row(1) = theta2.transpose();
  mu.weights.resize(2);
  mu.weights << alpha1, -alpha2;
  return mu;
}

std::vector<Dipole> decompose_into_dipoles(const KernelParams& p, const Hypothesis& tau,
                                           const Hypothesis& tau_prime) {
  if (tau.d() != p.d || tau_prime.d() != p.d) throw std::invalid_argument("dimension mismatch");
  const Metric metric = Metric::of(p);
  const double inf = std::numeric_limits<double>::infinity();
  // 2-separation in the rescaled metric, with a rounding allowance.
  const double min_dist = 2.0 * p.eps * (1.0 - 1e-12);
  if (!check_min_distance(tau, min_dist, inf, metric).ok ||
      !check_min_distance(tau_prime, min_dist, inf, metric).ok) {
    throw std::invalid_argument("mixtures must be 2-separated in the rescaled metric");
  }
  const SignedMeasure a = merge_duplicates(tau.as_measure());
  const SignedMeasure b = merge_duplicates(tau_prime.as_measure());

  std::vector<Dipole> out;
  std::vector<bool> used(b.size(), false);
  for (int i = 0; i < a.size(); ++i) {
    int best = -1;
    double best_dist = inf;
    for (int j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double rho = p.rescaled_distance(a.locations.row(i).transpose(), b.locations.row(j).transpose());
      if (rho <= 1.0 && rho < best_dist) {
        best = j;
        best_dist = rho;
      }
    }
    Dipole nu;
    nu.theta1 = a.locations.row(i).transpose();
    nu.alpha1 = a.weights(i);
    if (best >= 0) {
      used[best] = true;
      nu.theta2 = b.locations.row(best).transpose();
      nu.alpha2 = b.weights(best);
    } else {
      nu.theta2 = nu.theta1;
      nu.alpha2 = 0.0;
    }
    out.push_back(std::move(nu));
  }
  for (int j = 0; j < b.size(); ++j) {
    if (used[j]) continue;
    Dipole nu;
    nu.theta1 = b.locations.row(j).transpose();
    nu.theta2 = nu.theta1;
    nu.alpha1 = 0.0;
    nu.alpha2 = b.weights(j);
    out.push_back(std::move(nu));
  }
  return out;
}

SignedMeasure sum_of_dipoles(const std::vector<Dipole>& dipoles) {
  SignedMeasure total;
  if (dipoles.empty()) return total;
  const Eigen::Index d = dipoles.front().theta1.size();
  total.locations.resize(2 * dipoles.size(), d);
  total.weights.resize(2 * dipoles.size());
  for (std::size_t l = 0; l < dipoles.size(); ++l) {
    total.locations.row(2 * l) = dipoles[l].theta1.transpose();
    total.locations.row(2 * l + 1) = dipoles[l].theta2.transpose();
    total.weights(2 * l) = dipoles[l].alpha1;
    total.weights(2 * l + 1) = -dipoles[l].alpha2;
  }
  return total;
}

double dipole_mmd(const KernelParams& p, const Dipole& nu) {
  const double p0 = p.p0_norm_sq();
  const double cross = mean_embedding_kernel(p, nu.theta1, nu.theta2).raw;
  const double sq = nu.alpha1 * nu.alpha1 * p0 + nu.alpha2 * nu.alpha2 * p0 - 2.0 * nu.alpha1 * nu.alpha2 * cross;
  return std::sqrt(std::max(0.0, sq));
}

bool dipoles_pairwise_separated(const KernelParams& p, const std::vector<Dipole>& dipoles,
                                double min_rescaled) {
  for (std::size_t a = 0; a < dipoles.size(); ++a) {
    for (std::size_t b = a + 1; b < dipoles.size(); ++b) {
      const Dipole& u = dipoles[a];
      const Dipole& v = dipoles[b];
      const Eigen::VectorXd* pu[2] = {&u.theta1, &u.theta2};
      const Eigen::VectorXd* pv[2] = {&v.theta1, &v.theta2};
      const double wu[2] = {u.alpha1, u.alpha2};
      const double wv[2] = {v.alpha1, v.alpha2};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          if (wu[i] == 0.0 || wv[j] == 0.0) continue;
          if (p.rescaled_distance(*pu[i], *pv[j]) < min_rescaled) return false;
        }
    }
  }
  return true;
}

double ell_coherence_ratio(const KernelParams& p, const std::vector<Dipole>& dipoles) {
  if (dipoles.empty()) throw std::invalid_argument("no dipoles");
  if (!dipoles_pairwise_separated(p, dipoles, 1.0 - 1e-12)) {
    throw std::invalid_argument("dipoles are not pairwise 1-separated");
  }
  double den = 0.0;
  for (const auto& nu : dipoles) {
    const double n = dipole_mmd(p, nu);
    den += n * n;
  }
  if (!(den > 0.0)) throw std::invalid_argument("all dipoles are zero");
  return kernel_norm_sq(p, sum_of_dipoles(dipoles)) / den;
}

// ---------------------------------------------------------------------------
// Coherence search

namespace {

struct PairState {
  // x1, x2, y1, y2 (rows) and weights a1, a2, b1, b2
  Eigen::MatrixXd pts;
  Eigen::Vector4d w;
};

double kval(double sigma, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * sigma * sigma));
}

double correlation(double sigma, const PairState& s) {
  const Eigen::VectorXd x1 = s.pts.row(0), x2 = s.pts.row(1), y1 = s.pts.row(2), y2 = s.pts.row(3);
  const double a1 = s.w(0), a2 = s.w(1), b1 = s.w(2), b2 = s.w(3);
  const double nn = a1 * a1 + a2 * a2 - 2.0 * a1 * a2 * kval(sigma, x1, x2);
  const double mm = b1 * b1 + b2 * b2 - 2.0 * b1 * b2 * kval(sigma, y1, y2);
  if (nn <= 1e-14 || mm <= 1e-14) return 0.0;
  const double ip = a1 * b1 * kval(sigma, x1, y1) - a1 * b2 * kval(sigma, x1, y2) -
                    a2 * b1 * kval(sigma, x2, y1) + a2 * b2 * kval(sigma, x2, y2);
  return std::abs(ip) / std::sqrt(nn * mm);
}

bool feasible(const PairState& s, double sep) {
  if ((s.w.array() < 0.0).any() || (s.w.array() > 1.0).any()) return false;
  if ((s.pts.row(0) - s.pts.row(1)).norm() > 1.0 + 1e-12) return false;
  if ((s.pts.row(2) - s.pts.row(3)).norm() > 1.0 + 1e-12) return false;
  for (int i = 0; i < 2; ++i)
    for (int j = 2; j < 4; ++j)
      if ((s.pts.row(i) - s.pts.row(j)).norm() < sep) return false;
  return true;
}

void repair(PairState& s, double sep) {
  s.w = s.w.cwiseMax(0.0).cwiseMin(1.0);
  for (int base : {0, 2}) {
    const Eigen::RowVectorXd dv = s.pts.row(base + 1) - s.pts.row(base);
    const double len = dv.norm();
    if (len > 1.0) s.pts.row(base + 1) = s.pts.row(base) + dv / len;
  }
  for (int pass = 0; pass < 50; ++pass) {
    bool moved = false;
    for (int i = 0; i < 2; ++i)
      for (int j = 2; j < 4; ++j) {
        Eigen::RowVectorXd dv = s.pts.row(j) - s.pts.row(i);
        const double dist = dv.norm();
        if (dist >= sep) continue;
        if (dist == 0.0) {
          dv = Eigen::RowVectorXd::Zero(s.pts.cols());
          dv(0) = 1.0;
        } else {
          dv /= dist;
        }
        const Eigen::RowVectorXd shift = (sep - dist + 1e-12) * dv;
        s.pts.row(2) += shift;
        s.pts.row(3) += shift;
        moved = true;
      }
    if (!moved) break;
  }
}

PairState random_start(Rng& rng, int d, double sep) {
  PairState s;
  s.pts = Eigen::MatrixXd::Zero(4, d);
  s.pts.row(1) = rng.in_ball(d, 1.0).transpose();
  s.pts.row(2) = (rng.unit_vector(d) * (sep + rng.uniform(0.0, 1.5))).transpose();
  s.pts.row(3) = s.pts.row(2) + rng.in_ball(d, 1.0).transpose();
  for (int i = 0; i < 4; ++i) s.w(i) = rng.uniform();
  repair(s, sep);
  return s;
}

Eigen::VectorXd pack(const PairState& s) {
  const Eigen::Index d = s.pts.cols();
  Eigen::VectorXd z(4 * d + 4);
  for (int i = 0; i < 4; ++i) z.segment(i * d, d) = s.pts.row(i).transpose();
  z.tail(4) = s.w;
  return z;
}

PairState unpack(const Eigen::VectorXd& z, Eigen::Index d) {
  PairState s;
  s.pts.resize(4, d);
  for (int i = 0; i < 4; ++i) s.pts.row(i) = z.segment(i * d, d).transpose();
  s.w = z.tail(4);
  return s;
}

Dipole to_dipole(const PairState& s, int first) {
  Dipole nu;
  nu.theta1 = s.pts.row(first).transpose();
  nu.theta2 = s.pts.row(first + 1).transpose();
  nu.alpha1 = s.w(first);
  nu.alpha2 = s.w(first + 1);
  return nu;
}

}  // namespace

double normalized_dipole_correlation(double sigma, const Dipole& nu, const Dipole& nu_prime) {
  PairState s;
  s.pts.resize(4, nu.theta1.size());
  s.pts.row(0) = nu.theta1.transpose();
  s.pts.row(1) = nu.theta2.transpose();
  s.pts.row(2) = nu_prime.theta1.transpose();
  s.pts.row(3) = nu_prime.theta2.transpose();
  s.w << nu.alpha1, nu.alpha2, nu_prime.alpha1, nu_prime.alpha2;
  return correlation(sigma, s);
}

CoherenceMeasurement measure_mutual_coherence(double sigma, int d, int k,
                                              const CoherenceSearchConfig& cfg) {
  if (d < 1 || k < 1 || cfg.trials < 1) throw std::invalid_argument("bad coherence search arguments");
  if (sigma > sigma_star(k) * (1.0 + 1e-12)) {
    throw DomainError("coherence search needs normalized bandwidth <= sigma*_k");
  }
  CoherenceMeasurement out;
  out.sigma = sigma;
  out.bound = coherence_constants(sigma, k).mutual_coherence_bound;
  out.trials = cfg.trials;
  const double sep = cfg.cross_separation;
  const double h = 1e-7;
  bool have = false;
  for (int t = 0; t < cfg.trials; ++t) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(t));
    PairState s = random_start(rng, d, sep);
    if (!feasible(s, sep)) {
      ++out.rejected;
      continue;
    }
    double f = correlation(sigma, s);
    double step = 0.1;
    Eigen::VectorXd z = pack(s);
    for (int it = 0; it < cfg.iterations && step > 1e-10; ++it) {
      Eigen::VectorXd g(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        Eigen::VectorXd zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        g(i) = (correlation(sigma, unpack(zp, d)) - correlation(sigma, unpack(zm, d))) / (2.0 * h);
      }
      const double gn = g.norm();
      if (!(gn > 0.0)) break;
      bool accepted = false;
      while (step > 1e-10) {
        PairState cand = unpack(z + (step / gn) * g, d);
        repair(cand, sep);
        const double fc = correlation(sigma, cand);
        if (feasible(cand, sep) && fc > f) {
          z = pack(cand);
          f = fc;
          step *= 1.5;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    s = unpack(z, d);
    if (!feasible(s, sep)) {
      ++out.rejected;
      continue;
    }
    if (!have || f > out.max_observed) {
      have = true;
      out.max_observed = f;
      out.argmax_nu = to_dipole(s, 0);
      out.argmax_nu_prime = to_dipole(s, 2);
    }
  }
  return out;
}

CoherenceMeasurement measure_mutual_coherence(const KernelParams& p, int k,
                                              const CoherenceSearchConfig& cfg) {
  p.validate();
  return measure_mutual_coherence(p.effective_sigma(), p.d, k, cfg);
}

}  // namespace csl
