#include "csl/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "csl/dipoles.hpp"
#include "csl/risk.hpp"
#include "csl/sketch.hpp"

namespace csl {

double theory_separation(Family family, double s, int k) {
  if (!(s > 0.0) || k < 1) throw std::invalid_argument("need s > 0 and k >= 1");
  const double lg = std::log(std::exp(1.0) * k);
  return family == Family::DiracWeighted ? 4.0 * s * std::sqrt(lg) : 4.0 * std::sqrt((2.0 + s * s) * lg);
}

Hypothesis random_separated_mixture(const KernelParams& p, int k, double R, Rng& rng,
                                    int max_attempts) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(R > 0.0)) throw std::invalid_argument("R must be positive");
  // Work in whitened coordinates, where the metric ball is Euclidean.
  const double sep = 2.0 * p.eps;
  Eigen::MatrixXd U(k, p.d);
  bool ok = false;
  for (int attempt = 0; attempt < max_attempts && !ok; ++attempt) {
    for (int l = 0; l < k; ++l) U.row(l) = rng.in_ball(p.d, R).transpose();
    ok = check_min_distance(Hypothesis::uniform(U), sep, R, Metric::euclidean()).ok;
  }
  if (!ok) U = separated_cover(U, sep, R).cover.centroids;
  Hypothesis h;
  h.centroids = p.family == Family::DiracWeighted ? U : Eigen::MatrixXd(U * p.sigma_chol.transpose());
  h.alphas = rng.simplex(k);
  return h;
}

RipReport empirical_rip(const KernelParams& p, const FrequencySet& fs, int k, int trials,
                        std::uint64_t seed, double R) {
  p.validate();
  if (p.d != fs.d()) throw std::invalid_argument("kernel and frequency dimensions differ");
  if (p.eps > R) throw std::invalid_argument("separation eps exceeds the radius R");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  RipReport rep;
  rep.m = fs.m();
  rep.k = k;
  rep.d = p.d;
  rep.s = p.s;
  rep.eps = p.eps;
  rep.R = R;
  rep.seed = seed;
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed, static_cast<std::uint64_t>(t));
    const Hypothesis a = random_separated_mixture(p, k, R, rng);
    const Hypothesis b = random_separated_mixture(p, k, R, rng);
    const double den = kernel_norm_sq(p, a.as_measure() - b.as_measure());
    if (!(den > 0.0)) {
      ++rep.skipped;
      continue;
    }
    const double num = (sketch_of_mixture(fs, p, a) - sketch_of_mixture(fs, p, b)).squaredNorm();
    rep.ratios.push_back(num / den);
  }
  rep.trials = static_cast<int>(rep.ratios.size());
  if (!rep.ratios.empty()) {
    rep.min_ratio = *std::min_element(rep.ratios.begin(), rep.ratios.end());
    rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  }
  return rep;
}

namespace {

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

RipScaling rip_deviation_scaling(const KernelParams& p, int k, const std::vector<int>& m_grid,
                                 int trials, double quantile, std::uint64_t seed, double R) {
  if (m_grid.size() < 2) throw std::invalid_argument("need at least two sketch sizes");
  RipScaling out;
  out.m_grid = m_grid;
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    const FrequencySet fs = sample_frequencies(p, m_grid[i], Rng::derive(seed, 1000 + i));
    const RipReport rep = empirical_rip(p, fs, k, trials, Rng::derive(seed, i), R);
    std::vector<double> dev;
    for (double r : rep.ratios) dev.push_back(std::abs(r - 1.0));
    out.deviation.push_back(quantile_of(dev, quantile));
    if (i > 0 && out.deviation[i] > out.deviation[i - 1]) ++out.inversions;
  }
  const std::size_t n = m_grid.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(static_cast<double>(m_grid[i]));
    my += std::log(out.deviation[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(static_cast<double>(m_grid[i])) - mx;
    sxy += dx * (std::log(out.deviation[i]) - my);
    sxx += dx * dx;
  }
  out.slope = sxy / sxx;
  return out;
}

double moment_bound_rhs(const KernelParams& p, int q) {
  const double sig = p.sigma_of_s();
  return p.p0_norm_sq() * std::pow(2.0 * p.eps * p.eps / (sig * sig), q) * std::tgamma(q + 1.0) / 2.0;
}

MomentBoundReport moment_bound_check(const KernelParams& p, int q, long mc_samples,
                                     std::uint64_t seed) {
  p.validate();
  if (q < 2 || q > 4) throw std::invalid_argument("q must be 2, 3 or 4");
  if (mc_samples < 2) throw std::invalid_argument("need at least two samples");
  Rng rng(seed, 0xD1u);
  const Eigen::VectorXd v = rng.unit_vector(p.d);
  const Eigen::VectorXd u = p.family == Family::DiracWeighted ? Eigen::VectorXd(p.eps * v)
                                                              : Eigen::VectorXd(p.eps * (p.sigma_chol * v));
  // Welford accumulation over chunks of frequencies.
  double mean = 0.0, m2 = 0.0;
  long count = 0;
  const long chunk = 100000;
  for (long done = 0, c = 0; done < mc_samples; done += chunk, ++c) {
    const int n = static_cast<int>(std::min(chunk, mc_samples - done));
    const FrequencySet fs = sample_frequencies(p, n, Rng::derive(seed, static_cast<std::uint64_t>(c)));
    const Eigen::MatrixXd lt = fs.omegas * p.sigma_chol;
    for (int j = 0; j < n; ++j) {
      const double amp = p.family == Family::DiracWeighted ? 1.0 / fs.weights(j)
                                                           : std::exp(-0.5 * lt.row(j).squaredNorm());
      const double proj = fs.omegas.row(j).dot(u);
      const double x = std::pow(amp * proj, 2 * q);
      ++count;
      const double delta = x - mean;
      mean += delta / count;
      m2 += delta * (x - mean);
    }
  }
  MomentBoundReport rep;
  rep.q = q;
  rep.samples = count;
  rep.lhs_mc = mean;
  rep.stderr_mc = std::sqrt(m2 / (count - 1) / count);
  rep.rhs = moment_bound_rhs(p, q);
  rep.pass = rep.lhs_mc - 4.0 * rep.stderr_mc <= rep.rhs;
  return rep;
}

std::vector<WitnessRow> separation_witness(const std::vector<double>& eps_list, double R, int p,
                                           int k, const FrequencySet& fs) {
  if (p != 1 && p != 2) throw std::invalid_argument("p must be 1 or 2");
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  const int d = fs.d();
  const KernelParams atoms = KernelParams::dirac(d, fs.params.s, fs.params.eps);
  std::vector<WitnessRow> rows;
  for (double eps : eps_list) {
    if (!(eps > 0.0) || eps > R) throw std::invalid_argument("need 0 < eps <= R");
    Eigen::VectorXd theta_plus = Eigen::VectorXd::Zero(d);
    theta_plus(0) = eps / 2.0;
    const Eigen::VectorXd theta_minus = -theta_plus;
    const double a = R / (2.0 * eps);
    const Eigen::VectorXd c_plus = theta_plus + a * (theta_plus - theta_minus);
    const Eigen::VectorXd c_minus = theta_minus + a * (theta_minus - theta_plus);
    Eigen::MatrixXd h(k, d), h_prime = Eigen::MatrixXd::Zero(k, d);
    h.row(0) = c_plus.transpose();
    for (int l = 1; l < k; ++l) h.row(l) = c_minus.transpose();

    Eigen::MatrixXd tc(2, d);
    tc.row(0) = theta_plus.transpose();
    tc.row(1) = theta_minus.transpose();
    const Hypothesis tau = Hypothesis::uniform(tc);
    const Hypothesis tau_prime = Hypothesis::uniform(Eigen::MatrixXd::Zero(1, d));

    WitnessRow row;
    row.eps = eps;
    row.delta_loss = (mixture_clustering_risk(tau_prime, h, p) - mixture_clustering_risk(tau, h, p)) -
                     (mixture_clustering_risk(tau_prime, h_prime, p) - mixture_clustering_risk(tau, h_prime, p));
    row.delta_loss_closed = std::pow(R / 2.0, p) * (std::pow(1.0 + eps / R, p) - 1.0) + std::pow(eps / 2.0, p);
    row.delta_loss_lower = p * std::pow(R / 2.0, p) * eps / R;
    row.sketch_distance = (sketch_of_mixture(fs, atoms, tau) - sketch_of_mixture(fs, atoms, tau_prime)).norm();
    row.ratio = row.delta_loss / row.sketch_distance;
    rows.push_back(row);
  }
  return rows;
}

PinskerReport pinsker_check(const KernelParams& p, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& theta_star, int m, int trials,
                            std::uint64_t seed) {
  if (p.family != Family::GaussianPlain) throw std::invalid_argument("Pinsker check needs the Gaussian family");
  p.validate();
  if (theta.size() != p.d || theta_star.size() != p.d) throw std::invalid_argument("dimension mismatch");
  const Eigen::MatrixXd sigma = p.covariance();
  PinskerReport rep;
  const double rhs = std::sqrt(2.0 * kl_gaussians(theta, sigma, theta_star, sigma));
  MixtureModel a{p, Hypothesis::uniform(theta.transpose())};
  MixtureModel b{p, Hypothesis::uniform(theta_star.transpose())};
  rep.mmd = mmd(p, a, b);
  for (int t = 0; t < trials; ++t) {
    const FrequencySet fs = sample_gauss_frequencies(p, m, Rng::derive(seed, static_cast<std::uint64_t>(t)));
    PinskerTrial tr;
    tr.lhs = (atom_embedding(fs, p, theta) - atom_embedding(fs, p, theta_star)).norm();
    tr.rhs = rhs;
    tr.margin = rhs - tr.lhs;
    tr.pass = tr.lhs <= tr.rhs;
    rep.passed += tr.pass;
    rep.trials.push_back(tr);
  }
  return rep;
}

}  // namespace csl
