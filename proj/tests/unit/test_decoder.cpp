#include <cmath>
#include <random>

#include "doctest.h"

#include "csl/baselines.hpp"
#include "csl/decoder.hpp"
#include "csl/frequencies.hpp"
#include "csl/rng.hpp"
#include "csl/simplex.hpp"
#include "csl/sketch.hpp"

using namespace csl;

namespace {

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(r.size(), r.begin()->size());
  int i = 0;
  for (const auto& row : r) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("simplex projection and least squares") {
  const Eigen::VectorXd p = project_simplex(Eigen::Vector3d(0.5, 0.5, 0.5));
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p(0) == doctest::Approx(1.0 / 3));
  const Eigen::VectorXd q = project_simplex(Eigen::Vector3d(2.0, 0.0, -1.0));
  CHECK(q(0) == doctest::Approx(1.0));
  CHECK(q(2) == 0.0);

  // Oracle: exhaustive grid over the 2-simplex.
  std::mt19937_64 g(1);
  std::normal_distribution<double> N;
  Eigen::MatrixXcd A(6, 3);
  Eigen::VectorXcd y(6);
  for (int i = 0; i < 6; ++i) {
    y(i) = {N(g), N(g)};
    for (int j = 0; j < 3; ++j) A(i, j) = {N(g), N(g)};
  }
  const SimplexLsResult r = simplex_least_squares(A, y);
  double best = 1e300;
  for (double a = 0; a <= 1.0 + 1e-12; a += 1e-3)
    for (double b = 0; a + b <= 1.0 + 1e-12; b += 1e-3) {
      const Eigen::Vector3d al(a, b, std::max(0.0, 1.0 - a - b));
      best = std::min(best, (y - A * al.cast<std::complex<double>>()).norm());
    }
  CHECK(r.residual_norm <= best + 1e-12);
  CHECK(best - r.residual_norm < 1e-2);
  CHECK(r.alpha.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.alpha.minCoeff() >= 0.0);
}

TEST_CASE("proxy values") {
  const KernelParams p = KernelParams::dirac(2, 0.5, 1.0);
  const FrequencySet fs = sample_dirac_frequencies(2, 40, 0.5, 2, 1.0);
  const Hypothesis h = Hypothesis::weighted(rows({{0, 0}, {2, 1}}), Eigen::Vector2d(0.3, 0.7));
  const Eigen::VectorXcd y = sketch_of_mixture(fs, p, h);
  CHECK(proxy_value(fs, p, y, h) <= 1e-12);
  const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(40);
  const Hypothesis one = Hypothesis::uniform(rows({{0.3, -0.2}}));
  CHECK(proxy_value(fs, p, zero, one) == doctest::Approx(atom_embedding(fs, p, one.centroids.row(0).transpose()).norm()));

  // k = 2: grid over alpha with step 1e-3
  const Eigen::VectorXcd yy = sketch_of_mixture(fs, p, Hypothesis::uniform(rows({{0.4, 0.1}, {-1, 2}})));
  const Eigen::MatrixXd c = rows({{0.5, 0}, {-1.2, 2.1}});
  double best = 1e300;
  for (int i = 0; i <= 1000; ++i) {
    const double a = i * 1e-3;
    const Hypothesis hh = Hypothesis::weighted(c, Eigen::Vector2d(a, 1 - a), 1e-9);
    best = std::min(best, (yy - sketch_of_mixture(fs, p, hh)).norm());
  }
  const double v = proxy_value_clustering(fs, yy, c);
  CHECK(v <= best + 1e-12);
  CHECK(best - v < 1e-4);

  const KernelParams g = KernelParams::gaussian(Eigen::MatrixXd::Identity(2, 2), 1.0, 1.0);
  const FrequencySet gs = sample_gauss_frequencies(g, 30, 3);
  CHECK(proxy_value(gs, g, sketch_of_mixture(gs, g, h), h) <= 1e-12);
  CHECK_THROWS_AS(proxy_value(gs, g, Eigen::VectorXcd::Zero(7), h), std::invalid_argument);
}

TEST_CASE("analytic proxy gradients match central differences") {
  std::mt19937_64 g(5);
  std::normal_distribution<double> N;
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 3, k = 1 + t % 4;
    const KernelParams p = t % 2 ? KernelParams::dirac(d, 0.7, 1.0)
                                 : KernelParams::gaussian(Eigen::MatrixXd::Identity(d, d), 0.8, 1.0);
    const FrequencySet fs = sample_frequencies(p, 20, 100 + t);
    Eigen::VectorXcd y(20);
    for (int j = 0; j < 20; ++j) y(j) = {0.2 * N(g), 0.2 * N(g)};
    Eigen::MatrixXd C(k, d);
    for (int i = 0; i < k * d; ++i) C.data()[i] = N(g);
    Eigen::VectorXd a(k);
    for (int i = 0; i < k; ++i) a(i) = 0.1 + std::abs(N(g));
    const ProxyGradient pg = proxy_objective(fs, p, y, C, a);
    const double h = 1e-6;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < k * d; ++i) {
      Eigen::MatrixXd Cp = C, Cm = C;
      Cp.data()[i] += h;
      Cm.data()[i] -= h;
      const double fd = (proxy_objective(fs, p, y, Cp, a).value - proxy_objective(fs, p, y, Cm, a).value) / (2 * h);
      num = std::max(num, std::abs(fd - pg.grad_c.data()[i]));
      den = std::max(den, std::abs(pg.grad_c.data()[i]));
    }
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd ap = a, am = a;
      ap(i) += h;
      am(i) -= h;
      const double fd = (proxy_objective(fs, p, y, C, ap).value - proxy_objective(fs, p, y, C, am).value) / (2 * h);
      num = std::max(num, std::abs(fd - pg.grad_alpha(i)));
      den = std::max(den, std::abs(pg.grad_alpha(i)));
    }
    bad += num > 1e-5 * std::max(den, 1e-3);
  }
  CHECK(bad == 0);
}

TEST_CASE("decode a single noiseless Dirac") {
  const KernelParams p = KernelParams::dirac(2, 0.5, 1.0);
  const FrequencySet fs = sample_dirac_frequencies(2, 64, 0.5, 11, 1.0);
  const Eigen::Vector2d c(0.7, -1.3);
  DecodeConfig cfg;
  cfg.k = 1;
  cfg.eps = 1.0;
  cfg.R = 3.0;
  cfg.seed = 4;
  const DecodeResult r = decode(fs, p, feature_map(fs, c), cfg);
  CHECK((r.hypothesis.centroids.row(0).transpose() - c).norm() <= 1e-6);
  CHECK(r.converged);
}

TEST_CASE("decode three separated clusters from samples") {
  const double s = 1.0;
  const double eps = 4 * s * std::sqrt(std::log(3 * std::exp(1.0)));
  const KernelParams p = KernelParams::dirac(2, s, eps);
  // equilateral triangle with side 10 eps
  const double side = 10 * eps;
  const Eigen::MatrixXd truth = rows({{0, 0}, {side, 0}, {side / 2, side * std::sqrt(3.0) / 2}});
  const Eigen::RowVector2d center = truth.colwise().mean();
  const Eigen::MatrixXd c = truth.rowwise() - center;
  const int n = 10000;
  Eigen::MatrixXd x(n, 2);
  Rng rng(8, 0);
  for (int i = 0; i < n; ++i) x.row(i) = c.row(static_cast<Eigen::Index>(rng.below(3)));
  const FrequencySet fs = sample_dirac_frequencies(p, 60, 21);
  DecodeConfig cfg;
  cfg.k = 3;
  cfg.eps = eps;
  cfg.R = 1.1 * c.rowwise().norm().maxCoeff();
  cfg.restarts = 3;
  cfg.seed = 2;
  const DecodeResult r = decode(fs, p, finalize(sketch_rows(fs, x)), cfg);
  const BaselineResult lloyd = lloyd_kmeans(x, 3, 5);
  CHECK(match_centroids(lloyd.hypothesis, r.hypothesis).max_error <= eps / 10);
  CHECK(match_centroids(Hypothesis::uniform(c), r.hypothesis).max_error <= eps / 10);
}

TEST_CASE("decoder output invariants and misspecified data") {
  const KernelParams p = KernelParams::dirac(2, 0.6, 1.0);
  const FrequencySet fs = sample_dirac_frequencies(2, 50, 0.6, 31, 1.0);
  // uniform data on a square: outside the model class
  Rng rng(9, 0);
  Eigen::MatrixXd x(3000, 2);
  for (int i = 0; i < 3000; ++i) x.row(i) << rng.uniform(-2, 2), rng.uniform(-2, 2);
  const Eigen::VectorXcd y = finalize(sketch_rows(fs, x));
  DecodeConfig cfg;
  cfg.k = 3;
  cfg.eps = 0.5;
  cfg.R = 3.0;
  cfg.seed = 1;
  const DecodeResult r = decode(fs, p, y, cfg);
  CHECK(r.converged);
  double best_random = 1e300;
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd c(3, 2);
    for (int l = 0; l < 3; ++l) c.row(l) = rng.in_ball(2, 3.0).transpose();
    best_random = std::min(best_random, proxy_value_clustering(fs, y, c));
  }
  CHECK(r.residual_norm <= best_random);
  CHECK(std::abs(r.residual_norm - (y - sketch_of_mixture(fs, p, r.hypothesis)).norm()) <= 1e-10);
  CHECK(std::abs(r.hypothesis.alphas.sum() - 1.0) <= 1e-12);
  CHECK(r.hypothesis.alphas.minCoeff() >= 0.0);
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1] * (1 + 1e-12));
  CHECK(r.hypothesis.centroids.rowwise().norm().maxCoeff() <= 3.0 + 1e-12);

  // best residual over S seeds is non-increasing in S
  double prev = 1e300;
  for (int S = 1; S <= 3; ++S) {
    DecodeConfig c2 = cfg;
    c2.restarts = S;
    const double v = decode(fs, p, y, c2).residual_norm;
    CHECK(v <= prev + 1e-15);
    prev = v;
  }

  // enforced separation
  DecodeConfig sep = cfg;
  sep.enforce_separation = true;
  sep.eps = 1.0;
  const DecodeResult rs = decode(fs, p, y, sep);
  const Eigen::MatrixXd& cc = rs.hypothesis.centroids;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      const double dist = (cc.row(a) - cc.row(b)).norm();
      CHECK((dist == 0.0 || dist >= 2.0 - 1e-12));
    }

  // underdetermined warning and bad input
  const FrequencySet tiny = sample_dirac_frequencies(2, 2, 0.6, 3, 1.0);
  DecodeConfig c3 = cfg;
  c3.k = 3;
  const DecodeResult ru = decode(tiny, p, finalize(sketch_rows(tiny, x)), c3);
  CHECK_FALSE(ru.warnings.empty());
  Eigen::VectorXcd nan = y;
  nan(0) = {NAN, 0.0};
  CHECK_THROWS_AS(decode(fs, p, nan, cfg), std::invalid_argument);
  DecodeConfig badcfg = cfg;
  badcfg.max_atoms = 2;
  CHECK_THROWS_AS(decode(fs, p, y, badcfg), std::invalid_argument);
}

TEST_CASE("Gaussian mixture decoding") {
  const int d = 2;
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(d, d);
  const KernelParams p = KernelParams::gaussian(L, std::sqrt(static_cast<double>(d)), 1.0);
  SUBCASE("single Gaussian: sample mean oracle") {
    Rng rng(4, 0);
    Eigen::MatrixXd x(10000, d);
    const Eigen::Vector2d mu(1.0, -0.5);
    for (int i = 0; i < 10000; ++i) x.row(i) = (mu + rng.normal_vector(d)).transpose();
    const FrequencySet fs = sample_gauss_frequencies(p, 40, 6);
    DecodeConfig cfg;
    cfg.k = 1;
    cfg.eps = 1.0;
    cfg.R = 4.0;
    cfg.seed = 3;
    const DecodeResult r = decode_gmm(fs, p, finalize(sketch_rows(fs, x)), cfg);
    const Eigen::VectorXd mean = x.colwise().mean().transpose();
    CHECK((r.hypothesis.centroids.row(0).transpose() - mean).norm() <= 0.1);
  }
  SUBCASE("two Gaussians: EM oracle") {
    const double sep = 10 * std::sqrt(d * std::log(2 * std::exp(1.0)));
    Eigen::MatrixXd c(2, d);
    c << -sep / 2, 0.0, sep / 2, 0.0;
    Rng rng(5, 0);
    Eigen::MatrixXd x(10000, d);
    for (int i = 0; i < 10000; ++i) {
      const int l = rng.uniform() < 0.3 ? 0 : 1;
      x.row(i) = c.row(l) + rng.normal_vector(d).transpose();
    }
    const FrequencySet fs = sample_gauss_frequencies(p, 40, 8);
    DecodeConfig cfg;
    cfg.k = 2;
    cfg.eps = sep / 2;
    cfg.R = sep;
    cfg.seed = 3;
    cfg.restarts = 2;
    const DecodeResult r = decode_gmm(fs, p, finalize(sketch_rows(fs, x)), cfg);
    const BaselineResult em = em_fixed_covariance(x, 2, L, 9);
    const Matching m = match_centroids(em.hypothesis, r.hypothesis, Metric::mahalanobis(L));
    CHECK(m.max_error <= 0.3);
    CHECK(m.max_weight_error <= 0.05);
  }
  SUBCASE("exact sketch of a GMM hypothesis") {
    const Hypothesis h = Hypothesis::weighted(rows({{-4, 1}, {3, 2}}), Eigen::Vector2d(0.35, 0.65));
    const FrequencySet fs = sample_gauss_frequencies(p, 30, 10);
    DecodeConfig cfg;
    cfg.k = 2;
    cfg.eps = 1.0;
    cfg.R = 6.0;
    cfg.seed = 1;
    cfg.restarts = 2;
    const DecodeResult r = decode_gmm(fs, p, sketch_of_mixture(fs, p, h), cfg);
    CHECK(r.residual_norm <= 1e-10);
  }
}
