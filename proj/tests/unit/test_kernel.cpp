#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "csl/errors.hpp"
#include "csl/kernel.hpp"
#include "csl/mixture.hpp"

using namespace csl;

namespace {

Eigen::VectorXd randvec(std::mt19937_64& g, int d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = n(g);
  return v;
}

Eigen::MatrixXd random_chol(std::mt19937_64& g, int d) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::normal_distribution<double> n(0.0, 0.3);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    L(i, i) = u(g);
    for (int j = 0; j < i; ++j) L(i, j) = n(g);
  }
  return L;
}

}  // namespace

TEST_CASE("k_sigma values") {
  CHECK(k_sigma(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(k_sigma(0.7, 0.7) == doctest::Approx(std::exp(-0.5)));
  const double v = k_sigma(1.0, 1.0 / std::sqrt(2.0));
  CHECK(v == doctest::Approx(std::exp(-1.0)));
  CHECK(v <= 0.5);
  CHECK_THROWS_AS(k_sigma(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(k_sigma(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(k_sigma(NAN, 1.0), std::invalid_argument);
}

TEST_CASE("k_sigma lower and upper envelopes") {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const double sigma = 0.05 + U(g);
    const double u = 10.0 * sigma * U(g);
    const double k = k_sigma(u, sigma);
    CHECK(k >= 0.0);
    CHECK(1.0 - k >= std::min(1.0, (u / sigma) * (u / sigma)) / 3.0 - 1e-15);
  }
  for (int t = 0; t < 1000; ++t) {
    const double sigma = (1.0 / std::sqrt(2.0)) * (0.05 + 0.95 * U(g));
    const double u = U(g);
    CHECK(k_sigma(u, sigma) <= 1.0 - u * u / 2.0 + 1e-15);
  }
  // monotone in u
  double prev = 1.0;
  for (double u = 0.0; u < 5.0; u += 0.01) {
    const double k = k_sigma(u, 0.8);
    CHECK(k <= prev);
    prev = k;
  }
}

TEST_CASE("mean embedding kernel diagonal values") {
  const Eigen::VectorXd z2 = Eigen::VectorXd::Zero(2);
  const KernelParams g = KernelParams::gaussian(Eigen::MatrixXd::Identity(2, 2), std::sqrt(2.0), 1.0);
  CHECK(mean_embedding_kernel(g, z2, z2).raw == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mean_embedding_kernel(g, z2, z2).value == doctest::Approx(1.0).epsilon(1e-14));

  const KernelParams d1 = KernelParams::dirac(1, 0.7, 1.0);
  const Eigen::VectorXd z1 = Eigen::VectorXd::Zero(1);
  CHECK(mean_embedding_kernel(d1, z1, z1).raw == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(mean_embedding_kernel(d1, z1, z1).value == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(mean_embedding_kernel(g, z2, z1), std::invalid_argument);
}

TEST_CASE("normalized kernel is K_sigma of the rescaled distance") {
  std::mt19937_64 g(3);
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 4;
    const double s = 0.3 + 0.02 * t;
    const double eps = 0.5 + 0.01 * t;
    const KernelParams ps[2] = {KernelParams::dirac(d, s, eps),
                                KernelParams::gaussian(random_chol(g, d), s, eps)};
    for (const auto& p : ps) {
      const Eigen::VectorXd a = randvec(g, d), b = randvec(g, d);
      const double u = p.rescaled_distance(a, b);
      const KernelValue kv = mean_embedding_kernel(p, a, b);
      CHECK(kv.value == doctest::Approx(k_sigma(u, p.effective_sigma())).epsilon(1e-12));
      CHECK(kv.raw == doctest::Approx(kv.value * p.p0_norm_sq()).epsilon(1e-12));
      CHECK(std::abs(kv.value) <= 1.0);
    }
  }
}

TEST_CASE("Gaussian mean embedding against a Monte-Carlo double expectation") {
  // kappa(pi_theta, pi_theta') = E_{x, x'} exp(-|x - x'|^2_Sigma / (2 s^2)).
  std::mt19937_64 g(5);
  const int d = 2;
  const Eigen::MatrixXd L = random_chol(g, d);
  const double s = 0.9;
  const KernelParams p = KernelParams::gaussian(L, s, 1.0);
  const Eigen::VectorXd th = randvec(g, d), thp = randvec(g, d);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = th + L * randvec(g, d);
    const Eigen::VectorXd xp = thp + L * randvec(g, d);
    const Eigen::VectorXd w = L.triangularView<Eigen::Lower>().solve(x - xp);
    const double v = std::exp(-w.squaredNorm() / (2 * s * s));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - mean_embedding_kernel(p, th, thp).raw) <= 4 * se);
}

TEST_CASE("mmd closed forms") {
  const KernelParams p = KernelParams::dirac(2, 0.8, 1.0);
  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << 0.1, -0.3;
  b << 0.9, 0.4;
  const MixtureModel ta{p, Hypothesis::uniform(a)};
  const MixtureModel tb{p, Hypothesis::uniform(b)};
  CHECK(mmd(p, ta, ta) == doctest::Approx(0.0));
  const double dist2 = (a - b).squaredNorm();
  const double expected = std::sqrt(2.0 / (4.0 + 2.0 / 2) * (1.0 - std::exp(-dist2 / (2 * 0.8 * 0.8))));
  CHECK(mmd(p, ta, tb) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(mmd(p, tb, ta) == doctest::Approx(expected).epsilon(1e-12));

  const KernelParams q = KernelParams::gaussian(Eigen::MatrixXd::Identity(2, 2), 1.0, 1.0);
  const MixtureModel ga{q, Hypothesis::uniform(a)};
  CHECK_THROWS_AS(mmd(p, ta, ga), std::invalid_argument);
}

TEST_CASE("mmd of three-component mixtures matches Monte-Carlo feature averages") {
  // Dirac family: kappa = E_{omega ~ N(0, s^-2 I)} cos(omega . delta) / C^2,
  // the plain Gaussian feature expectation rescaled by C^2 = 4 + 2/d.
  std::mt19937_64 g(9);
  const int d = 2;
  const double s = 0.6;
  const KernelParams p = KernelParams::dirac(d, s, 1.0);
  Eigen::MatrixXd ca(3, d), cb(3, d);
  for (int l = 0; l < 3; ++l) {
    ca.row(l) = randvec(g, d).transpose();
    cb.row(l) = randvec(g, d).transpose();
  }
  Eigen::VectorXd wa(3), wb(3);
  wa << 0.2, 0.3, 0.5;
  wb << 0.6, 0.1, 0.3;
  const MixtureModel ta{p, Hypothesis::weighted(ca, wa)};
  const MixtureModel tb{p, Hypothesis::weighted(cb, wb)};
  const int n = 400000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd om = randvec(g, d, 1.0 / s);
    std::complex<double> z = 0.0;
    for (int l = 0; l < 3; ++l) {
      z += wa(l) * std::polar(1.0, om.dot(ca.row(l).transpose()));
      z -= wb(l) * std::polar(1.0, om.dot(cb.row(l).transpose()));
    }
    const double v = std::norm(z) / (4.0 + 2.0 / d);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  const double m = mmd(p, ta, tb);
  CHECK(std::abs(mean - m * m) <= 3 * se);
}

TEST_CASE("mmd triangle inequality") {
  std::mt19937_64 g(21);
  const KernelParams p = KernelParams::gaussian(random_chol(g, 3), 0.7, 1.0);
  auto rnd = [&] {
    Eigen::MatrixXd c(3, 3);
    for (int l = 0; l < 3; ++l) c.row(l) = randvec(g, 3).transpose();
    Eigen::VectorXd w = Eigen::VectorXd::Ones(3) + randvec(g, 3, 0.2).cwiseAbs();
    return MixtureModel{p, Hypothesis::weighted(c, w / w.sum())};
  };
  for (int t = 0; t < 200; ++t) {
    const auto a = rnd(), b = rnd(), c = rnd();
    const double ab = mmd(p, a, b), bc = mmd(p, b, c), ac = mmd(p, a, c);
    CHECK(ac <= (ab + bc) * (1 + 1e-12));
  }
}

TEST_CASE("coherence constants") {
  CHECK(c_of_k_sigma(0.5) == doctest::Approx(32.0 * std::exp(-2.0)).epsilon(1e-14));
  CHECK(c_of_k_sigma(0.25) == doctest::Approx(512.0 * std::exp(-8.0)).epsilon(1e-14));
  CHECK(c_of_k_sigma(sigma_star(1)) <= 3.0 / 16.0);
  CHECK(sigma_star(1) == doctest::Approx(0.25));

  const CoherenceConstants c10 = coherence_constants(sigma_star(10), 10);
  CHECK(c10.ell_coherence_bound <= 0.75);
  CHECK(c10.mutual_coherence_bound == doctest::Approx(4 * c10.c_of_k));
  CHECK(c10.ell_coherence_bound == doctest::Approx(c10.mutual_coherence_bound * 19));
  CHECK(c10.sigma_star == doctest::Approx(1.0 / (4.0 * std::sqrt(std::log(std::exp(1.0) * 10)))));

  CHECK_THROWS_AS(coherence_constants(0.51, 1), DomainError);

  // From kernel parameters: sigma = s / eps for Diracs.
  const KernelParams p = KernelParams::dirac(2, 0.25, 1.0);
  CHECK(coherence_constants(p, 1).sigma == doctest::Approx(0.25));
}

TEST_CASE("kernel parameter validation") {
  CHECK_THROWS_AS(KernelParams::dirac(2, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelParams::dirac(2, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelParams::dirac(0, 1.0, 1.0), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(1, 1) = 0.0;
  CHECK_THROWS_AS(KernelParams::gaussian(bad, 1.0, 1.0), std::invalid_argument);
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  const KernelParams p = KernelParams::gaussian_from_covariance(cov, 1.0, 1.0);
  CHECK((p.covariance() - cov).norm() < 1e-12);
}
