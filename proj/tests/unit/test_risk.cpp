#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "csl/baselines.hpp"
#include "csl/dipoles.hpp"
#include "csl/risk.hpp"
#include "csl/rng.hpp"

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

double naive_risk(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c, int p) {
  double total = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    double best = 1e300;
    for (int l = 0; l < c.rows(); ++l) {
      double s = 0.0;
      for (int j = 0; j < x.cols(); ++j) s += (x(i, j) - c(l, j)) * (x(i, j) - c(l, j));
      best = std::min(best, p == 2 ? s : std::sqrt(s));
    }
    total += best;
  }
  return total / x.rows();
}

Eigen::MatrixXd random_points(Rng& rng, int k, int d, double R) {
  Eigen::MatrixXd c(k, d);
  for (int l = 0; l < k; ++l) c.row(l) = rng.in_ball(d, R).transpose();
  return c;
}

}  // namespace

TEST_CASE("clustering risk") {
  const Eigen::MatrixXd c = rows({{0, 0}, {3, 1}});
  const Eigen::MatrixXd x = rows({{0, 0}, {3, 1}, {3, 1}});
  CHECK(clustering_risk(x, Hypothesis::uniform(c), 2).risk == 0.0);

  const double eps = 0.8;
  const Hypothesis tau = Hypothesis::uniform(rows({{eps / 2, 0}, {-eps / 2, 0}}));
  const Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(3, 2);
  CHECK(mixture_clustering_risk(tau, h0, 2) == doctest::Approx(eps * eps / 4));
  CHECK(mixture_clustering_risk(tau, h0, 1) == doctest::Approx(eps / 2));
  CHECK(clustering_risk(tau.centroids, Hypothesis::uniform(h0), 2).risk == doctest::Approx(eps * eps / 4));

  const Eigen::MatrixXd five = rows({{0, 0}, {1, 0}, {5, 5}, {6, 5}, {2, 2}});
  const Eigen::MatrixXd c2 = rows({{0.5, 0}, {5.5, 5}});
  for (int p : {1, 2}) {
    const RiskReport r = clustering_risk(five, Hypothesis::uniform(c2), p);
    CHECK(r.risk == doctest::Approx(naive_risk(five, c2, p)).epsilon(1e-14));
    CHECK(r.per_cluster.sum() / 5 == doctest::Approx(r.risk));
    CHECK(r.n == 5);
  }
  CHECK_THROWS_AS(clustering_risk(Eigen::MatrixXd(0, 2), Hypothesis::uniform(c2), 2), std::invalid_argument);
  CHECK_THROWS_AS(clustering_risk(five, Hypothesis::uniform(c2), 3), std::invalid_argument);

  // Jensen: k-medians risk <= sqrt(k-means risk)
  Rng rng(3, 0);
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd x2 = random_points(rng, 50, 3, 4.0);
    const Hypothesis h = Hypothesis::uniform(random_points(rng, 4, 3, 4.0));
    CHECK(clustering_risk(x2, h, 1).risk <= std::sqrt(clustering_risk(x2, h, 2).risk) + 1e-12);
  }
}

TEST_CASE("voronoi push-forward") {
  const Hypothesis h = Hypothesis::uniform(rows({{0, 0}, {2, 0}, {9, 9}}));
  const Hypothesis all_first = voronoi_pushforward(rows({{0, 0}, {0, 0}}), h);
  CHECK(all_first.alphas(0) == 1.0);
  CHECK(all_first.alphas(1) == 0.0);
  // equidistant point goes to the lowest index
  CHECK(voronoi_assign(rows({{1, 0}}), h.centroids)(0) == 0);
  Rng rng(4, 0);
  const Eigen::MatrixXd x = random_points(rng, 200, 2, 10.0);
  const Hypothesis pf = voronoi_pushforward(x, h);
  CHECK(pf.alphas.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pf.alphas.minCoeff() >= 0.0);
  const Hypothesis tau = Hypothesis::weighted(rows({{0.1, 0}, {1.9, 0}, {8, 8}}), Eigen::Vector3d(0.2, 0.3, 0.5));
  const Hypothesis pt = voronoi_pushforward(tau, h);
  CHECK(pt.alphas(0) == doctest::Approx(0.2));
  CHECK(pt.alphas(2) == doctest::Approx(0.5));
}

TEST_CASE("centroid condition after Lloyd") {
  Rng rng(6, 0);
  Eigen::MatrixXd x(600, 2);
  const Eigen::MatrixXd c = rows({{0, 0}, {6, 0}, {0, 6}});
  for (int i = 0; i < 600; ++i) x.row(i) = c.row(i % 3) + rng.normal_vector(2).transpose();
  const BaselineResult b = lloyd_kmeans(x, 3, 1);
  const Eigen::VectorXi lab = voronoi_assign(x, b.hypothesis.centroids);
  for (int l = 0; l < 3; ++l) {
    Eigen::RowVector2d sum = Eigen::RowVector2d::Zero();
    int n = 0;
    for (int i = 0; i < 600; ++i)
      if (lab(i) == l) {
        sum += x.row(i);
        ++n;
      }
    REQUIRE(n > 0);
    CHECK((b.hypothesis.centroids.row(l) - sum / n).norm() <= 1e-8);
  }
}

TEST_CASE("GMM likelihood and KL") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::Vector2d a(1, 2), b(1, 4);
  CHECK(kl_gaussians(a, I, a, I) == doctest::Approx(0.0));
  CHECK(kl_gaussians(a, I, b, I) == doctest::Approx(2.0).epsilon(1e-14));

  // 1-D numerical integration oracle of KL(N(0, 2) || N(0, 1))
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
  const double kl = kl_gaussians(z, Eigen::MatrixXd::Constant(1, 1, 2.0), z, Eigen::MatrixXd::Constant(1, 1, 1.0));
  CHECK(kl == doctest::Approx(0.5 * (0.0 - std::log(2.0) + 2.0 - 1.0)).epsilon(1e-14));
  double integral = 0.0;
  const double hstep = 1e-3;
  for (double x = -40.0; x <= 40.0; x += hstep) {
    const double lp = -0.5 * std::log(2 * std::numbers::pi * 2.0) - x * x / 4.0;
    const double lq = -0.5 * std::log(2 * std::numbers::pi) - x * x / 2.0;
    integral += std::exp(lp) * (lp - lq) * hstep;
  }
  CHECK(std::abs(integral - kl) <= 1e-8);

  std::mt19937_64 g(2);
  std::normal_distribution<double> N;
  for (int t = 0; t < 200; ++t) {
    Eigen::Matrix2d A, B;
    A << N(g), N(g), N(g), N(g);
    B << N(g), N(g), N(g), N(g);
    const Eigen::Matrix2d S1 = A * A.transpose() + 0.1 * Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d S2 = B * B.transpose() + 0.1 * Eigen::Matrix2d::Identity();
    CHECK(kl_gaussians(Eigen::Vector2d(N(g), N(g)), S1, Eigen::Vector2d(N(g), N(g)), S2) >= 0.0);
    CHECK(std::abs(kl_gaussians(a, S1, a, S1)) <= 1e-12);
  }
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS(kl_gaussians(a, bad, a, I));

  // nll of a single standard Gaussian at its mean
  const double nll = gmm_nll(rows({{1, 2}}), Hypothesis::uniform(rows({{1, 2}})), I);
  CHECK(nll == doctest::Approx(std::log(2 * std::numbers::pi)));
  // far-away data does not underflow
  const double far = gmm_nll(rows({{200, 0}}), Hypothesis::uniform(rows({{0, 0}, {1, 0}})), I);
  CHECK(std::isfinite(far));
}

TEST_CASE("hypothesis distances and the Lipschitz property") {
  const Eigen::MatrixXd c = rows({{0, 0}, {1, 0}, {1, 0}});
  const Eigen::MatrixXd cp = rows({{0, 0}, {1, 0}, {5, 0}});
  CHECK(hypothesis_distance(c, c).symmetric == 0.0);
  const HypothesisDistance hd = hypothesis_distance(c, cp);
  CHECK(hd.forward == 0.0);
  CHECK(hd.backward == doctest::Approx(4.0));
  CHECK(hd.symmetric == doctest::Approx(4.0));

  Rng rng(10, 0);
  for (int t = 0; t < 1000; ++t) {
    const int p = 1 + t % 2;
    const Hypothesis pi = Hypothesis::weighted(random_points(rng, 5, 2, 3.0), rng.simplex(5), 1e-9);
    const Eigen::MatrixXd h = random_points(rng, 3, 2, 3.0);
    const Eigen::MatrixXd hp = random_points(rng, 3, 2, 3.0);
    const double lhs = std::abs(std::pow(mixture_clustering_risk(pi, h, p), 1.0 / p) -
                                std::pow(mixture_clustering_risk(pi, hp, p), 1.0 / p));
    CHECK(lhs <= hypothesis_distance(h, hp).symmetric + 1e-12);
  }
}

TEST_CASE("isolated set") {
  const double eps = 1.0;
  CHECK(isolated_set(rows({{0, 0}, {2, 0}, {0, 2}}), eps).size() == 3);
  const auto iso = isolated_set(rows({{0, 0}, {0.5, 0}, {9, 9}, {0, 0}}), eps);
  REQUIRE(iso.size() == 1);
  CHECK(iso[0] == 2);
  Rng rng(11, 0);
  for (int t = 0; t < 200; ++t) {
    const Eigen::MatrixXd c = random_points(rng, 6, 2, 3.0);
    std::vector<int> brute;
    for (int i = 0; i < 6; ++i) {
      bool ok = true;
      for (int j = 0; j < 6; ++j) {
        const double dd = (c.row(i) - c.row(j)).norm();
        if (j != i && dd > 0.0 && dd < eps) ok = false;
      }
      if (ok) brute.push_back(i);
    }
    CHECK(isolated_set(c, eps) == brute);
  }
}

TEST_CASE("separated cover") {
  const double eps = 1.0;
  const Eigen::MatrixXd sep = rows({{0, 0}, {2, 0}, {0, 2}});
  const CoverResult a = separated_cover(sep, eps, 5.0);
  CHECK(a.distance == 0.0);
  CHECK(a.cover.centroids == sep);

  const CoverResult b = separated_cover(rows({{0, 0}, {0.5, 0}}), eps, 5.0);
  CHECK(b.cover.centroids.row(0) == Eigen::RowVector2d(0, 0));
  CHECK(b.cover.centroids.row(1) == Eigen::RowVector2d(0, 0));
  CHECK(b.distance == doctest::Approx(0.5));

  Rng rng(12, 0);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::MatrixXd c = random_points(rng, 5, 2, 2.0);
    const CoverResult r = separated_cover(c, eps, 2.0);
    CHECK(r.cover.k() == 5);
    CHECK(check_min_distance(r.cover, eps, 2.0, Metric::euclidean()).ok);
    CHECK(r.distance < eps);
    CHECK(r.distance == doctest::Approx(hypothesis_distance(c, r.cover.centroids).symmetric));
    for (int i : isolated_set(c, eps)) {
      bool found = false;
      for (int l = 0; l < 5; ++l) found |= r.cover.centroids.row(l) == c.row(i);
      CHECK(found);
    }
  }
}

TEST_CASE("bias bounds") {
  const double eps = 0.5, R = 10.0, delta = 0.5, nu = 0.1;
  const int k = 3;
  const Hypothesis wide = Hypothesis::uniform(rows({{0, 0}, {5, 0}, {0, 5}}));
  const BiasBounds w = clustering_bias_bounds(wide, eps, R, k, delta, nu);
  CHECK(w.w_bar_4eps == 0.0);
  CHECK(w.bound_kmedians == 0.0);
  CHECK(w.bound_kmeans == 0.0);

  const Hypothesis pair = Hypothesis::uniform(rows({{0, 0}, {0.3, 0}}));
  const BiasBounds pb = clustering_bias_bounds(pair, eps, R, 2, delta, nu);
  CHECK(pb.w_bar_2eps == doctest::Approx(1.0));
  CHECK(pb.c_statement * pb.kmedians_second == doctest::Approx(2 * pb.c_statement * eps));
  const double lg = std::log(2 * std::exp(1.0));
  CHECK(pb.c_statement == doctest::Approx(1 + (2 + nu) * 500 * std::sqrt(2 * lg * (1 + delta) / (1 - delta)) * R / eps));
  CHECK(pb.c_proof_kmedians == doctest::Approx(1 + (2 + nu) * 224 * std::sqrt(2 * lg * (1 + delta) / (1 - delta)) * 2 * R / eps));
  CHECK(pb.c_a_kmeans == doctest::Approx(56 * std::sqrt(2 / (1 - delta)) * 4 * R * R));

  // grid oracle, d = 1, k = 2: the restricted risk gap is below both min-terms
  Rng rng(13, 0);
  for (int t = 0; t < 30; ++t) {
    Eigen::MatrixXd c(2, 1);
    c << rng.uniform(-2, 2), rng.uniform(-2, 2);
    const Hypothesis pi = Hypothesis::weighted(c, rng.simplex(2), 1e-9);
    const BiasBounds bb = clustering_bias_bounds(pi, eps, 2.5, 2, delta, nu);
    double best = 1e300;
    for (double a = -2.5; a <= 2.5; a += 0.005)
      for (double b = a; b <= 2.5; b += 0.005) {
        if (b - a > 0.0 && b - a < 2 * eps) continue;  // H_{k, 2eps, R}
        Eigen::MatrixXd h(2, 1);
        h << a, b;
        best = std::min(best, mixture_clustering_risk(pi, h, 1));
      }
    const double gap = best;  // the unrestricted optimum is 0
    CHECK(gap <= std::min(bb.kmedians_first, bb.kmedians_second) + 0.01);
  }
}

TEST_CASE("recommended sketch size") {
  SketchSizeInputs in;
  in.k = 10;
  in.d = 5;
  in.eps = 1.0;
  in.R = 10.0;
  in.delta = 0.1;
  in.zeta = 0.1;
  in.universal_c = 1.0;
  CHECK(recommended_sketch_size(in) == 5215349);
  for (int k : {2, 4, 8, 16}) {
    SketchSizeInputs a = in, b = in;
    a.k = k;
    b.k = 2 * k;
    const double ratio = sketch_size_rhs(b) / sketch_size_rhs(a);
    // k^2 times slowly varying log factors
    auto logs = [&](double kk) {
      const double lg = std::log(std::exp(1.0) * kk);
      return (1 + std::log(kk * in.d) + std::log(in.R / in.eps) + std::log(1 / in.delta)) * lg *
             std::min(lg, double(in.d));
    };
    CHECK(ratio >= 4.0);
    CHECK(ratio / 4.0 == doctest::Approx(logs(2 * k) / logs(k)).epsilon(0.03));
  }
  SketchSizeInputs g = in;
  g.task = Task::GMM;
  g.s = std::sqrt(5.0);
  SketchSizeInputs g2 = g;
  g2.k = 20;
  CHECK(sketch_size_rhs(g2) / sketch_size_rhs(g) >= 4.0);
  SketchSizeInputs bad = in;
  bad.R = 0.5;
  CHECK_THROWS_AS(recommended_sketch_size(bad), std::invalid_argument);
}

TEST_CASE("excess risk divergence estimate") {
  const Hypothesis pi = Hypothesis::uniform(rows({{0.5, 0}, {-0.5, 0}}));
  const Hypothesis pp = Hypothesis::uniform(rows({{0, 0}}));
  const Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd hw = rows({{3, 0}, {-1, 0}});
  const DivergenceEstimate est = excess_risk_divergence(pi, pp, h0, 2, 4.0, {hw}, 200, 1);
  const double at_hw = (mixture_clustering_risk(pi, hw, 2) - mixture_clustering_risk(pi, h0, 2)) -
                       (mixture_clustering_risk(pp, hw, 2) - mixture_clustering_risk(pp, h0, 2));
  CHECK(est.value >= at_hw);
  CHECK(est.value >= 0.0);
  CHECK(est.evaluated >= 1);
}
