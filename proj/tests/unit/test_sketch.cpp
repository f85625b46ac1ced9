#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"

#include "csl/errors.hpp"
#include "csl/frequencies.hpp"
#include "csl/rng.hpp"
#include "csl/sketch.hpp"

using namespace csl;

namespace {

Eigen::MatrixXd sample_rows(int n, int d, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> N(0.0, 1.5);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = N(g);
  return x;
}

double rel(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("feature map values") {
  const KernelParams g = KernelParams::gaussian(Eigen::MatrixXd::Identity(3, 3), 1.0, 1.0);
  const FrequencySet gs = sample_gauss_frequencies(g, 50, 1);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(3, -1.0, 2.0);
  CHECK(feature_map(gs, x).norm() == doctest::Approx(1.0).epsilon(1e-14));

  const FrequencySet ds = sample_dirac_frequencies(3, 40, 0.5, 2, 1.0);
  const Eigen::VectorXcd z = feature_map(ds, Eigen::VectorXd::Zero(3));
  for (int j = 0; j < 40; ++j) {
    CHECK(z(j).imag() == 0.0);
    CHECK(z(j).real() == doctest::Approx(1.0 / (std::sqrt(40.0) * ds.weights(j))));
  }
  CHECK(feature_map(ds, x).norm() <= 1.0);

  Eigen::MatrixXd om(1, 1);
  om << std::numbers::pi;
  // unit weight: the Gaussian family never reweights
  const FrequencySet one = make_frequency_set(KernelParams::gaussian(Eigen::MatrixXd::Identity(1, 1), 1.0, 1.0), om, 0);
  const Eigen::VectorXcd v = feature_map(one, Eigen::VectorXd::Ones(1));
  CHECK(v(0).real() == doctest::Approx(-1.0));
  CHECK(std::abs(v(0).imag()) < 1e-15);

  CHECK_THROWS_AS(feature_map(ds, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("atom embeddings") {
  const FrequencySet ds = sample_dirac_frequencies(2, 30, 0.5, 3, 1.0);
  const KernelParams dp = KernelParams::dirac(2, 0.5, 1.0);
  const Eigen::Vector2d c(0.3, -0.7);
  CHECK(atom_embedding(ds, dp, c) == feature_map(ds, c));

  Eigen::MatrixXd om(1, 2);
  om << 1.0, 1.0;
  const KernelParams gp = KernelParams::gaussian(Eigen::MatrixXd::Identity(2, 2), 1.0, 1.0);
  const FrequencySet gs = make_frequency_set(gp, om, 0);
  const Eigen::VectorXcd psi = atom_embedding(gs, gp, Eigen::Vector2d::Zero());
  CHECK(psi(0).real() == doctest::Approx(std::exp(-1.0)));
  CHECK(psi(0).imag() == 0.0);
}

TEST_CASE("Gaussian atom against Monte-Carlo feature averages") {
  Eigen::MatrixXd L(2, 2);
  L << 0.8, 0.0, 0.3, 0.6;
  const KernelParams p = KernelParams::gaussian(L, 1.0, 1.0);
  const FrequencySet fs = sample_gauss_frequencies(p, 8, 4);
  const Eigen::Vector2d c(0.5, -0.2);
  const int n = 100000;
  std::mt19937_64 g(8);
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(8);
  Eigen::VectorXd sq_re = Eigen::VectorXd::Zero(8), sq_im = Eigen::VectorXd::Zero(8);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d x = c + L * Eigen::Vector2d(N(g), N(g));
    const Eigen::VectorXcd f = feature_map(fs, x);
    mean += f;
    sq_re += f.real().cwiseAbs2();
    sq_im += f.imag().cwiseAbs2();
  }
  mean /= n;
  const Eigen::VectorXcd psi = atom_embedding(fs, p, c);
  for (int j = 0; j < 8; ++j) {
    const double se_re = std::sqrt((sq_re(j) / n - std::pow(mean(j).real(), 2)) / n);
    const double se_im = std::sqrt((sq_im(j) / n - std::pow(mean(j).imag(), 2)) / n);
    CHECK(std::abs(mean(j).real() - psi(j).real()) <= 4 * se_re);
    CHECK(std::abs(mean(j).imag() - psi(j).imag()) <= 4 * se_im);
  }
}

TEST_CASE("sketch of a mixture") {
  const KernelParams p = KernelParams::dirac(2, 0.5, 1.0);
  const FrequencySet fs = sample_dirac_frequencies(2, 25, 0.5, 9, 1.0);
  Eigen::MatrixXd c(3, 2);
  c << 0, 1, 2, 3, -1, 0.5;
  Eigen::VectorXd a(3);
  a << 0.5, 0.25, 0.25;
  const Hypothesis h = Hypothesis::weighted(c, a);
  CHECK(rel(sketch_of_mixture(fs, p, Hypothesis::uniform(c.topRows(1))), atom_embedding(fs, p, c.row(0).transpose())) < 1e-15);
  Eigen::MatrixXd cp(3, 2);
  cp << c.row(2), c.row(0), c.row(1);
  Eigen::VectorXd ap(3);
  ap << a(2), a(0), a(1);
  CHECK(rel(sketch_of_mixture(fs, p, Hypothesis::weighted(cp, ap)), sketch_of_mixture(fs, p, h)) < 1e-15);
  Hypothesis bad = h;
  bad.alphas(0) = 0.9;
  CHECK_THROWS_AS(sketch_of_mixture(fs, p, bad), std::invalid_argument);
}

TEST_CASE("streaming sketch, merge and finalize") {
  const FrequencySet fs = sample_dirac_frequencies(3, 64, 0.7, 5, 1.0);
  const Eigen::MatrixXd x = sample_rows(1000, 3, 1);

  Sketch single(fs);
  single.add(fs, x.row(0).transpose());
  CHECK(rel(single.finalize(), feature_map(fs, x.row(0).transpose())) < 1e-15);

  // naive single-loop oracle
  Eigen::VectorXcd naive = Eigen::VectorXcd::Zero(64);
  for (int i = 0; i < 1000; ++i) naive += feature_map(fs, x.row(i).transpose());
  naive /= 1000.0;

  const Eigen::VectorXcd full = finalize(sketch_rows(fs, x));
  CHECK(rel(full, naive) < 1e-12);
  const Sketch a = sketch_rows(fs, x.topRows(500));
  const Sketch b = sketch_rows(fs, x.bottomRows(500));
  const Sketch ab = merge(a, b);
  CHECK(ab.n() == 1000);
  CHECK(rel(finalize(ab), full) < 1e-12);
  CHECK(rel(finalize(merge(b, a)), full) < 1e-12);
  CHECK(rel(finalize(sketch_rows(fs, x, 4)), full) < 1e-12);
  CHECK(finalize(ab).norm() <= 1.0);

  // associativity over a random three-way partition
  const Sketch p1 = sketch_rows(fs, x.topRows(123));
  const Sketch p2 = sketch_rows(fs, x.middleRows(123, 400));
  const Sketch p3 = sketch_rows(fs, x.bottomRows(477));
  CHECK(rel(finalize(merge(merge(p1, p2), p3)), finalize(merge(p1, merge(p2, p3)))) < 1e-12);

  // |sum_j| <= n / w_min
  const Eigen::VectorXcd s = ab.sum();
  const double wmin = fs.weights.minCoeff();
  for (int j = 0; j < 64; ++j) CHECK(std::abs(s(j)) <= 1000.0 / wmin * (1 + 1e-12));

  const FrequencySet other = sample_dirac_frequencies(3, 64, 0.7, 6, 1.0);
  CHECK_THROWS_AS(merge(a, Sketch(other)), IncompatibleSketchError);
  CHECK_THROWS_AS(finalize(Sketch(fs)), EmptySketchError);
}

TEST_CASE("csv streaming equals in-memory sketch") {
  const FrequencySet fs = sample_dirac_frequencies(2, 16, 1.0, 8, 1.0);
  const Eigen::MatrixXd x = sample_rows(300, 2, 2);
  std::ostringstream o;
  o.precision(17);
  for (int i = 0; i < 300; ++i) o << x(i, 0) << "," << x(i, 1) << "\n";
  std::istringstream in(o.str());
  const Sketch s = sketch_csv_stream(fs, in, 64);
  CHECK(s.n() == 300);
  CHECK(rel(finalize(s), finalize(sketch_rows(fs, x))) < 1e-12);
}

TEST_CASE("sketch file round trip") {
  const FrequencySet fs = sample_dirac_frequencies(2, 16, 1.0, 8, 1.0);
  const Sketch s = sketch_rows(fs, sample_rows(100, 2, 3));
  const auto bytes = serialize_sketch(s);
  CHECK(bytes.size() == 4 + 4 + 32 + 4 + 8 + 16 * 16 + 32);
  const Sketch back = deserialize_sketch(bytes);
  CHECK(back.n() == s.n());
  CHECK(back.freq_hash() == s.freq_hash());
  CHECK(back.sum() == s.sum());
  CHECK(serialize_sketch(back) == bytes);
  auto bad = bytes;
  bad[60] ^= 0x10;
  CHECK_THROWS_AS(deserialize_sketch(bad), CorruptionError);
  CHECK_THROWS_AS(deserialize_sketch(std::vector<std::uint8_t>{}), FormatError);
  const std::string path = (std::filesystem::temp_directory_path() / "csl_sketch_rt.csks").string();
  save_sketch(s, path);
  CHECK(load_sketch(path).sum() == s.sum());
  std::filesystem::remove(path);
}

TEST_CASE("empirical sketch error decays like n^-1/2") {
  const KernelParams p = KernelParams::dirac(2, 0.5, 1.0);
  const FrequencySet fs = sample_dirac_frequencies(2, 32, 0.5, 10, 1.0);
  Eigen::MatrixXd c(3, 2);
  c << 0, 0, 2, 1, -1, 2;
  const Hypothesis h = Hypothesis::uniform(c);
  const Eigen::VectorXcd target = sketch_of_mixture(fs, p, h);
  std::vector<double> lx, ly;
  for (int n : {100, 1000, 10000, 100000}) {
    double err = 0.0;
    const int reps = 30;
    for (int r = 0; r < reps; ++r) {
      Rng rng(1000 + n, r);
      Eigen::MatrixXd x(n, 2);
      for (int i = 0; i < n; ++i) x.row(i) = c.row(static_cast<Eigen::Index>(rng.below(3)));
      err += (finalize(sketch_rows(fs, x)) - target).norm();
    }
    lx.push_back(std::log(n));
    ly.push_back(std::log(err / reps));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  CHECK(slope >= -0.6);
  CHECK(slope <= -0.4);
}
