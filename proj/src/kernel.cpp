#include "csl/kernel.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "csl/errors.hpp"
#include "csl/mixture.hpp"

namespace csl {

const char* family_name(Family f) {
  return f == Family::DiracWeighted ? "dirac" : "gaussian";
}

Family family_from_name(const char* name) {
  if (std::strcmp(name, "dirac") == 0) return Family::DiracWeighted;
  if (std::strcmp(name, "gaussian") == 0) return Family::GaussianPlain;
  throw std::invalid_argument(std::string("unknown family: ") + name);
}

KernelParams KernelParams::dirac(int d, double s, double eps) {
  KernelParams p;
  p.family = Family::DiracWeighted;
  p.d = d;
  p.s = s;
  p.eps = eps;
  p.sigma_chol = Eigen::MatrixXd::Identity(d, d);
  p.validate();
  return p;
}

KernelParams KernelParams::gaussian(const Eigen::MatrixXd& sigma_chol, double s, double eps) {
  KernelParams p;
  p.family = Family::GaussianPlain;
  p.d = static_cast<int>(sigma_chol.rows());
  p.s = s;
  p.eps = eps;
  p.sigma_chol = sigma_chol.triangularView<Eigen::Lower>();
  p.validate();
  return p;
}

KernelParams KernelParams::gaussian_from_covariance(const Eigen::MatrixXd& sigma, double s,
                                                    double eps) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("covariance is not positive definite");
  }
  return gaussian(llt.matrixL(), s, eps);
}

void KernelParams::validate() const {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("scale s must be > 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("separation eps must be > 0");
  if (sigma_chol.rows() != d || sigma_chol.cols() != d) {
    throw std::invalid_argument("sigma_chol must be d x d");
  }
  for (int i = 0; i < d; ++i) {
    if (!(sigma_chol(i, i) > 0.0)) {
      throw std::invalid_argument("sigma_chol must have a strictly positive diagonal");
    }
    for (int j = i + 1; j < d; ++j) {
      if (sigma_chol(i, j) != 0.0) throw std::invalid_argument("sigma_chol must be lower triangular");
    }
  }
  if (!sigma_chol.allFinite()) throw std::invalid_argument("sigma_chol must be finite");
}

double KernelParams::sigma_of_s() const {
  return family == Family::DiracWeighted ? s : std::sqrt(2.0 + s * s);
}

double KernelParams::p0_norm_sq() const {
  if (family == Family::DiracWeighted) return 1.0 / dirac_normalization_sq(d);
  return std::pow(1.0 + 2.0 / (s * s), -0.5 * d);
}

Eigen::VectorXd KernelParams::whiten(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != d) throw std::invalid_argument("dimension mismatch");
  if (family == Family::DiracWeighted) return v;
  return sigma_chol.triangularView<Eigen::Lower>().solve(v);
}

double KernelParams::metric_norm(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return whiten(v).norm();
}

double KernelParams::rescaled_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                                       const Eigen::Ref<const Eigen::VectorXd>& b) const {
  if (a.size() != d || b.size() != d) throw std::invalid_argument("dimension mismatch");
  return metric_norm(a - b) / eps;
}

double k_sigma(double u, double sigma) {
  if (!std::isfinite(u) || !std::isfinite(sigma) || u < 0.0 || !(sigma > 0.0)) {
    throw std::invalid_argument("k_sigma requires finite u >= 0 and sigma > 0");
  }
  return std::exp(-u * u / (2.0 * sigma * sigma));
}

namespace {

// raw kernel as a function of the squared metric distance (not rescaled).
double raw_from_metric_sq(const KernelParams& p, double dist_sq) {
  const double sig = p.sigma_of_s();
  return p.p0_norm_sq() * std::exp(-dist_sq / (2.0 * sig * sig));
}

}  // namespace

KernelValue mean_embedding_kernel(const KernelParams& p,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta_prime) {
  if (theta.size() != p.d || theta_prime.size() != p.d) {
    throw std::invalid_argument("mean_embedding_kernel: dimension mismatch");
  }
  const double dist = p.metric_norm(theta - theta_prime);
  const double raw = raw_from_metric_sq(p, dist * dist);
  return {raw / p.p0_norm_sq(), raw};
}

SignedMeasure SignedMeasure::operator-(const SignedMeasure& other) const {
  SignedMeasure out = *this + other;
  out.weights.tail(other.size()) *= -1.0;
  return out;
}

SignedMeasure SignedMeasure::operator+(const SignedMeasure& other) const {
  if (size() > 0 && other.size() > 0 && locations.cols() != other.locations.cols()) {
    throw std::invalid_argument("signed measures of different dimension");
  }
  const auto cols = size() > 0 ? locations.cols() : other.locations.cols();
  SignedMeasure out;
  out.locations.resize(size() + other.size(), cols);
  out.weights.resize(size() + other.size());
  if (size() > 0) {
    out.locations.topRows(size()) = locations;
    out.weights.head(size()) = weights;
  }
  if (other.size() > 0) {
    out.locations.bottomRows(other.size()) = other.locations;
    out.weights.tail(other.size()) = other.weights;
  }
  return out;
}

double kernel_inner(const KernelParams& p, const SignedMeasure& a, const SignedMeasure& b) {
  if ((a.size() > 0 && a.locations.cols() != p.d) || (b.size() > 0 && b.locations.cols() != p.d)) {
    throw std::invalid_argument("kernel_inner: dimension mismatch");
  }
  // Whiten once so the pairwise loop is Euclidean.
  Eigen::MatrixXd wa(a.size(), p.d), wb(b.size(), p.d);
  for (int i = 0; i < a.size(); ++i) wa.row(i) = p.whiten(a.locations.row(i).transpose());
  for (int j = 0; j < b.size(); ++j) wb.row(j) = p.whiten(b.locations.row(j).transpose());
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < b.size(); ++j) {
      acc += a.weights(i) * b.weights(j) * raw_from_metric_sq(p, (wa.row(i) - wb.row(j)).squaredNorm());
    }
  }
  return acc;
}

double kernel_norm_sq(const KernelParams& p, const SignedMeasure& mu) {
  return std::max(0.0, kernel_inner(p, mu, mu));
}

double mmd(const KernelParams& p, const MixtureModel& tau, const MixtureModel& tau_prime) {
  if (tau.family() != p.family || tau_prime.family() != p.family) {
    throw std::invalid_argument("mmd: mixture family does not match kernel family");
  }
  if (tau.hypothesis.d() != p.d || tau_prime.hypothesis.d() != p.d) {
    throw std::invalid_argument("mmd: dimension mismatch");
  }
  return std::sqrt(kernel_norm_sq(p, tau.as_measure() - tau_prime.as_measure()));
}

double sigma_star(int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return 1.0 / (4.0 * std::sqrt(std::log(std::exp(1.0) * k)));
}

double c_of_k_sigma(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (sigma > 0.5) {
    throw DomainError("C(K_sigma) closed form requires sigma <= 1/2 (sigma^2 <= 1/4), got sigma = " +
                      std::to_string(sigma));
  }
  const double s2 = sigma * sigma;
  return 2.0 / (s2 * s2) * std::exp(-1.0 / (2.0 * s2));
}

CoherenceConstants coherence_constants(double sigma, int k) {
  CoherenceConstants c;
  c.sigma = sigma;
  c.k = k;
  c.sigma_star = sigma_star(k);
  c.c_of_k = c_of_k_sigma(sigma);
  c.mutual_coherence_bound = 4.0 * c.c_of_k;
  c.ell_coherence_bound = c.mutual_coherence_bound * (2.0 * k - 1.0);
  return c;
}

CoherenceConstants coherence_constants(const KernelParams& p, int k) {
  p.validate();
  return coherence_constants(p.effective_sigma(), k);
}

}  // namespace csl
