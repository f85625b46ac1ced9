#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace csl {

// Base distribution family of a location mixture.
//   DiracWeighted: pi_theta = delta_theta, weighted Fourier features
//                  w(omega) = 1 + s^2 |omega|^2 / d, Gamma = s^-2 I.
//   GaussianPlain: pi_theta = N(theta, Sigma), unit weights,
//                  Gamma = s^-2 Sigma^-1.
enum class Family : std::uint8_t { DiracWeighted = 0, GaussianPlain = 1 };

const char* family_name(Family f);
Family family_from_name(const char* name);

struct KernelParams {
  Family family = Family::DiracWeighted;
  int d = 1;
  double s = 1.0;
  // Lower-triangular Cholesky factor L of Sigma (Sigma = L L^T). Identity
  // for the Dirac family.
  Eigen::MatrixXd sigma_chol = Eigen::MatrixXd::Identity(1, 1);
  double eps = 1.0;

  static KernelParams dirac(int d, double s, double eps);
  static KernelParams gaussian(const Eigen::MatrixXd& sigma_chol, double s, double eps);
  static KernelParams gaussian_from_covariance(const Eigen::MatrixXd& sigma, double s,
                                               double eps);

  // Throws std::invalid_argument when an invariant does not hold.
  void validate() const;

  Eigen::MatrixXd covariance() const { return sigma_chol * sigma_chol.transpose(); }

  // sigma(s): s for Diracs, sqrt(2 + s^2) for Gaussians.
  double sigma_of_s() const;
  // Bandwidth of the normalized kernel in the eps-rescaled metric.
  double effective_sigma() const { return sigma_of_s() / eps; }
  // |pi_0|_kappa^2: 1 / (4 + 2/d) for Diracs, (1 + 2/s^2)^(-d/2) for Gaussians.
  double p0_norm_sq() const;

  // L^-1 v for Gaussians, v for Diracs.
  Eigen::VectorXd whiten(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  // Euclidean norm (Diracs) or Mahalanobis norm sqrt(v^T Sigma^-1 v) (Gaussians).
  double metric_norm(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  // metric distance divided by eps.
  double rescaled_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b) const;
};

// E_{N(0, s^-2 I)} w(omega)^2 = 4 + 2/d for w(omega) = 1 + s^2 |omega|^2 / d.
inline double dirac_normalization_sq(int d) { return 4.0 + 2.0 / d; }

// K_sigma(u) = exp(-u^2 / (2 sigma^2)).
double k_sigma(double u, double sigma);

struct KernelValue {
  double value;  // normalized kernel, in [-1, 1]
  double raw;    // kappa(pi_theta, pi_theta')
};

KernelValue mean_embedding_kernel(const KernelParams& p,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta_prime);

// Finite signed combination sum_i weights(i) * pi_{locations.row(i)}.
struct SignedMeasure {
  Eigen::MatrixXd locations;  // rows are parameters
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(weights.size()); }
  SignedMeasure operator-(const SignedMeasure& other) const;
  SignedMeasure operator+(const SignedMeasure& other) const;
};

// kappa(mu, mu') extended bilinearly to signed measures.
double kernel_inner(const KernelParams& p, const SignedMeasure& a, const SignedMeasure& b);
// |mu|_kappa^2, clamped at zero.
double kernel_norm_sq(const KernelParams& p, const SignedMeasure& mu);

struct MixtureModel;
// |tau - tau'|_kappa.
double mmd(const KernelParams& p, const MixtureModel& tau, const MixtureModel& tau_prime);

struct CoherenceConstants {
  double sigma = 0.0;
  int k = 1;
  double c_of_k = 0.0;                  // C(K_sigma)
  double mutual_coherence_bound = 0.0;  // 4 C(K_sigma)
  double sigma_star = 0.0;              // (4 sqrt(log(e k)))^-1
  double ell_coherence_bound = 0.0;     // 4 C(K_sigma) (2k - 1)
};

// (4 sqrt(log(e k)))^-1.
double sigma_star(int k);
// 2 sigma^-4 exp(-1 / (2 sigma^2)); valid for sigma <= 1/2 only.
double c_of_k_sigma(double sigma);
// Throws DomainError when sigma > 1/2.
CoherenceConstants coherence_constants(double sigma, int k);
CoherenceConstants coherence_constants(const KernelParams& p, int k);

}  // namespace csl
