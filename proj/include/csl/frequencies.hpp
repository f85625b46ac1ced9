#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csl/binary_io.hpp"
#include "csl/kernel.hpp"

namespace csl {

inline constexpr std::uint32_t kFrequencyFormatVersion = 1;

// m frequencies omega_j (rows of `omegas`) with their feature weights w(omega_j).
// Immutable once built; content_hash binds sketches to this exact set.
struct FrequencySet {
  KernelParams params;
  Eigen::MatrixXd omegas;   // m x d
  Eigen::VectorXd weights;  // m, each >= 1
  std::uint64_t seed = 0;
  Digest content_hash{};

  int m() const { return static_cast<int>(omegas.rows()); }
  int d() const { return static_cast<int>(omegas.cols()); }
};

// Mixing proportions (p1, p2, p3) of chi2_d, chi2_{d+2}, chi2_{d+4} in the law
// of s^2 |omega|^2 under the Dirac frequency distribution.
std::array<double, 3> dirac_radial_mixture_weights(int d);

// w(omega) = 1 + s^2 |omega|^2 / d.
double dirac_weight(const Eigen::Ref<const Eigen::VectorXd>& omega, double s);

// i.i.d. draws from Lambda(omega) ~ w(omega)^2 exp(-s^2 |omega|^2 / 2).
// `eps` is only stored in the set's kernel parameters.
FrequencySet sample_dirac_frequencies(int d, int m, double s, std::uint64_t seed, double eps);
FrequencySet sample_dirac_frequencies(const KernelParams& p, int m, std::uint64_t seed);

// i.i.d. draws from N(0, s^-2 Sigma^-1), unit weights.
FrequencySet sample_gauss_frequencies(const KernelParams& p, int m, std::uint64_t seed);

// Family dispatch.
FrequencySet sample_frequencies(const KernelParams& p, int m, std::uint64_t seed);

// Builds a set from explicit frequencies (weights follow the family rule) and
// computes its content hash.
FrequencySet make_frequency_set(const KernelParams& p, Eigen::MatrixXd omegas,
                                std::uint64_t seed);

std::vector<std::uint8_t> serialize_frequencies(const FrequencySet& fs);
FrequencySet deserialize_frequencies(std::span<const std::uint8_t> bytes);

void save_frequencies(const FrequencySet& fs, const std::string& path);
FrequencySet load_frequencies(const std::string& path);

}  // namespace csl
