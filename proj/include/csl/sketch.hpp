#pragma once

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csl/binary_io.hpp"
#include "csl/frequencies.hpp"
#include "csl/mixture.hpp"

namespace csl {

inline constexpr std::uint32_t kSketchFormatVersion = 1;

// Phi(x)_j = exp(i omega_j . x) / (sqrt(m) w(omega_j)).
Eigen::VectorXcd feature_map(const FrequencySet& fs, const Eigen::Ref<const Eigen::VectorXd>& x);

// g_j such that the embedding of the atom at c is g_j exp(i omega_j . c):
// 1 / (sqrt(m) w_j) for Diracs, exp(-omega_j^T Sigma omega_j / 2) / sqrt(m) for Gaussians.
// The family of `p` decides; `p` must match the set's dimension.
Eigen::VectorXd atom_amplitudes(const FrequencySet& fs, const KernelParams& p);

// A(delta_c) for Diracs, Psi(c) for Gaussians.
Eigen::VectorXcd atom_embedding(const FrequencySet& fs, const KernelParams& p,
                                const Eigen::Ref<const Eigen::VectorXd>& c);

// sum_l alpha_l atom_embedding(c_l).
Eigen::VectorXcd sketch_of_mixture(const FrequencySet& fs, const KernelParams& p,
                                   const Hypothesis& h);

// Mergeable running sum of unnormalized features sum_i exp(i omega_j . x_i) / w_j.
// Each coordinate keeps a Neumaier compensation term.
class Sketch {
 public:
  Sketch() = default;
  explicit Sketch(const FrequencySet& fs);
  Sketch(const Digest& freq_hash, Eigen::VectorXcd sum, std::uint64_t n);

  const Digest& freq_hash() const { return freq_hash_; }
  int m() const { return static_cast<int>(sum_re_.size()); }
  std::uint64_t n() const { return n_; }

  void add(const FrequencySet& fs, const Eigen::Ref<const Eigen::VectorXd>& x);
  // Rows of `data` are samples.
  void add_rows(const FrequencySet& fs, const Eigen::Ref<const Eigen::MatrixXd>& data);

  // Sum with the compensation folded in.
  Eigen::VectorXcd sum() const;

  // In-place merge; throws IncompatibleSketchError on a frequency mismatch.
  void merge_from(const Sketch& other);

  // y = sum / (n sqrt(m)). Throws EmptySketchError when n = 0.
  Eigen::VectorXcd finalize() const;

 private:
  void check_compatible(const Digest& h, int m) const;
  void accumulate(int j, double re, double im);

  Digest freq_hash_{};
  Eigen::VectorXd sum_re_, sum_im_, comp_re_, comp_im_;
  std::uint64_t n_ = 0;
};

Sketch merge(const Sketch& a, const Sketch& b);
Eigen::VectorXcd finalize(const Sketch& sk);

// Single pass over the rows of `data`. With workers > 1 the rows are split in
// contiguous blocks, sketched concurrently and merged in block order.
Sketch sketch_rows(const FrequencySet& fs, const Eigen::Ref<const Eigen::MatrixXd>& data,
                   int workers = 1);

// Streams a headerless CSV, `chunk` rows at a time.
Sketch sketch_csv_stream(const FrequencySet& fs, std::istream& in, std::size_t chunk = 4096);

std::vector<std::uint8_t> serialize_sketch(const Sketch& sk);
Sketch deserialize_sketch(std::span<const std::uint8_t> bytes);
void save_sketch(const Sketch& sk, const std::string& path);
Sketch load_sketch(const std::string& path);

}  // namespace csl
