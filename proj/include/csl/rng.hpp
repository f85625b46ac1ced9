#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace csl {

// Reproducible random stream.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++ standard.
// The engine is seeded with splitmix64(seed) mixed with a stream index, which
// gives independent derived streams for restarts, trials and workers.
// Uniforms use the top 53 bits of each draw; normals use the Box-Muller
// transform. None of the <random> distributions are used, since their output
// is implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Seed of an independent child stream.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1].
  double uniform_open_left() { return 1.0 - uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  Eigen::VectorXd normal_vector(int d);
  // Uniform on the unit sphere of R^d.
  Eigen::VectorXd unit_vector(int d);
  // Uniform in the Euclidean ball of radius r.
  Eigen::VectorXd in_ball(int d, double r);
  // Flat Dirichlet sample (uniform on the simplex).
  Eigen::VectorXd simplex(int k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace csl
