#include "csl/rng.hpp"

#include <cmath>
#include <numbers>

namespace csl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive(seed, stream)) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire-free rejection: fine for the small ranges used here.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open_left();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Eigen::VectorXd Rng::normal_vector(int d) {
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z(i) = normal();
  return z;
}

Eigen::VectorXd Rng::unit_vector(int d) {
  for (;;) {
    Eigen::VectorXd z = normal_vector(d);
    const double n = z.norm();
    if (n > 1e-300) return z / n;
  }
}

Eigen::VectorXd Rng::in_ball(int d, double r) {
  const double radius = r * std::pow(uniform(), 1.0 / d);
  return radius * unit_vector(d);
}

Eigen::VectorXd Rng::simplex(int k) {
  Eigen::VectorXd a(k);
  for (int i = 0; i < k; ++i) a(i) = -std::log(uniform_open_left());
  return a / a.sum();
}

}  // namespace csl
