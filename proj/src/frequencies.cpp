#include "csl/frequencies.hpp"

#include <cmath>
#include <stdexcept>

#include "csl/errors.hpp"
#include "csl/rng.hpp"

namespace csl {

namespace {

constexpr char kMagic[5] = "CSKF";

void check_sizes(int d, int m) {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
}

Eigen::VectorXd family_weights(const KernelParams& p, const Eigen::MatrixXd& omegas) {
  Eigen::VectorXd w(omegas.rows());
  for (Eigen::Index j = 0; j < omegas.rows(); ++j) {
    w(j) = p.family == Family::DiracWeighted ? dirac_weight(omegas.row(j).transpose(), p.s) : 1.0;
  }
  return w;
}

// Serialized form without the trailer.
ByteWriter write_body(const FrequencySet& fs) {
  ByteWriter out;
  out.put_magic(kMagic);
  out.put_u32(kFrequencyFormatVersion);
  out.put_u8(static_cast<std::uint8_t>(fs.params.family));
  out.put_u32(static_cast<std::uint32_t>(fs.d()));
  out.put_u32(static_cast<std::uint32_t>(fs.m()));
  out.put_f64(fs.params.s);
  out.put_f64(fs.params.eps);
  for (int i = 0; i < fs.d(); ++i)
    for (int j = 0; j < fs.d(); ++j) out.put_f64(fs.params.sigma_chol(i, j));
  out.put_u64(fs.seed);
  for (int r = 0; r < fs.m(); ++r)
    for (int c = 0; c < fs.d(); ++c) out.put_f64(fs.omegas(r, c));
  for (int r = 0; r < fs.m(); ++r) out.put_f64(fs.weights(r));
  return out;
}

}  // namespace

std::array<double, 3> dirac_radial_mixture_weights(int d) {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  const double z = dirac_normalization_sq(d);
  return {1.0 / z, 2.0 / z, (d + 2.0) / d / z};
}

double dirac_weight(const Eigen::Ref<const Eigen::VectorXd>& omega, double s) {
  return 1.0 + s * s * omega.squaredNorm() / static_cast<double>(omega.size());
}

FrequencySet make_frequency_set(const KernelParams& p, Eigen::MatrixXd omegas,
                                std::uint64_t seed) {
  p.validate();
  if (omegas.cols() != p.d) throw std::invalid_argument("omegas must have d columns");
  check_sizes(p.d, static_cast<int>(omegas.rows()));
  FrequencySet fs;
  fs.params = p;
  fs.weights = family_weights(p, omegas);
  fs.omegas = std::move(omegas);
  fs.seed = seed;
  ByteWriter body = write_body(fs);
  fs.content_hash = body.seal();
  return fs;
}

FrequencySet sample_dirac_frequencies(int d, int m, double s, std::uint64_t seed, double eps) {
  return sample_dirac_frequencies(KernelParams::dirac(d, s, eps), m, seed);
}

FrequencySet sample_dirac_frequencies(const KernelParams& p, int m, std::uint64_t seed) {
  if (p.family != Family::DiracWeighted) {
    throw std::invalid_argument("sample_dirac_frequencies needs the Dirac family");
  }
  check_sizes(p.d, m);
  const auto mix = dirac_radial_mixture_weights(p.d);
  Rng rng(seed);
  Eigen::MatrixXd omegas(m, p.d);
  for (int j = 0; j < m; ++j) {
    // z ~ N(0, I_d) supplies both the direction and a chi2_d variate; adding
    // one or two independent chi2_2 = -2 log U terms gives chi2_{d+2}, chi2_{d+4}.
    Eigen::VectorXd z = rng.normal_vector(p.d);
    double t = z.squaredNorm();
    while (t == 0.0) {
      z = rng.normal_vector(p.d);
      t = z.squaredNorm();
    }
    const Eigen::VectorXd direction = z / std::sqrt(t);
    const double u = rng.uniform();
    if (u >= mix[0]) t += -2.0 * std::log(rng.uniform_open_left());
    if (u >= mix[0] + mix[1]) t += -2.0 * std::log(rng.uniform_open_left());
    omegas.row(j) = (std::sqrt(t) / p.s) * direction.transpose();
  }
  return make_frequency_set(p, std::move(omegas), seed);
}

FrequencySet sample_gauss_frequencies(const KernelParams& p, int m, std::uint64_t seed) {
  if (p.family != Family::GaussianPlain) {
    throw std::invalid_argument("sample_gauss_frequencies needs the Gaussian family");
  }
  p.validate();
  check_sizes(p.d, m);
  Rng rng(seed);
  const auto upper = p.sigma_chol.transpose().triangularView<Eigen::Upper>();
  Eigen::MatrixXd omegas(m, p.d);
  for (int j = 0; j < m; ++j) {
    // Cov(L^-T z / s) = s^-2 (L L^T)^-1 = s^-2 Sigma^-1.
    const Eigen::VectorXd z = rng.normal_vector(p.d) / p.s;
    omegas.row(j) = upper.solve(z).transpose();
  }
  if (!omegas.allFinite()) throw std::invalid_argument("singular Cholesky factor");
  return make_frequency_set(p, std::move(omegas), seed);
}

FrequencySet sample_frequencies(const KernelParams& p, int m, std::uint64_t seed) {
  return p.family == Family::DiracWeighted ? sample_dirac_frequencies(p, m, seed)
                                           : sample_gauss_frequencies(p, m, seed);
}

std::vector<std::uint8_t> serialize_frequencies(const FrequencySet& fs) {
  ByteWriter body = write_body(fs);
  body.seal();
  return body.bytes();
}

FrequencySet deserialize_frequencies(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (!in.magic_is(kMagic)) throw FormatError("not a frequency file (bad magic)");
  if (!in.has(4)) throw FormatError("truncated frequency header");
  const std::uint32_t version = in.get_u32();
  if (version != kFrequencyFormatVersion) {
    throw FormatError("unsupported frequency file version " + std::to_string(version));
  }
  const Digest digest = verify_trailer(bytes);

  const std::uint8_t fam = in.get_u8();
  if (fam > 1) throw CorruptionError("bad family byte");
  const std::uint32_t d = in.get_u32();
  const std::uint32_t m = in.get_u32();
  const std::size_t expected = 4 + 4 + 1 + 4 + 4 + 8 + 8 + 8ull * d * d + 8 + 8ull * m * d + 8ull * m + 32;
  if (d == 0 || m == 0 || bytes.size() != expected) throw CorruptionError("frequency file size mismatch");

  FrequencySet fs;
  fs.params.family = static_cast<Family>(fam);
  fs.params.d = static_cast<int>(d);
  fs.params.s = in.get_f64();
  fs.params.eps = in.get_f64();
  fs.params.sigma_chol.resize(d, d);
  for (std::uint32_t i = 0; i < d; ++i)
    for (std::uint32_t j = 0; j < d; ++j) fs.params.sigma_chol(i, j) = in.get_f64();
  fs.seed = in.get_u64();
  fs.omegas.resize(m, d);
  for (std::uint32_t r = 0; r < m; ++r)
    for (std::uint32_t c = 0; c < d; ++c) fs.omegas(r, c) = in.get_f64();
  fs.weights.resize(m);
  for (std::uint32_t r = 0; r < m; ++r) fs.weights(r) = in.get_f64();
  fs.content_hash = digest;
  fs.params.validate();
  return fs;
}

void save_frequencies(const FrequencySet& fs, const std::string& path) {
  write_file(path, serialize_frequencies(fs));
}

FrequencySet load_frequencies(const std::string& path) {
  return deserialize_frequencies(read_file(path));
}

}  // namespace csl
