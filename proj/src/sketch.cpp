#include "csl/sketch.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "csl/csv.hpp"
#include "csl/errors.hpp"

namespace csl {

namespace {

constexpr char kMagic[5] = "CSKS";

void check_dim(const FrequencySet& fs, Eigen::Index n) {
  if (n != fs.d()) {
    throw std::invalid_argument("dimension mismatch: expected " + std::to_string(fs.d()) +
                                ", got " + std::to_string(n));
  }
}

// Neumaier step: s += v, with the rounding error added to c.
inline void neumaier(double& s, double& c, double v) {
  const double t = s + v;
  if (std::abs(s) >= std::abs(v)) {
    c += (s - t) + v;
  } else {
    c += (v - t) + s;
  }
  s = t;
}

}  // namespace

Eigen::VectorXcd feature_map(const FrequencySet& fs, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dim(fs, x.size());
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(fs.m()));
  Eigen::VectorXcd out(fs.m());
  for (int j = 0; j < fs.m(); ++j) {
    const double phase = fs.omegas.row(j).dot(x);
    const double a = inv_sqrt_m / fs.weights(j);
    out(j) = {a * std::cos(phase), a * std::sin(phase)};
  }
  return out;
}

Eigen::VectorXd atom_amplitudes(const FrequencySet& fs, const KernelParams& p) {
  if (p.d != fs.d()) throw std::invalid_argument("kernel and frequency dimensions differ");
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(fs.m()));
  Eigen::VectorXd g(fs.m());
  if (p.family == Family::DiracWeighted) {
    g = inv_sqrt_m * fs.weights.cwiseInverse();
  } else {
    // omega^T Sigma omega = |L^T omega|^2.
    const Eigen::MatrixXd lt_omega = fs.omegas * p.sigma_chol;  // rows: (L^T omega)^T
    for (int j = 0; j < fs.m(); ++j) g(j) = inv_sqrt_m * std::exp(-0.5 * lt_omega.row(j).squaredNorm());
  }
  return g;
}

Eigen::VectorXcd atom_embedding(const FrequencySet& fs, const KernelParams& p,
                                const Eigen::Ref<const Eigen::VectorXd>& c) {
  check_dim(fs, c.size());
  if (p.family == Family::DiracWeighted) return feature_map(fs, c);
  const Eigen::VectorXd g = atom_amplitudes(fs, p);
  Eigen::VectorXcd out(fs.m());
  for (int j = 0; j < fs.m(); ++j) {
    const double phase = fs.omegas.row(j).dot(c);
    out(j) = {g(j) * std::cos(phase), g(j) * std::sin(phase)};
  }
  return out;
}

Eigen::VectorXcd sketch_of_mixture(const FrequencySet& fs, const KernelParams& p,
                                   const Hypothesis& h) {
  h.validate();
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(fs.m());
  for (int l = 0; l < h.k(); ++l) y += h.alphas(l) * atom_embedding(fs, p, h.centroids.row(l).transpose());
  return y;
}

Sketch::Sketch(const FrequencySet& fs)
    : freq_hash_(fs.content_hash),
      sum_re_(Eigen::VectorXd::Zero(fs.m())),
      sum_im_(Eigen::VectorXd::Zero(fs.m())),
      comp_re_(Eigen::VectorXd::Zero(fs.m())),
      comp_im_(Eigen::VectorXd::Zero(fs.m())) {}

Sketch::Sketch(const Digest& freq_hash, Eigen::VectorXcd sum, std::uint64_t n)
    : freq_hash_(freq_hash),
      sum_re_(sum.real()),
      sum_im_(sum.imag()),
      comp_re_(Eigen::VectorXd::Zero(sum.size())),
      comp_im_(Eigen::VectorXd::Zero(sum.size())),
      n_(n) {}

void Sketch::check_compatible(const Digest& h, int m) const {
  if (h != freq_hash_ || m != this->m()) {
    throw IncompatibleSketchError("sketch built from a different frequency set");
  }
}

inline void Sketch::accumulate(int j, double re, double im) {
  neumaier(sum_re_(j), comp_re_(j), re);
  neumaier(sum_im_(j), comp_im_(j), im);
}

void Sketch::add(const FrequencySet& fs, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_compatible(fs.content_hash, fs.m());
  check_dim(fs, x.size());
  for (int j = 0; j < fs.m(); ++j) {
    const double phase = fs.omegas.row(j).dot(x);
    const double a = 1.0 / fs.weights(j);
    accumulate(j, a * std::cos(phase), a * std::sin(phase));
  }
  ++n_;
}

void Sketch::add_rows(const FrequencySet& fs, const Eigen::Ref<const Eigen::MatrixXd>& data) {
  check_compatible(fs.content_hash, fs.m());
  check_dim(fs, data.cols());
  const Eigen::VectorXd inv_w = fs.weights.cwiseInverse();
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index start = 0; start < data.rows(); start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, data.rows() - start);
    // phases(j, i) = omega_j . x_i
    const Eigen::MatrixXd phases = fs.omegas * data.middleRows(start, rows).transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (int j = 0; j < fs.m(); ++j) {
        const double ph = phases(j, i);
        accumulate(j, inv_w(j) * std::cos(ph), inv_w(j) * std::sin(ph));
      }
    }
  }
  n_ += static_cast<std::uint64_t>(data.rows());
}

Eigen::VectorXcd Sketch::sum() const {
  Eigen::VectorXcd out(m());
  for (int j = 0; j < m(); ++j) out(j) = {sum_re_(j) + comp_re_(j), sum_im_(j) + comp_im_(j)};
  return out;
}

void Sketch::merge_from(const Sketch& other) {
  check_compatible(other.freq_hash_, other.m());
  for (int j = 0; j < m(); ++j) {
    neumaier(sum_re_(j), comp_re_(j), other.sum_re_(j));
    neumaier(sum_im_(j), comp_im_(j), other.sum_im_(j));
    comp_re_(j) += other.comp_re_(j);
    comp_im_(j) += other.comp_im_(j);
  }
  n_ += other.n_;
}

Eigen::VectorXcd Sketch::finalize() const {
  if (n_ == 0) throw EmptySketchError("cannot finalize a sketch of zero samples");
  return sum() / (static_cast<double>(n_) * std::sqrt(static_cast<double>(m())));
}

Sketch merge(const Sketch& a, const Sketch& b) {
  Sketch out = a;
  out.merge_from(b);
  return out;
}

Eigen::VectorXcd finalize(const Sketch& sk) { return sk.finalize(); }

Sketch sketch_rows(const FrequencySet& fs, const Eigen::Ref<const Eigen::MatrixXd>& data,
                   int workers) {
  check_dim(fs, data.cols());
  const Eigen::Index n = data.rows();
  if (workers <= 1 || n < 2 * workers) {
    Sketch sk(fs);
    sk.add_rows(fs, data);
    return sk;
  }
  std::vector<Sketch> parts(workers, Sketch(fs));
  std::vector<std::thread> threads;
  const Eigen::Index block = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index start = std::min(n, w * block);
    const Eigen::Index rows = std::min(block, n - start);
    threads.emplace_back([&, w, start, rows] { parts[w].add_rows(fs, data.middleRows(start, rows)); });
  }
  for (auto& t : threads) t.join();
  Sketch out = parts[0];
  for (int w = 1; w < workers; ++w) out.merge_from(parts[w]);
  return out;
}

Sketch sketch_csv_stream(const FrequencySet& fs, std::istream& in, std::size_t chunk) {
  if (chunk == 0) throw std::invalid_argument("chunk must be positive");
  Sketch sk(fs);
  int d = fs.d();
  for (;;) {
    const Eigen::MatrixXd rows = read_csv_rows(in, d, chunk);
    if (rows.rows() == 0) break;
    sk.add_rows(fs, rows);
  }
  return sk;
}

std::vector<std::uint8_t> serialize_sketch(const Sketch& sk) {
  ByteWriter out;
  out.put_magic(kMagic);
  out.put_u32(kSketchFormatVersion);
  out.put_bytes(sk.freq_hash());
  out.put_u32(static_cast<std::uint32_t>(sk.m()));
  out.put_u64(sk.n());
  const Eigen::VectorXcd s = sk.sum();
  for (int j = 0; j < sk.m(); ++j) {
    out.put_f64(s(j).real());
    out.put_f64(s(j).imag());
  }
  out.seal();
  return out.bytes();
}

Sketch deserialize_sketch(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (!in.magic_is(kMagic)) throw FormatError("not a sketch file (bad magic)");
  if (!in.has(4)) throw FormatError("truncated sketch header");
  const std::uint32_t version = in.get_u32();
  if (version != kSketchFormatVersion) {
    throw FormatError("unsupported sketch file version " + std::to_string(version));
  }
  verify_trailer(bytes);
  const Digest freq_hash = in.get_digest();
  const std::uint32_t m = in.get_u32();
  const std::uint64_t n = in.get_u64();
  if (m == 0 || bytes.size() != 4 + 4 + 32 + 4 + 8 + 16ull * m + 32) {
    throw CorruptionError("sketch file size mismatch");
  }
  Eigen::VectorXcd sum(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    const double re = in.get_f64();
    const double im = in.get_f64();
    sum(j) = {re, im};
  }
  return Sketch(freq_hash, std::move(sum), n);
}

void save_sketch(const Sketch& sk, const std::string& path) { write_file(path, serialize_sketch(sk)); }

Sketch load_sketch(const std::string& path) { return deserialize_sketch(read_file(path)); }

}  // namespace csl
