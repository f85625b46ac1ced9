#include "csl/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "csl/risk.hpp"
#include "csl/rng.hpp"
#include "csl/simplex.hpp"
#include "csl/sketch.hpp"

namespace csl {

void DecodeConfig::validate() const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(eps > 0.0) || !(R > 0.0)) throw std::invalid_argument("eps and R must be positive");
  if (atoms_budget() < k) throw std::invalid_argument("max_atoms must be >= k");
  if (!(grad_tol > 0.0) || !(step_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (local_iters < 0 || global_iters < 0) throw std::invalid_argument("iteration budgets must be >= 0");
  if (restarts < 1 || selection_pool < 1 || atom_starts < 1 || selection_iters < 1 || threads < 1) {
    throw std::invalid_argument("restarts and selection budgets must be >= 1");
  }
}

// ---------------------------------------------------------------------------
// Proxy evaluation

namespace {

Eigen::MatrixXcd atom_matrix(const FrequencySet& fs, const KernelParams& p, const Eigen::MatrixXd& C) {
  Eigen::MatrixXcd A(fs.m(), C.rows());
  for (Eigen::Index l = 0; l < C.rows(); ++l) A.col(l) = atom_embedding(fs, p, C.row(l).transpose());
  return A;
}

void check_sketch(const FrequencySet& fs, const Eigen::VectorXcd& y) {
  if (y.size() != fs.m()) throw std::invalid_argument("sketch length differs from m");
  if (!y.allFinite()) throw std::invalid_argument("sketch has non-finite entries");
}

KernelParams dirac_atoms(const FrequencySet& fs) {
  return KernelParams::dirac(fs.d(), fs.params.s, fs.params.eps);
}

}  // namespace

double proxy_value_clustering(const FrequencySet& fs, const Eigen::VectorXcd& y,
                              const Eigen::MatrixXd& centroids) {
  check_sketch(fs, y);
  const Eigen::MatrixXcd A = atom_matrix(fs, dirac_atoms(fs), centroids);
  return simplex_least_squares(A, y, 1e-10).residual_norm;
}

double proxy_value_at(const FrequencySet& fs, const KernelParams& p, const Eigen::VectorXcd& y,
                      const Hypothesis& h) {
  check_sketch(fs, y);
  return (y - sketch_of_mixture(fs, p, h)).norm();
}

double proxy_value(const FrequencySet& fs, const KernelParams& p, const Eigen::VectorXcd& y,
                   const Hypothesis& h) {
  h.validate();
  if (p.family == Family::DiracWeighted) return proxy_value_clustering(fs, y, h.centroids);
  return proxy_value_at(fs, p, y, h);
}

ProxyGradient proxy_objective(const FrequencySet& fs, const KernelParams& p,
                              const Eigen::VectorXcd& y, const Eigen::MatrixXd& centroids,
                              const Eigen::VectorXd& alpha) {
  check_sketch(fs, y);
  if (alpha.size() != centroids.rows()) throw std::invalid_argument("alpha and centroids disagree on k");
  const Eigen::MatrixXcd A = atom_matrix(fs, p, centroids);
  const Eigen::VectorXcd r = y - A * alpha.cast<std::complex<double>>();
  ProxyGradient out;
  out.value = r.squaredNorm();
  out.grad_alpha = -2.0 * (A.adjoint() * r).real();
  // W(j, l) = Im(conj(r_j) A_jl)
  const Eigen::MatrixXd W = (r.conjugate().asDiagonal() * A).imag();
  out.grad_c = 2.0 * alpha.asDiagonal() * (W.transpose() * fs.omegas);
  return out;
}

// ---------------------------------------------------------------------------
// Decoder

namespace {

// Atoms g_j exp(i omega_j . u) in whitened coordinates u (c = L u).
struct Problem {
  Eigen::MatrixXd omega;  // m x d
  Eigen::VectorXd g;      // m
  Eigen::VectorXd omega_sq;  // |omega_j|^2
  Eigen::VectorXcd y;
  double R = 1.0;
  double eps = 1.0;
  double width = 1.0;  // length scale of a single atom
  int d = 1;
};

struct Fit {
  Eigen::MatrixXd U;  // K x d
  Eigen::VectorXd alpha;
  Eigen::MatrixXcd A;
  Eigen::VectorXcd r;
  double value = 0.0;  // |r|^2
};

Eigen::MatrixXcd atoms(const Problem& P, const Eigen::MatrixXd& U) {
  const Eigen::MatrixXd ph = P.omega * U.transpose();
  Eigen::MatrixXcd A(ph.rows(), ph.cols());
  for (Eigen::Index l = 0; l < ph.cols(); ++l)
    for (Eigen::Index j = 0; j < ph.rows(); ++j) A(j, l) = {P.g(j) * std::cos(ph(j, l)), P.g(j) * std::sin(ph(j, l))};
  return A;
}

Fit fit_at(const Problem& P, const Eigen::MatrixXd& U) {
  Fit f;
  f.U = U;
  f.A = atoms(P, U);
  f.alpha = simplex_least_squares(f.A, P.y, 1e-10).alpha;
  f.r = P.y - f.A * f.alpha.cast<std::complex<double>>();
  f.value = f.r.squaredNorm();
  return f;
}

// Gradient in U of min_alpha |y - A(U) alpha|^2 at the optimal alpha.
Eigen::MatrixXd grad_u(const Problem& P, const Fit& f) {
  const Eigen::MatrixXd W = (f.r.conjugate().asDiagonal() * f.A).imag();
  return 2.0 * f.alpha.asDiagonal() * (W.transpose() * P.omega);
}

Eigen::MatrixXd project_ball(Eigen::MatrixXd U, double R) {
  for (Eigen::Index l = 0; l < U.rows(); ++l) {
    const double n = U.row(l).norm();
    if (n > R) U.row(l) *= R / n;
  }
  return U;
}

struct RefineOutcome {
  Fit fit;
  bool converged = false;
};

// Spectral projected gradient with a monotone Armijo search.
RefineOutcome refine(const Problem& P, Fit f, int iters, double grad_tol, double step_tol,
                     std::vector<double>* trace) {
  RefineOutcome out;
  if (trace) trace->push_back(std::sqrt(f.value));
  Eigen::MatrixXd prev_u, prev_g;
  double t = 0.0;
  for (int it = 0; it < iters; ++it) {
    if (f.value == 0.0) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd G = grad_u(P, f);
    // Tolerance on the projected gradient of |r|, not |r|^2, so exact fits
    // keep refining down to rounding level.
    const double pg = (f.U - project_ball(f.U - G, P.R)).norm() / (2.0 * std::sqrt(f.value));
    if (pg <= grad_tol) {
      out.converged = true;
      break;
    }
    if (it == 0) {
      t = 0.1 * P.width / std::max(G.norm(), 1e-300);
    } else {
      const Eigen::MatrixXd su = f.U - prev_u;
      const Eigen::MatrixXd sg = G - prev_g;
      const double sy = (su.array() * sg.array()).sum();
      t = sy > 0.0 ? su.squaredNorm() / sy : 2.0 * t;
      t = std::clamp(t, 1e-12 * P.width / std::max(G.norm(), 1e-300), 10.0 * P.R / std::max(G.norm(), 1e-300));
    }
    bool accepted = false;
    Fit next;
    for (int tries = 0; tries < 60; ++tries) {
      const Eigen::MatrixXd Un = project_ball(f.U - t * G, P.R);
      const double decrease = ((Un - f.U).array() * G.array()).sum();
      if (decrease >= 0.0) {
        t *= 0.5;
        continue;
      }
      next = fit_at(P, Un);
      if (next.value <= f.value + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No decrease left at working precision.
      out.converged = true;
      break;
    }
    const double step = (next.U - f.U).norm();
    prev_u = f.U;
    prev_g = G;
    f = std::move(next);
    if (trace) trace->push_back(std::sqrt(f.value));
    if (step <= step_tol * std::max(1.0, f.U.norm())) {
      out.converged = true;
      break;
    }
  }
  out.fit = std::move(f);
  return out;
}

// Correlation of the atom at u with the residual:
// f(u) = sum_j g_j Re(exp(-i omega_j . u) r_j). Every atom has norm |g|, so
// this ranks candidates like the normalized correlation.
struct Selector {
  const Problem& P;
  Eigen::VectorXd qr, qi;

  Selector(const Problem& prob, const Eigen::VectorXcd& r) : P(prob) {
    qr = P.g.cwiseProduct(r.real());
    qi = P.g.cwiseProduct(r.imag());
  }

  double value(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd ph = P.omega * u;
    return (ph.array().cos() * qr.array() + ph.array().sin() * qi.array()).sum();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd ph = P.omega * u;
    const Eigen::VectorXd w = -ph.array().sin() * qr.array() + ph.array().cos() * qi.array();
    return P.omega.transpose() * w;
  }

  Eigen::VectorXd values(const Eigen::MatrixXd& pool) const {
    const Eigen::MatrixXd ph = P.omega * pool.transpose();
    return (ph.array().cos().colwise() * qr.array() + ph.array().sin().colwise() * qi.array()).colwise().sum().transpose();
  }
};

Eigen::VectorXd project_point(Eigen::VectorXd u, double R) {
  const double n = u.norm();
  if (n > R) u *= R / n;
  return u;
}

// Monotone normalized-gradient ascent inside the ball.
Eigen::VectorXd ascend(const Selector& S, Eigen::VectorXd u, double step, int iters, double min_step) {
  double f = S.value(u);
  for (int it = 0; it < iters && step > min_step; ++it) {
    const Eigen::VectorXd g = S.gradient(u);
    const double gn = g.norm();
    if (!(gn > 0.0)) break;
    bool accepted = false;
    while (step > min_step) {
      const Eigen::VectorXd cand = project_point(u + (step / gn) * g, S.P.R);
      const double fc = S.value(cand);
      if (fc > f) {
        u = cand;
        f = fc;
        step *= 1.5;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return u;
}

std::vector<Eigen::Index> top_indices(const Eigen::VectorXd& v, int count) {
  std::vector<Eigen::Index> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  count = std::min<int>(count, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + count, idx.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return v(a) > v(b) || (v(a) == v(b) && a < b); });
  idx.resize(count);
  return idx;
}

// Candidate points: a randomly shifted lattice of spacing ~ width/2 when it
// fits the budget, uniform random points in the ball otherwise.
Eigen::MatrixXd candidate_pool(const Problem& P, Rng& rng, const DecodeConfig& cfg) {
  const double ball_frac = [&] {
    // volume of the unit d-ball over the volume of [-1, 1]^d
    return std::exp(0.5 * P.d * std::log(std::numbers::pi) - std::lgamma(0.5 * P.d + 1.0) - P.d * std::log(2.0));
  }();
  const double spacing = 0.5 * P.width;
  const double cells = std::pow(2.0 * P.R / spacing, P.d) * ball_frac;
  if (cells <= cfg.lattice_limit && cells > cfg.selection_pool) {
    const int per_axis = static_cast<int>(std::ceil(2.0 * P.R / spacing)) + 1;
    Eigen::VectorXd shift(P.d);
    for (int a = 0; a < P.d; ++a) shift(a) = rng.uniform(0.0, spacing);
    std::vector<Eigen::VectorXd> pts;
    std::vector<int> idx(P.d, 0);
    for (;;) {
      Eigen::VectorXd u(P.d);
      for (int a = 0; a < P.d; ++a) u(a) = -P.R + shift(a) + spacing * idx[a];
      if (u.norm() <= P.R) pts.push_back(u);
      int a = 0;
      while (a < P.d && ++idx[a] == per_axis) idx[a++] = 0;
      if (a == P.d) break;
    }
    Eigen::MatrixXd pool(pts.size(), P.d);
    for (std::size_t i = 0; i < pts.size(); ++i) pool.row(i) = pts[i].transpose();
    if (pool.rows() > 0) return pool;
  }
  Eigen::MatrixXd pool(cfg.selection_pool, P.d);
  for (int i = 0; i < cfg.selection_pool; ++i) pool.row(i) = rng.in_ball(P.d, P.R).transpose();
  return pool;
}

// Screens the pool, then runs ascents from the best candidates.
Eigen::VectorXd select_atom(const Problem& P, const Eigen::VectorXcd& r, Rng& rng,
                            const DecodeConfig& cfg) {
  const Eigen::MatrixXd pool = candidate_pool(P, rng, cfg);
  const Selector exact(P, r);
  const double min_step = 1e-9 * P.width;
  Eigen::VectorXd best;
  double best_f = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i : top_indices(exact.values(pool), cfg.atom_starts)) {
    const Eigen::VectorXd u = ascend(exact, pool.row(i).transpose(), 0.25 * P.width, cfg.selection_iters, min_step);
    const double f = exact.value(u);
    if (f > best_f) {
      best_f = f;
      best = u;
    }
  }
  return best;
}

struct RunResult {
  Eigen::MatrixXd U;
  Eigen::VectorXd alpha;
  double value = 0.0;
  std::vector<double> trace;
  bool converged = false;
};

RunResult run_once(const Problem& P, const DecodeConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd U(0, P.d);
  Eigen::VectorXcd r = P.y;
  Fit f;
  for (int t = 0; t < cfg.atoms_budget(); ++t) {
    Eigen::VectorXd u = select_atom(P, r, rng, cfg);
    for (Eigen::Index l = 0; l < U.rows(); ++l) {
      if ((U.row(l).transpose() - u).norm() <= 1e-6 * P.eps) {
        u = project_point(u + 1e-3 * P.eps * rng.unit_vector(P.d), P.R);
        break;
      }
    }
    U.conservativeResize(U.rows() + 1, Eigen::NoChange);
    U.row(U.rows() - 1) = u.transpose();
    f = refine(P, fit_at(P, U), cfg.local_iters, cfg.grad_tol, cfg.step_tol, nullptr).fit;
    U = f.U;
    r = f.r;
  }
  if (U.rows() > cfg.k) {
    std::vector<Eigen::Index> keep = top_indices(f.alpha, cfg.k);
    std::sort(keep.begin(), keep.end());
    Eigen::MatrixXd Uk(cfg.k, P.d);
    for (int l = 0; l < cfg.k; ++l) Uk.row(l) = U.row(keep[l]);
    U = Uk;
  }
  RunResult out;
  RefineOutcome g = refine(P, fit_at(P, U), cfg.global_iters, cfg.grad_tol, cfg.step_tol, &out.trace);
  out.converged = g.converged;
  f = std::move(g.fit);
  if (cfg.enforce_separation) {
    const CoverResult cover = separated_cover(f.U, 2.0 * P.eps, P.R);
    f = fit_at(P, cover.cover.centroids);
  }
  out.U = f.U;
  out.alpha = f.alpha;
  out.value = f.value;
  return out;
}

Problem make_problem(const FrequencySet& fs, const KernelParams& atoms_p, const Eigen::MatrixXd& chol,
                     const Eigen::VectorXcd& y, const DecodeConfig& cfg) {
  Problem P;
  P.omega = fs.omegas * chol;
  P.g = atom_amplitudes(fs, atoms_p);
  P.omega_sq = P.omega.rowwise().squaredNorm();
  P.y = y;
  P.R = cfg.R;
  P.eps = cfg.eps;
  P.d = fs.d();
  std::vector<double> norms(P.omega_sq.data(), P.omega_sq.data() + P.omega_sq.size());
  std::nth_element(norms.begin(), norms.begin() + norms.size() / 2, norms.end());
  const double med = std::sqrt(norms[norms.size() / 2]);
  P.width = med > 0.0 ? std::sqrt(static_cast<double>(P.d)) / med : cfg.R;
  return P;
}

DecodeResult decode_impl(const FrequencySet& fs, const KernelParams& atoms_p, const Eigen::MatrixXd& chol,
                         const Eigen::VectorXcd& y, const DecodeConfig& cfg) {
  cfg.validate();
  check_sketch(fs, y);
  if (atoms_p.d != fs.d()) throw std::invalid_argument("kernel and frequency dimensions differ");
  const Problem P = make_problem(fs, atoms_p, chol, y, cfg);

  std::vector<RunResult> runs(cfg.restarts);
  auto work = [&](int first, int stride) {
    for (int i = first; i < cfg.restarts; i += stride) runs[i] = run_once(P, cfg, Rng::derive(cfg.seed, i));
  };
  const int workers = std::min(cfg.threads, cfg.restarts);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  int best = 0;
  for (int i = 1; i < cfg.restarts; ++i)
    if (runs[i].value < runs[best].value) best = i;

  RunResult& run = runs[best];
  DecodeResult res;
  res.hypothesis.centroids = run.U * chol.transpose();
  res.hypothesis.alphas = run.alpha;
  res.hypothesis.validate();
  res.residual_norm = (y - sketch_of_mixture(fs, atoms_p, res.hypothesis)).norm();
  res.trace = std::move(run.trace);
  res.converged = run.converged;
  if (fs.m() < cfg.k) res.warnings.push_back("m < k: the problem is underdetermined");
  return res;
}

}  // namespace

DecodeResult decode(const FrequencySet& fs, const KernelParams& p, const Eigen::VectorXcd& y,
                    const DecodeConfig& cfg) {
  if (p.d != fs.d()) throw std::invalid_argument("kernel and frequency dimensions differ");
  return decode_impl(fs, dirac_atoms(fs), Eigen::MatrixXd::Identity(fs.d(), fs.d()), y, cfg);
}

DecodeResult decode_gmm(const FrequencySet& fs, const KernelParams& p, const Eigen::VectorXcd& y,
                        const DecodeConfig& cfg) {
  if (p.family != Family::GaussianPlain) throw std::invalid_argument("decode_gmm needs the Gaussian family");
  p.validate();
  return decode_impl(fs, p, p.sigma_chol, y, cfg);
}

}  // namespace csl
