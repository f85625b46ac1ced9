#include "csl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "csl/baselines.hpp"
#include "csl/errors.hpp"
#include "csl/frequencies.hpp"
#include "csl/hypothesis_io.hpp"
#include "csl/rng.hpp"
#include "csl/sketch.hpp"
#include "csl/theory_checks.hpp"

namespace csl {

const char* s_policy_name(SPolicy p) {
  switch (p) {
    case SPolicy::Fixed: return "fixed";
    case SPolicy::S2Two: return "s2=2";
    case SPolicy::S2D: return "s2=d";
    case SPolicy::S2DLog: return "s2=d/log(ek)";
  }
  return "fixed";
}

SPolicy s_policy_from_name(const std::string& name) {
  if (name == "fixed") return SPolicy::Fixed;
  if (name == "s2=2") return SPolicy::S2Two;
  if (name == "s2=d") return SPolicy::S2D;
  if (name == "s2=d/log(ek)") return SPolicy::S2DLog;
  throw std::invalid_argument("unknown s policy '" + name + "'");
}

double s_from_policy(SPolicy p, double s_fixed, int d, int k) {
  switch (p) {
    case SPolicy::Fixed: return s_fixed;
    case SPolicy::S2Two: return std::sqrt(2.0);
    case SPolicy::S2D: return std::sqrt(static_cast<double>(d));
    case SPolicy::S2DLog: return std::sqrt(d / std::log(std::exp(1.0) * k));
  }
  return s_fixed;
}

SyntheticData generate_synthetic(Task task, int k, int d, int n, double eps, double R,
                                 Balance balance, double noise, std::uint64_t seed,
                                 const Eigen::MatrixXd& sigma_chol) {
  if (k < 1 || d < 1 || n < 1) throw std::invalid_argument("need k, d, n >= 1");
  if (!(eps > 0.0) || !(R > 0.0)) throw std::invalid_argument("eps and R must be positive");
  if (noise < 0.0) throw std::invalid_argument("noise must be >= 0");
  const Eigen::MatrixXd L = sigma_chol.size() ? sigma_chol : Eigen::MatrixXd::Identity(d, d);
  if (L.rows() != d || L.cols() != d) throw std::invalid_argument("covariance dimension mismatch");
  const bool gmm = task == Task::GMM;

  Rng rng(seed, 0);
  // Whitened coordinates, where the metric ball is Euclidean.
  Eigen::MatrixXd U(k, d);
  bool ok = false;
  for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
    for (int l = 0; l < k; ++l) U.row(l) = rng.in_ball(d, R).transpose();
    ok = true;
    for (int a = 0; a < k && ok; ++a)
      for (int b = a + 1; b < k && ok; ++b) ok = (U.row(a) - U.row(b)).norm() >= 2.0 * eps;
  }
  if (!ok) throw DomainError("infeasible packing: no 2eps-separated draw of k centroids in the R-ball");

  SyntheticData out;
  out.truth.centroids = gmm ? Eigen::MatrixXd(U * L.transpose()) : U;
  out.truth.alphas = balance == Balance::Uniform
                         ? Eigen::VectorXd::Constant(k, 1.0 / k)
                         : Eigen::VectorXd(0.5 * Eigen::VectorXd::Constant(k, 1.0 / k) + 0.5 * rng.simplex(k));
  out.truth.alphas /= out.truth.alphas.sum();

  Rng draw(seed, 1);
  out.data.resize(n, d);
  out.labels.resize(n);
  Eigen::VectorXd cdf(k);
  std::partial_sum(out.truth.alphas.data(), out.truth.alphas.data() + k, cdf.data());
  for (int i = 0; i < n; ++i) {
    const double u = draw.uniform() * cdf(k - 1);
    int l = 0;
    while (l < k - 1 && u >= cdf(l)) ++l;
    out.labels(i) = l;
    Eigen::VectorXd x = out.truth.centroids.row(l).transpose();
    if (gmm)
      x += L * draw.normal_vector(d);
    else if (noise > 0.0)
      x += noise * draw.normal_vector(d);
    out.data.row(i) = x.transpose();
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (k_grid.empty() || d_grid.empty()) throw std::invalid_argument("k and d grids must be non-empty");
  if (m_grid.empty() == m_per_kd.empty())
    throw std::invalid_argument("give exactly one of m_grid and m_per_kd");
  for (int k : k_grid)
    if (k < 1) throw std::invalid_argument("k must be >= 1");
  for (int d : d_grid)
    if (d < 1) throw std::invalid_argument("d must be >= 1");
  for (int m : m_grid)
    if (m < 1) throw std::invalid_argument("sketch sizes must be >= 1");
  for (double f : m_per_kd)
    if (!(f > 0.0)) throw std::invalid_argument("m_per_kd entries must be positive");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (!(tolerance > 0.0) || tolerance > 1.0) throw std::invalid_argument("tolerance must lie in (0, 1]");
  if (!(s > 0.0)) throw std::invalid_argument("s must be positive");
  if (eps < 0.0 || R < 0.0 || !(r_factor > 0.0)) throw std::invalid_argument("eps, R, r_factor out of range");
  if (noise < 0.0) throw std::invalid_argument("noise must be >= 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

std::vector<int> ExperimentConfig::sketch_sizes(int k, int d) const {
  if (!m_grid.empty()) return m_grid;
  std::vector<int> out;
  for (double f : m_per_kd) out.push_back(static_cast<int>(std::ceil(f * k * d - 1e-9)));
  return out;
}

namespace {

template <class T>
std::vector<T> to_vec(const std::vector<std::int64_t>& v) {
  return std::vector<T>(v.begin(), v.end());
}

std::string join_ints(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s + "]";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
  c.require_known({"task", "k_grid", "d_grid", "m_grid", "m_per_kd", "n", "s_policy", "s", "eps", "R",
                   "r_factor", "noise", "balance", "trials", "tolerance", "seed", "baseline",
                   "threads", "out_csv", "out_times", "decoder.restarts", "decoder.max_atoms",
                   "decoder.local_iters", "decoder.global_iters", "decoder.selection_pool",
                   "decoder.lattice_limit", "decoder.atom_starts", "decoder.selection_iters",
                   "decoder.enforce_separation"});
  ExperimentConfig e;
  e.task = task_from_name(c.get_string("task", "kmeans"));
  e.k_grid = to_vec<int>(c.get_ints("k_grid", {3}));
  e.d_grid = to_vec<int>(c.get_ints("d_grid", {2}));
  e.m_grid = to_vec<int>(c.get_ints("m_grid", {}));
  e.m_per_kd = c.get_doubles("m_per_kd", {});
  e.n = static_cast<int>(c.get_int("n", e.n));
  e.s_policy = s_policy_from_name(c.get_string("s_policy", "fixed"));
  e.s = c.get_double("s", e.s);
  e.eps = c.get_double("eps", e.eps);
  e.R = c.get_double("R", e.R);
  e.r_factor = c.get_double("r_factor", e.r_factor);
  e.noise = c.get_double("noise", e.noise);
  const std::string bal = c.get_string("balance", "uniform");
  if (bal != "uniform" && bal != "random") throw std::invalid_argument("balance must be uniform or random");
  e.balance = bal == "uniform" ? Balance::Uniform : Balance::Random;
  e.trials = static_cast<int>(c.get_int("trials", e.trials));
  e.tolerance = c.get_double("tolerance", e.tolerance);
  e.seed = c.get_uint("seed", e.seed);
  e.baseline = c.get_bool("baseline", e.baseline);
  e.threads = static_cast<int>(c.get_int("threads", e.threads));
  e.out_csv = c.get_string("out_csv", "");
  e.out_times = c.get_string("out_times", "");
  DecodeConfig& dc = e.decoder;
  dc.restarts = static_cast<int>(c.get_int("decoder.restarts", dc.restarts));
  dc.max_atoms = static_cast<int>(c.get_int("decoder.max_atoms", dc.max_atoms));
  dc.local_iters = static_cast<int>(c.get_int("decoder.local_iters", dc.local_iters));
  dc.global_iters = static_cast<int>(c.get_int("decoder.global_iters", dc.global_iters));
  dc.selection_pool = static_cast<int>(c.get_int("decoder.selection_pool", dc.selection_pool));
  dc.lattice_limit = c.get_double("decoder.lattice_limit", dc.lattice_limit);
  dc.atom_starts = static_cast<int>(c.get_int("decoder.atom_starts", dc.atom_starts));
  dc.selection_iters = static_cast<int>(c.get_int("decoder.selection_iters", dc.selection_iters));
  dc.enforce_separation = c.get_bool("decoder.enforce_separation", dc.enforce_separation);
  e.validate();
  return e;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream o;
  o << "task = \"" << task_name(task) << "\"\n";
  o << "k_grid = " << join_ints(k_grid) << "\n";
  o << "d_grid = " << join_ints(d_grid) << "\n";
  if (!m_grid.empty()) o << "m_grid = " << join_ints(m_grid) << "\n";
  if (!m_per_kd.empty()) o << "m_per_kd = " << join_doubles(m_per_kd) << "\n";
  o << "n = " << n << "\n";
  o << "s_policy = \"" << s_policy_name(s_policy) << "\"\n";
  o << "s = " << format_double(s) << "\n";
  o << "eps = " << format_double(eps) << "\n";
  o << "R = " << format_double(R) << "\n";
  o << "r_factor = " << format_double(r_factor) << "\n";
  o << "noise = " << format_double(noise) << "\n";
  o << "balance = \"" << (balance == Balance::Uniform ? "uniform" : "random") << "\"\n";
  o << "trials = " << trials << "\n";
  o << "tolerance = " << format_double(tolerance) << "\n";
  o << "seed = " << seed << "\n";
  o << "baseline = " << (baseline ? "true" : "false") << "\n";
  o << "threads = " << threads << "\n";
  if (!out_csv.empty()) o << "out_csv = \"" << out_csv << "\"\n";
  if (!out_times.empty()) o << "out_times = \"" << out_times << "\"\n";
  o << "[decoder]\n";
  o << "restarts = " << decoder.restarts << "\n";
  o << "max_atoms = " << decoder.max_atoms << "\n";
  o << "local_iters = " << decoder.local_iters << "\n";
  o << "global_iters = " << decoder.global_iters << "\n";
  o << "selection_pool = " << decoder.selection_pool << "\n";
  o << "lattice_limit = " << format_double(decoder.lattice_limit) << "\n";
  o << "atom_starts = " << decoder.atom_starts << "\n";
  o << "selection_iters = " << decoder.selection_iters << "\n";
  o << "enforce_separation = " << (decoder.enforce_separation ? "true" : "false") << "\n";
  return o.str();
}

CellSpec make_cell(const ExperimentConfig& cfg, int k, int d, int m, int trial) {
  CellSpec c;
  c.task = cfg.task;
  c.k = k;
  c.d = d;
  c.m = m;
  c.n = cfg.n;
  c.s = s_from_policy(cfg.s_policy, cfg.s, d, k);
  const Family fam = cfg.task == Task::GMM ? Family::GaussianPlain : Family::DiracWeighted;
  c.eps = cfg.eps > 0.0 ? cfg.eps : theory_separation(fam, c.s, k);
  c.R = cfg.R > 0.0 ? cfg.R : cfg.r_factor * c.eps;
  c.noise = cfg.noise;
  c.balance = cfg.balance;
  c.tolerance = cfg.tolerance;
  c.baseline = cfg.baseline;
  // The trial seed depends on (k, d, trial) only, so every m of a column sees
  // the same data sets.
  c.seed = Rng::derive(Rng::derive(Rng::derive(cfg.seed, static_cast<std::uint64_t>(k)),
                                   static_cast<std::uint64_t>(d)),
                       static_cast<std::uint64_t>(trial));
  c.decoder = cfg.decoder;
  c.decoder.threads = 1;
  return c;
}

PipelineResult run_pipeline(const CellSpec& cell) {
  using clock = std::chrono::steady_clock;
  PipelineResult res;
  const bool gmm = cell.task == Task::GMM;
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(cell.d, cell.d);

  auto t0 = clock::now();
  const SyntheticData syn = generate_synthetic(cell.task, cell.k, cell.d, cell.n, cell.eps, cell.R,
                                               cell.balance, cell.noise, Rng::derive(cell.seed, 1), L);
  res.truth = syn.truth;
  res.times.generate = seconds_since(t0);

  const KernelParams p = gmm ? KernelParams::gaussian(L, cell.s, cell.eps)
                             : KernelParams::dirac(cell.d, cell.s, cell.eps);
  t0 = clock::now();
  const FrequencySet fs = sample_frequencies(p, cell.m, Rng::derive(cell.seed, 2));
  res.freq_hash = fs.content_hash;
  res.times.frequencies = seconds_since(t0);

  t0 = clock::now();
  const Eigen::VectorXcd y = finalize(sketch_rows(fs, syn.data));
  res.times.sketch = seconds_since(t0);

  t0 = clock::now();
  DecodeConfig dc = cell.decoder;
  dc.k = cell.k;
  dc.eps = cell.eps;
  dc.R = cell.R;
  dc.seed = Rng::derive(cell.seed, 3);
  const DecodeResult dec = gmm ? decode_gmm(fs, p, y, dc) : decode(fs, p, y, dc);
  res.decoded = dec.hypothesis;
  res.converged = dec.converged;
  res.times.decode = seconds_since(t0);

  t0 = clock::now();
  const Metric metric = Metric::of(p);
  const Matching match = match_centroids(res.truth, res.decoded, metric);
  res.centroid_error = match.max_error;
  res.weight_error = match.max_weight_error;
  res.success = res.centroid_error <= cell.tolerance * cell.eps;
  const int pw = cell.task == Task::KMedians ? 1 : 2;
  res.decoded_risk = gmm ? gmm_nll(syn.data, res.decoded, L) : clustering_risk(syn.data, res.decoded, pw).risk;
  res.times.eval = seconds_since(t0);

  res.baseline_risk = std::numeric_limits<double>::quiet_NaN();
  if (cell.baseline) {
    t0 = clock::now();
    const BaselineResult b = gmm ? em_fixed_covariance(syn.data, cell.k, L, Rng::derive(cell.seed, 4))
                                 : lloyd_kmeans(syn.data, cell.k, Rng::derive(cell.seed, 4));
    res.baseline_fit = b.hypothesis;
    res.baseline_risk = gmm ? b.objective : clustering_risk(syn.data, b.hypothesis, pw).risk;
    res.times.baseline = seconds_since(t0);
  }
  return res;
}

TransitionFit fit_transition(const std::vector<PhaseRow>& rows) {
  TransitionFit fit;
  // Columns in order of first appearance.
  std::vector<std::pair<int, int>> cols;
  for (const auto& r : rows)
    if (std::find(cols.begin(), cols.end(), std::make_pair(r.k, r.d)) == cols.end()) cols.emplace_back(r.k, r.d);
  std::vector<double> xs, ys;
  for (const auto& [k, d] : cols) {
    std::vector<PhaseRow> col;
    for (const auto& r : rows)
      if (r.k == k && r.d == d) col.push_back(r);
    std::sort(col.begin(), col.end(), [](const PhaseRow& a, const PhaseRow& b) { return a.m < b.m; });
    int inv = 0;
    for (std::size_t i = 1; i < col.size(); ++i) inv += col[i].success_rate() < col[i - 1].success_rate();
    double mstar = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : col)
      if (r.success_rate() >= 0.5) {
        mstar = r.m;
        break;
      }
    fit.kd.push_back(k * d);
    fit.m_star.push_back(mstar);
    fit.inversions.push_back(inv);
    if (std::isnan(mstar)) {
      ++fit.missing;
    } else {
      xs.push_back(k * d);
      ys.push_back(mstar);
    }
  }
  const std::size_t n = xs.size();
  if (n >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx > 0) {
      fit.slope = sxy / sxx;
      fit.intercept = my - fit.slope * mx;
      fit.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    }
  }
  return fit;
}

PhaseResult phase_diagram(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Job {
    int k, d, m, trial;
    std::size_t row;
  };
  PhaseResult res;
  std::vector<Job> jobs;
  for (int k : cfg.k_grid)
    for (int d : cfg.d_grid)
      for (int m : cfg.sketch_sizes(k, d)) {
        res.rows.push_back({k, d, m, cfg.trials, 0});
        for (int t = 0; t < cfg.trials; ++t) jobs.push_back({k, d, m, t, res.rows.size() - 1});
      }
  std::vector<char> success(jobs.size(), 0);
  res.timings.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& j = jobs[i];
      CellSpec cell = make_cell(cfg, j.k, j.d, j.m, j.trial);
      cell.baseline = false;  // not needed for success rates
      const PipelineResult r = run_pipeline(cell);
      success[i] = r.success;
      res.timings[i] = {j.k, j.d, j.m, j.trial, r.times};
    }
  };
  const int nt = std::max(1, std::min<int>(cfg.threads, static_cast<int>(jobs.size())));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  // Deterministic reduction in job order.
  for (std::size_t i = 0; i < jobs.size(); ++i) res.rows[jobs[i].row].successes += success[i];
  res.fit = fit_transition(res.rows);
  return res;
}

std::string phase_csv(const ExperimentConfig& cfg, const PhaseResult& res) {
  std::ostringstream o;
  // Output paths and the thread count do not change the results.
  ExperimentConfig canonical = cfg;
  canonical.out_csv.clear();
  canonical.out_times.clear();
  canonical.threads = 1;
  const std::string text = canonical.to_text();
  const Digest h = sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  o << "# config_sha256 = " << to_hex(h) << "\n";
  o << "# seed = " << cfg.seed << "\n";
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) o << "# " << line << "\n";
  o << "# transition_slope = " << format_double(res.fit.slope) << "\n";
  o << "# transition_intercept = " << format_double(res.fit.intercept) << "\n";
  o << "# transition_r2 = " << format_double(res.fit.r2) << "\n";
  o << "# transition_missing = " << res.fit.missing << "\n";
  o << "k,d,kd,m,trials,successes,success_rate\n";
  for (const auto& r : res.rows)
    o << r.k << "," << r.d << "," << r.k * r.d << "," << r.m << "," << r.trials << "," << r.successes << ","
      << format_double(r.success_rate()) << "\n";
  return o.str();
}

std::string phase_times_csv(const PhaseResult& res) {
  std::ostringstream o;
  o << "k,d,m,trial,generate_s,frequencies_s,sketch_s,decode_s,eval_s\n";
  for (const auto& t : res.timings)
    o << t.k << "," << t.d << "," << t.m << "," << t.trial << "," << t.times.generate << ","
      << t.times.frequencies << "," << t.times.sketch << "," << t.times.decode << "," << t.times.eval << "\n";
  return o.str();
}

}  // namespace csl
