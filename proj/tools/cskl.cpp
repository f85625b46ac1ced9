// cskl: command line front end for sketching, decoding and the experiments.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "csl/csv.hpp"
#include "csl/decoder.hpp"
#include "csl/errors.hpp"
#include "csl/frequencies.hpp"
#include "csl/harness.hpp"
#include "csl/hypothesis_io.hpp"
#include "csl/risk.hpp"
#include "csl/sketch.hpp"
#include "csl/theory_checks.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

Eigen::MatrixXd identity_or(const std::string& path, int d) {
  if (path.empty()) return Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd L = csl::read_csv(path);
  if (L.rows() != d || L.cols() != d) throw std::invalid_argument("sigma-chol must be d x d");
  return L;
}

json hypothesis_json(const csl::Hypothesis& h) {
  json c = json::array();
  for (int l = 0; l < h.k(); ++l) {
    json row = json::array();
    for (int q = 0; q < h.d(); ++q) row.push_back(h.centroids(l, q));
    c.push_back(row);
  }
  json a = json::array();
  for (int l = 0; l < h.k(); ++l) a.push_back(h.alphas(l));
  return {{"centroids", c}, {"alphas", a}};
}

csl::KernelParams kernel_from(const csl::Config& c, int k) {
  const std::string fam = c.get_string("family", "dirac");
  const int d = static_cast<int>(c.get_int("d", 2));
  const double s = c.get_double("s", 1.0);
  const csl::Family f = fam == "gaussian" ? csl::Family::GaussianPlain : csl::Family::DiracWeighted;
  if (fam != "gaussian" && fam != "dirac") throw std::invalid_argument("family must be dirac or gaussian");
  double eps = c.get_double("eps", 0.0);
  if (eps <= 0.0) eps = csl::theory_separation(f, s, k);
  return f == csl::Family::GaussianPlain ? csl::KernelParams::gaussian(Eigen::MatrixXd::Identity(d, d), s, eps)
                                         : csl::KernelParams::dirac(d, s, eps);
}

json verify_rip(const csl::Config& c, std::uint64_t seed) {
  c.require_known({"family", "d", "k", "s", "eps", "R", "m", "trials", "m_grid", "quantile"});
  const int k = static_cast<int>(c.get_int("k", 3));
  const csl::KernelParams p = kernel_from(c, k);
  const double R = c.get_double("R", 7.0 * p.eps);
  const int m = static_cast<int>(c.get_int("m", 1 << 14));
  const int trials = static_cast<int>(c.get_int("trials", 500));
  const csl::FrequencySet fs = csl::sample_frequencies(p, m, csl::Rng::derive(seed, 1));
  const csl::RipReport rep = csl::empirical_rip(p, fs, k, trials, csl::Rng::derive(seed, 2), R);
  json out = {{"check", "rip"}, {"seed", seed}, {"k", k}, {"d", p.d}, {"s", p.s}, {"eps", p.eps}, {"R", R},
              {"m", m}, {"trials", rep.trials}, {"skipped", rep.skipped}, {"min_ratio", rep.min_ratio},
              {"max_ratio", rep.max_ratio}, {"frequency_hash", csl::to_hex(fs.content_hash)}};
  const auto grid = c.get_ints("m_grid", {});
  if (!grid.empty()) {
    const std::vector<int> g(grid.begin(), grid.end());
    const csl::RipScaling sc = csl::rip_deviation_scaling(p, k, g, trials, c.get_double("quantile", 0.99),
                                                          csl::Rng::derive(seed, 3), R);
    out["scaling"] = {{"m_grid", sc.m_grid}, {"deviation", sc.deviation}, {"slope", sc.slope},
                      {"inversions", sc.inversions}};
  }
  return out;
}

json verify_moments(const csl::Config& c, std::uint64_t seed) {
  c.require_known({"family", "d", "k", "s", "eps", "q", "samples"});
  const csl::KernelParams p = kernel_from(c, static_cast<int>(c.get_int("k", 1)));
  const int q = static_cast<int>(c.get_int("q", 2));
  const csl::MomentBoundReport r = csl::moment_bound_check(p, q, c.get_int("samples", 1000000), seed);
  return {{"check", "moments"}, {"seed", seed}, {"family", csl::family_name(p.family)}, {"d", p.d},
          {"s", p.s}, {"eps", p.eps}, {"q", q}, {"lhs", r.lhs_mc}, {"stderr", r.stderr_mc}, {"rhs", r.rhs},
          {"samples", r.samples}, {"pass", r.pass}};
}

json verify_separation(const csl::Config& c, std::uint64_t seed) {
  c.require_known({"d", "k", "s", "R", "p", "m", "eps_list"});
  const int d = static_cast<int>(c.get_int("d", 2));
  const int k = static_cast<int>(c.get_int("k", 2));
  const double s = c.get_double("s", 1.0);
  const double R = c.get_double("R", 1.0);
  const int pw = static_cast<int>(c.get_int("p", 2));
  const int m = static_cast<int>(c.get_int("m", 1000));
  const auto eps_list = c.get_doubles("eps_list", {1.0, 0.5, 0.25, 0.125});
  const csl::FrequencySet fs = csl::sample_dirac_frequencies(d, m, s, seed, eps_list.front());
  json rows = json::array();
  for (const auto& r : csl::separation_witness(eps_list, R, pw, k, fs))
    rows.push_back({{"eps", r.eps}, {"delta_loss", r.delta_loss}, {"delta_loss_lower", r.delta_loss_lower},
                    {"sketch_distance", r.sketch_distance}, {"ratio", r.ratio}});
  return {{"check", "separation"}, {"seed", seed}, {"d", d}, {"k", k}, {"s", s}, {"R", R}, {"p", pw},
          {"m", m}, {"rows", rows}, {"frequency_hash", csl::to_hex(fs.content_hash)}};
}

json verify_pinsker(const csl::Config& c, std::uint64_t seed) {
  c.require_known({"d", "s", "shift", "m", "trials"});
  const int d = static_cast<int>(c.get_int("d", 2));
  const double s = c.get_double("s", std::sqrt(static_cast<double>(d)));
  const csl::KernelParams p = csl::KernelParams::gaussian(Eigen::MatrixXd::Identity(d, d), s, 1.0);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  theta(0) = c.get_double("shift", 0.5);
  const int m = static_cast<int>(c.get_int("m", 1000));
  const csl::PinskerReport r =
      csl::pinsker_check(p, theta, Eigen::VectorXd::Zero(d), m, static_cast<int>(c.get_int("trials", 1000)), seed);
  json margins = json::array();
  for (const auto& t : r.trials) margins.push_back(t.margin);
  return {{"check", "pinsker"}, {"seed", seed}, {"d", d}, {"s", s}, {"m", m}, {"mmd", r.mmd},
          {"passed", r.passed}, {"trials", r.trials.size()}, {"margins", margins}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cskl: compressive statistical learning with mixture sketches"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print the version and file-format versions");

  // freq
  auto* freq = app.add_subcommand("freq", "Sample a frequency set");
  std::string f_family = "dirac", f_out, f_chol;
  int f_d = 0, f_m = 0;
  double f_s = 1.0, f_eps = 1.0;
  std::uint64_t f_seed = 0;
  freq->add_option("--family", f_family, "dirac or gaussian")->check(CLI::IsMember({"dirac", "gaussian"}));
  freq->add_option("--d", f_d, "Dimension")->required()->check(CLI::PositiveNumber);
  freq->add_option("--m", f_m, "Number of frequencies")->required()->check(CLI::PositiveNumber);
  freq->add_option("--s", f_s, "Kernel scale s")->check(CLI::PositiveNumber);
  freq->add_option("--eps", f_eps, "Separation stored with the set")->check(CLI::PositiveNumber);
  freq->add_option("--sigma-chol", f_chol, "CSV with the Cholesky factor of Sigma (gaussian)");
  freq->add_option("--seed", f_seed, "Random seed")->required();
  freq->add_option("--out", f_out, "Output .cskf")->required();

  // sketch
  auto* sk = app.add_subcommand("sketch", "Sketch a headerless CSV file");
  std::string s_freq, s_in, s_out;
  std::size_t s_chunk = 4096;
  sk->add_option("--freq", s_freq)->required();
  sk->add_option("--input", s_in)->required();
  sk->add_option("--out", s_out)->required();
  sk->add_option("--chunk", s_chunk, "Rows per block")->check(CLI::PositiveNumber);

  // decode
  auto* dec = app.add_subcommand("decode", "Fit a mixture to a sketch");
  std::string d_freq, d_sketch, d_out;
  int d_k = 0, d_restarts = 1, d_threads = 1;
  double d_eps = 0.0, d_R = 0.0;
  bool d_gmm = false, d_sep = false;
  std::uint64_t d_seed = 0;
  dec->add_option("--freq", d_freq)->required();
  dec->add_option("--sketch", d_sketch)->required();
  dec->add_option("--k", d_k)->required()->check(CLI::PositiveNumber);
  dec->add_option("--eps", d_eps, "Separation (default: the value stored with the frequencies)");
  dec->add_option("--radius", d_R, "Radius of the parameter ball")->required()->check(CLI::PositiveNumber);
  dec->add_flag("--gmm", d_gmm, "Gaussian atoms with estimated weights");
  dec->add_flag("--enforce-separation", d_sep, "Project the result onto 2eps-separated hypotheses");
  dec->add_option("--restarts", d_restarts)->check(CLI::PositiveNumber);
  dec->add_option("--threads", d_threads)->check(CLI::PositiveNumber);
  dec->add_option("--seed", d_seed)->required();
  dec->add_option("--out", d_out)->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Risk of a hypothesis on data");
  std::string e_task, e_data, e_hyp, e_chol;
  ev->add_option("--task", e_task)->required()->check(CLI::IsMember({"kmeans", "kmedians", "gmm"}));
  ev->add_option("--data", e_data)->required();
  ev->add_option("--hypothesis", e_hyp)->required();
  ev->add_option("--sigma-chol", e_chol);

  // verify
  auto* ver = app.add_subcommand("verify", "Numerical checks of the theory");
  std::string v_check, v_config, v_out;
  std::uint64_t v_seed = 0;
  ver->add_option("check", v_check)->required()->check(CLI::IsMember({"rip", "moments", "separation", "pinsker"}));
  ver->add_option("--config", v_config)->required();
  ver->add_option("--out", v_out)->required();
  ver->add_option("--seed", v_seed)->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate synthetic data");
  std::string g_task = "kmeans", g_out, g_truth, g_balance = "uniform";
  int g_k = 0, g_d = 0, g_n = 0;
  double g_eps = 0.0, g_R = 0.0, g_noise = 0.0;
  std::uint64_t g_seed = 0;
  gen->add_option("--task", g_task)->check(CLI::IsMember({"kmeans", "kmedians", "gmm"}));
  gen->add_option("--k", g_k)->required()->check(CLI::PositiveNumber);
  gen->add_option("--d", g_d)->required()->check(CLI::PositiveNumber);
  gen->add_option("--n", g_n)->required()->check(CLI::PositiveNumber);
  gen->add_option("--eps", g_eps)->required()->check(CLI::PositiveNumber);
  gen->add_option("--radius", g_R)->required()->check(CLI::PositiveNumber);
  gen->add_option("--balance", g_balance)->check(CLI::IsMember({"uniform", "random"}));
  gen->add_option("--noise", g_noise)->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", g_seed)->required();
  gen->add_option("--out", g_out)->required();
  gen->add_option("--truth", g_truth, "Write the ground truth hypothesis here");

  // phase
  auto* ph = app.add_subcommand("phase", "Phase diagram sweep");
  std::string p_config, p_out, p_times;
  std::uint64_t p_seed = 0;
  int p_threads = 0;
  ph->add_option("--config", p_config)->required();
  ph->add_option("--seed", p_seed)->required();
  ph->add_option("--out", p_out, "CSV (default: out_csv of the config)");
  ph->add_option("--times", p_times, "Wall-time CSV (default: out_times of the config)");
  ph->add_option("--threads", p_threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (show_version) {
      std::cout << "cskl " << kVersion << "\n"
                << "frequency-file " << csl::kFrequencyFormatVersion << "\n"
                << "sketch-file " << csl::kSketchFormatVersion << "\n"
                << "hypothesis-json " << csl::kHypothesisFormatVersion << "\n";
      return 0;
    }
    if (*freq) {
      csl::KernelParams p;
      if (f_family == "dirac") {
        if (!f_chol.empty()) throw std::invalid_argument("--sigma-chol applies to the gaussian family only");
        p = csl::KernelParams::dirac(f_d, f_s, f_eps);
      } else {
        p = csl::KernelParams::gaussian(identity_or(f_chol, f_d), f_s, f_eps);
      }
      const csl::FrequencySet fs = csl::sample_frequencies(p, f_m, f_seed);
      csl::save_frequencies(fs, f_out);
      std::cout << csl::to_hex(fs.content_hash) << "\n";
      return 0;
    }
    if (*sk) {
      const csl::FrequencySet fs = csl::load_frequencies(s_freq);
      std::ifstream in(s_in);
      if (!in) throw std::runtime_error("cannot open " + s_in);
      const csl::Sketch sketch = csl::sketch_csv_stream(fs, in, s_chunk);
      csl::save_sketch(sketch, s_out);
      std::cout << "n=" << sketch.n() << " m=" << sketch.m() << "\n";
      return 0;
    }
    if (*dec) {
      const csl::FrequencySet fs = csl::load_frequencies(d_freq);
      const csl::Sketch sketch = csl::load_sketch(d_sketch);
      if (sketch.freq_hash() != fs.content_hash)
        throw csl::IncompatibleSketchError("sketch was built with a different frequency set");
      const Eigen::VectorXcd y = csl::finalize(sketch);
      csl::KernelParams p = fs.params;
      csl::DecodeConfig cfg;
      cfg.k = d_k;
      cfg.eps = d_eps > 0.0 ? d_eps : p.eps;
      cfg.R = d_R;
      cfg.restarts = d_restarts;
      cfg.threads = d_threads;
      cfg.seed = d_seed;
      cfg.enforce_separation = d_sep;
      const csl::DecodeResult r = d_gmm ? csl::decode_gmm(fs, p, y, cfg) : csl::decode(fs, p, y, cfg);
      csl::HypothesisRecord rec{d_gmm ? csl::Family::GaussianPlain : csl::Family::DiracWeighted, r.hypothesis,
                                cfg.eps, cfg.R};
      csl::save_hypothesis(rec, d_out);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "residual=" << csl::format_double(r.residual_norm)
                << " converged=" << (r.converged ? "true" : "false") << "\n";
      return r.converged ? 0 : 2;
    }
    if (*ev) {
      const Eigen::MatrixXd data = csl::read_csv(e_data);
      const csl::HypothesisRecord rec = csl::load_hypothesis(e_hyp);
      if (rec.hypothesis.d() != data.cols()) throw std::invalid_argument("data and hypothesis dimensions differ");
      const csl::Task task = csl::task_from_name(e_task);
      csl::RiskReport rep;
      if (task == csl::Task::GMM) {
        rep = csl::gmm_risk(data, rec.hypothesis, identity_or(e_chol, static_cast<int>(data.cols())));
      } else {
        rep = csl::clustering_risk(data, rec.hypothesis, task == csl::Task::KMeans ? 2 : 1);
      }
      json out = {{"task", csl::task_name(task)}, {"risk", rep.risk}, {"n", rep.n}};
      json pc = json::array();
      for (Eigen::Index i = 0; i < rep.per_cluster.size(); ++i) pc.push_back(rep.per_cluster(i));
      out["per_cluster"] = pc;
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (*ver) {
      const csl::Config c = csl::Config::load(v_config);
      json out;
      if (v_check == "rip") out = verify_rip(c, v_seed);
      if (v_check == "moments") out = verify_moments(c, v_seed);
      if (v_check == "separation") out = verify_separation(c, v_seed);
      if (v_check == "pinsker") out = verify_pinsker(c, v_seed);
      write_text(v_out, out.dump(2) + "\n");
      return 0;
    }
    if (*gen) {
      const csl::Task task = csl::task_from_name(g_task);
      const csl::SyntheticData syn =
          csl::generate_synthetic(task, g_k, g_d, g_n, g_eps, g_R,
                                  g_balance == "uniform" ? csl::Balance::Uniform : csl::Balance::Random, g_noise, g_seed);
      csl::write_csv(g_out, syn.data);
      if (!g_truth.empty())
        csl::save_hypothesis({task == csl::Task::GMM ? csl::Family::GaussianPlain : csl::Family::DiracWeighted,
                              syn.truth, g_eps, g_R},
                             g_truth);
      return 0;
    }
    if (*ph) {
      csl::ExperimentConfig cfg = csl::ExperimentConfig::from_config(csl::Config::load(p_config));
      cfg.seed = p_seed;
      if (p_threads > 0) cfg.threads = p_threads;
      if (!p_out.empty()) cfg.out_csv = p_out;
      if (!p_times.empty()) cfg.out_times = p_times;
      if (cfg.out_csv.empty()) throw std::invalid_argument("no output path: pass --out or set out_csv");
      const csl::PhaseResult res = csl::phase_diagram(cfg);
      write_text(cfg.out_csv, csl::phase_csv(cfg, res));
      if (!cfg.out_times.empty()) write_text(cfg.out_times, csl::phase_times_csv(res));
      std::cout << "slope=" << csl::format_double(res.fit.slope) << " r2=" << csl::format_double(res.fit.r2)
                << " missing=" << res.fit.missing << "\n";
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const csl::CorruptionError& e) {
    std::cerr << "error: corrupt file: " << e.what() << "\n";
    return 3;
  } catch (const csl::FormatError& e) {
    std::cerr << "error: unsupported format: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
