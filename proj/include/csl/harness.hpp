#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csl/binary_io.hpp"
#include "csl/config.hpp"
#include "csl/decoder.hpp"
#include "csl/mixture.hpp"
#include "csl/risk.hpp"

namespace csl {

// Kernel scale rules: a fixed s, or s^2 = 2, s^2 = d, s^2 = d / log(ek).
enum class SPolicy { Fixed, S2Two, S2D, S2DLog };
const char* s_policy_name(SPolicy p);
SPolicy s_policy_from_name(const std::string& name);
double s_from_policy(SPolicy p, double s_fixed, int d, int k);

// Uniform: equal weights. Random: half uniform plus half a flat Dirichlet draw,
// so that every weight stays above 1/(2k).
enum class Balance { Uniform, Random };

struct SyntheticData {
  Eigen::MatrixXd data;  // n x d
  Eigen::VectorXi labels;
  Hypothesis truth;
};

// Ground truth: k centroids in the metric ball of radius R, pairwise at
// metric distance >= 2 eps, found by rejection. Clustering data are centroids
// plus isotropic noise of standard deviation `noise`; GMM data are exact draws
// from N(c_l, L L^T). Throws DomainError after 1000 failed packings.
SyntheticData generate_synthetic(Task task, int k, int d, int n, double eps, double R,
                                 Balance balance, double noise, std::uint64_t seed,
                                 const Eigen::MatrixXd& sigma_chol = Eigen::MatrixXd());

struct ExperimentConfig {
  Task task = Task::KMeans;
  std::vector<int> k_grid{3};
  std::vector<int> d_grid{2};
  std::vector<int> m_grid;          // absolute sketch sizes
  std::vector<double> m_per_kd;     // or sketch sizes as multiples of k*d (rounded up)
  int n = 10000;
  SPolicy s_policy = SPolicy::Fixed;
  double s = 1.0;
  double eps = 0.0;       // 0: the theory separation for (family, s, k)
  double R = 0.0;         // 0: r_factor * eps
  double r_factor = 7.0;
  double noise = 0.0;
  Balance balance = Balance::Uniform;
  int trials = 20;
  double tolerance = 0.1;  // success iff matched error <= tolerance * eps
  std::uint64_t seed = 1;
  bool baseline = true;
  int threads = 1;        // cells run concurrently
  DecodeConfig decoder;   // k, eps and R are filled per cell
  std::string out_csv;
  std::string out_times;

  void validate() const;
  std::vector<int> sketch_sizes(int k, int d) const;
  static ExperimentConfig from_config(const Config& c);
  // Canonical key = value text; parsing it back gives the same config.
  std::string to_text() const;
};

struct CellSpec {
  Task task = Task::KMeans;
  int k = 3, d = 2, m = 60, n = 10000;
  double s = 1.0, eps = 1.0, R = 1.0, noise = 0.0;
  Balance balance = Balance::Uniform;
  double tolerance = 0.1;
  bool baseline = true;
  std::uint64_t seed = 1;
  DecodeConfig decoder;
};

// Cell for grid point (k, d, m) and trial index, seeds derived from cfg.seed.
CellSpec make_cell(const ExperimentConfig& cfg, int k, int d, int m, int trial);

struct StageTimes {
  double generate = 0.0, frequencies = 0.0, sketch = 0.0, decode = 0.0, eval = 0.0,
         baseline = 0.0;
};

struct PipelineResult {
  bool success = false;
  bool converged = false;
  double centroid_error = 0.0;  // Hungarian-matched max metric error
  double weight_error = 0.0;
  double decoded_risk = 0.0;    // k-means / k-medians risk or GMM mean NLL
  double baseline_risk = 0.0;   // NaN when the baseline is disabled
  Hypothesis truth, decoded, baseline_fit;
  Digest freq_hash{};
  StageTimes times;
};

// frequencies -> sketch -> decode -> eval, plus Lloyd or EM on the same data.
PipelineResult run_pipeline(const CellSpec& cell);

struct PhaseRow {
  int k = 0, d = 0, m = 0, trials = 0, successes = 0;
  double success_rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};

struct PhaseTiming {
  int k = 0, d = 0, m = 0, trial = 0;
  StageTimes times;
};

struct TransitionFit {
  std::vector<int> kd;
  std::vector<double> m_star;  // first m with success rate >= 0.5
  std::vector<int> inversions; // per (k, d) column
  int missing = 0;             // (k, d) pairs with no transition in the grid
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

struct PhaseResult {
  std::vector<PhaseRow> rows;
  std::vector<PhaseTiming> timings;
  TransitionFit fit;
};

PhaseResult phase_diagram(const ExperimentConfig& cfg);
TransitionFit fit_transition(const std::vector<PhaseRow>& rows);

// '#' metadata rows, a header, then k,d,kd,m,trials,successes,success_rate.
std::string phase_csv(const ExperimentConfig& cfg, const PhaseResult& res);
std::string phase_times_csv(const PhaseResult& res);

}  // namespace csl
