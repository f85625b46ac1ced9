#include "csl/mixture.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace csl {

Hypothesis Hypothesis::uniform(Eigen::MatrixXd centroids) {
  const auto k = centroids.rows();
  if (k < 1) throw std::invalid_argument("hypothesis needs k >= 1");
  Hypothesis h;
  h.alphas = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  h.centroids = std::move(centroids);
  return h;
}

Hypothesis Hypothesis::weighted(Eigen::MatrixXd centroids, Eigen::VectorXd alphas, double tol) {
  if (centroids.rows() < 1) throw std::invalid_argument("hypothesis needs k >= 1");
  if (alphas.size() != centroids.rows()) {
    throw std::invalid_argument("alphas and centroids disagree on k");
  }
  if (!alphas.allFinite() || (alphas.array() < 0.0).any()) {
    throw std::invalid_argument("alphas must be finite and nonnegative");
  }
  const double total = alphas.sum();
  if (std::abs(total - 1.0) > tol) {
    throw std::invalid_argument("alphas must sum to 1");
  }
  Hypothesis h;
  h.centroids = std::move(centroids);
  h.alphas = alphas / total;
  return h;
}

void Hypothesis::validate() const {
  if (k() < 1) throw std::invalid_argument("hypothesis needs k >= 1");
  if (alphas.size() != k()) throw std::invalid_argument("alphas and centroids disagree on k");
  if (!centroids.allFinite()) throw std::invalid_argument("centroids must be finite");
  if ((alphas.array() < 0.0).any() || std::abs(alphas.sum() - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("alphas must lie on the simplex");
  }
}

SignedMeasure merge_duplicates(const SignedMeasure& mu) {
  std::vector<int> keep;
  std::vector<double> w;
  for (int i = 0; i < mu.size(); ++i) {
    bool merged = false;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      if (mu.locations.row(keep[j]) == mu.locations.row(i)) {
        w[j] += mu.weights(i);
        merged = true;
        break;
      }
    }
    if (!merged) {
      keep.push_back(i);
      w.push_back(mu.weights(i));
    }
  }
  SignedMeasure out;
  int count = 0;
  for (double x : w) count += (x != 0.0);
  out.locations.resize(count, mu.locations.cols());
  out.weights.resize(count);
  int r = 0;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (w[j] == 0.0) continue;
    out.locations.row(r) = mu.locations.row(keep[j]);
    out.weights(r) = w[j];
    ++r;
  }
  return out;
}

}  // namespace csl
