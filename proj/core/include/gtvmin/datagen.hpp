#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gtvmin/analysis.hpp"
#include "gtvmin/graph.hpp"
#include "gtvmin/losses.hpp"
#include "gtvmin/rng.hpp"

// Synthetic experiment generators (SBM, chain, star topologies; noisy linear
// labels; sampling masks), Gaussian Wasserstein graph construction and the
// evaluation metrics.

namespace gtvmin {

enum class TopologyKind { sbm, chain, star };

struct TopologySpec {
  TopologyKind kind = TopologyKind::chain;
  // sbm
  std::vector<int> cluster_sizes;
  double p_in = 0.5;
  double p_out = 0.01;
  // chain: two clusters of `chain_cluster_size` nodes each; the single
  // inter-cluster edge has weight `inter_weight` and is omitted when 0.
  int chain_cluster_size = 50;
  double inter_weight = 0.0;
  // star: node 1 is the centre
  int leaves = 49;
};

enum class GroundTruthScheme {
  cluster_bernoulli,  // per-cluster vectors with iid entries in {0, 0.5}
  cluster_fixed,      // fixed per-cluster vectors
  per_node_gaussian,  // iid standard normal vector per node
};

struct LabelModelSpec {
  int dim = 2;
  double sigma = 0.0;  // label noise level
  int samples_per_node = 5;
  GroundTruthScheme scheme = GroundTruthScheme::cluster_fixed;
  std::vector<Eigen::VectorXd> cluster_vectors;  // cluster_fixed only
};

struct GeneratedGraph {
  EmpiricalGraph graph;
  Partition partition;
};

struct GeneratedLabels {
  std::vector<LocalDataset> datasets;
  NodeField ground_truth;
};

GeneratedGraph gen_graph(const TopologySpec& spec, std::uint64_t seed);

GeneratedLabels gen_labels(const Partition& partition, const LabelModelSpec& spec,
                           std::uint64_t seed);

std::vector<LocalLoss> squared_losses(const std::vector<LocalDataset>& datasets);

// Nodes outside `sampled` (0-based) are replaced by the trivial loss.
std::vector<LocalLoss> apply_sampling_mask(const std::vector<LocalLoss>& losses,
                                           const std::vector<int>& sampled);

// ceil(rho * n) nodes drawn uniformly without replacement.
std::vector<int> sample_nodes(int n, double rho, Rng& rng);

// Squared 2-Wasserstein distance between Gaussians:
// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2).
// Matrix square roots via symmetric eigendecomposition, negative eigenvalues
// clamped at zero (tolerance 1e-12). Rejects non-symmetric inputs.
double gaussian_wasserstein(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                            const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2);

struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

// Edge {i,i'} iff W_{i,i'} <= eta, weight 1/W capped at 1e9 (identical
// stations have W = 0).
EmpiricalGraph build_threshold_graph(const std::vector<GaussianStats>& stats, double eta);

GaussianStats sample_stats(const Eigen::MatrixXd& rows);

// (1/n) sum_i ||w_hat^(i) - w_true^(i)||_2^2
double mse(const NodeField& w_hat, const NodeField& w_true);

// Node-average of the per-node mean squared prediction error.
double validation_error(const NodeField& w_hat, const std::vector<LocalDataset>& validation);

struct TrainValSplit {
  std::vector<LocalDataset> train;
  std::vector<LocalDataset> validation;
};

// Seeded shuffle split; validation fraction fixed at 0.3 (at least one
// sample on each side).
TrainValSplit split_train_validation(const std::vector<LocalDataset>& datasets, Rng& rng,
                                     double validation_ratio = 0.3);

}  // namespace gtvmin
