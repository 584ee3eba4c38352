#include "gtvmin/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gtvmin {

namespace {

constexpr double kWeightCap = 1e9;

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  Eigen::VectorXd vals = eig.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) vals[i] = std::sqrt(std::max(0.0, vals[i]));
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

GeneratedGraph gen_graph(const TopologySpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::tuple<int, int, double>> edges;
  switch (spec.kind) {
    case TopologyKind::sbm: {
      if (spec.cluster_sizes.empty()) throw std::invalid_argument("sbm needs cluster sizes");
      if (spec.p_in < 0.0 || spec.p_in > 1.0 || spec.p_out < 0.0 || spec.p_out > 1.0)
        throw std::invalid_argument("edge probabilities must lie in [0,1]");
      int n = 0;
      std::vector<int> assignment;
      for (size_t c = 0; c < spec.cluster_sizes.size(); ++c) {
        if (spec.cluster_sizes[c] < 1) throw std::invalid_argument("cluster sizes must be >= 1");
        for (int k = 0; k < spec.cluster_sizes[c]; ++k) assignment.push_back(static_cast<int>(c));
        n += spec.cluster_sizes[c];
      }
      // One Bernoulli draw per unordered pair, in lexicographic order.
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double p = (assignment[i] == assignment[j]) ? spec.p_in : spec.p_out;
          if (rng.bernoulli(p)) edges.emplace_back(i + 1, j + 1, 1.0);
        }
      }
      return {EmpiricalGraph(n, edges),
              Partition(std::move(assignment), static_cast<int>(spec.cluster_sizes.size()))};
    }
    case TopologyKind::chain: {
      const int half = spec.chain_cluster_size;
      if (half < 1) throw std::invalid_argument("chain cluster size must be >= 1");
      if (spec.inter_weight < 0.0) throw std::invalid_argument("inter-cluster weight must be >= 0");
      const int n = 2 * half;
      for (int i = 1; i < n; ++i) {
        if (i == half) {
          if (spec.inter_weight > 0.0) edges.emplace_back(i, i + 1, spec.inter_weight);
        } else {
          edges.emplace_back(i, i + 1, 1.0);
        }
      }
      std::vector<int> assignment(n, 0);
      for (int i = half; i < n; ++i) assignment[i] = 1;
      return {EmpiricalGraph(n, edges), Partition(std::move(assignment), 2)};
    }
    case TopologyKind::star: {
      if (spec.leaves < 1) throw std::invalid_argument("star needs at least one leaf");
      const int n = spec.leaves + 1;
      for (int leaf = 2; leaf <= n; ++leaf) edges.emplace_back(1, leaf, 1.0);
      return {EmpiricalGraph(n, edges), Partition(std::vector<int>(n, 0), 1)};
    }
  }
  throw std::invalid_argument("unknown topology kind");
}

GeneratedLabels gen_labels(const Partition& partition, const LabelModelSpec& spec,
                           std::uint64_t seed) {
  if (spec.dim < 1) throw std::invalid_argument("dimension must be positive");
  if (spec.samples_per_node < 1) throw std::invalid_argument("samples per node must be >= 1");
  if (spec.sigma < 0.0) throw std::invalid_argument("noise level must be nonnegative");
  Rng rng(seed);
  const int n = partition.node_count();
  const int d = spec.dim;

  // Ground truth first (clusters, then nodes), then per node the feature
  // rows followed by the label noise. This order is part of the seed
  // contract for reproducibility.
  NodeField truth(d, n);
  switch (spec.scheme) {
    case GroundTruthScheme::cluster_bernoulli: {
      std::vector<Eigen::VectorXd> per_cluster(partition.cluster_count());
      for (int c = 0; c < partition.cluster_count(); ++c) {
        per_cluster[c].resize(d);
        for (int j = 0; j < d; ++j) per_cluster[c][j] = rng.bernoulli(0.5) ? 0.5 : 0.0;
      }
      for (int i = 0; i < n; ++i) truth.values.col(i) = per_cluster[partition.cluster_of(i)];
      break;
    }
    case GroundTruthScheme::cluster_fixed: {
      if (static_cast<int>(spec.cluster_vectors.size()) != partition.cluster_count())
        throw std::invalid_argument("one fixed vector per cluster required");
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd& v = spec.cluster_vectors[partition.cluster_of(i)];
        if (v.size() != d) throw std::invalid_argument("cluster vector dimension mismatch");
        truth.values.col(i) = v;
      }
      break;
    }
    case GroundTruthScheme::per_node_gaussian: {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) truth.values(j, i) = rng.normal();
      }
      break;
    }
  }

  std::vector<LocalDataset> datasets(n);
  for (int i = 0; i < n; ++i) {
    const int m = spec.samples_per_node;
    Eigen::MatrixXd X(m, d);
    Eigen::VectorXd y(m);
    for (int r = 0; r < m; ++r) {
      for (int j = 0; j < d; ++j) X(r, j) = rng.normal();
      y[r] = X.row(r).dot(truth.values.col(i)) + spec.sigma * rng.normal();
    }
    datasets[i] = {std::move(X), std::move(y)};
  }
  return {std::move(datasets), std::move(truth)};
}

std::vector<LocalLoss> squared_losses(const std::vector<LocalDataset>& datasets) {
  std::vector<LocalLoss> losses;
  losses.reserve(datasets.size());
  for (const auto& data : datasets) losses.push_back(LocalLoss::squared(data));
  return losses;
}

std::vector<LocalLoss> apply_sampling_mask(const std::vector<LocalLoss>& losses,
                                           const std::vector<int>& sampled) {
  std::vector<char> keep(losses.size(), 0);
  for (int i : sampled) {
    if (i < 0 || i >= static_cast<int>(losses.size()))
      throw std::invalid_argument("sampled node out of range");
    keep[i] = 1;
  }
  std::vector<LocalLoss> out;
  out.reserve(losses.size());
  for (size_t i = 0; i < losses.size(); ++i) {
    if (keep[i]) {
      out.push_back(losses[i]);
    } else {
      out.push_back(LocalLoss::trivial(losses[i].dim()));
    }
  }
  return out;
}

std::vector<int> sample_nodes(int n, double rho, Rng& rng) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("rho must lie in [0,1]");
  const int count = static_cast<int>(std::ceil(rho * n));
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  rng.shuffle(ids);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

double gaussian_wasserstein(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                            const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2) {
  if (mu1.size() != mu2.size() || sigma1.rows() != mu1.size() || sigma2.rows() != mu2.size())
    throw std::invalid_argument("dimension mismatch");
  const double scale1 = std::max(1.0, sigma1.cwiseAbs().maxCoeff());
  const double scale2 = std::max(1.0, sigma2.cwiseAbs().maxCoeff());
  if ((sigma1 - sigma1.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale1 ||
      (sigma2 - sigma2.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale2)
    throw std::invalid_argument("covariance matrices must be symmetric");

  const Eigen::MatrixXd root1 = symmetric_sqrt(sigma1);
  Eigen::MatrixXd inner = root1 * sigma2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  double cross = 0.0;
  for (int i = 0; i < eig.eigenvalues().size(); ++i)
    cross += std::sqrt(std::max(0.0, eig.eigenvalues()[i]));

  const double w = (mu1 - mu2).squaredNorm() + sigma1.trace() + sigma2.trace() - 2.0 * cross;
  return std::max(0.0, w);
}

EmpiricalGraph build_threshold_graph(const std::vector<GaussianStats>& stats, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("threshold must be positive");
  const int n = static_cast<int>(stats.size());
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = gaussian_wasserstein(stats[i].mu, stats[i].sigma, stats[j].mu,
                                            stats[j].sigma);
      if (w <= eta) {
        const double weight = (w > 1.0 / kWeightCap) ? 1.0 / w : kWeightCap;
        edges.emplace_back(i + 1, j + 1, weight);
      }
    }
  }
  return EmpiricalGraph(n, edges);
}

GaussianStats sample_stats(const Eigen::MatrixXd& rows) {
  const int m = static_cast<int>(rows.rows());
  if (m < 1) throw std::invalid_argument("need at least one sample");
  GaussianStats s;
  s.mu = rows.colwise().mean();
  Eigen::MatrixXd centered = rows.rowwise() - s.mu.transpose();
  s.sigma = centered.transpose() * centered / static_cast<double>(m);
  return s;
}

double mse(const NodeField& w_hat, const NodeField& w_true) {
  if (w_hat.dim() != w_true.dim() || w_hat.count() != w_true.count())
    throw std::invalid_argument("node field shape mismatch");
  return (w_hat.values - w_true.values).squaredNorm() / w_hat.count();
}

double validation_error(const NodeField& w_hat, const std::vector<LocalDataset>& validation) {
  if (static_cast<int>(validation.size()) != w_hat.count())
    throw std::invalid_argument("one validation set per node required");
  double total = 0.0;
  for (int i = 0; i < w_hat.count(); ++i) {
    const auto& data = validation[i];
    if (data.sample_count() == 0)
      throw std::invalid_argument("empty validation set at node " + std::to_string(i + 1));
    const Eigen::VectorXd residual = data.X * w_hat.values.col(i) - data.y;
    total += residual.squaredNorm() / data.sample_count();
  }
  return total / w_hat.count();
}

TrainValSplit split_train_validation(const std::vector<LocalDataset>& datasets, Rng& rng,
                                     double validation_ratio) {
  if (validation_ratio <= 0.0 || validation_ratio >= 1.0)
    throw std::invalid_argument("validation ratio must lie in (0,1)");
  TrainValSplit out;
  out.train.reserve(datasets.size());
  out.validation.reserve(datasets.size());
  for (const auto& data : datasets) {
    const int m = data.sample_count();
    if (m < 2) throw std::invalid_argument("need at least two samples per node to split");
    int val_m = static_cast<int>(std::lround(validation_ratio * m));
    val_m = std::max(1, std::min(m - 1, val_m));
    std::vector<int> idx(m);
    for (int r = 0; r < m; ++r) idx[r] = r;
    rng.shuffle(idx);
    LocalDataset val{Eigen::MatrixXd(val_m, data.dim()), Eigen::VectorXd(val_m)};
    LocalDataset train{Eigen::MatrixXd(m - val_m, data.dim()), Eigen::VectorXd(m - val_m)};
    for (int r = 0; r < val_m; ++r) {
      val.X.row(r) = data.X.row(idx[r]);
      val.y[r] = data.y[idx[r]];
    }
    for (int r = val_m; r < m; ++r) {
      train.X.row(r - val_m) = data.X.row(idx[r]);
      train.y[r - val_m] = data.y[idx[r]];
    }
    out.train.push_back(std::move(train));
    out.validation.push_back(std::move(val));
  }
  return out;
}

}  // namespace gtvmin
