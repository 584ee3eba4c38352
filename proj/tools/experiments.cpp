#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gtvmin/solver.hpp"

namespace gtvmin::experiments {

using nlohmann::json;

std::uint64_t stage_seed(std::uint64_t seed, int stage) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(stage + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

struct Instance {
  EmpiricalGraph graph;
  std::vector<LocalLoss> losses;
  NodeField truth;
  std::vector<LocalDataset> validation;  // station model only
};

double max_pairwise_spread(const NodeField& w) {
  double spread = 0.0;
  for (int a = 0; a < w.count(); ++a) {
    for (int b = a + 1; b < w.count(); ++b) {
      spread = std::max(spread, (w.values.col(a) - w.values.col(b)).norm());
    }
  }
  return spread;
}

Instance build_synthetic_instance(const ExperimentConfig& c, std::uint64_t seed) {
  GeneratedGraph gen = gen_graph(c.topology, stage_seed(seed, 0));
  GeneratedLabels labels = gen_labels(gen.partition, c.labels, stage_seed(seed, 1));
  std::vector<LocalLoss> losses = squared_losses(labels.datasets);
  if (c.rho < 1.0) {
    Rng mask_rng(stage_seed(seed, 2));
    losses = apply_sampling_mask(losses, sample_nodes(gen.graph.node_count(), c.rho, mask_rng));
  }
  return {std::move(gen.graph), std::move(losses), std::move(labels.ground_truth), {}};
}

Instance build_station_instance(const ExperimentConfig& c, std::uint64_t split_seed) {
  const StationSpec& s = c.stations;
  Rng rng(s.data_seed);
  const int d = 2;
  const int n = s.clusters * s.stations_per_cluster;

  // Cluster means on a circle of radius mean_separation; fixed per-cluster
  // linear models.
  std::vector<Eigen::VectorXd> cluster_mu(s.clusters);
  std::vector<Eigen::VectorXd> cluster_w(s.clusters);
  for (int cidx = 0; cidx < s.clusters; ++cidx) {
    const double angle = 6.283185307179586 * cidx / s.clusters;
    cluster_mu[cidx] = Eigen::VectorXd(d);
    cluster_mu[cidx] << s.mean_separation * std::cos(angle), s.mean_separation * std::sin(angle);
    cluster_w[cidx] = Eigen::VectorXd(d);
    cluster_w[cidx] << std::cos(angle) + 0.5, std::sin(angle) - 0.5;
  }

  NodeField truth(d, n);
  std::vector<LocalDataset> datasets(n);
  std::vector<GaussianStats> stats(n);
  for (int i = 0; i < n; ++i) {
    const int cidx = i / s.stations_per_cluster;
    Eigen::VectorXd mu = cluster_mu[cidx];
    for (int j = 0; j < d; ++j) mu[j] += s.mean_jitter * rng.normal();
    truth.values.col(i) = cluster_w[cidx];
    Eigen::MatrixXd X(s.samples_per_station, d);
    Eigen::VectorXd y(s.samples_per_station);
    for (int r = 0; r < s.samples_per_station; ++r) {
      for (int j = 0; j < d; ++j) X(r, j) = mu[j] + rng.normal();
      y[r] = X.row(r).dot(cluster_w[cidx]) + s.label_noise * rng.normal();
    }
    stats[i] = sample_stats(X);
    datasets[i] = {std::move(X), std::move(y)};
  }

  EmpiricalGraph graph = build_threshold_graph(stats, s.eta);

  Rng split_rng(stage_seed(split_seed, 3));
  TrainValSplit split = split_train_validation(datasets, split_rng, s.validation_ratio);
  return {std::move(graph), squared_losses(split.train), std::move(truth),
          std::move(split.validation)};
}

void apply_param(ExperimentConfig& c, const std::string& name, double value) {
  if (name == "lambda") {
    c.lambda = value;
  } else if (name == "epsilon") {
    c.topology.inter_weight = value;
  } else if (name == "sigma") {
    c.labels.sigma = value;
  } else if (name == "rho") {
    c.rho = value;
  } else if (name == "p_out") {
    c.topology.p_out = value;
  } else {
    throw std::invalid_argument("unknown experiment parameter '" + name + "'");
  }
}

std::string series_label(const std::string& param, double value) {
  std::ostringstream out;
  out << param << value;
  std::string label = out.str();
  std::replace(label.begin(), label.end(), ',', '_');
  return label;
}

}  // namespace

double run_point(const ExperimentConfig& base, double sweep_value,
                 std::optional<double> series_value, std::uint64_t seed) {
  ExperimentConfig c = base;
  apply_param(c, c.sweep.param, sweep_value);
  if (series_value) apply_param(c, c.series->param, *series_value);

  Instance inst =
      c.station_model ? build_station_instance(c, seed) : build_synthetic_instance(c, seed);

  SolverConfig solver;
  solver.lambda = c.lambda;
  solver.penalty = penalty_from_token(c.penalty);
  solver.max_iters = c.iters;
  solver.gap_tol = c.gap_tol;
  SolveResult result = solve(inst.graph, inst.losses, solver);
  if (result.stop_reason == StopReason::non_finite)
    throw std::runtime_error("non-finite iterates at " + c.sweep.param + "=" +
                             format_value(sweep_value) + " seed " + std::to_string(seed));

  if (c.metric == "mse") return mse(result.w, inst.truth);
  if (c.metric == "spread") return max_pairwise_spread(result.w);
  if (c.metric == "val_err") return validation_error(result.w, inst.validation);
  throw std::invalid_argument("unknown metric '" + c.metric + "'");
}

CsvTable run_experiment(const ExperimentConfig& config) {
  if (config.sweep.values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (config.seeds.empty()) throw std::invalid_argument("need at least one seed");
  if (config.iters < 1) throw std::invalid_argument("iteration budget must be >= 1");
  if (config.series && config.series->values.empty())
    throw std::invalid_argument("series needs at least one value");

  std::vector<std::optional<double>> series_values{std::nullopt};
  if (config.series) {
    series_values.clear();
    for (double v : config.series->values) series_values.push_back(v);
  }

  const std::string prefix = (config.metric == "val_err") ? "val_err"
                             : (config.metric == "spread") ? "spread"
                                                           : "mse";
  CsvTable table;
  table.columns.push_back("param");
  for (const auto& sv : series_values) {
    const std::string suffix =
        sv ? "_" + series_label(config.series->param, *sv) : std::string();
    table.columns.push_back(prefix + "_mean" + suffix);
    table.columns.push_back(prefix + "_std" + suffix);
  }

  for (double sweep_value : config.sweep.values) {
    std::vector<std::optional<double>> row;
    row.push_back(sweep_value);
    for (const auto& sv : series_values) {
      std::vector<double> metrics;
      metrics.reserve(config.seeds.size());
      for (std::uint64_t seed : config.seeds) {
        metrics.push_back(run_point(config, sweep_value, sv, seed));
      }
      double mean = 0.0;
      for (double m : metrics) mean += m;
      mean /= metrics.size();
      double var = 0.0;
      for (double m : metrics) var += (m - mean) * (m - mean);
      var /= metrics.size();
      row.push_back(mean);
      row.push_back(std::sqrt(var));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<std::string> preset_names() {
  return {"sbm-table1", "chain-noiseless", "chain-noisy", "star-consensus", "synthetic-fmi"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "sbm-table1") {
    c.topology.kind = TopologyKind::sbm;
    c.topology.cluster_sizes = {100, 100};
    c.topology.p_in = 0.5;
    c.topology.p_out = 1e-2;
    c.labels.dim = 100;
    c.labels.sigma = 1e-3;
    c.labels.samples_per_node = 10;
    c.labels.scheme = GroundTruthScheme::cluster_bernoulli;
    c.rho = 1.0;
    c.iters = 1000;
    c.seeds = {1, 2, 3};
    c.sweep = {"lambda", {1e-2}};
    return c;
  }
  if (name == "chain-noiseless" || name == "chain-noisy") {
    c.topology.kind = TopologyKind::chain;
    c.topology.chain_cluster_size = 50;
    c.labels.dim = 2;
    c.labels.samples_per_node = 5;
    c.labels.scheme = GroundTruthScheme::cluster_fixed;
    c.labels.cluster_vectors = {Eigen::Vector2d(2.0, 2.0), Eigen::Vector2d(-2.0, 2.0)};
    c.lambda = 0.1;
    c.iters = 2000;
    c.seeds = {1, 2, 3, 4, 5};
    c.sweep = {"epsilon", {0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0}};
    if (name == "chain-noiseless") {
      c.labels.sigma = 0.0;
      c.series = SweepSpec{"rho", {0.2, 0.4, 0.6}};
    } else {
      c.rho = 0.6;
      c.series = SweepSpec{"sigma", {1e-2, 1e-1, 1.0}};
    }
    return c;
  }
  if (name == "star-consensus") {
    c.topology.kind = TopologyKind::star;
    c.topology.leaves = 49;
    c.labels.dim = 1;
    c.labels.sigma = 0.1;
    c.labels.samples_per_node = 5;
    c.labels.scheme = GroundTruthScheme::per_node_gaussian;
    c.iters = 1000;
    // Realizations whose consensus-critical lambda lies below 5, so the
    // largest sweep point sits in the fully fused regime.
    c.seeds = {84, 137, 158};
    c.metric = "spread";
    c.sweep = {"lambda", {0.0, 0.4, 0.5, 5.0}};
    return c;
  }
  if (name == "synthetic-fmi") {
    c.station_model = true;
    c.iters = 1000;
    c.seeds = {1, 2, 3, 4, 5};  // split seeds; station data fixed by data_seed
    c.metric = "val_err";
    c.sweep = {"lambda", {0.0, 0.5}};
    return c;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

TopologySpec topology_from_json(const std::string& text) {
  json doc = json::parse(text);
  TopologySpec spec;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "sbm") {
    spec.kind = TopologyKind::sbm;
    spec.cluster_sizes = doc.at("cluster_sizes").get<std::vector<int>>();
    spec.p_in = doc.value("p_in", 0.5);
    spec.p_out = doc.value("p_out", 0.01);
  } else if (kind == "chain") {
    spec.kind = TopologyKind::chain;
    spec.chain_cluster_size = doc.at("cluster_size").get<int>();
    spec.inter_weight = doc.value("inter_weight", 0.0);
  } else if (kind == "star") {
    spec.kind = TopologyKind::star;
    spec.leaves = doc.at("leaves").get<int>();
  } else {
    throw std::invalid_argument("unknown topology kind '" + kind + "'");
  }
  return spec;
}

LabelModelSpec labels_from_json(const std::string& text) {
  json doc = json::parse(text);
  LabelModelSpec spec;
  spec.dim = doc.at("d").get<int>();
  spec.sigma = doc.value("sigma", 0.0);
  spec.samples_per_node = doc.value("m", 5);
  const std::string scheme = doc.value("scheme", std::string("cluster_fixed"));
  if (scheme == "cluster_bernoulli") {
    spec.scheme = GroundTruthScheme::cluster_bernoulli;
  } else if (scheme == "cluster_fixed") {
    spec.scheme = GroundTruthScheme::cluster_fixed;
    for (const auto& vj : doc.at("vectors")) {
      Eigen::VectorXd v(vj.size());
      for (size_t j = 0; j < vj.size(); ++j) v[static_cast<int>(j)] = vj[j].get<double>();
      spec.cluster_vectors.push_back(std::move(v));
    }
  } else if (scheme == "per_node_gaussian") {
    spec.scheme = GroundTruthScheme::per_node_gaussian;
  } else {
    throw std::invalid_argument("unknown ground-truth scheme '" + scheme + "'");
  }
  return spec;
}

ExperimentConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("experiment config parse error: ") + e.what());
  }
  ExperimentConfig c;
  c.name = doc.value("name", std::string("custom"));
  if (doc.contains("stations")) {
    c.station_model = true;
    const auto& sj = doc["stations"];
    c.stations.clusters = sj.value("clusters", 3);
    c.stations.stations_per_cluster = sj.value("stations_per_cluster", 12);
    c.stations.samples_per_station = sj.value("m", 9);
    c.stations.mean_separation = sj.value("mean_separation", 6.0);
    c.stations.mean_jitter = sj.value("mean_jitter", 0.3);
    c.stations.label_noise = sj.value("label_noise", 1.0);
    c.stations.eta = sj.value("eta", 5.0);
    c.stations.data_seed = sj.value("data_seed", 7);
    c.stations.validation_ratio = sj.value("validation_ratio", 0.3);
  } else {
    c.topology = topology_from_json(doc.at("topology").dump());
    c.labels = labels_from_json(doc.at("labels").dump());
  }
  c.rho = doc.value("rho", 1.0);
  c.penalty = doc.value("penalty", std::string("norm2"));
  c.lambda = doc.value("lambda", 1.0);
  c.iters = doc.value("iters", 1000);
  if (doc.contains("gap_tol")) c.gap_tol = doc["gap_tol"].get<double>();
  c.seeds = doc.value("seeds", std::vector<std::uint64_t>{1});
  c.metric = doc.value("metric", std::string("mse"));
  if (doc.contains("sweep")) {
    c.sweep.param = doc["sweep"].at("param").get<std::string>();
    c.sweep.values = doc["sweep"].at("values").get<std::vector<double>>();
  } else {
    c.sweep = {"lambda", {c.lambda}};
  }
  if (doc.contains("series")) {
    SweepSpec s;
    s.param = doc["series"].at("param").get<std::string>();
    s.values = doc["series"].at("values").get<std::vector<double>>();
    c.series = std::move(s);
  }
  return c;
}

}  // namespace gtvmin::experiments
