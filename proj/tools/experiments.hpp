#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gtvmin/datagen.hpp"
#include "gtvmin/io.hpp"

// Experiment harness: structured configs, shipped presets and the
// generate -> mask -> solve -> metric pipeline behind the `experiment`
// subcommand. One CSV row per sweep value; mean and standard deviation over
// the seed list, one column pair per series value.

namespace gtvmin::experiments {

struct SweepSpec {
  std::string param;  // lambda | epsilon | sigma | rho | p_out
  std::vector<double> values;
};

// Clustered Gaussian stations standing in for the weather-station data:
// station features are drawn from a per-station Gaussian (cluster mean plus
// jitter), labels from a cluster-constant linear model, and the empirical
// graph is built by thresholding pairwise Wasserstein distances of the
// per-station sample statistics.
struct StationSpec {
  int clusters = 3;
  int stations_per_cluster = 12;
  int samples_per_station = 9;
  double mean_separation = 6.0;
  double mean_jitter = 0.3;
  double label_noise = 1.0;
  double eta = 5.0;  // Wasserstein threshold
  std::uint64_t data_seed = 7;
  double validation_ratio = 0.3;
};

struct ExperimentConfig {
  std::string name;
  bool station_model = false;  // synthetic-fmi generation path
  StationSpec stations;
  TopologySpec topology;
  LabelModelSpec labels;
  double rho = 1.0;
  std::string penalty = "norm2";
  double lambda = 1.0;
  int iters = 1000;
  std::optional<double> gap_tol;
  std::vector<std::uint64_t> seeds;
  std::string metric = "mse";  // mse | val_err | spread
  SweepSpec sweep;
  std::optional<SweepSpec> series;
};

// One (sweep value, series value, seed) instance solved to a metric value.
double run_point(const ExperimentConfig& config, double sweep_value,
                 std::optional<double> series_value, std::uint64_t seed);

CsvTable run_experiment(const ExperimentConfig& config);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);
ExperimentConfig config_from_json(const std::string& text);

TopologySpec topology_from_json(const std::string& text);
LabelModelSpec labels_from_json(const std::string& text);

// Stage-separated seed streams (graph, labels, mask, split) derived from one
// experiment seed via splitmix64.
std::uint64_t stage_seed(std::uint64_t seed, int stage);

}  // namespace gtvmin::experiments
