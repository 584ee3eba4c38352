#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gtvmin/analysis.hpp"
#include "gtvmin/graph.hpp"
#include "gtvmin/losses.hpp"
#include "gtvmin/penalties.hpp"
#include "gtvmin/solver.hpp"

// File formats. All node ids are 1-based on disk.
//
//   graph JSON:     {"n": <int>, "edges": [{"i":..,"j":..,"weight":..}, ...]}
//   dataset JSON:   {"d": <int>, "nodes": [{"id":..,"X":[[..]],"y":[..]}, ...]}
//                   nodes absent from the file carry the trivial loss
//   partition JSON: {"clusters": [[node ids...], ...]}
//   trace CSV:      iter,objective,gtv,gap   (gap empty when unavailable)
//   weights CSV:    node_id,w_1,...,w_d
//
// Numbers in CSV output are printed with 17 significant digits, the header
// row is always present.

namespace gtvmin {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string graph_to_json(const EmpiricalGraph& g);
EmpiricalGraph graph_from_json(const std::string& text);
EmpiricalGraph load_graph(const std::string& path);
void save_graph(const EmpiricalGraph& g, const std::string& path);

enum class DatasetLossKind { squared, logistic, ridge, lasso };

std::string datasets_to_json(const std::vector<LocalDataset>& datasets, int dim);
// Returns one loss per node in 1..n; nodes missing from the file get the
// trivial loss. `n` may exceed the largest id in the file.
std::vector<LocalLoss> losses_from_json(const std::string& text, int n,
                                        DatasetLossKind kind = DatasetLossKind::squared,
                                        double eta = 0.0);
std::vector<LocalLoss> load_losses(const std::string& path, int n,
                                   DatasetLossKind kind = DatasetLossKind::squared,
                                   double eta = 0.0);
void save_datasets(const std::vector<LocalDataset>& datasets, int dim, const std::string& path);

Partition partition_from_json(const std::string& text, int n);
Partition load_partition(const std::string& path, int n);
std::string partition_to_json(const Partition& p);

// `norm2` | `norm1` | `quadratic` | `quadratic_q:<matrix-file>` where the
// matrix file holds one whitespace-separated row per line.
GtvPenalty penalty_from_token(const std::string& token);

std::string certificates_to_json(const std::vector<ClusterCertificate>& certs,
                                 const std::vector<ClusterReport>* reports = nullptr);

// Generic CSV table with canonical formatting: known key columns (iter,
// param, node_id) come first, remaining columns keep their given order;
// every value rendered with 17 significant digits.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;
};

std::string format_value(double v);  // %.17g
std::string csv_to_string(const CsvTable& table);
CsvTable csv_from_string(const std::string& text);
void save_csv(const CsvTable& table, const std::string& path);
CsvTable load_csv(const std::string& path);

// Re-emits a CSV with canonical column order and number formatting.
std::string normalize_csv(const std::string& text);

CsvTable trace_to_csv(const std::vector<TraceRecord>& trace);
CsvTable weights_to_csv(const NodeField& w);
NodeField weights_from_csv(const CsvTable& table);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gtvmin
