#include "gtvmin/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gtvmin {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string graph_to_json(const EmpiricalGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) {
    edges.push_back({{"i", e.head + 1}, {"j", e.tail + 1}, {"weight", e.weight}});
  }
  json doc{{"n", g.node_count()}, {"edges", std::move(edges)}};
  return doc.dump(2) + "\n";
}

EmpiricalGraph graph_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("graph JSON parse error: ") + e.what());
  }
  if (!doc.contains("n") || !doc.contains("edges"))
    throw IoError("graph JSON needs fields 'n' and 'edges'");
  std::vector<std::tuple<int, int, double>> edges;
  for (const auto& e : doc["edges"]) {
    edges.emplace_back(e.at("i").get<int>(), e.at("j").get<int>(), e.at("weight").get<double>());
  }
  return EmpiricalGraph(doc["n"].get<int>(), edges);
}

EmpiricalGraph load_graph(const std::string& path) { return graph_from_json(read_file(path)); }

void save_graph(const EmpiricalGraph& g, const std::string& path) {
  write_file(path, graph_to_json(g));
}

std::string datasets_to_json(const std::vector<LocalDataset>& datasets, int dim) {
  json nodes = json::array();
  for (size_t i = 0; i < datasets.size(); ++i) {
    const auto& data = datasets[i];
    if (data.sample_count() == 0) continue;
    json X = json::array();
    for (int r = 0; r < data.sample_count(); ++r) {
      json row = json::array();
      for (int j = 0; j < data.dim(); ++j) row.push_back(data.X(r, j));
      X.push_back(std::move(row));
    }
    json y = json::array();
    for (int r = 0; r < data.sample_count(); ++r) y.push_back(data.y[r]);
    nodes.push_back({{"id", static_cast<int>(i) + 1}, {"X", std::move(X)}, {"y", std::move(y)}});
  }
  json doc{{"d", dim}, {"nodes", std::move(nodes)}};
  return doc.dump(2) + "\n";
}

std::vector<LocalLoss> losses_from_json(const std::string& text, int n, DatasetLossKind kind,
                                        double eta) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset JSON parse error: ") + e.what());
  }
  if (!doc.contains("d")) throw IoError("dataset JSON needs field 'd'");
  const int d = doc["d"].get<int>();
  if (d < 1) throw IoError("dataset dimension must be positive");

  std::vector<LocalLoss> losses(static_cast<size_t>(n), LocalLoss::trivial(d));
  if (!doc.contains("nodes")) return losses;
  for (const auto& node : doc["nodes"]) {
    const int id = node.at("id").get<int>();
    if (id < 1 || id > n) throw IoError("dataset node id " + std::to_string(id) + " out of range");
    const auto& Xj = node.at("X");
    const auto& yj = node.at("y");
    const int m = static_cast<int>(Xj.size());
    if (static_cast<int>(yj.size()) != m) throw IoError("X/y length mismatch at node " + std::to_string(id));
    LocalDataset data{Eigen::MatrixXd(m, d), Eigen::VectorXd(m)};
    for (int r = 0; r < m; ++r) {
      if (static_cast<int>(Xj[r].size()) != d)
        throw IoError("feature row width mismatch at node " + std::to_string(id));
      for (int j = 0; j < d; ++j) data.X(r, j) = Xj[r][j].get<double>();
      data.y[r] = yj[r].get<double>();
    }
    switch (kind) {
      case DatasetLossKind::squared:
        losses[id - 1] = LocalLoss::squared(std::move(data));
        break;
      case DatasetLossKind::logistic:
        losses[id - 1] = LocalLoss::logistic(std::move(data));
        break;
      case DatasetLossKind::ridge:
        losses[id - 1] = LocalLoss::ridge(std::move(data), eta);
        break;
      case DatasetLossKind::lasso:
        losses[id - 1] = LocalLoss::lasso(std::move(data), eta);
        break;
    }
  }
  return losses;
}

std::vector<LocalLoss> load_losses(const std::string& path, int n, DatasetLossKind kind,
                                   double eta) {
  return losses_from_json(read_file(path), n, kind, eta);
}

void save_datasets(const std::vector<LocalDataset>& datasets, int dim, const std::string& path) {
  write_file(path, datasets_to_json(datasets, dim));
}

Partition partition_from_json(const std::string& text, int n) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("partition JSON parse error: ") + e.what());
  }
  if (!doc.contains("clusters")) throw IoError("partition JSON needs field 'clusters'");
  std::vector<std::vector<int>> clusters;
  for (const auto& cj : doc["clusters"]) {
    std::vector<int> members;
    for (const auto& idj : cj) {
      const int id = idj.get<int>();
      if (id < 1 || id > n) throw IoError("partition node id " + std::to_string(id) + " out of range");
      members.push_back(id - 1);
    }
    clusters.push_back(std::move(members));
  }
  return Partition::from_clusters(n, clusters);
}

Partition load_partition(const std::string& path, int n) {
  return partition_from_json(read_file(path), n);
}

std::string partition_to_json(const Partition& p) {
  json clusters = json::array();
  for (int c = 0; c < p.cluster_count(); ++c) {
    json members = json::array();
    for (int i : p.members(c)) members.push_back(i + 1);
    clusters.push_back(std::move(members));
  }
  return json{{"clusters", std::move(clusters)}}.dump(2) + "\n";
}

GtvPenalty penalty_from_token(const std::string& token) {
  if (token == "norm2") return GtvPenalty::norm2();
  if (token == "norm1") return GtvPenalty::norm1();
  if (token == "quadratic") return GtvPenalty::quadratic();
  const std::string prefix = "quadratic_q:";
  if (token.rfind(prefix, 0) == 0) {
    const std::string path = token.substr(prefix.size());
    std::istringstream in(read_file(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::vector<double> row;
      double v;
      while (ls >> v) row.push_back(v);
      if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("empty matrix file " + path);
    const int d = static_cast<int>(rows.size());
    Eigen::MatrixXd Q(d, d);
    for (int r = 0; r < d; ++r) {
      if (static_cast<int>(rows[r].size()) != d) throw IoError("matrix file is not square");
      for (int cidx = 0; cidx < d; ++cidx) Q(r, cidx) = rows[r][cidx];
    }
    return GtvPenalty::quadratic_q(Q);
  }
  throw IoError("unknown penalty token '" + token + "'");
}

std::string certificates_to_json(const std::vector<ClusterCertificate>& certs,
                                 const std::vector<ClusterReport>* reports) {
  json arr = json::array();
  for (const auto& cert : certs) {
    json entry{{"cluster", cert.cluster + 1},
               {"well_connected", cert.well_connected},
               {"sigma_c", cert.sigma_c},
               {"boundary", cert.boundary}};
    if (cert.hub) entry["hub"] = *cert.hub + 1;
    entry["lipschitz"] = cert.lipschitz;
    entry["eps"] = cert.eps;
    json oracle = json::array();
    for (int j = 0; j < cert.oracle.size(); ++j) oracle.push_back(cert.oracle[j]);
    entry["oracle"] = std::move(oracle);
    if (!cert.witness.empty()) {
      json witness = json::array();
      for (int i : cert.witness) witness.push_back(i + 1);
      entry["witness"] = std::move(witness);
    }
    if (reports) {
      for (const auto& rep : *reports) {
        if (rep.cluster == cert.cluster) {
          entry["spread"] = rep.spread;
          entry["deviation"] = rep.deviation;
          entry["bound"] = rep.bound;
          entry["bound_holds"] = rep.bound_holds;
        }
      }
    }
    arr.push_back(std::move(entry));
  }
  return json{{"clusters", std::move(arr)}}.dump(2) + "\n";
}

namespace {

int column_priority(const std::string& name) {
  if (name == "iter" || name == "param" || name == "node_id") return 0;
  return 1;
}

}  // namespace

std::string csv_to_string(const CsvTable& table) {
  // Canonical order: key columns first, the rest in given order.
  std::vector<size_t> order(table.columns.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return column_priority(table.columns[a]) < column_priority(table.columns[b]);
  });

  std::ostringstream out;
  for (size_t k = 0; k < order.size(); ++k) {
    if (k) out << ',';
    out << table.columns[order[k]];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw IoError("csv row width mismatch");
    for (size_t k = 0; k < order.size(); ++k) {
      if (k) out << ',';
      if (row[order[k]]) out << format_value(*row[order[k]]);
    }
    out << '\n';
  }
  return out.str();
}

CsvTable csv_from_string(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.columns.push_back(cell);
  if (table.columns.empty()) throw IoError("csv header has no columns");

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    size_t start = 0;
    for (size_t k = 0; k < table.columns.size(); ++k) {
      const size_t end = (k + 1 < table.columns.size()) ? line.find(',', start) : line.size();
      if (end == std::string::npos) throw IoError("csv row has too few cells");
      const std::string field = line.substr(start, end - start);
      if (field.empty()) {
        row.push_back(std::nullopt);
      } else {
        try {
          size_t pos = 0;
          const double v = std::stod(field, &pos);
          if (pos != field.size()) throw IoError("csv cell is not numeric: '" + field + "'");
          row.push_back(v);
        } catch (const std::invalid_argument&) {
          throw IoError("csv cell is not numeric: '" + field + "'");
        }
      }
      start = end + 1;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void save_csv(const CsvTable& table, const std::string& path) {
  write_file(path, csv_to_string(table));
}

CsvTable load_csv(const std::string& path) { return csv_from_string(read_file(path)); }

std::string normalize_csv(const std::string& text) {
  return csv_to_string(csv_from_string(text));
}

CsvTable trace_to_csv(const std::vector<TraceRecord>& trace) {
  CsvTable table;
  table.columns = {"iter", "objective", "gtv", "gap"};
  for (const auto& rec : trace) {
    table.rows.push_back({static_cast<double>(rec.iter), rec.objective, rec.gtv,
                          rec.gap ? std::optional<double>(*rec.gap) : std::nullopt});
  }
  return table;
}

CsvTable weights_to_csv(const NodeField& w) {
  CsvTable table;
  table.columns.push_back("node_id");
  for (int j = 1; j <= w.dim(); ++j) table.columns.push_back("w_" + std::to_string(j));
  for (int i = 0; i < w.count(); ++i) {
    std::vector<std::optional<double>> row;
    row.push_back(static_cast<double>(i + 1));
    for (int j = 0; j < w.dim(); ++j) row.push_back(w.values(j, i));
    table.rows.push_back(std::move(row));
  }
  return table;
}

NodeField weights_from_csv(const CsvTable& table) {
  if (table.columns.empty() || table.columns[0] != "node_id")
    throw IoError("weights csv must start with node_id");
  const int d = static_cast<int>(table.columns.size()) - 1;
  const int n = static_cast<int>(table.rows.size());
  NodeField w(d, n);
  for (const auto& row : table.rows) {
    if (!row[0]) throw IoError("weights csv row missing node_id");
    const int id = static_cast<int>(*row[0]);
    if (id < 1 || id > n) throw IoError("weights csv node id out of range");
    for (int j = 0; j < d; ++j) {
      if (!row[j + 1]) throw IoError("weights csv has empty cells");
      w.values(j, id - 1) = *row[j + 1];
    }
  }
  return w;
}

}  // namespace gtvmin
