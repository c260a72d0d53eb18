#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgraph/graph.hpp"
#include "hgraph/graph_tree.hpp"
#include "hgraph/partition.hpp"

namespace hgraph {

struct BenchConfig {
  std::vector<std::size_t> sizes{5000, 10000};
  std::vector<double> degrees{3, 12};
  std::vector<HierarchySpec> hierarchies{{4, 3}};
  std::size_t snc_queries = 40;     // sibling pairs sampled per tree
  std::size_t min_answer = 1;       // smallest SuperEdge eligible for SNC timing
  double gnc_fraction = 0.25;       // fraction of nodes timed for GNC
  std::size_t warmup = 1;
  std::size_t repetitions = 5;
  std::uint64_t seed = 42;
  std::size_t max_nodes = 200000;
  std::size_t max_edges = 4000000;
  bool baseline = true;
  double min_batch_seconds = 2e-4;  // calls are batched until a sample lasts this long

  void validate() const;
};

// `key = value` lines, `#` comments, comma-separated lists, hierarchies as
// `KxLEVELS`. Unknown keys are errors.
BenchConfig parse_bench_config(std::istream& in);
BenchConfig load_bench_config(const std::filesystem::path& path);

struct Measurement {
  std::string operation;  // SNC, GNC, baseline-SNC, baseline-GNC
  std::size_t nodes = 0;
  std::size_t edges = 0;
  double degree = 0;
  std::uint32_t k = 0;
  std::uint32_t levels = 0;
  std::uint32_t height = 0;
  std::string query;
  std::size_t answer_size = 0;
  double median_seconds = 0;  // per call
  std::size_t resident_edges = 0;
  std::size_t resident_bytes = 0;
  std::string status = "ok";
};

extern const char* const kBenchCsvHeader;
void write_csv(std::ostream& out, const std::vector<Measurement>& rows);

// Whole graph in one hash adjacency; nodes carry their leaf path as a label.
// Queries are answered by scanning labels, without any hierarchy.
class BaselineAdjacency {
 public:
  BaselineAdjacency(const Graph& g, const PartitionAssignment& a);

  // Edges between nodes whose paths start with `a` and with `b`.
  std::vector<EdgeRef> snc(const LeafPath& a, const LeafPath& b) const;
  // Edges from v to nodes with a different leaf path.
  std::vector<EdgeRef> gnc(NodeId v) const;

  std::size_t resident_edges() const { return edges_; }
  std::size_t resident_bytes() const;

 private:
  std::unordered_map<NodeId, std::vector<Neighbor>> adjacency_;
  std::unordered_map<NodeId, std::string> labels_;
  std::size_t edges_ = 0;
};

// Path components from the root down to record `i` (empty for the root).
LeafPath record_path(const GraphTree& t, RecordIndex i);

// Graph-tree footprint: SuperEdge edges plus open-node entries.
std::size_t tree_resident_bytes(const GraphTree& t);

struct SuiteOptions {
  std::filesystem::path work_dir;  // trees are built below this directory
  std::ostream* log = nullptr;
  // Called once per built tree, before its queries are timed.
  std::function<void(const Graph&, const PartitionAssignment&, const GraphTree&)> inspect;
};

std::vector<Measurement> run_suite(const BenchConfig& cfg, const SuiteOptions& opts);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  std::size_t points = 0;
};

// Least squares y = slope x + intercept. Throws std::invalid_argument with
// fewer than `min_distinct` distinct x values.
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y,
                     std::size_t min_distinct = 5);
// Fit in log-log space; all values must be positive.
LinearFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                        std::size_t min_distinct = 5);

struct ScalingReport {
  std::optional<LinearFit> snc_vs_f;        // log-log, one point per tree
  std::optional<LinearFit> snc_pairs_vs_f;  // log-log, one point per timed pair
  std::optional<LinearFit> gnc_vs_h;        // linear
  std::vector<std::string> notes;
};

// SNC uses successful rows with a nonempty answer. Per tree (nodes, degree,
// k, levels), f is the mean answer size and the time the mean per-call
// median over its sampled pairs. GNC uses successful GNC rows.
ScalingReport fit_scaling(const std::vector<Measurement>& rows);
std::string format_report(const ScalingReport& report);

}  // namespace hgraph
