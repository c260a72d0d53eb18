// hgraph: build, query, summarize, benchmark and serve graph trees.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hgraph/bench.hpp"
#include "hgraph/ceps.hpp"
#include "hgraph/errors.hpp"
#include "hgraph/graph.hpp"
#include "hgraph/graph_tree.hpp"
#include "hgraph/partition.hpp"
#include "hgraph/service.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kNested = 2, kNotFound = 3, kStorage = 4, kAmbiguous = 5 };

hgraph::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct BuildArgs {
  std::string input, assignment, out;
  std::uint32_t k = 4, levels = 3;
  std::uint64_t seed = 1;
};

int run_build(const BuildArgs& a) {
  auto loaded = hgraph::load_edge_list_file(a.input);
  if (loaded.dropped_self_loops) std::cerr << "warning: dropped " << loaded.dropped_self_loops << " self-loops\n";
  if (loaded.merged_duplicates) std::cerr << "warning: merged " << loaded.merged_duplicates << " duplicate edges\n";
  const auto& g = loaded.graph;
  hgraph::PartitionAssignment assignment;
  if (!a.assignment.empty()) {
    assignment = hgraph::load_assignment_file(a.assignment, g.node_count());
  } else {
    hgraph::HierarchySpec spec{a.k, a.levels};
    spec.validate();
    assignment = hgraph::partition_recursive(g, spec, a.seed);
  }
  auto tree = hgraph::GraphTree::build(g, assignment, a.out);
  tree.save(a.out);
  const auto manifest = nlohmann::json::parse(tree.manifest_text(a.out));
  const auto& s = tree.stats();
  std::cout << "nodes\t" << tree.node_count() << "\nedges\t" << tree.edge_count() << "\nrecords\t" << s.tn
            << "\nleaves\t" << s.lsn << "\nheight\t" << s.h << "\nk\t" << s.k << "\nexternal_ratio\t"
            << hgraph::format_weight(s.r) << "\nresident_edges\t" << s.resident_edges << "\nchecksum\t"
            << manifest["checksum"].get<std::string>() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical graph storage with connectivity queries and center-piece summaries"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* cmd_build = app.add_subcommand("build", "Partition a graph and write its tree");
  cmd_build->add_option("--input", build.input, "Edge list (u<TAB>v[<TAB>w])")->required()->check(CLI::ExistingFile);
  auto* opt_assign =
      cmd_build->add_option("--assignment", build.assignment, "node<TAB>path assignment file")->check(CLI::ExistingFile);
  auto* opt_k = cmd_build->add_option("--k", build.k, "Children per supernode")->capture_default_str();
  auto* opt_levels = cmd_build->add_option("--levels", build.levels, "Tree levels, root included")->capture_default_str();
  cmd_build->add_option("--out", build.out, "Output directory")->required();
  cmd_build->add_option("--seed", build.seed, "Partitioner seed")->capture_default_str();
  opt_assign->excludes(opt_k)->excludes(opt_levels);

  std::string tree_dir, a_id, b_id, node, leaf_id, config, csv_out, work_dir, host = "127.0.0.1";
  std::vector<std::string> query_nodes;
  hgraph::CepsParams params;
  std::size_t budget = 0;
  int port = 8080;
  bool cors = false;
  unsigned time_budget_ms = 10000;

  auto* cmd_snc = app.add_subcommand("snc", "Edges between two supernodes, as TSV");
  cmd_snc->add_option("--tree", tree_dir, "Tree directory")->required();
  cmd_snc->add_option("--a", a_id, "First supernode id")->required();
  cmd_snc->add_option("--b", b_id, "Second supernode id")->required();

  auto* cmd_gnc = app.add_subcommand("gnc", "External edges of a node, as TSV");
  cmd_gnc->add_option("--tree", tree_dir, "Tree directory")->required();
  cmd_gnc->add_option("--node", node, "Node id or label")->required();

  auto* cmd_ceps = app.add_subcommand("ceps", "Center-piece subgraph of a leaf, as JSON");
  cmd_ceps->add_option("--tree", tree_dir, "Tree directory")->required();
  cmd_ceps->add_option("--leaf", leaf_id, "Leaf id")->required();
  cmd_ceps->add_option("--nodes", query_nodes, "Query node ids or labels, comma separated")
      ->required()
      ->delimiter(',');
  cmd_ceps->add_option("--budget", budget, "Maximum output nodes, queries included")->required();
  cmd_ceps->add_option("--len", params.max_path_len, "Maximum key path length in nodes")->capture_default_str();
  cmd_ceps->add_option("--c", params.c, "Fly-out probability")->capture_default_str();
  cmd_ceps->add_option("--tol", params.tol, "Convergence tolerance (L1)")->capture_default_str();
  cmd_ceps->add_option("--max-iter", params.max_iter, "Power iteration cap")->capture_default_str();

  auto* cmd_bench = app.add_subcommand("bench", "Run the timing suite");
  cmd_bench->add_option("--config", config, "key = value config file")->required()->check(CLI::ExistingFile);
  cmd_bench->add_option("--out", csv_out, "CSV output path")->required();
  cmd_bench->add_option("--work-dir", work_dir, "Scratch directory for trees");

  auto* cmd_serve = app.add_subcommand("serve", "Serve a tree over HTTP");
  cmd_serve->add_option("--tree", tree_dir, "Tree directory")->required();
  cmd_serve->add_option("--port", port, "Port, 0 for any")->capture_default_str();
  cmd_serve->add_option("--host", host, "Bind address")->capture_default_str();
  cmd_serve->add_flag("--cors", cors, "Allow cross-origin requests");
  cmd_serve->add_option("--ceps-time-budget-ms", time_budget_ms, "Deadline for CEPS requests")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*cmd_build) return run_build(build);
    if (*cmd_snc) {
      auto tree = hgraph::GraphTree::open(tree_dir);
      std::cout << hgraph::format_edges_tsv(tree.snc(a_id, b_id));
      return kOk;
    }
    if (*cmd_gnc) {
      auto tree = hgraph::GraphTree::open(tree_dir);
      std::cout << hgraph::format_edges_tsv(tree.gnc(hgraph::resolve_node(tree, node)));
      return kOk;
    }
    if (*cmd_ceps) {
      auto tree = hgraph::GraphTree::open(tree_dir);
      auto leaf = tree.load_leaf(leaf_id);
      std::vector<hgraph::NodeId> queries;
      for (const auto& ref : query_nodes) {
        const auto g = hgraph::resolve_node(tree, ref);
        auto local = leaf->local_id(g);
        if (!local) throw std::invalid_argument("query node " + std::to_string(g) + " is not in leaf " + leaf_id);
        queries.push_back(*local);
      }
      params.budget = budget;
      auto cp = hgraph::center_piece(leaf->graph, queries, params);
      std::cout << hgraph::center_piece_json(cp, *leaf, tree).dump(2) << '\n';
      return kOk;
    }
    if (*cmd_bench) {
      auto cfg = hgraph::load_bench_config(config);
      hgraph::SuiteOptions opts;
      opts.work_dir = work_dir;
      opts.log = &std::cerr;
      auto rows = hgraph::run_suite(cfg, opts);
      std::ofstream out(csv_out);
      if (!out) throw hgraph::StorageError("cannot write " + csv_out);
      hgraph::write_csv(out, rows);
      std::cout << hgraph::format_report(hgraph::fit_scaling(rows));
      return kOk;
    }
    if (*cmd_serve) {
      auto tree = hgraph::GraphTree::open(tree_dir);
      hgraph::ServiceOptions opts;
      opts.cors = cors;
      opts.ceps_defaults.time_budget = std::chrono::milliseconds(time_budget_ms);
      hgraph::Service service(tree, opts);
      hgraph::HttpServer server(service);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << host << ":" << bound << std::endl;
      server.listen();
      g_server = nullptr;
      return kOk;
    }
  } catch (const hgraph::NestedSuperNodes& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNested;
  } catch (const hgraph::NotFound& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNotFound;
  } catch (const hgraph::AmbiguousLabel& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAmbiguous;
  } catch (const hgraph::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStorage;
  } catch (const hgraph::StorageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStorage;
  } catch (const hgraph::AssignmentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStorage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStorage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
