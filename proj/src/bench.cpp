#include "hgraph/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <new>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "hgraph/errors.hpp"

namespace hgraph {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line) {
  T value{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ParseError("bad number '" + text + "'", line);
  }
  return value;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

volatile std::size_t g_sink = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

// Median per-call time. Each sample batches calls until it lasts at least
// min_batch_seconds; `calls_per_round` is how many operations one fn() covers.
template <typename Fn>
double time_per_call(const BenchConfig& cfg, std::size_t calls_per_round, Fn&& fn) {
  auto sample = [&] {
    std::size_t rounds = 0;
    auto t0 = std::chrono::steady_clock::now();
    double elapsed = 0;
    do {
      g_sink = g_sink + fn();
      ++rounds;
      elapsed = seconds_since(t0);
    } while (elapsed < cfg.min_batch_seconds);
    return elapsed / static_cast<double>(rounds * std::max<std::size_t>(calls_per_round, 1));
  };
  for (std::size_t i = 0; i < cfg.warmup; ++i) sample();
  std::vector<double> samples;
  for (std::size_t i = 0; i < cfg.repetitions; ++i) samples.push_back(sample());
  return median(samples);
}

bool has_prefix(const std::string& label, const std::string& prefix) {
  if (prefix.empty()) return true;
  if (label.size() < prefix.size() || label.compare(0, prefix.size(), prefix) != 0) return false;
  return label.size() == prefix.size() || label[prefix.size()] == '/';
}

}  // namespace

void BenchConfig::validate() const {
  if (sizes.empty() || degrees.empty() || hierarchies.empty()) {
    throw std::invalid_argument("bench config needs sizes, degrees and hierarchies");
  }
  for (const auto& h : hierarchies) h.validate();
  if (repetitions < 5) throw std::invalid_argument("repetitions must be at least 5");
  if (!(gnc_fraction > 0 && gnc_fraction <= 1)) throw std::invalid_argument("gnc_fraction must be in (0, 1]");
  if (!(min_batch_seconds >= 0)) throw std::invalid_argument("min_batch_seconds must be non-negative");
}

BenchConfig parse_bench_config(std::istream& in) {
  BenchConfig cfg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    std::string text = trim(raw.substr(0, hash));
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line);
    const std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
      value = value.substr(1, value.size() - 2);
    }
    if (key == "sizes") {
      cfg.sizes.clear();
      for (const auto& s : split_list(value)) cfg.sizes.push_back(parse_number<std::size_t>(s, line));
    } else if (key == "degrees") {
      cfg.degrees.clear();
      for (const auto& s : split_list(value)) cfg.degrees.push_back(parse_number<double>(s, line));
    } else if (key == "hierarchies") {
      cfg.hierarchies.clear();
      for (const auto& s : split_list(value)) {
        auto x = s.find('x');
        if (x == std::string::npos) throw ParseError("hierarchy must look like 4x3, got '" + s + "'", line);
        cfg.hierarchies.push_back({parse_number<std::uint32_t>(s.substr(0, x), line),
                                   parse_number<std::uint32_t>(s.substr(x + 1), line)});
      }
    } else if (key == "snc_queries") {
      cfg.snc_queries = parse_number<std::size_t>(value, line);
    } else if (key == "min_answer") {
      cfg.min_answer = parse_number<std::size_t>(value, line);
    } else if (key == "gnc_fraction") {
      cfg.gnc_fraction = parse_number<double>(value, line);
    } else if (key == "warmup") {
      cfg.warmup = parse_number<std::size_t>(value, line);
    } else if (key == "repetitions") {
      cfg.repetitions = parse_number<std::size_t>(value, line);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, line);
    } else if (key == "max_nodes") {
      cfg.max_nodes = parse_number<std::size_t>(value, line);
    } else if (key == "max_edges") {
      cfg.max_edges = parse_number<std::size_t>(value, line);
    } else if (key == "min_batch_seconds") {
      cfg.min_batch_seconds = parse_number<double>(value, line);
    } else if (key == "baseline") {
      if (value == "true" || value == "1") cfg.baseline = true;
      else if (value == "false" || value == "0") cfg.baseline = false;
      else throw ParseError("baseline must be true or false", line);
    } else {
      throw ParseError("unknown key '" + key + "'", line);
    }
  }
  cfg.validate();
  return cfg;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StorageError("cannot open bench config " + path.string());
  return parse_bench_config(in);
}

const char* const kBenchCsvHeader =
    "operation,nodes,edges,degree,k,levels,height,query,answer_size,median_seconds,resident_edges,"
    "resident_bytes,status";

void write_csv(std::ostream& out, const std::vector<Measurement>& rows) {
  out << kBenchCsvHeader << '\n';
  char secs[32];
  for (const auto& m : rows) {
    std::snprintf(secs, sizeof secs, "%.6e", m.median_seconds);
    out << m.operation << ',' << m.nodes << ',' << m.edges << ',' << format_weight(m.degree) << ','
        << m.k << ',' << m.levels << ',' << m.height << ',' << m.query << ',' << m.answer_size << ','
        << secs << ',' << m.resident_edges << ',' << m.resident_bytes << ',' << m.status << '\n';
  }
}

BaselineAdjacency::BaselineAdjacency(const Graph& g, const PartitionAssignment& a) {
  if (a.node_count() != g.node_count()) throw AssignmentError("assignment does not match graph");
  adjacency_.reserve(g.node_count());
  labels_.reserve(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto nb = g.neighbors(v);
    adjacency_.emplace(v, std::vector<Neighbor>(nb.begin(), nb.end()));
    labels_.emplace(v, format_path(a.path(v)));
  }
  edges_ = g.edge_count();
}

std::vector<EdgeRef> BaselineAdjacency::snc(const LeafPath& a, const LeafPath& b) const {
  const std::string pa = format_path(a);
  const std::string pb = format_path(b);
  std::vector<EdgeRef> out;
  for (const auto& [v, label] : labels_) {
    if (!has_prefix(label, pa)) continue;
    for (const auto& nb : adjacency_.at(v)) {
      if (has_prefix(labels_.at(nb.node), pb)) out.push_back(make_edge(v, nb.node, nb.w));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EdgeRef> BaselineAdjacency::gnc(NodeId v) const {
  const auto& own = labels_.at(v);
  std::vector<EdgeRef> out;
  for (const auto& nb : adjacency_.at(v)) {
    if (labels_.at(nb.node) != own) out.push_back(make_edge(v, nb.node, nb.w));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t BaselineAdjacency::resident_bytes() const {
  // Node-based hash map: bucket array plus one heap node per entry.
  constexpr std::size_t kNodeOverhead = 2 * sizeof(void*);
  std::size_t bytes = (adjacency_.bucket_count() + labels_.bucket_count()) * sizeof(void*);
  for (const auto& [v, list] : adjacency_) {
    bytes += kNodeOverhead + sizeof(v) + sizeof(list) + list.capacity() * sizeof(Neighbor);
  }
  for (const auto& [v, label] : labels_) {
    bytes += kNodeOverhead + sizeof(v) + sizeof(label) + (label.capacity() > 15 ? label.capacity() : 0);
  }
  return bytes;
}

LeafPath record_path(const GraphTree& t, RecordIndex i) {
  LeafPath path;
  const TreeRecord* r = &t.record(i);
  while (r->parent) {
    path.push_back(r->path_component);
    r = &t.record(*r->parent);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::size_t tree_resident_bytes(const GraphTree& t) {
  return t.stats().resident_edges * sizeof(EdgeRef) + t.stats().open_node_entries * sizeof(NodeId);
}

std::vector<Measurement> run_suite(const BenchConfig& cfg, const SuiteOptions& opts) {
  cfg.validate();
  std::vector<Measurement> rows;
  auto log = [&](const std::string& msg) {
    if (opts.log) *opts.log << msg << std::endl;
  };
  const auto work = opts.work_dir.empty() ? std::filesystem::temp_directory_path() / "hgraph-bench"
                                          : opts.work_dir;

  for (std::size_t n : cfg.sizes) {
    for (double d : cfg.degrees) {
      const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n) * d / 2));
      Measurement proto;
      proto.nodes = n;
      proto.edges = m;
      proto.degree = d;
      if (n > cfg.max_nodes || m > cfg.max_edges) {
        for (const auto& h : cfg.hierarchies) {
          Measurement row = proto;
          row.operation = "SNC";
          row.k = h.k;
          row.levels = h.levels;
          row.status = "skipped: exceeds desk-scale cap";
          rows.push_back(row);
        }
        log("skip n=" + std::to_string(n) + " d=" + format_weight(d) + ": above cap");
        continue;
      }
      const std::uint64_t gseed = splitmix(cfg.seed ^ splitmix(n) ^ splitmix(static_cast<std::uint64_t>(d * 1000)));
      Graph g = generate_synthetic(n, d, gseed);

      for (const auto& spec : cfg.hierarchies) {
        Measurement base = proto;
        base.k = spec.k;
        base.levels = spec.levels;
        auto assignment = partition_recursive(g, spec, gseed);
        const auto dir = work / ("g" + std::to_string(n) + "_d" + format_weight(d) + "_" +
                                 std::to_string(spec.k) + "x" + std::to_string(spec.levels));
        std::filesystem::remove_all(dir);
        GraphTree tree = GraphTree::build(g, assignment, dir);
        base.height = tree.stats().h;
        log("tree n=" + std::to_string(n) + " d=" + format_weight(d) + " " + std::to_string(spec.k) + "x" +
            std::to_string(spec.levels) + " h=" + std::to_string(base.height) +
            " r=" + format_weight(tree.stats().r));
        if (opts.inspect) opts.inspect(g, assignment, tree);

        std::optional<BaselineAdjacency> baseline;
        std::string baseline_status = "ok";
        if (cfg.baseline) {
          try {
            baseline.emplace(g, assignment);
          } catch (const std::bad_alloc&) {
            baseline_status = "failed: out of memory";
          }
        }

        // Sibling pairs: their answer is a stored SuperEdge, so f is the
        // answer size.
        std::vector<std::pair<RecordIndex, RecordIndex>> pairs;
        for (const auto& r : tree.records()) {
          for (const auto& se : r.super_edges) {
            if (se.size() >= cfg.min_answer) pairs.emplace_back(se.a(), se.b());
          }
        }
        std::mt19937_64 rng(gseed ^ 0x5eedull);
        std::shuffle(pairs.begin(), pairs.end(), rng);
        if (pairs.size() > cfg.snc_queries) pairs.resize(cfg.snc_queries);
        std::sort(pairs.begin(), pairs.end());

        for (const auto& [a, b] : pairs) {
          Measurement row = base;
          row.operation = "SNC";
          row.query = tree.record(a).id + "|" + tree.record(b).id;
          auto answer = tree.snc(a, b);
          row.answer_size = answer.size();
          row.median_seconds = time_per_call(cfg, 1, [&] { return tree.snc(a, b).size(); });
          row.resident_edges = tree.stats().resident_edges;
          row.resident_bytes = tree_resident_bytes(tree);
          if (baseline) {
            Measurement brow = base;
            brow.operation = "baseline-SNC";
            brow.query = row.query;
            const auto pa = record_path(tree, a);
            const auto pb = record_path(tree, b);
            auto expect = baseline->snc(pa, pb);
            brow.answer_size = expect.size();
            brow.median_seconds = time_per_call(cfg, 1, [&] { return baseline->snc(pa, pb).size(); });
            brow.resident_edges = baseline->resident_edges();
            brow.resident_bytes = baseline->resident_bytes();
            if (expect != answer) row.status = brow.status = "mismatch";
            rows.push_back(row);
            rows.push_back(brow);
          } else {
            rows.push_back(row);
            if (cfg.baseline) {
              Measurement brow = base;
              brow.operation = "baseline-SNC";
              brow.query = row.query;
              brow.status = baseline_status;
              rows.push_back(brow);
            }
          }
        }

        // Uniform node sample without replacement, ascending.
        std::vector<NodeId> nodes(n);
        std::iota(nodes.begin(), nodes.end(), 0);
        std::shuffle(nodes.begin(), nodes.end(), rng);
        const auto count = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(cfg.gnc_fraction * static_cast<double>(n))));
        nodes.resize(std::min(count, nodes.size()));
        std::sort(nodes.begin(), nodes.end());

        Measurement row = base;
        row.operation = "GNC";
        row.query = std::to_string(nodes.size()) + " nodes";
        row.resident_edges = tree.stats().resident_edges;
        row.resident_bytes = tree_resident_bytes(tree);
        bool gnc_ok = true;
        for (NodeId v : nodes) {
          auto answer = tree.gnc(v);
          row.answer_size += answer.size();
          if (baseline && baseline->gnc(v) != answer) gnc_ok = false;
        }
        auto sweep = [&](auto&& one) {
          return [&, one] {
            std::size_t total = 0;
            for (NodeId v : nodes) total += one(v);
            return total;
          };
        };
        row.median_seconds =
            time_per_call(cfg, nodes.size(), sweep([&](NodeId v) { return tree.gnc(v).size(); }));
        if (!gnc_ok) row.status = "mismatch";
        rows.push_back(row);
        if (cfg.baseline) {
          Measurement brow = base;
          brow.operation = "baseline-GNC";
          brow.query = row.query;
          brow.status = baseline ? row.status : baseline_status;
          if (baseline) {
            brow.answer_size = row.answer_size;
            brow.median_seconds =
                time_per_call(cfg, nodes.size(), sweep([&](NodeId v) { return baseline->gnc(v).size(); }));
            brow.resident_edges = baseline->resident_edges();
            brow.resident_bytes = baseline->resident_bytes();
          }
          rows.push_back(brow);
        }
        std::filesystem::remove_all(dir);
      }
    }
  }
  return rows;
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y, std::size_t min_distinct) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  std::vector<double> distinct = x;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < min_distinct || distinct.size() < 2) {
    throw std::invalid_argument("need at least " + std::to_string(std::max<std::size_t>(min_distinct, 2)) +
                                " distinct x values, got " + std::to_string(distinct.size()));
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  // A flat series is fitted perfectly by a flat line.
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

LinearFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, std::size_t min_distinct) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) throw std::invalid_argument("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_linear(lx, ly, min_distinct);
}

ScalingReport fit_scaling(const std::vector<Measurement>& rows) {
  ScalingReport rep;
  std::vector<double> px, py, hx, hy;
  struct Sum {
    double f = 0, t = 0;
    std::size_t n = 0;
  };
  std::map<std::tuple<std::size_t, double, std::uint32_t, std::uint32_t>, Sum> per_tree;
  for (const auto& m : rows) {
    if (m.status != "ok") continue;
    if (m.operation == "SNC" && m.answer_size > 0 && m.median_seconds > 0) {
      px.push_back(static_cast<double>(m.answer_size));
      py.push_back(m.median_seconds);
      auto& s = per_tree[{m.nodes, m.degree, m.k, m.levels}];
      s.f += static_cast<double>(m.answer_size);
      s.t += m.median_seconds;
      ++s.n;
    } else if (m.operation == "GNC") {
      hx.push_back(m.height);
      hy.push_back(m.median_seconds);
    }
  }
  std::vector<double> fx, fy;
  for (const auto& [key, s] : per_tree) {
    fx.push_back(s.f / static_cast<double>(s.n));
    fy.push_back(s.t / static_cast<double>(s.n));
  }
  try {
    rep.snc_vs_f = fit_power_law(fx, fy);
  } catch (const std::invalid_argument& e) {
    rep.notes.push_back(std::string("SNC fit: ") + e.what());
  }
  try {
    rep.snc_pairs_vs_f = fit_power_law(px, py);
  } catch (const std::invalid_argument& e) {
    rep.notes.push_back(std::string("SNC per-pair fit: ") + e.what());
  }
  try {
    rep.gnc_vs_h = fit_linear(hx, hy);
  } catch (const std::invalid_argument& e) {
    rep.notes.push_back(std::string("GNC fit: ") + e.what());
  }
  return rep;
}

std::string format_report(const ScalingReport& report) {
  std::ostringstream out;
  char buf[160];
  if (report.snc_vs_f) {
    std::snprintf(buf, sizeof buf, "snc_slope_vs_f %.4f r2 %.4f points %zu\n", report.snc_vs_f->slope,
                  report.snc_vs_f->r2, report.snc_vs_f->points);
    out << buf;
  }
  if (report.snc_pairs_vs_f) {
    std::snprintf(buf, sizeof buf, "snc_pair_slope_vs_f %.4f r2 %.4f points %zu\n", report.snc_pairs_vs_f->slope,
                  report.snc_pairs_vs_f->r2, report.snc_pairs_vs_f->points);
    out << buf;
  }
  if (report.gnc_vs_h) {
    std::snprintf(buf, sizeof buf, "gnc_seconds_per_level %.4e r2 %.4f points %zu\n", report.gnc_vs_h->slope,
                  report.gnc_vs_h->r2, report.gnc_vs_h->points);
    out << buf;
  }
  for (const auto& n : report.notes) out << "note: " << n << '\n';
  return out.str();
}

}  // namespace hgraph
