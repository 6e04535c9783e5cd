#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "probflow/ftree.hpp"
#include "probflow/graph.hpp"
#include "probflow/netgen.hpp"
#include "probflow/oracle.hpp"
#include "probflow/sampler.hpp"
#include "probflow/selector.hpp"

using namespace probflow;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitLimit = 3;

const char* const kFlowNote = "note: reported flows include the weight of the query vertex";

// Where the graph comes from: files or a generator.
struct GraphSource {
  std::string edges_path;
  std::string weights_path;
  std::string coords_path;
  std::string family;
  GenSpec gen;
  std::string prob_model = "uniform";
  double world_size_m = 10000.0;
  std::size_t friends = 10;

  void add_options(CLI::App* cmd, bool generator_only = false) {
    if (!generator_only) {
      cmd->add_option("--graph", edges_path, "Edge list file `<u> <v> <p>`");
      cmd->add_option("--weights", weights_path, "Vertex weights file `<v> <w>`");
      cmd->add_option("--coords", coords_path, "Vertex coordinates file `<v> <x> <y>`");
      cmd->add_option("--family", family, "Generate instead: erdos, partitioned or wsn");
      cmd->add_option("--gen-seed", gen.seed, "Generator seed");
    }
    cmd->add_option("--n", gen.n, "Generated vertex count");
    cmd->add_option("--deg", gen.degree, "Generated degree (erdos, partitioned)");
    cmd->add_option("--eps", gen.epsilon, "Generated radius (wsn)");
    cmd->add_flag("--no-wrap", [this](std::int64_t) { gen.wrap = false; }, "Partitioned: path instead of ring");
    cmd->add_option("--prob-model", prob_model, "uniform, distance-decay or close-friends");
    cmd->add_option("--world-size-m", world_size_m, "Unit square side in meters for distance decay");
    cmd->add_option("--friends", friends, "Close friends per vertex");
  }

  ProbabilisticGraph load() const {
    if (edges_path.empty() == family.empty()) {
      throw ValidationError("give exactly one of --graph or --family");
    }
    ProbabilisticGraph g;
    if (!edges_path.empty()) {
      g = load_graph_files(edges_path, weights_path, coords_path);
    } else {
      GenSpec spec = gen;
      spec.family = parse_family(family);
      g = generate(spec);
    }
    return apply_model(std::move(g), gen.seed);
  }

  ProbabilisticGraph apply_model(ProbabilisticGraph g, std::uint64_t seed) const {
    if (prob_model == "uniform") return g;
    if (prob_model == "distance-decay") return assign_distance_decay(g, 0.001, world_size_m);
    if (prob_model == "close-friends") return assign_close_friends(g, friends, seed);
    throw ValidationError("unknown probability model '" + prob_model + "'");
  }
};

VertexId resolve_query(const ProbabilisticGraph& g, const std::string& label) {
  auto q = g.find_vertex(label);
  if (!q) throw ValidationError("query vertex '" + label + "' is not in the graph");
  return *q;
}

// Writes to the file when a path is given, otherwise to stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ValidationError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string fmt(double x) { return format_double(x); }

std::vector<EdgeId> read_selection(const ProbabilisticGraph& g, const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  return load_edge_selection(g, in);
}

struct SamplerOptions {
  std::uint64_t samples = 1000;
  double alpha = 0.01;
  std::uint64_t seed = 0;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--samples", samples, "Monte-Carlo worlds per estimate")->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", alpha, "Confidence interval significance level");
    cmd->add_option("--seed", seed, "Master seed");
  }

  SamplerConfig config() const {
    SamplerConfig c;
    c.samples = samples;
    c.alpha = alpha;
    c.master_seed = seed;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------- generate

struct GenerateCmd {
  GraphSource src;
  std::string out;

  void run() const {
    const auto g = src.load();
    if (out.empty()) {
      save_edges(g, std::cout);
      return;
    }
    auto write = [](const std::string& path, auto&& fn) {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw ValidationError("cannot write " + path);
      fn(f);
    };
    write(out + ".edges", [&](std::ostream& o) { save_edges(g, o); });
    write(out + ".weights", [&](std::ostream& o) { save_weights(g, o); });
    if (g.has_coordinates()) write(out + ".coords", [&](std::ostream& o) { save_coordinates(g, o); });
    std::cerr << "wrote " << g.vertex_count() << " vertices, " << g.edge_count() << " edges to " << out << ".*\n";
  }
};

// ----------------------------------------------------------------- maxflow

struct MaxflowCmd {
  GraphSource src;
  SamplerOptions sampler;
  std::string query = "0";
  std::string variant = "ft_m";
  std::size_t k = 10;
  double ds_c = 2.0;
  std::string out;
  std::string edges_out;
  bool timing = false;

  void run() const {
    const auto g = src.load();
    const VertexId q = resolve_query(g, query);
    StrategyConfig cfg;
    cfg.variant = parse_variant(variant);
    cfg.k = k;
    cfg.sampler = sampler.config();
    cfg.ds_c = ds_c;
    cfg.validate();
    const auto sol = select_edges(g, q, cfg);

    Output o(out);
    auto& os = o.stream();
    os << "iter,edge_u,edge_v,flow_mean,flow_lb,flow_ub,edges_sampled,probes,pruned,delayed,elapsed_ms\n";
    for (const auto& r : sol.trace) {
      const auto& e = g.edge(r.edge);
      os << r.iteration << ',' << g.label(e.u) << ',' << g.label(e.v) << ',' << fmt(r.estimate.mean) << ','
         << fmt(r.estimate.lb) << ',' << fmt(r.estimate.ub) << ',' << r.edges_sampled << ',' << r.probes << ','
         << r.pruned << ',' << r.delayed << ',' << fmt(timing ? r.elapsed_ms : 0.0) << '\n';
    }
    if (!edges_out.empty()) {
      std::ofstream f(edges_out, std::ios::binary);
      if (!f) throw ValidationError("cannot write " + edges_out);
      for (EdgeId id : sol.selected) {
        const auto& e = g.edge(id);
        f << g.label(e.u) << ' ' << g.label(e.v) << ' ' << fmt(e.probability) << '\n';
      }
    }
    const auto fin = sol.final_estimate(g, q);
    std::cerr << "selected " << sol.selected.size() << " edges, final flow " << fmt(fin.mean) << " ["
              << fmt(fin.lb) << ", " << fmt(fin.ub) << "]\n"
              << kFlowNote << '\n';
  }
};

// ---------------------------------------------------------------- evaluate

struct EvaluateCmd {
  GraphSource src;
  SamplerOptions sampler;
  std::string query = "0";
  std::string selection;
  std::string mode = "exact";
  std::string out;

  void run() const {
    const auto g = src.load();
    const VertexId q = resolve_query(g, query);
    std::vector<EdgeId> edges;
    if (selection.empty()) {
      edges.resize(g.edge_count());
      for (EdgeId e = 0; e < edges.size(); ++e) edges[e] = e;
    } else {
      edges = read_selection(g, selection);
    }
    FlowEstimate est;
    if (mode == "exact") {
      est.mean = est.lb = est.ub = oracle::exact_expected_flow(g, q, edges);
      est.exact = true;
    } else if (mode == "mc") {
      est = mc_expected_flow(g, q, edges, sampler.config());
    } else {
      throw ValidationError("unknown mode '" + mode + "', expected exact or mc");
    }
    Output o(out);
    o.stream() << "mode,edges,flow_mean,flow_lb,flow_ub,std_error,samples\n"
               << mode << ',' << edges.size() << ',' << fmt(est.mean) << ',' << fmt(est.lb) << ',' << fmt(est.ub)
               << ',' << fmt(est.std_error) << ',' << (mode == "exact" ? 0 : est.samples_used) << '\n';
    std::cerr << kFlowNote << '\n';
  }
};

// ------------------------------------------------------------------- bench

struct BenchCmd {
  GraphSource src;
  SamplerOptions sampler;
  std::string query = "0";
  std::vector<std::string> variants{"naive", "dijkstra", "ft", "ft_m", "ft_m_ci", "ft_m_ds", "ft_m_ci_ds"};
  std::vector<std::size_t> ks{200};
  std::vector<std::size_t> ns;
  std::vector<std::size_t> degrees;
  std::vector<double> epsilons;
  std::vector<double> ds_cs{2.0};
  std::size_t repeat = 1;
  std::uint64_t ref_samples = 100000;
  std::string out;
  bool timing = false;

  struct Point {
    std::size_t n = 0;
    std::size_t degree = 0;
    double epsilon = 0.0;
    std::size_t k = 0;
    double ds_c = 2.0;
    Variant variant = Variant::ft;
  };

  struct Row {
    Point p;
    std::size_t edges = 0;
    std::vector<double> flows;
    std::vector<double> self;
    std::vector<double> sampled;
    std::vector<double> ms;
  };

  void run() const {
    std::vector<Variant> vs;
    for (const auto& name : variants) vs.push_back(parse_variant(name));
    const bool generated = !src.family.empty();
    if (!generated && (!ns.empty() || !degrees.empty() || !epsilons.empty())) {
      throw ValidationError("--n/--deg/--eps sweeps need --family");
    }
    if (repeat < 1) throw ValidationError("--repeat must be at least 1");
    const auto base_cfg = sampler.config();
    SamplerConfig ref = base_cfg;
    ref.samples = ref_samples;
    ref.validate();

    // Graph points in sweep order.
    struct GraphPoint {
      std::size_t n, degree;
      double epsilon;
    };
    std::vector<GraphPoint> gps;
    const auto n_list = ns.empty() ? std::vector<std::size_t>{src.gen.n} : ns;
    const auto d_list = degrees.empty() ? std::vector<std::size_t>{src.gen.degree} : degrees;
    const auto e_list = epsilons.empty() ? std::vector<double>{src.gen.epsilon} : epsilons;
    for (auto n : n_list) {
      for (auto d : d_list) {
        for (auto eps : e_list) gps.push_back({n, d, eps});
      }
    }
    if (!generated) gps.resize(1);

    std::vector<Row> rows;
    for (const auto& gp : gps) {
      GraphSource s = src;
      s.gen.n = gp.n;
      s.gen.degree = gp.degree;
      s.gen.epsilon = gp.epsilon;
      const auto g = s.load();
      const VertexId q = resolve_query(g, query);
      std::vector<Row> block;
      for (auto k : ks) {
        for (auto c : ds_cs) {
          for (auto v : vs) {
            Row r;
            r.p = {generated ? gp.n : g.vertex_count(), generated ? gp.degree : 0, generated ? gp.epsilon : 0.0, k, c,
                   v};
            block.push_back(r);
          }
        }
      }
      // Each (row, repeat) task is independent; results land in fixed slots.
      const std::size_t tasks = block.size() * repeat;
      std::vector<Solution> sols(tasks);
      std::vector<double> ref_flow(tasks), elapsed(tasks);
      parallel_for(tasks, [&](std::size_t t) {
        const auto& p = block[t / repeat].p;
        StrategyConfig cfg;
        cfg.variant = p.variant;
        cfg.k = p.k;
        cfg.ds_c = p.ds_c;
        cfg.sampler = base_cfg;
        cfg.sampler.master_seed = base_cfg.master_seed + t % repeat;
        const auto t0 = std::chrono::steady_clock::now();
        sols[t] = select_edges(g, q, cfg);
        elapsed[t] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        ref_flow[t] = mc_expected_flow(g, q, sols[t].selected, ref).mean;
      });
      for (std::size_t t = 0; t < tasks; ++t) {
        auto& r = block[t / repeat];
        r.edges = sols[t].selected.size();
        r.flows.push_back(ref_flow[t]);
        r.self.push_back(sols[t].final_estimate(g, q).mean);
        double sampled = 0;
        for (const auto& tr : sols[t].trace) sampled += static_cast<double>(tr.edges_sampled);
        r.sampled.push_back(sampled);
        r.ms.push_back(elapsed[t]);
      }
      rows.insert(rows.end(), block.begin(), block.end());
    }

    Output o(out);
    auto& os = o.stream();
    os << "family,n,degree,epsilon,k,ds_c,variant,repeats,selected,flow_mean,flow_var,flow_min,flow_max,"
          "self_estimate_mean,edges_sampled_mean,time_ms_mean\n";
    auto mean = [](const std::vector<double>& x) {
      double s = 0;
      for (double v : x) s += v;
      return s / static_cast<double>(x.size());
    };
    auto var = [&](const std::vector<double>& x) {
      if (x.size() < 2) return 0.0;
      const double m = mean(x);
      double s = 0;
      for (double v : x) s += (v - m) * (v - m);
      return s / static_cast<double>(x.size() - 1);
    };
    for (const auto& r : rows) {
      os << (generated ? src.family : std::string("file")) << ',' << r.p.n << ',' << r.p.degree << ','
         << fmt(r.p.epsilon) << ',' << r.p.k << ',' << fmt(r.p.ds_c) << ',' << to_string(r.p.variant) << ','
         << r.flows.size() << ',' << r.edges << ',' << fmt(mean(r.flows)) << ',' << fmt(var(r.flows)) << ','
         << fmt(*std::min_element(r.flows.begin(), r.flows.end())) << ','
         << fmt(*std::max_element(r.flows.begin(), r.flows.end())) << ',' << fmt(mean(r.self)) << ','
         << fmt(mean(r.sampled)) << ',' << fmt(timing ? mean(r.ms) : 0.0) << '\n';
    }
    std::cerr << kFlowNote << '\n';
  }
};

// ------------------------------------------------------------- dump-ftree

struct DumpCmd {
  GraphSource src;
  SamplerOptions sampler;
  std::string query = "0";
  std::string selection;
  bool flow = false;
  std::string out;

  void run() const {
    const auto g = src.load();
    const VertexId q = resolve_query(g, query);
    SamplingContext ctx;
    ctx.sampler = sampler.config();
    FTree tree(q);
    Output o(out);
    auto& os = o.stream();
    for (EdgeId id : read_selection(g, selection)) {
      const auto r = tree.insert_edge(g, id, ctx);
      const auto& e = g.edge(id);
      os << "# insert " << g.label(e.u) << ' ' << g.label(e.v) << " case=" << to_string(r.case_taken)
         << " sampled_edges=" << r.edges_sampled_count << '\n';
    }
    os << tree.dump(g);
    if (flow) {
      const auto f = tree.expected_flow(g, ctx.sampler);
      os << "# flow " << fmt(f.mean) << " lb " << fmt(f.lb) << " ub " << fmt(f.ub) << '\n';
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted edge selection on probabilistic graphs"};
  app.require_subcommand(1);

  GenerateCmd gen;
  auto* c_gen = app.add_subcommand("generate", "Generate a synthetic graph");
  c_gen->add_option("family", gen.src.family, "erdos, partitioned or wsn")->required();
  gen.src.add_options(c_gen, true);
  c_gen->add_option("--seed", gen.src.gen.seed, "Generator seed");
  c_gen->add_option("--out", gen.out, "Output prefix; writes <prefix>.edges/.weights/.coords");

  MaxflowCmd mf;
  auto* c_mf = app.add_subcommand("maxflow", "Select k edges maximizing expected flow");
  mf.src.add_options(c_mf);
  mf.sampler.add_options(c_mf);
  c_mf->add_option("--query", mf.query, "Query vertex label");
  c_mf->add_option("--variant", mf.variant, "naive, dijkstra, ft, ft_m, ft_m_ci, ft_m_ds or ft_m_ci_ds");
  c_mf->add_option("--k", mf.k, "Edge budget");
  c_mf->add_option("--ds-c", mf.ds_c, "Delay base for delayed sampling");
  c_mf->add_option("--out", mf.out, "CSV trace path (default stdout)");
  c_mf->add_option("--edges-out", mf.edges_out, "Write the selected edges here");
  c_mf->add_flag("--timing", mf.timing, "Fill the elapsed_ms column");

  EvaluateCmd ev;
  auto* c_ev = app.add_subcommand("evaluate", "Expected flow of an edge selection");
  ev.src.add_options(c_ev);
  ev.sampler.add_options(c_ev);
  c_ev->add_option("--query", ev.query, "Query vertex label");
  c_ev->add_option("--selection", ev.selection, "Edge selection file (default: all edges)");
  c_ev->add_option("--mode", ev.mode, "exact or mc");
  c_ev->add_option("--out", ev.out, "CSV path (default stdout)");

  BenchCmd bench;
  auto* c_b = app.add_subcommand("bench", "Sweep variants and parameters");
  bench.src.gen.n = 10000;
  bench.src.add_options(c_b);
  bench.sampler.add_options(c_b);
  c_b->add_option("--query", bench.query, "Query vertex label");
  c_b->add_option("--variant", bench.variants, "Variants to run")->delimiter(',');
  c_b->add_option("--k", bench.ks, "Budgets to sweep")->delimiter(',');
  c_b->add_option("--sweep-n", bench.ns, "Vertex counts to sweep")->delimiter(',');
  c_b->add_option("--sweep-deg", bench.degrees, "Degrees to sweep")->delimiter(',');
  c_b->add_option("--sweep-eps", bench.epsilons, "WSN radii to sweep")->delimiter(',');
  c_b->add_option("--ds-c", bench.ds_cs, "Delay bases to sweep")->delimiter(',');
  c_b->add_option("--repeat", bench.repeat, "Runs per point with consecutive seeds");
  c_b->add_option("--ref-samples", bench.ref_samples, "Worlds for the common reference evaluation");
  c_b->add_option("--out", bench.out, "CSV path (default stdout)");
  c_b->add_flag("--timing", bench.timing, "Fill the time_ms_mean column");

  DumpCmd dump;
  auto* c_d = app.add_subcommand("dump-ftree", "Insert edges into a flow tree and print its components");
  dump.src.add_options(c_d);
  dump.sampler.add_options(c_d);
  c_d->add_option("--query", dump.query, "Query vertex label");
  c_d->add_option("--selection", dump.selection, "Edges to insert, in order")->required();
  c_d->add_flag("--flow", dump.flow, "Also print the expected flow");
  c_d->add_option("--out", dump.out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*c_gen) gen.run();
    if (*c_mf) mf.run();
    if (*c_ev) ev.run();
    if (*c_b) bench.run();
    if (*c_d) dump.run();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const LimitError& e) {
    std::cerr << "limit exceeded: " << e.what() << '\n';
    return kExitLimit;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
