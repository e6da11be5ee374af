#include "circuits/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace circuits;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

Network load_net(const std::string& path) { return network_from_text(slurp(path)); }

Vec parse_vec(const std::vector<double>& values) {
  Vec v(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i];
  return v;
}

Metric make_metric(const std::string& name, double delta, int gold, double alpha_frac) {
  if (name == "logit_diff") return Metric::logit_diff(gold, delta);
  if (name == "winner_runner") return Metric::winner_runner(alpha_frac);
  if (name == "abs_max") return Metric::abs_max(delta);
  throw InputError("unknown metric '" + name + "'");
}

std::set<ComponentId> load_members(const Network& net, const std::string& path) {
  auto [circuit, patch] = circuit_from_text(slurp(path));
  (void)patch;
  const std::uint64_t hash = network_hash(net);
  if (circuit.net_hash != 0 && circuit.net_hash != hash) {
    throw InputError("circuit file was produced for a different network");
  }
  return circuit.members;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Circuit discovery with certified faithfulness guarantees"};
  app.require_subcommand(1);

  // build-model -----------------------------------------------------------
  auto* build = app.add_subcommand("build-model", "Construct a network and write it to a file");
  std::string build_name = "xor_toy", build_out = "net.json";
  int build_m = 1, build_epochs = 300;
  std::vector<int> build_dims = {2, 16, 2};
  std::uint64_t build_seed = 0, build_data_seed = 0;
  build->add_option("--name", build_name, "xor_toy|counterexample|random_mlp|trained_mlp");
  build->add_option("--m", build_m, "pair count for counterexample");
  build->add_option("--dims", build_dims, "layer widths for MLP builders");
  build->add_option("--seed", build_seed);
  build->add_option("--data-seed", build_data_seed);
  build->add_option("--epochs", build_epochs);
  build->add_option("-o,--output", build_out);

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a tiny MLP on synthetic 2-D data");
  std::vector<int> train_dims = {2, 16, 2};
  std::uint64_t train_data_seed = 7, train_init_seed = 3;
  int train_epochs = 300;
  std::string train_out = "net.json";
  train->add_option("--dims", train_dims);
  train->add_option("--data-seed", train_data_seed);
  train->add_option("--init-seed", train_init_seed);
  train->add_option("--epochs", train_epochs);
  train->add_option("-o,--output", train_out);

  // verify ------------------------------------------------------------------
  auto* ver = app.add_subcommand("verify", "Certify circuit faithfulness over a region");
  std::string ver_net, ver_circuit, ver_metric = "logit_diff", ver_kind = "input_robust";
  std::vector<double> ver_anchor;
  double ver_eps = 0.05, ver_delta = 1.0, ver_timeout = 45.0, ver_alpha = 0.5;
  double ver_eps_patch = 0.08;
  int ver_gold = 0;
  ver->add_option("--net", ver_net)->required();
  ver->add_option("--circuit", ver_circuit)->required();
  ver->add_option("--kind", ver_kind, "input_robust|patching_robust|combined|combined_box");
  ver->add_option("--anchor", ver_anchor, "anchor point (repeatable values)")->required();
  ver->add_option("--eps", ver_eps);
  ver->add_option("--eps-patch", ver_eps_patch);
  ver->add_option("--delta", ver_delta);
  ver->add_option("--metric", ver_metric);
  ver->add_option("--gold", ver_gold);
  ver->add_option("--alpha-frac", ver_alpha);
  ver->add_option("--timeout", ver_timeout);

  // discover ------------------------------------------------------------------
  auto* disc = app.add_subcommand("discover", "Run a discovery algorithm");
  std::string disc_net, disc_alg = "greedy", disc_out = "circuit.json", disc_trace;
  std::string disc_pred = "sampling", disc_metric = "logit_diff", disc_patch = "zero";
  std::vector<double> disc_anchor;
  std::vector<std::string> disc_order;
  double disc_eps = 0.05, disc_delta = 1.0, disc_timeout = 45.0;
  int disc_gold = 0;
  disc->add_option("--net", disc_net)->required();
  disc->add_option("--algorithm", disc_alg, "greedy|exhaustive|binary");
  disc->add_option("--order", disc_order, "explicit component names");
  disc->add_option("--predicate", disc_pred, "sampling|input_robust|patching_robust|combined|combined_box");
  disc->add_option("--metric", disc_metric);
  disc->add_option("--patch", disc_patch);
  disc->add_option("--anchor", disc_anchor)->required();
  disc->add_option("--eps", disc_eps);
  disc->add_option("--delta", disc_delta);
  disc->add_option("--gold", disc_gold);
  disc->add_option("--timeout", disc_timeout);
  disc->add_option("-o,--output", disc_out);
  disc->add_option("--trace", disc_trace, "trace log path");

  // evaluate ------------------------------------------------------------------
  auto* evl = app.add_subcommand("evaluate", "Evaluate a stored circuit's robustness");
  std::string evl_net, evl_circuit, evl_kind = "input_robust", evl_metric = "logit_diff";
  std::vector<double> evl_anchor;
  double evl_eps = 0.05, evl_delta = 1.0, evl_timeout = 45.0;
  int evl_gold = 0;
  evl->add_option("--net", evl_net)->required();
  evl->add_option("--circuit", evl_circuit)->required();
  evl->add_option("--kind", evl_kind);
  evl->add_option("--metric", evl_metric);
  evl->add_option("--anchor", evl_anchor)->required();
  evl->add_option("--eps", evl_eps);
  evl->add_option("--delta", evl_delta);
  evl->add_option("--gold", evl_gold);
  evl->add_option("--timeout", evl_timeout);

  // mhs-discover ----------------------------------------------------------------
  auto* mhsd = app.add_subcommand("mhs-discover", "Blocking-set / minimum-hitting-set loop");
  std::string mhs_net, mhs_out = "circuit.json", mhs_pred = "sampling",
              mhs_metric = "logit_diff", mhs_patch = "zero";
  std::vector<double> mhs_anchor;
  double mhs_eps = 0.05, mhs_delta = 1.0, mhs_timeout = 45.0, mhs_eps_patch = 0.08;
  int mhs_gold = 0, mhs_tmax = 3;
  mhsd->add_option("--net", mhs_net)->required();
  mhsd->add_option("--t-max", mhs_tmax);
  mhsd->add_option("--predicate", mhs_pred);
  mhsd->add_option("--metric", mhs_metric);
  mhsd->add_option("--patch", mhs_patch);
  mhsd->add_option("--anchor", mhs_anchor)->required();
  mhsd->add_option("--eps", mhs_eps);
  mhsd->add_option("--eps-patch", mhs_eps_patch);
  mhsd->add_option("--delta", mhs_delta);
  mhsd->add_option("--gold", mhs_gold);
  mhsd->add_option("--timeout", mhs_timeout);
  mhsd->add_option("-o,--output", mhs_out);

  // oracle ------------------------------------------------------------------
  auto* orc = app.add_subcommand("oracle", "Brute-force ground-truth checkers");
  auto* orc_classify = orc->add_subcommand("classify", "Minimality taxonomy of a circuit");
  std::string oc_net, oc_circuit;
  std::vector<double> oc_batch;
  double oc_delta = 0;
  orc_classify->add_option("--net", oc_net)->required();
  orc_classify->add_option("--circuit", oc_circuit)->required();
  orc_classify->add_option("--batch", oc_batch, "flattened sample inputs")->required();
  orc_classify->add_option("--delta", oc_delta);

  auto* orc_range = orc->add_subcommand("range", "Exact output range over a box");
  std::string or_net;
  std::vector<double> or_center;
  double or_eps = 0.1;
  orc_range->add_option("--net", or_net)->required();
  orc_range->add_option("--center", or_center)->required();
  orc_range->add_option("--eps", or_eps);

  auto* orc_mono = orc->add_subcommand("monotone", "Exhaustive monotonicity check");
  std::string om_net;
  std::vector<double> om_batch;
  double om_delta = 0;
  orc_mono->add_option("--net", om_net)->required();
  orc_mono->add_option("--batch", om_batch)->required();
  orc_mono->add_option("--delta", om_delta);

  // run / report -----------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run a full experiment from a config file");
  std::string run_config;
  run->add_option("--config", run_config)->required();

  auto* rep = app.add_subcommand("report", "Re-render the table for a saved run");
  std::string rep_dir;
  rep->add_option("--run-dir", rep_dir)->required();

  CLI11_PARSE(app, argc, argv);

  auto anchors_of = [](const std::vector<double>& flat, int dim) {
    if (dim <= 0 || flat.size() % dim != 0) throw InputError("anchor length mismatch");
    std::vector<Vec> anchors;
    for (std::size_t i = 0; i < flat.size(); i += dim) {
      Vec a(dim);
      for (int j = 0; j < dim; ++j) a[j] = flat[i + j];
      anchors.push_back(std::move(a));
    }
    return anchors;
  };

  if (build->parsed()) {
    ModelSpec spec;
    spec.name = build_name;
    spec.m = build_m;
    spec.dims = build_dims;
    spec.seed = build_seed;
    spec.data_seed = build_data_seed;
    spec.epochs = build_epochs;
    const Network net = build_model(spec);
    spit(build_out, to_text(net));
    std::cout << "wrote " << build_out << " (" << net.components.size() << " components, hash "
              << std::hex << network_hash(net) << ")\n";
    return 0;
  }
  if (train->parsed()) {
    const TrainResult r = train_tiny(train_dims, train_data_seed, train_init_seed, train_epochs);
    spit(train_out, to_text(r.net));
    std::cout << "wrote " << train_out << "; train acc " << r.train_accuracy << ", held-out acc "
              << r.test_accuracy << ", final loss " << r.final_loss << "\n";
    return 0;
  }
  if (ver->parsed() || evl->parsed()) {
    const bool is_verify = ver->parsed();
    const Network net = load_net(is_verify ? ver_net : evl_net);
    const auto members = load_members(net, is_verify ? ver_circuit : evl_circuit);
    PredicateSpec spec;
    spec.kind = is_verify ? ver_kind : evl_kind;
    spec.metric = is_verify ? ver_metric : evl_metric;
    spec.delta = is_verify ? ver_delta : evl_delta;
    spec.eps = is_verify ? ver_eps : evl_eps;
    spec.eps_in = spec.eps;
    spec.eps_patch = is_verify ? ver_eps_patch : spec.eps;
    spec.alpha_frac = ver_alpha;
    spec.timeout_s = is_verify ? ver_timeout : evl_timeout;
    const auto anchors = anchors_of(is_verify ? ver_anchor : evl_anchor, net.input_dim());
    const EvalOutcome out = evaluate_circuit(net, members, spec, anchors,
                                             is_verify ? ver_gold : evl_gold, {}, 1234);
    std::cout << "status: " << status_name(out.verdict.status);
    if (out.verdict.status == Status::Falsified && out.verdict.witness) {
      std::cout << "  witness:";
      for (int i = 0; i < out.verdict.witness->size(); ++i) {
        std::cout << " " << (*out.verdict.witness)[i];
      }
      std::cout << "  violation " << out.verdict.violation;
    }
    std::cout << "  (" << out.verdict.subproblems << " subproblems, " << out.verdict.wall_s
              << " s)\n";
    return out.verdict.status == Status::Certified ? 0 : 1;
  }
  if (disc->parsed()) {
    const Network net = load_net(disc_net);
    PredicateSpec spec;
    spec.kind = disc_pred;
    spec.metric = disc_metric;
    spec.patch = disc_patch;
    spec.delta = disc_delta;
    spec.eps = disc_eps;
    spec.eps_in = disc_eps;
    spec.timeout_s = disc_timeout;
    const auto anchors = anchors_of(disc_anchor, net.input_dim());
    const Predicate pred = make_predicate(net, spec, anchors, disc_gold, {});
    Ordering ordering = Ordering::reverse_topo_lex();
    if (!disc_order.empty()) {
      std::vector<ComponentId> ids;
      for (const auto& name : disc_order) {
        const Component* c = net.find_component(name);
        if (!c) throw InputError("unknown component name '" + name + "'");
        ids.push_back(c->id);
      }
      ordering = Ordering::explicit_order(std::move(ids));
    }
    DiscoveryResult r;
    if (disc_alg == "greedy") {
      r = greedy(pred, ordering);
    } else if (disc_alg == "exhaustive") {
      r = exhaustive(pred, ordering);
    } else if (disc_alg == "binary") {
      r = binary_search(pred, ordering);
    } else {
      throw InputError("unknown algorithm '" + disc_alg + "'");
    }
    Circuit c;
    c.net_hash = network_hash(net);
    c.members = r.circuit;
    spit(disc_out, to_text(c, PatchingScheme::zero()));
    std::cout << "circuit size " << r.circuit.size() << " after " << r.trace.search_evals
              << " evaluations (" << r.trace.wall_s << " s) -> " << disc_out << "\n";
    if (!disc_trace.empty()) {
      std::ostringstream os;
      os << "# step component result size_after elapsed_s\n";
      for (const auto& s : r.trace.steps) {
        os << s.step << " " << to_string(s.tested) << " "
           << (s.result == TriBool::True ? "true" : s.result == TriBool::False ? "false" : "unknown")
           << " " << s.size_after << " " << s.elapsed_s << "\n";
      }
      spit(disc_trace, os.str());
    }
    return 0;
  }
  if (mhsd->parsed()) {
    const Network net = load_net(mhs_net);
    PredicateSpec spec;
    spec.kind = mhs_pred;
    spec.metric = mhs_metric;
    spec.patch = mhs_patch;
    spec.delta = mhs_delta;
    spec.eps = mhs_eps;
    spec.eps_in = mhs_eps;
    spec.eps_patch = mhs_eps_patch;
    spec.timeout_s = mhs_timeout;
    const auto anchors = anchors_of(mhs_anchor, net.input_dim());
    const Predicate pred = make_predicate(net, spec, anchors, mhs_gold, {});
    const Alg4Result r = algorithm4(pred, mhs_tmax);
    Circuit c;
    c.net_hash = network_hash(net);
    c.members = r.circuit;
    spit(mhs_out, to_text(c, PatchingScheme::zero()));
    {
      // Blocking-set store and per-round statistics, next to the circuit.
      std::ostringstream os;
      os << "{\n  \"hitting_set_size\": " << r.circuit.size() << ",\n  \"status\": \""
         << (r.status == Alg4Status::Exact ? "exact" : "lower_bound_only")
         << "\",\n  \"blocking_sets\": [";
      for (std::size_t i = 0; i < r.store.sets.size(); ++i) {
        os << (i ? ", " : "") << "[";
        bool first = true;
        for (const auto& id : r.store.sets[i]) {
          os << (first ? "" : ", ") << "[" << id.layer << "," << id.unit << "]";
          first = false;
        }
        os << "]";
      }
      os << "],\n  \"rounds\": [";
      for (std::size_t i = 0; i < r.rounds.size(); ++i) {
        const auto& round = r.rounds[i];
        os << (i ? ", " : "") << "{\"t\": " << round.t << ", \"candidates\": " << round.candidates
           << ", \"blocked\": " << round.blocked << ", \"store\": " << round.store_size
           << ", \"mhs\": " << round.mhs_size << "}";
      }
      os << "]\n}\n";
      spit(mhs_out + ".store.json", os.str());
    }
    std::cout << "status " << (r.status == Alg4Status::Exact ? "exact" : "lower-bound-only")
              << ", circuit size " << r.circuit.size() << ", store " << r.store.sets.size()
              << " sets, " << r.evals << " evaluations\n";
    for (const auto& round : r.rounds) {
      std::cout << "  t=" << round.t << ": candidates " << round.candidates << ", blocked "
                << round.blocked << ", store " << round.store_size << ", mhs " << round.mhs_size
                << "\n";
    }
    if (r.empty_circuit) {
      std::cout << "warning: the predicate holds vacuously; the hitting set is empty\n";
    }
    return 0;
  }
  if (orc_classify->parsed() || orc_mono->parsed()) {
    const bool classify = orc_classify->parsed();
    const Network net = load_net(classify ? oc_net : om_net);
    const auto batch = anchors_of(classify ? oc_batch : om_batch, net.input_dim());
    const Predicate pred = make_sampling(net, batch, Metric::abs_max(classify ? oc_delta : om_delta),
                                         PatchingScheme::zero());
    if (classify) {
      const auto members = load_members(net, oc_circuit);
      const MinimalityReport r = classify_minimality(pred, members);
      std::cout << "faithful=" << r.faithful << " quasi=" << r.quasi << " local=" << r.local
                << " subset=" << r.subset << " cardinal=" << r.cardinal << "\n";
    } else {
      const auto universe = pred.universe();
      const MonotoneReport r = check_monotone(pred, universe);
      if (r.monotone) {
        std::cout << "monotone (undecided pairs: " << r.undecided_pairs << ")\n";
      } else {
        std::cout << "not monotone; counterexample sizes " << r.counterexample->first.size()
                  << " -> " << r.counterexample->second.size() << "\n";
      }
    }
    return 0;
  }
  if (orc_range->parsed()) {
    const Network net = load_net(or_net);
    BoxBounds box;
    box.lo = parse_vec(or_center).array() - or_eps;
    box.hi = parse_vec(or_center).array() + or_eps;
    const auto range = enumerate_exact_range(net, box);
    for (std::size_t j = 0; j < range.size(); ++j) {
      std::cout << "output " << j << ": [" << range[j].lo[0] << ", " << range[j].hi[0] << "]\n";
    }
    return 0;
  }
  if (run->parsed()) {
    const ExperimentConfig config = config_from_text(slurp(run_config));
    const RunReport report = run_experiment(config);
    std::cout << render_table(report, config.algorithm + " / " + config.discovery.kind);
    return 0;
  }
  if (rep->parsed()) {
    std::cout << slurp(rep_dir + "/report.txt");
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
