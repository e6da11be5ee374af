#include "circuits/experiment.hpp"

#include "parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace circuits {

namespace {

using json = nlohmann::ordered_json;

Metric metric_from_spec(const PredicateSpec& spec, int gold_class) {
  if (spec.metric == "logit_diff") return Metric::logit_diff(gold_class, spec.delta);
  if (spec.metric == "winner_runner") return Metric::winner_runner(spec.alpha_frac);
  if (spec.metric == "abs_max") return Metric::abs_max(spec.delta);
  throw InputError("unknown metric '" + spec.metric + "'");
}

InputRegion anchors_region(const std::vector<Vec>& anchors, double eps, bool clamp01) {
  InputRegion region;
  for (const Vec& a : anchors) {
    InputRegion::Box box = InputRegion::Box::around(a, eps);
    if (clamp01) {
      box.clamp_lo = Vec::Zero(a.size());
      box.clamp_hi = Vec::Ones(a.size());
    }
    region.boxes.push_back(std::move(box));
  }
  return region;
}

}  // namespace

namespace {

// The environment wins over config files for the per-query timeout.
double effective_timeout(double configured) {
  if (const char* t = std::getenv("CIRCUITS_TIMEOUT_S")) {
    char* end = nullptr;
    const double v = std::strtod(t, &end);
    if (end != t && v > 0) return v;
  }
  return configured;
}

}  // namespace

Predicate make_predicate(const Network& net, const PredicateSpec& spec,
                         const std::vector<Vec>& anchors, int gold_class,
                         const std::vector<Vec>& mean_pool) {
  const Metric metric = metric_from_spec(spec, gold_class);
  PatchingScheme patch = PatchingScheme::zero();
  if (spec.patch == "mean") {
    if (mean_pool.empty()) throw InputError("mean patching needs a sample pool");
    patch = PatchingScheme::mean(mean_patch_values(net, mean_pool));
  } else if (spec.patch != "zero") {
    throw InputError("unknown patch '" + spec.patch + "'");
  }

  Predicate pred;
  if (spec.kind == "sampling") {
    pred = make_sampling(net, anchors, metric, std::move(patch));
  } else if (spec.kind == "input_robust") {
    pred = make_input_robust(net, anchors_region(anchors, spec.eps, spec.clamp01), metric,
                             std::move(patch));
  } else if (spec.kind == "patching_robust") {
    pred = make_patching_robust(net, anchors, anchors_region(anchors, spec.eps, spec.clamp01),
                                metric);
  } else if (spec.kind == "combined" || spec.kind == "combined_box") {
    pred = make_combined(net, anchors, spec.eps_in, spec.eps_patch, metric,
                         spec.kind == "combined_box");
  } else {
    throw InputError("unknown predicate kind '" + spec.kind + "'");
  }
  pred.budget.timeout_s = effective_timeout(spec.timeout_s);
  return pred;
}

EvalOutcome evaluate_circuit(const Network& net, const std::set<ComponentId>& members,
                             const PredicateSpec& spec, const std::vector<Vec>& anchors,
                             int gold_class, const std::vector<Vec>& mean_pool,
                             std::uint64_t seed) {
  const Metric metric = metric_from_spec(spec, gold_class);
  Circuit circuit;
  circuit.members = members;
  PatchingScheme patch = PatchingScheme::zero();
  if (spec.patch == "mean") patch = PatchingScheme::mean(mean_patch_values(net, mean_pool));

  VerifyBudget budget;
  budget.timeout_s = effective_timeout(spec.timeout_s);
  budget.seed = seed;

  EvalOutcome out;
  out.verdict.status = Status::Certified;

  auto queries = [&]() {
    std::vector<SiameseQuery> qs;
    if (spec.kind == "input_robust" || spec.kind == "sampling") {
      qs.push_back(build_input_siamese(net, circuit, patch,
                                       anchors_region(anchors, spec.eps, spec.clamp01), metric));
    } else if (spec.kind == "patching_robust") {
      const InputRegion region = anchors_region(anchors, spec.eps, spec.clamp01);
      for (const Vec& x_ref : anchors) {
        qs.push_back(build_patching_siamese(net, circuit, x_ref, region, metric));
      }
    } else if (spec.kind == "combined") {
      for (const Vec& a : anchors) {
        qs.push_back(build_tripled_siamese(net, circuit, a, spec.eps_in, spec.eps_patch, metric));
      }
    } else if (spec.kind == "combined_box") {
      for (const Vec& a : anchors) {
        qs.push_back(
            build_box_patching_siamese(net, circuit, a, spec.eps_in, spec.eps_patch, metric));
      }
    } else {
      throw InputError("unknown evaluation kind '" + spec.kind + "'");
    }
    return qs;
  }();

  double total_wall = 0;
  for (const auto& q : queries) {
    Verdict v = verify(q, budget);
    total_wall += v.wall_s;
    out.verdict.subproblems += v.subproblems;
    if (v.status == Status::Falsified) {
      out.verdict = std::move(v);
      out.verdict.wall_s = total_wall;
      out.attack_found = true;
      return out;
    }
    if (v.status == Status::Unknown) {
      out.verdict.status = Status::Unknown;
      out.verdict.unknown_reason = v.unknown_reason;
      if (auto w = attack(q, 100, 20, seed)) {
        out.attack_found = true;
      }
    }
  }
  out.verdict.wall_s = total_wall;
  return out;
}

namespace {

PredicateSpec predicate_spec_from_json(const json& j) {
  PredicateSpec s;
  s.kind = j.value("kind", s.kind);
  s.metric = j.value("metric", s.metric);
  s.delta = j.value("delta", s.delta);
  s.alpha_frac = j.value("alpha_frac", s.alpha_frac);
  s.patch = j.value("patch", s.patch);
  s.eps = j.value("eps", s.eps);
  s.eps_in = j.value("eps_in", s.eps_in);
  s.eps_patch = j.value("eps_patch", s.eps_patch);
  s.timeout_s = j.value("timeout_s", s.timeout_s);
  s.clamp01 = j.value("clamp01", s.clamp01);
  return s;
}

json predicate_spec_to_json(const PredicateSpec& s) {
  json j;
  j["kind"] = s.kind;
  j["metric"] = s.metric;
  j["delta"] = s.delta;
  j["alpha_frac"] = s.alpha_frac;
  j["patch"] = s.patch;
  j["eps"] = s.eps;
  j["eps_in"] = s.eps_in;
  j["eps_patch"] = s.eps_patch;
  j["timeout_s"] = s.timeout_s;
  j["clamp01"] = s.clamp01;
  return j;
}

}  // namespace

ExperimentConfig config_from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
  ExperimentConfig c;
  c.seed = doc.value("seed", c.seed);
  if (doc.contains("model")) {
    const auto& jm = doc["model"];
    c.model.name = jm.value("name", std::string("trained_mlp"));
    c.model.m = jm.value("m", 1);
    c.model.dims = jm.value("dims", std::vector<int>{2, 16, 2});
    c.model.seed = jm.value("seed", 0ull);
    c.model.data_seed = jm.value("data_seed", 0ull);
    c.model.epochs = jm.value("epochs", 300);
  }
  c.model_file = doc.value("model_file", std::string());
  c.batch_count = doc.value("batch_count", c.batch_count);
  c.batch_k = doc.value("batch_k", c.batch_k);
  c.algorithm = doc.value("algorithm", c.algorithm);
  c.t_max = doc.value("t_max", c.t_max);
  if (doc.contains("discovery")) c.discovery = predicate_spec_from_json(doc["discovery"]);
  if (doc.contains("evaluation")) c.evaluation = predicate_spec_from_json(doc["evaluation"]);
  c.output_dir = doc.value("output_dir", std::string());
  // Every numeric field must be finite.
  for (double v : {c.discovery.delta, c.discovery.eps, c.discovery.eps_in, c.discovery.eps_patch,
                   c.evaluation.delta, c.evaluation.eps, c.evaluation.eps_in,
                   c.evaluation.eps_patch}) {
    if (!std::isfinite(v)) throw ParseError("config contains a non-finite numeric field");
  }
  return c;
}

std::string to_text(const ExperimentConfig& c) {
  json doc;
  doc["seed"] = c.seed;
  json jm;
  jm["name"] = c.model.name;
  jm["m"] = c.model.m;
  jm["dims"] = c.model.dims;
  jm["seed"] = c.model.seed;
  jm["data_seed"] = c.model.data_seed;
  jm["epochs"] = c.model.epochs;
  doc["model"] = std::move(jm);
  if (!c.model_file.empty()) doc["model_file"] = c.model_file;
  doc["batch_count"] = c.batch_count;
  doc["batch_k"] = c.batch_k;
  doc["algorithm"] = c.algorithm;
  doc["t_max"] = c.t_max;
  doc["discovery"] = predicate_spec_to_json(c.discovery);
  doc["evaluation"] = predicate_spec_to_json(c.evaluation);
  doc["output_dir"] = c.output_dir;
  return doc.dump(2) + "\n";
}

namespace {

struct BatchPool {
  std::vector<Vec> anchors;  // correctly-predicted inputs
  std::vector<int> labels;
  std::vector<Vec> mean_pool;
};

BatchPool make_pool(const Network& net, std::uint64_t seed) {
  BatchPool pool;
  const Dataset data = two_cluster_data(seed ^ 0xabcdef12u, 600);
  for (int i = 0; i < data.inputs.rows(); ++i) {
    const Vec x = data.inputs.row(i).transpose();
    if (static_cast<int>(pool.mean_pool.size()) < 100) pool.mean_pool.push_back(x);
    Vec y = forward(net, x);
    int arg = 0;
    y.maxCoeff(&arg);
    if (arg == data.labels[i] % net.output_dim()) {
      pool.anchors.push_back(x);
      pool.labels.push_back(data.labels[i]);
    }
  }
  if (pool.anchors.empty()) throw Error("no correctly predicted inputs for batching");
  return pool;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
  Network net;
  if (!config.model_file.empty()) {
    std::ifstream in(config.model_file);
    if (!in) throw InputError("cannot open model file " + config.model_file);
    std::stringstream ss;
    ss << in.rdbuf();
    net = network_from_text(ss.str());
  } else {
    net = build_model(config.model);
  }

  const BatchPool pool = make_pool(net, config.seed);

  // Class-stratified batches: round-robin over the two synthetic classes.
  std::vector<std::vector<int>> by_class(2);
  for (std::size_t i = 0; i < pool.anchors.size(); ++i) {
    by_class[pool.labels[i] % 2].push_back(static_cast<int>(i));
  }
  RunReport report;
  report.records.resize(config.batch_count);
  std::vector<std::size_t> cursor(2, 0);
  std::vector<std::vector<Vec>> batch_anchors(config.batch_count);
  for (int b = 0; b < config.batch_count; ++b) {
    const int cls = b % 2;
    report.records[b].batch_id = b;
    report.records[b].label = cls;
    for (int k = 0; k < config.batch_k; ++k) {
      auto& ids = by_class[cls];
      if (ids.empty()) throw Error("one class has no correctly predicted inputs");
      batch_anchors[b].push_back(pool.anchors[ids[cursor[cls] % ids.size()]]);
      ++cursor[cls];
    }
  }

  detail::parallel_for(config.batch_count, [&](long b) {
    BatchRecord& rec = report.records[b];
    rec.anchors = batch_anchors[b];
    try {
      const Predicate pred =
          make_predicate(net, config.discovery, rec.anchors, rec.label, pool.mean_pool);
      if (config.algorithm == "none") {
        rec.circuit = all_components(net);
      } else if (config.algorithm == "mhs") {
        const Alg4Result r = algorithm4(pred, config.t_max);
        rec.circuit = r.circuit;
        rec.mhs_size = r.circuit.size();
        rec.evals = r.evals;
      } else {
        DiscoveryResult r;
        if (config.algorithm == "greedy") {
          r = greedy(pred, Ordering::reverse_topo_lex());
        } else if (config.algorithm == "exhaustive") {
          r = exhaustive(pred, Ordering::reverse_topo_lex());
        } else if (config.algorithm == "binary") {
          r = binary_search(pred, Ordering::reverse_topo_lex());
        } else {
          throw InputError("unknown algorithm '" + config.algorithm + "'");
        }
        rec.circuit = r.circuit;
        rec.discovery_s = r.trace.wall_s;
        rec.evals = r.trace.search_evals;
        for (const auto& step : r.trace.steps) {
          rec.size_over_time.emplace_back(step.elapsed_s, step.size_after);
        }
      }
      const EvalOutcome ev = evaluate_circuit(net, rec.circuit, config.evaluation, rec.anchors,
                                              rec.label, pool.mean_pool, config.seed + b);
      rec.eval_status = ev.verdict.status;
      rec.attack_found = ev.attack_found;
      rec.eval_s = ev.verdict.wall_s;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  });

  // Aggregates; unknowns are excluded from the robustness percentage.
  std::vector<double> sizes, times;
  int robust = 0;
  for (const auto& rec : report.records) {
    if (!rec.error.empty()) {
      ++report.failed;
      continue;
    }
    sizes.push_back(static_cast<double>(rec.circuit.size()));
    times.push_back(rec.discovery_s);
    if (rec.eval_status == Status::Unknown) {
      ++report.unknowns;
    } else {
      ++report.decided;
      if (rec.eval_status == Status::Certified) ++robust;
    }
  }
  report.mean_size = mean_of(sizes);
  report.std_size = std_of(sizes);
  report.mean_time = mean_of(times);
  report.std_time = std_of(times);
  if (report.decided > 0) {
    const double p = static_cast<double>(robust) / report.decided;
    report.robustness_pct = 100.0 * p;
    report.robustness_se = 100.0 * std::sqrt(p * (1 - p) / report.decided);
  }

  if (!config.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    const std::uint64_t hash = network_hash(net);
    {
      std::ofstream out(fs::path(config.output_dir) / "model.json");
      out << to_text(net);
    }
    json records = json::array();
    for (const auto& rec : report.records) {
      Circuit c;
      c.net_hash = hash;
      c.members = rec.circuit;
      {
        std::ofstream out(fs::path(config.output_dir) /
                          ("circuit_" + std::to_string(rec.batch_id) + ".json"));
        out << to_text(c, PatchingScheme::zero());
      }
      json jr;
      jr["batch_id"] = rec.batch_id;
      jr["label"] = rec.label;
      jr["size"] = rec.circuit.size();
      jr["discovery_s"] = rec.discovery_s;
      jr["evals"] = rec.evals;
      jr["eval_status"] = status_name(rec.eval_status);
      jr["attack_found"] = rec.attack_found;
      jr["mhs_size"] = rec.mhs_size;
      if (!rec.error.empty()) jr["error"] = rec.error;
      records.push_back(std::move(jr));
    }
    {
      std::ofstream out(fs::path(config.output_dir) / "records.json");
      out << records.dump(2) << "\n";
    }
    {
      // Columnar figure data: circuit size vs MHS size, and size over time.
      std::ofstream fa(fs::path(config.output_dir) / "size_vs_mhs.dat");
      fa << "# batch_id circuit_size mhs_size\n";
      for (const auto& rec : report.records) {
        fa << rec.batch_id << " " << rec.circuit.size() << " " << rec.mhs_size << "\n";
      }
      std::ofstream fb(fs::path(config.output_dir) / "size_over_time.dat");
      fb << "# batch_id elapsed_s size\n";
      for (const auto& rec : report.records) {
        for (const auto& [t, s] : rec.size_over_time) {
          fb << rec.batch_id << " " << t << " " << s << "\n";
        }
      }
    }
    {
      std::ofstream out(fs::path(config.output_dir) / "report.txt");
      out << render_table(report, config.algorithm + " / " + config.discovery.kind);
    }
  }
  return report;
}

std::string render_table(const RunReport& report, const std::string& label) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "Method                          | Time (s)        | Size (|C|)      | Robustness (%)\n";
  os << "--------------------------------+-----------------+-----------------+---------------\n";
  os << label;
  for (std::size_t i = label.size(); i < 32; ++i) os << ' ';
  os << "| " << report.mean_time << " +- " << report.std_time << "   | " << report.mean_size
     << " +- " << report.std_size << "   | " << report.robustness_pct << " +- "
     << report.robustness_se << " (SE)";
  os << "  [decided " << report.decided << ", unknown " << report.unknowns << ", failed "
     << report.failed << "]\n";
  return os.str();
}

}  // namespace circuits
