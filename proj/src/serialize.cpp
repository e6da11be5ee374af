#include "circuits/serialize.hpp"

#include "circuits/encode.hpp"

#include <json.hpp>

#include <sstream>

namespace circuits {

namespace {

using json = nlohmann::ordered_json;

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Mat matrix_from_json(const json& j, int node_index) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ParseError("node " + std::to_string(node_index) + ": weights must be a list of rows");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw ParseError("node " + std::to_string(node_index) + ": ragged weight rows");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Vec vector_from_json(const json& j) {
  Vec v(j.size());
  for (int i = 0; i < static_cast<int>(j.size()); ++i) v[i] = j[i].get<double>();
  return v;
}

NodeKind kind_from_string(const std::string& s, int node_index) {
  for (NodeKind k : {NodeKind::Input, NodeKind::Affine, NodeKind::Relu, NodeKind::Copy,
                     NodeKind::ConstantFix, NodeKind::Concat, NodeKind::Subtract}) {
    if (s == node_kind_name(k)) return k;
  }
  throw ParseError("node " + std::to_string(node_index) + ": unknown kind '" + s + "'");
}

const char* patch_kind_name(PatchKind k) {
  switch (k) {
    case PatchKind::Zero: return "zero";
    case PatchKind::Mean: return "mean";
    case PatchKind::FromInput: return "from_input";
    case PatchKind::Transplant: return "transplant";
  }
  return "?";
}

}  // namespace

std::string to_text(const Network& net) {
  json doc;
  doc["version"] = 1;
  doc["input_dim"] = net.input_dim();
  doc["output_dim"] = net.output_dim();
  doc["input_node"] = net.input_node;
  doc["output_node"] = net.output_node;
  json nodes = json::array();
  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    const Node& n = net.nodes[i];
    json jn;
    jn["id"] = i;
    jn["kind"] = node_kind_name(n.kind);
    jn["width"] = n.width;
    if (!n.sources.empty()) jn["sources"] = n.sources;
    if (n.kind == NodeKind::Affine) {
      jn["weights"] = matrix_to_json(n.weights);
      jn["bias"] = vector_to_json(n.bias);
    }
    if (n.kind == NodeKind::ConstantFix) jn["value"] = vector_to_json(n.value);
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  json comps = json::array();
  for (const auto& c : net.components) {
    json jc;
    jc["id"] = {c.id.layer, c.id.unit};
    jc["name"] = c.name;
    jc["node"] = c.site.node;
    jc["offset"] = c.site.offset;
    jc["width"] = c.site.width;
    comps.push_back(std::move(jc));
  }
  doc["components"] = std::move(comps);
  return doc.dump(2) + "\n";
}

Network network_from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid document: ") + e.what());
  }
  if (!doc.contains("version") || doc["version"].get<int>() != 1) {
    throw ParseError("unsupported or missing version");
  }
  Network net;
  net.input_node = doc.value("input_node", 0);
  net.output_node = doc.value("output_node", 0);
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw ParseError("missing nodes");
  int index = 0;
  for (const auto& jn : doc["nodes"]) {
    Node n;
    if (jn.value("id", index) != index) {
      throw ParseError("node " + std::to_string(index) + ": ids must be dense and ordered");
    }
    n.kind = kind_from_string(jn.value("kind", std::string()), index);
    n.width = jn.value("width", 0);
    if (jn.contains("sources")) n.sources = jn["sources"].get<std::vector<int>>();
    if (n.kind == NodeKind::Affine) {
      if (!jn.contains("weights") || !jn.contains("bias")) {
        throw ParseError("node " + std::to_string(index) + ": affine node missing weights/bias");
      }
      n.weights = matrix_from_json(jn["weights"], index);
      n.bias = vector_from_json(jn["bias"]);
    }
    if (n.kind == NodeKind::ConstantFix) {
      if (!jn.contains("value")) {
        throw ParseError("node " + std::to_string(index) + ": constant node missing value");
      }
      n.value = vector_from_json(jn["value"]);
    }
    net.nodes.push_back(std::move(n));
    ++index;
  }
  for (const auto& jc : doc.value("components", json::array())) {
    Component c;
    c.id = {jc.at("id")[0].get<int>(), jc.at("id")[1].get<int>()};
    c.name = jc.value("name", to_string(c.id));
    c.site = {jc.at("node").get<int>(), jc.value("offset", 0), jc.value("width", 1)};
    net.components.push_back(std::move(c));
  }
  try {
    net.validate();
  } catch (const InputError& e) {
    throw ParseError(e.what());
  }
  if (net.input_dim() != doc.value("input_dim", net.input_dim()) ||
      net.output_dim() != doc.value("output_dim", net.output_dim())) {
    throw ParseError("declared input/output dims disagree with the graph");
  }
  return net;
}

std::uint64_t network_hash(const Network& net) {
  const std::string text = to_text(net);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_text(const Circuit& circuit, const PatchingScheme& patch) {
  json doc;
  doc["version"] = 1;
  {
    std::ostringstream os;
    os << std::hex << circuit.net_hash;
    doc["net_hash"] = os.str();
  }
  json members = json::array();
  for (const auto& id : circuit.members) members.push_back({id.layer, id.unit});
  doc["members"] = std::move(members);
  json jp;
  jp["kind"] = patch_kind_name(patch.kind);
  if (patch.kind == PatchKind::Mean) {
    json values = json::array();
    for (const auto& [id, v] : patch.mean_values) {
      values.push_back({{"id", {id.layer, id.unit}}, {"value", vector_to_json(v)}});
    }
    jp["values"] = std::move(values);
  }
  if (patch.kind == PatchKind::FromInput) jp["z"] = vector_to_json(patch.from_input);
  doc["patch"] = std::move(jp);
  return doc.dump(2) + "\n";
}

std::string to_text(const SiameseQuery& query) {
  json doc;
  doc["version"] = 1;
  doc["net"] = json::parse(to_text(query.net));
  json boxes = json::array();
  for (const auto& box : query.region.boxes) {
    json jb;
    jb["center"] = vector_to_json(box.center);
    jb["radius"] = box.radius;
    if (box.clamp_lo.size()) {
      jb["clamp_lo"] = vector_to_json(box.clamp_lo);
      jb["clamp_hi"] = vector_to_json(box.clamp_hi);
    }
    boxes.push_back(std::move(jb));
  }
  doc["region"] = std::move(boxes);
  json jm;
  switch (query.spec.metric.kind) {
    case MetricKind::LogitDiff: jm["kind"] = "logit_diff"; break;
    case MetricKind::WinnerRunner: jm["kind"] = "winner_runner"; break;
    case MetricKind::AbsMax: jm["kind"] = "abs_max"; break;
  }
  jm["delta"] = query.spec.metric.delta;
  jm["gold_class"] = query.spec.metric.gold_class;
  jm["target"] = query.spec.metric.target;
  jm["alpha_frac"] = query.spec.metric.alpha_frac;
  doc["metric"] = std::move(jm);
  json jwr = json::array();
  for (const auto& wr : query.spec.winner_runner) {
    jwr.push_back({{"target", wr.target}, {"runner", wr.runner}, {"margin", wr.margin}});
  }
  doc["winner_runner"] = std::move(jwr);
  json jw;
  jw["model_slots"] = query.wiring.model_slots;
  jw["circuit_slots"] = query.wiring.circuit_slots;
  if (query.wiring.reference) jw["reference"] = vector_to_json(*query.wiring.reference);
  doc["wiring"] = std::move(jw);
  doc["z_subset_zprime"] = query.z_subset_zprime;
  return doc.dump(2) + "\n";
}

SiameseQuery query_from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid query document: ") + e.what());
  }
  SiameseQuery q;
  q.net = network_from_text(doc.at("net").dump());
  for (const auto& jb : doc.value("region", json::array())) {
    InputRegion::Box box;
    box.center = vector_from_json(jb.at("center"));
    box.radius = jb.value("radius", 0.0);
    if (jb.contains("clamp_lo")) {
      box.clamp_lo = vector_from_json(jb["clamp_lo"]);
      box.clamp_hi = vector_from_json(jb["clamp_hi"]);
    }
    q.region.boxes.push_back(std::move(box));
  }
  const auto& jm = doc.at("metric");
  const std::string kind = jm.value("kind", "abs_max");
  if (kind == "logit_diff") {
    q.spec.metric = Metric::logit_diff(jm.value("gold_class", 0), jm.value("delta", 0.0));
  } else if (kind == "winner_runner") {
    q.spec.metric = Metric::winner_runner(jm.value("alpha_frac", 1.0), jm.value("target", -1));
  } else if (kind == "abs_max") {
    q.spec.metric = Metric::abs_max(jm.value("delta", 0.0));
  } else {
    throw ParseError("unknown metric kind '" + kind + "'");
  }
  for (const auto& jwr : doc.value("winner_runner", json::array())) {
    q.spec.winner_runner.push_back({jwr.at("target").get<int>(), jwr.at("runner").get<int>(),
                                    jwr.at("margin").get<double>()});
  }
  const auto& jw = doc.at("wiring");
  q.wiring.model_slots = jw.value("model_slots", std::vector<int>{});
  q.wiring.circuit_slots = jw.value("circuit_slots", std::vector<int>{});
  if (jw.contains("reference")) q.wiring.reference = vector_from_json(jw["reference"]);
  q.z_subset_zprime = doc.value("z_subset_zprime", true);
  return q;
}

std::string to_text(const Verdict& verdict) {
  json doc;
  doc["status"] = status_name(verdict.status);
  if (verdict.witness) doc["witness"] = vector_to_json(*verdict.witness);
  doc["violation"] = verdict.violation;
  doc["subproblems"] = verdict.subproblems;
  doc["wall_s"] = verdict.wall_s;
  if (!verdict.unknown_reason.empty()) doc["unknown_reason"] = verdict.unknown_reason;
  return doc.dump(2) + "\n";
}

std::pair<Circuit, PatchingScheme> circuit_from_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid circuit document: ") + e.what());
  }
  Circuit c;
  c.net_hash = std::stoull(doc.value("net_hash", std::string("0")), nullptr, 16);
  for (const auto& jm : doc.value("members", json::array())) {
    c.members.insert({jm[0].get<int>(), jm[1].get<int>()});
  }
  PatchingScheme p;
  const auto& jp = doc.at("patch");
  const std::string kind = jp.value("kind", "zero");
  if (kind == "zero") {
    p.kind = PatchKind::Zero;
  } else if (kind == "mean") {
    p.kind = PatchKind::Mean;
    for (const auto& jv : jp.value("values", json::array())) {
      ComponentId id{jv.at("id")[0].get<int>(), jv.at("id")[1].get<int>()};
      p.mean_values[id] = vector_from_json(jv.at("value"));
    }
  } else if (kind == "from_input") {
    p.kind = PatchKind::FromInput;
    p.from_input = vector_from_json(jp.at("z"));
  } else if (kind == "transplant") {
    p.kind = PatchKind::Transplant;
  } else {
    throw ParseError("unknown patch kind '" + kind + "'");
  }
  return {std::move(c), std::move(p)};
}

}  // namespace circuits
