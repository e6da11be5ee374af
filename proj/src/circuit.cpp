#include "circuits/circuit.hpp"

namespace circuits {

PatchingScheme PatchingScheme::mean(std::map<ComponentId, Vec> values) {
  PatchingScheme p;
  p.kind = PatchKind::Mean;
  p.mean_values = std::move(values);
  return p;
}

PatchingScheme PatchingScheme::from(Vec z) {
  PatchingScheme p;
  p.kind = PatchKind::FromInput;
  p.from_input = std::move(z);
  return p;
}

PatchingScheme PatchingScheme::transplant() {
  PatchingScheme p;
  p.kind = PatchKind::Transplant;
  return p;
}

std::set<ComponentId> all_components(const Network& net) {
  std::set<ComponentId> out;
  for (const auto& c : net.components) out.insert(c.id);
  return out;
}

std::set<ComponentId> complement(const Network& net, const std::set<ComponentId>& members) {
  std::set<ComponentId> out;
  for (const auto& c : net.components) {
    if (!members.count(c.id)) out.insert(c.id);
  }
  return out;
}

std::map<ComponentId, Vec> resolve_patch(const Network& net,
                                         const std::set<ComponentId>& patched,
                                         const PatchingScheme& patch) {
  std::map<ComponentId, Vec> values;
  switch (patch.kind) {
    case PatchKind::Zero:
      for (const auto& id : patched) {
        values[id] = Vec::Zero(net.component(id).site.width);
      }
      break;
    case PatchKind::Mean:
      for (const auto& id : patched) {
        auto it = patch.mean_values.find(id);
        if (it == patch.mean_values.end()) {
          throw InputError("mean patch misses component " + to_string(id));
        }
        if (it->second.size() != net.component(id).site.width) {
          throw InputError("mean patch width mismatch for " + to_string(id));
        }
        values[id] = it->second;
      }
      break;
    case PatchKind::FromInput: {
      if (patch.from_input.size() != net.input_dim()) {
        throw InputError("from-input patch has wrong input length");
      }
      Activations acts;
      forward(net, patch.from_input, &acts);
      for (const auto& id : patched) {
        const auto& site = net.component(id).site;
        values[id] = acts.values[site.node].segment(site.offset, site.width);
      }
      break;
    }
    case PatchKind::Transplant:
      throw InputError("transplant patching is only valid inside encodings");
  }
  return values;
}

Vec masked_forward(const Network& net, const Circuit& circuit,
                   const PatchingScheme& patch, const Vec& x) {
  for (const auto& id : circuit.members) net.component(id);  // membership check
  const std::set<ComponentId> patched = complement(net, circuit.members);
  const auto values = resolve_patch(net, patched, patch);

  // Per-node overlays, applied right after a node's output is computed.
  std::vector<std::vector<std::pair<ComponentSite, const Vec*>>> overlays(net.nodes.size());
  for (const auto& [id, v] : values) {
    const auto& site = net.component(id).site;
    overlays[site.node].push_back({site, &v});
  }

  if (x.size() != net.input_dim()) {
    throw InputError("masked_forward: input length mismatch");
  }
  std::vector<Vec> vals(net.nodes.size());
  for (int i = 0; i < static_cast<int>(net.nodes.size()); ++i) {
    const Node& n = net.nodes[i];
    switch (n.kind) {
      case NodeKind::Input:
        vals[i] = x;
        break;
      case NodeKind::Affine: {
        Vec in(source_width_sum(net, n));
        int at = 0;
        for (int s : n.sources) {
          in.segment(at, vals[s].size()) = vals[s];
          at += static_cast<int>(vals[s].size());
        }
        vals[i] = n.weights * in + n.bias;
        break;
      }
      case NodeKind::Relu:
        vals[i] = vals[n.sources[0]].cwiseMax(0.0);
        break;
      case NodeKind::Copy:
        vals[i] = vals[n.sources[0]];
        break;
      case NodeKind::ConstantFix:
        vals[i] = n.value;
        break;
      case NodeKind::Concat: {
        Vec in(n.width);
        int at = 0;
        for (int s : n.sources) {
          in.segment(at, vals[s].size()) = vals[s];
          at += static_cast<int>(vals[s].size());
        }
        vals[i] = in;
        break;
      }
      case NodeKind::Subtract:
        vals[i] = vals[n.sources[0]] - vals[n.sources[1]];
        break;
    }
    for (const auto& [site, v] : overlays[i]) {
      vals[i].segment(site.offset, site.width) = *v;
    }
  }
  return vals[net.output_node];
}

std::map<ComponentId, Vec> mean_patch_values(const Network& net,
                                             const std::vector<Vec>& samples) {
  if (samples.empty()) throw InputError("mean_patch_values: empty sample set");
  std::map<ComponentId, Vec> sums;
  for (const auto& c : net.components) {
    sums[c.id] = Vec::Zero(c.site.width);
  }
  for (const Vec& x : samples) {
    Activations acts;
    forward(net, x, &acts);
    for (const auto& c : net.components) {
      sums[c.id] += acts.values[c.site.node].segment(c.site.offset, c.site.width);
    }
  }
  for (auto& [id, v] : sums) v /= static_cast<double>(samples.size());
  return sums;
}

}  // namespace circuits
