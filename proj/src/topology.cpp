#include "dsaf/topology.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace dsaf {

Amount Amount::from_units(double units) {
  return Amount::from_micros(std::llround(units * static_cast<double>(kScale)));
}

namespace {

constexpr double kRouteTieEpsilonMs = 1e-12;

double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw TopologyError(where + ": missing numeric field '" + key + "'");
  }
  double v = it->get<double>();
  if (!std::isfinite(v) || v < 0) {
    throw TopologyError(where + ": field '" + key + "' must be a non-negative number");
  }
  return v;
}

double optional_number(const nlohmann::json& obj, const char* key, double fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return require_number(obj, key, where);
}

std::string require_name(const nlohmann::json& obj, const std::string& where) {
  auto it = obj.find("name");
  if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw TopologyError(where + ": missing 'name'");
  }
  return it->get<std::string>();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

const std::string& Topology::node_name(NodeIndex node) const {
  if (node < hypervisors_.size()) return hypervisors_[node].name;
  return switches_.at(node - hypervisors_.size());
}

std::optional<NodeIndex> Topology::find_node(std::string_view name) const {
  for (NodeIndex i = 0; i < node_count(); ++i) {
    if (node_name(i) == name) return i;
  }
  return std::nullopt;
}

std::optional<HypervisorId> Topology::find_hypervisor(std::string_view name) const {
  for (const auto& h : hypervisors_) {
    if (h.name == name) return h.id;
  }
  return std::nullopt;
}

Amount Topology::total_cpu_capacity() const {
  Amount total;
  for (const auto& h : hypervisors_) total += h.cpu_capacity;
  return total;
}

Amount Topology::total_ram_capacity() const {
  Amount total;
  for (const auto& h : hypervisors_) total += h.ram_capacity;
  return total;
}

Amount Topology::total_hdd_capacity() const {
  Amount total;
  for (const auto& h : hypervisors_) total += h.hdd_capacity;
  return total;
}

nlohmann::json Topology::to_document() const {
  nlohmann::json doc;
  doc["hypervisors"] = nlohmann::json::array();
  for (const auto& h : hypervisors_) {
    doc["hypervisors"].push_back({{"name", h.name},
                                  {"cores", 1},
                                  {"ghz_per_core", h.cpu_capacity.units()},
                                  {"ram_gb", h.ram_capacity.units()},
                                  {"hdd_gb", h.hdd_capacity.units()}});
  }
  doc["switches"] = switches_;
  doc["links"] = nlohmann::json::array();
  for (const auto& l : links_) {
    doc["links"].push_back({{"a", node_name(l.endpoints[0])},
                            {"b", node_name(l.endpoints[1])},
                            {"bandwidth_mbps", l.bandwidth_capacity.units()},
                            {"delay_ms", l.delay_ms}});
  }
  return doc;
}

std::uint64_t Topology::structure_fingerprint() const {
  nlohmann::json doc = to_document();
  // Exact capacities, not the rounded display form.
  for (std::size_t i = 0; i < hypervisors_.size(); ++i) {
    doc["hypervisors"][i]["cpu_micros"] = hypervisors_[i].cpu_capacity.micros();
  }
  return fnv1a(doc.dump());
}

std::string Topology::residual_snapshot() const {
  nlohmann::json snap;
  snap["hypervisors"] = nlohmann::json::array();
  for (const auto& h : hypervisors_) {
    snap["hypervisors"].push_back({{"name", h.name},
                                   {"cpu", h.cpu_allocated.micros()},
                                   {"ram", h.ram_allocated.micros()},
                                   {"hdd", h.hdd_allocated.micros()}});
  }
  snap["links"] = nlohmann::json::array();
  for (const auto& l : links_) {
    snap["links"].push_back({{"id", l.id}, {"bandwidth", l.bandwidth_allocated.micros()}});
  }
  snap["applied"] = nlohmann::json::array();
  for (const auto& [id, _] : applied_) snap["applied"].push_back(id);
  return snap.dump();
}

Topology load_topology(const nlohmann::json& document) {
  if (!document.is_object()) throw TopologyError("topology document must be a JSON object");
  Topology t;

  const auto hyps = document.value("hypervisors", nlohmann::json::array());
  if (!hyps.is_array() || hyps.empty()) {
    throw TopologyError("topology document has no hypervisors");
  }
  std::map<std::string, NodeIndex> names;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto& doc = hyps[i];
    std::string where = "hypervisor #" + std::to_string(i);
    if (!doc.is_object()) throw TopologyError(where + ": expected an object");
    Hypervisor h;
    h.id = i;
    h.name = require_name(doc, where);
    where = "hypervisor '" + h.name + "'";
    if (names.contains(h.name)) throw TopologyError("duplicate node name '" + h.name + "'");
    names[h.name] = i;
    double cores = require_number(doc, "cores", where);
    double ghz = optional_number(doc, "ghz_per_core", kDefaultGhzPerCore, where);
    h.cpu_capacity = Amount::from_units(cores * ghz);
    h.ram_capacity = Amount::from_units(require_number(doc, "ram_gb", where));
    h.hdd_capacity = Amount::from_units(require_number(doc, "hdd_gb", where));
    t.hypervisors_.push_back(std::move(h));
  }

  const auto sws = document.value("switches", nlohmann::json::array());
  if (!sws.is_array()) throw TopologyError("'switches' must be an array");
  for (const auto& s : sws) {
    std::string name;
    if (s.is_string()) {
      name = s.get<std::string>();
    } else if (s.is_object()) {
      name = require_name(s, "switch");
    } else {
      throw TopologyError("switch entries must be names");
    }
    if (name.empty()) throw TopologyError("switch with empty name");
    if (names.contains(name)) throw TopologyError("duplicate node name '" + name + "'");
    names[name] = t.hypervisors_.size() + t.switches_.size();
    t.switches_.push_back(name);
  }

  const auto links = document.value("links", nlohmann::json::array());
  if (!links.is_array()) throw TopologyError("'links' must be an array");
  t.adjacency_.assign(t.node_count(), {});
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto& doc = links[i];
    std::string where = "link #" + std::to_string(i);
    if (!doc.is_object()) throw TopologyError(where + ": expected an object");
    NetLink l;
    l.id = i;
    for (int end = 0; end < 2; ++end) {
      const char* key = end == 0 ? "a" : "b";
      if (!doc.contains(key) || !doc[key].is_string()) {
        throw TopologyError(where + ": missing endpoint '" + key + "'");
      }
      auto name = doc[key].get<std::string>();
      auto it = names.find(name);
      if (it == names.end()) throw TopologyError(where + ": unknown node '" + name + "'");
      l.endpoints[end] = it->second;
    }
    if (l.endpoints[0] == l.endpoints[1]) {
      throw TopologyError(where + ": both endpoints are '" + t.node_name(l.endpoints[0]) + "'");
    }
    l.bandwidth_capacity = Amount::from_units(require_number(doc, "bandwidth_mbps", where));
    l.delay_ms = optional_number(doc, "delay_ms", 0.1, where);
    t.adjacency_[l.endpoints[0]].push_back(l.id);
    t.adjacency_[l.endpoints[1]].push_back(l.id);
    t.links_.push_back(l);
  }

  // Every hypervisor must be reachable from the first one.
  std::vector<bool> seen(t.node_count(), false);
  std::vector<NodeIndex> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    NodeIndex n = stack.back();
    stack.pop_back();
    for (LinkId lid : t.adjacency_[n]) {
      NodeIndex m = t.links_[lid].other_end(n);
      if (!seen[m]) {
        seen[m] = true;
        stack.push_back(m);
      }
    }
  }
  for (const auto& h : t.hypervisors_) {
    if (!seen[h.id]) {
      throw TopologyError("hypervisor '" + h.name + "' is disconnected from '" +
                          t.hypervisors_[0].name + "'");
    }
  }
  return t;
}

Topology load_topology_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw TopologyError(std::string("malformed topology document: ") + e.what());
  }
  return load_topology(doc);
}

Topology load_topology_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open topology file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_topology_text(buf.str());
}

Topology make_star_topology(const std::vector<HostSpec>& hosts, double bandwidth_mbps,
                            double delay_ms) {
  nlohmann::json doc;
  doc["hypervisors"] = nlohmann::json::array();
  doc["switches"] = {"S1"};
  doc["links"] = nlohmann::json::array();
  for (const auto& h : hosts) {
    doc["hypervisors"].push_back({{"name", h.name},
                                  {"cores", h.cores},
                                  {"ghz_per_core", h.ghz_per_core},
                                  {"ram_gb", h.ram_gb},
                                  {"hdd_gb", h.hdd_gb}});
    doc["links"].push_back(
        {{"a", h.name}, {"b", "S1"}, {"bandwidth_mbps", bandwidth_mbps}, {"delay_ms", delay_ms}});
  }
  return load_topology(doc);
}

Topology paper_testbed() {
  return make_star_topology({{"P1", 4}, {"P2", 4}, {"P3", 4}, {"P4", 8}, {"P5", 8}});
}

Reservation reservation_for(const Placement& placement) {
  if (placement.assignment.size() != placement.demands.size()) {
    throw TopologyError("placement for request " + std::to_string(placement.request_id) +
                        " has mismatched assignment and demand lists");
  }
  std::map<HypervisorId, Reservation::Host> hosts;
  for (std::size_t v = 0; v < placement.assignment.size(); ++v) {
    auto& h = hosts[placement.assignment[v]];
    h.id = placement.assignment[v];
    h.cpu += Amount::from_units(placement.demands[v].cpu_ghz);
    h.ram += Amount::from_units(placement.demands[v].ram_gb);
    h.hdd += Amount::from_units(placement.demands[v].hdd_gb);
  }
  const Amount bw = Amount::from_units(placement.bandwidth_mbps);
  std::map<LinkId, Reservation::Link> links;
  for (const auto& path : placement.paths) {
    for (LinkId lid : path.links) {
      auto& l = links[lid];
      l.id = lid;
      l.bandwidth += bw;
    }
  }
  Reservation r;
  for (auto& [_, h] : hosts) r.hosts.push_back(h);
  for (auto& [_, l] : links) r.links.push_back(l);
  return r;
}

void apply_placement(Topology& topology, const Placement& placement) {
  const RequestId id = placement.request_id;
  if (topology.applied_.contains(id)) {
    throw TopologyError("request " + std::to_string(id) + " is already applied");
  }
  Reservation r = reservation_for(placement);
  std::vector<std::string> violations;
  auto check = [&](const std::string& what, Amount need, Amount free) {
    if (need.micros() < 0) violations.push_back(what + " has a negative demand");
    if (need > free) {
      std::ostringstream os;
      os << what << " needs " << need.units() << " but only " << free.units() << " is free";
      violations.push_back(os.str());
    }
  };
  for (const auto& h : r.hosts) {
    if (h.id >= topology.hypervisor_count()) {
      violations.push_back("unknown hypervisor id " + std::to_string(h.id));
      continue;
    }
    const auto& hv = topology.hypervisors_[h.id];
    check(hv.name + " cpu", h.cpu, hv.cpu_free());
    check(hv.name + " ram", h.ram, hv.ram_free());
    check(hv.name + " hdd", h.hdd, hv.hdd_free());
  }
  for (const auto& l : r.links) {
    if (l.id >= topology.links_.size()) {
      violations.push_back("unknown link id " + std::to_string(l.id));
      continue;
    }
    check("link " + std::to_string(l.id) + " bandwidth", l.bandwidth,
          topology.links_[l.id].bandwidth_free());
  }
  if (!violations.empty()) {
    std::string msg = "placement for request " + std::to_string(id) + " does not fit:";
    for (const auto& v : violations) msg += " [" + v + "]";
    throw TopologyError(msg);
  }
  for (const auto& h : r.hosts) {
    auto& hv = topology.hypervisors_[h.id];
    hv.cpu_allocated += h.cpu;
    hv.ram_allocated += h.ram;
    hv.hdd_allocated += h.hdd;
  }
  for (const auto& l : r.links) topology.links_[l.id].bandwidth_allocated += l.bandwidth;
  topology.applied_.emplace(id, std::move(r));
}

void revert_placement(Topology& topology, const Placement& placement) {
  auto it = topology.applied_.find(placement.request_id);
  if (it == topology.applied_.end()) {
    throw TopologyError("request " + std::to_string(placement.request_id) +
                        " is not applied; nothing to revert");
  }
  // The stored reservation, not the argument, is subtracted so revert is an
  // exact inverse even if the caller's copy was altered.
  for (const auto& h : it->second.hosts) {
    auto& hv = topology.hypervisors_[h.id];
    hv.cpu_allocated -= h.cpu;
    hv.ram_allocated -= h.ram;
    hv.hdd_allocated -= h.hdd;
  }
  for (const auto& l : it->second.links) {
    topology.links_[l.id].bandwidth_allocated -= l.bandwidth;
  }
  topology.applied_.erase(it);
}

const Route& PathTable::route(HypervisorId from, HypervisorId to) const {
  if (from >= hypervisor_count_ || to >= hypervisor_count_) {
    throw TopologyError("route endpoint out of range");
  }
  return routes_[from * hypervisor_count_ + to];
}

PathTable compute_path_table(const Topology& topology) {
  const std::size_t n = topology.node_count();
  const std::size_t hv = topology.hypervisor_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  PathTable table;
  table.hypervisor_count_ = hv;
  table.fingerprint_ = topology.structure_fingerprint();
  table.routes_.resize(hv * hv);

  for (HypervisorId src = 0; src < hv; ++src) {
    std::vector<double> dist(n, kInf);
    std::vector<std::vector<LinkId>> seq(n);
    std::vector<bool> done(n, false);
    dist[src] = 0.0;

    auto better = [](double d1, const std::vector<LinkId>& s1, double d2,
                     const std::vector<LinkId>& s2) {
      if (d1 < d2 - kRouteTieEpsilonMs) return true;
      if (d1 > d2 + kRouteTieEpsilonMs) return false;
      return s1 < s2;
    };

    for (;;) {
      std::optional<NodeIndex> u;
      for (NodeIndex i = 0; i < n; ++i) {
        if (done[i] || dist[i] == kInf) continue;
        if (!u || better(dist[i], seq[i], dist[*u], seq[*u])) u = i;
      }
      if (!u) break;
      done[*u] = true;
      for (LinkId lid : topology.incident_links(*u)) {
        const auto& link = topology.links()[lid];
        NodeIndex v = link.other_end(*u);
        if (done[v]) continue;
        double cand = dist[*u] + link.delay_ms;
        std::vector<LinkId> cand_seq = seq[*u];
        cand_seq.push_back(lid);
        if (dist[v] == kInf || better(cand, cand_seq, dist[v], seq[v])) {
          dist[v] = cand;
          seq[v] = std::move(cand_seq);
        }
      }
    }

    for (HypervisorId dst = 0; dst < hv; ++dst) {
      if (dist[dst] == kInf) {
        throw TopologyError("no path between '" + topology.node_name(src) + "' and '" +
                            topology.node_name(dst) + "'");
      }
      table.routes_[src * hv + dst] = Route{seq[dst], dist[dst]};
    }
  }
  return table;
}

}  // namespace dsaf
