#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsaf/common.hpp"
#include "dsaf/slice_model.hpp"
#include "json.hpp"

namespace dsaf {

struct Hypervisor {
  HypervisorId id = 0;
  std::string name;
  Amount cpu_capacity;  // GHz
  Amount ram_capacity;  // GB
  Amount hdd_capacity;  // GB
  Amount cpu_allocated;
  Amount ram_allocated;
  Amount hdd_allocated;

  Amount cpu_free() const { return cpu_capacity - cpu_allocated; }
  Amount ram_free() const { return ram_capacity - ram_allocated; }
  Amount hdd_free() const { return hdd_capacity - hdd_allocated; }
  double cpu_utilization() const { return ratio(cpu_allocated, cpu_capacity); }

  bool operator==(const Hypervisor&) const = default;
};

/// Undirected physical link. Endpoints are Topology node indices.
struct NetLink {
  LinkId id = 0;
  std::array<NodeIndex, 2> endpoints{};
  Amount bandwidth_capacity;  // Mbps
  Amount bandwidth_allocated;
  double delay_ms = 0.0;

  Amount bandwidth_free() const { return bandwidth_capacity - bandwidth_allocated; }
  NodeIndex other_end(NodeIndex n) const { return endpoints[0] == n ? endpoints[1] : endpoints[0]; }

  bool operator==(const NetLink&) const = default;
};

/// Aggregated resources reserved by one placement.
struct Reservation {
  struct Host {
    HypervisorId id = 0;
    Amount cpu, ram, hdd;
    bool operator==(const Host&) const = default;
  };
  struct Link {
    LinkId id = 0;
    Amount bandwidth;
    bool operator==(const Link&) const = default;
  };
  std::vector<Host> hosts;  // ascending id, one entry per used hypervisor
  std::vector<Link> links;  // ascending id, one entry per used link

  bool operator==(const Reservation&) const = default;
};

Reservation reservation_for(const Placement& placement);

/// Physical substrate: hypervisors, switches and links, together with the
/// residual-resource counters. Nodes are indexed hypervisors first (index ==
/// hypervisor id), then switches.
class Topology {
 public:
  const std::vector<Hypervisor>& hypervisors() const { return hypervisors_; }
  const std::vector<std::string>& switches() const { return switches_; }
  const std::vector<NetLink>& links() const { return links_; }
  const std::vector<LinkId>& incident_links(NodeIndex node) const { return adjacency_.at(node); }

  std::size_t hypervisor_count() const { return hypervisors_.size(); }
  std::size_t node_count() const { return hypervisors_.size() + switches_.size(); }
  const std::string& node_name(NodeIndex node) const;
  std::optional<NodeIndex> find_node(std::string_view name) const;
  std::optional<HypervisorId> find_hypervisor(std::string_view name) const;

  Amount total_cpu_capacity() const;
  Amount total_ram_capacity() const;
  Amount total_hdd_capacity() const;

  bool is_applied(RequestId id) const { return applied_.contains(id); }
  const std::map<RequestId, Reservation>& applied() const { return applied_; }

  /// Hash of the static structure (names, wiring, capacities, delays);
  /// independent of allocations.
  std::uint64_t structure_fingerprint() const;

  /// Canonical serialization of the allocated counters, byte-identical for
  /// equal residual state.
  std::string residual_snapshot() const;

  /// Topology document form (capacities only).
  nlohmann::json to_document() const;

  bool operator==(const Topology&) const = default;

 private:
  friend Topology load_topology(const nlohmann::json& document);
  friend void apply_placement(Topology& topology, const Placement& placement);
  friend void revert_placement(Topology& topology, const Placement& placement);

  std::vector<Hypervisor> hypervisors_;
  std::vector<std::string> switches_;
  std::vector<NetLink> links_;
  std::vector<std::vector<LinkId>> adjacency_;
  std::map<RequestId, Reservation> applied_;
};

/// Default per-core frequency: 74.8 GHz spread over 28 testbed cores.
inline constexpr double kDefaultGhzPerCore = 74.8 / 28.0;

/// Parses and validates a topology document. Throws TopologyError naming the
/// offending element.
Topology load_topology(const nlohmann::json& document);
Topology load_topology_text(std::string_view text);
Topology load_topology_file(const std::filesystem::path& path);

struct HostSpec {
  std::string name;
  double cores = 4;
  double ghz_per_core = kDefaultGhzPerCore;
  double ram_gb = 8;
  double hdd_gb = 200;
};

/// Single-switch star: every host attached to switch "S1".
Topology make_star_topology(const std::vector<HostSpec>& hosts, double bandwidth_mbps = 1000.0,
                            double delay_ms = 0.1);

/// P1-P3 (4 cores, 8 GB), P4-P5 (8 cores, 8 GB), 1 Gbps star links.
Topology paper_testbed();

/// Throws TopologyError listing every violated capacity when the placement
/// does not fit; the topology is left untouched in that case.
void apply_placement(Topology& topology, const Placement& placement);

/// Exact inverse of apply_placement. Throws TopologyError if the placement is
/// not currently applied.
void revert_placement(Topology& topology, const Placement& placement);

/// Route between two hypervisors.
struct Route {
  std::vector<LinkId> links;
  double delay_ms = 0.0;

  bool operator==(const Route&) const = default;
};

class PathTable {
 public:
  const Route& route(HypervisorId from, HypervisorId to) const;
  std::size_t hypervisor_count() const { return hypervisor_count_; }
  std::uint64_t topology_fingerprint() const { return fingerprint_; }

 private:
  friend PathTable compute_path_table(const Topology& topology);

  std::size_t hypervisor_count_ = 0;
  std::uint64_t fingerprint_ = 0;
  std::vector<Route> routes_;  // row-major [from][to]
};

/// All-pairs minimum-delay routes between hypervisors. Equal-delay routes
/// are broken by the lexicographically smallest link-id sequence.
PathTable compute_path_table(const Topology& topology);

}  // namespace dsaf
