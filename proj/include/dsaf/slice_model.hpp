#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsaf/common.hpp"
#include "json.hpp"

namespace dsaf {

class Topology;

struct VnfSpec {
  std::size_t index = 0;
  double cpu_ghz = 0.0;
  double ram_gb = 0.0;
  double hdd_gb = 0.0;
  double processing_delay_ms = 0.0;
  std::optional<std::string> app_command;

  bool operator==(const VnfSpec&) const = default;
};

/// A requested slice: an ordered VNF chain. Traffic flows vnfs[0] -> vnfs[1]
/// -> ..., and every hop reserves bandwidth_mbps.
struct SliceRequest {
  RequestId id = 0;
  std::string name;
  std::vector<VnfSpec> vnfs;
  double bandwidth_mbps = 0.0;
  // Maximum number of this slice's VNFs that may share one hypervisor.
  int isolation_limit = 1;
  std::optional<double> max_delay_ms;
  double arrival_time_s = 0.0;

  bool operator==(const SliceRequest&) const = default;
};

/// Route reserved for one chain edge (vnf `edge` -> vnf `edge + 1`).
struct ChainPath {
  std::size_t edge = 0;
  HypervisorId from = 0;
  HypervisorId to = 0;
  std::vector<LinkId> links;
  double delay_ms = 0.0;

  bool operator==(const ChainPath&) const = default;
};

struct VnfDemand {
  double cpu_ghz = 0.0;
  double ram_gb = 0.0;
  double hdd_gb = 0.0;

  bool operator==(const VnfDemand&) const = default;
};

/// A solved allocation. Carries the demands it reserves so that it can be
/// applied to (or reverted from) a topology without the original request.
struct Placement {
  RequestId request_id = 0;
  std::vector<HypervisorId> assignment;  // vnf index -> hypervisor
  std::vector<ChainPath> paths;
  std::vector<VnfDemand> demands;        // vnf index -> demand
  double bandwidth_mbps = 0.0;
  double objective_value = 0.0;
  double total_delay_ms = 0.0;
  double solver_time_ms = 0.0;

  bool operator==(const Placement&) const = default;
};

enum class CpuMode { kPerSlice, kPerVnf };

/// Request distribution. Defaults reproduce the testbed experiment
/// parameters (3 VNFs, 0.75-2 GHz per slice, 40-60 Mbps, 3 s spacing).
struct GeneratorParams {
  std::size_t vnfs_per_slice = 3;
  double cpu_lo_ghz = 0.75;
  double cpu_hi_ghz = 2.0;
  CpuMode cpu_mode = CpuMode::kPerSlice;
  double bandwidth_lo_mbps = 40.0;
  double bandwidth_hi_mbps = 60.0;
  int isolation_limit = 3;
  std::optional<double> max_delay_ms = 5.0;
  double processing_delay_ms = 0.1;
  double ram_gb_per_vnf = 0.125;
  double hdd_gb_per_vnf = 2.0;
  double arrival_spacing_s = 3.0;
  std::string app_command = "iperf3 -s";
  std::string name_prefix = "slice";
};

std::vector<SliceRequest> generate_requests(std::uint64_t seed, std::size_t n,
                                            const GeneratorParams& params = {});

/// Well-formedness only (chain indices, positive demands, isolation limit
/// within 1..|vnfs|); independent of any topology.
std::optional<std::string> check_request_shape(const SliceRequest& request);

/// Returns a rejection reason for structurally impossible requests, or
/// nullopt when the request may be handed to an allocator.
std::optional<std::string> validate_request(const SliceRequest& request,
                                            const Topology& topology);

/// Sum of all VNF processing delays of the chain.
double total_processing_delay_ms(const SliceRequest& request);

void to_json(nlohmann::json& j, const VnfSpec& v);
void from_json(const nlohmann::json& j, VnfSpec& v);
void to_json(nlohmann::json& j, const SliceRequest& r);
void from_json(const nlohmann::json& j, SliceRequest& r);
void to_json(nlohmann::json& j, const ChainPath& p);
void from_json(const nlohmann::json& j, ChainPath& p);
void to_json(nlohmann::json& j, const VnfDemand& d);
void from_json(const nlohmann::json& j, VnfDemand& d);
void to_json(nlohmann::json& j, const Placement& p);
void from_json(const nlohmann::json& j, Placement& p);

/// JSON-lines request files: one request object per line.
void write_requests_jsonl(std::ostream& out, std::span<const SliceRequest> requests);
std::vector<SliceRequest> read_requests_jsonl(std::istream& in);

}  // namespace dsaf
