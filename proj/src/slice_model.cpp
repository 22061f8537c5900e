#include "dsaf/slice_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "dsaf/topology.hpp"

namespace dsaf {

namespace {

// Maps a 64-bit draw onto [lo, hi] without relying on the standard
// library's distribution implementations, so streams are reproducible
// across toolchains.
double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

void check_range(const char* what, double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw ValidationError(std::string("invalid ") + what + " range");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<SliceRequest> generate_requests(std::uint64_t seed, std::size_t n,
                                            const GeneratorParams& params) {
  check_range("cpu", params.cpu_lo_ghz, params.cpu_hi_ghz);
  check_range("bandwidth", params.bandwidth_lo_mbps, params.bandwidth_hi_mbps);
  if (params.cpu_lo_ghz <= 0) throw ValidationError("cpu range must be positive");
  if (params.bandwidth_lo_mbps <= 0) throw ValidationError("bandwidth range must be positive");
  if (params.vnfs_per_slice == 0) throw ValidationError("slices need at least one VNF");
  if (params.isolation_limit < 1 ||
      static_cast<std::size_t>(params.isolation_limit) > params.vnfs_per_slice) {
    throw ValidationError("isolation limit out of range");
  }
  if (params.max_delay_ms && !(*params.max_delay_ms > 0)) {
    throw ValidationError("max delay must be positive");
  }
  if (params.processing_delay_ms < 0 || params.ram_gb_per_vnf < 0 || params.hdd_gb_per_vnf < 0 ||
      params.arrival_spacing_s < 0) {
    throw ValidationError("negative request parameter");
  }

  std::mt19937_64 rng(seed);
  std::vector<SliceRequest> out;
  out.reserve(n);
  const auto k = params.vnfs_per_slice;
  for (std::size_t i = 0; i < n; ++i) {
    SliceRequest r;
    r.id = i + 1;
    r.name = params.name_prefix + "-" + std::to_string(r.id);
    r.isolation_limit = params.isolation_limit;
    r.max_delay_ms = params.max_delay_ms;
    r.arrival_time_s = static_cast<double>(i) * params.arrival_spacing_s;

    std::vector<double> cpu(k);
    if (params.cpu_mode == CpuMode::kPerSlice) {
      const double slice_cpu = draw_uniform(rng, params.cpu_lo_ghz, params.cpu_hi_ghz);
      std::fill(cpu.begin(), cpu.end(), slice_cpu / static_cast<double>(k));
    } else {
      for (auto& c : cpu) c = draw_uniform(rng, params.cpu_lo_ghz, params.cpu_hi_ghz);
    }
    r.bandwidth_mbps = draw_uniform(rng, params.bandwidth_lo_mbps, params.bandwidth_hi_mbps);

    for (std::size_t v = 0; v < k; ++v) {
      VnfSpec spec;
      spec.index = v;
      spec.cpu_ghz = cpu[v];
      spec.ram_gb = params.ram_gb_per_vnf;
      spec.hdd_gb = params.hdd_gb_per_vnf;
      spec.processing_delay_ms = params.processing_delay_ms;
      if (!params.app_command.empty()) spec.app_command = params.app_command;
      r.vnfs.push_back(std::move(spec));
    }
    out.push_back(std::move(r));
  }
  return out;
}

double total_processing_delay_ms(const SliceRequest& request) {
  double total = 0.0;
  for (const auto& v : request.vnfs) total += v.processing_delay_ms;
  return total;
}

std::optional<std::string> check_request_shape(const SliceRequest& request) {
  const std::size_t n = request.vnfs.size();
  if (n == 0) return "request has no VNFs";
  if (request.isolation_limit < 1 || static_cast<std::size_t>(request.isolation_limit) > n) {
    return "isolation_limit " + std::to_string(request.isolation_limit) + " out of range 1.." +
           std::to_string(n);
  }
  if (!(request.bandwidth_mbps > 0) || !std::isfinite(request.bandwidth_mbps)) {
    return "bandwidth must be positive";
  }
  if (request.max_delay_ms && !(*request.max_delay_ms > 0)) return "max delay must be positive";
  for (std::size_t v = 0; v < n; ++v) {
    const auto& vnf = request.vnfs[v];
    const std::string tag = "VNF " + std::to_string(v);
    if (vnf.index != v) return tag + " has chain index " + std::to_string(vnf.index);
    if (!(vnf.cpu_ghz > 0) || !std::isfinite(vnf.cpu_ghz)) return tag + " needs positive CPU";
    if (vnf.ram_gb < 0 || vnf.hdd_gb < 0 || vnf.processing_delay_ms < 0) {
      return tag + " has a negative demand";
    }
  }
  return std::nullopt;
}

std::optional<std::string> validate_request(const SliceRequest& request,
                                            const Topology& topology) {
  if (auto reason = check_request_shape(request)) return reason;
  const std::size_t n = request.vnfs.size();
  const std::size_t limit = static_cast<std::size_t>(request.isolation_limit);
  const std::size_t needed = (n + limit - 1) / limit;
  if (needed > topology.hypervisor_count()) {
    return "needs " + std::to_string(needed) + " distinct hypervisors, topology has " +
           std::to_string(topology.hypervisor_count());
  }

  Amount max_cpu, max_ram, max_hdd;
  for (const auto& h : topology.hypervisors()) {
    max_cpu = std::max(max_cpu, h.cpu_capacity);
    max_ram = std::max(max_ram, h.ram_capacity);
    max_hdd = std::max(max_hdd, h.hdd_capacity);
  }
  for (std::size_t v = 0; v < n; ++v) {
    const auto& vnf = request.vnfs[v];
    const std::string tag = "VNF " + std::to_string(v);
    if (Amount::from_units(vnf.cpu_ghz) > max_cpu) {
      return tag + " needs " + format_double(vnf.cpu_ghz) + " GHz; largest hypervisor has " +
             format_double(max_cpu.units()) + " GHz";
    }
    if (Amount::from_units(vnf.ram_gb) > max_ram) {
      return tag + " needs " + format_double(vnf.ram_gb) + " GB RAM; largest hypervisor has " +
             format_double(max_ram.units());
    }
    if (Amount::from_units(vnf.hdd_gb) > max_hdd) {
      return tag + " needs " + format_double(vnf.hdd_gb) + " GB HDD; largest hypervisor has " +
             format_double(max_hdd.units());
    }
  }
  return std::nullopt;
}

void to_json(nlohmann::json& j, const VnfSpec& v) {
  j = {{"index", v.index},
       {"cpu_ghz", v.cpu_ghz},
       {"ram_gb", v.ram_gb},
       {"hdd_gb", v.hdd_gb},
       {"processing_delay_ms", v.processing_delay_ms}};
  if (v.app_command) j["app"] = *v.app_command;
}

void from_json(const nlohmann::json& j, VnfSpec& v) {
  v.index = j.value("index", std::size_t{0});
  v.cpu_ghz = j.at("cpu_ghz").get<double>();
  v.ram_gb = j.value("ram_gb", 0.0);
  v.hdd_gb = j.value("hdd_gb", 0.0);
  v.processing_delay_ms = j.value("processing_delay_ms", 0.0);
  if (j.contains("app") && j["app"].is_string()) {
    v.app_command = j["app"].get<std::string>();
  } else {
    v.app_command.reset();
  }
}

void to_json(nlohmann::json& j, const SliceRequest& r) {
  j = {{"id", r.id},
       {"name", r.name},
       {"vnfs", r.vnfs},
       {"bandwidth_mbps", r.bandwidth_mbps},
       {"isolation_limit", r.isolation_limit},
       {"max_delay_ms", r.max_delay_ms ? nlohmann::json(*r.max_delay_ms) : nlohmann::json()},
       {"arrival_time_s", r.arrival_time_s}};
}

void from_json(const nlohmann::json& j, SliceRequest& r) {
  r.id = j.value("id", RequestId{0});
  r.name = j.value("name", std::string{});
  r.vnfs = j.at("vnfs").get<std::vector<VnfSpec>>();
  // Chain order is list order; a missing index means "position".
  for (std::size_t i = 0; i < r.vnfs.size(); ++i) {
    if (!j["vnfs"][i].contains("index")) r.vnfs[i].index = i;
  }
  r.bandwidth_mbps = j.at("bandwidth_mbps").get<double>();
  r.isolation_limit = j.value("isolation_limit", 1);
  if (j.contains("max_delay_ms") && j["max_delay_ms"].is_number()) {
    r.max_delay_ms = j["max_delay_ms"].get<double>();
  } else {
    r.max_delay_ms.reset();
  }
  r.arrival_time_s = j.value("arrival_time_s", 0.0);
}

void to_json(nlohmann::json& j, const ChainPath& p) {
  j = {{"edge", p.edge}, {"from", p.from}, {"to", p.to}, {"links", p.links},
       {"delay_ms", p.delay_ms}};
}

void from_json(const nlohmann::json& j, ChainPath& p) {
  j.at("edge").get_to(p.edge);
  j.at("from").get_to(p.from);
  j.at("to").get_to(p.to);
  j.at("links").get_to(p.links);
  j.at("delay_ms").get_to(p.delay_ms);
}

void to_json(nlohmann::json& j, const VnfDemand& d) {
  j = {{"cpu_ghz", d.cpu_ghz}, {"ram_gb", d.ram_gb}, {"hdd_gb", d.hdd_gb}};
}

void from_json(const nlohmann::json& j, VnfDemand& d) {
  j.at("cpu_ghz").get_to(d.cpu_ghz);
  j.at("ram_gb").get_to(d.ram_gb);
  j.at("hdd_gb").get_to(d.hdd_gb);
}

void to_json(nlohmann::json& j, const Placement& p) {
  j = {{"request_id", p.request_id},
       {"assignment", p.assignment},
       {"paths", p.paths},
       {"demands", p.demands},
       {"bandwidth_mbps", p.bandwidth_mbps},
       {"objective_value", p.objective_value},
       {"total_delay_ms", p.total_delay_ms},
       {"solver_time_ms", p.solver_time_ms}};
}

void from_json(const nlohmann::json& j, Placement& p) {
  j.at("request_id").get_to(p.request_id);
  j.at("assignment").get_to(p.assignment);
  j.at("paths").get_to(p.paths);
  j.at("demands").get_to(p.demands);
  j.at("bandwidth_mbps").get_to(p.bandwidth_mbps);
  j.at("objective_value").get_to(p.objective_value);
  j.at("total_delay_ms").get_to(p.total_delay_ms);
  j.at("solver_time_ms").get_to(p.solver_time_ms);
}

void write_requests_jsonl(std::ostream& out, std::span<const SliceRequest> requests) {
  for (const auto& r : requests) out << nlohmann::json(r).dump() << '\n';
}

std::vector<SliceRequest> read_requests_jsonl(std::istream& in) {
  std::vector<SliceRequest> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<SliceRequest>());
    } catch (const std::exception& e) {
      throw ValidationError("request file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dsaf
