#pragma once
// Seeded random topologies and requests for property tests.

#include <random>
#include <string>
#include <vector>

#include "dsaf/topology.hpp"
#include "json.hpp"

namespace testgen {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Connected random graph: a random spanning tree over all nodes plus a few
// extra links. Delays are drawn from a small set so equal-delay ties occur.
inline nlohmann::json random_topology_document(std::mt19937_64& rng, int hypervisors,
                                               int switches, int extra_links) {
  nlohmann::json doc;
  std::vector<std::string> names;
  doc["hypervisors"] = nlohmann::json::array();
  for (int i = 0; i < hypervisors; ++i) {
    names.push_back("H" + std::to_string(i + 1));
    doc["hypervisors"].push_back({{"name", names.back()},
                                  {"cores", uniform_int(rng, 1, 8)},
                                  {"ghz_per_core", uniform(rng, 1.0, 3.0)},
                                  {"ram_gb", uniform(rng, 2.0, 16.0)},
                                  {"hdd_gb", uniform(rng, 20.0, 200.0)}});
  }
  doc["switches"] = nlohmann::json::array();
  for (int i = 0; i < switches; ++i) {
    names.push_back("S" + std::to_string(i + 1));
    doc["switches"].push_back(names.back());
  }
  static const double kDelays[] = {0.05, 0.1, 0.1, 0.2, 0.3};
  auto link = [&](int a, int b) {
    return nlohmann::json{{"a", names[a]},
                          {"b", names[b]},
                          {"bandwidth_mbps", uniform(rng, 50.0, 400.0)},
                          {"delay_ms", kDelays[uniform_int(rng, 0, 4)]}};
  };
  doc["links"] = nlohmann::json::array();
  const int n = static_cast<int>(names.size());
  for (int i = 1; i < n; ++i) doc["links"].push_back(link(i, uniform_int(rng, 0, i - 1)));
  for (int e = 0; e < extra_links && n > 1; ++e) {
    const int a = uniform_int(rng, 0, n - 1);
    int b = uniform_int(rng, 0, n - 2);
    if (b >= a) ++b;
    doc["links"].push_back(link(a, b));
  }
  return doc;
}

inline dsaf::SliceRequest random_request(std::mt19937_64& rng, dsaf::RequestId id,
                                         std::size_t vnfs, int isolation_limit) {
  dsaf::SliceRequest r;
  r.id = id;
  r.name = "r" + std::to_string(id);
  for (std::size_t v = 0; v < vnfs; ++v) {
    r.vnfs.push_back({v, uniform(rng, 0.2, 4.0), uniform(rng, 0.0, 2.0), uniform(rng, 0.0, 20.0),
                      uniform(rng, 0.0, 0.2), std::nullopt});
  }
  r.bandwidth_mbps = uniform(rng, 10.0, 150.0);
  r.isolation_limit = isolation_limit;
  if (uniform_int(rng, 0, 3) != 0) r.max_delay_ms = uniform(rng, 0.3, 1.5);
  return r;
}

}  // namespace testgen
