// Python bindings. Structured values cross the boundary as plain dicts with
// the same layout as the JSON request files and the HTTP API.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dsaf/baseline.hpp"
#include "dsaf/harness.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

dsaf::Topology resolve_topology(const std::optional<std::string>& path) {
  return path ? dsaf::load_topology_file(*path) : dsaf::paper_testbed();
}

dsaf::Weights weights(double alpha, double beta) {
  dsaf::Weights w;
  w.alpha = alpha;
  w.beta = beta;
  return w;
}

py::dict outcome_dict(const dsaf::SolveOutcome& out) {
  py::dict d;
  d["feasible"] = out.feasible();
  d["solver_time_ms"] = out.solver_time_ms;
  if (out.feasible()) {
    d["placement"] = to_py(out.placement());
  } else {
    d["binding"] = std::string(dsaf::to_string(out.infeasible().binding));
    d["detail"] = out.infeasible().detail;
  }
  return d;
}

py::dict report_dict(const dsaf::ScenarioReport& r) {
  py::dict d;
  d["label"] = r.label();
  d["scenario"] = std::string(dsaf::to_string(r.scenario));
  d["allocator"] = std::string(dsaf::to_string(r.allocator));
  d["seed"] = r.seed;
  d["requests"] = r.n_requests;
  d["allocated"] = r.allocated_count;
  d["rejected"] = r.rejected_count;
  d["failed"] = r.failed_count;
  d["allocated_pct"] = r.allocated_pct;
  d["mean_processing_ms"] = r.mean_processing_ms;
  d["mean_computation_ms"] = r.mean_computation_ms;
  d["balance"] = r.balance;
  d["delay_violations"] = r.delay_violations;
  d["replay_consistent"] = r.replay_consistent;
  d["hypervisors"] = r.hypervisor_names;
  d["trajectory"] = r.trajectory;
  d["records"] = to_py(json(r.records));
  return d;
}

py::dict residuals(const dsaf::Topology& t) {
  py::dict d;
  for (const auto& h : t.hypervisors()) {
    py::dict row;
    row["cpu_free_ghz"] = h.cpu_free().units();
    row["ram_free_gb"] = h.ram_free().units();
    row["hdd_free_gb"] = h.hdd_free().units();
    row["cpu_utilization"] = h.cpu_utilization();
    d[py::str(h.name)] = row;
  }
  return d;
}

// Owns the orchestrator behind a handle Python can keep.
class PyOrchestrator {
 public:
  PyOrchestrator(std::optional<std::string> topology, std::optional<std::string> event_log,
                 double alpha, double beta) {
    dsaf::OrchestratorConfig cfg;
    cfg.weights = weights(alpha, beta);
    orch_ = std::make_unique<dsaf::Orchestrator>(
        resolve_topology(topology),
        event_log ? dsaf::Store::open(*event_log) : dsaf::Store::in_memory(), cfg);
  }

  py::object submit(const py::dict& request, const std::string& allocator) {
    const auto req = from_py(request).get<dsaf::SliceRequest>();
    const auto alloc = dsaf::parse_allocator(allocator);
    dsaf::RequestRecord rec;
    {
      py::gil_scoped_release release;
      rec = orch_->submit(req, alloc);
    }
    return to_py(rec);
  }

  py::object deallocate(dsaf::RequestId id) { return to_py(orch_->deallocate(id)); }
  py::object records() const { return to_py(json(orch_->records())); }
  py::dict residual_state() const { return residuals(orch_->topology()); }
  std::optional<std::string> audit() const { return orch_->audit_conservation(); }

 private:
  std::unique_ptr<dsaf::Orchestrator> orch_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dynamic slice allocation: solver, baseline, orchestrator and experiment harness";

  auto base_error = py::register_exception<dsaf::Error>(m, "DsafError");
  py::register_exception<dsaf::ConfigError>(m, "ConfigError", base_error.ptr());
  py::register_exception<dsaf::ValidationError>(m, "ValidationError", base_error.ptr());
  py::register_exception<dsaf::TopologyError>(m, "TopologyError", base_error.ptr());
  py::register_exception<dsaf::OrchestratorError>(m, "OrchestratorError", base_error.ptr());
  py::register_exception<dsaf::StoreError>(m, "StoreError", base_error.ptr());

  m.def(
      "generate_requests",
      [](std::uint64_t seed, std::size_t n, int isolation_limit, bool per_vnf,
         std::optional<double> max_delay_ms) {
        dsaf::GeneratorParams p;
        p.isolation_limit = isolation_limit;
        p.cpu_mode = per_vnf ? dsaf::CpuMode::kPerVnf : dsaf::CpuMode::kPerSlice;
        p.max_delay_ms = max_delay_ms;
        return to_py(json(dsaf::generate_requests(seed, n, p)));
      },
      py::arg("seed"), py::arg("n") = 34, py::arg("isolation_limit") = 3,
      py::arg("per_vnf") = false, py::arg("max_delay_ms") = 5.0);

  m.def(
      "solve",
      [](const py::dict& request, std::optional<std::string> topology, double alpha, double beta) {
        const dsaf::Topology t = resolve_topology(topology);
        const auto req = from_py(request).get<dsaf::SliceRequest>();
        return outcome_dict(
            dsaf::solve(dsaf::build_instance(req, t, dsaf::compute_path_table(t), weights(alpha, beta))));
      },
      "Optimal placement of one request on an empty topology.", py::arg("request"),
      py::arg("topology") = py::none(), py::arg("alpha") = 1.0, py::arg("beta") = 0.1);

  m.def(
      "fcfsfa",
      [](const py::dict& request, std::optional<std::string> topology) {
        const dsaf::Topology t = resolve_topology(topology);
        const auto req = from_py(request).get<dsaf::SliceRequest>();
        return outcome_dict(dsaf::fcfsfa_allocate(req, t, dsaf::compute_path_table(t)));
      },
      py::arg("request"), py::arg("topology") = py::none());

  m.def(
      "run_scenario",
      [](const std::string& scenario, const std::string& allocator, std::uint64_t seed,
         std::size_t requests, std::optional<std::string> topology, double alpha, double beta,
         std::optional<std::string> out) {
        dsaf::ScenarioConfig cfg;
        cfg.scenario = dsaf::parse_scenario(scenario);
        cfg.allocator = dsaf::parse_allocator(allocator);
        cfg.seed = seed;
        cfg.n_requests = requests;
        if (topology) cfg.topology_path = *topology;
        cfg.weights = weights(alpha, beta);
        if (out) cfg.out_dir = *out;
        dsaf::ScenarioReport report;
        {
          py::gil_scoped_release release;
          report = dsaf::run_scenario(cfg);
        }
        return report_dict(report);
      },
      py::arg("scenario") = "k3", py::arg("allocator") = "dsaf", py::arg("seed") = 1,
      py::arg("requests") = 34, py::arg("topology") = py::none(), py::arg("alpha") = 1.0,
      py::arg("beta") = 0.1, py::arg("out") = py::none());

  m.def(
      "compare",
      [](std::uint64_t seed, std::size_t requests, std::optional<std::string> topology) {
        dsaf::ScenarioConfig base;
        base.seed = seed;
        base.n_requests = requests;
        if (topology) base.topology_path = *topology;
        const auto table = dsaf::compare(dsaf::paper_matrix(base));
        py::list rows;
        for (const auto& r : table.rows) {
          py::dict d;
          d["scenario"] = std::string(dsaf::to_string(r.scenario));
          d["allocator"] = std::string(dsaf::to_string(r.allocator));
          d["allocated"] = r.allocated_count;
          d["allocated_pct"] = r.allocated_pct;
          d["mean_processing_ms"] = r.mean_processing_ms;
          d["mean_computation_ms"] = r.mean_computation_ms;
          d["balance"] = r.balance;
          d["delta_allocated_pct"] = r.delta_allocated_pct;
          d["delta_balance"] = r.delta_balance;
          rows.append(d);
        }
        return rows;
      },
      "K1-K3 x (dsaf, fcfsfa) for one seed.", py::arg("seed") = 1, py::arg("requests") = 34,
      py::arg("topology") = py::none());

  py::class_<PyOrchestrator>(m, "Orchestrator")
      .def(py::init<std::optional<std::string>, std::optional<std::string>, double, double>(),
           py::arg("topology") = py::none(), py::arg("event_log") = py::none(),
           py::arg("alpha") = 1.0, py::arg("beta") = 0.1)
      .def("submit", &PyOrchestrator::submit, py::arg("request"), py::arg("allocator") = "dsaf")
      .def("deallocate", &PyOrchestrator::deallocate, py::arg("request_id"))
      .def("records", &PyOrchestrator::records)
      .def("residuals", &PyOrchestrator::residual_state)
      .def("audit_conservation", &PyOrchestrator::audit);
}
