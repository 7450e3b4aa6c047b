#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>

#include "neurovm/engine.hpp"
#include "neurovm/fabric.hpp"
#include "neurovm/io_driver.hpp"
#include "neurovm/metrics.hpp"
#include "neurovm/scenario.hpp"
#include "neurovm/sched.hpp"
#include "neurovm/virt.hpp"

namespace neurovm {

struct RunSummary {
  std::size_t events = 0;
  std::size_t tasks_completed = 0;
  std::size_t deadline_misses = 0;
  std::size_t migrations = 0;
  std::size_t transfers_completed = 0;
  std::uint64_t synaptic_ops = 0;
  std::uint64_t output_spikes = 0;
  SimTime reconfig_full{};
  SimTime reconfig_partial{};
};

/// One fully wired platform built from a scenario: engine, fabric, I/O
/// driver, hypervisor, scheduler and metrics.
class Simulation {
 public:
  explicit Simulation(const Scenario& scenario, std::ostream* trace = nullptr);

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Schedules the scenario's workload and runs to its duration.
  RunSummary run();

  Engine& engine() { return engine_; }
  Fabric& fabric() { return fabric_; }
  IoDriver& io() { return io_; }
  Hypervisor& hypervisor() { return hv_; }
  Scheduler& scheduler() { return sched_; }
  MetricsRecorder& metrics() { return metrics_; }
  const Scenario& scenario() const { return scenario_; }

  VmId vm(const std::string& name) const { return vms_.at(name); }
  const DfxModule& module(const std::string& name) const { return modules_.at(name); }

 private:
  void submit_transfer(VmId vm, std::uint64_t size, Direction dir, std::uint32_t remaining);
  void apply_reconfig(const ReconfigEntry& e);
  void sample_loop();

  Scenario scenario_;
  Engine engine_;
  Fabric fabric_;
  IoDriver io_;
  Hypervisor hv_;
  Scheduler sched_;
  MetricsRecorder metrics_;
  std::map<std::string, VmId> vms_;
  std::map<std::string, DfxModule> modules_;
  std::uint64_t output_spikes_ = 0;
  std::size_t transfers_done_ = 0;
};

/// Runs `scenario` and writes the metrics CSV to `csv`.
RunSummary run_scenario(const Scenario& scenario, std::ostream& csv, std::ostream* trace = nullptr);

}  // namespace neurovm
