#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neurovm/fabric.hpp"
#include "neurovm/io_driver.hpp"
#include "neurovm/metrics.hpp"
#include "neurovm/sched.hpp"
#include "neurovm/snn.hpp"
#include "neurovm/virt.hpp"

namespace neurovm {

inline constexpr int kScenarioSchemaVersion = 1;

struct ModuleSpec {
  std::string name;
  ModuleKind kind = ModuleKind::LifCore;
  double fraction = 0.1;
};

struct VmSpec {
  std::string name;
  ResourceVector request;
  Priority priority = Priority::Batch;
};

struct TaskEntry {
  std::string name;
  RawTask raw;
};

struct ReconfigEntry {
  SimTime at{};
  std::string vm;
  std::string module;
  ReconfigMode mode = ReconfigMode::Partial;
};

struct TransferEntry {
  SimTime at{};
  std::string vm;
  std::uint64_t size = 0;
  Direction direction = Direction::In;
  std::uint32_t repeat = 1;
};

/// Everything one simulation run needs. A seed is mandatory.
struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::uint64_t seed = 1;
  SimTime duration = SimTime::ms(100);
  SimTime sample_period = SimTime::ms(1);

  FabricConfig fabric;
  LinkModel link;
  EnergyModel energy;
  ReconfigParams reconfig;
  SchedulerParams scheduler;
  snn::LifParams<double> lif;

  std::vector<ModuleSpec> modules;
  std::vector<VmSpec> vms;
  std::vector<TaskEntry> tasks;
  std::vector<ReconfigEntry> reconfigurations;
  std::vector<TransferEntry> transfers;

  /// Default platform with a small mixed workload: four VMs of an eighth of
  /// the fabric each, streaming transfers, tasks and one partial swap.
  static Scenario defaults();

  /// Throws ValidationError naming the offending field.
  void validate() const;

  const ModuleSpec* find_module(std::string_view name) const;
  const VmSpec* find_vm(std::string_view name) const;
};

/// LifCore 10%, Pooling 5%, Router 2.5% of the fabric.
std::vector<ModuleSpec> default_module_catalog();

/// Throws ParseError (with line) or ValidationError (with field path).
Scenario parse_scenario(std::string_view text);
/// As parse_scenario; unreadable files raise ConfigError.
Scenario load_scenario(const std::filesystem::path& path);
/// Serializes back into the scenario schema.
std::string scenario_to_json(const Scenario& scenario);

}  // namespace neurovm
