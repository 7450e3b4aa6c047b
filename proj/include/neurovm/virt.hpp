#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neurovm/engine.hpp"
#include "neurovm/fabric.hpp"
#include "neurovm/ids.hpp"
#include "neurovm/io_driver.hpp"
#include "neurovm/resources.hpp"
#include "neurovm/sim_time.hpp"

namespace neurovm {

enum class Priority : std::uint8_t { RealTime, Batch };
enum class ModuleKind : std::uint8_t { LifCore, Router, Pooling };
enum class ReconfigMode : std::uint8_t { Full, Partial };

std::string_view to_string(Priority p);
std::string_view to_string(ModuleKind k);
std::string_view to_string(ReconfigMode m);

/// Loadable hardware function.
struct DfxModule {
  ModuleId id{};
  std::string name;
  ModuleKind kind = ModuleKind::LifCore;
  ResourceVector footprint;
  std::int64_t bitstream_bytes = 0;
};

/// Builds a module occupying `fraction` of every fabric class. Its bitstream
/// is the full bitstream scaled by the module's LUT share.
DfxModule make_module(ModuleId id, std::string name, ModuleKind kind, double fraction,
                      const FabricConfig& fabric);

std::int64_t bitstream_bytes_for(const ResourceVector& footprint, const FabricConfig& fabric);

struct ReconfigParams {
  double config_port_bytes_per_s = 400.0 * kMiB;
  SimTime partial_setup = SimTime::us(100);

  void validate() const;
};

/// Full: whole bitstream over the configuration port. Partial: the module's
/// bitstream plus a fixed setup overhead.
SimTime reconfig_time(ReconfigMode mode, const DfxModule& module, const FabricConfig& fabric,
                      const ReconfigParams& params);

struct VirtualMachine {
  VmId id{};
  SlotId slot{};
  Priority priority = Priority::Batch;
  std::uint32_t cores = 0;
  std::vector<ModuleId> loaded_modules;
  std::vector<ModuleId> pending_modules;
  std::vector<RingId> io_rings;
  /// Footprint of loaded plus pending modules.
  ResourceVector module_footprint;
};

struct ReconfigRecord {
  /// Empty for fabric-wide (full) reconfigurations.
  std::optional<VmId> vm;
  VmId requested_by{};
  ReconfigMode mode = ReconfigMode::Partial;
  SimTime started_at{};
  SimTime duration{};
  std::vector<ModuleId> modules;

  SimTime finished_at() const { return started_at + duration; }
};

/// VM lifecycle and DFX module loading.
///
/// A full reconfiguration stalls every VM for its duration; a partial one
/// stalls only the owning VM. Reconfigurations of one VM are serialized and a
/// full reconfiguration waits for every other reconfiguration to finish.
class Hypervisor {
 public:
  using StallListener = std::function<void(VmId, SimTime duration)>;
  using ReconfigHandler = std::function<void(const ReconfigRecord&)>;

  Hypervisor(Engine& engine, Fabric& fabric, IoDriver& io, ReconfigParams params = {});

  /// Throws InsufficientResources.
  VmId create_vm(const ResourceVector& request, Priority priority);
  /// Throws VmUnknown, or VmBusy while a reconfiguration is pending.
  void destroy_vm(VmId id);

  /// Throws VmUnknown or FootprintOverflow.
  ReconfigRecord load_module(VmId id, const DfxModule& module, ReconfigMode mode,
                             ReconfigHandler on_done = {});
  /// Removes a loaded module at once. Throws VmUnknown or Error if not loaded.
  void unload_module(VmId id, ModuleId module);

  const VirtualMachine& vm(VmId id) const;
  bool contains(VmId id) const { return vms_.contains(id); }
  std::vector<VmId> vm_ids() const;

  bool reconfiguring(VmId id) const;
  /// Earliest time `id` can make progress: the end of its current stall, or now.
  SimTime available_at(VmId id) const;

  /// Durations of completed reconfigurations, per mode.
  SimTime reconfig_total(ReconfigMode mode) const;
  const std::vector<ReconfigRecord>& history() const { return history_; }

  void add_stall_listener(StallListener listener) { listeners_.push_back(std::move(listener)); }

  const ReconfigParams& params() const { return params_; }
  Fabric& fabric() { return fabric_; }
  const Fabric& fabric() const { return fabric_; }
  IoDriver& io() { return io_; }
  Engine& engine() { return engine_; }

 private:
  VirtualMachine& vm_mut(VmId id);
  void begin(const ReconfigRecord& rec, ModuleId module, ReconfigHandler on_done);
  void finish(const ReconfigRecord& rec, ModuleId module, const ReconfigHandler& on_done);
  void stall(VmId id, SimTime duration);

  Engine& engine_;
  Fabric& fabric_;
  IoDriver& io_;
  ReconfigParams params_;
  std::uint32_t next_vm_ = 0;
  std::map<VmId, VirtualMachine> vms_;
  /// End of the last reconfiguration queued for each VM.
  std::map<VmId, SimTime> busy_until_;
  std::map<VmId, SimTime> stalled_until_;
  SimTime full_busy_until_{};
  std::map<ModuleId, ResourceVector> footprints_;
  std::map<ReconfigMode, SimTime> totals_;
  std::vector<ReconfigRecord> history_;
  std::vector<StallListener> listeners_;
};

}  // namespace neurovm
