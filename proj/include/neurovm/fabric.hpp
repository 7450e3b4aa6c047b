#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "neurovm/ids.hpp"
#include "neurovm/resources.hpp"

namespace neurovm {

inline constexpr std::int64_t kMiB = 1024 * 1024;

/// Physical substrate description. Defaults describe a Zynq UltraScale+ XCZU7EV.
struct FabricConfig {
  ResourceVector total{504'000, 38'000'000, 464, 1'728};
  std::uint32_t neurocore_count = 16;
  std::uint32_t neurons_per_core = 256;
  ResourceVector core_footprint = total.scaled(1, 32);
  std::int64_t bitstream_total_bytes = 30 * kMiB;

  static FabricConfig defaults() { return {}; }
  /// Throws InvalidConfig.
  void validate() const;
};

enum class SlotState : std::uint8_t { Allocated, Reconfiguring };

struct RegionSlot {
  SlotId id{};
  ResourceVector capacity;
  std::uint32_t cores = 0;
  SlotState state = SlotState::Allocated;
  std::optional<VmId> owner;
};

/// Per-class utilization in percent.
struct Utilization {
  double lut = 0.0;
  double memory = 0.0;
  double io = 0.0;
  double dsp = 0.0;
};

/// Count-level resource pool. Slots are fungible; there is no placement model.
class Fabric {
 public:
  explicit Fabric(FabricConfig config = FabricConfig::defaults());

  /// Throws InsufficientResources naming the first deficient class.
  SlotId allocate(const ResourceVector& request, std::optional<VmId> owner = std::nullopt);
  /// Throws UnknownSlot, or SlotBusy while the slot is reconfiguring.
  void release(SlotId id);

  void set_owner(SlotId id, VmId vm);
  void set_state(SlotId id, SlotState state);

  const RegionSlot& slot(SlotId id) const;
  bool contains(SlotId id) const { return slots_.contains(id); }
  std::vector<SlotId> slot_ids() const;
  std::size_t slot_count() const { return slots_.size(); }

  const FabricConfig& config() const { return config_; }
  const ResourceVector& total() const { return config_.total; }
  ResourceVector free() const { return free_; }
  /// Sum of live slot capacities.
  ResourceVector used() const;
  std::uint32_t free_cores() const { return free_cores_; }

  Utilization utilization() const;

  /// Cores a slot of `capacity` can host, ignoring how many are still free.
  std::uint32_t cores_fitting(const ResourceVector& capacity) const;

 private:
  RegionSlot& slot_mut(SlotId id);

  FabricConfig config_;
  ResourceVector free_;
  std::uint32_t free_cores_;
  std::uint32_t next_slot_ = 0;
  std::map<SlotId, RegionSlot> slots_;
};

}  // namespace neurovm
