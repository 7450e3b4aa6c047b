#include "neurovm/fabric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "neurovm/errors.hpp"

namespace neurovm {

std::string_view to_string(ResourceClass c) {
  switch (c) {
    case ResourceClass::Lut: return "lut";
    case ResourceClass::Memory: return "memory";
    case ResourceClass::Io: return "io";
    case ResourceClass::Dsp: return "dsp";
  }
  return "unknown";
}

std::optional<ResourceClass> ResourceVector::first_deficit(const ResourceVector& available) const {
  for (ResourceClass c : kResourceClasses) {
    if ((*this)[c] > available[c]) return c;
  }
  return std::nullopt;
}

ResourceVector ResourceVector::scaled(std::int64_t num, std::int64_t den) const {
  return {lut * num / den, memory_bytes * num / den, io_pins * num / den, dsp * num / den};
}

ResourceVector ResourceVector::fraction(double f) const {
  auto part = [f](std::int64_t v) {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(v) * f + 1e-9));
  };
  return {part(lut), part(memory_bytes), part(io_pins), part(dsp)};
}

std::string to_string(const ResourceVector& v) {
  return "{lut=" + std::to_string(v.lut) + " mem=" + std::to_string(v.memory_bytes) +
         " io=" + std::to_string(v.io_pins) + " dsp=" + std::to_string(v.dsp) + "}";
}

void FabricConfig::validate() const {
  if (!total.non_negative() || !total.any_positive()) {
    throw InvalidConfig("fabric total must be non-negative and non-empty");
  }
  if (!core_footprint.non_negative()) {
    throw InvalidConfig("core footprint must be non-negative");
  }
  if (neurocore_count == 0 || neurons_per_core == 0) {
    throw InvalidConfig("neurocore grid must be non-empty");
  }
  if (!(static_cast<std::int64_t>(neurocore_count) * core_footprint).fits_within(total)) {
    throw InvalidConfig("neurocores do not fit the fabric: " +
                        std::to_string(neurocore_count) + " x " + to_string(core_footprint) +
                        " exceeds " + to_string(total));
  }
  if (bitstream_total_bytes <= 0) {
    throw InvalidConfig("bitstream_total_bytes must be positive");
  }
}

Fabric::Fabric(FabricConfig config)
    : config_(config), free_(config.total), free_cores_(config.neurocore_count) {
  config_.validate();
}

std::uint32_t Fabric::cores_fitting(const ResourceVector& capacity) const {
  std::int64_t n = std::numeric_limits<std::int64_t>::max();
  for (ResourceClass c : kResourceClasses) {
    if (config_.core_footprint[c] > 0) n = std::min(n, capacity[c] / config_.core_footprint[c]);
  }
  if (n == std::numeric_limits<std::int64_t>::max()) n = config_.neurocore_count;
  return static_cast<std::uint32_t>(std::clamp<std::int64_t>(n, 0, config_.neurocore_count));
}

SlotId Fabric::allocate(const ResourceVector& request, std::optional<VmId> owner) {
  if (!request.non_negative() || !request.any_positive()) {
    throw InvalidConfig("allocation request must be non-negative with a positive field: " +
                        to_string(request));
  }
  if (auto deficit = request.first_deficit(free_)) {
    throw InsufficientResources(*deficit, "insufficient " + std::string(to_string(*deficit)) +
                                              ": requested " + std::to_string(request[*deficit]) +
                                              ", free " + std::to_string(free_[*deficit]));
  }
  const SlotId id{next_slot_++};
  const std::uint32_t cores = std::min(cores_fitting(request), free_cores_);
  free_ -= request;
  free_cores_ -= cores;
  slots_.emplace(id, RegionSlot{id, request, cores, SlotState::Allocated, owner});
  return id;
}

void Fabric::release(SlotId id) {
  RegionSlot& s = slot_mut(id);
  if (s.state == SlotState::Reconfiguring) {
    throw SlotBusy(to_string(id) + " is reconfiguring");
  }
  free_ += s.capacity;
  free_cores_ += s.cores;
  slots_.erase(id);
}

void Fabric::set_owner(SlotId id, VmId vm) { slot_mut(id).owner = vm; }

void Fabric::set_state(SlotId id, SlotState state) { slot_mut(id).state = state; }

const RegionSlot& Fabric::slot(SlotId id) const {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw UnknownSlot("unknown " + to_string(id));
  return it->second;
}

RegionSlot& Fabric::slot_mut(SlotId id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw UnknownSlot("unknown " + to_string(id));
  return it->second;
}

std::vector<SlotId> Fabric::slot_ids() const {
  std::vector<SlotId> ids;
  ids.reserve(slots_.size());
  for (const auto& [id, _] : slots_) ids.push_back(id);
  return ids;
}

ResourceVector Fabric::used() const {
  ResourceVector sum;
  for (const auto& [_, s] : slots_) sum += s.capacity;
  return sum;
}

Utilization Fabric::utilization() const {
  const ResourceVector u = used();
  auto pct = [](std::int64_t used, std::int64_t avail) {
    return avail > 0 ? 100.0 * static_cast<double>(used) / static_cast<double>(avail) : 0.0;
  };
  return {pct(u.lut, config_.total.lut), pct(u.memory_bytes, config_.total.memory_bytes),
          pct(u.io_pins, config_.total.io_pins), pct(u.dsp, config_.total.dsp)};
}

}  // namespace neurovm
