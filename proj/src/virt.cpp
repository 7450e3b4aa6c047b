#include "neurovm/virt.hpp"

#include <algorithm>
#include <cmath>

#include "neurovm/errors.hpp"

namespace neurovm {

std::string_view to_string(Priority p) {
  return p == Priority::RealTime ? "RealTime" : "Batch";
}

std::string_view to_string(ModuleKind k) {
  switch (k) {
    case ModuleKind::LifCore: return "LifCore";
    case ModuleKind::Router: return "Router";
    case ModuleKind::Pooling: return "Pooling";
  }
  return "Unknown";
}

std::string_view to_string(ReconfigMode m) { return m == ReconfigMode::Full ? "Full" : "Partial"; }

std::int64_t bitstream_bytes_for(const ResourceVector& footprint, const FabricConfig& fabric) {
  // Round half-up; the product stays well inside 64 bits at fabric scale.
  const std::int64_t num = fabric.bitstream_total_bytes * footprint.lut;
  return (2 * num + fabric.total.lut) / (2 * fabric.total.lut);
}

DfxModule make_module(ModuleId id, std::string name, ModuleKind kind, double fraction,
                      const FabricConfig& fabric) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidConfig("module fraction must lie in (0,1]");
  }
  DfxModule m;
  m.id = id;
  m.name = std::move(name);
  m.kind = kind;
  m.footprint = fabric.total.fraction(fraction);
  m.bitstream_bytes = bitstream_bytes_for(m.footprint, fabric);
  return m;
}

void ReconfigParams::validate() const {
  if (!(config_port_bytes_per_s > 0.0)) throw InvalidConfig("config port bandwidth must be > 0");
  if (partial_setup.count() < 0) throw InvalidConfig("partial setup overhead must be >= 0");
}

SimTime reconfig_time(ReconfigMode mode, const DfxModule& module, const FabricConfig& fabric,
                      const ReconfigParams& params) {
  const std::int64_t bytes =
      mode == ReconfigMode::Full ? fabric.bitstream_total_bytes : module.bitstream_bytes;
  SimTime t = SimTime::from_ns_rounded(static_cast<double>(bytes) * 1e9 /
                                       params.config_port_bytes_per_s);
  if (mode == ReconfigMode::Partial) t += params.partial_setup;
  return std::max(t, SimTime::ns(1));
}

Hypervisor::Hypervisor(Engine& engine, Fabric& fabric, IoDriver& io, ReconfigParams params)
    : engine_(engine), fabric_(fabric), io_(io), params_(params) {
  params_.validate();
}

VmId Hypervisor::create_vm(const ResourceVector& request, Priority priority) {
  const VmId id{next_vm_};
  const SlotId slot = fabric_.allocate(request, id);
  ++next_vm_;
  VirtualMachine vm;
  vm.id = id;
  vm.slot = slot;
  vm.priority = priority;
  vm.cores = fabric_.slot(slot).cores;
  vm.io_rings.push_back(io_.open_ring(id));
  vms_.emplace(id, std::move(vm));
  return id;
}

void Hypervisor::destroy_vm(VmId id) {
  VirtualMachine& vm = vm_mut(id);
  if (reconfiguring(id)) throw VmBusy(to_string(id) + " has a reconfiguration in progress");
  for (RingId r : vm.io_rings) io_.close_ring(r);
  fabric_.release(vm.slot);
  vms_.erase(id);
  busy_until_.erase(id);
  stalled_until_.erase(id);
}

const VirtualMachine& Hypervisor::vm(VmId id) const {
  auto it = vms_.find(id);
  if (it == vms_.end()) throw VmUnknown("unknown " + to_string(id));
  return it->second;
}

VirtualMachine& Hypervisor::vm_mut(VmId id) {
  auto it = vms_.find(id);
  if (it == vms_.end()) throw VmUnknown("unknown " + to_string(id));
  return it->second;
}

std::vector<VmId> Hypervisor::vm_ids() const {
  std::vector<VmId> ids;
  ids.reserve(vms_.size());
  for (const auto& [id, _] : vms_) ids.push_back(id);
  return ids;
}

bool Hypervisor::reconfiguring(VmId id) const {
  auto it = busy_until_.find(id);
  const SimTime own = it == busy_until_.end() ? SimTime{} : it->second;
  return std::max(own, full_busy_until_) > engine_.now();
}

SimTime Hypervisor::available_at(VmId id) const {
  auto it = stalled_until_.find(id);
  const SimTime until = it == stalled_until_.end() ? SimTime{} : it->second;
  return std::max(until, engine_.now());
}

SimTime Hypervisor::reconfig_total(ReconfigMode mode) const {
  auto it = totals_.find(mode);
  return it == totals_.end() ? SimTime{} : it->second;
}

ReconfigRecord Hypervisor::load_module(VmId id, const DfxModule& module, ReconfigMode mode,
                                       ReconfigHandler on_done) {
  VirtualMachine& vm = vm_mut(id);
  const ResourceVector capacity = fabric_.slot(vm.slot).capacity;
  const ResourceVector after = vm.module_footprint + module.footprint;
  if (auto deficit = after.first_deficit(capacity)) {
    throw FootprintOverflow("module " + module.name + " overflows " + to_string(id) + " in " +
                            std::string(to_string(*deficit)) + ": " + to_string(after) + " > " +
                            to_string(capacity));
  }

  SimTime start = std::max(engine_.now(), full_busy_until_);
  if (mode == ReconfigMode::Full) {
    for (const auto& [_, until] : busy_until_) start = std::max(start, until);
  } else if (auto it = busy_until_.find(id); it != busy_until_.end()) {
    start = std::max(start, it->second);
  }

  ReconfigRecord rec;
  if (mode == ReconfigMode::Partial) rec.vm = id;
  rec.requested_by = id;
  rec.mode = mode;
  rec.started_at = start;
  rec.duration = reconfig_time(mode, module, fabric_.config(), params_);
  rec.modules.push_back(module.id);

  vm.module_footprint = after;
  footprints_[module.id] = module.footprint;
  vm.pending_modules.push_back(module.id);
  busy_until_[id] = rec.finished_at();
  if (mode == ReconfigMode::Full) full_busy_until_ = rec.finished_at();

  if (start == engine_.now()) {
    begin(rec, module.id, std::move(on_done));
  } else {
    engine_.schedule(
        start, EventKind::ReconfigStart,
        [this, rec, mid = module.id, cb = std::move(on_done)]() mutable {
          begin(rec, mid, std::move(cb));
        },
        to_string(id) + ' ' + std::string(to_string(mode)) + ' ' + module.name);
  }
  return rec;
}

void Hypervisor::stall(VmId id, SimTime duration) {
  engine_.postpone_owned(id, duration);
  io_.stall(id, duration);
  stalled_until_[id] = std::max(available_at(id), engine_.now()) + duration;
  for (const auto& l : listeners_) l(id, duration);
}

void Hypervisor::begin(const ReconfigRecord& rec, ModuleId module, ReconfigHandler on_done) {
  if (rec.mode == ReconfigMode::Full) {
    for (auto& [id, vm] : vms_) {
      fabric_.set_state(vm.slot, SlotState::Reconfiguring);
      stall(id, rec.duration);
    }
  } else {
    fabric_.set_state(vm_mut(*rec.vm).slot, SlotState::Reconfiguring);
    stall(*rec.vm, rec.duration);
  }
  engine_.schedule(
      rec.finished_at(), EventKind::ReconfigDone,
      [this, rec, module, cb = std::move(on_done)] { finish(rec, module, cb); },
      to_string(rec.requested_by) + ' ' + std::string(to_string(rec.mode)) + " duration=" +
          to_string(rec.duration));
}

void Hypervisor::finish(const ReconfigRecord& rec, ModuleId module,
                        const ReconfigHandler& on_done) {
  auto settle = [this](VirtualMachine& vm) {
    if (!reconfiguring(vm.id)) fabric_.set_state(vm.slot, SlotState::Allocated);
  };
  if (rec.mode == ReconfigMode::Full) {
    for (auto& [_, vm] : vms_) settle(vm);
  }
  if (auto it = vms_.find(rec.requested_by); it != vms_.end()) {
    VirtualMachine& vm = it->second;
    auto p = std::find(vm.pending_modules.begin(), vm.pending_modules.end(), module);
    if (p != vm.pending_modules.end()) {
      vm.pending_modules.erase(p);
      vm.loaded_modules.push_back(module);
    }
    settle(vm);
  }
  totals_[rec.mode] += rec.duration;
  history_.push_back(rec);
  if (on_done) on_done(rec);
}

void Hypervisor::unload_module(VmId id, ModuleId module) {
  VirtualMachine& vm = vm_mut(id);
  auto it = std::find(vm.loaded_modules.begin(), vm.loaded_modules.end(), module);
  if (it == vm.loaded_modules.end()) {
    throw Error(to_string(module) + " is not loaded on " + to_string(id));
  }
  vm.loaded_modules.erase(it);
  vm.module_footprint -= footprints_.at(module);
}

}  // namespace neurovm
