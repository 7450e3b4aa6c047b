#include "neurovm/virt.hpp"

#include <gtest/gtest.h>

#include "neurovm/errors.hpp"

namespace neurovm {
namespace {

struct Platform {
  Engine engine{1};
  Fabric fabric;
  IoDriver io{engine, LinkModel{}};
  Hypervisor hv{engine, fabric, io};
};

TEST(Hypervisor, FourEighthVmsHalfTheFabric) {
  Platform p;
  for (int i = 0; i < 4; ++i) p.hv.create_vm(p.fabric.total().scaled(1, 8), Priority::Batch);
  const Utilization u = p.fabric.utilization();
  EXPECT_DOUBLE_EQ(u.lut, 50.0);
  EXPECT_DOUBLE_EQ(u.memory, 50.0);
  EXPECT_DOUBLE_EQ(u.io, 50.0);
  EXPECT_DOUBLE_EQ(u.dsp, 50.0);
}

TEST(Hypervisor, CreateVmAttachesDefaultRing) {
  Platform p;
  const VmId vm = p.hv.create_vm(p.fabric.total().scaled(1, 8), Priority::RealTime);
  const VirtualMachine& v = p.hv.vm(vm);
  EXPECT_EQ(v.io_rings.size(), 1u);
  EXPECT_TRUE(v.loaded_modules.empty());
  EXPECT_EQ(v.cores, 4u);
  EXPECT_EQ(p.fabric.slot(v.slot).owner, vm);
}

TEST(Hypervisor, OversizedRequestFails) {
  Platform p;
  ResourceVector big = p.fabric.total();
  big.dsp += 1;
  EXPECT_THROW(p.hv.create_vm(big, Priority::Batch), InsufficientResources);
  EXPECT_TRUE(p.hv.vm_ids().empty());
}

TEST(Hypervisor, CreateDestroyRestoresPool) {
  Platform p;
  const ResourceVector before = p.fabric.free();
  const VmId vm = p.hv.create_vm({1'000, 2'000, 3, 4}, Priority::Batch);
  const RingId ring = p.hv.vm(vm).io_rings.front();
  p.io.submit(ring, 4096, Direction::In);
  p.hv.destroy_vm(vm);
  EXPECT_EQ(p.fabric.free(), before);
  EXPECT_FALSE(p.io.ring(ring).open);
  EXPECT_THROW(p.hv.destroy_vm(vm), VmUnknown);
}

TEST(ReconfigTime, DefaultFullIs75ms) {
  const FabricConfig fc;
  const DfxModule m = make_module(ModuleId{0}, "lif", ModuleKind::LifCore, 0.10, fc);
  // 30 MiB / 400 MiB/s
  EXPECT_EQ(reconfig_time(ReconfigMode::Full, m, fc, ReconfigParams{}), SimTime::ms(75));
}

TEST(ReconfigTime, TenPercentPartialIs7_6ms) {
  const FabricConfig fc;
  const DfxModule m = make_module(ModuleId{0}, "lif", ModuleKind::LifCore, 0.10, fc);
  EXPECT_EQ(m.bitstream_bytes, 3 * kMiB);
  // 3 MiB / 400 MiB/s + 0.1 ms
  EXPECT_EQ(reconfig_time(ReconfigMode::Partial, m, fc, ReconfigParams{}), SimTime::us(7'600));
}

TEST(ReconfigTime, PartialBelowFullUpToNinetyPercent) {
  const FabricConfig fc;
  for (int pct = 1; pct <= 90; ++pct) {
    const DfxModule m = make_module(ModuleId{0}, "m", ModuleKind::Pooling, pct / 100.0, fc);
    EXPECT_LE(reconfig_time(ReconfigMode::Partial, m, fc, ReconfigParams{}),
              reconfig_time(ReconfigMode::Full, m, fc, ReconfigParams{}))
        << pct;
  }
}

TEST(ReconfigTime, PartialStrictlyBelowFullWhenBitstreamLeavesRoomForSetup) {
  const FabricConfig fc;
  const ReconfigParams rp;
  const auto setup_bytes = static_cast<std::int64_t>(rp.partial_setup.seconds_f() *
                                                     rp.config_port_bytes_per_s);
  for (std::int64_t lut = 1; lut <= fc.total.lut; lut += 997) {
    DfxModule m;
    m.footprint = {lut, 0, 0, 0};
    m.bitstream_bytes = bitstream_bytes_for(m.footprint, fc);
    if (m.bitstream_bytes >= fc.bitstream_total_bytes - setup_bytes - 1) continue;
    ASSERT_LT(reconfig_time(ReconfigMode::Partial, m, fc, rp),
              reconfig_time(ReconfigMode::Full, m, fc, rp))
        << lut;
  }
}

TEST(Hypervisor, ModuleUsableOnlyAfterCompletion) {
  Platform p;
  const VmId vm = p.hv.create_vm(p.fabric.total().scaled(1, 4), Priority::Batch);
  const DfxModule m = make_module(ModuleId{0}, "lif", ModuleKind::LifCore, 0.10, p.fabric.config());
  const ReconfigRecord rec = p.hv.load_module(vm, m, ReconfigMode::Partial);
  EXPECT_EQ(rec.duration, SimTime::us(7'600));
  EXPECT_EQ(rec.vm, vm);
  EXPECT_TRUE(p.hv.vm(vm).loaded_modules.empty());
  EXPECT_EQ(p.fabric.slot(p.hv.vm(vm).slot).state, SlotState::Reconfiguring);
  EXPECT_THROW(p.hv.destroy_vm(vm), VmBusy);
  EXPECT_THROW(p.fabric.release(p.hv.vm(vm).slot), SlotBusy);
  p.engine.run();
  EXPECT_EQ(p.hv.vm(vm).loaded_modules, std::vector<ModuleId>{ModuleId{0}});
  EXPECT_EQ(p.fabric.slot(p.hv.vm(vm).slot).state, SlotState::Allocated);
  EXPECT_EQ(p.hv.reconfig_total(ReconfigMode::Partial), SimTime::us(7'600));
  EXPECT_NO_THROW(p.hv.destroy_vm(vm));
}

TEST(Hypervisor, FootprintOverflowAndUnknownVm) {
  Platform p;
  const VmId vm = p.hv.create_vm(p.fabric.total().scaled(1, 8), Priority::Batch);
  const auto& fc = p.fabric.config();
  const DfxModule big = make_module(ModuleId{0}, "big", ModuleKind::LifCore, 0.2, fc);
  EXPECT_THROW(p.hv.load_module(vm, big, ReconfigMode::Partial), FootprintOverflow);
  const DfxModule small = make_module(ModuleId{1}, "small", ModuleKind::Router, 0.1, fc);
  p.hv.load_module(vm, small, ReconfigMode::Partial);
  // Pending modules count against the slot too.
  EXPECT_THROW(p.hv.load_module(vm, small, ReconfigMode::Partial), FootprintOverflow);
  EXPECT_THROW(p.hv.load_module(VmId{77}, small, ReconfigMode::Partial), VmUnknown);
  p.engine.run();
  p.hv.unload_module(vm, ModuleId{1});
  EXPECT_EQ(p.hv.vm(vm).module_footprint, ResourceVector{});
  EXPECT_THROW(p.hv.unload_module(vm, ModuleId{1}), Error);
}

TEST(Hypervisor, PartialStallsOnlyOwner) {
  Platform p;
  const VmId a = p.hv.create_vm(p.fabric.total().scaled(1, 4), Priority::Batch);
  const VmId b = p.hv.create_vm(p.fabric.total().scaled(1, 4), Priority::Batch);
  const EventId ea = p.engine.schedule(SimTime::ms(1), EventKind::TaskDone, {}, "", a);
  const EventId eb = p.engine.schedule(SimTime::ms(1), EventKind::TaskDone, {}, "", b);
  const DfxModule m = make_module(ModuleId{0}, "lif", ModuleKind::LifCore, 0.10, p.fabric.config());
  p.hv.load_module(a, m, ReconfigMode::Partial);
  EXPECT_EQ(p.engine.fire_time(ea), SimTime::ms(1) + SimTime::us(7'600));
  EXPECT_EQ(p.engine.fire_time(eb), SimTime::ms(1));
  EXPECT_EQ(p.hv.available_at(a), SimTime::us(7'600));
  EXPECT_EQ(p.hv.available_at(b), SimTime{});
}

TEST(Hypervisor, FullStallsEveryVmAndIsFabricWide) {
  Platform p;
  const VmId a = p.hv.create_vm(p.fabric.total().scaled(1, 4), Priority::Batch);
  const VmId b = p.hv.create_vm(p.fabric.total().scaled(1, 4), Priority::Batch);
  const EventId eb = p.engine.schedule(SimTime::ms(1), EventKind::TaskDone, {}, "", b);
  const DfxModule m = make_module(ModuleId{0}, "lif", ModuleKind::LifCore, 0.10, p.fabric.config());
  const ReconfigRecord rec = p.hv.load_module(a, m, ReconfigMode::Full);
  EXPECT_FALSE(rec.vm.has_value());
  EXPECT_EQ(p.engine.fire_time(eb), SimTime::ms(76));
  EXPECT_EQ(p.fabric.slot(p.hv.vm(b).slot).state, SlotState::Reconfiguring);
  EXPECT_TRUE(p.hv.reconfiguring(b));
  p.engine.run();
  EXPECT_EQ(p.fabric.slot(p.hv.vm(b).slot).state, SlotState::Allocated);
  EXPECT_EQ(p.hv.reconfig_total(ReconfigMode::Full), SimTime::ms(75));
}

TEST(Hypervisor, ReconfigurationsSerializePerVm) {
  Platform p;
  const VmId a = p.hv.create_vm(p.fabric.total().scaled(1, 2), Priority::Batch);
  const VmId b = p.hv.create_vm(p.fabric.total().scaled(1, 4), Priority::Batch);
  const auto& fc = p.fabric.config();
  const DfxModule m0 = make_module(ModuleId{0}, "m0", ModuleKind::LifCore, 0.10, fc);
  const DfxModule m1 = make_module(ModuleId{1}, "m1", ModuleKind::Router, 0.10, fc);
  const ReconfigRecord r0 = p.hv.load_module(a, m0, ReconfigMode::Partial);
  const ReconfigRecord r1 = p.hv.load_module(a, m1, ReconfigMode::Partial);
  const ReconfigRecord rb = p.hv.load_module(b, m0, ReconfigMode::Partial);
  EXPECT_EQ(r1.started_at, r0.finished_at());
  EXPECT_EQ(rb.started_at, SimTime{});  // distinct VMs run concurrently
  const ReconfigRecord full = p.hv.load_module(b, m1, ReconfigMode::Full);
  EXPECT_EQ(full.started_at, r1.finished_at());
  p.engine.run();
  EXPECT_EQ(p.hv.vm(a).loaded_modules.size(), 2u);
  EXPECT_EQ(p.hv.vm(b).loaded_modules.size(), 2u);
  EXPECT_EQ(p.hv.history().size(), 4u);
}

}  // namespace
}  // namespace neurovm
