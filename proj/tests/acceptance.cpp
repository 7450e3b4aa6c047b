// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "neurovm/bench.hpp"
#include "neurovm/errors.hpp"
#include "neurovm/metrics.hpp"
#include "neurovm/simulation.hpp"
#include "neurovm/snn.hpp"
#include "support/sched_oracle.hpp"

namespace {

using namespace neurovm;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Splits CSV text into rows of fields, dropping the header.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

Verdict energy_anchors() {
  Verdict v;
  const auto t0 = Clock::now();
  std::ostringstream csv;
  const auto rows = bench::bench_energy(Scenario::defaults(), 20);
  bench::write_energy_csv(csv, rows);
  const double elapsed = seconds_since(t0);

  const auto parsed = csv_rows(csv.str());
  std::vector<double> e;
  for (const auto& r : parsed) e.push_back(std::stod(r.at(1)));
  v.require(e.size() == 20, "expected 20 rows, got " + std::to_string(e.size()));
  if (!v.pass) return v;
  v.require(std::abs(e[0] - 25.0) <= 1e-6, "n=1 gives " + fmt("%.9f", e[0]));
  v.require(std::abs(e[19] - 45.0) <= 1e-6, "n=20 gives " + fmt("%.9f", e[19]));
  double worst = 0.0;
  for (std::size_t i = 1; i < e.size(); ++i) {
    v.require(e[i] > e[i - 1], "not increasing at n=" + std::to_string(i + 1));
    if (i + 1 < e.size()) worst = std::max(worst, std::abs(e[i + 1] - 2 * e[i] + e[i - 1]));
  }
  v.require(worst <= 1e-9, "second difference " + fmt("%.3g", worst));
  v.require(elapsed < 5.0, "took " + fmt("%.2f s", elapsed));
  if (v.pass) {
    v.detail = "n=1 " + fmt("%.6f", e[0]) + " mJ, n=10 " + fmt("%.6f", e[9]) + " mJ, n=20 " +
               fmt("%.6f", e[19]) + " mJ, max |d2| " + fmt("%.2g", worst) + ", " +
               fmt("%.2f s", elapsed);
  }
  return v;
}

Verdict throughput_saturation() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto counts = bench::default_vm_counts();
  const auto sizes = bench::default_sizes();
  std::ostringstream csv;
  bench::write_throughput_csv(csv, bench::bench_throughput(Scenario::defaults(), counts, sizes));
  const double elapsed = seconds_since(t0);

  std::map<std::uint32_t, std::map<std::uint64_t, double>> tp;
  for (const auto& r : csv_rows(csv.str())) {
    tp[static_cast<std::uint32_t>(std::stoul(r.at(0)))][std::stoull(r.at(1))] = std::stod(r.at(2));
  }
  const double top = tp[4][1ull << 30];
  v.require(std::abs(top - 5.1) <= 0.01 * 5.1, "4 VMs at 1 GiB gives " + fmt("%.6f", top));
  for (std::uint64_t s : sizes) {
    v.require(tp[1][s] <= tp[2][s] && tp[2][s] <= tp[4][s],
              "vm ordering broken at size " + std::to_string(s));
  }
  for (std::uint32_t n : counts) {
    double prev = 0.0;
    for (std::uint64_t s : sizes) {
      v.require(tp[n][s] >= prev, "not monotone for vm=" + std::to_string(n) + " at size " +
                                      std::to_string(s));
      prev = tp[n][s];
    }
  }
  v.require(elapsed < 30.0, "took " + fmt("%.2f s", elapsed));
  if (v.pass) {
    v.detail = "4 VMs at 1 GiB " + fmt("%.6f", top) + " Gib/s, 1 VM at 4 KiB " +
               fmt("%.6f", tp[1][4096]) + " Gib/s, " + fmt("%.2f s", elapsed);
  }
  return v;
}

Verdict reconfiguration_gap() {
  Verdict v;
  const auto t0 = Clock::now();
  std::vector<std::uint32_t> counts;
  for (std::uint32_t n = 1; n <= 16; ++n) counts.push_back(n);
  std::ostringstream csv;
  bench::write_reconfig_csv(csv, bench::bench_reconfig(Scenario::defaults(), counts));
  const double elapsed = seconds_since(t0);

  double worst_ratio = 0.0;
  double prev_gap = -1.0;
  for (const auto& r : csv_rows(csv.str())) {
    const double full = std::stod(r.at(2));
    const double partial = std::stod(r.at(3));
    const double gap = full - partial;
    worst_ratio = std::max(worst_ratio, partial / full);
    v.require(partial <= 0.15 * full, "vm=" + r.at(0) + ": partial/full " + fmt("%.4f", partial / full));
    v.require(gap >= prev_gap, "gap shrinks at vm=" + r.at(0));
    prev_gap = gap;
  }
  v.require(elapsed < 10.0, "took " + fmt("%.2f s", elapsed));
  if (v.pass) {
    v.detail = "worst partial/full " + fmt("%.4f", worst_ratio) + ", gap at 16 VMs " +
               fmt("%.1f ms", prev_gap / 1e6) + ", " + fmt("%.2f s", elapsed);
  }
  return v;
}

Verdict resource_accounting() {
  Verdict v;
  Fabric fabric;
  fabric.allocate({151'200, 11'400'000, 139, 518});
  const Utilization u = fabric.utilization();
  v.require(std::abs(u.lut - 30.00) <= 0.01, "lut " + fmt("%.4f", u.lut));
  v.require(std::abs(u.memory - 30.00) <= 0.01, "memory " + fmt("%.4f", u.memory));
  v.require(std::abs(u.io - 29.96) <= 0.01, "io " + fmt("%.4f", u.io));
  v.require(std::abs(u.dsp - 29.98) <= 0.01, "dsp " + fmt("%.4f", u.dsp));
  if (v.pass) {
    v.detail = "lut " + fmt("%.2f%%", u.lut) + ", memory " + fmt("%.2f%%", u.memory) + ", io " +
               fmt("%.2f%%", u.io) + ", dsp " + fmt("%.2f%%", u.dsp);
  }
  return v;
}

/// Checks every accounting invariant of the platform; returns an empty string when all hold.
std::string accounting_violation(const Fabric& fabric, const Hypervisor& hv) {
  ResourceVector allocated;
  std::uint32_t cores = 0;
  for (SlotId id : fabric.slot_ids()) {
    const RegionSlot& s = fabric.slot(id);
    if (!s.capacity.non_negative()) return "negative slot capacity";
    allocated = allocated + s.capacity;
    cores += s.cores;
  }
  if (!fabric.free().non_negative()) return "negative free pool";
  if (fabric.free() + allocated != fabric.total()) return "free + allocated != total";
  if (fabric.free_cores() + cores != fabric.config().neurocore_count) return "cores leaked";
  for (VmId id : hv.vm_ids()) {
    const VirtualMachine& vm = hv.vm(id);
    if (!vm.module_footprint.non_negative()) return "negative module footprint";
    if (!vm.module_footprint.fits_within(fabric.slot(vm.slot).capacity)) {
      return to_string(id) + " modules exceed its slot";
    }
  }
  return {};
}

Verdict conservation() {
  Verdict v;
  constexpr int kSeeds = 120;
  constexpr int kOpsPerSeed = 250;
  std::size_t ops = 0;
  std::size_t rejected = 0;
  std::size_t loads = 0;
  for (int seed = 0; seed < kSeeds && v.pass; ++seed) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed));
    Engine engine(static_cast<std::uint64_t>(seed));
    Fabric fabric;
    IoDriver io(engine, LinkModel{});
    Hypervisor hv(engine, fabric, io);
    std::vector<SlotId> bare;
    std::uint32_t next_module = 0;
    auto pick_vm = [&]() -> std::optional<VmId> {
      const auto ids = hv.vm_ids();
      if (ids.empty()) return std::nullopt;
      return ids[gen() % ids.size()];
    };
    for (int op = 0; op < kOpsPerSeed && v.pass; ++op) {
      ++ops;
      try {
        switch (gen() % 7) {
          case 0: {
            const ResourceVector& t = fabric.total();
            auto part = [&](std::int64_t total) {
              return total * static_cast<std::int64_t>(gen() % 12) / 32;
            };
            const ResourceVector req{part(t.lut), part(t.memory_bytes), part(t.io_pins),
                                     part(t.dsp)};
            hv.create_vm(req, gen() % 2 ? Priority::RealTime : Priority::Batch);
            break;
          }
          case 1:
            if (auto id = pick_vm()) hv.destroy_vm(*id);
            break;
          case 2:
          case 3:
            if (auto id = pick_vm()) {
              const double frac = 0.005 * static_cast<double>(1 + gen() % 30);
              const DfxModule m = make_module(ModuleId{next_module++}, "m", ModuleKind::Pooling,
                                              frac, fabric.config());
              hv.load_module(*id, m, gen() % 8 == 0 ? ReconfigMode::Full : ReconfigMode::Partial);
              ++loads;
            }
            break;
          case 4:
            if (auto id = pick_vm()) {
              const auto& loaded = hv.vm(*id).loaded_modules;
              if (!loaded.empty()) hv.unload_module(*id, loaded[gen() % loaded.size()]);
            }
            break;
          case 5:
            if (!bare.empty() && gen() % 2) {
              const std::size_t i = gen() % bare.size();
              fabric.release(bare[i]);
              bare.erase(bare.begin() + static_cast<std::ptrdiff_t>(i));
            } else {
              bare.push_back(fabric.allocate(fabric.total().scaled(1 + gen() % 4, 64)));
            }
            break;
          default:
            engine.run_until(engine.now() + SimTime::us(static_cast<std::int64_t>(gen() % 40'000)));
            break;
        }
      } catch (const Error&) {
        ++rejected;
      }
      const std::string bad = accounting_violation(fabric, hv);
      v.require(bad.empty(), "seed " + std::to_string(seed) + " op " + std::to_string(op) + ": " + bad);
    }
    engine.run();
    const std::string bad = accounting_violation(fabric, hv);
    v.require(bad.empty(), "seed " + std::to_string(seed) + " after drain: " + bad);
  }
  if (v.pass) {
    v.detail = std::to_string(ops) + " operations over " + std::to_string(kSeeds) + " seeds (" +
               std::to_string(rejected) + " rejected by the platform, " + std::to_string(loads) +
               " module loads)";
  }
  return v;
}

/// Completion times of VM B's transfers and owned events in one randomized run.
struct IsolationRun {
  std::vector<std::int64_t> b_times;
  SimTime reconfig_at{};
  SimTime duration{};
};

IsolationRun isolation_run(std::uint64_t seed, std::optional<ReconfigMode> mode) {
  std::mt19937_64 gen(seed);
  Engine engine(seed);
  Fabric fabric;
  IoDriver io(engine, LinkModel{});
  Hypervisor hv(engine, fabric, io);
  const VmId a = hv.create_vm(fabric.total().scaled(1, 4 + gen() % 5), Priority::Batch);
  const VmId b = hv.create_vm(fabric.total().scaled(1, 4 + gen() % 5), Priority::RealTime);
  const auto catalog = default_module_catalog();
  const ModuleSpec& spec = catalog[gen() % catalog.size()];
  const DfxModule module = make_module(ModuleId{0}, spec.name, spec.kind, spec.fraction,
                                       fabric.config());

  IsolationRun out;
  out.reconfig_at = SimTime::us(static_cast<std::int64_t>(1'000 + gen() % 20'000));
  // Scheduled first, so it precedes any other event at the same instant.
  engine.schedule(out.reconfig_at, EventKind::Control, [&, mode] {
    if (mode) out.duration = hv.load_module(a, module, *mode).duration;
  });

  const std::size_t b_transfers = 1 + gen() % 12;
  const std::size_t b_events = gen() % 8;
  out.b_times.assign(b_transfers + b_events, -1);
  const RingId ring_a = hv.vm(a).io_rings.front();
  const RingId ring_b = hv.vm(b).io_rings.front();
  for (std::size_t i = 0; i < b_transfers; ++i) {
    const SimTime at = SimTime::ns(static_cast<std::int64_t>(gen() % out.reconfig_at.count()));
    const std::uint64_t size = 4096ull << (gen() % 11);
    engine.schedule(at, EventKind::Control, [&, i, size] {
      io.submit(ring_b, size, Direction::In,
                [&, i](const Completion&) { out.b_times[i] = engine.now().count(); });
    });
  }
  for (std::size_t k = 0; k < b_events; ++k) {
    const SimTime at = SimTime::ns(static_cast<std::int64_t>(gen() % (2 * out.reconfig_at.count())));
    const std::size_t slot = b_transfers + k;
    engine.schedule(
        at, EventKind::SpikeStep, [&, slot] { out.b_times[slot] = engine.now().count(); }, "b", b);
  }
  for (int i = 0; i < 6; ++i) {
    const SimTime at = SimTime::ns(static_cast<std::int64_t>(gen() % (2 * out.reconfig_at.count())));
    const std::uint64_t size = 4096ull << (gen() % 11);
    engine.schedule(at, EventKind::Control,
                    [&, size] { io.submit(ring_a, size, Direction::Out); });
  }
  engine.run();
  return out;
}

Verdict isolation() {
  Verdict v;
  constexpr int kScenarios = 60;
  std::size_t shifted = 0;
  std::size_t compared = 0;
  for (int s = 0; s < kScenarios && v.pass; ++s) {
    const auto seed = static_cast<std::uint64_t>(1000 + s);
    const IsolationRun base = isolation_run(seed, std::nullopt);
    const IsolationRun partial = isolation_run(seed, ReconfigMode::Partial);
    const IsolationRun full = isolation_run(seed, ReconfigMode::Full);
    v.require(partial.b_times == base.b_times,
              "scenario " + std::to_string(s) + ": partial reconfiguration moved VM B");
    for (std::size_t i = 0; i < base.b_times.size(); ++i) {
      ++compared;
      const std::int64_t t = base.b_times[i];
      const std::int64_t expect = t >= base.reconfig_at.count() ? t + full.duration.count() : t;
      if (expect != t) ++shifted;
      v.require(full.b_times[i] == expect, "scenario " + std::to_string(s) + " completion " +
                                               std::to_string(i) + ": " +
                                               std::to_string(full.b_times[i]) + " != " +
                                               std::to_string(expect));
    }
  }
  if (v.pass) {
    v.detail = std::to_string(kScenarios) + " scenarios, " + std::to_string(compared) +
               " VM B completions, " + std::to_string(shifted) +
               " in flight during a full reconfiguration shifted by its duration";
  }
  return v;
}

Verdict scheduler_oracle() {
  Verdict v;
  const auto t0 = Clock::now();
  constexpr int kInstances = 2000;
  std::mt19937_64 gen(77);
  double worst = 0.0;
  int migrations = 0;
  for (int i = 0; i < kInstances && v.pass; ++i) {
    const int machines = 1 + static_cast<int>(gen() % 2);
    std::vector<testing::OracleTask> tasks(1 + gen() % 5);
    for (auto& t : tasks) {
      t.demand = static_cast<std::int64_t>(1 + gen() % 2'000);
      t.arrival = static_cast<std::int64_t>(gen() % 3'000);
      if (gen() % 2) t.deadline = t.arrival + static_cast<std::int64_t>(gen() % 4'000);
    }
    const auto run = testing::run_on_single_core_vms(tasks, machines);
    const std::int64_t opt = testing::optimal_makespan(tasks, machines);
    migrations += static_cast<int>(run.migrations);
    v.require(run.outcomes.size() == tasks.size(), "instance " + std::to_string(i) + " lost tasks");
    v.require(run.makespan <= 2 * opt, "instance " + std::to_string(i) + ": makespan " +
                                           std::to_string(run.makespan) + " vs optimum " +
                                           std::to_string(opt));
    v.require(testing::edf_respected(tasks, run),
              "instance " + std::to_string(i) + ": batch task started ahead of a waiting real-time task");
    worst = std::max(worst, static_cast<double>(run.makespan) / static_cast<double>(opt));
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 60.0, "took " + fmt("%.2f s", elapsed));
  if (v.pass) {
    v.detail = std::to_string(kInstances) + " instances, worst makespan/optimum " +
               fmt("%.4f", worst) + ", " + std::to_string(migrations) + " migrations, " +
               fmt("%.2f s", elapsed);
  }
  return v;
}

Verdict determinism() {
  Verdict v;
  const Scenario base = Scenario::defaults();
  const auto counts = bench::default_vm_counts();
  const auto sizes = bench::default_sizes();
  std::vector<std::uint32_t> reconfig_counts;
  for (std::uint32_t n = 1; n <= 16; ++n) reconfig_counts.push_back(n);

  using Job = std::function<void(std::ostream&, std::ostream&, unsigned)>;
  const std::vector<std::pair<std::string, Job>> jobs{
      {"bench-throughput",
       [&](std::ostream& csv, std::ostream& tr, unsigned j) {
         bench::write_throughput_csv(csv, bench::bench_throughput(base, counts, sizes, {j, &tr}));
       }},
      {"bench-energy",
       [&](std::ostream& csv, std::ostream& tr, unsigned j) {
         bench::write_energy_csv(csv, bench::bench_energy(base, 20, {j, &tr}));
       }},
      {"bench-reconfig",
       [&](std::ostream& csv, std::ostream& tr, unsigned j) {
         bench::write_reconfig_csv(csv, bench::bench_reconfig(base, reconfig_counts, {j, &tr}));
       }},
      {"run", [&](std::ostream& csv, std::ostream& tr, unsigned) { run_scenario(base, csv, &tr); }},
  };
  std::size_t bytes = 0;
  for (const auto& [name, job] : jobs) {
    std::ostringstream c1, t1, c2, t2;
    job(c1, t1, 1);
    job(c2, t2, 4);
    v.require(c1.str() == c2.str(), name + ": CSV differs between runs");
    v.require(t1.str() == t2.str(), name + ": event trace differs between runs");
    v.require(!t1.str().empty(), name + ": empty event trace");
    bytes += c1.str().size() + t1.str().size();
  }
  if (v.pass) {
    v.detail = "4 workloads run twice (1 and 4 worker threads), " + std::to_string(bytes) +
               " bytes of CSV and trace identical";
  }
  return v;
}

Verdict snn_checks() {
  Verdict v;
  // Zero weights: random input over many steps never fires.
  RandomStream rng(5, "acceptance/snn");
  snn::CoreState<double> zero(64, 32);
  snn::LifParams<double> p;
  std::uint64_t spikes = 0;
  for (std::uint64_t step = 0; step < 1000; ++step) {
    snn::SpikeBatch in{step, {}};
    for (std::uint32_t i = 0; i < 64; ++i) {
      if (rng.next() < 0.3) in.ids.push_back(i);
    }
    spikes += snn::step_core(zero, in, p).ids.size();
  }
  v.require(spikes == 0, std::to_string(spikes) + " spikes from zero weights");

  const snn::LifParams<double> unit{1.0, 0.0, 1.0, SimTime::us(1)};
  snn::CoreState<double> one(1, 1);
  one.weights(0, 0) = 1.0;
  const auto first = snn::step_core(one, snn::SpikeBatch{0, {0}}, unit);
  v.require(first.ids == std::vector<std::uint32_t>{0} && one.potentials[0] == 0.0,
            "single-neuron example did not fire and reset");

  snn::CoreState<double> two(1, 1);
  two.weights(0, 0) = 0.6;
  const auto s1 = snn::step_core(two, snn::SpikeBatch{0, {0}}, unit);
  const double v1 = two.potentials[0];
  const auto s2 = snn::step_core(two, snn::SpikeBatch{1, {0}}, unit);
  v.require(s1.ids.empty() && v1 == 0.6, "two-step example fired early or v != 0.6");
  v.require(s2.ids == std::vector<std::uint32_t>{0} && two.potentials[0] == 0.0,
            "two-step example did not fire on the second step");

  const snn::TaskShape shape{200, 16, 64};
  RandomStream r1(9, "x"), r2(9, "x");
  const auto w1 = snn::run_workload(shape, p, r1);
  const auto w2 = snn::run_workload(shape, p, r2);
  v.require(w1.synaptic_ops == snn::workload_cost(shape), "workload op count mismatch");
  v.require(w1.output_spikes == w2.output_spikes, "seeded workload not reproducible");
  if (v.pass) {
    v.detail = "0 spikes over 1000 zero-weight steps, both hand traces exact, workload " +
               std::to_string(w1.synaptic_ops) + " ops / " + std::to_string(w1.output_spikes) +
               " spikes";
  }
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
      {"energy anchors", energy_anchors},
      {"throughput saturation", throughput_saturation},
      {"reconfiguration gap", reconfiguration_gap},
      {"resource accounting", resource_accounting},
      {"conservation", conservation},
      {"isolation", isolation},
      {"scheduler oracle", scheduler_oracle},
      {"determinism", determinism},
      {"snn checks", snn_checks},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("threw: ") + e.what();
    }
    if (!v.pass) ++failures;
    std::printf("%s  %d %s: %s\n", v.pass ? "PASS" : "FAIL", index, name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
