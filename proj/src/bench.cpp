#include "neurovm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <sstream>
#include <thread>

#include "neurovm/engine.hpp"
#include "neurovm/errors.hpp"
#include "neurovm/fabric.hpp"
#include "neurovm/io_driver.hpp"
#include "neurovm/metrics.hpp"
#include "neurovm/sched.hpp"
#include "neurovm/virt.hpp"

namespace neurovm::bench {

namespace {

/// Runs `cells` cell functions on up to `jobs` threads; results keep cell order.
template <typename Row>
std::vector<Row> run_cells(std::size_t cells, const Options& opts,
                           const std::function<Row(std::size_t, std::ostream*)>& cell) {
  std::vector<Row> rows(cells);
  std::vector<std::ostringstream> traces(opts.trace != nullptr ? cells : 0);
  std::vector<std::exception_ptr> errors(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells; i = next++) {
      try {
        rows[i] = cell(i, opts.trace != nullptr ? &traces[i] : nullptr);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(cells)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (opts.trace != nullptr) {
    for (auto& t : traces) *opts.trace << t.str();
  }
  return rows;
}

void check_base(const Scenario& base) {
  try {
    base.fabric.validate();
    base.link.validate();
    base.energy.validate();
    base.reconfig.validate();
    base.scheduler.validate();
    base.lif.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

ThroughputRow throughput_cell(const Scenario& base, std::uint32_t n, std::uint64_t size,
                              std::uint32_t rounds, std::ostream* trace) {
  Engine engine(base.seed);
  Fabric fabric(base.fabric);
  IoDriver io(engine, base.link);
  Hypervisor hv(engine, fabric, io, base.reconfig);
  if (trace != nullptr) {
    *trace << "# bench-throughput vm_count=" << n << " size_bytes=" << size << '\n';
    engine.set_trace(trace);
  }

  const ResourceVector share = fabric.total().scaled(1, std::max<std::int64_t>(8, n));
  std::vector<VmId> vms;
  for (std::uint32_t i = 0; i < n; ++i) vms.push_back(hv.create_vm(share, Priority::Batch));

  SimTime last{};
  std::function<void(RingId, std::uint32_t)> pump = [&](RingId ring, std::uint32_t left) {
    if (left == 0) return;
    io.submit(ring, size, Direction::In, [&, ring, left](const Completion& c) {
      last = std::max(last, c.completed_at);
      pump(ring, left - 1);
    });
  };
  for (VmId v : vms) pump(hv.vm(v).io_rings.front(), rounds);
  engine.run();

  ThroughputRow row;
  row.vm_count = n;
  row.size_bytes = size;
  row.throughput_gibs = static_cast<double>(io.completed_bits()) / last.seconds_f() / kGibit;
  row.model_gibs = effective_throughput(base.link, size, n);
  row.alloc_pct = fabric.utilization().lut;
  SimTime streaming{};
  for (VmId v : vms) streaming += io.streaming_time(v);
  row.busy_util_pct = row.alloc_pct * static_cast<double>(streaming.count()) /
                      (static_cast<double>(n) * static_cast<double>(last.count()));
  return row;
}

}  // namespace

std::vector<std::uint32_t> default_vm_counts() { return {1, 2, 4}; }

std::vector<std::uint64_t> default_sizes() {
  std::vector<std::uint64_t> sizes;
  for (std::uint64_t s = 4096; s <= (std::uint64_t{1} << 30); s *= 4) sizes.push_back(s);
  return sizes;
}

std::vector<ThroughputRow> bench_throughput(const Scenario& base,
                                            std::span<const std::uint32_t> vm_counts,
                                            std::span<const std::uint64_t> sizes,
                                            const Options& opts, std::uint32_t rounds) {
  check_base(base);
  if (rounds == 0) throw ConfigError("rounds must be positive");
  for (std::uint32_t n : vm_counts) {
    if (n == 0 || n > 8 * 64) throw ConfigError("vm count " + std::to_string(n) + " out of range");
    try {
      (void)base.link.peak_bw(n);
    } catch (const OutOfDomain& e) {
      throw ConfigError(e.what());
    }
  }
  for (std::uint64_t s : sizes) {
    if (s == 0) throw ConfigError("transfer sizes must be positive");
  }
  std::vector<std::pair<std::uint32_t, std::uint64_t>> cells;
  for (std::uint32_t n : vm_counts) {
    for (std::uint64_t s : sizes) cells.emplace_back(n, s);
  }
  return run_cells<ThroughputRow>(cells.size(), opts, [&](std::size_t i, std::ostream* trace) {
    return throughput_cell(base, cells[i].first, cells[i].second, rounds, trace);
  });
}

void write_throughput_csv(std::ostream& out, std::span<const ThroughputRow> rows) {
  out << "vm_count,size_bytes,throughput_gibs,model_gibs,alloc_pct,busy_util_pct\n";
  for (const ThroughputRow& r : rows) {
    out << r.vm_count << ',' << r.size_bytes << ',' << format_exact(r.throughput_gibs) << ','
        << format_exact(r.model_gibs) << ',' << format_exact(r.alloc_pct) << ','
        << format_exact(r.busy_util_pct) << '\n';
  }
}

std::vector<TaskEntry> reference_workload() {
  std::vector<TaskEntry> tasks;
  for (std::uint32_t i = 0; i < 40; ++i) {
    TaskEntry t;
    t.name = "ref" + std::to_string(i);
    t.raw.shape = {100, 8, i % 2 == 0 ? 256u : 128u};
    t.raw.data_size = 1 << 20;
    if (i % 4 == 0) t.raw.deadline = SimTime::ms(50);
    tasks.push_back(t);
  }
  return tasks;
}

std::vector<EnergyRow> bench_energy(const Scenario& base, std::uint32_t max_accelerators,
                                    const Options& opts) {
  check_base(base);
  if (max_accelerators == 0) throw ConfigError("accelerator range must start at 1");
  const std::vector<TaskEntry> workload = reference_workload();
  std::uint64_t reference_ops = 0;
  for (const TaskEntry& t : workload) reference_ops += snn::workload_cost(t.raw.shape);
  const double reference_dyn = task_energy(reference_ops, base.energy);
  if (energy_for_accelerators(1, base.energy) < reference_dyn) {
    throw ConfigError("energy base is below the reference workload's dynamic energy");
  }

  return run_cells<EnergyRow>(max_accelerators, opts, [&](std::size_t i, std::ostream* trace) {
    const auto n = static_cast<std::uint32_t>(i + 1);
    // One neurocore per accelerator; the grid grows when n exceeds the default.
    FabricConfig fc = base.fabric;
    fc.neurocore_count = std::max(fc.neurocore_count, n);
    fc.core_footprint = fc.total.scaled(1, 2 * std::int64_t{fc.neurocore_count});
    Engine engine(base.seed);
    if (trace != nullptr) {
      *trace << "# bench-energy accelerators=" << n << '\n';
      engine.set_trace(trace);
    }
    Fabric fabric(fc);
    IoDriver io(engine, base.link);
    Hypervisor hv(engine, fabric, io, base.reconfig);
    Scheduler sched(engine, hv, base.scheduler);
    for (std::uint32_t a = 0; a < n; ++a) hv.create_vm(fc.core_footprint, Priority::Batch);

    EnergyRow row;
    row.accelerators = n;
    sched.on_start([&](const TaskSpec& t, const Assignment&) {
      RandomStream rng(base.seed, "snn/" + to_string(t.id));
      const auto r = snn::run_workload(t.shape, base.lif, rng);
      row.synaptic_ops += r.synaptic_ops;
      row.output_spikes += r.output_spikes;
    });
    for (std::uint32_t k = 0; k < workload.size(); ++k) {
      sched.submit(profile(TaskId{k}, workload[k].raw, fc.neurons_per_core));
    }
    engine.run();
    if (sched.completed().size() != workload.size()) {
      throw ConfigError("reference workload did not complete on " + std::to_string(n) +
                        " accelerators");
    }
    row.makespan = sched.makespan();
    row.dynamic_mj = task_energy(row.synaptic_ops, base.energy);
    // The accelerator model prices one workload unit; its dynamic share is
    // replaced by what the simulation actually executed.
    row.energy_mj = (energy_for_accelerators(n, base.energy) - reference_dyn) + row.dynamic_mj;
    return row;
  });
}

void write_energy_csv(std::ostream& out, std::span<const EnergyRow> rows) {
  out << "accelerators,energy_mj,dynamic_mj,synaptic_ops,output_spikes,makespan_ns\n";
  for (const EnergyRow& r : rows) {
    out << r.accelerators << ',' << format_exact(r.energy_mj) << ',' << format_exact(r.dynamic_mj)
        << ',' << r.synaptic_ops << ',' << r.output_spikes << ',' << r.makespan.count() << '\n';
  }
}

namespace {

struct PolicyResult {
  SimTime total{};
  SimTime makespan{};
  std::uint32_t swaps = 0;
};

PolicyResult reconfig_policy(const Scenario& base, const std::vector<ModuleSpec>& catalog,
                             std::uint32_t n, std::uint32_t swaps_per_vm, ReconfigMode mode,
                             std::ostream* trace) {
  Engine engine(base.seed);
  if (trace != nullptr) {
    *trace << "# bench-reconfig vm_count=" << n << " mode=" << to_string(mode) << '\n';
    engine.set_trace(trace);
  }
  Fabric fabric(base.fabric);
  IoDriver io(engine, base.link);
  Hypervisor hv(engine, fabric, io, base.reconfig);

  std::vector<DfxModule> modules;
  for (std::uint32_t i = 0; i < catalog.size(); ++i) {
    modules.push_back(make_module(ModuleId{i}, catalog[i].name, catalog[i].kind,
                                  catalog[i].fraction, fabric.config()));
  }

  const ResourceVector share = fabric.total().scaled(1, n);
  PolicyResult result;
  std::function<void(VmId, const std::vector<const DfxModule*>&, std::uint32_t)> swap =
      [&](VmId vm, const std::vector<const DfxModule*>& fitting, std::uint32_t k) {
        if (k == swaps_per_vm) return;
        const std::vector<ModuleId> loaded = hv.vm(vm).loaded_modules;
        for (ModuleId m : loaded) hv.unload_module(vm, m);
        hv.load_module(vm, *fitting[k % fitting.size()], mode,
                       [&swap, vm, &fitting, k](const ReconfigRecord&) { swap(vm, fitting, k + 1); });
        ++result.swaps;
      };

  std::vector<std::pair<VmId, std::vector<const DfxModule*>>> plan;
  for (std::uint32_t i = 0; i < n; ++i) {
    const VmId vm = hv.create_vm(share, Priority::Batch);
    std::vector<const DfxModule*> fitting;
    for (const DfxModule& m : modules) {
      if (m.footprint.fits_within(share)) fitting.push_back(&m);
    }
    if (fitting.empty()) {
      throw ConfigError("no catalog module fits a VM of 1/" + std::to_string(n) + " fabric");
    }
    plan.emplace_back(vm, std::move(fitting));
  }
  for (const auto& [vm, fitting] : plan) swap(vm, fitting, 0);
  engine.run();

  result.total = hv.reconfig_total(mode);
  result.makespan = engine.now();
  return result;
}

}  // namespace

std::vector<ReconfigRow> bench_reconfig(const Scenario& base,
                                        std::span<const std::uint32_t> vm_counts,
                                        const Options& opts, std::uint32_t swaps_per_vm) {
  check_base(base);
  if (swaps_per_vm == 0) throw ConfigError("swaps per VM must be positive");
  for (std::uint32_t n : vm_counts) {
    if (n == 0) throw ConfigError("vm counts must be at least 1");
  }
  const std::vector<ModuleSpec> catalog =
      base.modules.empty() ? default_module_catalog() : base.modules;
  return run_cells<ReconfigRow>(vm_counts.size(), opts, [&](std::size_t i, std::ostream* trace) {
    const std::uint32_t n = vm_counts[i];
    const PolicyResult full = reconfig_policy(base, catalog, n, swaps_per_vm, ReconfigMode::Full, trace);
    const PolicyResult part =
        reconfig_policy(base, catalog, n, swaps_per_vm, ReconfigMode::Partial, trace);
    ReconfigRow row;
    row.vm_count = n;
    row.swaps = full.swaps;
    row.full = full.total;
    row.partial = part.total;
    row.full_makespan = full.makespan;
    row.partial_makespan = part.makespan;
    return row;
  });
}

void write_reconfig_csv(std::ostream& out, std::span<const ReconfigRow> rows) {
  out << "vm_count,swaps,full_ns,partial_ns,gap_ns,full_makespan_ns,partial_makespan_ns\n";
  for (const ReconfigRow& r : rows) {
    out << r.vm_count << ',' << r.swaps << ',' << r.full.count() << ',' << r.partial.count() << ','
        << r.gap().count() << ',' << r.full_makespan.count() << ',' << r.partial_makespan.count()
        << '\n';
  }
}

}  // namespace neurovm::bench
