#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "neurovm/scenario.hpp"
#include "neurovm/sim_time.hpp"

namespace neurovm::bench {

struct Options {
  /// Worker threads; every cell owns its engine, so results do not depend on this.
  unsigned jobs = 1;
  /// Receives the concatenated event traces of all cells, in cell order.
  std::ostream* trace = nullptr;
};

std::vector<std::uint32_t> default_vm_counts();
/// 4 KiB to 1 GiB in factors of four.
std::vector<std::uint64_t> default_sizes();

struct ThroughputRow {
  std::uint32_t vm_count = 0;
  std::uint64_t size_bytes = 0;
  /// Aggregate Gib/s measured from the simulation.
  double throughput_gibs = 0.0;
  /// Closed-form value of the link model.
  double model_gibs = 0.0;
  /// LUT share held by the streaming VMs.
  double alloc_pct = 0.0;
  /// Allocated share weighted by the fraction of time lanes spend moving bits.
  double busy_util_pct = 0.0;
};

/// `vm_count` VMs of an eighth of the fabric each stream `rounds` transfers of
/// each size back-to-back. Throws ConfigError.
std::vector<ThroughputRow> bench_throughput(const Scenario& base,
                                            std::span<const std::uint32_t> vm_counts,
                                            std::span<const std::uint64_t> sizes,
                                            const Options& opts = {}, std::uint32_t rounds = 4);
void write_throughput_csv(std::ostream& out, std::span<const ThroughputRow> rows);

struct EnergyRow {
  std::uint32_t accelerators = 0;
  double energy_mj = 0.0;
  double dynamic_mj = 0.0;
  std::uint64_t synaptic_ops = 0;
  std::uint64_t output_spikes = 0;
  SimTime makespan{};
};

/// Reference task set that defines one benchmark workload unit.
std::vector<TaskEntry> reference_workload();

/// Runs the reference workload on 1..max_accelerators single-core VMs.
/// Throws ConfigError.
std::vector<EnergyRow> bench_energy(const Scenario& base, std::uint32_t max_accelerators,
                                    const Options& opts = {});
void write_energy_csv(std::ostream& out, std::span<const EnergyRow> rows);

struct ReconfigRow {
  std::uint32_t vm_count = 0;
  std::uint32_t swaps = 0;
  SimTime full{};
  SimTime partial{};
  SimTime full_makespan{};
  SimTime partial_makespan{};

  SimTime gap() const { return full - partial; }
};

/// Each of `vm_count` VMs (an equal share of the fabric) performs
/// `swaps_per_vm` module swaps, cycling through the catalog modules that fit
/// it, once under a full-only and once under a partial-only policy.
/// Throws ConfigError.
std::vector<ReconfigRow> bench_reconfig(const Scenario& base,
                                        std::span<const std::uint32_t> vm_counts,
                                        const Options& opts = {}, std::uint32_t swaps_per_vm = 3);
void write_reconfig_csv(std::ostream& out, std::span<const ReconfigRow> rows);

}  // namespace neurovm::bench
