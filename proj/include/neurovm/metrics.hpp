#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "neurovm/fabric.hpp"
#include "neurovm/io_driver.hpp"
#include "neurovm/sim_time.hpp"
#include "neurovm/virt.hpp"

namespace neurovm {

/// Linear accelerator energy plus per-synaptic-op dynamic energy.
struct EnergyModel {
  double base_mj = 25.0;
  double slope_mj = 20.0 / 19.0;
  double dyn_nj_per_synop = 1.0;

  void validate() const;
};

/// Energy of one reference workload unit on `n` accelerators, in mJ.
double energy_for_accelerators(std::uint32_t n, const EnergyModel& model);
/// Dynamic energy of `ops` synaptic operations, in mJ.
double task_energy(std::uint64_t ops, const EnergyModel& model);

struct MetricSample {
  SimTime at{};
  Utilization utilization;
  double throughput_gibs = 0.0;
  double energy_mj = 0.0;
  SimTime reconfig_full{};
  SimTime reconfig_partial{};
};

inline constexpr const char* kMetricsCsvHeader =
    "tick,lut_pct,mem_pct,io_pct,dsp_pct,throughput_gibs,energy_mj,reconfig_full_ns,"
    "reconfig_partial_ns";

/// Formats a double with `digits` significant digits ("%.*g").
std::string format_sig(double v, int digits = 6);
/// Shortest text that parses back to exactly `v`.
std::string format_exact(double v);

/// Collects snapshots of a running simulation.
class MetricsRecorder {
 public:
  explicit MetricsRecorder(EnergyModel model = {});

  void add_energy_mj(double mj) { energy_mj_ += mj; }
  void add_synaptic_ops(std::uint64_t ops);

  /// Throughput is measured over the window since the previous sample.
  const MetricSample& sample(SimTime now, const Fabric& fabric, const IoDriver& io,
                             const Hypervisor& hv);

  const std::vector<MetricSample>& samples() const { return samples_; }
  double energy_mj() const { return energy_mj_; }
  std::uint64_t synaptic_ops() const { return synaptic_ops_; }
  const EnergyModel& model() const { return model_; }

  void export_csv(std::ostream& out) const;
  /// Throws ExportIoFailure.
  void export_csv(const std::filesystem::path& path) const;

 private:
  EnergyModel model_;
  double energy_mj_ = 0.0;
  std::uint64_t synaptic_ops_ = 0;
  SimTime last_at_{};
  std::uint64_t last_bits_ = 0;
  std::vector<MetricSample> samples_;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricSample>& samples);

}  // namespace neurovm
