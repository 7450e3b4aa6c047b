#include "neurovm/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "neurovm/errors.hpp"

namespace neurovm {

void EnergyModel::validate() const {
  if (!(base_mj > 0.0)) throw InvalidConfig("energy base_mj must be positive");
  if (!(slope_mj >= 0.0)) throw InvalidConfig("energy slope_mj must be non-negative");
  if (!(dyn_nj_per_synop >= 0.0)) throw InvalidConfig("dyn_nj_per_synop must be non-negative");
}

double energy_for_accelerators(std::uint32_t n, const EnergyModel& model) {
  if (n == 0) throw OutOfDomain("energy model needs at least one accelerator");
  return model.base_mj + static_cast<double>(n - 1) * model.slope_mj;
}

double task_energy(std::uint64_t ops, const EnergyModel& model) {
  return static_cast<double>(ops) * model.dyn_nj_per_synop / 1e6;
}

std::string format_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string format_exact(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

MetricsRecorder::MetricsRecorder(EnergyModel model) : model_(model) { model_.validate(); }

void MetricsRecorder::add_synaptic_ops(std::uint64_t ops) {
  synaptic_ops_ += ops;
  energy_mj_ += task_energy(ops, model_);
}

const MetricSample& MetricsRecorder::sample(SimTime now, const Fabric& fabric, const IoDriver& io,
                                            const Hypervisor& hv) {
  MetricSample s;
  s.at = now;
  s.utilization = fabric.utilization();
  const std::uint64_t bits = io.completed_bits();
  const SimTime window = now - last_at_;
  if (window.count() > 0) {
    s.throughput_gibs = static_cast<double>(bits - last_bits_) / window.seconds_f() / kGibit;
  }
  s.energy_mj = energy_mj_;
  s.reconfig_full = hv.reconfig_total(ReconfigMode::Full);
  s.reconfig_partial = hv.reconfig_total(ReconfigMode::Partial);
  last_at_ = now;
  last_bits_ = bits;
  samples_.push_back(s);
  return samples_.back();
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricSample>& samples) {
  out << kMetricsCsvHeader << '\n';
  for (const MetricSample& s : samples) {
    out << s.at.count() << ',' << format_sig(s.utilization.lut) << ','
        << format_sig(s.utilization.memory) << ',' << format_sig(s.utilization.io) << ','
        << format_sig(s.utilization.dsp) << ',' << format_sig(s.throughput_gibs) << ','
        << format_sig(s.energy_mj) << ',' << s.reconfig_full.count() << ','
        << s.reconfig_partial.count() << '\n';
  }
}

void MetricsRecorder::export_csv(std::ostream& out) const {
  write_metrics_csv(out, samples_);
  if (!out) throw ExportIoFailure("failed writing metrics CSV");
}

void MetricsRecorder::export_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ExportIoFailure("cannot open " + path.string() + " for writing");
  export_csv(f);
  f.flush();
  if (!f) throw ExportIoFailure("failed writing " + path.string());
}

}  // namespace neurovm
