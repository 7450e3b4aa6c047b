#include "neurovm/simulation.hpp"

#include "neurovm/errors.hpp"
#include "neurovm/snn.hpp"

namespace neurovm {

Simulation::Simulation(const Scenario& scenario, std::ostream* trace)
    : scenario_(scenario),
      engine_(scenario.seed),
      fabric_(scenario.fabric),
      io_(engine_, scenario.link),
      hv_(engine_, fabric_, io_, scenario.reconfig),
      sched_(engine_, hv_, scenario.scheduler),
      metrics_(scenario.energy) {
  scenario_.validate();
  engine_.set_trace(trace);
  for (std::uint32_t i = 0; i < scenario_.modules.size(); ++i) {
    const ModuleSpec& m = scenario_.modules[i];
    modules_.emplace(m.name, make_module(ModuleId{i}, m.name, m.kind, m.fraction, fabric_.config()));
  }
  for (const VmSpec& v : scenario_.vms) vms_.emplace(v.name, hv_.create_vm(v.request, v.priority));

  // Each started task executes its spiking workload; the counted synaptic
  // ops drive dynamic energy.
  sched_.on_start([this](const TaskSpec& t, const Assignment&) {
    RandomStream rng(engine_.seed(), "snn/" + to_string(t.id));
    const auto result = snn::run_workload(t.shape, scenario_.lif, rng);
    metrics_.add_synaptic_ops(result.synaptic_ops);
    output_spikes_ += result.output_spikes;
  });
}

void Simulation::submit_transfer(VmId vm, std::uint64_t size, Direction dir,
                                 std::uint32_t remaining) {
  if (remaining == 0 || !hv_.contains(vm)) return;
  const RingId ring = hv_.vm(vm).io_rings.front();
  const Submission sub = io_.submit(ring, size, dir, [this, vm, size, dir, remaining](const Completion&) {
    ++transfers_done_;
    submit_transfer(vm, size, dir, remaining - 1);
  });
  if (!sub.accepted()) {
    // Backpressure: retry on the next scheduler tick.
    engine_.schedule_in(
        scenario_.scheduler.tick, EventKind::Control,
        [this, vm, size, dir, remaining] { submit_transfer(vm, size, dir, remaining); },
        "retry " + to_string(vm));
  }
}

void Simulation::apply_reconfig(const ReconfigEntry& e) {
  const VmId id = vms_.at(e.vm);
  const DfxModule& m = modules_.at(e.module);
  // A swap replaces whatever the VM has loaded.
  const std::vector<ModuleId> loaded = hv_.vm(id).loaded_modules;
  for (ModuleId old : loaded) hv_.unload_module(id, old);
  hv_.load_module(id, m, e.mode);
}

void Simulation::sample_loop() {
  metrics_.sample(engine_.now(), fabric_, io_, hv_);
  const SimTime next = engine_.now() + scenario_.sample_period;
  if (next <= scenario_.duration) {
    engine_.schedule(next, EventKind::Control, [this] { sample_loop(); }, "sample");
  }
}

RunSummary Simulation::run() {
  for (std::uint32_t i = 0; i < scenario_.tasks.size(); ++i) {
    sched_.submit(profile(TaskId{i}, scenario_.tasks[i].raw, fabric_.config().neurons_per_core));
  }
  for (const TransferEntry& t : scenario_.transfers) {
    const VmId vm = vms_.at(t.vm);
    engine_.schedule(
        t.at, EventKind::Control, [this, vm, t] { submit_transfer(vm, t.size, t.direction, t.repeat); },
        "transfer " + t.vm);
  }
  for (const ReconfigEntry& e : scenario_.reconfigurations) {
    engine_.schedule(e.at, EventKind::Control, [this, e] { apply_reconfig(e); },
                     "reconfig " + e.vm + ' ' + e.module);
  }
  engine_.schedule(SimTime{}, EventKind::Control, [this] { sample_loop(); }, "sample");

  RunSummary s;
  s.events = engine_.run_until(scenario_.duration);
  if (metrics_.samples().empty() || metrics_.samples().back().at != scenario_.duration) {
    metrics_.sample(scenario_.duration, fabric_, io_, hv_);
  }
  s.tasks_completed = sched_.completed().size();
  for (const TaskOutcome& o : sched_.completed()) s.deadline_misses += o.missed_deadline() ? 1 : 0;
  s.migrations = sched_.migrations().size();
  s.transfers_completed = transfers_done_;
  s.synaptic_ops = metrics_.synaptic_ops();
  s.output_spikes = output_spikes_;
  s.reconfig_full = hv_.reconfig_total(ReconfigMode::Full);
  s.reconfig_partial = hv_.reconfig_total(ReconfigMode::Partial);
  return s;
}

RunSummary run_scenario(const Scenario& scenario, std::ostream& csv, std::ostream* trace) {
  Simulation sim(scenario, trace);
  RunSummary s = sim.run();
  sim.metrics().export_csv(csv);
  return s;
}

}  // namespace neurovm
