#include "neurovm/sched.hpp"

#include <algorithm>
#include <cmath>

#include "neurovm/errors.hpp"

namespace neurovm {

namespace {

/// ceil(), but values within rounding noise of an integer stay on it.
std::int64_t ceil_ticks(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

bool edf_before(const TaskSpec& a, const TaskSpec& b) {
  if (a.realtime() != b.realtime()) return a.realtime();
  if (a.realtime() && *a.deadline != *b.deadline) return *a.deadline < *b.deadline;
  if (a.arrival != b.arrival) return a.arrival < b.arrival;
  return a.id < b.id;
}

}  // namespace

TaskSpec profile(TaskId id, const RawTask& raw, std::uint32_t neurons_per_core) {
  TaskSpec t;
  t.id = id;
  t.shape = raw.shape;
  t.compute_demand = snn::workload_cost(raw.shape);
  t.parallelizability =
      neurons_per_core == 0
          ? 1.0
          : std::min(1.0, static_cast<double>(raw.shape.fan_in) / neurons_per_core);
  t.data_size = raw.data_size;
  t.deadline = raw.deadline;
  t.arrival = raw.arrival;
  return t;
}

SimTime exec_time(const TaskSpec& task, std::uint32_t cores, double core_rate) {
  if (cores == 0) throw InvalidConfig("exec_time needs at least one core");
  if (!(core_rate > 0.0)) throw InvalidConfig("core rate must be positive");
  const double p = task.parallelizability;
  const double ticks =
      static_cast<double>(task.compute_demand) * ((1.0 - p) + p / cores) / core_rate;
  return SimTime{ceil_ticks(ticks)};
}

std::uint32_t cores_wanted(const TaskSpec& task, const VmView& vm) {
  const auto want = static_cast<std::uint32_t>(
      std::ceil(task.parallelizability * vm.owned_cores - 1e-9));
  return std::clamp<std::uint32_t>(want, 1, std::max<std::uint32_t>(1, vm.free_cores));
}

std::vector<Assignment> schedule_tick(std::span<const TaskSpec> ready, std::vector<VmView> vms,
                                      SimTime now, double core_rate) {
  std::vector<const TaskSpec*> order;
  order.reserve(ready.size());
  for (const TaskSpec& t : ready) order.push_back(&t);
  std::sort(order.begin(), order.end(),
            [](const TaskSpec* a, const TaskSpec* b) { return edf_before(*a, *b); });

  std::vector<Assignment> out;
  for (const TaskSpec* t : order) {
    VmView* best = nullptr;
    for (VmView& v : vms) {
      if (v.free_cores == 0) continue;
      const SimTime av = std::max(v.available_at, now);
      if (best == nullptr) {
        best = &v;
        continue;
      }
      const SimTime bav = std::max(best->available_at, now);
      if (av < bav || (av == bav && v.free_cores > best->free_cores)) best = &v;
    }
    if (best == nullptr) continue;
    Assignment a;
    a.task = t->id;
    a.vm = best->id;
    a.cores = cores_wanted(*t, *best);
    a.start = std::max(best->available_at, now);
    a.projected_finish = a.start + exec_time(*t, a.cores, core_rate);
    best->free_cores -= a.cores;
    out.push_back(a);
  }
  return out;
}

std::vector<Migration> rebalance_on_contention(std::span<const RunningTask> running,
                                               std::vector<VmView> vms, SimTime now,
                                               SimTime penalty, double core_rate) {
  std::vector<const RunningTask*> late;
  for (const RunningTask& r : running) {
    if (r.migrated || !r.task.realtime()) continue;
    if (r.assignment.projected_finish <= *r.task.deadline) continue;
    if (r.assignment.projected_finish <= now) continue;
    late.push_back(&r);
  }
  std::sort(late.begin(), late.end(), [](const RunningTask* a, const RunningTask* b) {
    return edf_before(a->task, b->task);
  });

  std::vector<Migration> out;
  for (const RunningTask* r : late) {
    const SimTime pf = r->assignment.projected_finish;
    double remaining = 1.0;
    if (r->assignment.start < now && r->exec.count() > 0) {
      remaining = std::min(1.0, static_cast<double>((pf - now).count()) /
                                    static_cast<double>(r->exec.count()));
    }
    VmView* best = nullptr;
    Migration best_m;
    for (VmView& v : vms) {
      if (v.id == r->assignment.vm || v.free_cores == 0 || v.available_at > now) continue;
      const std::uint32_t cores = cores_wanted(r->task, v);
      const double rest =
          remaining * static_cast<double>(exec_time(r->task, cores, core_rate).count());
      const SimTime finish = now + penalty + SimTime{ceil_ticks(rest)};
      if (finish > *r->task.deadline || finish >= pf) continue;
      if (best == nullptr || finish < best_m.new_finish) {
        best = &v;
        best_m = Migration{r->task.id, r->assignment.vm, v.id, now, penalty, cores, finish};
      }
    }
    if (best != nullptr) {
      best->free_cores -= best_m.cores;
      out.push_back(best_m);
    }
  }
  return out;
}

void SchedulerParams::validate() const {
  if (tick.count() <= 0) throw InvalidConfig("scheduler tick must be positive");
  if (migration_penalty.count() <= 0) throw InvalidConfig("migration penalty must be positive");
  if (!(core_rate > 0.0)) throw InvalidConfig("core rate must be positive");
}

Scheduler::Scheduler(Engine& engine, Hypervisor& hv, SchedulerParams params)
    : engine_(engine), hv_(hv), params_(params) {
  params_.validate();
  hv_.add_stall_listener([this](VmId vm, SimTime d) { on_stall(vm, d); });
}

void Scheduler::submit(const TaskSpec& task) {
  const SimTime at = std::max(task.arrival, engine_.now());
  engine_.schedule(
      at, EventKind::TaskArrival,
      [this, task] {
        ready_.push_back(task);
        dispatch();
      },
      to_string(task.id) + (task.realtime() ? " rt" : " batch"));
}

std::vector<VmView> Scheduler::views() const {
  std::vector<VmView> out;
  for (VmId id : hv_.vm_ids()) {
    const std::uint32_t owned = hv_.vm(id).cores;
    if (owned == 0) continue;
    out.push_back(VmView{id, owned, owned - busy_cores(id), hv_.available_at(id)});
  }
  return out;
}

std::uint32_t Scheduler::busy_cores(VmId vm) const {
  auto it = busy_.find(vm);
  return it == busy_.end() ? 0 : it->second;
}

void Scheduler::dispatch() {
  if (!ready_.empty()) {
    const auto plan = schedule_tick(ready_, views(), engine_.now(), params_.core_rate);
    for (const Assignment& a : plan) {
      auto it = std::find_if(ready_.begin(), ready_.end(),
                             [&](const TaskSpec& t) { return t.id == a.task; });
      const TaskSpec task = *it;
      ready_.erase(it);
      start(a, task);
    }
  }
  arm_tick();
}

void Scheduler::start(const Assignment& a, const TaskSpec& t) {
  busy_[a.vm] += a.cores;
  Running r;
  r.state.task = t;
  r.state.assignment = a;
  r.state.exec = a.projected_finish - a.start;
  const TaskId id = t.id;
  r.done_event = engine_.schedule(
      a.projected_finish, EventKind::TaskDone, [this, id] { finish(id); },
      to_string(id) + ' ' + to_string(a.vm) + " cores=" + std::to_string(a.cores), a.vm);
  running_.emplace(id, std::move(r));
  first_assignment_.emplace(id, a);
  assignments_.push_back(a);
  if (on_start_) on_start_(t, a);
}

void Scheduler::finish(TaskId id) {
  auto node = running_.extract(id);
  if (node.empty()) return;
  const RunningTask& r = node.mapped().state;
  busy_[r.assignment.vm] -= r.assignment.cores;
  TaskOutcome o;
  o.task = r.task;
  o.first = first_assignment_.at(id);
  o.final_vm = r.assignment.vm;
  o.finished_at = engine_.now();
  o.migrated = r.migrated;
  completed_.push_back(o);
  if (on_done_) on_done_(o);
  dispatch();
}

void Scheduler::rebalance() {
  if (!params_.migrations || running_.empty()) return;
  std::vector<RunningTask> snapshot;
  snapshot.reserve(running_.size());
  for (const auto& [_, r] : running_) snapshot.push_back(r.state);
  const auto moves = rebalance_on_contention(snapshot, views(), engine_.now(),
                                             params_.migration_penalty, params_.core_rate);
  for (const Migration& m : moves) {
    Running& r = running_.at(m.task);
    engine_.cancel(r.done_event);
    busy_[m.from] -= r.state.assignment.cores;
    busy_[m.to] += m.cores;
    r.state.assignment.vm = m.to;
    r.state.assignment.cores = m.cores;
    r.state.assignment.start = engine_.now();
    r.state.assignment.projected_finish = m.new_finish;
    r.state.exec = m.new_finish - engine_.now();
    r.state.migrated = true;
    const TaskId id = m.task;
    r.done_event = engine_.schedule(
        m.new_finish, EventKind::TaskDone, [this, id] { finish(id); },
        to_string(id) + ' ' + to_string(m.to) + " migrated_from=" + to_string(m.from), m.to);
    migrations_.push_back(m);
  }
}

void Scheduler::arm_tick() {
  if (tick_armed_ || running_.empty()) return;
  tick_armed_ = true;
  engine_.schedule_in(params_.tick, EventKind::SchedulerTick, [this] { tick(); }, "sched");
}

void Scheduler::tick() {
  tick_armed_ = false;
  dispatch();
  rebalance();
  arm_tick();
}

void Scheduler::on_stall(VmId vm, SimTime duration) {
  for (auto& [_, r] : running_) {
    Assignment& a = r.state.assignment;
    if (a.vm != vm) continue;
    a.projected_finish += duration;
    if (a.start > engine_.now()) a.start += duration;
  }
}

SimTime Scheduler::makespan() const {
  SimTime m{};
  for (const TaskOutcome& o : completed_) m = std::max(m, o.finished_at);
  return m;
}

}  // namespace neurovm
