#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "neurovm/engine.hpp"
#include "neurovm/ids.hpp"
#include "neurovm/sim_time.hpp"
#include "neurovm/snn.hpp"
#include "neurovm/virt.hpp"

namespace neurovm {

/// Unprofiled task as it arrives from a workload description.
struct RawTask {
  snn::TaskShape shape;
  std::uint64_t data_size = 0;
  /// Present for real-time tasks.
  std::optional<SimTime> deadline;
  SimTime arrival{};
};

struct TaskSpec {
  TaskId id{};
  std::uint64_t compute_demand = 0;
  double parallelizability = 0.0;
  std::uint64_t data_size = 0;
  std::optional<SimTime> deadline;
  SimTime arrival{};
  snn::TaskShape shape;

  bool realtime() const { return deadline.has_value(); }
};

/// Demand is the workload's synaptic-op count; tasks wider than one core
/// are fully parallelizable.
TaskSpec profile(TaskId id, const RawTask& raw, std::uint32_t neurons_per_core);

/// Amdahl split of the demand over `cores`, rounded up to whole ticks.
/// `core_rate` is synaptic ops per nanosecond per core.
SimTime exec_time(const TaskSpec& task, std::uint32_t cores, double core_rate);

/// Scheduler's view of one VM.
struct VmView {
  VmId id{};
  std::uint32_t owned_cores = 0;
  std::uint32_t free_cores = 0;
  SimTime available_at{};
};

struct Assignment {
  TaskId task{};
  VmId vm{};
  std::uint32_t cores = 0;
  SimTime start{};
  SimTime projected_finish{};
};

/// Cores a task asks for on a VM: its parallel share of the VM, at least one,
/// at most what is free.
std::uint32_t cores_wanted(const TaskSpec& task, const VmView& vm);

/// Real-time tasks by earliest deadline, then batch tasks by arrival; each is
/// placed on the VM with the earliest availability among those with a free
/// core. Tasks that fit nowhere are left out of the result.
std::vector<Assignment> schedule_tick(std::span<const TaskSpec> ready, std::vector<VmView> vms,
                                      SimTime now, double core_rate);

struct RunningTask {
  TaskSpec task;
  Assignment assignment;
  /// Execution time on the assigned cores, stalls excluded.
  SimTime exec{};
  bool migrated = false;
};

struct Migration {
  TaskId task{};
  VmId from{};
  VmId to{};
  SimTime at{};
  SimTime penalty{};
  std::uint32_t cores = 0;
  SimTime new_finish{};
};

/// Moves real-time tasks projected to miss their deadline onto a VM whose idle
/// cores make the deadline, at most once per task, and only when the move
/// strictly improves the finish time.
std::vector<Migration> rebalance_on_contention(std::span<const RunningTask> running,
                                               std::vector<VmView> vms, SimTime now,
                                               SimTime penalty, double core_rate);

struct SchedulerParams {
  SimTime tick = SimTime::us(100);
  SimTime migration_penalty = SimTime::ms(1);
  double core_rate = 1.0;
  bool migrations = true;

  void validate() const;
};

struct TaskOutcome {
  TaskSpec task;
  Assignment first;
  VmId final_vm{};
  SimTime finished_at{};
  bool migrated = false;

  bool missed_deadline() const { return task.deadline && finished_at > *task.deadline; }
};

/// Dynamic service scheduler running on the engine. Dispatch happens on task
/// arrival, task completion and every periodic tick while work remains.
class Scheduler {
 public:
  using StartHandler = std::function<void(const TaskSpec&, const Assignment&)>;
  using DoneHandler = std::function<void(const TaskOutcome&)>;

  Scheduler(Engine& engine, Hypervisor& hv, SchedulerParams params = {});

  /// Queues the task for arrival at task.arrival (or now, if later).
  void submit(const TaskSpec& task);

  void on_start(StartHandler h) { on_start_ = std::move(h); }
  void on_done(DoneHandler h) { on_done_ = std::move(h); }

  std::size_t queued() const { return ready_.size(); }
  std::size_t running() const { return running_.size(); }
  const std::vector<TaskOutcome>& completed() const { return completed_; }
  const std::vector<Migration>& migrations() const { return migrations_; }
  const std::vector<Assignment>& assignments() const { return assignments_; }
  /// Latest completion time over finished tasks.
  SimTime makespan() const;
  std::uint32_t busy_cores(VmId vm) const;
  const SchedulerParams& params() const { return params_; }

 private:
  struct Running {
    RunningTask state;
    EventId done_event = 0;
  };

  std::vector<VmView> views() const;
  void dispatch();
  void rebalance();
  void arm_tick();
  void tick();
  void start(const Assignment& a, const TaskSpec& t);
  void finish(TaskId id);
  void on_stall(VmId vm, SimTime duration);

  Engine& engine_;
  Hypervisor& hv_;
  SchedulerParams params_;
  std::vector<TaskSpec> ready_;
  std::map<TaskId, Running> running_;
  std::map<TaskId, Assignment> first_assignment_;
  std::map<VmId, std::uint32_t> busy_;
  std::vector<TaskOutcome> completed_;
  std::vector<Migration> migrations_;
  std::vector<Assignment> assignments_;
  bool tick_armed_ = false;
  StartHandler on_start_;
  DoneHandler on_done_;
};

}  // namespace neurovm
