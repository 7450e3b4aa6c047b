#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>

#include "neurovm/ids.hpp"
#include "neurovm/sim_time.hpp"

namespace neurovm {

enum class EventKind : std::uint8_t {
  TransferComplete,
  ReconfigStart,
  ReconfigDone,
  SpikeStep,
  SchedulerTick,
  TaskArrival,
  TaskDone,
  Control,
};

std::string_view to_string(EventKind kind);

using EventId = std::uint64_t;

/// Counter-based uniform stream. The n-th draw depends only on (seed, stream name, n).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view stream);

  /// Uniform in [0, 1).
  double next();
  std::uint64_t next_u64();
  /// Uniform integer in [0, bound).
  std::uint64_t next_below(std::uint64_t bound);
  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Discrete-event engine. Events fire in strictly ascending (fire_at, seq) order.
///
/// Events may carry an owning VM; `postpone_owned` shifts every pending event
/// of one VM, which is how reconfiguration stalls are applied.
class Engine {
 public:
  using Handler = std::function<void()>;

  explicit Engine(std::uint64_t seed = 0);

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  EventId schedule(SimTime at, EventKind kind, Handler handler, std::string detail = {},
                   std::optional<VmId> owner = std::nullopt);
  EventId schedule_in(SimTime delay, EventKind kind, Handler handler, std::string detail = {},
                      std::optional<VmId> owner = std::nullopt) {
    return schedule(now_ + delay, kind, std::move(handler), std::move(detail), owner);
  }

  bool cancel(EventId id);
  bool pending(EventId id) const { return index_.contains(id); }
  std::optional<SimTime> fire_time(EventId id) const;

  /// Delays every pending event owned by `vm` by `delta`; returns how many moved.
  std::size_t postpone_owned(VmId vm, SimTime delta);

  /// Processes every event with fire_at <= t_end, then advances now() to t_end.
  std::size_t run_until(SimTime t_end);
  /// Processes events until the queue is empty.
  std::size_t run();
  bool step();

  SimTime now() const { return now_; }
  std::size_t queued() const { return queue_.size(); }
  std::uint64_t processed() const { return processed_; }
  std::uint64_t seed() const { return seed_; }

  double rng_next(std::string_view stream);

  /// Every processed event is written as `tick,seq,kind,detail` when a sink is set.
  void set_trace(std::ostream* sink) { trace_ = sink; }

 private:
  struct Key {
    SimTime at;
    EventId seq;
    auto operator<=>(const Key&) const = default;
  };
  struct Event {
    EventKind kind;
    Handler handler;
    std::string detail;
    std::optional<VmId> owner;
  };

  void fire(std::map<Key, Event>::iterator it);

  std::uint64_t seed_;
  SimTime now_{};
  EventId next_seq_ = 0;
  std::uint64_t processed_ = 0;
  std::map<Key, Event> queue_;
  std::unordered_map<EventId, SimTime> index_;
  std::unordered_map<std::string, RandomStream> streams_;
  std::ostream* trace_ = nullptr;
};

}  // namespace neurovm
