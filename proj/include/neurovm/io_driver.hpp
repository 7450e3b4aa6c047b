#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "neurovm/engine.hpp"
#include "neurovm/ids.hpp"
#include "neurovm/sim_time.hpp"

namespace neurovm {

inline constexpr double kGibit = 1024.0 * 1024.0 * 1024.0;

/// Latency-plus-bandwidth link shared by every VM attached to the driver.
struct LinkModel {
  SimTime latency = SimTime::us(10);
  /// Active-VM count -> aggregate peak in Gib/s. Counts between keys use the
  /// largest key not above them.
  std::map<std::uint32_t, double> peak_gibs{{1, 1.5}, {2, 2.9}, {4, 5.1}};
  std::uint32_t ring_capacity = 256;

  /// Throws OutOfDomain for counts below the smallest key.
  double peak_bw(std::uint32_t vm_count) const;
  /// Throws InvalidConfig.
  void validate() const;
};

/// Aggregate Gib/s when `vm_count` VMs each stream `size_bytes` transfers
/// back-to-back: bits / (latency + bits / peak), with bits summed over VMs.
double effective_throughput(const LinkModel& link, std::uint64_t size_bytes,
                            std::uint32_t vm_count);

/// Time a transfer of `size_bytes` holds a lane of `share_gibs`, latency included.
SimTime transfer_time(const LinkModel& link, std::uint64_t size_bytes, double share_gibs);

enum class Direction : std::uint8_t { In, Out };

struct TransferDescriptor {
  VmId vm{};
  std::uint64_t size = 0;
  Direction direction = Direction::In;
  SimTime submitted_at{};
};

struct IoRing {
  RingId id{};
  VmId vm{};
  std::uint32_t capacity = 0;
  std::uint32_t occupancy = 0;
  bool open = true;
  std::uint64_t submissions = 0;
  std::uint64_t completions = 0;
  std::uint64_t backpressured = 0;
  std::uint64_t drained = 0;
};

struct Completion {
  RingId ring{};
  TransferDescriptor descriptor;
  SimTime started_at{};
  SimTime completed_at{};
};

enum class SubmitStatus : std::uint8_t { Accepted, Backpressure };

struct Submission {
  SubmitStatus status = SubmitStatus::Backpressure;
  EventId completion_event = 0;
  SimTime completes_at{};

  bool accepted() const { return status == SubmitStatus::Accepted; }
};

/// Paravirtualized descriptor-ring driver.
///
/// Each VM with an open ring owns one lane of peak_bw(n) / n, where n is the
/// number of such VMs. Descriptors of one VM are served FIFO on its lane, so
/// one VM's traffic never changes another VM's completion times.
class IoDriver {
 public:
  using CompletionHandler = std::function<void(const Completion&)>;

  IoDriver(Engine& engine, LinkModel link);

  RingId open_ring(VmId vm, std::optional<std::uint32_t> capacity = std::nullopt);
  /// Cancels in-flight descriptors (counted as drained) and closes the ring.
  void close_ring(RingId id);

  /// Throws RingClosed; a full ring yields SubmitStatus::Backpressure.
  Submission submit(RingId ring, std::uint64_t size, Direction direction,
                    CompletionHandler on_complete = {});

  /// Applies a stall of `duration` starting now to `vm`'s lane. Pending
  /// completion events are moved by the engine; this shifts lane bookkeeping.
  void stall(VmId vm, SimTime duration);

  const LinkModel& link() const { return link_; }
  const IoRing& ring(RingId id) const;
  std::vector<RingId> ring_ids() const;
  std::uint32_t active_vms() const;
  /// Lane bandwidth each attached VM receives right now, in Gib/s.
  double lane_share_gibs() const;

  std::uint64_t completed_bits() const { return completed_bits_; }
  /// Time `vm`'s lane spent moving bits (latency excluded).
  SimTime streaming_time(VmId vm) const;

 private:
  struct InFlight {
    EventId event;
    RingId ring;
    TransferDescriptor descriptor;
    SimTime started_at;
    SimTime streaming;
    CompletionHandler handler;
  };

  IoRing& ring_mut(RingId id);
  void complete(std::uint64_t transfer);

  Engine& engine_;
  LinkModel link_;
  std::uint32_t next_ring_ = 0;
  std::map<RingId, IoRing> rings_;
  std::map<VmId, SimTime> lane_free_at_;
  std::map<VmId, SimTime> streaming_;
  std::uint64_t next_transfer_ = 0;
  std::map<std::uint64_t, InFlight> in_flight_;
  std::uint64_t completed_bits_ = 0;
};

}  // namespace neurovm
