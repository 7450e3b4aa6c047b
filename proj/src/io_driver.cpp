#include "neurovm/io_driver.hpp"

#include <algorithm>
#include <set>

#include "neurovm/errors.hpp"

namespace neurovm {

double LinkModel::peak_bw(std::uint32_t vm_count) const {
  auto it = peak_gibs.upper_bound(vm_count);
  if (it == peak_gibs.begin()) {
    throw OutOfDomain("no peak bandwidth entry for " + std::to_string(vm_count) + " VMs");
  }
  return std::prev(it)->second;
}

void LinkModel::validate() const {
  if (latency.count() < 0) throw InvalidConfig("link latency must be non-negative");
  if (ring_capacity == 0) throw InvalidConfig("ring capacity must be positive");
  if (peak_gibs.empty()) throw InvalidConfig("link peak table is empty");
  double prev = 0.0;
  for (const auto& [n, bw] : peak_gibs) {
    if (n == 0 || !(bw > 0.0)) throw InvalidConfig("link peak entries must be positive");
    if (bw < prev) throw InvalidConfig("link peak table must be non-decreasing in VM count");
    prev = bw;
  }
}

double effective_throughput(const LinkModel& link, std::uint64_t size_bytes,
                            std::uint32_t vm_count) {
  const double peak = link.peak_bw(vm_count) * kGibit;
  const double bits = 8.0 * static_cast<double>(size_bytes) * vm_count;
  return bits / (link.latency.seconds_f() + bits / peak) / kGibit;
}

SimTime transfer_time(const LinkModel& link, std::uint64_t size_bytes, double share_gibs) {
  const double bits = 8.0 * static_cast<double>(size_bytes);
  return link.latency + SimTime::from_ns_rounded(bits / (share_gibs * kGibit) * 1e9);
}

IoDriver::IoDriver(Engine& engine, LinkModel link) : engine_(engine), link_(std::move(link)) {
  link_.validate();
}

RingId IoDriver::open_ring(VmId vm, std::optional<std::uint32_t> capacity) {
  const RingId id{next_ring_++};
  IoRing r;
  r.id = id;
  r.vm = vm;
  r.capacity = capacity.value_or(link_.ring_capacity);
  if (r.capacity == 0) throw InvalidConfig("ring capacity must be positive");
  rings_.emplace(id, r);
  lane_free_at_.try_emplace(vm, engine_.now());
  return id;
}

void IoDriver::close_ring(RingId id) {
  IoRing& r = ring_mut(id);
  if (!r.open) return;
  for (auto it = in_flight_.begin(); it != in_flight_.end();) {
    if (it->second.ring == id) {
      engine_.cancel(it->first);
      ++r.drained;
      --r.occupancy;
      it = in_flight_.erase(it);
    } else {
      ++it;
    }
  }
  r.open = false;
}

IoRing& IoDriver::ring_mut(RingId id) {
  auto it = rings_.find(id);
  if (it == rings_.end()) throw RingClosed("unknown " + to_string(id));
  return it->second;
}

const IoRing& IoDriver::ring(RingId id) const {
  auto it = rings_.find(id);
  if (it == rings_.end()) throw RingClosed("unknown " + to_string(id));
  return it->second;
}

std::vector<RingId> IoDriver::ring_ids() const {
  std::vector<RingId> ids;
  for (const auto& [id, _] : rings_) ids.push_back(id);
  return ids;
}

std::uint32_t IoDriver::active_vms() const {
  std::set<VmId> vms;
  for (const auto& [_, r] : rings_) {
    if (r.open) vms.insert(r.vm);
  }
  return static_cast<std::uint32_t>(vms.size());
}

double IoDriver::lane_share_gibs() const {
  const std::uint32_t n = std::max<std::uint32_t>(1, active_vms());
  return link_.peak_bw(n) / n;
}

Submission IoDriver::submit(RingId ring_id, std::uint64_t size, Direction direction,
                            CompletionHandler on_complete) {
  IoRing& r = ring_mut(ring_id);
  if (!r.open) throw RingClosed(to_string(ring_id) + " is closed");
  if (size == 0) throw InvalidConfig("transfer size must be positive");
  ++r.submissions;
  if (r.occupancy >= r.capacity) {
    ++r.backpressured;
    return {};
  }

  const double share = lane_share_gibs();
  SimTime& lane = lane_free_at_[r.vm];
  const SimTime start = std::max(engine_.now(), lane);
  const SimTime total = transfer_time(link_, size, share);
  const SimTime done = start + total;
  lane = done;

  const TransferDescriptor desc{r.vm, size, direction, engine_.now()};
  const std::string detail = to_string(r.vm) + ' ' + to_string(ring_id) + " bytes=" +
                             std::to_string(size) + (direction == Direction::In ? " in" : " out");
  const std::uint64_t transfer = next_transfer_++;
  const EventId ev = engine_.schedule(
      done, EventKind::TransferComplete, [this, transfer] { complete(transfer); }, detail, r.vm);
  in_flight_.emplace(transfer, InFlight{ev, ring_id, desc, start, total - link_.latency,
                                        std::move(on_complete)});
  ++r.occupancy;
  return {SubmitStatus::Accepted, ev, done};
}

void IoDriver::complete(std::uint64_t transfer) {
  auto node = in_flight_.extract(transfer);
  if (node.empty()) return;
  InFlight& f = node.mapped();
  IoRing& r = ring_mut(f.ring);
  --r.occupancy;
  ++r.completions;
  completed_bits_ += 8 * f.descriptor.size;
  streaming_[f.descriptor.vm] += f.streaming;
  if (f.handler) {
    f.handler(Completion{f.ring, f.descriptor, f.started_at, engine_.now()});
  }
}

void IoDriver::stall(VmId vm, SimTime duration) {
  auto it = lane_free_at_.find(vm);
  if (it == lane_free_at_.end()) return;
  it->second = std::max(it->second, engine_.now()) + duration;
  // Transfers queued behind the stall start later too.
  for (auto& [_, f] : in_flight_) {
    if (f.descriptor.vm == vm && f.started_at > engine_.now()) f.started_at += duration;
  }
}

SimTime IoDriver::streaming_time(VmId vm) const {
  auto it = streaming_.find(vm);
  return it == streaming_.end() ? SimTime{} : it->second;
}

}  // namespace neurovm
