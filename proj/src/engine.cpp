#include "neurovm/engine.hpp"

#include <vector>

#include "neurovm/errors.hpp"

namespace neurovm {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TransferComplete: return "TransferComplete";
    case EventKind::ReconfigStart: return "ReconfigStart";
    case EventKind::ReconfigDone: return "ReconfigDone";
    case EventKind::SpikeStep: return "SpikeStep";
    case EventKind::SchedulerTick: return "SchedulerTick";
    case EventKind::TaskArrival: return "TaskArrival";
    case EventKind::TaskDone: return "TaskDone";
    case EventKind::Control: return "Control";
  }
  return "Unknown";
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view stream)
    : key_(splitmix64(splitmix64(seed) ^ fnv1a(stream))) {}

std::uint64_t RandomStream::next_u64() {
  return splitmix64(key_ ^ splitmix64(counter_++));
}

double RandomStream::next() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::next_below(std::uint64_t bound) {
  if (bound == 0) return 0;
  // Lemire-style rejection keeps the result unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % bound;
}

Engine::Engine(std::uint64_t seed) : seed_(seed) {}

EventId Engine::schedule(SimTime at, EventKind kind, Handler handler, std::string detail,
                         std::optional<VmId> owner) {
  if (at < now_) {
    throw SchedulingInPast("event at " + to_string(at) + " precedes now " + to_string(now_));
  }
  const EventId id = next_seq_++;
  queue_.emplace(Key{at, id}, Event{kind, std::move(handler), std::move(detail), owner});
  index_.emplace(id, at);
  return id;
}

bool Engine::cancel(EventId id) {
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  queue_.erase(Key{it->second, id});
  index_.erase(it);
  return true;
}

std::optional<SimTime> Engine::fire_time(EventId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Engine::postpone_owned(VmId vm, SimTime delta) {
  if (delta.count() <= 0) return 0;
  std::vector<std::map<Key, Event>::node_type> moved;
  for (auto it = queue_.begin(); it != queue_.end();) {
    auto next = std::next(it);
    if (it->second.owner == vm) moved.push_back(queue_.extract(it));
    it = next;
  }
  for (auto& node : moved) {
    node.key().at += delta;
    index_[node.key().seq] = node.key().at;
    queue_.insert(std::move(node));
  }
  return moved.size();
}

void Engine::fire(std::map<Key, Event>::iterator it) {
  const Key key = it->first;
  Event ev = std::move(it->second);
  queue_.erase(it);
  index_.erase(key.seq);
  now_ = key.at;
  ++processed_;
  if (trace_ != nullptr) {
    *trace_ << key.at.count() << ',' << key.seq << ',' << to_string(ev.kind) << ',' << ev.detail
            << '\n';
  }
  if (ev.handler) ev.handler();
}

bool Engine::step() {
  if (queue_.empty()) return false;
  fire(queue_.begin());
  return true;
}

std::size_t Engine::run_until(SimTime t_end) {
  std::size_t count = 0;
  while (!queue_.empty() && queue_.begin()->first.at <= t_end) {
    fire(queue_.begin());
    ++count;
  }
  if (t_end > now_) now_ = t_end;
  return count;
}

std::size_t Engine::run() {
  std::size_t count = 0;
  while (step()) ++count;
  return count;
}

double Engine::rng_next(std::string_view stream) {
  auto it = streams_.find(std::string(stream));
  if (it == streams_.end()) {
    it = streams_.emplace(std::string(stream), RandomStream(seed_, stream)).first;
  }
  return it->second.next();
}

}  // namespace neurovm
