#pragma once

#include <cstdint>
#include <string>

namespace neurovm {

enum class VmId : std::uint32_t {};
enum class SlotId : std::uint32_t {};
enum class RingId : std::uint32_t {};
enum class ModuleId : std::uint32_t {};
enum class TaskId : std::uint32_t {};

template <typename Id>
constexpr std::uint32_t raw(Id id) noexcept {
  return static_cast<std::uint32_t>(id);
}

inline std::string to_string(VmId id) { return "vm" + std::to_string(raw(id)); }
inline std::string to_string(SlotId id) { return "slot" + std::to_string(raw(id)); }
inline std::string to_string(RingId id) { return "ring" + std::to_string(raw(id)); }
inline std::string to_string(ModuleId id) { return "mod" + std::to_string(raw(id)); }
inline std::string to_string(TaskId id) { return "task" + std::to_string(raw(id)); }

}  // namespace neurovm
