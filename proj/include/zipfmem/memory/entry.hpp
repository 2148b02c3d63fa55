#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace zipfmem::memory {

struct EntryId {
  std::uint64_t episode = 0;
  std::uint64_t step = 0;
  auto operator<=>(const EntryId&) const = default;
  std::string str() const { return std::to_string(episode) + ":" + std::to_string(step); }
};

}  // namespace zipfmem::memory
