#include "radarfield/hash_table.hpp"

#include <bit>

namespace radarfield {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

SpatialHashTable::SpatialHashTable(std::uint64_t salt, std::size_t initial_capacity)
    : salt_(salt), probe_(std::bit_ceil(initial_capacity < 4 ? std::size_t{4} : initial_capacity), kMissing) {}

std::size_t SpatialHashTable::bucket(std::uint64_t key) const {
  return static_cast<std::size_t>(splitmix64(key ^ salt_)) & (probe_.size() - 1);
}

std::uint32_t SpatialHashTable::find(std::uint64_t key) const {
  const std::size_t mask = probe_.size() - 1;
  for (std::size_t b = bucket(key);; b = (b + 1) & mask) {
    const std::uint32_t slot = probe_[b];
    if (slot == kMissing) return kMissing;
    if (slot_keys_[slot] == key) return slot;
  }
}

std::pair<std::uint32_t, bool> SpatialHashTable::insert(std::uint64_t key) {
  if (const auto slot = find(key); slot != kMissing) return {slot, false};
  if (4 * (slot_keys_.size() + 1) > 3 * probe_.size()) grow();
  const auto slot = static_cast<std::uint32_t>(slot_keys_.size());
  slot_keys_.push_back(key);
  const std::size_t mask = probe_.size() - 1;
  std::size_t b = bucket(key);
  while (probe_[b] != kMissing) b = (b + 1) & mask;
  probe_[b] = slot;
  return {slot, true};
}

void SpatialHashTable::grow() {
  probe_.assign(probe_.size() * 2, kMissing);
  const std::size_t mask = probe_.size() - 1;
  for (std::uint32_t slot = 0; slot < slot_keys_.size(); ++slot) {
    std::size_t b = bucket(slot_keys_[slot]);
    while (probe_[b] != kMissing) b = (b + 1) & mask;
    probe_[b] = slot;
  }
}

}  // namespace radarfield
