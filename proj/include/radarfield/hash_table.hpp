#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace radarfield {

/// Exact open-addressing map from a packed 2D vertex key to a dense slot index.
/// Slots are assigned in insertion order and never move; the probe array is
/// rebuilt when the load factor would exceed 0.75.
class SpatialHashTable {
 public:
  static constexpr std::uint32_t kMissing = std::numeric_limits<std::uint32_t>::max();

  explicit SpatialHashTable(std::uint64_t salt = 0, std::size_t initial_capacity = 16);

  std::uint32_t find(std::uint64_t key) const;
  /// Returns {slot, inserted}.
  std::pair<std::uint32_t, bool> insert(std::uint64_t key);

  std::size_t size() const { return slot_keys_.size(); }
  std::size_t capacity() const { return probe_.size(); }
  std::uint64_t key_of(std::uint32_t slot) const { return slot_keys_[slot]; }
  const std::vector<std::uint64_t>& keys() const { return slot_keys_; }
  std::uint64_t salt() const { return salt_; }

  static std::uint64_t pack(std::int32_t i, std::int32_t j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) | static_cast<std::uint32_t>(j);
  }
  static std::int32_t unpack_i(std::uint64_t key) { return static_cast<std::int32_t>(key >> 32); }
  static std::int32_t unpack_j(std::uint64_t key) { return static_cast<std::int32_t>(key & 0xffffffffu); }

 private:
  std::size_t bucket(std::uint64_t key) const;
  void grow();

  std::uint64_t salt_;
  std::vector<std::uint32_t> probe_;  // slot index or kMissing
  std::vector<std::uint64_t> slot_keys_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace radarfield
