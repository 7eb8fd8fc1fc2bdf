#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace kmcf {

/// Subset of the simple-root indices {0, ..., l-1}, stored as a bitmask.
/// Indices are 0-based internally; text and JSON forms are 1-based.
class IndexSet {
 public:
  static constexpr int kMaxRank = 64;

  constexpr IndexSet() = default;
  constexpr explicit IndexSet(std::uint64_t bits) : bits_(bits) {}
  IndexSet(std::initializer_list<int> indices) {
    for (int i : indices) insert(i);
  }

  static constexpr IndexSet all(int rank) {
    return IndexSet(rank >= kMaxRank ? ~std::uint64_t{0} : ((std::uint64_t{1} << rank) - 1));
  }
  static IndexSet from_one_based(const std::vector<int>& indices);

  constexpr bool contains(int i) const { return (bits_ >> i) & 1U; }
  constexpr void insert(int i) { bits_ |= std::uint64_t{1} << i; }
  constexpr void erase(int i) { bits_ &= ~(std::uint64_t{1} << i); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr std::uint64_t bits() const { return bits_; }

  constexpr bool subset_of(IndexSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr IndexSet complement(int rank) const { return IndexSet(all(rank).bits_ & ~bits_); }
  constexpr IndexSet operator|(IndexSet o) const { return IndexSet(bits_ | o.bits_); }
  constexpr IndexSet operator&(IndexSet o) const { return IndexSet(bits_ & o.bits_); }
  constexpr bool operator==(const IndexSet&) const = default;
  constexpr auto operator<=>(const IndexSet&) const = default;

  std::vector<int> to_vector() const;
  std::vector<int> to_one_based() const;
  /// "{1,3}" style, 1-based.
  std::string to_string() const;

 private:
  std::uint64_t bits_ = 0;
};

}  // namespace kmcf
