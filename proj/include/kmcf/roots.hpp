#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "kmcf/cartan.hpp"

namespace kmcf {

using Coords = std::vector<std::int64_t>;

/// A positive real root b together with its coroot b^vee.
struct RootEntry {
  Coords root;    ///< b = sum_i root[i] a_i
  Coords coroot;  ///< b^vee = sum_i coroot[i] a_i^vee
  std::int64_t height = 0;
  std::int64_t coroot_height = 0;
  std::size_t index = 0;

  bool is_simple() const { return height == 1; }
  /// Support of the root (equal to the support of its coroot).
  IndexSet support() const;
};

/// Which height the table bound H refers to.
enum class HeightKind { Root, Coroot };

/// Queue discipline for the reflection closure; the resulting set does not
/// depend on it, only the work order does.
enum class Traversal { Fifo, Lifo };

struct RootOptions {
  HeightKind bound = HeightKind::Root;
  /// Restrict to the root subsystem generated by these simple roots
  /// (unset means all of them).
  std::optional<IndexSet> generators{};
  std::size_t max_entries = 500'000;
  Traversal traversal = Traversal::Fifo;
};

/// Positive real roots with height (of the chosen kind) at most H, ordered
/// by height, then reverse-lexicographically on root coordinates (so a_1
/// precedes a_2).
class RootTable {
 public:
  const Gcm& gcm() const { return gcm_; }
  std::int64_t height_bound() const { return bound_; }
  HeightKind bound_kind() const { return kind_; }
  IndexSet generators() const { return generators_; }

  std::size_t size() const { return entries_.size(); }
  const RootEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<RootEntry>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::optional<std::size_t> find(const Coords& root) const;
  std::optional<std::size_t> find_coroot(const Coords& coroot) const;

  /// True if every positive real root whose coroot height is <= h is present.
  bool covers_coroot_height(std::int64_t h) const;

 private:
  friend RootTable enumerate_roots(const Gcm& gcm, std::int64_t height, RootOptions options);
  RootTable(Gcm gcm, std::int64_t bound, HeightKind kind, IndexSet gens)
      : gcm_(std::move(gcm)), bound_(bound), kind_(kind), generators_(gens) {}

  Gcm gcm_;
  std::int64_t bound_;
  HeightKind kind_;
  IndexSet generators_;
  std::vector<RootEntry> entries_;
  std::map<Coords, std::size_t> by_root_;
  std::map<Coords, std::size_t> by_coroot_;
};

/// Reflection closure of the simple roots: s_i(b) = b - <b, a_i^vee> a_i with
/// the coroot transported by s_i(b^vee) = b^vee - <a_i, b^vee> a_i^vee.
RootTable enumerate_roots(const Gcm& gcm, std::int64_t height, RootOptions options = {});

/// s_i applied to root coordinates / coroot coordinates.
Coords reflect_root(const Gcm& gcm, int i, const Coords& root);
Coords reflect_coroot(const Gcm& gcm, int i, const Coords& coroot);

/// <b, b^vee> evaluated as coroot . (A root).
std::int64_t self_pairing(const Gcm& gcm, const RootEntry& entry);

/// <h, b^vee> = sum_i coroot[i] z_i.
std::complex<double> pairing(const RootEntry& entry, std::span<const std::complex<double>> z);

struct CompletionCount {
  std::size_t count = 0;
  bool saturated = false;
};

/// Number of (n_i)_{i in X} >= 0 such that sum_{i in X} n_i a_i + sum_{j not in X} p_j a_j
/// is a positive real root. `p` lists the coefficients on the complement of X
/// in increasing index order. Saturated when the count at height 2H equals
/// the count at height H.
CompletionCount count_parabolic_completions(const Gcm& gcm, IndexSet x, std::span<const std::int64_t> p,
                                            std::int64_t height);

}  // namespace kmcf
