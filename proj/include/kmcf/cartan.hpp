#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmcf/index_set.hpp"

namespace kmcf {

/// Generalized Cartan matrix.
///
/// Entry convention, used by every module: A(i, j) = <a_j, a_i^vee>, i.e. row i
/// holds the pairings of all simple roots against the simple coroot a_i^vee.
/// Consequently the simple reflection s_i acts on
///   root coordinates      n  ->  n - (A n)_i e_i
///   coroot coordinates    m  ->  m - (A^T m)_i e_i
/// and on coweight pairings p_j = <y, a_j^vee> by p_j -> p_j - A(j, i) p_i.
///
/// Instances are immutable and safe to share across threads.
class Gcm {
 public:
  int rank() const { return rank_; }
  int operator()(int i, int j) const { return entries_[static_cast<std::size_t>(i * rank_ + j)]; }
  const std::string& label() const { return label_; }
  std::vector<std::vector<int>> rows() const;

  /// Principal submatrix indexed by `x`, in increasing index order.
  Gcm restrict_to(IndexSet x) const;

  /// {"label": ..., "matrix": [[...]]}
  nlohmann::json to_json() const;

  bool operator==(const Gcm& o) const { return rank_ == o.rank_ && entries_ == o.entries_; }

 private:
  friend Gcm validate_gcm(const std::vector<std::vector<int>>& raw, std::string label);
  Gcm(int rank, std::vector<int> entries, std::string label)
      : rank_(rank), entries_(std::move(entries)), label_(std::move(label)) {}

  int rank_ = 0;
  std::vector<int> entries_;
  std::string label_;
};

/// Checks R1 (diagonal 2), R2 (non-positive off-diagonal) and R3 (symmetric
/// zero pattern). Violations report 1-based row/column.
Gcm validate_gcm(const std::vector<std::vector<int>>& raw, std::string label = {});

/// Transpose; the Cartan matrix of the dual root system.
Gcm dual(const Gcm& gcm);

/// Parses the GCM file schema {"label": string, "matrix": [[int]]}.
Gcm gcm_from_json(const nlohmann::json& j);
Gcm load_gcm(const std::filesystem::path& path);

/// Exact determinant of the principal submatrix on `x` (1 for the empty set).
std::int64_t principal_minor(const Gcm& gcm, IndexSet x);

/// |W_X| < infinity, decided by positivity of every principal minor of A_X.
bool is_w_finite(const Gcm& gcm, IndexSet x);

/// A parabolic subset together with its finiteness flag, computed once.
class ParabolicSubset {
 public:
  ParabolicSubset(const Gcm& gcm, IndexSet x);

  const Gcm& parent() const { return *parent_; }
  IndexSet subset() const { return subset_; }
  bool w_finite() const { return finite_; }

 private:
  const Gcm* parent_;
  IndexSet subset_;
  bool finite_;
};

/// All W-finite subsets, ordered by size then bitmask.
std::vector<IndexSet> w_finite_subsets(const Gcm& gcm);

}  // namespace kmcf
