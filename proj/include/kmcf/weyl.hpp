#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "kmcf/roots.hpp"

namespace kmcf {

using BigInt = boost::multiprecision::cpp_int;

/// Integer matrix of a Weyl group element acting on coroot coordinates:
/// coroot coordinates of w(b^vee) are M_w * coroot(b). Entries are
/// arbitrary precision since they grow exponentially in indefinite type.
class ActionMatrix {
 public:
  ActionMatrix() = default;
  static ActionMatrix identity(int rank);
  /// M_{s_i}: column j holds the coordinates of s_i(a_j^vee) = a_j^vee - A(j, i) a_i^vee.
  static ActionMatrix reflection(const Gcm& gcm, int i);

  int rank() const { return rank_; }
  const BigInt& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * rank_ + j)]; }

  ActionMatrix operator*(const ActionMatrix& rhs) const;
  /// M * v for integer coroot coordinates.
  std::vector<BigInt> apply(const Coords& v) const;
  /// M * v in floating point, for coweight pairings.
  std::vector<double> apply(std::span<const double> v) const;
  /// Transpose action on coweight coordinates: returns z' with z'_j = sum_i z_i M(i, j),
  /// i.e. z'_j = <h, w(a_j^vee)> when z_i = <h, a_i^vee>.
  std::vector<std::complex<double>> pull_back(std::span<const std::complex<double>> z) const;

  /// Sign of w(a_i^vee): +1 positive coroot, -1 negative coroot.
  int column_sign(int i) const;

  bool operator==(const ActionMatrix&) const = default;
  bool operator<(const ActionMatrix& o) const { return a_ < o.a_; }

 private:
  int rank_ = 0;
  std::vector<BigInt> a_;
};

struct WeylElement {
  /// 0-based generator indices; the element is s_{word[0]} s_{word[1]} ... s_{word[k-1]}.
  std::vector<int> word;
  int length = 0;
  ActionMatrix action;
  /// Indices into the RootTable used at enumeration; empty when the table
  /// was built without one.
  std::vector<std::size_t> inversions;
  /// {i : l(w s_i) < l(w)}, equivalently w(a_i) < 0.
  IndexSet right_descents;
  std::size_t index = 0;

  IndexSet support() const;
};

struct WeylOptions {
  /// Generate only the parabolic subgroup W_X (unset means all generators).
  std::optional<IndexSet> generators{};
  /// Order in which generators are tried within a shell (empty = increasing).
  std::vector<int> generator_order{};
  std::size_t max_elements = 2'000'000;
};

/// Elements of length <= L, grouped by length. Inversion indices refer to
/// the RootTable passed to enumerate_weyl, which must outlive their use.
class WeylTable {
 public:
  const Gcm& gcm() const { return gcm_; }
  int length_bound() const { return length_bound_; }
  IndexSet generators() const { return generators_; }
  bool has_inversions() const { return has_inversions_; }
  /// The whole (sub)group is enumerated: its longest element was found.
  bool closed() const { return closed_; }

  std::size_t size() const { return elements_.size(); }
  const WeylElement& operator[](std::size_t i) const { return elements_[i]; }
  const std::vector<WeylElement>& elements() const { return elements_; }
  auto begin() const { return elements_.begin(); }
  auto end() const { return elements_.end(); }

  /// Elements of length exactly k (empty span beyond the bound).
  std::span<const WeylElement> shell(int k) const;
  std::optional<std::size_t> find(const ActionMatrix& m) const;

 private:
  friend WeylTable enumerate_weyl_impl(const Gcm&, int, const RootTable*, const WeylOptions&);
  WeylTable(Gcm gcm, int length, IndexSet gens) : gcm_(std::move(gcm)), length_bound_(length), generators_(gens) {}

  Gcm gcm_;
  int length_bound_;
  IndexSet generators_;
  bool has_inversions_ = false;
  bool closed_ = false;
  std::vector<WeylElement> elements_;
  std::vector<std::size_t> shell_start_;
  std::map<ActionMatrix, std::size_t> by_matrix_;
};

/// BFS by length with dedup on action matrices; inversion sets built as
/// Phi(s_i w) = {a_i} u s_i(Phi(w)) for length-increasing extensions.
WeylTable enumerate_weyl(const Gcm& gcm, int length, const RootTable& roots, WeylOptions options = {});
/// Same, without inversion sets (cheap counting enumeration).
WeylTable enumerate_weyl(const Gcm& gcm, int length, WeylOptions options = {});

/// Builds a coroot-bounded root table deep enough to hold every inversion
/// root up to length L, doubling its height from `min_height` as needed.
std::pair<RootTable, WeylTable> enumerate_with_roots(const Gcm& gcm, int length, std::int64_t min_height,
                                                     WeylOptions options = {});

struct PoincareSeries {
  std::vector<std::uint64_t> coefficients;  ///< c_k = #{w : l(w) = k}
  bool exact = false;                       ///< complete polynomial of a finite group

  template <typename T>
  T evaluate(T t) const {
    T acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * t + static_cast<double>(*it);
    return acc;
  }
};

/// W(t) (or W_X(t)) truncated at the table's length bound.
PoincareSeries poincare(const WeylTable& table, std::optional<IndexSet> x = std::nullopt);

/// W^X restricted to the table: elements with no right descent in X.
std::vector<const WeylElement*> minimal_coset_reps(const WeylTable& table, IndexSet x);

/// 1 / (geometric mean of c_k^{1/k} over the top half of the coefficients);
/// +infinity for polynomials.
double estimate_radius(const PoincareSeries& series);

}  // namespace kmcf
