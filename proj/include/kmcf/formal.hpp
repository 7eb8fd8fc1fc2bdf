#pragma once

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmcf/weyl.hpp"

namespace kmcf {

/// Exponent vector mu, standing for the monomial e^{-sum_i mu_i a_i^vee}.
using Exponent = std::vector<int>;

int exponent_height(const Exponent& mu);

/// Coroot height first, then lexicographic.
struct GradedLess {
  bool operator()(const Exponent& a, const Exponent& b) const;
};

/// Truncation orders, both inclusive: coroot height of mu <= height, t-degree <= degree.
struct Truncation {
  int height = 0;
  int degree = 0;
  bool operator==(const Truncation&) const = default;
};

/// Integer polynomial in t truncated at a fixed degree.
class TPoly {
 public:
  TPoly() = default;
  explicit TPoly(int degree) : c_(static_cast<std::size_t>(degree) + 1, 0) {}
  TPoly(int degree, std::initializer_list<long long> coeffs);
  static TPoly from_coefficients(int degree, std::span<const std::uint64_t> coeffs);

  int degree_bound() const { return static_cast<int>(c_.size()) - 1; }
  const BigInt& operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
  BigInt& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }
  bool is_zero() const;

  TPoly& operator+=(const TPoly& o);
  TPoly& operator-=(const TPoly& o);
  TPoly operator-() const;
  /// Truncated product.
  TPoly operator*(const TPoly& o) const;
  /// Accumulates a * b into *this without allocating a temporary.
  void add_product(const TPoly& a, const TPoly& b);
  /// Inverse modulo t^{D+1}; requires constant coefficient +-1.
  std::optional<TPoly> inverse() const;

  std::complex<double> evaluate(std::complex<double> t) const;
  nlohmann::json to_json() const;
  bool operator==(const TPoly&) const = default;

 private:
  std::vector<BigInt> c_;
};

/// Element of Z[[t]][[Q^vee_-]] truncated by coroot height and t-degree.
/// Arithmetic is exact; terms beyond either bound are dropped.
class FormalSeries {
 public:
  using Terms = std::map<Exponent, TPoly, GradedLess>;

  FormalSeries(int rank, Truncation tr) : rank_(rank), tr_(tr) {}
  static FormalSeries one(int rank, Truncation tr);
  static FormalSeries constant(int rank, Truncation tr, const TPoly& p);
  /// poly * e^{-mu}; dropped (zero series) if mu exceeds the height bound.
  static FormalSeries monomial(int rank, Truncation tr, const Exponent& mu, const TPoly& poly);

  int rank() const { return rank_; }
  Truncation truncation() const { return tr_; }
  const Terms& terms() const { return terms_; }
  /// Zero polynomial when absent.
  TPoly coefficient(const Exponent& mu) const;
  TPoly constant_term() const;

  bool is_unit() const;
  bool is_constant() const;

  FormalSeries& operator+=(const FormalSeries& o);
  FormalSeries& operator-=(const FormalSeries& o);
  FormalSeries operator+(const FormalSeries& o) const;
  FormalSeries operator-(const FormalSeries& o) const;
  FormalSeries operator*(const FormalSeries& o) const;
  bool operator==(const FormalSeries& o) const { return rank_ == o.rank_ && tr_ == o.tr_ && terms_ == o.terms_; }

  /// Adds poly * e^{-mu}.
  void add_term(const Exponent& mu, const TPoly& poly);

  /// Substitutes e^{-a_i^vee} -> exp(2 pi i z_i).
  std::complex<double> evaluate(std::complex<double> t, std::span<const std::complex<double>> z) const;

  /// [{"mu": [...], "poly": [c_0, ..., c_D]}, ...] sorted by height then lexicographic.
  nlohmann::json to_json() const;

 private:
  void check_compatible(const FormalSeries& o) const;

  int rank_;
  Truncation tr_;
  Terms terms_;
};

FormalSeries series_mul(const FormalSeries& a, const FormalSeries& b);
FormalSeries series_inv(const FormalSeries& s);

/// (t - e^{-b^vee}) / (1 - t e^{-b^vee}) expanded to the truncation.
FormalSeries twisted_factor(const RootEntry& b, int rank, Truncation tr);
/// (1 - t e^{-b^vee}) / (1 - e^{-b^vee}) expanded to the truncation.
FormalSeries ratio_factor(const RootEntry& b, int rank, Truncation tr);

/// prod_{a in table, coroot height <= H} (1 - t e^{-a^vee}) / (1 - e^{-a^vee}).
/// A parabolic table yields the product over Phi_{X,+}.
FormalSeries delta_ratio(const RootTable& roots, Truncation tr);

/// prod_{b in Phi(w)} (t - e^{-b^vee}) / (1 - t e^{-b^vee}).
FormalSeries inversion_product(const WeylElement& w, const RootTable& roots, Truncation tr);

/// w(Delta_{re,t} / Delta_{re,1}) = inversion_product(w) * base.
FormalSeries twisted_action(const WeylElement& w, const RootTable& roots, const FormalSeries& base);

struct WeylSum {
  FormalSeries value;
  int length = 0;
  /// Last length at which some w-term changed the mu-coefficient.
  std::map<Exponent, int, GradedLess> settled_at;
  /// Every element that could contribute under the truncation was summed
  /// (length >= height + degree, or the group closed within the bound).
  bool exact = false;

  /// Unchanged over the last two length shells, or exact.
  bool stable(const Exponent& mu) const;
  /// First unstable exponent in graded order.
  std::optional<Exponent> first_unstable() const;
};

/// sum_{l(w) <= L} twisted_action(w, base).
WeylSum weyl_sum(const WeylTable& table, const RootTable& roots, const FormalSeries& base, int length);

struct CorrectionFactor {
  FormalSeries m;
  FormalSeries m_inv;
  WeylSum sum;
  TPoly poincare;  ///< W(t) truncated at degree D
};

/// m = W(t) * (weyl sum)^{-1} and m^{-1} = (weyl sum) * W(t)^{-1}.
/// The default length is height + degree, at which the sum is exact.
CorrectionFactor correction_factor(const Gcm& gcm, Truncation tr, std::optional<int> length = std::nullopt);

struct MacdonaldCheck {
  bool pass = false;
  FormalSeries value;
  TPoly poincare;  ///< W_X(t)
  std::optional<Exponent> first_discrepancy;
};

/// sum_{w in W_X} w(prod_{a in Phi_{X,+}} ...) == W_X(t), exactly at the truncation.
MacdonaldCheck macdonald_identity_check(const Gcm& gcm, IndexSet x, Truncation tr);

}  // namespace kmcf
