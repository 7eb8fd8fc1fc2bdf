#include "kmcf/formal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "kmcf/error.hpp"

namespace kmcf {

int exponent_height(const Exponent& mu) { return std::accumulate(mu.begin(), mu.end(), 0); }

bool GradedLess::operator()(const Exponent& a, const Exponent& b) const {
  const int ha = exponent_height(a), hb = exponent_height(b);
  if (ha != hb) return ha < hb;
  return a < b;
}

// ---------------------------------------------------------------------------
// TPoly

TPoly::TPoly(int degree, std::initializer_list<long long> coeffs) : TPoly(degree) {
  int k = 0;
  for (long long v : coeffs) {
    if (k <= degree) c_[static_cast<std::size_t>(k)] = v;
    ++k;
  }
}

TPoly TPoly::from_coefficients(int degree, std::span<const std::uint64_t> coeffs) {
  TPoly p(degree);
  for (std::size_t k = 0; k < coeffs.size() && static_cast<int>(k) <= degree; ++k) p.c_[k] = coeffs[k];
  return p;
}

bool TPoly::is_zero() const {
  return std::all_of(c_.begin(), c_.end(), [](const BigInt& v) { return v == 0; });
}

TPoly& TPoly::operator+=(const TPoly& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

TPoly& TPoly::operator-=(const TPoly& o) {
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

TPoly TPoly::operator-() const {
  TPoly p = *this;
  for (auto& v : p.c_) v = -v;
  return p;
}

TPoly TPoly::operator*(const TPoly& o) const {
  TPoly p(degree_bound());
  p.add_product(*this, o);
  return p;
}

void TPoly::add_product(const TPoly& a, const TPoly& b) {
  const std::size_t n = c_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (a.c_[i] == 0) continue;
    for (std::size_t j = 0; i + j < n; ++j) {
      if (b.c_[j] == 0) continue;
      c_[i + j] += a.c_[i] * b.c_[j];
    }
  }
}

std::optional<TPoly> TPoly::inverse() const {
  const BigInt& c0 = c_[0];
  if (c0 != 1 && c0 != -1) return std::nullopt;
  const std::size_t n = c_.size();
  TPoly inv(degree_bound());
  inv.c_[0] = c0;  // 1/c0 = c0 for c0 = +-1
  for (std::size_t k = 1; k < n; ++k) {
    BigInt acc = 0;
    for (std::size_t j = 1; j <= k; ++j) acc += c_[j] * inv.c_[k - j];
    inv.c_[k] = -acc * c0;
  }
  return inv;
}

std::complex<double> TPoly::evaluate(std::complex<double> t) const {
  std::complex<double> acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * t + it->convert_to<double>();
  return acc;
}

nlohmann::json TPoly::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : c_) {
    if (v >= std::numeric_limits<long long>::min() && v <= std::numeric_limits<long long>::max()) {
      out.push_back(v.convert_to<long long>());
    } else {
      out.push_back(v.str());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FormalSeries

FormalSeries FormalSeries::one(int rank, Truncation tr) {
  TPoly p(tr.degree);
  p[0] = 1;
  return constant(rank, tr, p);
}

FormalSeries FormalSeries::constant(int rank, Truncation tr, const TPoly& p) {
  return monomial(rank, tr, Exponent(static_cast<std::size_t>(rank), 0), p);
}

FormalSeries FormalSeries::monomial(int rank, Truncation tr, const Exponent& mu, const TPoly& poly) {
  FormalSeries s(rank, tr);
  s.add_term(mu, poly);
  return s;
}

void FormalSeries::add_term(const Exponent& mu, const TPoly& poly) {
  if (static_cast<int>(mu.size()) != rank_) {
    throw Error(ErrorKind::DimensionMismatch, "exponent length differs from rank",
                {{"expected", rank_}, {"got", mu.size()}});
  }
  if (exponent_height(mu) > tr_.height) return;
  TPoly p(tr_.degree);
  for (int k = 0; k <= std::min(tr_.degree, poly.degree_bound()); ++k) p[k] = poly[k];
  if (p.is_zero()) return;
  auto [it, inserted] = terms_.try_emplace(mu, p);
  if (!inserted) {
    it->second += p;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

TPoly FormalSeries::coefficient(const Exponent& mu) const {
  auto it = terms_.find(mu);
  return it == terms_.end() ? TPoly(tr_.degree) : it->second;
}

TPoly FormalSeries::constant_term() const { return coefficient(Exponent(static_cast<std::size_t>(rank_), 0)); }

bool FormalSeries::is_unit() const {
  const BigInt c0 = constant_term()[0];
  return c0 == 1 || c0 == -1;
}

bool FormalSeries::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && exponent_height(terms_.begin()->first) == 0);
}

void FormalSeries::check_compatible(const FormalSeries& o) const {
  if (rank_ != o.rank_ || !(tr_ == o.tr_)) {
    throw Error(ErrorKind::TruncationMismatch, "operands have different rank or truncation",
                {{"left", {rank_, tr_.height, tr_.degree}}, {"right", {o.rank_, o.tr_.height, o.tr_.degree}}});
  }
}

FormalSeries& FormalSeries::operator+=(const FormalSeries& o) {
  check_compatible(o);
  for (const auto& [mu, p] : o.terms_) add_term(mu, p);
  return *this;
}

FormalSeries& FormalSeries::operator-=(const FormalSeries& o) {
  check_compatible(o);
  for (const auto& [mu, p] : o.terms_) add_term(mu, -p);
  return *this;
}

FormalSeries FormalSeries::operator+(const FormalSeries& o) const {
  FormalSeries s = *this;
  s += o;
  return s;
}

FormalSeries FormalSeries::operator-(const FormalSeries& o) const {
  FormalSeries s = *this;
  s -= o;
  return s;
}

FormalSeries FormalSeries::operator*(const FormalSeries& o) const { return series_mul(*this, o); }

std::complex<double> FormalSeries::evaluate(std::complex<double> t, std::span<const std::complex<double>> z) const {
  if (static_cast<int>(z.size()) != rank_) {
    throw Error(ErrorKind::DimensionMismatch, "point dimension differs from rank",
                {{"expected", rank_}, {"got", z.size()}});
  }
  const std::complex<double> two_pi_i(0.0, 2.0 * std::numbers::pi);
  std::complex<double> acc = 0.0;
  for (const auto& [mu, p] : terms_) {
    std::complex<double> arg = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) arg += static_cast<double>(mu[i]) * z[i];
    acc += p.evaluate(t) * std::exp(two_pi_i * arg);
  }
  return acc;
}

nlohmann::json FormalSeries::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [mu, p] : terms_) out.push_back({{"mu", mu}, {"poly", p.to_json()}});
  return out;
}

FormalSeries series_mul(const FormalSeries& a, const FormalSeries& b) {
  if (a.rank() != b.rank() || !(a.truncation() == b.truncation())) {
    throw Error(ErrorKind::TruncationMismatch, "operands have different rank or truncation");
  }
  const Truncation tr = a.truncation();
  const auto l = static_cast<std::size_t>(a.rank());
  std::vector<std::pair<int, const FormalSeries::Terms::value_type*>> bt;
  for (const auto& kv : b.terms()) bt.emplace_back(exponent_height(kv.first), &kv);
  // b's terms are already in graded order, so heights are non-decreasing.
  FormalSeries::Terms acc;
  Exponent mu(l);
  for (const auto& [mu1, p1] : a.terms()) {
    const int h1 = exponent_height(mu1);
    for (const auto& [h2, kv] : bt) {
      if (h1 + h2 > tr.height) break;
      for (std::size_t i = 0; i < l; ++i) mu[i] = mu1[i] + kv->first[i];
      auto [it, inserted] = acc.try_emplace(mu, tr.degree);
      it->second.add_product(p1, kv->second);
    }
  }
  FormalSeries out(a.rank(), tr);
  for (auto& [m, p] : acc) {
    if (!p.is_zero()) out.add_term(m, p);
  }
  return out;
}

namespace {

// All exponents of height <= h in graded order.
std::vector<Exponent> exponents_up_to(int rank, int h) {
  std::vector<Exponent> out;
  Exponent cur(static_cast<std::size_t>(rank), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == rank) {
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, left - v);
    }
    cur[static_cast<std::size_t>(pos)] = 0;
  };
  rec(rec, 0, h);
  std::sort(out.begin(), out.end(), GradedLess{});
  return out;
}

}  // namespace

FormalSeries series_inv(const FormalSeries& s) {
  const Truncation tr = s.truncation();
  const auto c0_inv = s.constant_term().inverse();
  if (!c0_inv) {
    throw Error(ErrorKind::NotAUnit, "constant term is not a unit in Z[[t]]",
                {{"constant_term", s.constant_term().to_json()}});
  }
  const auto l = static_cast<std::size_t>(s.rank());
  std::vector<const FormalSeries::Terms::value_type*> rest;
  for (const auto& kv : s.terms()) {
    if (exponent_height(kv.first) > 0) rest.push_back(&kv);
  }
  FormalSeries::Terms inv;
  Exponent diff(l);
  for (const auto& mu : exponents_up_to(s.rank(), tr.height)) {
    if (exponent_height(mu) == 0) {
      inv.emplace(mu, *c0_inv);
      continue;
    }
    TPoly acc(tr.degree);
    for (const auto* kv : rest) {
      bool fits = true;
      for (std::size_t i = 0; i < l && fits; ++i) {
        diff[i] = mu[i] - kv->first[i];
        fits = diff[i] >= 0;
      }
      if (!fits) continue;
      auto it = inv.find(diff);
      if (it != inv.end()) acc.add_product(kv->second, it->second);
    }
    if (acc.is_zero()) continue;
    inv.emplace(mu, -(acc * *c0_inv));
  }
  FormalSeries out(s.rank(), tr);
  for (const auto& [mu, p] : inv) out.add_term(mu, p);
  return out;
}

namespace {

Exponent to_exponent(const RootEntry& b, int k) {
  Exponent mu;
  mu.reserve(b.coroot.size());
  for (auto c : b.coroot) mu.push_back(static_cast<int>(c * k));
  return mu;
}

}  // namespace

FormalSeries twisted_factor(const RootEntry& b, int rank, Truncation tr) {
  // (t - x) sum_n t^n x^n = t + sum_{k >= 1} (t^{k+1} - t^{k-1}) x^k
  FormalSeries f(rank, tr);
  TPoly t1(tr.degree);
  if (tr.degree >= 1) t1[1] = 1;
  f.add_term(Exponent(static_cast<std::size_t>(rank), 0), t1);
  for (std::int64_t k = 1; k * b.coroot_height <= tr.height; ++k) {
    TPoly p(tr.degree);
    if (k + 1 <= tr.degree) p[static_cast<int>(k + 1)] = 1;
    if (k - 1 <= tr.degree) p[static_cast<int>(k - 1)] -= 1;
    f.add_term(to_exponent(b, static_cast<int>(k)), p);
  }
  return f;
}

FormalSeries ratio_factor(const RootEntry& b, int rank, Truncation tr) {
  // (1 - t x) sum_n x^n = 1 + sum_{k >= 1} (1 - t) x^k
  FormalSeries f = FormalSeries::one(rank, tr);
  TPoly p(tr.degree);
  p[0] = 1;
  if (tr.degree >= 1) p[1] = -1;
  for (std::int64_t k = 1; k * b.coroot_height <= tr.height; ++k) f.add_term(to_exponent(b, static_cast<int>(k)), p);
  return f;
}

FormalSeries delta_ratio(const RootTable& roots, Truncation tr) {
  if (!roots.covers_coroot_height(tr.height)) {
    throw Error(ErrorKind::RootTableTooShallow,
                "root table does not cover coroot height " + std::to_string(tr.height),
                {{"table_height", roots.height_bound()}, {"required", tr.height}});
  }
  const int l = roots.gcm().rank();
  FormalSeries acc = FormalSeries::one(l, tr);
  for (const auto& b : roots) {
    if (b.coroot_height > tr.height) continue;
    acc = acc * ratio_factor(b, l, tr);
  }
  return acc;
}

FormalSeries inversion_product(const WeylElement& w, const RootTable& roots, Truncation tr) {
  const int l = roots.gcm().rank();
  int high = 0;  // factors congruent to t modulo the truncation
  FormalSeries acc = FormalSeries::one(l, tr);
  for (std::size_t idx : w.inversions) {
    const RootEntry& b = roots[idx];
    if (b.coroot_height > tr.height) {
      ++high;
      continue;
    }
    acc = acc * twisted_factor(b, l, tr);
  }
  if (high == 0) return acc;
  if (high > tr.degree) return FormalSeries(l, tr);
  TPoly shift(tr.degree);
  shift[high] = 1;
  return acc * FormalSeries::constant(l, tr, shift);
}

FormalSeries twisted_action(const WeylElement& w, const RootTable& roots, const FormalSeries& base) {
  if (static_cast<int>(w.inversions.size()) != w.length) {
    throw Error(ErrorKind::RootTableTooShallow, "element carries no inversion set",
                {{"length", w.length}, {"inversions", w.inversions.size()}});
  }
  return inversion_product(w, roots, base.truncation()) * base;
}

bool WeylSum::stable(const Exponent& mu) const {
  if (exact) return true;
  auto it = settled_at.find(mu);
  return it == settled_at.end() || it->second <= length - 2;
}

std::optional<Exponent> WeylSum::first_unstable() const {
  if (exact) return std::nullopt;
  for (const auto& [mu, k] : settled_at) {
    if (k > length - 2) return mu;
  }
  return std::nullopt;
}

WeylSum weyl_sum(const WeylTable& table, const RootTable& roots, const FormalSeries& base, int length) {
  if (!table.has_inversions()) {
    throw Error(ErrorKind::RootTableTooShallow, "Weyl table was enumerated without inversion sets");
  }
  const Truncation tr = base.truncation();
  int top = 0;
  for (const auto& w : table) top = std::max(top, w.length);
  if (length > table.length_bound() && !table.closed()) {
    throw Error(ErrorKind::LengthBoundTooSmall,
                "sum length " + std::to_string(length) + " exceeds table bound " +
                    std::to_string(table.length_bound()),
                {{"length", length}, {"table_length", table.length_bound()}});
  }
  WeylSum out{FormalSeries(base.rank(), tr), length, {}, false};
  for (const auto& w : table) {
    if (w.length > length) continue;
    // A factor contributes either t or some e^{-k b^vee} with k b^vee of
    // height <= H, so terms with l(w) - min(#low inversions, H) > D vanish.
    int low = 0;
    for (std::size_t idx : w.inversions) low += roots[idx].coroot_height <= tr.height ? 1 : 0;
    if (w.length - std::min(low, tr.height) > tr.degree) continue;
    const FormalSeries term = twisted_action(w, roots, base);
    for (const auto& kv : term.terms()) {
      auto [it, inserted] = out.settled_at.try_emplace(kv.first, w.length);
      if (!inserted) it->second = std::max(it->second, w.length);
    }
    out.value += term;
  }
  out.exact = length >= tr.height + tr.degree || (table.closed() && length >= top);
  return out;
}

CorrectionFactor correction_factor(const Gcm& gcm, Truncation tr, std::optional<int> length) {
  const int sum_length = length.value_or(tr.height + tr.degree);
  const int table_length = std::max(sum_length, tr.degree);
  auto [roots, weyl] = enumerate_with_roots(gcm, table_length, std::max(tr.height, 1));
  const FormalSeries base = delta_ratio(roots, tr);
  WeylSum sum = weyl_sum(weyl, roots, base, sum_length);
  if (auto mu = sum.first_unstable()) {
    throw Error(ErrorKind::NotStabilized, "coefficient still moving at length " + std::to_string(sum.length),
                {{"mu", *mu}, {"length", sum.length}, {"settled_at", sum.settled_at.at(*mu)}});
  }
  const PoincareSeries ps = poincare(weyl);
  const TPoly w_poly = TPoly::from_coefficients(tr.degree, ps.coefficients);
  const int l = gcm.rank();
  const FormalSeries w_series = FormalSeries::constant(l, tr, w_poly);
  const auto w_inv = w_poly.inverse();
  if (!w_inv) throw Error(ErrorKind::NotAUnit, "Poincare series is not a unit");
  FormalSeries m = w_series * series_inv(sum.value);
  FormalSeries m_inv = sum.value * FormalSeries::constant(l, tr, *w_inv);
  return {std::move(m), std::move(m_inv), std::move(sum), w_poly};
}

MacdonaldCheck macdonald_identity_check(const Gcm& gcm, IndexSet x, Truncation tr) {
  if (!x.subset_of(IndexSet::all(gcm.rank()))) {
    throw Error(ErrorKind::IndexOutOfRange, "subset " + x.to_string() + " exceeds rank");
  }
  if (!is_w_finite(gcm, x)) {
    throw Error(ErrorKind::NotWFinite, "subset " + x.to_string() + " is not W-finite", {{"subset", x.to_one_based()}});
  }
  const int l = gcm.rank();
  // Phi_{X,+} is finite, so an effectively unbounded height closes the BFS.
  constexpr std::int64_t kUnbounded = std::int64_t{1} << 40;
  MacdonaldCheck out{false, FormalSeries(l, tr), TPoly(tr.degree), std::nullopt};
  if (x.empty()) {
    out.value = FormalSeries::one(l, tr);
    out.poincare[0] = 1;
    out.pass = true;
    return out;
  }
  const RootTable roots = enumerate_roots(gcm, kUnbounded, {.bound = HeightKind::Coroot, .generators = x});
  const int longest = static_cast<int>(roots.size());  // l(w_0) = |Phi_{X,+}|
  const WeylTable weyl = enumerate_weyl(gcm, longest, roots, {.generators = x});
  const FormalSeries base = delta_ratio(roots, tr);
  out.value = weyl_sum(weyl, roots, base, longest).value;
  const PoincareSeries ps = poincare(weyl, x);
  out.poincare = TPoly::from_coefficients(tr.degree, ps.coefficients);
  const FormalSeries expected = FormalSeries::constant(l, tr, out.poincare);
  if (out.value == expected) {
    out.pass = true;
    return out;
  }
  // First exponent (graded order) where the two sides differ.
  std::map<Exponent, int, GradedLess> keys;
  for (const auto& kv : out.value.terms()) keys.emplace(kv.first, 0);
  for (const auto& kv : expected.terms()) keys.emplace(kv.first, 0);
  for (const auto& kv : keys) {
    if (!(out.value.coefficient(kv.first) == expected.coefficient(kv.first))) {
      out.first_discrepancy = kv.first;
      break;
    }
  }
  return out;
}

}  // namespace kmcf
