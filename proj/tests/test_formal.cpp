#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "kmcf/error.hpp"
#include "kmcf/formal.hpp"

using namespace kmcf;

namespace {

FormalSeries random_series(std::mt19937& rng, int rank, Truncation tr, bool unit) {
  std::uniform_int_distribution<int> coeff(-3, 3);
  std::uniform_int_distribution<int> exp(0, tr.height);
  FormalSeries s(rank, tr);
  for (int k = 0; k < 6; ++k) {
    Exponent mu(static_cast<std::size_t>(rank));
    for (auto& m : mu) m = exp(rng);
    TPoly p(tr.degree);
    for (int d = 0; d <= tr.degree; ++d) p[d] = coeff(rng);
    s.add_term(mu, p);
  }
  if (unit) {
    TPoly c = s.constant_term();
    c[0] = 1;
    s = s - FormalSeries::constant(rank, tr, s.constant_term()) + FormalSeries::constant(rank, tr, c);
  }
  return s;
}

TPoly poly(int degree, std::initializer_list<long long> c) { return TPoly(degree, c); }

/// Dense oracle for prod (1 - t x^b)/(1 - x^b) over rank-2 coroots, with
/// int64 coefficients indexed [mu0][mu1][t-degree].
struct Dense {
  int h, d;
  std::vector<long long> c;
  Dense(int h_, int d_) : h(h_), d(d_), c(static_cast<std::size_t>((h_ + 1) * (h_ + 1) * (d_ + 1)), 0) {}
  long long& at(int a, int b, int k) { return c[static_cast<std::size_t>((a * (h + 1) + b) * (d + 1) + k)]; }
};

Dense dense_delta_ratio(const std::vector<std::pair<int, int>>& coroots, int h, int d) {
  Dense acc(h, d);
  acc.at(0, 0, 0) = 1;
  for (auto [p, q] : coroots) {
    Dense next(h, d);
    for (int a = 0; a <= h; ++a)
      for (int b = 0; a + b <= h; ++b)
        for (int k = 0; k <= d; ++k) {
          const long long v = acc.at(a, b, k);
          if (v == 0) continue;
          // factor = 1 + sum_{j>=1} (1 - t) x^{j b}
          next.at(a, b, k) += v;
          for (int j = 1; a + j * p + b + j * q <= h; ++j) {
            next.at(a + j * p, b + j * q, k) += v;
            if (k + 1 <= d) next.at(a + j * p, b + j * q, k + 1) -= v;
          }
        }
    acc = std::move(next);
  }
  return acc;
}

FormalSeries one_minus(int rank, Truncation tr, const Exponent& mu, TPoly c) {
  return FormalSeries::one(rank, tr) - FormalSeries::monomial(rank, tr, mu, c);
}

}  // namespace

TEST_CASE("graded order and heights") {
  CHECK(exponent_height({2, 1}) == 3);
  GradedLess less;
  CHECK(less({0, 2}, {1, 0}) == false);
  CHECK(less({1, 0}, {0, 2}));
  CHECK(less({0, 1}, {1, 0}));
}

TEST_CASE("TPoly arithmetic") {
  const TPoly a = poly(3, {1, 2});
  const TPoly b = poly(3, {1, -2, 4});
  CHECK(a * b == poly(3, {1, 0, 0, 8}));
  auto inv = poly(4, {1, -1}).inverse();
  REQUIRE(inv);
  CHECK(*inv == poly(4, {1, 1, 1, 1, 1}));
  CHECK_FALSE(poly(2, {2, 1}).inverse());
  CHECK(poly(2, {-1, 3}).inverse().has_value());
  CHECK(poly(2, {1, 2, 3}).evaluate(0.5) == std::complex<double>(2.75, 0));
}

TEST_CASE("series_mul and series_inv examples") {
  const Truncation t30{3, 0};
  const FormalSeries geo = series_inv(one_minus(1, t30, {1}, poly(0, {1})));
  FormalSeries expected(1, t30);
  for (int k = 0; k <= 3; ++k) expected.add_term({k}, poly(0, {1}));
  CHECK(geo == expected);

  const Truncation t22{2, 2};
  std::mt19937 rng(7);
  const FormalSeries s = random_series(rng, 2, t22, false);
  CHECK(series_mul(s, FormalSeries::one(2, t22)) == s);

  const FormalSeries lhs =
      series_mul(one_minus(1, t22, {1}, poly(2, {0, 1})), FormalSeries::one(1, t22) + FormalSeries::monomial(1, t22, {1}, poly(2, {0, 1})));
  FormalSeries rhs = FormalSeries::one(1, t22);
  rhs.add_term({2}, poly(2, {0, 0, -1}));
  CHECK(lhs == rhs);

  CHECK_THROWS_AS(series_inv(FormalSeries::monomial(1, t22, {1}, poly(2, {1}))), Error);
  CHECK_THROWS_AS(series_inv(FormalSeries::constant(1, t22, poly(2, {2}))), Error);
  CHECK_THROWS_AS(series_mul(FormalSeries::one(1, t22), FormalSeries::one(2, t22)), Error);
  CHECK_THROWS_AS(series_mul(FormalSeries::one(1, t22), FormalSeries::one(1, t30)), Error);
}

TEST_CASE("ring laws hold on random series") {
  std::mt19937 rng(20240611);
  for (int rank : {1, 2, 3}) {
    const Truncation tr{4, 3};
    for (int trial = 0; trial < 25; ++trial) {
      const FormalSeries a = random_series(rng, rank, tr, false);
      const FormalSeries b = random_series(rng, rank, tr, false);
      const FormalSeries c = random_series(rng, rank, tr, false);
      CHECK(a * b == b * a);
      CHECK((a * b) * c == a * (b * c));
      CHECK(a * (b + c) == a * b + a * c);
      CHECK((a + b) - b == a);
      CHECK(a * FormalSeries::one(rank, tr) == a);
      CHECK((a - a).terms().empty());
    }
  }
}

TEST_CASE("inverses are two-sided and involutive") {
  std::mt19937 rng(99);
  for (int rank : {1, 2, 3}) {
    const Truncation tr{5, 4};
    for (int trial = 0; trial < 15; ++trial) {
      const FormalSeries u = random_series(rng, rank, tr, true);
      REQUIRE(u.is_unit());
      const FormalSeries v = series_inv(u);
      CHECK(u * v == FormalSeries::one(rank, tr));
      CHECK(v * u == FormalSeries::one(rank, tr));
      CHECK(series_inv(v) == u);
    }
  }
}

TEST_CASE("factors and delta_ratio") {
  const Gcm a1 = test::a1();
  const RootTable r = enumerate_roots(a1, 4, {.bound = HeightKind::Coroot});
  const Truncation tr{2, 2};
  FormalSeries expected = FormalSeries::one(1, tr);
  expected.add_term({1}, poly(2, {1, -1}));
  expected.add_term({2}, poly(2, {1, -1}));
  CHECK(delta_ratio(r, tr) == expected);

  // twisted and ratio factors of one root multiply to a geometric-free identity:
  // (t - x)/(1 - t x) * (1 - t x)/(1 - x) = (t - x)/(1 - x)
  const FormalSeries prod = twisted_factor(r[0], 1, tr) * ratio_factor(r[0], 1, tr);
  FormalSeries direct = FormalSeries::constant(1, tr, poly(2, {0, 1})) - FormalSeries::monomial(1, tr, {1}, poly(2, {1}));
  CHECK(prod == direct * series_inv(one_minus(1, tr, {1}, poly(2, {1}))));

  for (const auto& g : test::rank_le3_corpus()) {
    const Truncation t4{4, 3};
    const RootTable roots = enumerate_roots(g, 4, {.bound = HeightKind::Coroot});
    CHECK(delta_ratio(roots, t4).constant_term() == poly(3, {1}));
  }
  CHECK_THROWS_AS(delta_ratio(enumerate_roots(test::affine_a1(), 1, {.bound = HeightKind::Coroot}), {3, 3}), Error);
}

TEST_CASE("delta_ratio matches a dense multiplication oracle") {
  const std::vector<std::pair<const Gcm, int>> cases{{test::affine_a1(), 3}, {test::affine_a2_twisted(), 5},
                                                     {test::hyperbolic2(), 6}, {test::g2(), 6}};
  for (const auto& [g, h] : cases) {
    const int d = 3;
    const RootTable roots = enumerate_roots(g, h, {.bound = HeightKind::Coroot});
    std::vector<std::pair<int, int>> coroots;
    for (const auto& b : roots) coroots.emplace_back(static_cast<int>(b.coroot[0]), static_cast<int>(b.coroot[1]));
    Dense oracle = dense_delta_ratio(coroots, h, d);
    const FormalSeries s = delta_ratio(roots, {h, d});
    INFO(g.label());
    for (int a = 0; a <= h; ++a)
      for (int b = 0; a + b <= h; ++b) {
        const TPoly c = s.coefficient({a, b});
        for (int k = 0; k <= d; ++k) CHECK(c[k] == oracle.at(a, b, k));
      }
  }
}

TEST_CASE("affine A1 delta_ratio uses exactly four roots at height 3") {
  const RootTable roots = enumerate_roots(test::affine_a1(), 3, {.bound = HeightKind::Coroot});
  CHECK(roots.size() == 4);
}

TEST_CASE("twisted_action") {
  const Gcm a1 = test::a1();
  auto [roots, weyl] = enumerate_with_roots(a1, 1, 4);
  const Truncation tr{4, 4};
  const FormalSeries base = delta_ratio(roots, tr);
  CHECK(twisted_action(weyl[0], roots, base) == base);
  CHECK(twisted_action(weyl[1], roots, base).constant_term() == poly(4, {0, 1}));

  for (const auto& g : test::rank_le3_corpus()) {
    auto [r, w] = enumerate_with_roots(g, 4, 4);
    const FormalSeries b = delta_ratio(r, {4, 5});
    for (const auto& el : w) {
      TPoly expected(5);
      expected[el.length] = 1;
      CHECK(twisted_action(el, r, b).constant_term() == expected);
    }
  }
}

TEST_CASE("weyl_sum examples") {
  const Gcm a1 = test::a1();
  auto [roots, weyl] = enumerate_with_roots(a1, 1, 6);
  const Truncation tr{6, 4};
  const WeylSum s = weyl_sum(weyl, roots, delta_ratio(roots, tr), 1);
  CHECK(s.value == FormalSeries::constant(1, tr, poly(4, {1, 1})));
  CHECK(s.exact);

  auto [r2, w2] = enumerate_with_roots(test::a2(), 3, 6);
  const Truncation t2{6, 4};
  CHECK(weyl_sum(w2, r2, delta_ratio(r2, t2), 3).value == FormalSeries::constant(2, t2, poly(4, {1, 2, 2, 1})));

  for (const auto& g : test::rank_le3_corpus()) {
    auto [r, w] = enumerate_with_roots(g, 5, 3);
    const Truncation t{3, 6};
    const WeylSum ws = weyl_sum(w, r, delta_ratio(r, t), 5);
    const auto ps = poincare(w);
    TPoly expected(6);
    for (std::size_t k = 0; k < ps.coefficients.size() && k <= 6; ++k) expected[static_cast<int>(k)] = ps.coefficients[k];
    CHECK(ws.value.constant_term() == expected);
  }
}

TEST_CASE("weyl_sum is unchanged past the exactness length") {
  for (const auto& g : {test::affine_a1(), test::hyperbolic2(), test::affine_a2_twisted(), test::affine_a2()}) {
    const Truncation tr{3, 3};
    auto [roots, weyl] = enumerate_with_roots(g, tr.height + tr.degree + 3, tr.height);
    const FormalSeries base = delta_ratio(roots, tr);
    const WeylSum at = weyl_sum(weyl, roots, base, tr.height + tr.degree);
    const WeylSum past = weyl_sum(weyl, roots, base, tr.height + tr.degree + 3);
    INFO(g.label());
    CHECK(at.exact);
    CHECK(at.value == past.value);
    CHECK_FALSE(at.first_unstable());
  }
}

TEST_CASE("macdonald_identity_check") {
  const Truncation tr{8, 8};
  const auto a2 = macdonald_identity_check(test::a2(), IndexSet{0, 1}, tr);
  CHECK(a2.pass);
  CHECK(a2.poincare == poly(8, {1, 2, 2, 1}));
  CHECK(a2.value == FormalSeries::constant(2, tr, poly(8, {1, 2, 2, 1})));

  const auto b2 = macdonald_identity_check(test::b2(), IndexSet{0, 1}, tr);
  CHECK(b2.pass);
  CHECK(b2.poincare == poly(8, {1, 2, 2, 2, 1}));  // (1+t)^2 (1+t^2)

  const auto g2 = macdonald_identity_check(test::g2(), IndexSet{0, 1}, tr);
  CHECK(g2.pass);
  CHECK(g2.poincare == poly(8, {1, 2, 2, 2, 2, 2, 1}));

  for (const auto& g : test::rank_le3_corpus()) {
    for (const IndexSet x : w_finite_subsets(g)) {
      const auto c = macdonald_identity_check(g, x, {6, 7});
      INFO(g.label() << " X=" << x.to_string());
      CHECK(c.pass);
      if (x.size() == 1) CHECK(c.poincare == poly(7, {1, 1}));
    }
  }
  CHECK_THROWS_AS(macdonald_identity_check(test::affine_a1(), IndexSet{0, 1}, tr), Error);
}

TEST_CASE("correction factor is 1 in finite type") {
  for (const auto& g : {test::a1(), test::a2(), test::b2(), test::g2(), test::a3()}) {
    const Truncation tr{4, 4};
    const CorrectionFactor cf = correction_factor(g, tr);
    INFO(g.label());
    CHECK(cf.m == FormalSeries::one(g.rank(), tr));
    CHECK(cf.m_inv == FormalSeries::one(g.rank(), tr));
  }
}

TEST_CASE("correction factor general properties") {
  for (const auto& g : {test::affine_a1(), test::hyperbolic2(), test::affine_a2_twisted()}) {
    const Truncation tr{3, 4};
    const CorrectionFactor cf = correction_factor(g, tr);
    INFO(g.label());
    CHECK(cf.m.constant_term() == poly(4, {1}));
    CHECK(cf.m * cf.m_inv == FormalSeries::one(g.rank(), tr));
    CHECK(cf.m * cf.sum.value == FormalSeries::constant(g.rank(), tr, cf.poincare));
  }
  const Truncation tr{4, 6};
  CHECK_FALSE(correction_factor(test::affine_a1(), tr).m == FormalSeries::one(2, tr));
}

TEST_CASE("affine A1 correction factor equals the imaginary-root product") {
  // m = prod_{j>=1} (1 - t e^{-j delta})^2 / ((1 - t^2 e^{-j delta}) (1 - e^{-j delta})),
  // delta^vee = a1^vee + a2^vee.
  const Truncation tr{6, 6};
  FormalSeries expected = FormalSeries::one(2, tr);
  for (int j = 1; 2 * j <= tr.height; ++j) {
    const Exponent mu{j, j};
    const FormalSeries num = one_minus(2, tr, mu, poly(6, {0, 1}));
    expected = expected * num * num * series_inv(one_minus(2, tr, mu, poly(6, {0, 0, 1}))) *
               series_inv(one_minus(2, tr, mu, poly(6, {1})));
  }
  CHECK(correction_factor(test::affine_a1(), tr).m == expected);
}
