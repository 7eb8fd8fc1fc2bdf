#include <doctest.h>

#include "fixtures.hpp"
#include "kmcf/error.hpp"

using namespace kmcf;

namespace {

Error capture(const std::vector<std::vector<int>>& raw) {
  try {
    validate_gcm(raw);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorKind::ParseError, "unreachable");
}

}  // namespace

TEST_CASE("validate_gcm accepts axiomatic matrices") {
  CHECK(validate_gcm({{2, -1}, {-1, 2}}).rank() == 2);
  const Gcm aff = validate_gcm({{2, -2}, {-2, 2}});
  CHECK(aff(0, 1) == -2);
  CHECK(validate_gcm({{2}}).rank() == 1);
}

TEST_CASE("validate_gcm pinpoints the failing axiom") {
  auto r3 = capture({{2, -1}, {0, 2}});
  CHECK(r3.kind() == ErrorKind::AxiomViolation);
  CHECK(r3.detail()["axiom"] == "R3");
  CHECK(r3.detail()["row"] == 2);
  CHECK(r3.detail()["column"] == 1);

  auto r1 = capture({{2, -1}, {-1, 3}});
  CHECK(r1.detail()["axiom"] == "R1");
  CHECK(r1.detail()["row"] == 2);

  auto r2 = capture({{2, 1}, {-1, 2}});
  CHECK(r2.detail()["axiom"] == "R2");
  CHECK(r2.detail()["column"] == 2);

  CHECK(capture({{2, -1}}).kind() == ErrorKind::NonSquare);
  CHECK(capture({}).kind() == ErrorKind::NonSquare);
}

TEST_CASE("dual is the transpose and an involution") {
  const Gcm a2 = test::a2();
  CHECK(dual(a2) == a2);
  const Gcm b2 = test::b2();
  CHECK(dual(b2).rows() == std::vector<std::vector<int>>{{2, -2}, {-1, 2}});
  CHECK(dual(dual(b2)) == b2);
  CHECK(dual(test::a1()).rows() == std::vector<std::vector<int>>{{2}});
}

TEST_CASE("gcm JSON schema") {
  const auto j = nlohmann::json::parse(R"({"label": "A2", "matrix": [[2,-1],[-1,2]]})");
  const Gcm g = gcm_from_json(j);
  CHECK(g.label() == "A2");
  CHECK(gcm_from_json(g.to_json()) == g);
  CHECK_THROWS_AS(gcm_from_json(nlohmann::json::parse(R"({"matrix": [[2, 0.5],[0,2]]})")), Error);
  CHECK_THROWS_AS(gcm_from_json(nlohmann::json::parse(R"([1,2])")), Error);
}

TEST_CASE("is_w_finite examples") {
  CHECK(is_w_finite(test::a2(), IndexSet{0, 1}));
  CHECK_FALSE(is_w_finite(test::affine_a1(), IndexSet{0, 1}));
  CHECK(principal_minor(test::affine_a1(), IndexSet{0, 1}) == 0);
  for (const auto& g : test::rank_le3_corpus()) CHECK(is_w_finite(g, IndexSet{}));
  CHECK_THROWS_AS(is_w_finite(test::a2(), IndexSet{2}), Error);

  const ParabolicSubset p(test::g2(), IndexSet{0, 1});
  CHECK(p.w_finite());
  CHECK(p.subset() == IndexSet{0, 1});
}

TEST_CASE("finiteness agrees with brute-force BFS closure on every subset") {
  for (const auto& g : test::rank_le3_corpus()) {
    const std::uint64_t full = IndexSet::all(g.rank()).bits();
    for (std::uint64_t s = 0; s <= full; ++s) {
      const IndexSet x(s);
      const long size = test::brute_weyl_size(g, x);
      INFO(g.label() << " X=" << x.to_string() << " |W_X|=" << size);
      CHECK(is_w_finite(g, x) == (size > 0));
    }
  }
}

TEST_CASE("finiteness is monotone and dual-invariant") {
  for (const auto& g : test::rank_le3_corpus()) {
    const std::uint64_t full = IndexSet::all(g.rank()).bits();
    const Gcm d = dual(g);
    for (std::uint64_t s = 0; s <= full; ++s) {
      const IndexSet x(s);
      CHECK(is_w_finite(g, x) == is_w_finite(d, x));
      if (!is_w_finite(g, x)) continue;
      for (std::uint64_t t = s; t != 0; t = (t - 1) & s) CHECK(is_w_finite(g, IndexSet(t)));
    }
  }
}

TEST_CASE("w_finite_subsets lists exactly the finite subsets") {
  const auto subsets = w_finite_subsets(test::affine_a1());
  CHECK(subsets == std::vector<IndexSet>{IndexSet{}, IndexSet{0}, IndexSet{1}});
  CHECK(w_finite_subsets(test::a3()).size() == 8);
}
