// One PASS/FAIL line per acceptance criterion. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "kmcf/analytic.hpp"
#include "kmcf/cartan.hpp"
#include "kmcf/error.hpp"
#include "kmcf/formal.hpp"
#include "kmcf/roots.hpp"
#include "kmcf/weyl.hpp"

using namespace kmcf;

namespace {

using C = Complex;

constexpr double kBridgeTol = 1e-5;
constexpr double kBridgeStep = 1e-7;
constexpr double kInvarianceTol = 1e-6;
constexpr double kChartTol = 1e-6;
constexpr double kWallTol = 1e-4;
constexpr double kWallEps = 1e-3;
constexpr double kShuffleTol = 1e-9;
constexpr double kAffineRadiusLo = 0.95;
constexpr double kAffineRadiusHi = 1.05;
constexpr double kHyperbolicRadiusMax = 0.9;
constexpr int kRadiusLength = 200;
constexpr double kRankOneTol = 1e-10;

Gcm a1() { return validate_gcm({{2}}, "A1"); }
Gcm a2() { return validate_gcm({{2, -1}, {-1, 2}}, "A2"); }
Gcm b2() { return validate_gcm({{2, -1}, {-2, 2}}, "B2"); }
Gcm affine_a1() { return validate_gcm({{2, -2}, {-2, 2}}, "A1^(1)"); }
Gcm hyperbolic() { return validate_gcm({{2, -3}, {-3, 2}}, "H(3,3)"); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SpectralPoint random_point(std::mt19937& rng, const Gcm& g, int max_word, double t_abs) {
  std::uniform_real_distribution<double> im(0.15, 0.9), re(-0.5, 0.5), ang(0.0, 6.283185307179586),
      mag(0.0, t_abs);
  SpectralPoint p;
  p.t = std::polar(mag(rng), ang(rng));
  for (int i = 0; i < g.rank(); ++i) p.z.emplace_back(re(rng), im(rng));
  std::uniform_int_distribution<int> len(0, max_word), gen(0, g.rank() - 1);
  std::vector<int> word;
  for (int k = len(rng); k > 0; --k) word.push_back(gen(rng));
  p.z = apply_word(g, word, p.z);
  return p;
}

Outcome macdonald() {
  const Truncation tr{8, 8};
  const auto a = macdonald_identity_check(a2(), IndexSet{0, 1}, tr);
  const auto b = macdonald_identity_check(b2(), IndexSet{0, 1}, tr);
  const bool ok = a.pass && b.pass && a.poincare == TPoly(8, {1, 2, 2, 1}) && b.poincare == TPoly(8, {1, 2, 2, 2, 1}) &&
                  a.value == FormalSeries::constant(2, tr, a.poincare) &&
                  b.value == FormalSeries::constant(2, tr, b.poincare);
  return {ok, "A2 " + a.poincare.to_json().dump() + ", B2 " + b.poincare.to_json().dump()};
}

Outcome finite_m() {
  const Truncation tr{8, 8};
  bool ok = true;
  std::string detail = "terms in m:";
  for (const Gcm& g : {a2(), b2()}) {
    const CorrectionFactor cf = correction_factor(g, tr);
    ok = ok && cf.m == FormalSeries::one(2, tr) && cf.m.constant_term() == TPoly(8, {1});
    detail += " " + g.label() + " " + std::to_string(cf.m.terms().size());
  }
  return {ok, detail};
}

Outcome constant_term() {
  constexpr int d = 10;
  bool ok = true;
  std::string detail;
  for (const Gcm& g : {affine_a1(), hyperbolic()}) {
    const CorrectionFactor cf = correction_factor(g, {2, d});
    const TPoly c0 = cf.sum.value.constant_term();
    const PoincareSeries w = poincare(enumerate_weyl(g, d));
    for (int k = 0; k <= d; ++k) {
      const std::uint64_t expect = k < static_cast<int>(w.coefficients.size()) ? w.coefficients[k] : 0;
      ok = ok && c0[k] == expect;
    }
    detail += (detail.empty() ? "" : ", ") + g.label() + " " + c0.to_json().dump();
  }
  return {ok, detail};
}

Outcome bridge() {
  const Gcm g = affine_a1();
  const SpectralPoint p{0.1, {{0.0, 0.3}, {0.0, 0.4}}};

  AnalyticOptions opts;
  opts.height = 40;
  opts.length = 20;
  C analytic = Analytic(g, opts).eval_C(p).value;
  for (int step = 0; step < 4; ++step) {
    opts.height += 20;
    opts.length += 10;
    const C next = Analytic(g, opts).eval_C(p).value;
    const double moved = std::abs(next - analytic);
    analytic = next;
    if (moved < kBridgeStep) break;
  }

  Truncation tr{8, 12};
  auto symbolic_at = [&](Truncation t) {
    const CorrectionFactor cf = correction_factor(g, t);
    const PoincareSeries w = poincare(enumerate_weyl(g, opts.length));
    return w.evaluate(p.t) * cf.m_inv.evaluate(p.t, p.z);
  };
  C symbolic = symbolic_at(tr);
  double moved = 1.0;
  for (int step = 0; step < 4 && moved >= kBridgeStep; ++step) {
    tr.height += 2;
    tr.degree += 2;
    const C next = symbolic_at(tr);
    moved = std::abs(next - symbolic);
    symbolic = next;
  }
  const double diff = std::abs(analytic - symbolic);
  return {diff < kBridgeTol && moved < kBridgeStep,
          fmt("|C - W m^-1| = %.3g", diff) + " at symbolic H=" + std::to_string(tr.height) +
              " D=" + std::to_string(tr.degree) + fmt(", last step %.3g", moved)};
}

Outcome invariance() {
  std::mt19937 rng(2024);
  double worst = 0.0;
  std::size_t failures = 0;
  for (const Gcm& g : {a2(), affine_a1()}) {
    const Analytic ctx(g);
    const auto words = ctx.words_up_to(3);
    for (int k = 0; k < 20; ++k) {
      const SpectralPoint p = random_point(rng, g, 3, 0.3);
      const InvarianceReport r = ctx.verify_invariance(p, IndexSet{}, words);
      worst = std::max(worst, r.max_deviation_full);
      failures += r.failures;
    }
  }
  return {worst < kInvarianceTol && failures == 0,
          fmt("max deviation %.3g", worst) + ", evaluation failures " + std::to_string(failures)};
}

Outcome continuation() {
  const Analytic ctx(a2());
  std::mt19937 rng(77);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const SpectralPoint p = random_point(rng, a2(), 0, 0.3);
    worst = std::max(worst, std::abs(ctx.eval_C_X(p, IndexSet{0}).value - ctx.eval_C(p).value));
  }
  const C wall = ctx.eval_C_X({0.2, {{0.0, 0.0}, {0.0, 1.0}}}, IndexSet{0}).value;
  const C near = ctx.eval_C({0.2, {{0.0, kWallEps}, {0.0, 1.0}}}).value;
  const double wall_diff = std::abs(wall - near);
  return {worst < kChartTol && wall_diff < kWallTol,
          fmt("chart deviation %.3g", worst) + fmt(", wall limit deviation %.3g", wall_diff)};
}

Outcome order_independence() {
  std::mt19937 rng(5);
  double worst = 0.0;
  AnalyticOptions shuffled;
  shuffled.shuffle_seed = 0x5eed;
  for (const Gcm& g : {a2(), affine_a1(), hyperbolic()}) {
    const Analytic plain(g), mixed(g, shuffled);
    for (int k = 0; k < 10; ++k) {
      const SpectralPoint p = random_point(rng, g, 2, 0.3);
      worst = std::max(worst, std::abs(plain.eval_C(p).value - mixed.eval_C(p).value));
    }
  }
  return {worst < kShuffleTol, fmt("max change %.3g", worst)};
}

Outcome completions() {
  bool ok = true;
  std::string counts;
  for (std::int64_t p2 = 0; p2 <= 10; ++p2) {
    const std::vector<std::int64_t> p{p2};
    const CompletionCount c = count_parabolic_completions(affine_a1(), IndexSet{0}, p, 4 * (p2 + 1));
    ok = ok && c.saturated && c.count <= 2;
    counts += (counts.empty() ? "" : ",") + std::to_string(c.count);
  }
  return {ok, "counts for p2 = 0..10: " + counts};
}

Outcome radius() {
  auto estimate = [](const Gcm& g) { return estimate_radius(poincare(enumerate_weyl(g, kRadiusLength))); };
  const double affine = estimate(affine_a1());
  const double hyper = estimate(hyperbolic());
  const double fa2 = estimate(a2());
  const double fb2 = estimate(b2());
  const bool ok = affine >= kAffineRadiusLo && affine <= kAffineRadiusHi && hyper < kHyperbolicRadiusMax &&
                  std::isinf(fa2) && std::isinf(fb2);
  return {ok, fmt("affine %.6f", affine) + fmt(", [[2,-3],[-3,2]] %.6f", hyper) + fmt(", A2 %g", fa2) +
                  fmt(", B2 %g", fb2)};
}

Outcome rank_one() {
  const Analytic ctx(a1());
  double worst = 0.0;
  const std::vector<C> ts{C(-0.8, 0.1), C(-0.4, -0.3), C(0.0), C(0.35, 0.2), C(0.9, -0.05)};
  const std::vector<C> zs{C(0.0, 0.05), C(0.3, 0.4), C(-0.45, 1.2), C(0.1, -0.6), C(2.7, -0.02)};
  for (const C t : ts) {
    for (const C z : zs) worst = std::max(worst, std::abs(ctx.eval_C({t, {z}}).value - (1.0 + t)));
  }
  return {worst < kRankOneTol, fmt("max |C - (1+t)| %.3g over 25 points", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Macdonald identity for A2 and B2", macdonald},
      {"m = 1 in finite type", finite_m},
      {"constant term is the Poincare series", constant_term},
      {"symbolic and numeric values agree", bridge},
      {"W-invariance", invariance},
      {"continuation charts agree", continuation},
      {"order independence", order_independence},
      {"finitely many parabolic completions", completions},
      {"radius estimates", radius},
      {"rank-1 closed form", rank_one},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const Error& e) {
      o = {false, "error: " + e.to_json().dump()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
