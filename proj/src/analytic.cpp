#include "kmcf/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "kmcf/error.hpp"

namespace kmcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

Complex pair_with(std::span<const std::int64_t> m, std::span<const Complex> z) {
  Complex s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += static_cast<double>(m[i]) * z[i];
  return s;
}

nlohmann::json complex_json(Complex c) { return nlohmann::json::array({c.real(), c.imag()}); }

/// Evaluates the two rational factors in q = e^{2 pi i s}, switching to
/// u = 1/q when |q| > 1 so that nothing overflows.
class FactorEval {
 public:
  FactorEval(Complex t, double guard) : t_(t), guard_(guard) {}

  /// (1 - t q) / (1 - q)
  Complex ratio(Complex s, std::span<const std::int64_t> coroot) {
    Complex num, den;
    if (s.imag() >= 0.0) {
      const Complex q = std::exp(Complex(0.0, kTwoPi) * s);
      num = 1.0 - t_ * q;
      den = 1.0 - q;
    } else {
      const Complex u = std::exp(Complex(0.0, -kTwoPi) * s);
      num = u - t_;
      den = u - 1.0;
    }
    check(den, coroot, "1 - q");
    return num / den;
  }

  /// (t - q) / (1 - t q)
  Complex twisted(Complex s, std::span<const std::int64_t> coroot) {
    Complex num, den;
    if (s.imag() >= 0.0) {
      const Complex q = std::exp(Complex(0.0, kTwoPi) * s);
      num = t_ - q;
      den = 1.0 - t_ * q;
    } else {
      const Complex u = std::exp(Complex(0.0, -kTwoPi) * s);
      num = t_ * u - 1.0;
      den = u - t_;
    }
    check(den, coroot, "1 - t q");
    return num / den;
  }

  double min_denominator() const { return min_den_; }

 private:
  void check(Complex den, std::span<const std::int64_t> coroot, const char* which) {
    const double a = std::abs(den);
    min_den_ = std::min(min_den_, a);
    if (a < guard_) {
      throw Error(ErrorKind::DenominatorNearZero, std::string("denominator ") + which + " vanishes",
                  {{"coroot", std::vector<std::int64_t>(coroot.begin(), coroot.end())},
                   {"abs", a},
                   {"guard", guard_}});
    }
  }

  Complex t_;
  double guard_;
  double min_den_ = kInf;
};

Complex eval_poly(const std::vector<std::uint64_t>& c, Complex t) {
  Complex acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + static_cast<double>(*it);
  return acc;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

/// (1 - t q) / (1 - q) for the coroot w(b^vee), transported exactly before
/// pairing with z.
Complex image_ratio(FactorEval& f, const ActionMatrix& w, const Coords& coroot, std::span<const Complex> z) {
  const std::vector<BigInt> img = w.apply(coroot);
  constexpr std::int64_t kClamp = std::int64_t{1} << 62;
  Complex s = 0.0;
  Coords m;
  for (std::size_t i = 0; i < img.size(); ++i) {
    s += img[i].convert_to<double>() * z[i];
    m.push_back(img[i] > kClamp ? kClamp : (img[i] < -kClamp ? -kClamp : static_cast<std::int64_t>(img[i])));
  }
  return f.ratio(s, m);
}

double min_imag(const std::vector<Complex>& z) {
  double c = kInf;
  for (const auto& v : z) c = std::min(c, v.imag());
  return c;
}

}  // namespace

std::vector<double> SpectralPoint::imag_pairings() const {
  std::vector<double> p;
  p.reserve(z.size());
  for (const auto& v : z) p.push_back(v.imag());
  return p;
}

nlohmann::json SpectralPoint::to_json() const {
  nlohmann::json zs = nlohmann::json::array();
  for (const auto& v : z) zs.push_back(complex_json(v));
  return {{"t", complex_json(t)}, {"z", zs}};
}

Complex exponential(std::span<const std::int64_t> coroot, std::span<const Complex> z) {
  return std::exp(Complex(0.0, kTwoPi) * pair_with(coroot, z));
}

void reflect_pairings(const Gcm& gcm, int i, std::span<Complex> z) {
  const Complex zi = z[static_cast<std::size_t>(i)];
  for (int j = 0; j < gcm.rank(); ++j) z[static_cast<std::size_t>(j)] -= static_cast<double>(gcm(j, i)) * zi;
}

void reflect_pairings(const Gcm& gcm, int i, std::span<double> p) {
  const double pi = p[static_cast<std::size_t>(i)];
  for (int j = 0; j < gcm.rank(); ++j) p[static_cast<std::size_t>(j)] -= static_cast<double>(gcm(j, i)) * pi;
}

std::vector<Complex> apply_word(const Gcm& gcm, std::span<const int> word, std::span<const Complex> z) {
  std::vector<Complex> out(z.begin(), z.end());
  for (auto it = word.rbegin(); it != word.rend(); ++it) reflect_pairings(gcm, *it, out);
  return out;
}

std::vector<double> apply_word(const Gcm& gcm, std::span<const int> word, std::span<const double> p) {
  std::vector<double> out(p.begin(), p.end());
  for (auto it = word.rbegin(); it != word.rend(); ++it) reflect_pairings(gcm, *it, std::span<double>(out));
  return out;
}

std::string_view to_string(FacetStatus s) {
  switch (s) {
    case FacetStatus::Interior: return "Interior";
    case FacetStatus::NotInteriorInfiniteStabilizer: return "NotInteriorInfiniteStabilizer";
    case FacetStatus::Unresolved: return "Unresolved";
  }
  return "Unresolved";
}

nlohmann::json FacetDescriptor::to_json() const {
  constexpr std::size_t kUnresolvedPrefix = 16;
  const bool cut = status == FacetStatus::Unresolved && word.size() > kUnresolvedPrefix;
  std::vector<int> w;
  for (std::size_t k = 0; k < (cut ? kUnresolvedPrefix : word.size()); ++k) w.push_back(word[k] + 1);
  nlohmann::json j{{"word", w}, {"X", subset.to_one_based()}, {"representative", representative},
                   {"status", std::string(to_string(status))}};
  if (cut) j["word_length"] = word.size();
  return j;
}

FacetDescriptor classify(const Gcm& gcm, std::span<const double> pairings, double tol, int max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorKind::DomainError, "tolerance must be positive", {{"tol", tol}});
  if (static_cast<int>(pairings.size()) != gcm.rank()) {
    throw Error(ErrorKind::DimensionMismatch, "pairing vector length differs from rank",
                {{"expected", gcm.rank()}, {"got", pairings.size()}});
  }
  FacetDescriptor fd;
  fd.representative.assign(pairings.begin(), pairings.end());
  for (int iter = 0;; ++iter) {
    int pivot = -1;
    for (int i = 0; i < gcm.rank(); ++i) {
      if (fd.representative[static_cast<std::size_t>(i)] < -tol) {
        pivot = i;
        break;
      }
    }
    if (pivot < 0) break;
    if (iter >= max_iter) {
      fd.status = FacetStatus::Unresolved;
      return fd;
    }
    reflect_pairings(gcm, pivot, std::span<double>(fd.representative));
    fd.word.push_back(pivot);
  }
  for (int i = 0; i < gcm.rank(); ++i) {
    if (std::abs(fd.representative[static_cast<std::size_t>(i)]) <= tol) fd.subset.insert(i);
  }
  fd.status = is_w_finite(gcm, fd.subset) ? FacetStatus::Interior : FacetStatus::NotInteriorInfiniteStabilizer;
  return fd;
}

nlohmann::json ConvergenceReport::to_json() const {
  nlohmann::json partial = nlohmann::json::array();
  for (const auto& v : partial_by_length) partial.push_back(complex_json(v));
  std::vector<int> w;
  for (int i : reduction_word) w.push_back(i + 1);
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  };
  nlohmann::json env = nlohmann::json::array();
  for (double v : sum_tail_envelope) env.push_back(num(v));
  return {{"form", form},
          {"partial_by_length", partial},
          {"product_tail", num(product_tail)},
          {"product_tail_rigorous", product_tail_rigorous},
          {"r1", num(r1)},
          {"rho", num(rho)},
          {"sum_tail_constant", num(sum_tail_constant)},
          {"exceptional_roots", exceptional_roots},
          {"exceptional_set_complete", exceptional_set_complete},
          {"sum_tail_envelope", env},
          {"sum_tail", num(sum_tail)},
          {"tail_estimate", num(tail_estimate)},
          {"tail_target_met", tail_target_met},
          {"min_denominator", num(min_denominator)},
          {"near_pole", near_pole},
          {"deep_images", deep_images},
          {"reduced", reduced},
          {"reduction_word", w},
          {"wall_nodes", wall_nodes},
          {"wall_radius", wall_radius}};
}

nlohmann::json InvarianceReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& w : words) {
    std::vector<int> word;
    for (int i : w.word) word.push_back(i + 1);
    nlohmann::json r = {{"word", word}, {"in_parabolic", w.in_parabolic}, {"deviation", w.deviation}};
    if (w.value) r["value"] = complex_json(*w.value);
    if (w.error) r["error"] = *w.error;
    rows.push_back(r);
  }
  return {{"base_value", complex_json(base_value)},
          {"max_deviation_parabolic", max_deviation_parabolic},
          {"max_deviation_full", max_deviation_full},
          {"failures", failures},
          {"words", rows}};
}

nlohmann::json AtlasResult::to_json() const {
  nlohmann::json others = nlohmann::json::array();
  for (const auto& [x, v] : other_charts) others.push_back({{"X", x.to_one_based()}, {"value", complex_json(v)}});
  return {{"facet", facet.to_json()},
          {"chart", chart.to_one_based()},
          {"value", complex_json(evaluation.value)},
          {"report", evaluation.report.to_json()},
          {"other_charts", others},
          {"max_chart_deviation", max_chart_deviation},
          {"charts_agree", charts_agree}};
}

Analytic::Analytic(const Gcm& gcm, AnalyticOptions options)
    : gcm_(gcm),
      options_(options),
      tables_([&] {
        if (options.height < 1 || options.length < 0) {
          throw Error(ErrorKind::DomainError, "height must be >= 1 and length >= 0",
                      {{"height", options.height}, {"length", options.length}});
        }
        return enumerate_with_roots(gcm, options.length, options.height);
      }()) {
  try {
    tail_roots_ = enumerate_roots(gcm_, 2 * static_cast<std::int64_t>(options_.height),
                                  {.bound = HeightKind::Coroot, .max_entries = 200'000});
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::CapacityExceeded) throw;
  }

  int len = std::max(options_.radius_length, 8);
  for (;;) {
    try {
      growth_ = poincare(enumerate_weyl(gcm_, len, {.max_elements = options_.radius_elements}));
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CapacityExceeded || len <= 8) throw;
      len = std::max(8, len / 2);
    }
  }
  radius_ = estimate_radius(growth_);

  const WeylTable& w = weyl();
  inverse_.resize(w.size());
  for (const auto& el : w) {
    ActionMatrix m = ActionMatrix::identity(gcm_.rank());
    for (auto it = el.word.rbegin(); it != el.word.rend(); ++it) m = m * ActionMatrix::reflection(gcm_, *it);
    inverse_[el.index] = *w.find(m);
  }
}

std::vector<std::size_t> Analytic::order(std::size_t n, std::uint64_t salt) const {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (options_.shuffle_seed) {
    std::mt19937_64 rng(*options_.shuffle_seed ^ (salt * 0x9E3779B97F4A7C15ULL));
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  return idx;
}

void Analytic::check_point(const SpectralPoint& p) const {
  if (static_cast<int>(p.z.size()) != gcm_.rank()) {
    throw Error(ErrorKind::DimensionMismatch, "point dimension differs from rank",
                {{"expected", gcm_.rank()}, {"got", p.z.size()}});
  }
  for (const auto& v : p.z) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(ErrorKind::DomainError, "non-finite coordinate", {{"point", p.to_json()}});
    }
  }
  const double bound = radius_ * (1.0 - options_.radius_margin);
  if (std::isfinite(radius_) && !(std::abs(p.t) < bound)) {
    throw Error(ErrorKind::TBeyondRadius, "|t| exceeds the estimated radius of convergence",
                {{"abs_t", std::abs(p.t)}, {"radius", radius_}, {"bound", bound}});
  }
}

void Analytic::check_subset(IndexSet x) const {
  if (!x.subset_of(IndexSet::all(gcm_.rank()))) {
    throw Error(ErrorKind::IndexOutOfRange, "subset " + x.to_string() + " exceeds rank");
  }
  if (!is_w_finite(gcm_, x)) {
    throw Error(ErrorKind::NotWFinite, "subset " + x.to_string() + " is not W-finite", {{"X", x.to_one_based()}});
  }
}

std::vector<std::uint64_t> Analytic::parabolic_poincare(IndexSet x) const {
  check_subset(x);
  if (x.empty()) return {1};
  constexpr std::int64_t kUnbounded = std::int64_t{1} << 40;
  const RootTable r = enumerate_roots(gcm_, kUnbounded, {.bound = HeightKind::Coroot, .generators = x});
  const WeylTable w = enumerate_weyl(gcm_, static_cast<int>(r.size()), {.generators = x});
  return poincare(w, x).coefficients;
}

std::vector<std::vector<int>> Analytic::words_up_to(int k) const {
  std::vector<std::vector<int>> out;
  for (const auto& w : enumerate_weyl(gcm_, k)) out.push_back(w.word);
  return out;
}

Analytic::Located Analytic::locate(const SpectralPoint& p, IndexSet x) const {
  const double tol = options_.tol;
  std::vector<double> y = p.imag_pairings();
  Located loc;
  loc.reduced = p.z;
  // W_X-reduction decides membership in S_X = W_X Gamma_X.
  for (int iter = 0;; ++iter) {
    int pivot = -1;
    for (int i : x.to_vector()) {
      if (y[static_cast<std::size_t>(i)] < -tol) {
        pivot = i;
        break;
      }
    }
    if (pivot < 0 || iter >= options_.max_iter) break;
    reflect_pairings(gcm_, pivot, std::span<double>(y));
    reflect_pairings(gcm_, pivot, std::span<Complex>(loc.reduced));
    loc.word.push_back(pivot);
  }
  bool in_sx = true;
  for (int j : x.complement(gcm_.rank()).to_vector()) in_sx = in_sx && y[static_cast<std::size_t>(j)] > tol;
  if (in_sx) return loc;
  const FacetDescriptor fd = classify(gcm_, p.imag_pairings(), tol, options_.max_iter);
  if (fd.status != FacetStatus::Interior || !fd.subset.subset_of(x)) {
    throw Error(ErrorKind::DomainError, "Im z is not in W.S_X for X=" + x.to_string(),
                {{"X", x.to_one_based()}, {"facet", fd.to_json()}});
  }
  loc.word = fd.word;
  loc.reduced = p.z;
  for (int i : fd.word) reflect_pairings(gcm_, i, std::span<Complex>(loc.reduced));
  return loc;
}

void Analytic::fill_tails(ConvergenceReport& rep, const SpectralPoint& p, IndexSet x,
                          const std::vector<Complex>& reduced, Complex scale, Complex value) const {
  const RootTable& roots = this->roots();
  const double at = std::abs(p.t);
  const int l = gcm_.rank();
  const std::int64_t h = options_.height;

  // Factors beyond height H: |(1 - t q)/(1 - q) - 1| <= |1 - t| |q| / (1 - |q|).
  double excess = 0.0;
  if (x.empty()) {
    const double c = min_imag(reduced);
    if (c > 0.0) {
      for (int n = static_cast<int>(h) + 1; n < static_cast<int>(h) + 100000; ++n) {
        const double qn = std::exp(-kTwoPi * c * n);
        const double term = binomial(n + l - 1, l - 1) * qn / (1.0 - qn);
        excess += term;
        if (term < 1e-18 * std::max(excess, 1e-300)) break;
      }
    } else {
      excess = kInf;
    }
    rep.product_tail_rigorous = true;
  } else if (tail_roots_) {
    // Roots in (H, 2H] counted twice to account for the rest.
    for (const auto& b : *tail_roots_) {
      if (b.coroot_height <= h || b.support().subset_of(x)) continue;
      const double qa = std::exp(-kTwoPi * pair_with(b.coroot, reduced).imag());
      excess += 2.0 * qa / std::max(1.0 - qa, 1e-300);
    }
    rep.product_tail_rigorous = false;
  } else {
    excess = kInf;
    rep.product_tail_rigorous = false;
  }
  rep.product_tail = std::expm1(std::abs(1.0 - p.t) * excess);

  const int length = options_.length;
  rep.sum_tail_envelope.assign(static_cast<std::size_t>(length) + 1, 0.0);
  if (weyl().closed()) {
    rep.sum_tail = 0.0;
  } else {
    const double r_ref = std::min(radius_, 1.0);
    rep.r1 = std::isfinite(radius_) ? std::min((at + radius_) / 2.0, 0.999) : 0.999;
    rep.rho = rep.r1 / r_ref;
    if (rep.r1 <= at || rep.rho >= 1.0) {
      rep.sum_tail = kInf;
      std::fill(rep.sum_tail_envelope.begin(), rep.sum_tail_envelope.end(), kInf);
    } else {
      // Factors with |q| <= delta are at most r1 in modulus; the rest form S.
      const double delta = (rep.r1 - at) / (1.0 + rep.r1 * at);
      double a = 1.0;
      std::size_t count = 0;
      std::int64_t deepest = 0;
      for (const auto& b : roots) {
        const Complex s = pair_with(b.coroot, reduced);
        const double qa = std::exp(-kTwoPi * s.imag());
        if (qa <= delta) continue;
        const Complex q = std::exp(Complex(0.0, kTwoPi) * s);
        const double g = std::abs(p.t - q) / std::abs(1.0 - p.t * q);
        a *= std::max(1.0, g / rep.r1);
        ++count;
        deepest = std::max(deepest, b.coroot_height);
      }
      rep.exceptional_roots = count;
      const double c = min_imag(reduced);
      const std::int64_t table_height = roots.height_bound();
      rep.exceptional_set_complete = (x.empty() && c > 0.0)
                                         ? std::exp(-kTwoPi * c * static_cast<double>(table_height + 1)) <= delta
                                         : 2 * deepest <= table_height;
      double b_const = 0.0;
      for (std::size_t k = 0; k < growth_.coefficients.size(); ++k) {
        b_const = std::max(b_const, static_cast<double>(growth_.coefficients[k]) * std::pow(r_ref, static_cast<double>(k)));
      }
      rep.sum_tail_constant = a * b_const;
      for (int k = 0; k <= length; ++k) {
        rep.sum_tail_envelope[static_cast<std::size_t>(k)] =
            rep.sum_tail_constant * std::pow(rep.rho, k + 1) / (1.0 - rep.rho);
      }
      rep.sum_tail = std::abs(scale) * rep.sum_tail_envelope.back();
    }
  }
  rep.tail_estimate = std::abs(value) * rep.product_tail + rep.sum_tail * (1.0 + rep.product_tail);
  rep.tail_target_met = rep.tail_estimate <= options_.tail_target;
}

Evaluation Analytic::product_form(const SpectralPoint& p, IndexSet x, const Located& where) const {
  const RootTable& roots = this->roots();
  const WeylTable& weyl = this->weyl();
  FactorEval f(p.t, options_.denominator_guard);
  const Complex wx = eval_poly(parabolic_poincare(x), p.t);
  const std::vector<Complex>& z = where.reduced;

  std::vector<Complex> s(roots.size());
  for (std::size_t k = 0; k < roots.size(); ++k) s[k] = pair_with(roots[k].coroot, z);
  std::vector<std::optional<Complex>> tw(roots.size());

  Complex prod = 1.0;
  for (std::size_t k : order(roots.size(), 2)) {
    const RootEntry& b = roots[k];
    if (b.coroot_height > options_.height) continue;
    prod *= f.ratio(s[k], b.coroot);
  }

  std::vector<Coords> phi_x;
  if (!x.empty()) {
    constexpr std::int64_t kUnbounded = std::int64_t{1} << 40;
    for (const auto& c : enumerate_roots(gcm_, kUnbounded, {.bound = HeightKind::Coroot, .generators = x})) {
      phi_x.push_back(c.coroot);
    }
  }

  std::vector<std::size_t> reps;
  for (const auto& w : weyl) {
    if ((w.right_descents & x).empty()) reps.push_back(w.index);
  }
  std::vector<Complex> shell(static_cast<std::size_t>(options_.length) + 1, 0.0);
  for (std::size_t k : order(reps.size(), 1)) {
    const WeylElement& w = weyl[reps[k]];
    Complex term = 1.0;
    for (std::size_t idx : w.inversions) {
      if (!tw[idx]) tw[idx] = f.twisted(s[idx], roots[idx].coroot);
      term *= *tw[idx];
    }
    // The factors of w Phi_{X,+} are not part of the term.
    for (const auto& c : phi_x) {
      const std::vector<BigInt> img = w.action.apply(c);
      BigInt height = 0;
      Coords m;
      for (const auto& v : img) {
        height += v;
        m.push_back(static_cast<std::int64_t>(v));
      }
      if (height > options_.height) continue;
      const Complex sc = pair_with(m, z);
      term /= f.ratio(sc, m);
      f.twisted(sc, m);  // guards 1 - t q
    }
    shell[static_cast<std::size_t>(w.length)] += term;
  }

  Evaluation ev;
  Complex acc = 0.0;
  for (const auto& v : shell) {
    acc += v;
    ev.report.partial_by_length.push_back(wx * acc * prod);
  }
  ev.value = wx * acc * prod;
  ev.report.form = x.empty() ? "product" : "product_X";
  ev.report.reduced = !where.word.empty();
  ev.report.reduction_word = where.word;
  ev.report.min_denominator = f.min_denominator();
  ev.report.near_pole = f.min_denominator() < 1e-6;
  fill_tails(ev.report, p, x, z, wx * prod, ev.value);
  return ev;
}

Evaluation Analytic::wall_average(const SpectralPoint& p, IndexSet x, const Located& where) const {
  const std::vector<double> y = SpectralPoint{p.t, where.reduced}.imag_pairings();
  // Shrink until the coordinates the circle can push below zero span a finite W_Y.
  double eps = options_.wall_radius;
  for (;;) {
    IndexSet near;
    for (int i = 0; i < gcm_.rank(); ++i) {
      if (y[static_cast<std::size_t>(i)] < 8.0 * eps) near.insert(i);
    }
    if (is_w_finite(gcm_, near)) break;
    eps /= 2.0;
    if (eps < 1e-9) {
      throw Error(ErrorKind::DomainError, "no admissible circle around the wall point", {{"point", p.to_json()}});
    }
  }
  const int n = std::max(options_.wall_nodes, 4);
  Evaluation ev;
  ev.report.partial_by_length.assign(static_cast<std::size_t>(options_.length) + 1, 0.0);
  ev.report.min_denominator = kInf;
  ev.value = 0.0;
  for (int k = 0; k < n; ++k) {
    const Complex zeta = std::polar(eps, kTwoPi * (k + 0.5) / n);
    SpectralPoint node{p.t, where.reduced};
    for (auto& v : node.z) v += zeta;
    const Evaluation e = product_form(node, x, locate(node, x));
    ev.value += e.value / static_cast<double>(n);
    for (std::size_t j = 0; j < ev.report.partial_by_length.size(); ++j) {
      ev.report.partial_by_length[j] += e.report.partial_by_length[j] / static_cast<double>(n);
    }
    auto& r = ev.report;
    if (k == 0) {
      ConvergenceReport fresh;
      fresh.partial_by_length = std::move(r.partial_by_length);
      fresh.min_denominator = kInf;
      r = std::move(fresh);
      r.product_tail_rigorous = e.report.product_tail_rigorous;
      r.exceptional_set_complete = e.report.exceptional_set_complete;
      r.tail_target_met = true;
      r.sum_tail_envelope.assign(e.report.sum_tail_envelope.size(), 0.0);
    }
    r.product_tail = std::max(r.product_tail, e.report.product_tail);
    r.product_tail_rigorous = r.product_tail_rigorous && e.report.product_tail_rigorous;
    r.r1 = std::max(r.r1, e.report.r1);
    r.rho = std::max(r.rho, e.report.rho);
    r.sum_tail_constant = std::max(r.sum_tail_constant, e.report.sum_tail_constant);
    r.exceptional_roots = std::max(r.exceptional_roots, e.report.exceptional_roots);
    r.exceptional_set_complete = r.exceptional_set_complete && e.report.exceptional_set_complete;
    for (std::size_t j = 0; j < r.sum_tail_envelope.size(); ++j) {
      r.sum_tail_envelope[j] = std::max(r.sum_tail_envelope[j], e.report.sum_tail_envelope[j]);
    }
    r.sum_tail = std::max(r.sum_tail, e.report.sum_tail);
    r.tail_estimate = std::max(r.tail_estimate, e.report.tail_estimate);
    r.min_denominator = std::min(r.min_denominator, e.report.min_denominator);
  }
  ev.report.tail_target_met = ev.report.tail_estimate <= options_.tail_target;
  ev.report.near_pole = ev.report.min_denominator < 1e-6;
  ev.report.form = x.empty() ? "product" : "product_X";
  ev.report.reduced = !where.word.empty();
  ev.report.reduction_word = where.word;
  ev.report.wall_nodes = n;
  ev.report.wall_radius = eps;
  return ev;
}

Evaluation Analytic::eval_C(const SpectralPoint& p) const {
  check_point(p);
  const FacetDescriptor fd = classify(gcm_, p.imag_pairings(), options_.tol, options_.max_iter);
  if (fd.status != FacetStatus::Interior || !fd.subset.empty()) {
    throw Error(ErrorKind::DomainError, "Im z is not in W.C", {{"facet", fd.to_json()}});
  }
  return product_form(p, IndexSet{}, locate(p, IndexSet{}));
}

Evaluation Analytic::eval_C_X(const SpectralPoint& p, IndexSet x) const {
  check_subset(x);
  check_point(p);
  const Located loc = locate(p, x);
  const double c = min_imag(loc.reduced);
  if (c >= options_.wall_radius / 4.0) return product_form(p, x, loc);
  return wall_average(p, x, loc);
}

Evaluation Analytic::eval_C_sumform(const SpectralPoint& p) const {
  check_point(p);
  const FacetDescriptor fd = classify(gcm_, p.imag_pairings(), options_.tol, options_.max_iter);
  if (fd.status != FacetStatus::Interior || !fd.subset.empty()) {
    throw Error(ErrorKind::DomainError, "Im z is not in W.C", {{"facet", fd.to_json()}});
  }
  return eval_C_X_sumform(p, IndexSet{});
}

Evaluation Analytic::eval_C_X_sumform(const SpectralPoint& p, IndexSet x) const {
  check_subset(x);
  check_point(p);
  const Located loc = locate(p, x);
  const RootTable& roots = this->roots();
  const WeylTable& weyl = this->weyl();
  FactorEval f(p.t, options_.denominator_guard);
  const Complex wx = eval_poly(parabolic_poincare(x), p.t);

  std::vector<std::size_t> base;  // Phi_+ - Phi_X up to height H
  std::vector<char> in_base(roots.size(), 0);
  for (const auto& b : roots) {
    if (b.coroot_height <= options_.height && !b.support().subset_of(x)) {
      base.push_back(b.index);
      in_base[b.index] = 1;
    }
  }

  std::vector<std::size_t> base_all;  // Phi_+ up to height H
  for (const auto& b : roots) {
    if (b.coroot_height <= options_.height) base_all.push_back(b.index);
  }

  Evaluation ev;
  std::vector<Complex> shell(static_cast<std::size_t>(options_.length) + 1, 0.0);
  std::vector<std::size_t> reps;
  for (const auto& w : weyl) {
    if ((w.right_descents & x).empty()) reps.push_back(w.index);
  }
  for (std::size_t k : order(reps.size(), 3)) {
    const WeylElement& w = weyl[reps[k]];
    Complex term = 1.0;
    for (std::size_t idx : order(base.size(), 4 + w.index)) {
      const RootEntry& b = roots[base[idx]];
      term *= image_ratio(f, w.action, b.coroot, p.z);
    }
    // Roots beyond H that w sends negative.
    for (std::size_t idx : weyl[inverse_[w.index]].inversions) {
      const RootEntry& b = roots[idx];
      if (in_base[idx] || b.support().subset_of(x)) continue;
      term *= image_ratio(f, w.action, b.coroot, p.z);
      ++ev.report.deep_images;
    }
    // Roots beyond H whose image lands at height <= H.
    const ActionMatrix& inv = weyl[inverse_[w.index]].action;
    for (std::size_t idx : base_all) {
      const RootEntry& c = roots[idx];
      const std::vector<BigInt> a = inv.apply(c.coroot);
      BigInt height = 0;
      bool positive = true;
      IndexSet support;
      for (std::size_t i = 0; i < a.size(); ++i) {
        positive = positive && a[i] >= 0;
        height += a[i];
        if (a[i] != 0) support.insert(static_cast<int>(i));
      }
      if (!positive || height <= options_.height || support.subset_of(x)) continue;
      term *= f.ratio(pair_with(c.coroot, p.z), c.coroot);
      ++ev.report.deep_images;
    }
    shell[static_cast<std::size_t>(w.length)] += term;
  }

  Complex acc = 0.0;
  for (const auto& v : shell) {
    acc += v;
    ev.report.partial_by_length.push_back(wx * acc);
  }
  ev.value = wx * acc;
  ev.report.form = x.empty() ? "sum" : "sum_X";
  ev.report.reduced = false;
  ev.report.reduction_word = loc.word;
  ev.report.min_denominator = f.min_denominator();
  ev.report.near_pole = f.min_denominator() < 1e-6;

  // Tails are those of the product form at the reduced point.
  Complex prod = 1.0;
  FactorEval g(p.t, 0.0);
  for (std::size_t idx : base) prod *= g.ratio(pair_with(roots[idx].coroot, loc.reduced), roots[idx].coroot);
  fill_tails(ev.report, p, x, loc.reduced, wx * prod, ev.value);
  return ev;
}

InvarianceReport Analytic::verify_invariance(const SpectralPoint& p, IndexSet x,
                                             const std::vector<std::vector<int>>& words) const {
  auto eval = [&](const SpectralPoint& q) { return x.empty() ? eval_C_sumform(q) : eval_C_X(q, x); };
  InvarianceReport out;
  out.base_value = eval(p).value;
  for (const auto& word : words) {
    WordCheck wc;
    wc.word = word;
    wc.in_parabolic = std::all_of(word.begin(), word.end(), [&](int i) { return x.contains(i); });
    try {
      for (int i : word) {
        if (i < 0 || i >= gcm_.rank()) throw Error(ErrorKind::IndexOutOfRange, "word letter out of range", {{"letter", i + 1}});
      }
      const SpectralPoint q{p.t, apply_word(gcm_, word, p.z)};
      wc.value = eval(q).value;
      wc.deviation = std::abs(*wc.value - out.base_value);
      out.max_deviation_full = std::max(out.max_deviation_full, wc.deviation);
      if (wc.in_parabolic) out.max_deviation_parabolic = std::max(out.max_deviation_parabolic, wc.deviation);
    } catch (const Error& e) {
      wc.error = e.to_json();
      ++out.failures;
    }
    out.words.push_back(std::move(wc));
  }
  return out;
}

AtlasResult Analytic::continuation_atlas(const SpectralPoint& p, double agreement_tol) const {
  check_point(p);
  AtlasResult out;
  out.facet = classify(gcm_, p.imag_pairings(), options_.tol, options_.max_iter);
  if (out.facet.status != FacetStatus::Interior) {
    throw Error(ErrorKind::OutsideOmega, "point lies outside the complexified Tits cone interior",
                {{"facet", out.facet.to_json()}});
  }
  out.chart = out.facet.subset;
  out.evaluation = eval_C_X(p, out.chart);
  for (const IndexSet x : w_finite_subsets(gcm_)) {
    if (x == out.chart || !out.chart.subset_of(x)) continue;
    if (out.other_charts.size() >= 16) break;
    const Complex v = eval_C_X(p, x).value;
    out.other_charts.emplace_back(x, v);
    out.max_chart_deviation = std::max(out.max_chart_deviation, std::abs(v - out.evaluation.value));
  }
  out.charts_agree = out.max_chart_deviation <= agreement_tol;
  return out;
}

}  // namespace kmcf
