#include "kmcf/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "kmcf/analytic.hpp"
#include "kmcf/cartan.hpp"
#include "kmcf/error.hpp"
#include "kmcf/formal.hpp"
#include "kmcf/roots.hpp"
#include "kmcf/weyl.hpp"

namespace kmcf::cli {

namespace {

constexpr double kAgreement = 1e-6;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\n\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\n\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc{} || ptr != last) {
    throw UsageError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw UsageError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json complex_json(Complex c) { return nlohmann::json::array({c.real(), c.imag()}); }

Complex complex_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

std::vector<int> to_one_based(const std::vector<int>& word) {
  std::vector<int> out;
  for (int i : word) out.push_back(i + 1);
  return out;
}

Gcm load_source(const std::string& source) {
  const std::string s = trim(source);
  if (s.empty()) throw UsageError("--gcm is required");
  if (s.front() == '{' || s.front() == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::ParseError, std::string("inline GCM is not valid JSON: ") + e.what());
    }
    if (j.is_array()) j = {{"matrix", j}};
    return gcm_from_json(j);
  }
  return load_gcm(s);
}

IndexSet subset_of(const Gcm& g, const std::vector<int>& one_based) {
  const IndexSet x = IndexSet::from_one_based(one_based);
  if (!x.subset_of(IndexSet::all(g.rank()))) {
    throw Error(ErrorKind::IndexOutOfRange, "subset " + x.to_string() + " exceeds rank " + std::to_string(g.rank()));
  }
  return x;
}

AnalyticOptions analytic_options(const JobConfig& job) {
  AnalyticOptions o;
  o.height = job.height;
  o.length = job.max_length;
  o.tol = job.tol;
  o.tail_target = job.tail_target;
  return o;
}

SpectralPoint point_of(const JobConfig& job, const Gcm& g) {
  if (!job.t) throw UsageError("--t is required");
  if (static_cast<int>(job.z.size()) != g.rank()) {
    throw UsageError("--z needs " + std::to_string(g.rank()) + " coordinates, got " + std::to_string(job.z.size()));
  }
  return {*job.t, job.z};
}

void require_json(const JobConfig& job) {
  if (job.format != "json") throw UsageError("'" + job.command + "' only supports --format json");
}

// ---------------------------------------------------------------- commands

int cmd_roots(const JobConfig& job, const Gcm& g, std::ostream& out) {
  const RootTable table = enumerate_roots(g, job.height, {.bound = job.coroot_height ? HeightKind::Coroot : HeightKind::Root});
  const int l = g.rank();
  if (job.format == "csv") {
    for (int i = 1; i <= l; ++i) out << "n" << i << ",";
    for (int i = 1; i <= l; ++i) out << "m" << i << ",";
    out << "height\n";
    for (const auto& b : table) {
      for (auto v : b.root) out << v << ",";
      for (auto v : b.coroot) out << v << ",";
      out << b.height << "\n";
    }
  } else {
    for (const auto& b : table) out << nlohmann::json{{"n", b.root}, {"m", b.coroot}, {"height", b.height}}.dump() << "\n";
  }
  return 0;
}

std::vector<const WeylElement*> listed_elements(const JobConfig& job, const Gcm& g, const WeylTable& table) {
  if (job.coset) return minimal_coset_reps(table, subset_of(g, *job.coset));
  std::vector<const WeylElement*> all;
  for (const auto& w : table) all.push_back(&w);
  return all;
}

int cmd_weyl(const JobConfig& job, const Gcm& g, std::ostream& out) {
  const WeylTable table = enumerate_weyl(g, job.max_length);
  const auto elements = listed_elements(job, g, table);
  if (job.format == "csv") out << "length,word\n";
  for (const auto* w : elements) {
    if (job.format == "csv") {
      out << w->length << ",";
      for (std::size_t k = 0; k < w->word.size(); ++k) out << (k ? " " : "") << w->word[k] + 1;
      out << "\n";
    } else {
      out << nlohmann::json{{"word", to_one_based(w->word)}, {"length", w->length}}.dump() << "\n";
    }
  }
  return 0;
}

int cmd_poincare(const JobConfig& job, const Gcm& g, std::ostream& out) {
  const WeylTable table = enumerate_weyl(g, job.max_length);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(job.max_length) + 1, 0);
  for (const auto* w : listed_elements(job, g, table)) ++counts[static_cast<std::size_t>(w->length)];
  if (table.closed()) {
    while (counts.size() > 1 && counts.back() == 0) counts.pop_back();
  }
  if (job.format == "csv") out << "length,count\n";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (job.format == "csv") {
      out << k << "," << counts[k] << "\n";
    } else {
      out << nlohmann::json{{"length", k}, {"count", counts[k]}}.dump() << "\n";
    }
  }
  return 0;
}

void emit_series(const JobConfig& job, const FormalSeries& s, std::ostream& out) {
  const nlohmann::json terms = s.to_json();
  if (job.format == "csv") {
    for (int i = 1; i <= s.rank(); ++i) out << "mu" << i << ",";
    for (int k = 0; k <= s.truncation().degree; ++k) out << "c" << k << (k == s.truncation().degree ? "\n" : ",");
    for (const auto& term : terms) {
      for (const auto& v : term["mu"]) out << v.dump() << ",";
      const auto& poly = term["poly"];
      for (std::size_t k = 0; k < poly.size(); ++k) out << poly[k].dump() << (k + 1 == poly.size() ? "\n" : ",");
    }
  } else {
    for (const auto& term : terms) out << term.dump() << "\n";
  }
}

int cmd_series(const JobConfig& job, const Gcm& g, std::ostream& out) {
  const CorrectionFactor cf = correction_factor(g, {job.height, job.degree}, job.max_length);
  emit_series(job, cf.sum.value, out);
  return 0;
}

int cmd_correction(const JobConfig& job, const Gcm& g, std::ostream& out, std::ostream& err) {
  if (job.check_macdonald) {
    require_json(job);
    const IndexSet x = subset_of(g, *job.check_macdonald);
    const MacdonaldCheck mc = macdonald_identity_check(g, x, {job.height, job.degree});
    nlohmann::json j = {{"X", x.to_one_based()}, {"pass", mc.pass}, {"poincare", mc.poincare.to_json()}};
    j["first_discrepancy"] = mc.first_discrepancy ? nlohmann::json(*mc.first_discrepancy) : nlohmann::json(nullptr);
    out << j.dump() << "\n";
    if (!mc.pass) {
      err << nlohmann::json{{"error", "CheckFailed"}, {"message", "Macdonald identity fails"}, {"detail", j}}.dump()
          << "\n";
      return 1;
    }
    return 0;
  }
  const CorrectionFactor cf = correction_factor(g, {job.height, job.degree}, job.max_length);
  emit_series(job, job.inverse ? cf.m_inv : cf.m, out);
  return 0;
}

int cmd_eval(const JobConfig& job, const Gcm& g, std::ostream& out) {
  require_json(job);
  const Analytic ctx(g, analytic_options(job));
  const SpectralPoint p = point_of(job, g);
  if (job.atlas) {
    const AtlasResult a = ctx.continuation_atlas(p, kAgreement);
    nlohmann::json j = a.to_json();
    j["point"] = p.to_json();
    out << j.dump() << "\n";
    return 0;
  }
  const bool sum = job.form == "sum";
  Evaluation ev;
  if (job.chart) {
    const IndexSet x = subset_of(g, *job.chart);
    ev = sum ? ctx.eval_C_X_sumform(p, x) : ctx.eval_C_X(p, x);
  } else {
    ev = sum ? ctx.eval_C_sumform(p) : ctx.eval_C(p);
  }
  nlohmann::json j = {{"point", p.to_json()}, {"value", complex_json(ev.value)}, {"report", ev.report.to_json()}};
  if (job.chart) j["chart"] = *job.chart;
  out << j.dump() << "\n";
  return 0;
}

int cmd_classify(const JobConfig& job, const Gcm& g, std::ostream& out) {
  require_json(job);
  std::vector<double> p = job.pairings;
  if (p.empty()) {
    for (const auto& v : job.z) p.push_back(v.imag());
  }
  if (p.empty()) throw UsageError("classify needs --p or --z");
  out << classify(g, p, job.tol).to_json().dump() << "\n";
  return 0;
}

int cmd_verify(const JobConfig& job, const Gcm& g, std::ostream& out) {
  require_json(job);
  const Analytic ctx(g, analytic_options(job));
  const SpectralPoint p = point_of(job, g);
  const IndexSet x = job.chart ? subset_of(g, *job.chart) : IndexSet{};
  std::vector<std::vector<int>> words;
  if (job.words.empty()) {
    words = ctx.words_up_to(job.max_word);
  } else {
    for (const auto& w : job.words) {
      std::vector<int> word;
      for (int i : w) word.push_back(i - 1);
      words.push_back(std::move(word));
    }
  }
  const InvarianceReport rep = ctx.verify_invariance(p, x, words);
  nlohmann::json j = rep.to_json();
  j["X"] = x.to_one_based();
  j["agreement"] = kAgreement;
  j["pass"] = rep.failures == 0 && rep.max_deviation_full < kAgreement;
  out << j.dump() << "\n";
  return 0;
}

struct GridRow {
  SpectralPoint point;
  Complex value{std::nan(""), std::nan("")};
  double tail = std::nan("");
  std::string chart;
  std::optional<nlohmann::json> error;
};

int cmd_grid(const JobConfig& job, const Gcm& g, std::ostream& out, std::ostream& err) {
  const int l = g.rank();
  if (static_cast<int>(job.z_re.size()) != l || static_cast<int>(job.z_im.size()) != l) {
    throw UsageError("--z-re and --z-im need " + std::to_string(l) + " axes each");
  }
  std::vector<std::vector<double>> axes{job.t_re.values(), job.t_im.values()};
  for (int i = 0; i < l; ++i) {
    axes.push_back(job.z_re[static_cast<std::size_t>(i)].values());
    axes.push_back(job.z_im[static_cast<std::size_t>(i)].values());
  }
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();

  std::vector<GridRow> rows(total);
  for (std::size_t n = 0; n < total; ++n) {
    // Last axis varies fastest.
    std::vector<double> c(axes.size());
    std::size_t rem = n;
    for (std::size_t k = axes.size(); k-- > 0;) {
      c[k] = axes[k][rem % axes[k].size()];
      rem /= axes[k].size();
    }
    rows[n].point.t = {c[0], c[1]};
    for (int i = 0; i < l; ++i) {
      rows[n].point.z.emplace_back(c[2 + 2 * static_cast<std::size_t>(i)], c[3 + 2 * static_cast<std::size_t>(i)]);
    }
  }

  const Analytic ctx(g, analytic_options(job));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t n = next++; n < total; n = next++) {
      GridRow& r = rows[n];
      try {
        const FacetDescriptor fd = classify(g, r.point.imag_pairings(), job.tol);
        if (fd.status != FacetStatus::Interior) {
          throw Error(ErrorKind::OutsideOmega, "point lies outside the complexified Tits cone interior",
                      {{"facet", fd.to_json()}});
        }
        const Evaluation ev = ctx.eval_C_X(r.point, fd.subset);
        r.value = ev.value;
        r.tail = ev.report.tail_estimate;
        r.chart = fd.subset.to_string();
      } catch (const Error& e) {
        nlohmann::json j = e.to_json();
        j["row"] = n;
        r.error = std::move(j);
        r.chart = "error:" + std::string(to_string(e.kind()));
      }
    }
  };
  const int threads = std::clamp(job.threads, 1, 64);
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  bool failed = false;
  if (job.format == "csv") {
    out << "t_re,t_im";
    for (int i = 1; i <= l; ++i) out << ",z" << i << "_re,z" << i << "_im";
    out << ",C_re,C_im,tail_bound,chart_X\n";
    for (const auto& r : rows) {
      out << num(r.point.t.real()) << "," << num(r.point.t.imag());
      for (const auto& v : r.point.z) out << "," << num(v.real()) << "," << num(v.imag());
      out << "," << num(r.value.real()) << "," << num(r.value.imag()) << "," << num(r.tail) << ",\"" << r.chart
          << "\"\n";
    }
  } else {
    for (const auto& r : rows) {
      nlohmann::json j = {{"point", r.point.to_json()}, {"chart_X", r.chart}};
      if (r.error) {
        j["error"] = *r.error;
      } else {
        j["value"] = complex_json(r.value);
        j["tail_bound"] = r.tail;
      }
      out << j.dump() << "\n";
    }
  }
  for (const auto& r : rows) {
    if (r.error) {
      err << r.error->dump() << "\n";
      failed = true;
    }
  }
  return failed ? 1 : 0;
}

// ------------------------------------------------------------------- check

struct CheckLog {
  std::ostream& out;
  int passed = 0;
  int failed = 0;

  void record(const std::string& name, bool pass, nlohmann::json detail) {
    (pass ? passed : failed) += 1;
    detail["check"] = name;
    detail["pass"] = pass;
    out << detail.dump() << "\n";
  }
};

int cmd_check(const JobConfig& job, const Gcm& g, std::ostream& out, std::ostream& err) {
  require_json(job);
  CheckLog log{out};
  const Truncation tr{job.height, job.degree};
  const IndexSet all = IndexSet::all(g.rank());

  for (const IndexSet x : w_finite_subsets(g)) {
    if (x.empty()) continue;
    const MacdonaldCheck mc = macdonald_identity_check(g, x, tr);
    log.record("macdonald", mc.pass, {{"X", x.to_one_based()}, {"poincare", mc.poincare.to_json()}});
  }

  const CorrectionFactor cf = correction_factor(g, tr);
  {
    const auto counts = poincare(enumerate_weyl(g, job.degree)).coefficients;
    const TPoly c0 = cf.sum.value.constant_term();
    bool ok = true;
    for (int k = 0; k <= job.degree; ++k) {
      const std::uint64_t expect = static_cast<std::size_t>(k) < counts.size() ? counts[static_cast<std::size_t>(k)] : 0;
      ok = ok && c0[k] == BigInt(expect);
    }
    log.record("constant_term", ok, {{"degree", job.degree}, {"poincare", counts}});
  }
  if (is_w_finite(g, all)) {
    log.record("finite_type_m_is_one", cf.m == FormalSeries::one(g.rank(), tr),
               {{"terms", cf.m.terms().size()}});
  }
  {
    const FormalSeries prod = cf.m * cf.sum.value;
    log.record("m_times_sum_is_poincare", prod == FormalSeries::constant(g.rank(), tr, cf.poincare), {});
  }

  // --height and --degree are the symbolic truncation here.
  AnalyticOptions opts = analytic_options(job);
  opts.height = AnalyticOptions{}.height;
  const Analytic ctx(g, opts);
  std::mt19937_64 rng(job.seed);
  std::uniform_real_distribution<double> re(-0.5, 0.5), im(0.3, 0.9), ang(0.0, 2.0 * 3.141592653589793);
  const double t_abs = std::isfinite(ctx.radius()) ? std::min(0.3, 0.5 * ctx.radius()) : 0.3;
  const auto words = ctx.words_up_to(std::min(job.max_word, job.max_length));
  double inv_dev = 0.0, chart_dev = 0.0;
  std::size_t inv_fail = 0;
  nlohmann::json chart_errors = nlohmann::json::array();
  for (int k = 0; k < job.points; ++k) {
    SpectralPoint p{std::polar(t_abs * std::sqrt(std::uniform_real_distribution<double>(0, 1)(rng)), ang(rng)), {}};
    for (int i = 0; i < g.rank(); ++i) p.z.emplace_back(re(rng), im(rng));
    const InvarianceReport rep = ctx.verify_invariance(p, IndexSet{}, words);
    inv_dev = std::max(inv_dev, rep.max_deviation_full);
    inv_fail += rep.failures;
    const Complex c = ctx.eval_C(p).value;
    for (const IndexSet x : w_finite_subsets(g)) {
      try {
        chart_dev = std::max(chart_dev, std::abs(ctx.eval_C_X(p, x).value - c));
      } catch (const Error& e) {
        chart_errors.push_back(e.to_json());
      }
    }
  }
  log.record("w_invariance", inv_fail == 0 && inv_dev < kAgreement,
             {{"points", job.points}, {"words", words.size()}, {"max_deviation", inv_dev}, {"failures", inv_fail}});
  log.record("chart_agreement", chart_errors.empty() && chart_dev < kAgreement,
             {{"points", job.points}, {"max_deviation", chart_dev}, {"errors", chart_errors}});

  const nlohmann::json summary = {{"summary", {{"passed", log.passed}, {"failed", log.failed}}}};
  out << summary.dump() << "\n";
  if (log.failed > 0) {
    err << nlohmann::json{{"error", "CheckFailed"}, {"message", "identity checks failed"}, {"detail", summary}}.dump()
        << "\n";
    return 1;
  }
  return 0;
}

void validate(const JobConfig& job) {
  static const std::vector<std::string> commands{"roots", "weyl",     "poincare", "series", "correction",
                                                 "eval",  "classify", "verify",   "grid",   "check"};
  if (std::find(commands.begin(), commands.end(), job.command) == commands.end()) {
    throw UsageError("unknown command '" + job.command + "'");
  }
  if (job.format != "json" && job.format != "csv") throw UsageError("--format must be json or csv");
  if (job.form != "product" && job.form != "sum") throw UsageError("--form must be product or sum");
  if (job.height < 1) throw UsageError("--height must be positive");
  if (job.degree < 0) throw UsageError("--degree must be non-negative");
  if (job.max_length < 0) throw UsageError("--max-length must be non-negative");
  if (!(job.tol > 0.0)) throw UsageError("--tol must be positive");
  if (!(job.tail_target > 0.0)) throw UsageError("--tail-target must be positive");
  if (job.threads < 1) throw UsageError("--threads must be positive");
  if (job.points < 0 || job.max_word < 0) throw UsageError("counts must be non-negative");
}

}  // namespace

// ----------------------------------------------------------------- parsing

Complex parse_complex(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c != ' ') s.push_back(c);
  }
  if (s.empty()) throw UsageError("empty complex literal");
  if (s.back() != 'i' && s.back() != 'j') return {parse_double(s, "complex literal"), 0.0};
  s.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  const std::string re = split == std::string::npos ? std::string{} : s.substr(0, split);
  std::string im = split == std::string::npos ? s : s.substr(split);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {re.empty() ? 0.0 : parse_double(re, "complex literal"), parse_double(im, "complex literal")};
}

std::string format_complex(Complex c) {
  std::string s = num(c.real());
  const double im = c.imag();
  s += (std::signbit(im) ? "-" : "+") + num(std::abs(im)) + "i";
  return s;
}

GridAxis GridAxis::parse(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  GridAxis a;
  if (parts.size() == 1) {
    a.start = a.stop = parse_double(parts[0], "grid value");
    return a;
  }
  if (parts.size() != 3) throw UsageError("grid axis must be start:stop:count, got '" + std::string(text) + "'");
  a.start = parse_double(parts[0], "grid start");
  a.stop = parse_double(parts[1], "grid stop");
  a.count = parse_int(parts[2], "grid count");
  if (a.count < 1) throw UsageError("grid count must be positive");
  return a;
}

std::vector<double> GridAxis::values() const {
  std::vector<double> v;
  for (int k = 0; k < count; ++k) {
    v.push_back(count == 1 ? start : start + (stop - start) * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  return v;
}

std::string GridAxis::to_string() const { return num(start) + ":" + num(stop) + ":" + std::to_string(count); }

std::vector<int> parse_subset(std::string_view text) {
  std::string s = trim(text);
  if (!s.empty() && s.front() == '{') {
    if (s.back() != '}') throw UsageError("unbalanced subset '" + s + "'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<int> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    if (trim(cur).empty()) continue;
    const int v = parse_int(cur, "subset index");
    if (v < 1) throw UsageError("subset indices are 1-based");
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

nlohmann::json JobConfig::to_json() const {
  nlohmann::json j = {{"command", command},     {"gcm", gcm},
                      {"height", height},       {"degree", degree},
                      {"max_length", max_length}, {"tol", tol},
                      {"tail_target", tail_target}, {"format", format},
                      {"out", out},             {"coroot_height", coroot_height},
                      {"inverse", inverse},     {"form", form},
                      {"atlas", atlas},         {"max_word", max_word},
                      {"words", words},         {"pairings", pairings},
                      {"threads", threads},     {"seed", seed},
                      {"points", points}};
  auto opt_set = [](const std::optional<std::vector<int>>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["coset"] = opt_set(coset);
  j["check_macdonald"] = opt_set(check_macdonald);
  j["chart"] = opt_set(chart);
  j["t"] = t ? complex_json(*t) : nlohmann::json(nullptr);
  nlohmann::json zs = nlohmann::json::array();
  for (const auto& v : z) zs.push_back(complex_json(v));
  j["z"] = zs;
  auto axis = [](const GridAxis& a) { return nlohmann::json{{"start", a.start}, {"stop", a.stop}, {"count", a.count}}; };
  j["t_re"] = axis(t_re);
  j["t_im"] = axis(t_im);
  j["z_re"] = nlohmann::json::array();
  j["z_im"] = nlohmann::json::array();
  for (const auto& a : z_re) j["z_re"].push_back(axis(a));
  for (const auto& a : z_im) j["z_im"].push_back(axis(a));
  return j;
}

JobConfig JobConfig::from_json(const nlohmann::json& j) {
  try {
    JobConfig c;
    c.command = j.at("command").get<std::string>();
    c.gcm = j.at("gcm").get<std::string>();
    c.height = j.at("height").get<int>();
    c.degree = j.at("degree").get<int>();
    c.max_length = j.at("max_length").get<int>();
    c.tol = j.at("tol").get<double>();
    c.tail_target = j.at("tail_target").get<double>();
    c.format = j.at("format").get<std::string>();
    c.out = j.at("out").get<std::string>();
    c.coroot_height = j.at("coroot_height").get<bool>();
    c.inverse = j.at("inverse").get<bool>();
    c.form = j.at("form").get<std::string>();
    c.atlas = j.at("atlas").get<bool>();
    c.max_word = j.at("max_word").get<int>();
    c.words = j.at("words").get<std::vector<std::vector<int>>>();
    c.pairings = j.at("pairings").get<std::vector<double>>();
    c.threads = j.at("threads").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.points = j.at("points").get<int>();
    auto opt_set = [&](const char* key) -> std::optional<std::vector<int>> {
      if (j.at(key).is_null()) return std::nullopt;
      return j.at(key).get<std::vector<int>>();
    };
    c.coset = opt_set("coset");
    c.check_macdonald = opt_set("check_macdonald");
    c.chart = opt_set("chart");
    if (!j.at("t").is_null()) c.t = complex_from_json(j.at("t"));
    for (const auto& v : j.at("z")) c.z.push_back(complex_from_json(v));
    auto axis = [](const nlohmann::json& a) {
      return GridAxis{a.at("start").get<double>(), a.at("stop").get<double>(), a.at("count").get<int>()};
    };
    c.t_re = axis(j.at("t_re"));
    c.t_im = axis(j.at("t_im"));
    for (const auto& a : j.at("z_re")) c.z_re.push_back(axis(a));
    for (const auto& a : j.at("z_im")) c.z_im.push_back(axis(a));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed job config: ") + e.what());
  }
}

std::optional<JobConfig> parse_args(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Kac-Moody correction factor: root systems, Weyl groups, formal series and C(t, h)", "kmcf"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  struct Raw {
    std::string gcm, format = "json", out, t, form = "product", config;
    std::optional<std::string> coset, check_mac, chart;
    std::optional<int> height, degree, max_length;
    double tol = 1e-9, tail_target = 1e-8;
    bool coroot = false, inverse = false, atlas = false, print_config = false;
    std::vector<std::string> z, words;
    std::vector<double> p;
    std::string t_re = "0", t_im = "0";
    std::vector<std::string> z_re, z_im;
    int max_word = 3, threads = 0, points = 5;
    std::uint64_t seed = 1;
  } raw;

  auto common = [&](CLI::App* s) {
    s->add_option("--gcm", raw.gcm, "GCM file (JSON {\"matrix\": [[...]]}) or inline JSON matrix");
    s->add_option("--height", raw.height, "Height bound H");
    s->add_option("--degree", raw.degree, "t-degree bound D");
    s->add_option("--max-length", raw.max_length, "Weyl length bound L");
    s->add_option("--tol", raw.tol, "Facet tolerance on pairings")->capture_default_str();
    s->add_option("--tail-target", raw.tail_target, "Target for the reported tail estimate")->capture_default_str();
    s->add_option("--format", raw.format, "json or csv")->capture_default_str();
    s->add_option("--out", raw.out, "Write output to this file");
    s->add_option("--config", raw.config, "Load a canonical job config (other flags are ignored)");
    s->add_flag("--print-config", raw.print_config, "Print the resolved job config and exit");
  };
  auto point = [&](CLI::App* s) {
    s->add_option("--t", raw.t, "Complex t, e.g. 0.3 or 0.1+0.2i");
    s->add_option("--z", raw.z, "Coweight coordinates z_i, comma separated (a+bi)")->delimiter(',');
  };

  auto* roots = app.add_subcommand("roots", "Positive real roots as JSON lines {n, m, height}");
  common(roots);
  roots->add_flag("--coroot-height", raw.coroot, "Bound the coroot height instead of the root height");
  auto* weyl = app.add_subcommand("weyl", "Weyl group elements up to --max-length");
  common(weyl);
  weyl->add_option("--coset", raw.coset, "List minimal coset representatives W^X, e.g. {1}");
  auto* poin = app.add_subcommand("poincare", "Length counts of W (or W^X)");
  common(poin);
  poin->add_option("--coset", raw.coset, "Count minimal coset representatives W^X");
  auto* series = app.add_subcommand("series", "Truncated Weyl sum as JSON lines {mu, poly}");
  common(series);
  auto* corr = app.add_subcommand("correction", "Correction factor m (or m^-1) as JSON lines {mu, poly}");
  common(corr);
  corr->add_flag("--inverse", raw.inverse, "Emit m^-1 instead of m");
  corr->add_option("--check-macdonald", raw.check_mac, "Check the finite-type identity for X, e.g. {1,2}");
  auto* eval = app.add_subcommand("eval", "Evaluate C(t, h) or C_X(t, h)");
  common(eval);
  point(eval);
  eval->add_option("--chart", raw.chart, "Evaluate C_X for this X");
  eval->add_option("--form", raw.form, "product or sum")->capture_default_str();
  eval->add_flag("--atlas", raw.atlas, "Pick the chart from the facet and cross-check the others");
  auto* cls = app.add_subcommand("classify", "Reduce Im z into the dominant chamber");
  common(cls);
  point(cls);
  cls->add_option("--p", raw.p, "Pairings <y, a_i^vee>, comma separated")->delimiter(',');
  auto* verify = app.add_subcommand("verify", "Compare C_X at a point and at its images under words");
  common(verify);
  point(verify);
  verify->add_option("--chart", raw.chart, "X (default empty)");
  verify->add_option("--word", raw.words, "A word as comma separated 1-based letters; repeatable");
  verify->add_option("--max-word", raw.max_word, "Use every word up to this length")->capture_default_str();
  auto* grid = app.add_subcommand("grid", "Evaluate over a grid; CSV t_re,t_im,z...,C_re,C_im,tail_bound,chart_X");
  common(grid);
  grid->add_option("--t-re", raw.t_re, "Axis start:stop:count")->capture_default_str();
  grid->add_option("--t-im", raw.t_im, "Axis start:stop:count")->capture_default_str();
  grid->add_option("--z-re", raw.z_re, "One axis per coordinate, comma separated")->delimiter(',');
  grid->add_option("--z-im", raw.z_im, "One axis per coordinate, comma separated")->delimiter(',');
  grid->add_option("--threads", raw.threads, "Worker threads (default: hardware concurrency)");
  auto* check = app.add_subcommand("check", "Run the identity suite");
  common(check);
  check->add_option("--seed", raw.seed, "Seed for the random test points")->capture_default_str();
  check->add_option("--points", raw.points, "Random points per analytic check")->capture_default_str();
  check->add_option("--max-word", raw.max_word, "Word length for the invariance check")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (!raw.config.empty()) {
    std::ifstream in(raw.config);
    if (!in) throw UsageError("cannot open config '" + raw.config + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    JobConfig c = JobConfig::from_json(j);
    if (c.command != sub->get_name()) throw UsageError("config is for '" + c.command + "'");
    validate(c);
    return c;
  }

  JobConfig c;
  c.command = sub->get_name();
  c.gcm = raw.gcm;
  const bool formal = c.command == "series" || c.command == "correction" || c.command == "check";
  const bool analytic = c.command == "eval" || c.command == "verify" || c.command == "grid";
  int h_default = 10;
  if (formal) h_default = 8;
  if (analytic) h_default = 40;
  c.height = raw.height.value_or(h_default);
  c.degree = raw.degree.value_or(8);
  if (c.command == "series" || c.command == "correction") {
    c.max_length = raw.max_length.value_or(c.height + c.degree);
  } else if (analytic || c.command == "check") {
    c.max_length = raw.max_length.value_or(20);
  } else {
    c.max_length = raw.max_length.value_or(10);
  }
  c.tol = raw.tol;
  c.tail_target = raw.tail_target;
  c.format = raw.format;
  c.out = raw.out;
  c.coroot_height = raw.coroot;
  if (raw.coset) c.coset = parse_subset(*raw.coset);
  if (raw.check_mac) c.check_macdonald = parse_subset(*raw.check_mac);
  c.inverse = raw.inverse;
  if (!raw.t.empty()) c.t = parse_complex(raw.t);
  for (const auto& s : raw.z) c.z.push_back(parse_complex(s));
  c.pairings = raw.p;
  if (raw.chart) c.chart = parse_subset(*raw.chart);
  c.form = raw.form;
  c.atlas = raw.atlas;
  c.max_word = raw.max_word;
  for (const auto& w : raw.words) {
    std::vector<int> word;
    std::istringstream in(w);
    std::string letter;
    while (std::getline(in, letter, ',')) {
      if (trim(letter).empty()) continue;
      const int v = parse_int(letter, "word letter");
      if (v < 1) throw UsageError("word letters are 1-based");
      word.push_back(v);
    }
    c.words.push_back(std::move(word));
  }
  c.t_re = GridAxis::parse(raw.t_re);
  c.t_im = GridAxis::parse(raw.t_im);
  for (const auto& s : raw.z_re) c.z_re.push_back(GridAxis::parse(s));
  for (const auto& s : raw.z_im) c.z_im.push_back(GridAxis::parse(s));
  c.threads = raw.threads > 0 ? raw.threads : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  c.seed = raw.seed;
  c.points = raw.points;
  validate(c);
  if (raw.print_config) {
    out << c.to_json().dump() << "\n";
    return std::nullopt;
  }
  return c;
}

int run(const JobConfig& job, std::ostream& out, std::ostream& err) {
  try {
    validate(job);
    std::ofstream file;
    std::ostream* sink = &out;
    if (!job.out.empty()) {
      file.open(job.out);
      if (!file) throw UsageError("cannot open output file '" + job.out + "'");
      sink = &file;
    }
    const Gcm g = load_source(job.gcm);
    const std::string& c = job.command;
    if (c == "roots") return cmd_roots(job, g, *sink);
    if (c == "weyl") return cmd_weyl(job, g, *sink);
    if (c == "poincare") return cmd_poincare(job, g, *sink);
    if (c == "series") return cmd_series(job, g, *sink);
    if (c == "correction") return cmd_correction(job, g, *sink, err);
    if (c == "eval") return cmd_eval(job, g, *sink);
    if (c == "classify") return cmd_classify(job, g, *sink);
    if (c == "verify") return cmd_verify(job, g, *sink);
    if (c == "grid") return cmd_grid(job, g, *sink, err);
    return cmd_check(job, g, *sink, err);
  } catch (const UsageError& e) {
    err << nlohmann::json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    err << e.to_json().dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<JobConfig> job;
  try {
    job = parse_args(argc, argv, out);
  } catch (const UsageError& e) {
    err << nlohmann::json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const Error& e) {
    err << nlohmann::json{{"error", "UsageError"}, {"message", e.what()}, {"detail", e.to_json()}}.dump() << "\n";
    return 2;
  }
  if (!job) return 0;
  return run(*job, out, err);
}

}  // namespace kmcf::cli
