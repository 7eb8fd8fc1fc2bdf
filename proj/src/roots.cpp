#include "kmcf/roots.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "kmcf/error.hpp"

namespace kmcf {

IndexSet RootEntry::support() const {
  IndexSet s;
  for (std::size_t i = 0; i < root.size(); ++i) {
    if (root[i] != 0) s.insert(static_cast<int>(i));
  }
  return s;
}

Coords reflect_root(const Gcm& gcm, int i, const Coords& root) {
  std::int64_t p = 0;  // <b, a_i^vee> = (A n)_i
  for (int j = 0; j < gcm.rank(); ++j) p += gcm(i, j) * root[static_cast<std::size_t>(j)];
  Coords out = root;
  out[static_cast<std::size_t>(i)] -= p;
  return out;
}

Coords reflect_coroot(const Gcm& gcm, int i, const Coords& coroot) {
  std::int64_t p = 0;  // <a_i, b^vee> = (A^T m)_i
  for (int j = 0; j < gcm.rank(); ++j) p += gcm(j, i) * coroot[static_cast<std::size_t>(j)];
  Coords out = coroot;
  out[static_cast<std::size_t>(i)] -= p;
  return out;
}

std::int64_t self_pairing(const Gcm& gcm, const RootEntry& e) {
  std::int64_t s = 0;
  for (int i = 0; i < gcm.rank(); ++i) {
    std::int64_t an = 0;
    for (int j = 0; j < gcm.rank(); ++j) an += gcm(i, j) * e.root[static_cast<std::size_t>(j)];
    s += e.coroot[static_cast<std::size_t>(i)] * an;
  }
  return s;
}

std::complex<double> pairing(const RootEntry& entry, std::span<const std::complex<double>> z) {
  if (z.size() != entry.coroot.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "point has " + std::to_string(z.size()) + " coordinates, rank is " + std::to_string(entry.coroot.size()),
                {{"expected", entry.coroot.size()}, {"got", z.size()}});
  }
  std::complex<double> s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += static_cast<double>(entry.coroot[i]) * z[i];
  return s;
}

std::optional<std::size_t> RootTable::find(const Coords& root) const {
  auto it = by_root_.find(root);
  if (it == by_root_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> RootTable::find_coroot(const Coords& coroot) const {
  auto it = by_coroot_.find(coroot);
  if (it == by_coroot_.end()) return std::nullopt;
  return it->second;
}

bool RootTable::covers_coroot_height(std::int64_t h) const {
  if (kind_ == HeightKind::Coroot) return bound_ >= h;
  return bound_ >= h && gcm_ == dual(gcm_);
}

RootTable enumerate_roots(const Gcm& gcm, std::int64_t height, RootOptions options) {
  if (height < 1) {
    throw Error(ErrorKind::DomainError, "height bound must be >= 1", {{"height", height}});
  }
  const int l = gcm.rank();
  const IndexSet gens = options.generators.value_or(IndexSet::all(l));
  if (!gens.subset_of(IndexSet::all(l))) {
    throw Error(ErrorKind::IndexOutOfRange, "generator subset " + gens.to_string() + " exceeds rank");
  }
  RootTable table(gcm, height, options.bound, gens);

  struct Pending {
    Coords root, coroot;
  };
  auto measure = [&](const Coords& v) { return std::accumulate(v.begin(), v.end(), std::int64_t{0}); };
  auto within = [&](const Pending& p) {
    return (options.bound == HeightKind::Root ? measure(p.root) : measure(p.coroot)) <= height;
  };

  std::map<Coords, Coords> seen;  // root -> coroot
  std::deque<Pending> work;
  for (int i : gens.to_vector()) {
    Coords e(static_cast<std::size_t>(l), 0);
    e[static_cast<std::size_t>(i)] = 1;
    seen.emplace(e, e);
    work.push_back({e, e});
  }
  while (!work.empty()) {
    Pending cur;
    if (options.traversal == Traversal::Fifo) {
      cur = std::move(work.front());
      work.pop_front();
    } else {
      cur = std::move(work.back());
      work.pop_back();
    }
    for (int i : gens.to_vector()) {
      Pending next{reflect_root(gcm, i, cur.root), reflect_coroot(gcm, i, cur.coroot)};
      // s_i permutes the positive roots other than a_i, so negativity only
      // happens for b = a_i.
      if (std::any_of(next.root.begin(), next.root.end(), [](std::int64_t c) { return c < 0; })) continue;
      if (!within(next) || seen.count(next.root) != 0) continue;
      if (seen.size() >= options.max_entries) {
        throw Error(ErrorKind::CapacityExceeded,
                    "root table exceeds " + std::to_string(options.max_entries) + " entries",
                    {{"cap", options.max_entries}, {"height", height}});
      }
      seen.emplace(next.root, next.coroot);
      work.push_back(std::move(next));
    }
  }

  std::vector<std::pair<Coords, Coords>> sorted(seen.begin(), seen.end());
  std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
    const auto ha = measure(a.first), hb = measure(b.first);
    if (ha != hb) return ha < hb;
    return a.first > b.first;
  });
  table.entries_.reserve(sorted.size());
  for (auto& [root, coroot] : sorted) {
    RootEntry e;
    e.height = measure(root);
    e.coroot_height = measure(coroot);
    e.index = table.entries_.size();
    e.root = std::move(root);
    e.coroot = std::move(coroot);
    table.by_root_.emplace(e.root, e.index);
    table.by_coroot_.emplace(e.coroot, e.index);
    table.entries_.push_back(std::move(e));
  }
  return table;
}

CompletionCount count_parabolic_completions(const Gcm& gcm, IndexSet x, std::span<const std::int64_t> p,
                                            std::int64_t height) {
  if (!x.subset_of(IndexSet::all(gcm.rank()))) {
    throw Error(ErrorKind::IndexOutOfRange, "subset " + x.to_string() + " exceeds rank");
  }
  if (!is_w_finite(gcm, x)) {
    throw Error(ErrorKind::NotWFinite, "subset " + x.to_string() + " is not W-finite", {{"subset", x.to_one_based()}});
  }
  const auto rest = x.complement(gcm.rank()).to_vector();
  if (p.size() != rest.size()) {
    throw Error(ErrorKind::DimensionMismatch, "expected one coefficient per index outside X",
                {{"expected", rest.size()}, {"got", p.size()}});
  }
  auto count_at = [&](std::int64_t h) {
    const RootTable t = enumerate_roots(gcm, h);
    std::size_t c = 0;
    for (const auto& e : t) {
      bool match = true;
      for (std::size_t k = 0; k < rest.size() && match; ++k) {
        match = e.root[static_cast<std::size_t>(rest[k])] == p[k];
      }
      if (match) ++c;
    }
    return c;
  };
  CompletionCount out;
  out.count = count_at(height);
  out.saturated = count_at(2 * height) == out.count;
  return out;
}

}  // namespace kmcf
