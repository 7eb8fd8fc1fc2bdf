#include "kmcf/weyl.hpp"

#include <cmath>
#include <limits>

#include "kmcf/error.hpp"

namespace kmcf {

ActionMatrix ActionMatrix::identity(int rank) {
  ActionMatrix m;
  m.rank_ = rank;
  m.a_.assign(static_cast<std::size_t>(rank * rank), 0);
  for (int i = 0; i < rank; ++i) m.a_[static_cast<std::size_t>(i * rank + i)] = 1;
  return m;
}

ActionMatrix ActionMatrix::reflection(const Gcm& gcm, int i) {
  ActionMatrix m = identity(gcm.rank());
  for (int j = 0; j < gcm.rank(); ++j) m.a_[static_cast<std::size_t>(i * m.rank_ + j)] -= gcm(j, i);
  return m;
}

ActionMatrix ActionMatrix::operator*(const ActionMatrix& rhs) const {
  ActionMatrix out;
  out.rank_ = rank_;
  out.a_.assign(a_.size(), 0);
  for (int i = 0; i < rank_; ++i) {
    for (int k = 0; k < rank_; ++k) {
      const BigInt& aik = (*this)(i, k);
      if (aik == 0) continue;
      for (int j = 0; j < rank_; ++j) out.a_[static_cast<std::size_t>(i * rank_ + j)] += aik * rhs(k, j);
    }
  }
  return out;
}

std::vector<BigInt> ActionMatrix::apply(const Coords& v) const {
  std::vector<BigInt> out(static_cast<std::size_t>(rank_), 0);
  for (int i = 0; i < rank_; ++i) {
    for (int j = 0; j < rank_; ++j) out[static_cast<std::size_t>(i)] += (*this)(i, j) * v[static_cast<std::size_t>(j)];
  }
  return out;
}

std::vector<double> ActionMatrix::apply(std::span<const double> v) const {
  std::vector<double> out(static_cast<std::size_t>(rank_), 0.0);
  for (int i = 0; i < rank_; ++i) {
    for (int j = 0; j < rank_; ++j) {
      out[static_cast<std::size_t>(i)] += (*this)(i, j).convert_to<double>() * v[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

std::vector<std::complex<double>> ActionMatrix::pull_back(std::span<const std::complex<double>> z) const {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(rank_), 0.0);
  for (int j = 0; j < rank_; ++j) {
    for (int i = 0; i < rank_; ++i) {
      out[static_cast<std::size_t>(j)] += (*this)(i, j).convert_to<double>() * z[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

int ActionMatrix::column_sign(int i) const {
  for (int r = 0; r < rank_; ++r) {
    const BigInt& v = (*this)(r, i);
    if (v > 0) return 1;
    if (v < 0) return -1;
  }
  return 0;
}

IndexSet WeylElement::support() const {
  IndexSet s;
  for (int i : word) s.insert(i);
  return s;
}

std::span<const WeylElement> WeylTable::shell(int k) const {
  if (k < 0 || static_cast<std::size_t>(k) + 1 >= shell_start_.size()) return {};
  const auto b = shell_start_[static_cast<std::size_t>(k)];
  const auto e = shell_start_[static_cast<std::size_t>(k) + 1];
  return std::span<const WeylElement>(elements_.data() + b, e - b);
}

std::optional<std::size_t> WeylTable::find(const ActionMatrix& m) const {
  auto it = by_matrix_.find(m);
  if (it == by_matrix_.end()) return std::nullopt;
  return it->second;
}

namespace {

IndexSet right_descents_of(const ActionMatrix& m, IndexSet gens) {
  IndexSet d;
  for (int i : gens.to_vector()) {
    if (m.column_sign(i) < 0) d.insert(i);
  }
  return d;
}

}  // namespace

WeylTable enumerate_weyl_impl(const Gcm& gcm, int length, const RootTable* roots, const WeylOptions& options) {
  if (length < 0) throw Error(ErrorKind::DomainError, "length bound must be >= 0", {{"length", length}});
  const int l = gcm.rank();
  const IndexSet gens = options.generators.value_or(IndexSet::all(l));
  if (!gens.subset_of(IndexSet::all(l))) {
    throw Error(ErrorKind::IndexOutOfRange, "generator subset " + gens.to_string() + " exceeds rank");
  }
  std::vector<int> order = options.generator_order.empty() ? gens.to_vector() : options.generator_order;
  for (int i : order) {
    if (i < 0 || i >= l || !gens.contains(i)) {
      throw Error(ErrorKind::IndexOutOfRange, "generator order entry " + std::to_string(i + 1) + " not a generator");
    }
  }

  std::vector<ActionMatrix> gen_matrix;
  std::vector<std::optional<std::size_t>> simple_root_index(static_cast<std::size_t>(l));
  for (int i = 0; i < l; ++i) {
    gen_matrix.push_back(ActionMatrix::reflection(gcm, i));
    if (roots != nullptr) {
      Coords e(static_cast<std::size_t>(l), 0);
      e[static_cast<std::size_t>(i)] = 1;
      simple_root_index[static_cast<std::size_t>(i)] = roots->find(e);
    }
  }

  WeylTable table(gcm, length, gens);
  table.has_inversions_ = roots != nullptr;
  WeylElement e;
  e.action = ActionMatrix::identity(l);
  table.by_matrix_.emplace(e.action, 0);
  table.elements_.push_back(std::move(e));
  table.shell_start_ = {0, 1};
  if (gens.empty()) table.closed_ = true;

  auto too_shallow = [&](const WeylElement& parent, int i) {
    return Error(ErrorKind::RootTableTooShallow,
                 "inversion root beyond root table height " + std::to_string(roots->height_bound()),
                 {{"length", parent.length + 1}, {"generator", i + 1}, {"table_height", roots->height_bound()}});
  };

  for (int k = 1; k <= length && !table.closed_; ++k) {
    const std::size_t prev_begin = table.shell_start_[static_cast<std::size_t>(k - 1)];
    const std::size_t prev_end = table.shell_start_[static_cast<std::size_t>(k)];
    for (std::size_t p = prev_begin; p < prev_end; ++p) {
      for (int i : order) {
        ActionMatrix m = gen_matrix[static_cast<std::size_t>(i)] * table.elements_[p].action;
        if (table.by_matrix_.count(m) != 0) continue;
        if (table.elements_.size() >= options.max_elements) {
          throw Error(ErrorKind::CapacityExceeded,
                      "Weyl table exceeds " + std::to_string(options.max_elements) + " elements",
                      {{"cap", options.max_elements}, {"length", k}});
        }
        const WeylElement& parent = table.elements_[p];
        WeylElement w;
        w.word.reserve(parent.word.size() + 1);
        w.word.push_back(i);
        w.word.insert(w.word.end(), parent.word.begin(), parent.word.end());
        w.length = k;
        if (roots != nullptr) {
          const auto simple = simple_root_index[static_cast<std::size_t>(i)];
          if (!simple) throw too_shallow(parent, i);
          w.inversions.reserve(parent.inversions.size() + 1);
          w.inversions.push_back(*simple);
          for (std::size_t idx : parent.inversions) {
            auto img = roots->find(reflect_root(gcm, i, (*roots)[idx].root));
            if (!img) throw too_shallow(parent, i);
            w.inversions.push_back(*img);
          }
        }
        w.right_descents = right_descents_of(m, gens);
        w.index = table.elements_.size();
        w.action = std::move(m);
        table.by_matrix_.emplace(w.action, w.index);
        if (w.right_descents == gens) table.closed_ = true;  // longest element
        table.elements_.push_back(std::move(w));
      }
    }
    if (table.elements_.size() == prev_end) table.closed_ = true;
    table.shell_start_.push_back(table.elements_.size());
  }
  return table;
}

WeylTable enumerate_weyl(const Gcm& gcm, int length, const RootTable& roots, WeylOptions options) {
  return enumerate_weyl_impl(gcm, length, &roots, options);
}

WeylTable enumerate_weyl(const Gcm& gcm, int length, WeylOptions options) {
  return enumerate_weyl_impl(gcm, length, nullptr, options);
}

std::pair<RootTable, WeylTable> enumerate_with_roots(const Gcm& gcm, int length, std::int64_t min_height,
                                                     WeylOptions options) {
  std::int64_t h = std::max<std::int64_t>(min_height, 1);
  for (int attempt = 0; attempt < 40; ++attempt) {
    RootTable roots = enumerate_roots(gcm, h, {.bound = HeightKind::Coroot});
    try {
      WeylTable w = enumerate_weyl(gcm, length, roots, options);
      return {std::move(roots), std::move(w)};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RootTableTooShallow) throw;
    }
    h *= 2;
  }
  throw Error(ErrorKind::RootTableTooShallow, "could not size a root table for length " + std::to_string(length),
              {{"length", length}, {"height", h}});
}

PoincareSeries poincare(const WeylTable& table, std::optional<IndexSet> x) {
  PoincareSeries out;
  if (!x) {
    for (int k = 0; k <= table.length_bound(); ++k) out.coefficients.push_back(table.shell(k).size());
    out.exact = table.closed();
  } else {
    if (!x->subset_of(table.generators())) {
      throw Error(ErrorKind::IndexOutOfRange, "subset " + x->to_string() + " is not generated by the table");
    }
    out.coefficients.assign(static_cast<std::size_t>(table.length_bound()) + 1, 0);
    bool longest_found = x->empty();
    for (const auto& w : table) {
      if (!w.support().subset_of(*x)) continue;
      ++out.coefficients[static_cast<std::size_t>(w.length)];
      if ((w.right_descents & *x) == *x) longest_found = true;
    }
    if (is_w_finite(table.gcm(), *x)) {
      if (!longest_found) {
        throw Error(ErrorKind::LengthBoundTooSmall,
                    "W_X for X=" + x->to_string() + " did not close within length " +
                        std::to_string(table.length_bound()),
                    {{"subset", x->to_one_based()}, {"length", table.length_bound()}});
      }
      out.exact = true;
    }
  }
  if (out.exact) {
    while (out.coefficients.size() > 1 && out.coefficients.back() == 0) out.coefficients.pop_back();
  }
  return out;
}

std::vector<const WeylElement*> minimal_coset_reps(const WeylTable& table, IndexSet x) {
  std::vector<const WeylElement*> out;
  for (const auto& w : table) {
    if ((w.right_descents & x).empty()) out.push_back(&w);
  }
  return out;
}

double estimate_radius(const PoincareSeries& series) {
  const auto& c = series.coefficients;
  if (series.exact) return std::numeric_limits<double>::infinity();
  if (c.size() < 8) {
    throw Error(ErrorKind::InsufficientData, "radius estimate needs at least 8 coefficients",
                {{"coefficients", c.size()}});
  }
  if (c.back() == 0) return std::numeric_limits<double>::infinity();
  const std::size_t n = c.size();
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t k = std::max<std::size_t>(1, n / 2); k < n; ++k) {
    if (c[k] == 0) continue;
    acc += std::log(static_cast<double>(c[k])) / static_cast<double>(k);
    ++used;
  }
  return 1.0 / std::exp(acc / static_cast<double>(used));
}

}  // namespace kmcf
