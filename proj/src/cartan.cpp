#include "kmcf/cartan.hpp"

#include <algorithm>
#include <fstream>

#include "kmcf/error.hpp"

namespace kmcf {

namespace {

void check_subset(const Gcm& gcm, IndexSet x) {
  if (!x.subset_of(IndexSet::all(gcm.rank()))) {
    throw Error(ErrorKind::IndexOutOfRange, "subset " + x.to_string() + " exceeds rank " + std::to_string(gcm.rank()),
                {{"subset", x.to_one_based()}, {"rank", gcm.rank()}});
  }
}

// Fraction-free Gaussian elimination; exact for integer input.
std::int64_t bareiss_determinant(std::vector<std::vector<__int128>> m) {
  const std::size_t n = m.size();
  if (n == 0) return 1;
  __int128 sign = 1;
  __int128 prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t swap = k + 1;
      while (swap < n && m[swap][k] == 0) ++swap;
      if (swap == n) return 0;
      std::swap(m[k], m[swap]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
      }
    }
    prev = m[k][k];
  }
  return static_cast<std::int64_t>(sign * m[n - 1][n - 1]);
}

}  // namespace

std::vector<std::vector<int>> Gcm::rows() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(rank_));
  for (int i = 0; i < rank_; ++i) {
    for (int j = 0; j < rank_; ++j) out[static_cast<std::size_t>(i)].push_back((*this)(i, j));
  }
  return out;
}

Gcm Gcm::restrict_to(IndexSet x) const {
  check_subset(*this, x);
  const auto idx = x.to_vector();
  std::vector<int> e;
  for (int i : idx) {
    for (int j : idx) e.push_back((*this)(i, j));
  }
  return Gcm(static_cast<int>(idx.size()), std::move(e), label_ + x.to_string());
}

nlohmann::json Gcm::to_json() const { return {{"label", label_}, {"matrix", rows()}}; }

Gcm validate_gcm(const std::vector<std::vector<int>>& raw, std::string label) {
  const int l = static_cast<int>(raw.size());
  if (l == 0) throw Error(ErrorKind::NonSquare, "matrix is empty", {{"rows", 0}});
  if (l > IndexSet::kMaxRank) {
    throw Error(ErrorKind::CapacityExceeded, "rank exceeds " + std::to_string(IndexSet::kMaxRank), {{"rows", l}});
  }
  for (int i = 0; i < l; ++i) {
    if (static_cast<int>(raw[static_cast<std::size_t>(i)].size()) != l) {
      throw Error(ErrorKind::NonSquare, "row " + std::to_string(i + 1) + " has wrong length",
                  {{"row", i + 1}, {"length", raw[static_cast<std::size_t>(i)].size()}, {"expected", l}});
    }
  }
  auto at = [&](int i, int j) { return raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; };
  auto violation = [](const char* axiom, int i, int j, const std::string& why) {
    return Error(ErrorKind::AxiomViolation, std::string(axiom) + " at (" + std::to_string(i + 1) + "," +
                                                std::to_string(j + 1) + "): " + why,
                 {{"axiom", axiom}, {"row", i + 1}, {"column", j + 1}});
  };
  for (int i = 0; i < l; ++i) {
    if (at(i, i) != 2) throw violation("R1", i, i, "diagonal entry must be 2");
  }
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      if (i != j && at(i, j) > 0) throw violation("R2", i, j, "off-diagonal entry must be non-positive");
    }
  }
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      if (i != j && at(i, j) == 0 && at(j, i) != 0) throw violation("R3", i, j, "zero pattern must be symmetric");
    }
  }
  std::vector<int> e;
  e.reserve(static_cast<std::size_t>(l * l));
  for (const auto& row : raw) e.insert(e.end(), row.begin(), row.end());
  return Gcm(l, std::move(e), std::move(label));
}

Gcm dual(const Gcm& gcm) {
  auto r = gcm.rows();
  std::vector<std::vector<int>> t(r.size(), std::vector<int>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) t[j][i] = r[i][j];
  }
  return validate_gcm(t, gcm.label().empty() ? std::string{} : gcm.label() + "^vee");
}

Gcm gcm_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("matrix") || !j["matrix"].is_array()) {
    throw Error(ErrorKind::ParseError, "GCM JSON must be an object with a \"matrix\" array");
  }
  std::vector<std::vector<int>> raw;
  int r = 0;
  for (const auto& row : j["matrix"]) {
    ++r;
    if (!row.is_array()) throw Error(ErrorKind::ParseError, "matrix row " + std::to_string(r) + " is not an array");
    std::vector<int> vals;
    int c = 0;
    for (const auto& v : row) {
      ++c;
      if (!v.is_number_integer()) {
        throw Error(ErrorKind::ParseError,
                    "matrix entry (" + std::to_string(r) + "," + std::to_string(c) + ") is not an integer",
                    {{"row", r}, {"column", c}});
      }
      vals.push_back(v.get<int>());
    }
    raw.push_back(std::move(vals));
  }
  std::string label = j.contains("label") && j["label"].is_string() ? j["label"].get<std::string>() : std::string{};
  return validate_gcm(raw, std::move(label));
}

Gcm load_gcm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string(), {{"path", path.string()}});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what(), {{"path", path.string()}});
  }
  return gcm_from_json(j);
}

std::int64_t principal_minor(const Gcm& gcm, IndexSet x) {
  check_subset(gcm, x);
  const auto idx = x.to_vector();
  std::vector<std::vector<__int128>> m;
  for (int i : idx) {
    std::vector<__int128> row;
    for (int j : idx) row.push_back(gcm(i, j));
    m.push_back(std::move(row));
  }
  return bareiss_determinant(std::move(m));
}

bool is_w_finite(const Gcm& gcm, IndexSet x) {
  check_subset(gcm, x);
  // Enumerate every non-empty sub-subset of x.
  const std::uint64_t full = x.bits();
  for (std::uint64_t s = full; s != 0; s = (s - 1) & full) {
    if (principal_minor(gcm, IndexSet(s)) <= 0) return false;
  }
  return true;
}

ParabolicSubset::ParabolicSubset(const Gcm& gcm, IndexSet x)
    : parent_(&gcm), subset_(x), finite_(is_w_finite(gcm, x)) {}

std::vector<IndexSet> w_finite_subsets(const Gcm& gcm) {
  std::vector<IndexSet> out;
  const std::uint64_t full = IndexSet::all(gcm.rank()).bits();
  for (std::uint64_t s = 0; s <= full; ++s) {
    if (is_w_finite(gcm, IndexSet(s))) out.emplace_back(s);
    if (s == full) break;
  }
  std::stable_sort(out.begin(), out.end(), [](IndexSet a, IndexSet b) { return a.size() < b.size(); });
  return out;
}

}  // namespace kmcf
