#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "kmcf/cartan.hpp"

namespace kmcf::test {

inline Gcm a1() { return validate_gcm({{2}}, "A1"); }
inline Gcm a2() { return validate_gcm({{2, -1}, {-1, 2}}, "A2"); }
inline Gcm b2() { return validate_gcm({{2, -1}, {-2, 2}}, "B2"); }
inline Gcm g2() { return validate_gcm({{2, -1}, {-3, 2}}, "G2"); }
inline Gcm a3() { return validate_gcm({{2, -1, 0}, {-1, 2, -1}, {0, -1, 2}}, "A3"); }
inline Gcm affine_a1() { return validate_gcm({{2, -2}, {-2, 2}}, "A1^(1)"); }
inline Gcm affine_a2() { return validate_gcm({{2, -1, -1}, {-1, 2, -1}, {-1, -1, 2}}, "A2^(1)"); }
inline Gcm affine_a2_twisted() { return validate_gcm({{2, -4}, {-1, 2}}, "A2^(2)"); }
inline Gcm hyperbolic2() { return validate_gcm({{2, -3}, {-3, 2}}, "H(3,3)"); }
/// Rank-3 hyperbolic: affine A1 with an extra node attached.
inline Gcm hyperbolic3() { return validate_gcm({{2, -2, 0}, {-2, 2, -1}, {0, -1, 2}}, "H3"); }

inline std::vector<Gcm> rank_le3_corpus() {
  return {a1(), a2(), b2(), g2(), a3(), affine_a1(), affine_a2(), affine_a2_twisted(), hyperbolic2(), hyperbolic3(),
          validate_gcm({{2, -1, 0}, {-2, 2, -1}, {0, -1, 2}}, "B3-like"),
          validate_gcm({{2, -1, 0}, {-1, 2, -2}, {0, -1, 2}}, "C3-like"),
          validate_gcm({{2, 0, -1}, {0, 2, -1}, {-1, -1, 2}}, "A3-perm"),
          validate_gcm({{2, -1, -1}, {-1, 2, -2}, {-1, -1, 2}}, "indef3")};
}

/// Size of W_X by BFS over matrices acting on root coordinates; -1 when it
/// exceeds `cap`. Independent of the coroot-matrix machinery in weyl.cpp.
inline long brute_weyl_size(const Gcm& gcm, IndexSet x, long cap = 10000) {
  const int l = gcm.rank();
  using Mat = std::vector<std::int64_t>;
  auto gen = [&](int i) {
    Mat m(static_cast<std::size_t>(l * l), 0);
    for (int r = 0; r < l; ++r) m[static_cast<std::size_t>(r * l + r)] = 1;
    // s_i(a_j) = a_j - <a_j, a_i^vee> a_i = a_j - A(i, j) a_i  (column j)
    for (int j = 0; j < l; ++j) m[static_cast<std::size_t>(i * l + j)] -= gcm(i, j);
    return m;
  };
  auto mul = [&](const Mat& a, const Mat& b) {
    Mat c(a.size(), 0);
    for (int i = 0; i < l; ++i)
      for (int k = 0; k < l; ++k)
        for (int j = 0; j < l; ++j)
          c[static_cast<std::size_t>(i * l + j)] += a[static_cast<std::size_t>(i * l + k)] * b[static_cast<std::size_t>(k * l + j)];
    return c;
  };
  Mat id(static_cast<std::size_t>(l * l), 0);
  for (int r = 0; r < l; ++r) id[static_cast<std::size_t>(r * l + r)] = 1;
  std::set<Mat> seen{id};
  std::vector<Mat> frontier{id};
  while (!frontier.empty()) {
    std::vector<Mat> next;
    for (const auto& m : frontier) {
      for (int i : x.to_vector()) {
        Mat n = mul(gen(i), m);
        if (seen.insert(n).second) {
          if (static_cast<long>(seen.size()) > cap) return -1;
          next.push_back(std::move(n));
        }
      }
    }
    frontier = std::move(next);
  }
  return static_cast<long>(seen.size());
}

}  // namespace kmcf::test
