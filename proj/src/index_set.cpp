#include "kmcf/index_set.hpp"

#include "kmcf/error.hpp"

namespace kmcf {

IndexSet IndexSet::from_one_based(const std::vector<int>& indices) {
  IndexSet s;
  for (int i : indices) {
    if (i < 1 || i > kMaxRank) {
      throw Error(ErrorKind::IndexOutOfRange, "subset index " + std::to_string(i), {{"index", i}});
    }
    s.insert(i - 1);
  }
  return s;
}

std::vector<int> IndexSet::to_vector() const {
  std::vector<int> out;
  for (int i = 0; i < kMaxRank; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

std::vector<int> IndexSet::to_one_based() const {
  auto out = to_vector();
  for (int& i : out) ++i;
  return out;
}

std::string IndexSet::to_string() const {
  std::string s = "{";
  bool first = true;
  for (int i : to_one_based()) {
    if (!first) s += ",";
    s += std::to_string(i);
    first = false;
  }
  return s + "}";
}

}  // namespace kmcf
