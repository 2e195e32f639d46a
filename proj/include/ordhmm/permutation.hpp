#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ordhmm/error.hpp"

namespace ordhmm {

// A bijection on {0..K-1}. I/O uses 1-based images; in-process indices are
// 0-based throughout the library.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<int> images) : images_(std::move(images)) {
    std::vector<char> hit(images_.size(), 0);
    for (int v : images_) {
      if (v < 0 || v >= size() || hit[v])
        throw DimensionMismatch("permutation images must be a bijection on 0..K-1");
      hit[v] = 1;
    }
  }

  static Permutation identity(int k) {
    std::vector<int> v(k);
    std::iota(v.begin(), v.end(), 0);
    return Permutation(std::move(v));
  }

  static Permutation from_one_based(std::span<const int> images) {
    std::vector<int> v(images.begin(), images.end());
    for (int& x : v) --x;
    return Permutation(std::move(v));
  }

  [[nodiscard]] int size() const { return static_cast<int>(images_.size()); }
  [[nodiscard]] int operator()(int i) const { return images_[i]; }
  [[nodiscard]] const std::vector<int>& images() const { return images_; }

  [[nodiscard]] std::vector<int> one_based() const {
    std::vector<int> v = images_;
    for (int& x : v) ++x;
    return v;
  }

  [[nodiscard]] Permutation inverse() const {
    std::vector<int> inv(images_.size());
    for (int i = 0; i < size(); ++i) inv[images_[i]] = i;
    return Permutation(std::move(inv));
  }

  // a.compose(b)(i) = a(b(i)).
  [[nodiscard]] Permutation compose(const Permutation& inner) const {
    if (inner.size() != size()) throw DimensionMismatch("compose: size mismatch");
    std::vector<int> v(images_.size());
    for (int i = 0; i < size(); ++i) v[i] = images_[inner(i)];
    return Permutation(std::move(v));
  }

  [[nodiscard]] bool is_identity() const {
    for (int i = 0; i < size(); ++i)
      if (images_[i] != i) return false;
    return true;
  }

  [[nodiscard]] std::string to_string() const {
    std::string s = "(";
    for (int i = 0; i < size(); ++i) {
      if (i) s += ",";
      s += std::to_string(images_[i] + 1);
    }
    return s + ")";
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> images_;
};

// All K! permutations in lexicographic order of their images.
inline std::vector<Permutation> all_permutations(int k) {
  std::vector<int> v(k);
  std::iota(v.begin(), v.end(), 0);
  std::vector<Permutation> out;
  do {
    out.emplace_back(v);
  } while (std::next_permutation(v.begin(), v.end()));
  return out;
}

}  // namespace ordhmm
