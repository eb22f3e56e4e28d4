#ifndef CTM_PERMUTATION_HPP
#define CTM_PERMUTATION_HPP

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace ctm {

/// One-line notation on {0..n-1}: perm[i] is the image of i.
using Permutation = std::vector<int>;

inline Permutation identity_permutation(int n) {
  Permutation p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

inline bool is_permutation_of_range(std::span<const int> p) {
  std::vector<char> seen(p.size(), 0);
  for (int x : p) {
    if (x < 0 || static_cast<std::size_t>(x) >= p.size() || seen[static_cast<std::size_t>(x)]) return false;
    seen[static_cast<std::size_t>(x)] = 1;
  }
  return true;
}

inline Permutation inverse(std::span<const int> p) {
  Permutation inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return inv;
}

/// (a ∘ b)(i) = a[b[i]]
inline Permutation compose(std::span<const int> a, std::span<const int> b) {
  Permutation r(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) r[i] = a[static_cast<std::size_t>(b[i])];
  return r;
}

inline int cycle_count(std::span<const int> p) {
  std::vector<char> seen(p.size(), 0);
  int cycles = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    ++cycles;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(p[j])) seen[j] = 1;
  }
  return cycles;
}

/// Calls f(perm) for every permutation of {0..n-1} in lexicographic order.
template <class F>
void for_each_permutation(int n, F&& f) {
  Permutation p = identity_permutation(n);
  do {
    f(std::as_const(p));
  } while (std::next_permutation(p.begin(), p.end()));
}

}  // namespace ctm

#endif  // CTM_PERMUTATION_HPP
