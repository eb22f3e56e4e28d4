#ifndef CTM_TENSOR_EVAL_HPP
#define CTM_TENSOR_EVAL_HPP

#include "ctm/colored_graph.hpp"
#include "ctm/contraction.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace ctm {

struct GaussianInteger {
  Integer re = 0;
  Integer im = 0;

  GaussianInteger() = default;
  GaussianInteger(Integer r, Integer i = 0) : re(std::move(r)), im(std::move(i)) {}  // NOLINT
  GaussianInteger(long r, long i = 0) : re(r), im(i) {}                               // NOLINT
  GaussianInteger(int r, int i = 0) : re(r), im(i) {}                                 // NOLINT

  GaussianInteger conj() const { return {re, -im}; }
  GaussianInteger& operator+=(const GaussianInteger& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  friend GaussianInteger operator+(GaussianInteger a, const GaussianInteger& b) { return a += b; }
  friend GaussianInteger operator*(const GaussianInteger& a, const GaussianInteger& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const GaussianInteger&, const GaussianInteger&) = default;
};

/// Rank-D tensor with N values per index, stored row-major (first index slowest).
class DenseTensor {
 public:
  DenseTensor(int size, int rank, GaussianInteger fill = 0) : size_(size), rank_(rank) {
    if (size < 1 || rank < 1) throw validation_error("tensor needs N >= 1 and D >= 1");
    std::size_t n = 1;
    for (int k = 0; k < rank; ++k) n *= static_cast<std::size_t>(size);
    entries_.assign(n, fill);
  }

  int size() const noexcept { return size_; }
  int rank() const noexcept { return rank_; }
  std::size_t entry_count() const noexcept { return entries_.size(); }

  std::size_t offset(const std::vector<int>& idx) const {
    std::size_t off = 0;
    for (int i : idx) off = off * static_cast<std::size_t>(size_) + static_cast<std::size_t>(i);
    return off;
  }
  const GaussianInteger& at(const std::vector<int>& idx) const { return entries_[offset(idx)]; }
  GaussianInteger& at(const std::vector<int>& idx) { return entries_[offset(idx)]; }
  const GaussianInteger& flat(std::size_t i) const { return entries_[i]; }
  GaussianInteger& flat(std::size_t i) { return entries_[i]; }

  /// Entry-wise complex conjugate, the structural partner of M.
  DenseTensor conj() const {
    DenseTensor out = *this;
    for (auto& e : out.entries_) e = e.conj();
    return out;
  }

 private:
  int size_;
  int rank_;
  std::vector<GaussianInteger> entries_;
};

namespace detail {

/// Iterates over every assignment of an index in {0..n-1} to each of `slots` slots.
template <class F>
void for_each_assignment(int slots, int n, F&& f) {
  std::vector<int> a(static_cast<std::size_t>(slots), 0);
  while (true) {
    f(std::as_const(a));
    int k = slots - 1;
    while (k >= 0 && ++a[static_cast<std::size_t>(k)] == n) a[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) return;
  }
}

}  // namespace detail

/// Contracts one M per white vertex and one Mbar per black vertex along the colored edges.
inline GaussianInteger trace_invariant(const ColoredGraph& g, const DenseTensor& m, const DenseTensor& mbar) {
  const int d = g.colors();
  if (m.rank() != d || mbar.rank() != d) throw validation_error("dimension mismatch between graph and tensors");
  if (m.size() != mbar.size()) throw validation_error("tensors disagree on N");
  const int n = m.size();
  const int p = g.order();
  const Integer loop_factor = ipow(n, g.loops());
  if (p == 0) return GaussianInteger(loop_factor);

  GaussianInteger sum;
  std::vector<int> idx(static_cast<std::size_t>(d));
  // Edge (w, c) carries index a[w * d + c].
  detail::for_each_assignment(p * d, n, [&](const std::vector<int>& a) {
    GaussianInteger term(1);
    for (int w = 0; w < p; ++w) {
      for (int c = 0; c < d; ++c) idx[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(w * d + c)];
      term = term * m.at(idx);
    }
    for (int b = 0; b < p; ++b) {
      for (int c = 0; c < d; ++c)
        idx[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(g.white_of(b, c) * d + c)];
      term = term * mbar.at(idx);
    }
    sum += term;
  });
  return {sum.re * loop_factor, sum.im * loop_factor};
}

/// Largest total white count accepted by the factorial pairing enumeration.
inline constexpr int max_pairing_order = 8;

/// Number of faces of a Wick pairing: sum over colors of the cycles of sigma_c ∘ pairing,
/// with pairing[b] the white vertex matched to black b.
inline int face_count(const ColoredGraph& g, const Permutation& pairing) {
  int faces = 0;
  for (const auto& s : g.sigma()) faces += cycle_count(compose(s, pairing));
  return faces;
}

/// <prod Tr_Gamma> under <M_I Mbar_J> = delta_IJ, summing N^faces over all white-black pairings.
inline Integer gaussian_moment_bruteforce(const std::vector<ColoredGraph>& graphs, int n, int colors) {
  const ColoredGraph g = disjoint_union(graphs, colors);
  if (g.order() > max_pairing_order)
    throw validation_error("pairing enumeration limited to " + std::to_string(max_pairing_order) + " white vertices");
  Integer total = 0;
  for_each_permutation(g.order(), [&](const Permutation& pairing) { total += ipow(n, face_count(g, pairing)); });
  return total * ipow(n, g.loops());
}

/// Independent route to the same moment: expand the product of invariants into
/// monomials in the tensor entries and integrate each one, using
/// <M_I^a Mbar_I^b> = delta_ab a! for independent complex Gaussian entries.
inline Integer explicit_index_moment(const std::vector<ColoredGraph>& graphs, int n, int colors) {
  const ColoredGraph g = disjoint_union(graphs, colors);
  const int d = colors;
  const int p = g.order();
  Integer total = 0;
  if (p == 0) return ipow(n, g.loops());
  std::vector<std::size_t> whites(static_cast<std::size_t>(p));
  std::vector<std::size_t> blacks(static_cast<std::size_t>(p));
  detail::for_each_assignment(p * d, n, [&](const std::vector<int>& a) {
    for (int w = 0; w < p; ++w) {
      std::size_t off = 0;
      for (int c = 0; c < d; ++c)
        off = off * static_cast<std::size_t>(n) + static_cast<std::size_t>(a[static_cast<std::size_t>(w * d + c)]);
      whites[static_cast<std::size_t>(w)] = off;
    }
    for (int b = 0; b < p; ++b) {
      std::size_t off = 0;
      for (int c = 0; c < d; ++c)
        off = off * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(a[static_cast<std::size_t>(g.white_of(b, c) * d + c)]);
      blacks[static_cast<std::size_t>(b)] = off;
    }
    std::sort(whites.begin(), whites.end());
    std::sort(blacks.begin(), blacks.end());
    if (whites != blacks) return;
    Integer weight = 1;
    for (std::size_t i = 0; i < whites.size();) {
      std::size_t j = i;
      while (j < whites.size() && whites[j] == whites[i]) ++j;
      weight *= factorial(static_cast<int>(j - i));
      i = j;
    }
    total += weight;
  });
  return total * ipow(n, g.loops());
}

/// Terms of the integrated change of variables M -> M + dM, where dM is Tr_{g0}
/// with the Mbar of black vertex vbar0 removed, against the insertion F = prod Tr_insertions.
struct SdNumericTerms {
  Integer jacobian = 0;   // < sum_I d(dM_I)/dM_I  F >
  Integer variation = 0;  // < dM . dF/dM >
  Integer action = 0;     // < Tr_{g0} F >, from the Gaussian weight
  Integer residual() const { return jacobian + variation - action; }
};

inline SdNumericTerms sd_residual_numeric(const ColoredGraph& g0, int vbar0, const std::vector<ColoredGraph>& insertions,
                                          int n) {
  const int d = g0.colors();
  for (const auto& h : insertions)
    if (h.colors() != d) throw validation_error("dimension mismatch between constraint graph and insertion");
  SdNumericTerms out;
  for (int v = 0; v < g0.order(); ++v) {
    auto r = contract(g0, v, vbar0);
    std::vector<ColoredGraph> factors = insertions;
    factors.push_back(r.graph.with_loops(r.graph.loops() + r.new_loops));
    out.jacobian += gaussian_moment_bruteforce(factors, n, d);
  }
  for (std::size_t j = 0; j < insertions.size(); ++j) {
    for (int v = 0; v < insertions[j].order(); ++v) {
      std::vector<ColoredGraph> factors;
      for (std::size_t i = 0; i < insertions.size(); ++i)
        if (i != j) factors.push_back(insertions[i]);
      factors.push_back(glue_and_contract(g0, vbar0, insertions[j], v));
      out.variation += gaussian_moment_bruteforce(factors, n, d);
    }
  }
  std::vector<ColoredGraph> factors = insertions;
  factors.push_back(g0);
  out.action = gaussian_moment_bruteforce(factors, n, d);
  return out;
}

}  // namespace ctm

#endif  // CTM_TENSOR_EVAL_HPP
