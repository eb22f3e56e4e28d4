// Brute-force reference computations shared by the test suites. Nothing here
// calls into the optimized paths it is used to check.
#ifndef CTM_TESTS_ORACLES_HPP
#define CTM_TESTS_ORACLES_HPP

#include "ctm/colored_graph.hpp"
#include "ctm/rational.hpp"

#include <map>
#include <utility>

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using ctm::ColoredGraph;
using ctm::Integer;
using ctm::Permutation;

inline Permutation random_permutation(int n, std::mt19937& rng) {
  Permutation p = ctm::identity_permutation(n);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline ColoredGraph random_graph(int d, int p, std::mt19937& rng) {
  std::vector<Permutation> sigma;
  for (int c = 0; c < d; ++c) sigma.push_back(random_permutation(p, rng));
  return ColoredGraph(d, std::move(sigma));
}

/// D = 2 cycle on p white and p black vertices: sigma = [id, cyclic shift].
inline ColoredGraph necklace(int p) {
  Permutation shift(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) shift[static_cast<std::size_t>(i)] = (i + 1) % p;
  return ColoredGraph(2, {ctm::identity_permutation(p), shift});
}

inline std::vector<Permutation> all_permutations(int n) {
  std::vector<Permutation> out;
  Permutation p = ctm::identity_permutation(n);
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// sigma'[c] = tau sigma[c] pi^-1, computed entry by entry.
inline std::string encode_relabeled(const ColoredGraph& g, const Permutation& pi, const Permutation& tau) {
  const int p = g.order();
  Permutation pinv(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) pinv[static_cast<std::size_t>(pi[static_cast<std::size_t>(i)])] = i;
  std::string s;
  s.push_back(static_cast<char>(g.colors()));
  s.push_back(static_cast<char>(p));
  for (int c = 0; c < g.colors(); ++c)
    for (int i = 0; i < p; ++i)
      s.push_back(static_cast<char>(tau[static_cast<std::size_t>(g.black_of(pinv[static_cast<std::size_t>(i)], c))]));
  return s;
}

/// Minimum encoding over all of S_p x S_p.
inline std::string exhaustive_key(const ColoredGraph& g) {
  const auto perms = all_permutations(g.order());
  std::string best;
  bool first = true;
  for (const auto& pi : perms)
    for (const auto& tau : perms) {
      auto s = encode_relabeled(g, pi, tau);
      if (first || s < best) best = s;
      first = false;
    }
  return best;
}

inline Integer brute_force_automorphisms(const ColoredGraph& g) {
  const auto perms = all_permutations(g.order());
  const auto self = encode_relabeled(g, ctm::identity_permutation(g.order()), ctm::identity_permutation(g.order()));
  Integer count = 0;
  for (const auto& pi : perms)
    for (const auto& tau : perms)
      if (encode_relabeled(g, pi, tau) == self) ++count;
  return count;
}

inline bool connected_by_search(const ColoredGraph& g) {
  const int p = g.order();
  if (p == 0) return false;
  std::vector<char> seen_w(static_cast<std::size_t>(p), 0), seen_b(static_cast<std::size_t>(p), 0);
  std::vector<int> stack{0};
  seen_w[0] = 1;
  while (!stack.empty()) {
    int w = stack.back();
    stack.pop_back();
    for (int c = 0; c < g.colors(); ++c) {
      int b = g.black_of(w, c);
      if (seen_b[static_cast<std::size_t>(b)]) continue;
      seen_b[static_cast<std::size_t>(b)] = 1;
      for (int c2 = 0; c2 < g.colors(); ++c2) {
        int w2 = g.white_of(b, c2);
        if (!seen_w[static_cast<std::size_t>(w2)]) {
          seen_w[static_cast<std::size_t>(w2)] = 1;
          stack.push_back(w2);
        }
      }
    }
  }
  return std::all_of(seen_w.begin(), seen_w.end(), [](char x) { return x; });
}

/// Classes over every tuple in S_p^D (no normalization of color 0).
inline std::size_t exhaustive_class_count(int d, int p_max, bool connected_only) {
  std::set<std::string> keys;
  for (int p = 1; p <= p_max; ++p) {
    const auto perms = all_permutations(p);
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      std::vector<Permutation> sigma;
      for (auto i : idx) sigma.push_back(perms[i]);
      ColoredGraph g(d, sigma);
      if (!connected_only || connected_by_search(g)) keys.insert(exhaustive_key(g));
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == perms.size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }
  return keys.size();
}

// Polynomials in t and the entries T_I, Tbar_I (I < N^D) of a background tensor,
// kept as explicit monomials. Used to rebuild E_Q f(T + Q) from the heat kernel
// E_Q f(T + Q) = sum_j t^j / j! Lap^j f with Lap = sum_I d/dT_I d/dTbar_I.
struct FieldPolynomial {
  using Key = std::pair<int, std::vector<int>>;  // (t power, exponents of T then Tbar)
  int vars = 0;
  std::map<Key, ctm::Rational> terms;

  void add(const Key& k, const ctm::Rational& c) {
    if (c == 0) return;
    auto& x = terms[k];
    x += c;
    if (x == 0) terms.erase(k);
  }
  // Grade: t power plus T degree, the vertex pairs the term came from.
  static int grade(const Key& k) {
    int g = k.first;
    for (std::size_t i = 0; i < k.second.size() / 2; ++i) g += k.second[i];
    return g;
  }
};

inline FieldPolynomial field_constant(int vars, const ctm::Rational& c) {
  FieldPolynomial f;
  f.vars = vars;
  f.add({0, std::vector<int>(static_cast<std::size_t>(2 * vars), 0)}, c);
  return f;
}

inline FieldPolynomial field_add(FieldPolynomial a, const FieldPolynomial& b, const ctm::Rational& s = 1) {
  for (const auto& [k, c] : b.terms) a.add(k, c * s);
  return a;
}

inline FieldPolynomial field_multiply(const FieldPolynomial& a, const FieldPolynomial& b, int max_grade) {
  FieldPolynomial r;
  r.vars = a.vars;
  for (const auto& [ka, ca] : a.terms)
    for (const auto& [kb, cb] : b.terms) {
      FieldPolynomial::Key k{ka.first + kb.first, ka.second};
      for (std::size_t i = 0; i < k.second.size(); ++i) k.second[i] += kb.second[i];
      if (FieldPolynomial::grade(k) <= max_grade) r.add(k, ca * cb);
    }
  return r;
}

// Tr_g(T, Tbar) summed over every index assignment of the edges.
inline FieldPolynomial trace_polynomial(const ColoredGraph& g, int n) {
  const int d = g.colors(), p = g.order();
  int m = 1;
  for (int c = 0; c < d; ++c) m *= n;
  FieldPolynomial f;
  f.vars = m;
  Integer loops = 1;
  for (int i = 0; i < g.loops(); ++i) loops *= n;
  std::vector<int> a(static_cast<std::size_t>(p * d), 0);
  while (true) {
    std::vector<int> e(static_cast<std::size_t>(2 * m), 0);
    for (int w = 0; w < p; ++w) {
      int idx = 0;
      for (int c = 0; c < d; ++c) idx = idx * n + a[static_cast<std::size_t>(w * d + c)];
      ++e[static_cast<std::size_t>(idx)];
    }
    for (int b = 0; b < p; ++b) {
      int idx = 0;
      for (int c = 0; c < d; ++c) idx = idx * n + a[static_cast<std::size_t>(g.white_of(b, c) * d + c)];
      ++e[static_cast<std::size_t>(m + idx)];
    }
    f.add({0, e}, ctm::Rational(loops));
    int k = p * d - 1;
    while (k >= 0 && ++a[static_cast<std::size_t>(k)] == n) a[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  return f;
}

// t Lap f: one Wick pairing of a T with a Tbar carrying the same index.
inline FieldPolynomial heat_step(const FieldPolynomial& f) {
  FieldPolynomial r;
  r.vars = f.vars;
  for (const auto& [k, c] : f.terms)
    for (int i = 0; i < f.vars; ++i) {
      const int x = k.second[static_cast<std::size_t>(i)], y = k.second[static_cast<std::size_t>(f.vars + i)];
      if (x == 0 || y == 0) continue;
      FieldPolynomial::Key k2{k.first + 1, k.second};
      --k2.second[static_cast<std::size_t>(i)];
      --k2.second[static_cast<std::size_t>(f.vars + i)];
      r.add(k2, c * x * y);
    }
  return r;
}

inline FieldPolynomial gaussian_average(const FieldPolynomial& f) {
  FieldPolynomial out = f, term = f;
  for (int j = 1;; ++j) {
    term = heat_step(term);
    if (term.terms.empty()) break;
    out = field_add(out, term, ctm::Rational(1, ctm::factorial(j)));
  }
  return out;
}

// -log f for f = 1 + (terms of positive grade), truncated at max_grade.
inline FieldPolynomial minus_log(const FieldPolynomial& f, int max_grade) {
  const auto one = field_constant(f.vars, 1);
  const auto x = field_add(f, one, -1);
  FieldPolynomial out = field_constant(f.vars, 0), power = one;
  for (int k = 1; k <= max_grade; ++k) {
    power = field_multiply(power, x, max_grade);
    out = field_add(out, power, ctm::Rational(k % 2 == 1 ? -1 : 1, k));
  }
  return out;
}

}  // namespace oracle

#endif  // CTM_TESTS_ORACLES_HPP
