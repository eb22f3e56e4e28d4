#ifndef CTM_HOPF_HPP
#define CTM_HOPF_HPP

#include "ctm/colored_graph.hpp"
#include "ctm/rational.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace ctm {

/// (Γ, v) with Γ connected and canonical, v an orbit representative of either color.
using Generator = MarkedKey;

/// Commutative monomial in generators; the empty map is the unit.
using HopfMonomial = std::map<Generator, int>;
using HopfElement = std::map<HopfMonomial, Integer>;
using TensorElement = std::map<std::pair<HopfMonomial, HopfMonomial>, Integer>;
using TensorCube = std::map<std::tuple<HopfMonomial, HopfMonomial, HopfMonomial>, Integer>;

/// without_singletons: subgraphs have at least three vertices and the complement
/// of the marked vertex is not a subgraph, so the dipole never enters a coproduct.
/// all_subgraphs: every admissible vertex set counts, singletons included.
enum class HopfConvention { without_singletons, all_subgraphs };

inline Generator make_generator(const ColoredGraph& g, Vertex v) {
  if (g.order() == 0 || !is_connected(g)) throw validation_error("generator graph must be connected and nonempty");
  if (v.index < 0 || v.index >= g.order()) throw validation_error("marked vertex out of range");
  return marked_canonical_form(g.with_loops(0), v);
}

inline HopfMonomial monomial_of(const Generator& g) { return HopfMonomial{{g, 1}}; }

inline HopfMonomial operator*(HopfMonomial a, const HopfMonomial& b) {
  for (const auto& [g, k] : b) a[g] += k;
  return a;
}

inline int vertex_count(const HopfMonomial& m) {
  int n = 0;
  for (const auto& [g, k] : m) n += 2 * g.graph.order() * k;
  return n;
}

inline std::string to_string(const HopfMonomial& m) {
  if (m.empty()) return "1";
  std::string out;
  for (const auto& [g, k] : m) {
    if (!out.empty()) out += "*";
    out += g.hex();
    if (k > 1) out += "^" + std::to_string(k);
  }
  return out;
}

template <class Map, class Key>
void add_coefficient(Map& m, const Key& k, const Integer& x) {
  if (x == 0) return;
  auto [it, fresh] = m.try_emplace(k, x);
  if (!fresh) {
    it->second += x;
    if (it->second == 0) m.erase(it);
  }
}

inline HopfElement operator*(const HopfElement& a, const HopfElement& b) {
  HopfElement out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) add_coefficient(out, ma * mb, ca * cb);
  return out;
}

/// A vertex subset, whites and blacks listed separately (sorted indices).
struct Subgraph {
  std::vector<int> whites;
  std::vector<int> blacks;
  VertexColor leg_color = VertexColor::white;  // color of the vertices carrying the external legs
  std::vector<int> leg_vertex;                 // per color: the inside vertex carrying that leg
  std::size_t size() const noexcept { return whites.size() + blacks.size(); }
  auto operator<=>(const Subgraph&) const = default;
};

namespace detail {

inline bool contains(const std::vector<int>& xs, int x) { return std::find(xs.begin(), xs.end(), x) != xs.end(); }

// Vertices are numbered whites 0..p-1, blacks p..2p-1 in bitmasks.
inline std::optional<Subgraph> admissible(const ColoredGraph& g, unsigned mask) {
  const int p = g.order();
  const int d = g.colors();
  Subgraph s;
  for (int i = 0; i < p; ++i)
    if (mask >> i & 1u) s.whites.push_back(i);
  for (int i = 0; i < p; ++i)
    if (mask >> (p + i) & 1u) s.blacks.push_back(i);
  if (s.whites.size() != s.blacks.size() + 1 && s.blacks.size() != s.whites.size() + 1) return std::nullopt;
  s.leg_color = s.whites.size() > s.blacks.size() ? VertexColor::white : VertexColor::black;
  s.leg_vertex.assign(static_cast<std::size_t>(d), -1);
  for (int c = 0; c < d; ++c) {
    for (int w : s.whites) {
      if (contains(s.blacks, g.black_of(w, c))) continue;
      if (s.leg_color != VertexColor::white || s.leg_vertex[static_cast<std::size_t>(c)] >= 0) return std::nullopt;
      s.leg_vertex[static_cast<std::size_t>(c)] = w;
    }
    for (int b : s.blacks) {
      if (contains(s.whites, g.white_of(b, c))) continue;
      if (s.leg_color != VertexColor::black || s.leg_vertex[static_cast<std::size_t>(c)] >= 0) return std::nullopt;
      s.leg_vertex[static_cast<std::size_t>(c)] = b;
    }
    if (s.leg_vertex[static_cast<std::size_t>(c)] < 0) return std::nullopt;
  }
  // connected along internal edges
  const unsigned full = mask;
  unsigned seen = 1u << std::countr_zero(mask);
  for (bool grew = true; grew;) {
    grew = false;
    for (int i = 0; i < 2 * p; ++i) {
      if (!(seen >> i & 1u)) continue;
      for (int c = 0; c < d; ++c) {
        const int j = i < p ? p + g.black_of(i, c) : g.white_of(i - p, c);
        if ((full >> j & 1u) && !(seen >> j & 1u)) {
          seen |= 1u << j;
          grew = true;
        }
      }
    }
  }
  if (seen != full) return std::nullopt;
  return s;
}

}  // namespace detail

/// Admissible subgraphs of g avoiding v.
inline std::vector<Subgraph> admissible_subgraphs(const ColoredGraph& g, Vertex v, HopfConvention conv) {
  const int p = g.order();
  if (2 * p > 30) throw validation_error("graph too large for subgraph enumeration");
  const unsigned vbit = 1u << (v.color == VertexColor::white ? v.index : p + v.index);
  const unsigned all = (1u << (2 * p)) - 1u;
  std::vector<Subgraph> out;
  for (unsigned mask = 1; mask <= all; ++mask) {
    if (mask & vbit) continue;
    if (conv == HopfConvention::without_singletons && (std::popcount(mask) < 3 || mask == (all & ~vbit))) continue;
    if (auto s = detail::admissible(g, mask)) out.push_back(std::move(*s));
  }
  return out;
}

/// Nonempty families of pairwise disjoint admissible subgraphs.
inline std::vector<std::vector<Subgraph>> admissible_subgraph_families(const ColoredGraph& g, Vertex v,
                                                                         HopfConvention conv) {
  const auto subs = admissible_subgraphs(g, v, conv);
  const int p = g.order();
  std::vector<unsigned> masks;
  for (const auto& s : subs) {
    unsigned m = 0;
    for (int w : s.whites) m |= 1u << w;
    for (int b : s.blacks) m |= 1u << (p + b);
    masks.push_back(m);
  }
  std::vector<std::vector<Subgraph>> out;
  std::vector<Subgraph> cur;
  std::function<void(std::size_t, unsigned)> rec = [&](std::size_t i, unsigned used) {
    for (std::size_t j = i; j < subs.size(); ++j) {
      if (masks[j] & used) continue;
      cur.push_back(subs[j]);
      out.push_back(cur);
      rec(j + 1, used | masks[j]);
      cur.pop_back();
    }
  };
  rec(0, 0);
  return out;
}

/// Γ̂: the subgraph closed by one new vertex of the opposite color, which is marked.
inline Generator closed_subgraph(const ColoredGraph& g, const Subgraph& s) {
  const int d = g.colors();
  const bool white_legs = s.leg_color == VertexColor::white;
  const auto& big = white_legs ? s.whites : s.blacks;    // side with one extra vertex
  const auto& small = white_legs ? s.blacks : s.whites;  // side receiving the new vertex
  const int q = static_cast<int>(big.size());
  auto pos = [](const std::vector<int>& xs, int x) {
    return static_cast<int>(std::find(xs.begin(), xs.end(), x) - xs.begin());
  };
  // sigma written from the big side: big i -> small j, or -> q-1 (the new vertex)
  std::vector<Permutation> from_big(static_cast<std::size_t>(d), Permutation(static_cast<std::size_t>(q)));
  for (int c = 0; c < d; ++c)
    for (int i = 0; i < q; ++i) {
      const int x = big[static_cast<std::size_t>(i)];
      const int y = white_legs ? g.black_of(x, c) : g.white_of(x, c);
      from_big[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = detail::contains(small, y) ? pos(small, y) : q - 1;
    }
  if (white_legs) return marked_canonical_form(ColoredGraph(d, from_big), Vertex{VertexColor::black, q - 1});
  std::vector<Permutation> sigma;
  for (const auto& s2 : from_big) sigma.push_back(inverse(s2));
  return marked_canonical_form(ColoredGraph(d, sigma), Vertex{VertexColor::white, q - 1});
}

/// Γ/F with the mark carried along: each subgraph shrinks to one vertex of its leg color.
inline Generator reduced_graph(const ColoredGraph& g, Vertex v, const std::vector<Subgraph>& family) {
  const int p = g.order();
  const int d = g.colors();
  std::vector<int> white_img(static_cast<std::size_t>(p), -1), black_img(static_cast<std::size_t>(p), -1);
  int nw = 0, nb = 0;
  for (int i = 0; i < p; ++i) {
    bool inside = false;
    for (const auto& s : family) inside = inside || detail::contains(s.whites, i);
    if (!inside) white_img[static_cast<std::size_t>(i)] = nw++;
  }
  for (int i = 0; i < p; ++i) {
    bool inside = false;
    for (const auto& s : family) inside = inside || detail::contains(s.blacks, i);
    if (!inside) black_img[static_cast<std::size_t>(i)] = nb++;
  }
  for (const auto& s : family) {
    const int idx = s.leg_color == VertexColor::white ? nw++ : nb++;
    for (int w : s.whites) white_img[static_cast<std::size_t>(w)] = s.leg_color == VertexColor::white ? idx : -2 - idx;
    for (int b : s.blacks) black_img[static_cast<std::size_t>(b)] = s.leg_color == VertexColor::black ? idx : -2 - idx;
  }
  if (nw != nb) throw std::logic_error("reduced graph is unbalanced");
  std::vector<Permutation> sigma(static_cast<std::size_t>(d), Permutation(static_cast<std::size_t>(nw), -1));
  for (int c = 0; c < d; ++c) {
    auto& sc = sigma[static_cast<std::size_t>(c)];
    for (int w = 0; w < p; ++w) {
      const int iw = white_img[static_cast<std::size_t>(w)];
      const int ib = black_img[static_cast<std::size_t>(g.black_of(w, c))];
      if (iw >= 0 && ib >= 0) sc[static_cast<std::size_t>(iw)] = ib;  // surviving or leg edge
    }
  }
  const int vi = v.color == VertexColor::white ? white_img[static_cast<std::size_t>(v.index)]
                                               : black_img[static_cast<std::size_t>(v.index)];
  return marked_canonical_form(ColoredGraph(d, std::move(sigma)), Vertex{v.color, vi});
}

/// Coproducts, antipodes and characters over one color count, with memoization.
class HopfAlgebra {
 public:
  explicit HopfAlgebra(int colors, HopfConvention conv = HopfConvention::without_singletons)
      : colors_(colors), conv_(conv) {
    if (colors < 1) throw validation_error("D must be >= 1");
  }

  int colors() const noexcept { return colors_; }
  HopfConvention convention() const noexcept { return conv_; }

  /// Every generator with 1 <= p <= p_max, sorted.
  std::vector<Generator> generators(int p_max) const {
    std::vector<Generator> out;
    for (const auto& key : enumerate_graphs(colors_, p_max, true)) {
      const auto g = graph_from_key(key);
      for (auto c : {VertexColor::white, VertexColor::black})
        for (int i : orbit_representatives(g, c)) out.push_back(marked_canonical_form(g, Vertex{c, i}));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Reduced part of Δ(x): the sum over families only.
  const TensorElement& reduced_coproduct(const Generator& x) {
    check(x);
    auto it = reduced_.find(x);
    if (it != reduced_.end()) return it->second;
    const auto g = graph_from_key(x.graph);
    const Vertex v = marked_vertex_of(x);
    TensorElement out;
    for (const auto& fam : admissible_subgraph_families(g, v, conv_)) {
      HopfMonomial left;
      for (const auto& s : fam) left = left * monomial_of(closed_subgraph(g, s));
      add_coefficient(out, std::pair{left, monomial_of(reduced_graph(g, v, fam))}, Integer(1));
    }
    return reduced_.emplace(x, std::move(out)).first->second;
  }

  TensorElement coproduct(const Generator& x) {
    TensorElement out = reduced_coproduct(x);
    add_coefficient(out, std::pair{monomial_of(x), HopfMonomial{}}, Integer(1));
    add_coefficient(out, std::pair{HopfMonomial{}, monomial_of(x)}, Integer(1));
    return out;
  }

  /// Multiplicative extension.
  TensorElement coproduct(const HopfMonomial& m) {
    TensorElement out{{{HopfMonomial{}, HopfMonomial{}}, Integer(1)}};
    for (const auto& [g, k] : m) {
      const auto dg = coproduct(g);
      for (int r = 0; r < k; ++r) {
        TensorElement next;
        for (const auto& [lr, c] : out)
          for (const auto& [lr2, c2] : dg) add_coefficient(next, std::pair{lr.first * lr2.first, lr.second * lr2.second}, c * c2);
        out = std::move(next);
      }
    }
    return out;
  }

  TensorElement coproduct(const HopfElement& e) {
    TensorElement out;
    for (const auto& [m, c] : e)
      for (const auto& [lr, c2] : coproduct(m)) add_coefficient(out, lr, c * c2);
    return out;
  }

  /// S(x) = -x - sum S(x') x'' over the reduced coproduct. Every generator in x'
  /// has fewer vertices than x, which bounds the recursion.
  const HopfElement& antipode(const Generator& x) {
    auto it = antipode_.find(x);
    if (it != antipode_.end()) return it->second;
    const int n = 2 * x.graph.order();
    HopfElement out{{monomial_of(x), Integer(-1)}};
    for (const auto& [lr, c] : reduced_coproduct(x)) {
      for (const auto& [g, k] : lr.first)
        if (2 * g.graph.order() >= n) throw std::logic_error("antipode recursion does not shrink: " + x.hex());
      for (const auto& [m, c2] : antipode(lr.first) * HopfElement{{lr.second, Integer(1)}})
        add_coefficient(out, m, -c * c2);
    }
    return antipode_.emplace(x, std::move(out)).first->second;
  }

  HopfElement antipode(const HopfMonomial& m) {
    HopfElement out{{HopfMonomial{}, Integer(1)}};
    for (const auto& [g, k] : m)
      for (int r = 0; r < k; ++r) out = out * antipode(g);
    return out;
  }

 private:
  void check(const Generator& x) const {
    if (x.graph.colors() != colors_) throw validation_error("dimension mismatch with Hopf algebra");
  }

  int colors_;
  HopfConvention conv_;
  std::map<Generator, TensorElement> reduced_;
  std::map<Generator, HopfElement> antipode_;
};

inline Integer counit(const HopfElement& e) {
  auto it = e.find(HopfMonomial{});
  return it == e.end() ? Integer(0) : it->second;
}

/// (Δ⊗id)Δ x and (id⊗Δ)Δ x.
inline std::pair<TensorCube, TensorCube> coassociativity_sides(HopfAlgebra& h, const Generator& x) {
  TensorCube left, right;
  for (const auto& [lr, c] : h.coproduct(x)) {
    for (const auto& [ab, c2] : h.coproduct(lr.first)) add_coefficient(left, std::tuple{ab.first, ab.second, lr.second}, c * c2);
    for (const auto& [ab, c2] : h.coproduct(lr.second)) add_coefficient(right, std::tuple{lr.first, ab.first, ab.second}, c * c2);
  }
  return {left, right};
}

/// m(S⊗id)Δx (left = true) or m(id⊗S)Δx.
inline HopfElement antipode_contraction(HopfAlgebra& h, const Generator& x, bool left) {
  HopfElement out;
  for (const auto& [lr, c] : h.coproduct(x)) {
    const auto prod = left ? h.antipode(lr.first) * HopfElement{{lr.second, Integer(1)}}
                           : HopfElement{{lr.first, Integer(1)}} * h.antipode(lr.second);
    for (const auto& [m, c2] : prod) add_coefficient(out, m, c * c2);
  }
  return out;
}

/// Multiplicative functional given by its values on generators (missing = 0).
class Character {
 public:
  Character() = default;
  explicit Character(std::map<Generator, Rational> values) : values_(std::move(values)) {}

  static Character counit() { return Character{}; }

  Rational operator()(const Generator& g) const {
    auto it = values_.find(g);
    return it == values_.end() ? Rational(0) : it->second;
  }
  Rational operator()(const HopfMonomial& m) const {
    Rational r = 1;
    for (const auto& [g, k] : m)
      for (int i = 0; i < k; ++i) r *= (*this)(g);
    return r;
  }
  Rational operator()(const HopfElement& e) const {
    Rational r = 0;
    for (const auto& [m, c] : e) r += Rational(c) * (*this)(m);
    return r;
  }
  const std::map<Generator, Rational>& values() const noexcept { return values_; }

 private:
  std::map<Generator, Rational> values_;
};

/// (a*b)(x) = (a⊗b)Δx, tabulated on the given generators.
inline Character convolve(HopfAlgebra& h, const Character& a, const Character& b, const std::vector<Generator>& domain) {
  std::map<Generator, Rational> out;
  for (const auto& x : domain) {
    Rational r = 0;
    for (const auto& [lr, c] : h.coproduct(x)) r += Rational(c) * a(lr.first) * b(lr.second);
    if (r != 0) out.emplace(x, r);
  }
  return Character(std::move(out));
}

/// a∘S, the convolution inverse of a.
inline Character inverse_character(HopfAlgebra& h, const Character& a, const std::vector<Generator>& domain) {
  std::map<Generator, Rational> out;
  for (const auto& x : domain) {
    const Rational r = a(h.antipode(x));
    if (r != 0) out.emplace(x, r);
  }
  return Character(std::move(out));
}

/// Linear functional supported on single generators (zero on 1 and on products).
using InfinitesimalCharacter = std::map<Generator, Rational>;

inline Rational evaluate(const InfinitesimalCharacter& a, const HopfMonomial& m) {
  if (m.size() != 1 || m.begin()->second != 1) return 0;
  auto it = a.find(m.begin()->first);
  return it == a.end() ? Rational(0) : it->second;
}

/// [a, b] = (a⊗b - b⊗a)∘Δ, tabulated on the given generators.
inline InfinitesimalCharacter infinitesimal_bracket(HopfAlgebra& h, const InfinitesimalCharacter& a,
                                                    const InfinitesimalCharacter& b, const std::vector<Generator>& domain) {
  InfinitesimalCharacter out;
  for (const auto& x : domain) {
    Rational r = 0;
    for (const auto& [lr, c] : h.reduced_coproduct(x))
      r += Rational(c) * (evaluate(a, lr.first) * evaluate(b, lr.second) - evaluate(b, lr.first) * evaluate(a, lr.second));
    if (r != 0) out.emplace(x, r);
  }
  return out;
}

}  // namespace ctm

#endif  // CTM_HOPF_HPP
