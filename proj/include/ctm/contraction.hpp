#ifndef CTM_CONTRACTION_HPP
#define CTM_CONTRACTION_HPP

#include "ctm/colored_graph.hpp"

#include <string>
#include <vector>

namespace ctm {

struct ContractionResult {
  ColoredGraph graph;  // loops stripped
  int new_loops = 0;
};

/// Removes white v and black vbar and reconnects the freed half-edges color by color.
/// A color along which v and vbar are adjacent closes into a vertexless loop.
inline ContractionResult contract(const ColoredGraph& g, int v, int vbar) {
  const int p = g.order();
  if (v < 0 || v >= p) throw validation_error("white vertex " + std::to_string(v + 1) + " out of range");
  if (vbar < 0 || vbar >= p) throw validation_error("black vertex " + std::to_string(vbar + 1) + " out of range");

  ContractionResult out;
  std::vector<Permutation> sigma(static_cast<std::size_t>(g.colors()));
  for (int c = 0; c < g.colors(); ++c) {
    Permutation s = g.color_map(c);
    if (s[static_cast<std::size_t>(v)] == vbar) {
      ++out.new_loops;
    } else {
      s[static_cast<std::size_t>(g.white_of(vbar, c))] = s[static_cast<std::size_t>(v)];
    }
    auto& t = sigma[static_cast<std::size_t>(c)];
    for (int w = 0; w < p; ++w) {
      if (w == v) continue;
      const int b = s[static_cast<std::size_t>(w)];
      t.push_back(b > vbar ? b - 1 : b);
    }
  }
  out.graph = ColoredGraph(g.colors(), std::move(sigma), g.loops());
  return out;
}

/// (g0 ⊔ g) contracted along black vbar0 of g0 and white v of g. The two vertices
/// sit in different components, so no loop can form.
inline ColoredGraph glue_and_contract(const ColoredGraph& g0, int vbar0, const ColoredGraph& g, int v) {
  if (g0.colors() != g.colors()) throw validation_error("dimension mismatch: D=" + std::to_string(g0.colors()) +
                                                        " vs D=" + std::to_string(g.colors()));
  if (vbar0 < 0 || vbar0 >= g0.order()) throw validation_error("black vertex out of range");
  if (v < 0 || v >= g.order()) throw validation_error("white vertex out of range");
  return contract(disjoint_union(g0, g), g0.order() + v, vbar0).graph;
}

/// An edge is named by its white endpoint and color.
struct Edge {
  int white = 0;
  int color = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Cuts the given edges and closes the wound with a new pair (w', b') = (p, p):
/// a cut edge w -> b of color c becomes w -> b' and w' -> b, every uncut color
/// joins w' -> b'. With no cut this yields g ⊔ dipole.
inline ColoredGraph edge_cut(const ColoredGraph& g, const std::vector<Edge>& edges) {
  const int p = g.order();
  std::vector<char> used(static_cast<std::size_t>(g.colors()), 0);
  for (const auto& e : edges) {
    if (e.color < 0 || e.color >= g.colors())
      throw validation_error("cut color " + std::to_string(e.color + 1) + " out of range");
    if (e.white < 0 || e.white >= p) throw validation_error("cut edge white vertex out of range", e.color);
    if (used[static_cast<std::size_t>(e.color)])
      throw validation_error("two cut edges of color " + std::to_string(e.color + 1), e.color);
    used[static_cast<std::size_t>(e.color)] = 1;
  }
  std::vector<Permutation> sigma = g.sigma();
  for (auto& s : sigma) s.push_back(p);
  for (const auto& e : edges) {
    auto& s = sigma[static_cast<std::size_t>(e.color)];
    s[static_cast<std::size_t>(p)] = s[static_cast<std::size_t>(e.white)];
    s[static_cast<std::size_t>(e.white)] = p;
  }
  return ColoredGraph(g.colors(), std::move(sigma), g.loops());
}

/// All sets of k edges with pairwise distinct colors, colors ascending within a set,
/// sets ordered lexicographically by (color, white) pairs.
inline std::vector<std::vector<Edge>> enumerate_cuts(const ColoredGraph& g, int k) {
  const int d = g.colors();
  if (k < 0 || k > d) throw validation_error("cut size must lie in 0..D");
  std::vector<std::vector<Edge>> out;
  std::vector<Edge> current;
  auto rec = [&](auto&& self, int next_color) -> void {
    if (static_cast<int>(current.size()) == k) {
      out.push_back(current);
      return;
    }
    for (int c = next_color; c < d; ++c) {
      if (d - c < k - static_cast<int>(current.size())) break;
      for (int w = 0; w < g.order(); ++w) {
        current.push_back({w, c});
        self(self, c + 1);
        current.pop_back();
      }
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace ctm

#endif  // CTM_CONTRACTION_HPP
