#ifndef CTM_COLORED_GRAPH_HPP
#define CTM_COLORED_GRAPH_HPP

#include "ctm/permutation.hpp"
#include "ctm/rational.hpp"

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctm {

class validation_error : public std::invalid_argument {
 public:
  validation_error(const std::string& what, int color = -1) : std::invalid_argument(what), color_(color) {}
  /// Offending color (0-based), or -1 when the error is not tied to one color.
  int color() const noexcept { return color_; }

 private:
  int color_;
};

/// Largest order accepted by the exhaustive canonical labeling.
inline constexpr int max_canonical_order = 8;

enum class VertexColor : std::uint8_t { white = 0, black = 1 };

struct Vertex {
  VertexColor color = VertexColor::white;
  int index = 0;
  auto operator<=>(const Vertex&) const = default;
};

/// Closed bipartite D-colored graph. Color c maps white w to black sigma[c][w].
/// Vertexless loops are kept as a count and never appear as edges.
class ColoredGraph {
 public:
  ColoredGraph() = default;

  ColoredGraph(int colors, std::vector<Permutation> sigma, int loops = 0)
      : colors_(colors), loops_(loops), sigma_(std::move(sigma)) {
    if (colors_ < 1) throw validation_error("color count must be >= 1");
    if (loops_ < 0) throw validation_error("loop count must be >= 0");
    if (static_cast<int>(sigma_.size()) != colors_)
      throw validation_error("expected " + std::to_string(colors_) + " color maps, got " +
                             std::to_string(sigma_.size()));
    order_ = sigma_.empty() ? 0 : static_cast<int>(sigma_[0].size());
    for (int c = 0; c < colors_; ++c) {
      const auto& s = sigma_[static_cast<std::size_t>(c)];
      if (static_cast<int>(s.size()) != order_)
        throw validation_error("color " + std::to_string(c + 1) + " has " + std::to_string(s.size()) +
                                   " entries, expected " + std::to_string(order_),
                               c);
      if (!is_permutation_of_range(s))
        throw validation_error("color " + std::to_string(c + 1) + " is not a bijection", c);
    }
    inverse_.clear();
    inverse_.reserve(sigma_.size());
    for (const auto& s : sigma_) inverse_.push_back(inverse(s));
  }

  static ColoredGraph empty(int colors, int loops = 0) {
    return ColoredGraph(colors, std::vector<Permutation>(static_cast<std::size_t>(colors)), loops);
  }

  /// The unique graph with one white and one black vertex.
  static ColoredGraph dipole(int colors) {
    return ColoredGraph(colors, std::vector<Permutation>(static_cast<std::size_t>(colors), Permutation{0}));
  }

  int colors() const noexcept { return colors_; }
  /// Number of white vertices (equal to the number of black vertices).
  int order() const noexcept { return order_; }
  int vertex_count() const noexcept { return 2 * order_; }
  int loops() const noexcept { return loops_; }
  bool is_empty() const noexcept { return order_ == 0 && loops_ == 0; }

  const std::vector<Permutation>& sigma() const noexcept { return sigma_; }
  const Permutation& color_map(int c) const { return sigma_.at(static_cast<std::size_t>(c)); }
  int black_of(int white, int c) const {
    return sigma_[static_cast<std::size_t>(c)][static_cast<std::size_t>(white)];
  }
  int white_of(int black, int c) const {
    return inverse_[static_cast<std::size_t>(c)][static_cast<std::size_t>(black)];
  }
  /// Endpoint across the color-c edge.
  Vertex neighbor(Vertex v, int c) const {
    return v.color == VertexColor::white ? Vertex{VertexColor::black, black_of(v.index, c)}
                                         : Vertex{VertexColor::white, white_of(v.index, c)};
  }

  ColoredGraph with_loops(int loops) const {
    ColoredGraph g = *this;
    if (loops < 0) throw validation_error("loop count must be >= 0");
    g.loops_ = loops;
    return g;
  }

  friend bool operator==(const ColoredGraph& a, const ColoredGraph& b) {
    return a.colors_ == b.colors_ && a.loops_ == b.loops_ && a.sigma_ == b.sigma_;
  }

 private:
  int colors_ = 1;
  int order_ = 0;
  int loops_ = 0;
  std::vector<Permutation> sigma_ = std::vector<Permutation>(1);
  std::vector<Permutation> inverse_ = std::vector<Permutation>(1);
};

/// Builds a graph from 1-based color maps, as found in graph JSON.
inline ColoredGraph new_graph(int colors, int order, const std::vector<std::vector<int>>& sigma, int loops = 0) {
  if (colors < 1) throw validation_error("D must be >= 1");
  if (order < 0) throw validation_error("p must be >= 0");
  if (static_cast<int>(sigma.size()) != colors)
    throw validation_error("sigma has " + std::to_string(sigma.size()) + " entries, expected D = " +
                           std::to_string(colors));
  std::vector<Permutation> zero_based;
  zero_based.reserve(sigma.size());
  for (int c = 0; c < colors; ++c) {
    const auto& row = sigma[static_cast<std::size_t>(c)];
    if (static_cast<int>(row.size()) != order)
      throw validation_error("color " + std::to_string(c + 1) + " has " + std::to_string(row.size()) +
                                 " entries, expected p = " + std::to_string(order),
                             c);
    Permutation p;
    p.reserve(row.size());
    for (int x : row) {
      if (x < 1 || x > order)
        throw validation_error("color " + std::to_string(c + 1) + ": image " + std::to_string(x) +
                                   " out of range 1.." + std::to_string(order),
                               c);
      p.push_back(x - 1);
    }
    zero_based.push_back(std::move(p));
  }
  return ColoredGraph(colors, std::move(zero_based), loops);
}

/// Canonical encoding of an isomorphism class (loops excluded).
/// Layout: D, p, then sigma[0..D-1] of the minimal relabeling in one-line notation.
class GraphKey {
 public:
  GraphKey() = default;
  explicit GraphKey(std::string bytes) : bytes_(std::move(bytes)) {}

  const std::string& bytes() const noexcept { return bytes_; }
  int colors() const { return static_cast<unsigned char>(bytes_.at(0)); }
  int order() const { return static_cast<unsigned char>(bytes_.at(1)); }

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * bytes_.size());
    for (unsigned char b : bytes_) {
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 15]);
    }
    return out;
  }

  static GraphKey from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0 || hex.size() < 4) throw validation_error("malformed graph key '" + hex + "'");
    auto nibble = [&](char ch) -> int {
      if (ch >= '0' && ch <= '9') return ch - '0';
      if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
      throw validation_error("malformed graph key '" + hex + "'");
    };
    std::string bytes;
    for (std::size_t i = 0; i < hex.size(); i += 2)
      bytes.push_back(static_cast<char>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
    GraphKey key(std::move(bytes));
    const auto expected = 2 + static_cast<std::size_t>(key.colors()) * static_cast<std::size_t>(key.order());
    if (key.bytes_.size() != expected) throw validation_error("graph key '" + hex + "' has wrong length");
    return key;
  }

  auto operator<=>(const GraphKey&) const = default;

 private:
  std::string bytes_;
};

/// Rebuilds the canonical representative stored in a key.
inline ColoredGraph graph_from_key(const GraphKey& key) {
  const int d = key.colors();
  const int p = key.order();
  std::vector<Permutation> sigma(static_cast<std::size_t>(d), Permutation(static_cast<std::size_t>(p)));
  for (int c = 0; c < d; ++c)
    for (int i = 0; i < p; ++i)
      sigma[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
          static_cast<unsigned char>(key.bytes()[2 + static_cast<std::size_t>(c * p + i)]);
  return ColoredGraph(d, std::move(sigma));
}

namespace detail {

/// Search over white relabelings. Fixing the black relabeling so that color 0
/// becomes the identity leaves only conjugation of rho[c] = sigma[0]^-1 sigma[c],
/// and any optimum under the lexicographic order has color 0 equal to the identity.
struct CanonicalSearch {
  std::string best;
  Integer minimizers = 0;  // size of the stabilizer of the (marked) graph
};

inline CanonicalSearch canonical_search(const ColoredGraph& g, const Vertex* marked) {
  const int d = g.colors();
  const int p = g.order();
  if (p > max_canonical_order)
    throw validation_error("canonical labeling is limited to p <= " + std::to_string(max_canonical_order));
  std::string prefix;
  prefix.push_back(static_cast<char>(d));
  prefix.push_back(static_cast<char>(p));
  for (int i = 0; i < p; ++i) prefix.push_back(static_cast<char>(i));

  const Permutation s0inv = p > 0 ? inverse(g.color_map(0)) : Permutation{};
  std::vector<Permutation> rho;
  for (int c = 1; c < d; ++c) rho.push_back(compose(s0inv, g.color_map(c)));

  // The marked vertex is expressed through the white it is tied to:
  // a black b receives label tau(b) = pi(sigma0^-1(b)).
  int mark_white = -1;
  char mark_color = 0;
  if (marked) {
    mark_color = static_cast<char>(marked->color);
    mark_white = marked->color == VertexColor::white ? marked->index : s0inv[static_cast<std::size_t>(marked->index)];
  }

  CanonicalSearch out;
  std::string candidate(static_cast<std::size_t>((d - 1) * p + (marked ? 2 : 0)), '\0');
  Permutation pi(static_cast<std::size_t>(p));
  bool first = true;
  for_each_permutation(p, [&](const Permutation& pinv) {
    for (int i = 0; i < p; ++i) pi[static_cast<std::size_t>(pinv[static_cast<std::size_t>(i)])] = i;
    // Lazily compare against the incumbent; bail out as soon as we are larger.
    int cmp = first ? -1 : 0;
    std::size_t pos = 0;
    for (const auto& r : rho) {
      for (int i = 0; i < p; ++i, ++pos) {
        const char v = static_cast<char>(
            pi[static_cast<std::size_t>(r[static_cast<std::size_t>(pinv[static_cast<std::size_t>(i)])])]);
        candidate[pos] = v;
        if (cmp == 0) {
          if (v < out.best[pos]) cmp = -1;
          else if (v > out.best[pos]) return;
        }
      }
    }
    if (marked) {
      const char label = static_cast<char>(pi[static_cast<std::size_t>(mark_white)]);
      for (char v : {mark_color, label}) {
        candidate[pos] = v;
        if (cmp == 0) {
          if (v < out.best[pos]) cmp = -1;
          else if (v > out.best[pos]) return;
        }
        ++pos;
      }
    }
    if (cmp < 0) {
      out.best = candidate;
      out.minimizers = 1;
      first = false;
    } else {
      out.minimizers += 1;
    }
  });
  out.best = prefix + out.best;
  return out;
}

}  // namespace detail

/// Isomorphism-class key; relabeling invariant, ignores vertexless loops.
inline GraphKey canonical_form(const ColoredGraph& g) {
  auto s = detail::canonical_search(g, nullptr);
  return GraphKey(std::move(s.best));
}

/// |{(pi, tau) : tau sigma[c] pi^-1 = sigma[c] for all c}|.
inline Integer automorphism_count(const ColoredGraph& g) { return detail::canonical_search(g, nullptr).minimizers; }

/// Key of a graph with one distinguished vertex. The trailing two bytes hold the
/// marked vertex color and its canonical label.
struct MarkedKey {
  GraphKey graph;
  VertexColor color = VertexColor::white;
  int label = 0;

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out = graph.hex();
    for (int b : {static_cast<int>(color), label}) {
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 15]);
    }
    return out;
  }
  auto operator<=>(const MarkedKey&) const = default;
};

inline MarkedKey marked_canonical_form(const ColoredGraph& g, Vertex v) {
  auto s = detail::canonical_search(g, &v);
  const std::size_t n = s.best.size();
  MarkedKey key;
  key.color = static_cast<VertexColor>(s.best[n - 2]);
  key.label = static_cast<unsigned char>(s.best[n - 1]);
  s.best.resize(n - 2);
  key.graph = GraphKey(std::move(s.best));
  return key;
}

/// Size of the stabilizer of v inside the automorphism group.
inline Integer marked_automorphism_count(const ColoredGraph& g, Vertex v) {
  return detail::canonical_search(g, &v).minimizers;
}

/// Vertex of the canonical representative carrying the mark.
inline Vertex marked_vertex_of(const MarkedKey& key) { return Vertex{key.color, key.label}; }

/// One representative (lowest index) per automorphism orbit of vertices of the given color.
inline std::vector<int> orbit_representatives(const ColoredGraph& g, VertexColor color) {
  std::vector<int> reps;
  std::set<MarkedKey> seen;
  for (int i = 0; i < g.order(); ++i)
    if (seen.insert(marked_canonical_form(g, Vertex{color, i})).second) reps.push_back(i);
  return reps;
}

struct Components {
  std::vector<ColoredGraph> graphs;
  int loops = 0;
};

/// Splits g into connected components, each re-indexed in increasing vertex order.
/// Vertexless loops are reported once in `loops`, not attached to any component.
inline Components connected_components(const ColoredGraph& g) {
  const int p = g.order();
  std::vector<int> parent(static_cast<std::size_t>(p));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  // Two whites are joined when they share a black neighbor.
  for (int b = 0; b < p; ++b)
    for (int c = 1; c < g.colors(); ++c) {
      const int a = find(g.white_of(b, 0));
      const int z = find(g.white_of(b, c));
      if (a != z) parent[static_cast<std::size_t>(std::max(a, z))] = std::min(a, z);
    }

  std::vector<int> roots;
  std::vector<std::vector<int>> whites;
  for (int w = 0; w < p; ++w) {
    const int r = find(w);
    auto it = std::find(roots.begin(), roots.end(), r);
    if (it == roots.end()) {
      roots.push_back(r);
      whites.push_back({w});
    } else {
      whites[static_cast<std::size_t>(it - roots.begin())].push_back(w);
    }
  }

  Components out;
  out.loops = g.loops();
  for (const auto& ws : whites) {
    std::vector<int> blacks;
    for (int w : ws) blacks.push_back(g.black_of(w, 0));
    std::sort(blacks.begin(), blacks.end());
    std::vector<Permutation> sigma(static_cast<std::size_t>(g.colors()));
    for (int c = 0; c < g.colors(); ++c)
      for (int w : ws) {
        const int b = g.black_of(w, c);
        sigma[static_cast<std::size_t>(c)].push_back(
            static_cast<int>(std::lower_bound(blacks.begin(), blacks.end(), b) - blacks.begin()));
      }
    out.graphs.emplace_back(g.colors(), std::move(sigma));
  }
  return out;
}

inline bool is_connected(const ColoredGraph& g) { return connected_components(g).graphs.size() == 1; }

/// Vertices of b are shifted past those of a; loops add.
inline ColoredGraph disjoint_union(const ColoredGraph& a, const ColoredGraph& b) {
  if (a.colors() != b.colors()) throw validation_error("dimension mismatch in disjoint union");
  std::vector<Permutation> sigma(static_cast<std::size_t>(a.colors()));
  for (int c = 0; c < a.colors(); ++c) {
    auto& s = sigma[static_cast<std::size_t>(c)];
    s = a.color_map(c);
    for (int x : b.color_map(c)) s.push_back(x + a.order());
  }
  return ColoredGraph(a.colors(), std::move(sigma), a.loops() + b.loops());
}

inline ColoredGraph disjoint_union(const std::vector<ColoredGraph>& parts, int colors) {
  ColoredGraph g = ColoredGraph::empty(colors);
  for (const auto& part : parts) g = disjoint_union(g, part);
  return g;
}

/// Applies white relabeling pi and black relabeling tau: sigma'[c] = tau sigma[c] pi^-1.
inline ColoredGraph relabel(const ColoredGraph& g, const Permutation& pi, const Permutation& tau) {
  const Permutation pinv = inverse(pi);
  std::vector<Permutation> sigma;
  for (const auto& s : g.sigma()) sigma.push_back(compose(tau, compose(s, pinv)));
  return ColoredGraph(g.colors(), std::move(sigma), g.loops());
}

/// All isomorphism classes with 1 <= p <= p_max, sorted by (p, key).
inline std::vector<GraphKey> enumerate_graphs(int colors, int p_max, bool connected_only) {
  if (colors < 1) throw validation_error("D must be >= 1");
  if (p_max < 1) throw validation_error("p_max must be >= 1");
  std::set<GraphKey> found;
  for (int p = 1; p <= p_max; ++p) {
    std::vector<Permutation> all;
    for_each_permutation(p, [&](const Permutation& s) { all.push_back(s); });
    // Every class has a representative whose color-0 map is the identity.
    std::vector<std::size_t> idx(static_cast<std::size_t>(colors - 1), 0);
    while (true) {
      std::vector<Permutation> sigma{identity_permutation(p)};
      for (auto i : idx) sigma.push_back(all[i]);
      ColoredGraph g(colors, std::move(sigma));
      if (!connected_only || is_connected(g)) found.insert(canonical_form(g));
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == all.size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }
  return {found.begin(), found.end()};
}

}  // namespace ctm

#endif  // CTM_COLORED_GRAPH_HPP
