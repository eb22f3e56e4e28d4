#ifndef CTM_WICK_SERIES_HPP
#define CTM_WICK_SERIES_HPP

#include "ctm/colored_graph.hpp"
#include "ctm/series.hpp"
#include "ctm/tensor_eval.hpp"

#include <functional>
#include <map>
#include <memory>
#include <vector>

namespace ctm {

/// Memoized per-class data for one color count. Not thread-safe; use one per worker.
class GraphCatalog {
 public:
  struct Entry {
    ColoredGraph graph;  // canonical representative
    Integer automorphisms;
    bool connected = false;
  };

  explicit GraphCatalog(int colors) : colors_(colors) {
    if (colors < 1) throw validation_error("D must be >= 1");
  }

  int colors() const noexcept { return colors_; }

  GraphKey key_of(const ColoredGraph& g) {
    if (g.colors() != colors_) throw validation_error("dimension mismatch with catalog");
    auto it = keys_.find(g.sigma());
    if (it != keys_.end()) return it->second;
    GraphKey key = canonical_form(g);
    keys_.emplace(g.sigma(), key);
    return key;
  }

  const Entry& info(const GraphKey& key) {
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    if (key.colors() != colors_) throw validation_error("dimension mismatch with catalog");
    Entry e;
    e.graph = graph_from_key(key);
    e.automorphisms = automorphism_count(e.graph);
    e.connected = e.graph.order() > 0 && is_connected(e.graph);
    return entries_.emplace(key, std::move(e)).first->second;
  }

  /// Connected classes with 1 <= p <= p_max, sorted by (p, key).
  const std::vector<GraphKey>& connected_classes(int p_max) {
    auto it = connected_.find(p_max);
    if (it != connected_.end()) return it->second;
    return connected_.emplace(p_max, enumerate_graphs(colors_, p_max, true)).first->second;
  }

  GraphKey dipole() { return key_of(ColoredGraph::dipole(colors_)); }

 private:
  int colors_;
  std::map<std::vector<Permutation>, GraphKey> keys_;
  std::map<GraphKey, Entry> entries_;
  std::map<int, std::vector<GraphKey>> connected_;
};

/// sum over Wick pairings of N^faces (plus N per carried loop).
inline NPolynomial moment_polynomial(const std::vector<ColoredGraph>& graphs, int colors) {
  const ColoredGraph g = disjoint_union(graphs, colors);
  if (g.order() > max_pairing_order)
    throw validation_error("pairing enumeration limited to " + std::to_string(max_pairing_order) + " white vertices");
  std::map<int, Integer> histogram;
  for_each_permutation(g.order(), [&](const Permutation& pairing) { histogram[face_count(g, pairing)] += 1; });
  NPolynomial out;
  for (const auto& [faces, count] : histogram) out.add_term(faces + g.loops(), Rational(count));
  return out;
}

inline NPolynomial moment_polynomial(const std::vector<GraphKey>& keys, GraphCatalog& catalog) {
  std::vector<ColoredGraph> graphs;
  for (const auto& k : keys) graphs.push_back(catalog.info(k).graph);
  return moment_polynomial(graphs, catalog.colors());
}

/// Calls f(multiplicities) for every multiset over `items` (with positive sizes)
/// whose total size is at most `budget`, the empty multiset included.
inline void for_each_multiset(const std::vector<int>& sizes, int budget,
                              const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> mult(sizes.size(), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i == sizes.size()) {
      f(mult);
      return;
    }
    for (int k = 0; k * sizes[i] <= left; ++k) {
      mult[i] = k;
      rec(i + 1, left - k * sizes[i]);
    }
    mult[i] = 0;
  };
  rec(0, budget);
}

/// The coupling variables: connected classes other than the dipole, 2 <= p <= p_max.
/// with_dipole adds the dipole itself as a formal variable.
inline std::vector<GraphKey> coupling_classes(GraphCatalog& catalog, int p_max, bool with_dipole = false) {
  std::vector<GraphKey> out;
  if (p_max < 1) return out;
  for (const auto& k : catalog.connected_classes(p_max))
    if (with_dipole || k.order() >= 2) out.push_back(k);
  return out;
}

/// Z = < exp sum_Gamma (lambda_Gamma / C_Gamma) Tr_Gamma > to total vertex count max_vertices.
/// The dipole is part of the Gaussian measure unless with_dipole makes it a formal variable too.
inline CouplingSeries partition_series(GraphCatalog& catalog, int max_vertices, bool with_dipole = false) {
  if (max_vertices < 2 || max_vertices % 2 != 0) throw validation_error("V_max must be even and >= 2");
  const int p_max = max_vertices / 2;
  const auto keys = coupling_classes(catalog, p_max, with_dipole);
  std::vector<int> sizes;
  for (const auto& k : keys) sizes.push_back(k.order());
  CouplingSeries z(max_vertices);
  for_each_multiset(sizes, p_max, [&](const std::vector<int>& mult) {
    std::vector<ColoredGraph> factors;
    Monomial mono;
    Integer denom = 1;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (mult[i] == 0) continue;
      const auto& e = catalog.info(keys[i]);
      for (int r = 0; r < mult[i]; ++r) factors.push_back(e.graph);
      mono = mono * Monomial(Symbol(keys[i]), mult[i]);
      denom *= ipow(e.automorphisms, mult[i]) * factorial(mult[i]);
    }
    z.add(mono, moment_polynomial(factors, catalog.colors()) * Rational(1, denom));
  });
  return z;
}

inline CouplingSeries partition_series(int colors, int max_vertices, bool with_dipole = false) {
  GraphCatalog catalog(colors);
  return partition_series(catalog, max_vertices, with_dipole);
}

}  // namespace ctm

#endif  // CTM_WICK_SERIES_HPP
