#ifndef CTM_FLOW_HPP
#define CTM_FLOW_HPP

#include "ctm/contraction.hpp"
#include "ctm/series.hpp"
#include "ctm/wick_series.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace ctm {

/// Polynomial in the flow scale t with N-polynomial coefficients.
class TPolynomial {
 public:
  TPolynomial() = default;
  TPolynomial(const NPolynomial& c) { add(0, c); }  // NOLINT: constants convert implicitly

  static TPolynomial power(int k, const NPolynomial& c = NPolynomial(1)) {
    TPolynomial p;
    p.add(k, c);
    return p;
  }

  const std::map<int, NPolynomial>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  int degree() const { return terms_.empty() ? -1 : terms_.rbegin()->first; }
  NPolynomial coefficient(int k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? NPolynomial{} : it->second;
  }

  void add(int k, const NPolynomial& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.emplace(k, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  TPolynomial derivative() const {
    TPolynomial r;
    for (const auto& [k, c] : terms_)
      if (k > 0) r.add(k - 1, c * Rational(k));
    return r;
  }
  TPolynomial truncated(int max_degree) const {
    TPolynomial r;
    for (const auto& [k, c] : terms_)
      if (k <= max_degree) r.add(k, c);
    return r;
  }
  NPolynomial evaluate(const Rational& t) const {
    NPolynomial acc;
    for (const auto& [k, c] : terms_) {
      Rational tk = 1;
      for (int i = 0; i < k; ++i) tk *= t;
      acc += c * tk;
    }
    return acc;
  }
  double evaluate(double n, double t) const {
    double acc = 0;
    for (const auto& [k, c] : terms_) {
      double cn = 0;
      for (const auto& [e, q] : c.terms()) cn += static_cast<double>(q) * std::pow(n, e);
      acc += cn * std::pow(t, k);
    }
    return acc;
  }

  TPolynomial& operator+=(const TPolynomial& o) {
    for (const auto& [k, c] : o.terms_) add(k, c);
    return *this;
  }
  TPolynomial& operator-=(const TPolynomial& o) {
    for (const auto& [k, c] : o.terms_) add(k, -c);
    return *this;
  }
  friend TPolynomial operator+(TPolynomial a, const TPolynomial& b) { return a += b; }
  friend TPolynomial operator-(TPolynomial a, const TPolynomial& b) { return a -= b; }
  friend TPolynomial operator*(const TPolynomial& a, const TPolynomial& b) {
    TPolynomial r;
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) r.add(ka + kb, ca * cb);
    return r;
  }
  friend TPolynomial operator*(const NPolynomial& s, const TPolynomial& a) {
    TPolynomial r;
    for (const auto& [k, c] : a.terms_) r.add(k, s * c);
    return r;
  }
  friend bool operator==(const TPolynomial& a, const TPolynomial& b) { return a.terms_ == b.terms_; }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [k, c] : terms_) {
      if (!out.empty()) out += " + ";
      out += "(" + c.str() + ")";
      if (k > 0) out += "*t" + (k > 1 ? "^" + std::to_string(k) : std::string());
    }
    return out;
  }

 private:
  std::map<int, NPolynomial> terms_;
};

/// Key of the graph with no vertices; its coupling is the field-independent part.
inline GraphKey empty_graph_key(int colors) { return canonical_form(ColoredGraph::empty(colors)); }

/// Bare couplings lambda_Gamma of S0 = sum_Gamma lambda_Gamma / C_Gamma Tr_Gamma.
using Seed = std::map<GraphKey, NPolynomial>;

/// Couplings of S_t[T] = -log E_Q exp(-S0[T + Q]), <Q Qbar> = t, on every graph class
/// (connected or not, plus the empty graph) with at most max_vertices / 2 pairs.
/// Terms are kept while the seed vertex pairs used sum to at most max_vertices / 2,
/// so lambda_Gamma carries t^j only for p_Gamma + j <= max_vertices / 2.
struct EffectiveCouplings {
  int colors = 0;
  int max_vertices = 0;
  std::map<GraphKey, TPolynomial> couplings;

  int max_order() const noexcept { return max_vertices / 2; }
  TPolynomial at(const GraphKey& key) const {
    auto it = couplings.find(key);
    return it == couplings.end() ? TPolynomial{} : it->second;
  }
};

namespace detail {

/// Canonical keys with a cache; the flow code canonicalizes the same graphs many times.
class KeyCache {
 public:
  const GraphKey& key(const ColoredGraph& g) {
    auto [it, inserted] = cache_.try_emplace(g.sigma());
    if (inserted) it->second = canonical_form(g);
    return it->second;
  }

 private:
  std::map<std::vector<Permutation>, GraphKey> cache_;
};

/// Calls f(residual graph, pairs) for every partial Wick pairing of whites with blacks
/// in g; the paired vertices are removed and their half-edges joined.
inline void for_each_partial_pairing(const ColoredGraph& g, const std::function<void(const ColoredGraph&, int)>& f) {
  const int p = g.order();
  const int d = g.colors();
  std::vector<int> pair_of_black(static_cast<std::size_t>(p), -1);  // black -> paired white
  std::vector<char> white_used(static_cast<std::size_t>(p), 0);

  auto emit = [&](int pairs) {
    std::vector<int> wmap(static_cast<std::size_t>(p), -1), bmap(static_cast<std::size_t>(p), -1);
    int nw = 0, nb = 0;
    for (int w = 0; w < p; ++w)
      if (!white_used[static_cast<std::size_t>(w)]) wmap[static_cast<std::size_t>(w)] = nw++;
    for (int b = 0; b < p; ++b)
      if (pair_of_black[static_cast<std::size_t>(b)] < 0) bmap[static_cast<std::size_t>(b)] = nb++;
    int loops = g.loops();
    std::vector<Permutation> sigma(static_cast<std::size_t>(d), Permutation(static_cast<std::size_t>(nw)));
    for (int c = 0; c < d; ++c) {
      std::vector<char> seen(static_cast<std::size_t>(p), 0);
      for (int w = 0; w < p; ++w) {
        if (white_used[static_cast<std::size_t>(w)]) continue;
        int b = g.black_of(w, c);
        while (pair_of_black[static_cast<std::size_t>(b)] >= 0) {
          const int a = pair_of_black[static_cast<std::size_t>(b)];
          seen[static_cast<std::size_t>(a)] = 1;
          b = g.black_of(a, c);
        }
        sigma[static_cast<std::size_t>(c)][static_cast<std::size_t>(wmap[static_cast<std::size_t>(w)])] =
            bmap[static_cast<std::size_t>(b)];
      }
      // Chains that never reach an unpaired vertex close into loops.
      for (int a = 0; a < p; ++a) {
        if (!white_used[static_cast<std::size_t>(a)] || seen[static_cast<std::size_t>(a)]) continue;
        ++loops;
        int x = a;
        do {
          seen[static_cast<std::size_t>(x)] = 1;
          x = pair_of_black[static_cast<std::size_t>(g.black_of(x, c))];
        } while (x != a);
      }
    }
    f(ColoredGraph(d, std::move(sigma), loops), pairs);
  };

  // Whites in increasing order either stay or pair with a free black.
  std::function<void(int, int)> rec = [&](int w, int pairs) {
    if (w == p) {
      emit(pairs);
      return;
    }
    rec(w + 1, pairs);
    white_used[static_cast<std::size_t>(w)] = 1;
    for (int b = 0; b < p; ++b) {
      if (pair_of_black[static_cast<std::size_t>(b)] >= 0) continue;
      pair_of_black[static_cast<std::size_t>(b)] = w;
      rec(w + 1, pairs + 1);
      pair_of_black[static_cast<std::size_t>(b)] = -1;
    }
    white_used[static_cast<std::size_t>(w)] = 0;
  };
  rec(0, 0);
}

inline void check_flow_truncation(int colors, int max_vertices) {
  if (colors < 1) throw validation_error("D must be >= 1");
  if (max_vertices < 2 || max_vertices % 2 != 0) throw validation_error("V_max must be even and >= 2");
  if (max_vertices / 2 > max_canonical_order) throw validation_error("V_max too large for canonical forms");
}

}  // namespace detail

/// Wick expansion of E_Q exp(-S0[T + Q]) in background traces, then -log.
/// linear_only keeps the part linear in the seed, where -log reduces to minus the mean.
inline EffectiveCouplings effective_couplings(int colors, int max_vertices, const Seed& seed, bool linear_only = false) {
  detail::check_flow_truncation(colors, max_vertices);
  const int p_max = max_vertices / 2;
  const GraphKey empty = empty_graph_key(colors);

  std::vector<GraphKey> keys;
  std::vector<int> sizes;
  std::vector<NPolynomial> weights;  // -lambda / C
  std::vector<ColoredGraph> graphs;
  for (const auto& [key, value] : seed) {
    if (key.colors() != colors) throw validation_error("seed graph " + key.hex() + " has wrong D");
    if (key == empty || value.is_zero()) continue;
    if (key.order() > p_max) throw validation_error("seed graph " + key.hex() + " exceeds V_max");
    auto g = graph_from_key(key);
    keys.push_back(key);
    sizes.push_back(key.order());
    weights.push_back(value * Rational(-1, Integer(automorphism_count(g))));
    graphs.push_back(std::move(g));
  }

  detail::KeyCache cache;
  const Symbol t = Symbol::scale();
  CouplingSeries e(max_vertices);
  for_each_multiset(sizes, p_max, [&](const std::vector<int>& mult) {
    int factors = 0;
    NPolynomial weight(1);
    std::vector<ColoredGraph> parts;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      factors += mult[i];
      for (int r = 0; r < mult[i]; ++r) {
        weight *= weights[i];
        parts.push_back(graphs[i]);
      }
      weight *= Rational(1, factorial(mult[i]));
    }
    if (linear_only && factors > 1) return;
    const auto u = disjoint_union(parts, colors);
    detail::for_each_partial_pairing(u, [&](const ColoredGraph& r, int pairs) {
      auto comps = connected_components(r);
      Monomial m(t, pairs);
      for (const auto& c : comps.graphs) m = m * Monomial(Symbol(cache.key(c)));
      e.add(m, weight * NPolynomial::monomial(comps.loops));
    });
  });

  const CouplingSeries s = linear_only ? e - CouplingSeries::constant(1, max_vertices) : log_series(e);

  EffectiveCouplings out;
  out.colors = colors;
  out.max_vertices = max_vertices;
  for (const auto& [m, c] : s.terms()) {
    std::vector<ColoredGraph> parts;
    Integer sym = 1;
    for (const auto& [sym_, k] : m.factors()) {
      if (sym_.is_scale()) continue;
      const auto g = graph_from_key(sym_.graph());
      for (int r = 0; r < k; ++r) parts.push_back(g);
      sym *= ipow(automorphism_count(g), k) * factorial(k);
    }
    const auto key = cache.key(disjoint_union(parts, colors));
    out.couplings[key].add(m.power(t), c * Rational(-sym));
  }
  if (auto it = seed.find(empty); it != seed.end()) out.couplings[empty].add(0, it->second);
  std::erase_if(out.couplings, [](const auto& kv) { return kv.second.is_zero(); });
  return out;
}

enum class SplitMode {
  marked,         // the w' side and the b' side are fixed, other components go either way
  all_ordered,    // every ordered split of the components into two nonempty parts
  all_unordered,  // every unordered split once
};

inline std::string to_string(SplitMode m) {
  switch (m) {
    case SplitMode::marked: return "marked";
    case SplitMode::all_ordered: return "all_ordered";
    default: return "all_unordered";
  }
}

struct FlowConvention {
  bool include_k0 = true;  // the cut with no edges, i.e. Gamma plus a disjoint dipole
  int quadratic_sign = -1;
  SplitMode split = SplitMode::marked;

  std::string str() const {
    return std::string("k0=") + (include_k0 ? "on" : "off") + " sign=" + (quadratic_sign < 0 ? "-" : "+") +
           " split=" + to_string(split);
  }
  friend bool operator==(const FlowConvention&, const FlowConvention&) = default;
};

/// Right-hand side of d lambda_Gamma / dt in terms of other couplings:
///   sum_k N^(D-k) lambda_(edge_cut) + sign * sum lambda_Gamma1 lambda_Gamma2.
struct FlowTerms {
  struct Linear {
    GraphKey target;
    int n_power;
    Integer multiplicity;
  };
  struct Quadratic {
    GraphKey first;
    GraphKey second;
    Integer multiplicity;
  };
  std::vector<Linear> linear;
  std::vector<Quadratic> quadratic;
  std::vector<GraphKey> dropped;  // cut images beyond the truncation
};

namespace detail {

inline void add_linear(FlowTerms& t, const GraphKey& key, int n_power) {
  for (auto& l : t.linear)
    if (l.target == key && l.n_power == n_power) {
      ++l.multiplicity;
      return;
    }
  t.linear.push_back({key, n_power, 1});
}

inline void add_quadratic(FlowTerms& t, const GraphKey& a, const GraphKey& b) {
  for (auto& q : t.quadratic)
    if (q.first == a && q.second == b) {
      ++q.multiplicity;
      return;
    }
  t.quadratic.push_back({a, b, 1});
}

/// Component index of every white vertex.
inline std::vector<int> white_components(const ColoredGraph& g, int& count) {
  const int p = g.order();
  std::vector<int> comp(static_cast<std::size_t>(p), -1);
  count = 0;
  for (int s = 0; s < p; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> stack{s};
    comp[static_cast<std::size_t>(s)] = count;
    while (!stack.empty()) {
      const int w = stack.back();
      stack.pop_back();
      for (int c = 0; c < g.colors(); ++c) {
        const int b = g.black_of(w, c);
        for (int c2 = 0; c2 < g.colors(); ++c2) {
          const int x = g.white_of(b, c2);
          if (comp[static_cast<std::size_t>(x)] < 0) {
            comp[static_cast<std::size_t>(x)] = count;
            stack.push_back(x);
          }
        }
      }
    }
    ++count;
  }
  return comp;
}

/// Subgraph on the components selected by mask.
inline ColoredGraph select_components(const ColoredGraph& g, const std::vector<int>& comp, unsigned mask) {
  const int p = g.order();
  std::vector<int> whites, blacks;
  for (int w = 0; w < p; ++w)
    if (mask >> comp[static_cast<std::size_t>(w)] & 1u) whites.push_back(w);
  for (int w : whites) blacks.push_back(g.black_of(w, 0));
  std::sort(blacks.begin(), blacks.end());
  std::vector<Permutation> sigma(static_cast<std::size_t>(g.colors()));
  for (int c = 0; c < g.colors(); ++c)
    for (int w : whites)
      sigma[static_cast<std::size_t>(c)].push_back(
          static_cast<int>(std::lower_bound(blacks.begin(), blacks.end(), g.black_of(w, c)) - blacks.begin()));
  return ColoredGraph(g.colors(), std::move(sigma));
}

}  // namespace detail

/// Collects the flow terms of one graph class. Linear images with more than max_order
/// pairs are listed in `dropped` instead.
inline FlowTerms flow_terms(const GraphKey& key, int max_order, const FlowConvention& conv = {},
                            detail::KeyCache* cache = nullptr) {
  detail::KeyCache local;
  if (!cache) cache = &local;
  const auto g = graph_from_key(key);
  const int d = g.colors();
  const int p = g.order();
  FlowTerms out;
  for (int k = conv.include_k0 ? 0 : 1; k <= d; ++k)
    for (const auto& cut : enumerate_cuts(g, k)) {
      const auto h = edge_cut(g, cut);
      if (p + 1 > max_order) {
        out.dropped.push_back(cache->key(h));
        continue;
      }
      detail::add_linear(out, cache->key(h), d - k);
    }
  if (conv.quadratic_sign == 0) return out;
  for (const auto& cut : enumerate_cuts(g, d)) {
    const auto h = edge_cut(g, cut);
    int n = 0;
    const auto comp = detail::white_components(h, n);
    const int cw = comp[static_cast<std::size_t>(p)];                // holds w'
    const int cb = comp[static_cast<std::size_t>(h.white_of(p, 0))];  // holds b'
    const unsigned all = (1u << n) - 1;
    if (conv.split == SplitMode::marked) {
      if (cw == cb) continue;
      for (unsigned mask = 0; mask <= all; ++mask) {
        if (!(mask >> cw & 1u) || (mask >> cb & 1u)) continue;
        detail::add_quadratic(out, cache->key(detail::select_components(h, comp, mask)),
                              cache->key(detail::select_components(h, comp, all & ~mask)));
      }
    } else {
      for (unsigned mask = 1; mask < all; ++mask) {
        if (conv.split == SplitMode::all_unordered && (mask & 1u)) continue;
        detail::add_quadratic(out, cache->key(detail::select_components(h, comp, mask)),
                              cache->key(detail::select_components(h, comp, all & ~mask)));
      }
    }
  }
  return out;
}

/// Evaluates the flow right-hand side on exact effective couplings.
inline TPolynomial flow_rhs(const EffectiveCouplings& lambda, const FlowTerms& terms, const FlowConvention& conv = {}) {
  TPolynomial out;
  for (const auto& l : terms.linear)
    out += NPolynomial::monomial(l.n_power, Rational(l.multiplicity)) * lambda.at(l.target);
  for (const auto& q : terms.quadratic)
    out += NPolynomial(Rational(q.multiplicity * conv.quadratic_sign)) * (lambda.at(q.first) * lambda.at(q.second));
  return out;
}

/// Every graph class with at most p_max pairs, the empty graph first.
inline std::vector<GraphKey> all_graph_classes(int colors, int p_max) {
  std::vector<GraphKey> out{empty_graph_key(colors)};
  if (p_max >= 1)
    for (auto& k : enumerate_graphs(colors, p_max, false)) out.push_back(std::move(k));
  return out;
}

struct FlowReport {
  FlowConvention convention;
  int checked = 0;                                    // graph classes compared
  std::map<GraphKey, TPolynomial> residuals;          // nonzero d lambda/dt - rhs
  std::map<GraphKey, std::vector<GraphKey>> dropped;  // top-order classes whose rhs leaves the truncation
  bool ok() const { return residuals.empty(); }
};

/// Compares d lambda_Gamma / dt with the flow right-hand side on every class with
/// p < max_order, on the t-degrees the truncation keeps complete (p + j < max_order).
inline FlowReport verify_flow(const EffectiveCouplings& lambda, const FlowConvention& conv = {}) {
  const int pm = lambda.max_order();
  FlowReport rep;
  rep.convention = conv;
  detail::KeyCache cache;
  for (const auto& key : all_graph_classes(lambda.colors, pm)) {
    const auto terms = flow_terms(key, pm, conv, &cache);
    if (key.order() == pm) {
      if (!terms.dropped.empty()) rep.dropped[key] = terms.dropped;
      continue;
    }
    const int keep = pm - key.order() - 1;
    const auto diff = lambda.at(key).derivative().truncated(keep) - flow_rhs(lambda, terms, conv).truncated(keep);
    ++rep.checked;
    if (!diff.is_zero()) rep.residuals[key] = diff;
  }
  return rep;
}

/// Every combination of the conventions the flow derivation leaves open.
inline std::vector<FlowConvention> flow_conventions() {
  std::vector<FlowConvention> out;
  for (bool k0 : {true, false})
    for (int sign : {-1, 1})
      for (auto split : {SplitMode::marked, SplitMode::all_ordered, SplitMode::all_unordered})
        out.push_back({k0, sign, split});
  return out;
}

/// Conventions under which the flow holds for every seed.
inline std::vector<FlowConvention> search_conventions(const std::vector<EffectiveCouplings>& cases) {
  std::vector<FlowConvention> out;
  for (const auto& conv : flow_conventions()) {
    bool ok = true;
    for (const auto& c : cases) ok = ok && verify_flow(c, conv).ok();
    if (ok) out.push_back(conv);
  }
  return out;
}

/// Numeric couplings at scale t.
struct FlowState {
  double t = 0;
  std::map<GraphKey, double> couplings;
};

/// The flow truncated to graph classes with at most max_vertices / 2 pairs, at a fixed
/// numeric N. Linear terms leaving the truncation are dropped and listed.
class FlowSystem {
 public:
  FlowSystem(int colors, int max_vertices, double n, const FlowConvention& conv = {}) : colors_(colors) {
    detail::check_flow_truncation(colors, max_vertices);
    const int pm = max_vertices / 2;
    keys_ = all_graph_classes(colors, pm);
    for (std::size_t i = 0; i < keys_.size(); ++i) index_.emplace(keys_[i], i);
    detail::KeyCache cache;
    rows_.resize(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      const auto terms = flow_terms(keys_[i], pm, conv, &cache);
      if (!terms.dropped.empty()) dropped_[keys_[i]] = terms.dropped;
      for (const auto& l : terms.linear)
        rows_[i].linear.emplace_back(index_.at(l.target), static_cast<double>(l.multiplicity) * std::pow(n, l.n_power));
      for (const auto& q : terms.quadratic)
        rows_[i].quadratic.emplace_back(index_.at(q.first), index_.at(q.second),
                                        static_cast<double>(q.multiplicity) * conv.quadratic_sign);
    }
  }

  int colors() const noexcept { return colors_; }
  const std::vector<GraphKey>& keys() const noexcept { return keys_; }
  const std::map<GraphKey, std::vector<GraphKey>>& dropped() const noexcept { return dropped_; }

  std::vector<double> rhs(const std::vector<double>& x) const {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      double acc = 0;
      for (const auto& [j, c] : rows_[i].linear) acc += c * x[j];
      for (const auto& [a, b, c] : rows_[i].quadratic) acc += c * x[a] * x[b];
      out[i] = acc;
    }
    return out;
  }

  std::vector<double> pack(const FlowState& s) const {
    std::vector<double> x(keys_.size(), 0.0);
    for (const auto& [k, v] : s.couplings) {
      auto it = index_.find(k);
      if (it == index_.end()) throw validation_error("coupling " + k.hex() + " lies outside the truncation");
      x[it->second] = v;
    }
    return x;
  }
  FlowState unpack(double t, const std::vector<double>& x) const {
    FlowState s;
    s.t = t;
    for (std::size_t i = 0; i < keys_.size(); ++i) s.couplings.emplace(keys_[i], x[i]);
    return s;
  }

 private:
  struct Row {
    std::vector<std::pair<std::size_t, double>> linear;
    std::vector<std::tuple<std::size_t, std::size_t, double>> quadratic;
  };
  int colors_;
  std::vector<GraphKey> keys_;
  std::map<GraphKey, std::size_t> index_;
  std::vector<Row> rows_;
  std::map<GraphKey, std::vector<GraphKey>> dropped_;
};

struct Trajectory {
  std::vector<FlowState> states;  // start plus one state per completed step
  bool aborted = false;           // a non-finite value appeared; states ends at the last good one
};

/// Classical fixed-step RK4 from start.t to t_end.
inline Trajectory integrate_flow(const FlowSystem& sys, const FlowState& start, double t_end, int steps) {
  if (steps < 1) throw validation_error("steps must be positive");
  if (!std::isfinite(t_end)) throw validation_error("t_end must be finite");
  const double h = (t_end - start.t) / steps;
  auto x = sys.pack(start);
  Trajectory out;
  out.states.push_back(sys.unpack(start.t, x));
  auto axpy = [](const std::vector<double>& a, double s, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  for (int i = 1; i <= steps; ++i) {
    const auto k1 = sys.rhs(x);
    const auto k2 = sys.rhs(axpy(x, h / 2, k1));
    const auto k3 = sys.rhs(axpy(x, h / 2, k2));
    const auto k4 = sys.rhs(axpy(x, h, k3));
    std::vector<double> next(x.size());
    bool finite = true;
    for (std::size_t j = 0; j < x.size(); ++j) {
      next[j] = x[j] + h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
      finite = finite && std::isfinite(next[j]);
    }
    if (!finite) {
      out.aborted = true;
      break;
    }
    x = std::move(next);
    out.states.push_back(sys.unpack(start.t + i * h, x));
  }
  return out;
}

/// D = 2 necklace: a single cycle of length k.
inline ColoredGraph necklace_graph(int k) {
  if (k < 1) throw validation_error("necklace length must be >= 1");
  Permutation cyc(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) cyc[static_cast<std::size_t>(i)] = (i + 1) % k;
  return ColoredGraph(2, {identity_permutation(k), cyc});
}

/// Multi-trace matrix coupling: n_k necklaces of length k.
struct MatrixModeEntry {
  std::map<int, int> necklaces;  // k -> n_k, zero counts omitted
  GraphKey key;
  Integer symmetry_factor;  // prod k^n_k n_k!
  Integer automorphisms;    // of the disjoint union
  TPolynomial coupling;
  bool consistent() const { return symmetry_factor == automorphisms; }
};

/// Every multiset with sum k n_k <= max_size, smallest total first.
inline std::vector<MatrixModeEntry> necklace_multisets(int max_size) {
  std::vector<MatrixModeEntry> out;
  std::vector<int> sizes;
  for (int k = 1; k <= max_size; ++k) sizes.push_back(k);
  for_each_multiset(sizes, max_size, [&](const std::vector<int>& mult) {
    MatrixModeEntry e;
    e.symmetry_factor = 1;
    std::vector<ColoredGraph> parts;
    for (std::size_t i = 0; i < mult.size(); ++i) {
      const int k = sizes[i];
      if (mult[i] == 0) continue;
      e.necklaces[k] = mult[i];
      e.symmetry_factor *= ipow(k, mult[i]) * factorial(mult[i]);
      for (int r = 0; r < mult[i]; ++r) parts.push_back(necklace_graph(k));
    }
    const auto g = disjoint_union(parts, 2);
    e.key = canonical_form(g);
    e.automorphisms = automorphism_count(g);
    out.push_back(std::move(e));
  });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key.order() < b.key.order(); });
  return out;
}

/// Re-indexes D = 2 effective couplings by necklace multisets. Every multiset within
/// the truncation is listed, with a zero coupling where none was generated.
inline std::vector<MatrixModeEntry> matrix_mode_expand(const EffectiveCouplings& lambda) {
  if (lambda.colors != 2) throw validation_error("matrix modes need D = 2");
  auto out = necklace_multisets(lambda.max_order());
  for (auto& e : out) e.coupling = lambda.at(e.key);
  return out;
}

}  // namespace ctm

#endif  // CTM_FLOW_HPP
