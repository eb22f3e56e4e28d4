#ifndef CTM_SCHWINGER_DYSON_HPP
#define CTM_SCHWINGER_DYSON_HPP

#include "ctm/contraction.hpp"
#include "ctm/wick_series.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctm {

/// Which generating function a constraint is applied to.
enum class SeriesTarget { z, w };

/// eliminated: the dipole is the Gaussian measure, and a dipole trace acts as
/// N^D plus the vertex-pair count (exact on expectations, the default).
/// variable: the dipole coupling is a formal variable like any other, so every
/// trace acts as a derivative; this is the representation in which brackets close.
enum class DipoleMode { eliminated, variable };

/// One white vertex's worth of Jacobian: the pieces of Γ₀/v̄₀v.
struct JacobianTerm {
  std::vector<GraphKey> couplings;  // non-dipole components, sorted
  int dipoles = 0;
  int loops = 0;
  Integer multiplicity = 1;  // white vertices giving this same term

  bool same_shape(const JacobianTerm& o) const {
    return couplings == o.couplings && dipoles == o.dipoles && loops == o.loops;
  }
};

/// L_(Γ₀, v̄₀), with v̄₀ moved to its canonical orbit representative.
class ConstraintOperator {
 public:
  ConstraintOperator(const ColoredGraph& g0, int vbar0, GraphCatalog& catalog) {
    if (g0.colors() != catalog.colors()) throw validation_error("dimension mismatch with catalog");
    if (vbar0 < 0 || vbar0 >= g0.order()) throw validation_error("black vertex out of range");
    if (!is_connected(g0)) throw validation_error("constraint graph must be connected");
    id_ = marked_canonical_form(g0.with_loops(0), Vertex{VertexColor::black, vbar0});
    base_ = graph_from_key(id_.graph);
    vbar_ = id_.label;
    automorphisms_ = catalog.info(id_.graph).automorphisms;
    const GraphKey dip = catalog.dipole();
    dipole_ = id_.graph == dip;

    for (int v = 0; v < base_.order(); ++v) {
      auto r = contract(base_, v, vbar_);
      auto comps = connected_components(r.graph);
      JacobianTerm t;
      t.loops = r.new_loops + comps.loops;
      for (const auto& c : comps.graphs) {
        auto k = catalog.key_of(c);
        if (k == dip) ++t.dipoles;
        else t.couplings.push_back(k);
      }
      std::sort(t.couplings.begin(), t.couplings.end());
      auto it = std::find_if(jacobian_.begin(), jacobian_.end(), [&](const auto& u) { return u.same_shape(t); });
      if (it == jacobian_.end()) jacobian_.push_back(std::move(t));
      else it->multiplicity += 1;
    }
  }

  ConstraintOperator(const MarkedKey& key, GraphCatalog& catalog)
      : ConstraintOperator(graph_from_key(key.graph), key.label, catalog) {
    if (key.color != VertexColor::black) throw validation_error("constraint operators are marked on a black vertex");
  }

  const MarkedKey& id() const noexcept { return id_; }
  const ColoredGraph& base() const noexcept { return base_; }
  int marked() const noexcept { return vbar_; }
  int colors() const noexcept { return base_.colors(); }
  int order() const noexcept { return base_.order(); }
  bool is_dipole() const noexcept { return dipole_; }
  const Integer& automorphisms() const noexcept { return automorphisms_; }
  const std::vector<JacobianTerm>& jacobian() const noexcept { return jacobian_; }

  /// (Γ₀Γ)/v̄₀v for every white v of Γ, grouped by class.
  const std::map<GraphKey, Integer>& insertions(const GraphKey& gamma, GraphCatalog& catalog) const {
    auto it = insertion_cache_.find(gamma);
    if (it != insertion_cache_.end()) return it->second;
    std::map<GraphKey, Integer> out;
    const auto& g = catalog.info(gamma).graph;
    for (int v = 0; v < g.order(); ++v) out[catalog.key_of(glue_and_contract(base_, vbar_, g, v))] += 1;
    return insertion_cache_.emplace(gamma, std::move(out)).first->second;
  }

 private:
  MarkedKey id_;
  ColoredGraph base_;
  int vbar_ = 0;
  Integer automorphisms_ = 1;
  bool dipole_ = false;
  std::vector<JacobianTerm> jacobian_;
  mutable std::map<GraphKey, std::map<GraphKey, Integer>> insertion_cache_;
};

/// The three pieces of the constraint; residual = jacobian - action + insertion.
struct ConstraintTerms {
  CouplingSeries jacobian;
  CouplingSeries action;
  CouplingSeries insertion;
  CouplingSeries residual() const { return jacobian - action + insertion; }
};

namespace detail {

inline int max_symbol_order(const CouplingSeries& s) {
  int p = 0;
  for (const auto& [m, c] : s.terms())
    for (const auto& [sym, k] : m.factors())
      if (!sym.is_scale()) p = std::max(p, sym.graph().order());
  return p;
}

// prod_{j<k} (N^D + shift + j)
inline NPolynomial rising_dipole_factor(int colors, int shift, int k) {
  NPolynomial out(1);
  for (int j = 0; j < k; ++j) out = out * (NPolynomial::monomial(colors) + NPolynomial(Rational(shift + j)));
  return out;
}

}  // namespace detail

/// Applies the operator to S. Output terms above out_weight are dropped; the
/// caller decides how far the result is complete.
inline ConstraintTerms apply_constraint(const ConstraintOperator& op, const CouplingSeries& s, int out_weight,
                                        GraphCatalog& catalog, DipoleMode mode = DipoleMode::eliminated) {
  if (op.colors() != catalog.colors()) throw validation_error("dimension mismatch with catalog");
  const int d = op.colors();
  const bool eliminated = mode == DipoleMode::eliminated;
  ConstraintTerms out{CouplingSeries(out_weight), CouplingSeries(out_weight), CouplingSeries(out_weight)};

  const GraphKey dip = catalog.dipole();
  for (const auto& t : op.jacobian()) {
    CouplingSeries cur = s;
    int shift = 0;
    auto take = [&](const GraphKey& k) {
      cur = differentiate(cur, k) * NPolynomial(Rational(catalog.info(k).automorphisms));
      shift += k.order();
    };
    for (const auto& k : t.couplings) take(k);
    if (!eliminated)
      for (int j = 0; j < t.dipoles; ++j) take(dip);
    const NPolynomial scale = NPolynomial::monomial(t.loops, Rational(t.multiplicity));
    const int dipoles = eliminated ? t.dipoles : 0;
    for (const auto& [m, c] : cur.terms())
      out.jacobian.add(m, c * scale * detail::rising_dipole_factor(d, shift + m.weight() / 2, dipoles));
  }

  if (op.is_dipole() && eliminated) {
    for (const auto& [m, c] : s.terms())
      out.action.add(m, c * (NPolynomial::monomial(d) + NPolynomial(Rational(m.weight() / 2))));
  } else {
    const auto ds = differentiate(s, op.id().graph);
    for (const auto& [m, c] : ds.terms()) out.action.add(m, c * Rational(op.automorphisms()));
  }

  const int p_limit = std::min(out_weight / 2, detail::max_symbol_order(s) - op.order() + 1);
  for (const auto& gamma : coupling_classes(catalog, p_limit, !eliminated)) {
    const Monomial lam{Symbol(gamma)};
    const Rational c_gamma(catalog.info(gamma).automorphisms);
    for (const auto& [g, count] : op.insertions(gamma, catalog)) {
      if (g.order() > detail::max_symbol_order(s)) continue;
      const Rational w = Rational(count) * Rational(catalog.info(g).automorphisms) / c_gamma;
      const auto ds = differentiate(s, g);
      for (const auto& [m, c] : ds.terms()) out.insertion.add(lam * m, c * w);
    }
  }
  return out;
}

/// Series form: the result is complete up to weight max_weight(S) - 2p₀.
inline CouplingSeries constraint_action(const ConstraintOperator& op, const CouplingSeries& s, GraphCatalog& catalog,
                                        DipoleMode mode = DipoleMode::eliminated) {
  return apply_constraint(op, s, s.max_weight() - 2 * op.order(), catalog, mode).residual();
}

/// The generating function to test against, at total vertex order v_max.
inline CouplingSeries generating_function(GraphCatalog& catalog, int v_max, SeriesTarget target) {
  auto z = partition_series(catalog, v_max);
  return target == SeriesTarget::z ? z : log_series(z);
}

/// Residual of the constraint on Z (or W) built to order v_max; zero when the identity holds.
inline CouplingSeries verify_constraint(const ConstraintOperator& op, int v_max, GraphCatalog& catalog,
                                        SeriesTarget target = SeriesTarget::z) {
  return constraint_action(op, generating_function(catalog, v_max, target), catalog);
}

inline CouplingSeries verify_constraint(const GraphKey& g0, int vbar0, int colors, int v_max,
                                        SeriesTarget target = SeriesTarget::z) {
  if (g0.colors() != colors) throw validation_error("dimension mismatch");
  GraphCatalog catalog(colors);
  ConstraintOperator op(graph_from_key(g0), vbar0, catalog);
  return verify_constraint(op, v_max, catalog, target);
}

/// Every (connected Γ₀ with p <= p_max, black orbit) operator, sorted by id.
inline std::vector<ConstraintOperator> constraint_operators(GraphCatalog& catalog, int p_max,
                                                            bool include_dipole = true) {
  std::vector<ConstraintOperator> out;
  for (const auto& key : catalog.connected_classes(p_max)) {
    if (!include_dipole && key.order() == 1) continue;
    const auto& g = catalog.info(key).graph;
    for (int b : orbit_representatives(g, VertexColor::black)) out.emplace_back(g, b, catalog);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id() < b.id(); });
  return out;
}

// ---------------------------------------------------------------- Lie bracket

using OperatorCombination = std::map<MarkedKey, NPolynomial>;

inline void accumulate(OperatorCombination& c, const MarkedKey& k, const NPolynomial& x) {
  auto& slot = c[k];
  slot += x;
  if (slot.is_zero()) c.erase(k);
}

/// [L_a, L_b] predicted by gluing: + sum over whites v of Γ_a of ((Γ_bΓ_a)/v̄_b v, v̄_a)
/// minus the same with a and b swapped. (Operators on couplings compose in the
/// opposite order to the field transformations they come from.)
inline OperatorCombination glue_bracket(const MarkedKey& a, const MarkedKey& b) {
  OperatorCombination out;
  auto half = [&](const MarkedKey& x, const MarkedKey& y, int sign) {
    const auto gx = graph_from_key(x.graph);
    const auto gy = graph_from_key(y.graph);
    const auto u = disjoint_union(gx, gy);
    for (int v = 0; v < gy.order(); ++v) {
      const auto g = contract(u, gx.order() + v, x.label).graph;
      const int mark = gx.order() + y.label - 1;  // black of y shifted past the removed one
      accumulate(out, marked_canonical_form(g, Vertex{VertexColor::black, mark}), NPolynomial(sign));
    }
  };
  half(b, a, 1);
  half(a, b, -1);
  return out;
}

inline OperatorCombination bracket_combinations(const OperatorCombination& x, const OperatorCombination& y) {
  OperatorCombination out;
  for (const auto& [a, ca] : x)
    for (const auto& [b, cb] : y)
      for (const auto& [k, c] : glue_bracket(a, b)) accumulate(out, k, c * ca * cb);
  return out;
}

namespace detail {

// Incremental reduced row echelon form over Q; the last column is the right-hand side.
class RationalSystem {
 public:
  explicit RationalSystem(std::size_t unknowns) : n_(unknowns) {}

  void add_row(std::vector<Rational> row) {
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const Rational f = row[pivots_[k]];
      if (f != 0)
        for (std::size_t j = 0; j <= n_; ++j) row[j] -= f * rows_[k][j];
    }
    std::size_t pc = 0;
    while (pc < n_ && row[pc] == 0) ++pc;
    if (pc == n_) {
      if (row[n_] != 0) inconsistent_ = true;
      return;
    }
    const Rational inv = 1 / row[pc];
    for (auto& x : row) x *= inv;
    for (auto& r : rows_) {
      const Rational f = r[pc];
      if (f != 0)
        for (std::size_t j = 0; j <= n_; ++j) r[j] -= f * row[j];
    }
    rows_.push_back(std::move(row));
    pivots_.push_back(pc);
  }

  bool consistent() const noexcept { return !inconsistent_; }
  std::size_t rank() const noexcept { return rows_.size(); }
  std::vector<Rational> solution() const {  // free unknowns set to 0
    std::vector<Rational> x(n_, Rational(0));
    for (std::size_t k = 0; k < rows_.size(); ++k) x[pivots_[k]] = rows_[k][n_];
    return x;
  }

 private:
  std::size_t n_;
  std::vector<std::vector<Rational>> rows_;
  std::vector<std::size_t> pivots_;
  bool inconsistent_ = false;
};

}  // namespace detail

struct BracketResult {
  OperatorCombination combination;
  std::vector<MarkedKey> candidates;
  std::vector<std::string> remainder;  // "monomial: residual" where the commutator is not reproduced
  bool closed = true;
  bool unique = true;  // candidate actions independent on the test basis
};

/// Commutators of constraint operators tested on every coupling monomial of weight
/// <= max_weight. The operators never raise weight, so this is exact on that space.
class BracketSolver {
 public:
  BracketSolver(GraphCatalog& catalog, int max_weight, DipoleMode mode = DipoleMode::variable)
      : catalog_(catalog), max_weight_(max_weight), mode_(mode) {
    const auto keys = coupling_classes(catalog, max_weight / 2, mode == DipoleMode::variable);
    std::vector<int> sizes;
    for (const auto& k : keys) sizes.push_back(k.order());
    for_each_multiset(sizes, max_weight / 2, [&](const std::vector<int>& mult) {
      Monomial m;
      for (std::size_t i = 0; i < keys.size(); ++i)
        if (mult[i] > 0) m = m * Monomial(Symbol(keys[i]), mult[i]);
      index_.emplace(m, basis_.size());
      basis_.push_back(m);
    });
  }

  int max_weight() const noexcept { return max_weight_; }
  DipoleMode mode() const noexcept { return mode_; }
  const std::vector<Monomial>& basis() const noexcept { return basis_; }

  const ConstraintOperator& op(const MarkedKey& key) {
    auto it = ops_.find(key);
    if (it == ops_.end()) it = ops_.emplace(key, ConstraintOperator(key, catalog_)).first;
    return it->second;
  }

  /// L applied to each basis monomial.
  const std::vector<CouplingSeries>& images(const MarkedKey& key) {
    auto it = images_.find(key);
    if (it != images_.end()) return it->second;
    const auto& o = op(key);
    std::vector<CouplingSeries> out;
    out.reserve(basis_.size());
    for (const auto& m : basis_) {
      CouplingSeries poly(max_weight_);
      poly.add(m, NPolynomial(1));
      out.push_back(apply_constraint(o, poly, max_weight_, catalog_, mode_).residual());
    }
    return images_.emplace(key, std::move(out)).first->second;
  }

  CouplingSeries apply(const MarkedKey& key, const CouplingSeries& poly) {
    const auto& img = images(key);
    CouplingSeries out(max_weight_);
    for (const auto& [m, c] : poly.terms()) {
      auto it = index_.find(m);
      if (it == index_.end()) throw std::logic_error("monomial outside the bracket basis: " + m.str());
      out += img[it->second] * c;
    }
    return out;
  }

  /// [L_a, L_b] on each basis monomial.
  std::vector<CouplingSeries> commutator(const MarkedKey& a, const MarkedKey& b) {
    std::vector<CouplingSeries> out;
    const auto ia = images(a);
    const auto ib = images(b);
    for (std::size_t i = 0; i < basis_.size(); ++i) out.push_back(apply(a, ib[i]) - apply(b, ia[i]));
    return out;
  }

  CouplingSeries apply_combination(const OperatorCombination& c, std::size_t basis_index) {
    CouplingSeries out(max_weight_);
    for (const auto& [k, x] : c) out += images(k)[basis_index] * x;
    return out;
  }

  BracketResult bracket(const MarkedKey& a, const MarkedKey& b, std::vector<MarkedKey> candidates) {
    BracketResult res;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    res.candidates = candidates;
    const auto comm = commutator(a, b);
    const std::size_t n = candidates.size();
    detail::RationalSystem sys(n);
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      std::map<std::pair<Monomial, int>, std::vector<Rational>> rows;
      auto row = [&](const Monomial& m, int e) -> std::vector<Rational>& {
        auto [it, fresh] = rows.try_emplace({m, e}, n + 1, Rational(0));
        return it->second;
      };
      for (std::size_t j = 0; j < n; ++j)
        for (const auto& [m, c] : images(candidates[j])[i].terms())
          for (const auto& [e, x] : c.terms()) row(m, e)[j] = x;
      for (const auto& [m, c] : comm[i].terms())
        for (const auto& [e, x] : c.terms()) row(m, e)[n] = x;
      for (auto& [k, r] : rows) sys.add_row(std::move(r));
    }
    const auto x = sys.solution();
    for (std::size_t j = 0; j < n; ++j)
      if (x[j] != 0) res.combination.emplace(candidates[j], NPolynomial(x[j]));
    res.unique = sys.rank() == n;
    res.closed = sys.consistent();
    if (!res.closed) {
      for (std::size_t i = 0; i < basis_.size() && res.remainder.size() < 20; ++i) {
        const auto diff = comm[i] - apply_combination(res.combination, i);
        for (const auto& [m, c] : diff.terms()) res.remainder.push_back(basis_[i].str() + " -> " + m.str() + ": " + c.str());
      }
    }
    return res;
  }

  /// Candidates default to the glue prediction, which is also preferred among
  /// several solutions when the test space cannot tell candidates apart.
  BracketResult bracket(const MarkedKey& a, const MarkedKey& b) {
    const auto prediction = glue_bracket(a, b);
    std::vector<MarkedKey> cands;
    for (const auto& [k, c] : prediction) cands.push_back(k);
    auto res = bracket(a, b, cands);
    if (res.closed && !res.unique && reproduces(a, b, prediction)) res.combination = prediction;
    return res;
  }

  bool reproduces(const MarkedKey& a, const MarkedKey& b, const OperatorCombination& c) {
    const auto comm = commutator(a, b);
    for (std::size_t i = 0; i < basis_.size(); ++i)
      if (!(comm[i] - apply_combination(c, i)).is_zero()) return false;
    return true;
  }

 private:
  GraphCatalog& catalog_;
  int max_weight_;
  DipoleMode mode_;
  std::vector<Monomial> basis_;
  std::map<Monomial, std::size_t> index_;
  std::map<MarkedKey, ConstraintOperator> ops_;
  std::map<MarkedKey, std::vector<CouplingSeries>> images_;
};

/// Default test space: large enough that the B term -C ∂_G of every candidate G is seen.
inline int bracket_weight(const MarkedKey& a, const MarkedKey& b) {
  return std::max(4, 2 * (a.graph.order() + b.graph.order() - 1));
}

inline BracketResult lie_bracket(const ConstraintOperator& a, const ConstraintOperator& b, GraphCatalog& catalog,
                                 int max_weight = 0, DipoleMode mode = DipoleMode::variable) {
  if (a.colors() != b.colors() || a.colors() != catalog.colors()) throw validation_error("dimension mismatch");
  BracketSolver solver(catalog, max_weight > 0 ? max_weight : bracket_weight(a.id(), b.id()), mode);
  return solver.bracket(a.id(), b.id());
}

/// The D=2 operator L_n on the necklace with n+1 white vertices.
inline MarkedKey necklace_operator(int n) {
  if (n < 0 || n + 1 > max_canonical_order) throw validation_error("necklace index out of range");
  const int p = n + 1;
  std::vector<std::vector<int>> sigma(2);
  for (int i = 1; i <= p; ++i) {
    sigma[0].push_back(i);
    sigma[1].push_back(i % p + 1);
  }
  return marked_canonical_form(new_graph(2, p, sigma), Vertex{VertexColor::black, 0});
}

struct NecklaceRelation {
  int m = 0;
  int n = 0;
  BracketResult result;
  Rational coefficient;  // of L_{m+n}
  bool single_term = false;
};

/// [L_m, L_n] for 0 <= m < n, m + n <= max_sum. L_0 (the dipole) acts as zero
/// when the dipole is eliminated, so that mode starts at m = 1.
inline std::vector<NecklaceRelation> necklace_relations(int max_sum, DipoleMode mode = DipoleMode::variable) {
  GraphCatalog catalog(2);
  BracketSolver solver(catalog, 2 * (max_sum + 1), mode);
  std::vector<NecklaceRelation> out;
  for (int m = mode == DipoleMode::variable ? 0 : 1; m <= max_sum; ++m)
    for (int n = m + 1; m + n <= max_sum; ++n) {
      NecklaceRelation r;
      r.m = m;
      r.n = n;
      r.result = solver.bracket(necklace_operator(m), necklace_operator(n));
      const auto target = necklace_operator(m + n);
      auto it = r.result.combination.find(target);
      r.coefficient = it == r.result.combination.end() ? Rational(0) : it->second.coefficient(0);
      r.single_term = r.result.closed && r.result.combination.size() == 1 && it != r.result.combination.end() &&
                      it->second.degree() == 0;
      out.push_back(std::move(r));
    }
  return out;
}

}  // namespace ctm

#endif  // CTM_SCHWINGER_DYSON_HPP
