#include "ctm/schwinger_dyson.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace ctm;

namespace {

// The sextic graph of the introduction: white i joins black i in colors 1, 2 and
// black i+1 in color 3.
ColoredGraph sextic() { return new_graph(3, 3, {{1, 2, 3}, {1, 2, 3}, {2, 3, 1}}); }

bool all_zero(const CouplingSeries& s) { return s.is_zero(); }

}  // namespace

TEST(ConstraintOperator, DipoleJacobianIsNToTheD) {
  for (int d : {2, 3}) {
    GraphCatalog cat(d);
    ConstraintOperator op(ColoredGraph::dipole(d), 0, cat);
    ASSERT_EQ(op.jacobian().size(), 1u);
    EXPECT_EQ(op.jacobian()[0].loops, d);
    EXPECT_TRUE(op.jacobian()[0].couplings.empty());
    auto terms = apply_constraint(op, CouplingSeries::constant(1, 4), 4, cat);
    EXPECT_EQ(terms.jacobian, CouplingSeries::constant(NPolynomial::monomial(d), 4));
  }
}

TEST(ConstraintOperator, DipoleInsertionIsEuler) {
  GraphCatalog cat(3);
  ConstraintOperator op(ColoredGraph::dipole(3), 0, cat);
  auto z = partition_series(cat, 6);
  auto terms = apply_constraint(op, z, 4, cat);
  CouplingSeries euler(4);
  for (const auto& [m, c] : z.terms()) euler.add(m, c * Rational(m.weight() / 2));
  EXPECT_EQ(terms.insertion, euler);
}

TEST(ConstraintOperator, RejectsDisconnectedAndMismatched) {
  GraphCatalog cat(3);
  auto two = disjoint_union(ColoredGraph::dipole(3), ColoredGraph::dipole(3));
  EXPECT_THROW(ConstraintOperator(two, 0, cat), validation_error);
  EXPECT_THROW(ConstraintOperator(ColoredGraph::dipole(2), 0, cat), validation_error);
}

TEST(ConstraintOperator, DependsOnlyOnOrbit) {
  GraphCatalog cat(3);
  auto z = partition_series(cat, 8);
  std::mt19937 rng(100);
  for (int trial = 0; trial < 12; ++trial) {
    auto g = oracle::random_graph(3, 3, rng);
    if (!is_connected(g)) continue;
    std::map<MarkedKey, CouplingSeries> seen;
    for (int b = 0; b < g.order(); ++b) {
      ConstraintOperator op(g, b, cat);
      EXPECT_EQ(marked_canonical_form(op.base(), Vertex{VertexColor::black, op.marked()}), op.id());
      auto r = apply_constraint(op, z, 4, cat).jacobian;
      auto [it, fresh] = seen.emplace(op.id(), r);
      if (!fresh) {
        EXPECT_EQ(it->second, r);
      }
    }
  }
}

TEST(VerifyConstraint, DipoleExamples) {
  GraphCatalog c3(3);
  EXPECT_TRUE(all_zero(verify_constraint(c3.dipole(), 0, 3, 4)));
  GraphCatalog c2(2);
  EXPECT_TRUE(all_zero(verify_constraint(c2.dipole(), 0, 2, 6)));
}

TEST(VerifyConstraint, SexticGraphAllVertices) {
  GraphCatalog cat(3);
  auto z = partition_series(cat, 10);
  for (int b = 0; b < 3; ++b) {
    ConstraintOperator op(sextic(), b, cat);
    auto r = constraint_action(op, z, cat);
    EXPECT_EQ(r.max_weight(), 4);
    EXPECT_TRUE(r.is_zero()) << b;
  }
}

TEST(VerifyConstraint, AllSmallOperatorsDThree) {
  GraphCatalog cat(3);
  auto z = partition_series(cat, 10);
  const auto ops = constraint_operators(cat, 3);
  // orbit-stabilizer: the orbits of each class cover its black vertices
  std::map<GraphKey, Integer> covered;
  for (const auto& op : ops)
    covered[op.id().graph] +=
        op.automorphisms() / marked_automorphism_count(op.base(), Vertex{VertexColor::black, op.marked()});
  ASSERT_EQ(covered.size(), 11u);
  for (const auto& [k, n] : covered) EXPECT_EQ(n, Integer(k.order()));
  for (const auto& op : ops) EXPECT_TRUE(constraint_action(op, z, cat).is_zero()) << op.id().hex();
}

TEST(VerifyConstraint, AllSmallOperatorsDTwo) {
  GraphCatalog cat(2);
  auto z = partition_series(cat, 12);
  for (const auto& op : constraint_operators(cat, 4)) EXPECT_TRUE(constraint_action(op, z, cat).is_zero()) << op.id().hex();
}

TEST(VerifyConstraint, LogarithmFormFails) {
  GraphCatalog cat(3);
  auto w = generating_function(cat, 10, SeriesTarget::w);
  int failures = 0;
  for (const auto& op : constraint_operators(cat, 2)) failures += constraint_action(op, w, cat).is_zero() ? 0 : 1;
  EXPECT_GT(failures, 0);
}

TEST(VerifyConstraint, PiecesMatchChangeOfVariables) {
  for (int d : {2, 3}) {
    GraphCatalog cat(d);
    auto z = partition_series(cat, 8);
    for (const auto& op : constraint_operators(cat, 2)) {
      auto terms = apply_constraint(op, z, 8 - 2 * op.order(), cat);
      for (const auto& [mono, coeff] : z.terms()) {
        if (mono.weight() > 8 - 2 * op.order()) continue;
        std::vector<ColoredGraph> ins;
        Integer norm = 1;
        for (const auto& [sym, k] : mono.factors()) {
          const auto& e = cat.info(sym.graph());
          for (int r = 0; r < k; ++r) ins.push_back(e.graph);
          norm *= ipow(e.automorphisms, k) * factorial(k);
        }
        for (int n : {1, 2}) {
          auto num = sd_residual_numeric(op.base(), op.marked(), ins, n);
          EXPECT_EQ(terms.jacobian.coefficient(mono).evaluate(n) * Rational(norm), Rational(num.jacobian));
          EXPECT_EQ(terms.action.coefficient(mono).evaluate(n) * Rational(norm), Rational(num.action));
          EXPECT_EQ(terms.insertion.coefficient(mono).evaluate(n) * Rational(norm), Rational(num.variation));
        }
      }
    }
  }
}

TEST(VerifyConstraint, DipoleAsVariableAlsoAnnihilates) {
  for (auto [d, vmax, pmax] : {std::tuple{2, 10, 4}, std::tuple{3, 8, 3}}) {
    GraphCatalog cat(d);
    auto z = partition_series(cat, vmax, true);
    for (const auto& op : constraint_operators(cat, pmax))
      EXPECT_TRUE(constraint_action(op, z, cat, DipoleMode::variable).is_zero()) << op.id().hex();
  }
}

TEST(LieBracket, SelfBracketIsEmpty) {
  GraphCatalog cat(3);
  ConstraintOperator op(sextic(), 0, cat);
  auto r = lie_bracket(op, op, cat);
  EXPECT_TRUE(r.closed);
  EXPECT_TRUE(r.combination.empty());
}

TEST(LieBracket, SmallOperatorsCloseOnGluePrediction) {
  GraphCatalog cat(3);
  const auto ops = constraint_operators(cat, 3);
  BracketSolver solver(cat, 10);
  int pairs = 0;
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = i + 1; j < ops.size(); ++j) {
      const auto& a = ops[i].id();
      const auto& b = ops[j].id();
      auto r = solver.bracket(a, b);
      ASSERT_TRUE(r.closed) << a.hex() << " " << b.hex();
      EXPECT_EQ(r.combination, glue_bracket(a, b));
      ++pairs;
    }
  EXPECT_EQ(ops.size(), 17u);
  EXPECT_EQ(pairs, 17 * 16 / 2);
}

TEST(LieBracket, Antisymmetry) {
  GraphCatalog cat(3);
  const auto ops = constraint_operators(cat, 2);
  BracketSolver solver(cat, 6);
  for (const auto& a : ops)
    for (const auto& b : ops) {
      auto ab = solver.bracket(a.id(), b.id()).combination;
      auto ba = solver.bracket(b.id(), a.id()).combination;
      for (auto& [k, c] : ba) c = -c;
      EXPECT_EQ(ab, ba);
    }
}

TEST(LieBracket, JacobiOnOperators) {
  GraphCatalog cat(3);
  const auto ops = constraint_operators(cat, 2);
  BracketSolver solver(cat, 8);
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = i + 1; j < ops.size(); ++j)
      for (std::size_t k = j + 1; k < ops.size(); ++k) {
        const MarkedKey x[3] = {ops[i].id(), ops[j].id(), ops[k].id()};
        for (std::size_t m = 0; m < solver.basis().size(); ++m) {
          CouplingSeries poly(solver.max_weight());
          poly.add(solver.basis()[m], 1);
          CouplingSeries total(solver.max_weight());
          for (int c = 0; c < 3; ++c) {
            const auto& a = x[c];
            const auto& b = x[(c + 1) % 3];
            const auto& e = x[(c + 2) % 3];
            auto ab = [&](const CouplingSeries& f) { return solver.apply(a, solver.apply(b, f)) - solver.apply(b, solver.apply(a, f)); };
            total += ab(solver.apply(e, poly)) - solver.apply(e, ab(poly));
          }
          EXPECT_TRUE(total.is_zero());
        }
      }
}

TEST(LieBracket, JacobiOnStructureConstants) {
  GraphCatalog cat(3);
  const auto ops = constraint_operators(cat, 3);
  auto single = [](const MarkedKey& k) { return OperatorCombination{{k, NPolynomial(1)}}; };
  int triples = 0;
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = i + 1; j < ops.size(); ++j)
      for (std::size_t k = j + 1; k < ops.size(); ++k) {
        const auto a = single(ops[i].id()), b = single(ops[j].id()), c = single(ops[k].id());
        OperatorCombination total;
        for (const auto& part : {bracket_combinations(bracket_combinations(a, b), c),
                                 bracket_combinations(bracket_combinations(b, c), a),
                                 bracket_combinations(bracket_combinations(c, a), b)})
          for (const auto& [key, x] : part) accumulate(total, key, x);
        EXPECT_TRUE(total.empty());
        ++triples;
      }
  EXPECT_EQ(triples, 17 * 16 * 15 / 6);
}

TEST(LieBracket, NecklaceRelationIsWitt) {
  // Regression lock: [L_m, L_n] = (m - n) L_{m+n}.
  const auto rel = necklace_relations(5);
  EXPECT_EQ(rel.size(), 9u);
  for (const auto& r : rel) {
    EXPECT_TRUE(r.single_term) << r.m << "," << r.n;
    EXPECT_EQ(r.coefficient, Rational(r.m - r.n)) << r.m << "," << r.n;
  }
}

TEST(LieBracket, EliminatedDipoleDoesNotClose) {
  const auto rel = necklace_relations(3, DipoleMode::eliminated);
  ASSERT_FALSE(rel.empty());
  EXPECT_FALSE(rel.front().result.closed);
  EXPECT_FALSE(rel.front().result.remainder.empty());
}

TEST(LieBracket, NecklaceOperatorShape) {
  auto l2 = necklace_operator(2);
  EXPECT_EQ(l2.graph.order(), 3);
  EXPECT_EQ(l2.graph, canonical_form(oracle::necklace(3)));
  EXPECT_THROW(necklace_operator(-1), validation_error);
}
