#ifndef CTM_LIE_COMPARE_HPP
#define CTM_LIE_COMPARE_HPP

#include "ctm/hopf.hpp"
#include "ctm/schwinger_dyson.hpp"

#include <string>
#include <vector>

namespace ctm {

enum class BracketAgreement { equal, negated, differ };

inline std::string to_string(BracketAgreement a) {
  switch (a) {
    case BracketAgreement::equal: return "equal";
    case BracketAgreement::negated: return "negated";
    default: return "differ";
  }
}

struct BracketComparison {
  Generator a;
  Generator b;
  InfinitesimalCharacter hopf;  // [δ_a, δ_b] on the domain
  OperatorCombination constraint;  // [L_a, L_b]
  BracketAgreement agreement = BracketAgreement::differ;
};

/// Side-by-side infinitesimal-character and constraint brackets for every pair of
/// black-marked generators with p <= p_max. The Hopf side is tabulated on generators
/// with p <= 2 p_max - 1, which holds every glued graph.
inline std::vector<BracketComparison> compare_brackets(int colors, int p_max) {
  HopfAlgebra h(colors);
  const auto domain = h.generators(2 * p_max - 1);
  std::vector<Generator> ops;
  for (const auto& g : h.generators(p_max))
    if (g.color == VertexColor::black) ops.push_back(g);
  std::vector<BracketComparison> out;
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = i + 1; j < ops.size(); ++j) {
      BracketComparison c;
      c.a = ops[i];
      c.b = ops[j];
      c.hopf = infinitesimal_bracket(h, {{c.a, 1}}, {{c.b, 1}}, domain);
      c.constraint = glue_bracket(c.a, c.b);
      bool eq = c.hopf.size() == c.constraint.size(), neg = eq;
      for (const auto& [k, x] : c.constraint) {
        auto it = c.hopf.find(k);
        const Rational hv = it == c.hopf.end() ? Rational(0) : it->second;
        if (x.degree() > 0) eq = neg = false;
        eq = eq && hv == x.coefficient(0);
        neg = neg && hv == -x.coefficient(0);
      }
      c.agreement = eq ? BracketAgreement::equal : neg ? BracketAgreement::negated : BracketAgreement::differ;
      out.push_back(std::move(c));
    }
  return out;
}

}  // namespace ctm

#endif  // CTM_LIE_COMPARE_HPP
