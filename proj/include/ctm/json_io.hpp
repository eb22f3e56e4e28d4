#ifndef CTM_JSON_IO_HPP
#define CTM_JSON_IO_HPP

// JSON forms shared by the CLI. Needs nlohmann/json (vendored as json.hpp).

#include "ctm/flow.hpp"
#include "ctm/hopf.hpp"
#include "ctm/schwinger_dyson.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

#ifndef CTM_VERSION
#define CTM_VERSION "0.1.0"
#endif

namespace ctm::io {

using json = nlohmann::json;

inline constexpr const char* version = CTM_VERSION;

/// Input error with the JSON path where it was found.
inline validation_error json_error(const std::string& path, const std::string& what) {
  return validation_error(path + ": " + what);
}

inline const json& field(const json& j, const std::string& name, const std::string& path) {
  if (!j.is_object()) throw json_error(path, "expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw json_error(path, "missing field '" + name + "'");
  return *it;
}

inline int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw json_error(path, "expected an integer");
  return j.get<int>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw json_error(path, "expected a string");
  return j.get<std::string>();
}

inline const json& get_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw json_error(path, "expected an array");
  return j;
}

// ------------------------------------------------------------------ numbers

inline json to_json(const Integer& z) { return z.str(); }

inline Integer integer_from_json(const json& j, const std::string& path) {
  try {
    if (j.is_number_integer()) return Integer(j.get<long long>());
    return parse_integer(get_string(j, path));
  } catch (const validation_error&) {
    throw;
  } catch (const std::exception&) {
    throw json_error(path, "malformed integer");
  }
}

inline json to_json(const Rational& q) { return {{"num", numerator_of(q).str()}, {"den", denominator_of(q).str()}}; }

inline Rational rational_from_json(const json& j, const std::string& path) {
  const Integer den = integer_from_json(field(j, "den", path), path + ".den");
  if (den == 0) throw json_error(path, "zero denominator");
  return make_rational(integer_from_json(field(j, "num", path), path + ".num"), den);
}

inline json to_json(const NPolynomial& p) {
  json out = json::array();
  for (const auto& [e, c] : p.terms())
    out.push_back({{"N_exp", e}, {"num", numerator_of(c).str()}, {"den", denominator_of(c).str()}});
  return out;
}

inline NPolynomial npolynomial_from_json(const json& j, const std::string& path) {
  NPolynomial p;
  const auto& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    const int e = get_int(field(arr[i], "N_exp", at), at + ".N_exp");
    if (e < 0) throw json_error(at, "negative N exponent");
    p.add_term(e, rational_from_json(arr[i], at));
  }
  return p;
}

inline json to_json(const TPolynomial& p) {
  json out = json::array();
  for (const auto& [k, c] : p.terms()) out.push_back({{"t_exp", k}, {"coeff", to_json(c)}});
  return out;
}

inline TPolynomial tpolynomial_from_json(const json& j, const std::string& path) {
  TPolynomial p;
  const auto& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    const int k = get_int(field(arr[i], "t_exp", at), at + ".t_exp");
    if (k < 0) throw json_error(at, "negative t exponent");
    p.add(k, npolynomial_from_json(field(arr[i], "coeff", at), at + ".coeff"));
  }
  return p;
}

// ------------------------------------------------------------------- graphs

/// {"D", "p", "sigma", "loops"} with 1-based black indices.
inline json to_json(const ColoredGraph& g) {
  json sigma = json::array();
  for (int c = 0; c < g.colors(); ++c) {
    json row = json::array();
    for (int b : g.color_map(c)) row.push_back(b + 1);
    sigma.push_back(std::move(row));
  }
  return {{"D", g.colors()}, {"p", g.order()}, {"sigma", std::move(sigma)}, {"loops", g.loops()}};
}

inline ColoredGraph graph_from_json(const json& j, const std::string& path) {
  const int d = get_int(field(j, "D", path), path + ".D");
  const int p = get_int(field(j, "p", path), path + ".p");
  if (d < 1) throw json_error(path + ".D", "D must be >= 1");
  if (p < 0) throw json_error(path + ".p", "p must be >= 0");
  int loops = 0;
  if (j.contains("loops")) loops = get_int(j["loops"], path + ".loops");
  const auto& rows = get_array(field(j, "sigma", path), path + ".sigma");
  if (static_cast<int>(rows.size()) != d)
    throw json_error(path + ".sigma", "expected " + std::to_string(d) + " color rows, got " + std::to_string(rows.size()));
  std::vector<std::vector<int>> sigma;
  for (int c = 0; c < d; ++c) {
    const auto at = path + ".sigma[" + std::to_string(c) + "]";
    const auto& row = get_array(rows[static_cast<std::size_t>(c)], at);
    if (static_cast<int>(row.size()) != p)
      throw json_error(at, "expected " + std::to_string(p) + " entries, got " + std::to_string(row.size()));
    std::vector<int> r;
    for (std::size_t i = 0; i < row.size(); ++i) r.push_back(get_int(row[i], at + "[" + std::to_string(i) + "]"));
    sigma.push_back(std::move(r));
  }
  try {
    return new_graph(d, p, sigma, loops);
  } catch (const validation_error& e) {
    throw json_error(path, e.what());
  }
}

inline json to_json(const GraphKey& k) { return k.hex(); }

/// A graph given either as a hex key or as a graph object; canonicalized.
inline GraphKey key_from_json(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      const auto key = GraphKey::from_hex(j.get<std::string>());
      return canonical_form(graph_from_key(key));
    } catch (const validation_error& e) {
      throw json_error(path, e.what());
    }
  }
  return canonical_form(graph_from_json(j, path));
}

inline json to_json(VertexColor c) { return c == VertexColor::white ? "white" : "black"; }

inline VertexColor color_from_json(const json& j, const std::string& path) {
  const auto s = get_string(j, path);
  if (s == "white") return VertexColor::white;
  if (s == "black") return VertexColor::black;
  throw json_error(path, "vertex color must be 'white' or 'black'");
}

/// Marked graph: key plus the marked vertex of the canonical representative, 1-based.
inline json to_json(const MarkedKey& m) {
  return {{"graph", m.graph.hex()}, {"color", to_json(m.color)}, {"vertex", m.label + 1}};
}

inline MarkedKey marked_from_json(const json& j, const std::string& path) {
  const auto g = graph_from_key(key_from_json(field(j, "graph", path), path + ".graph"));
  const auto color = color_from_json(field(j, "color", path), path + ".color");
  const int v = get_int(field(j, "vertex", path), path + ".vertex");
  if (v < 1 || v > g.order()) throw json_error(path + ".vertex", "vertex out of range");
  return marked_canonical_form(g, Vertex{color, v - 1});
}

// ------------------------------------------------------------------- series

/// [{"monomial": [{"graph": key, "power": k}], "coeff": N-polynomial}]; t is "t".
inline json to_json(const CouplingSeries& s) {
  json out = json::array();
  for (const auto& [m, c] : s.terms()) {
    json mono = json::array();
    for (const auto& [sym, k] : m.factors()) mono.push_back({{"graph", sym.str()}, {"power", k}});
    out.push_back({{"monomial", std::move(mono)}, {"coeff", to_json(c)}});
  }
  return out;
}

inline CouplingSeries series_from_json(const json& j, int max_weight, const std::string& path) {
  CouplingSeries s(max_weight);
  const auto& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    Monomial m;
    const auto& mono = get_array(field(arr[i], "monomial", at), at + ".monomial");
    for (std::size_t f = 0; f < mono.size(); ++f) {
      const auto fat = at + ".monomial[" + std::to_string(f) + "]";
      const auto& g = field(mono[f], "graph", fat);
      const int k = get_int(field(mono[f], "power", fat), fat + ".power");
      if (k < 1) throw json_error(fat + ".power", "power must be positive");
      const Symbol sym = g.is_string() && g.get<std::string>() == "t" ? Symbol::scale()
                                                                       : Symbol(key_from_json(g, fat + ".graph"));
      m = m * Monomial(sym, k);
    }
    s.add(m, npolynomial_from_json(field(arr[i], "coeff", at), at + ".coeff"));
  }
  return s;
}

// --------------------------------------------------------------------- hopf

inline json to_json(const HopfMonomial& m) {
  json out = json::array();
  for (const auto& [g, k] : m) {
    json f = to_json(g);
    f["power"] = k;
    out.push_back(std::move(f));
  }
  return out;
}

inline HopfMonomial hopf_monomial_from_json(const json& j, const std::string& path) {
  HopfMonomial m;
  const auto& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    const int k = get_int(field(arr[i], "power", at), at + ".power");
    if (k < 1) throw json_error(at + ".power", "power must be positive");
    m[marked_from_json(arr[i], at)] += k;
  }
  return m;
}

inline json to_json(const TensorElement& t) {
  json out = json::array();
  for (const auto& [lr, c] : t) out.push_back({{"left", to_json(lr.first)}, {"right", to_json(lr.second)}, {"coeff", c.str()}});
  return out;
}

inline TensorElement tensor_from_json(const json& j, const std::string& path) {
  TensorElement t;
  const auto& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    add_coefficient(t,
                    std::pair{hopf_monomial_from_json(field(arr[i], "left", at), at + ".left"),
                              hopf_monomial_from_json(field(arr[i], "right", at), at + ".right")},
                    integer_from_json(field(arr[i], "coeff", at), at + ".coeff"));
  }
  return t;
}

inline json to_json(const HopfElement& e) {
  json out = json::array();
  for (const auto& [m, c] : e) out.push_back({{"monomial", to_json(m)}, {"coeff", c.str()}});
  return out;
}

inline HopfElement hopf_element_from_json(const json& j, const std::string& path) {
  HopfElement e;
  const auto& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    add_coefficient(e, hopf_monomial_from_json(field(arr[i], "monomial", at), at + ".monomial"),
                    integer_from_json(field(arr[i], "coeff", at), at + ".coeff"));
  }
  return e;
}

inline json to_json(const InfinitesimalCharacter& a) {
  json out = json::array();
  for (const auto& [g, x] : a) out.push_back({{"generator", to_json(g)}, {"value", to_json(x)}});
  return out;
}

inline InfinitesimalCharacter infinitesimal_from_json(const json& j, const std::string& path) {
  InfinitesimalCharacter a;
  const auto& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    a[marked_from_json(field(arr[i], "generator", at), at + ".generator")] +=
        rational_from_json(field(arr[i], "value", at), at + ".value");
  }
  std::erase_if(a, [](const auto& kv) { return kv.second == 0; });
  return a;
}

// -------------------------------------------------------- operator brackets

inline json to_json(const OperatorCombination& c) {
  json out = json::array();
  for (const auto& [op, x] : c) out.push_back({{"operator", to_json(op)}, {"coeff", to_json(x)}});
  return out;
}

inline OperatorCombination combination_from_json(const json& j, const std::string& path) {
  OperatorCombination c;
  const auto& arr = get_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    c[marked_from_json(field(arr[i], "operator", at), at + ".operator")] +=
        npolynomial_from_json(field(arr[i], "coeff", at), at + ".coeff");
  }
  std::erase_if(c, [](const auto& kv) { return kv.second.is_zero(); });
  return c;
}

// --------------------------------------------------------------------- flow

/// {"D", "couplings": [{"graph": key or graph, "value": N-polynomial}]}
inline json seed_to_json(int colors, const Seed& seed) {
  json cs = json::array();
  for (const auto& [k, v] : seed) cs.push_back({{"graph", k.hex()}, {"value", to_json(v)}});
  return {{"D", colors}, {"couplings", std::move(cs)}};
}

inline std::pair<int, Seed> seed_from_json(const json& j, const std::string& path) {
  const int d = get_int(field(j, "D", path), path + ".D");
  Seed seed;
  const auto& arr = get_array(field(j, "couplings", path), path + ".couplings");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + ".couplings[" + std::to_string(i) + "]";
    const auto key = key_from_json(field(arr[i], "graph", at), at + ".graph");
    if (key.colors() != d) throw json_error(at + ".graph", "dimension mismatch: graph has D=" + std::to_string(key.colors()));
    // an effective-couplings table also works: its t^0 column is the seed
    if (!arr[i].contains("value") && arr[i].contains("coupling"))
      seed[key] += tpolynomial_from_json(arr[i]["coupling"], at + ".coupling").coefficient(0);
    else
      seed[key] += npolynomial_from_json(field(arr[i], "value", at), at + ".value");
  }
  return {d, seed};
}

inline json to_json(const EffectiveCouplings& e) {
  json cs = json::array();
  for (const auto& [k, p] : e.couplings) cs.push_back({{"graph", k.hex()}, {"coupling", to_json(p)}});
  return {{"D", e.colors}, {"max_vertices", e.max_vertices}, {"couplings", std::move(cs)}};
}

inline EffectiveCouplings couplings_from_json(const json& j, const std::string& path) {
  EffectiveCouplings e;
  e.colors = get_int(field(j, "D", path), path + ".D");
  e.max_vertices = get_int(field(j, "max_vertices", path), path + ".max_vertices");
  const auto& arr = get_array(field(j, "couplings", path), path + ".couplings");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + ".couplings[" + std::to_string(i) + "]";
    const auto key = key_from_json(field(arr[i], "graph", at), at + ".graph");
    if (key.colors() != e.colors) throw json_error(at + ".graph", "dimension mismatch");
    e.couplings[key] += tpolynomial_from_json(field(arr[i], "coupling", at), at + ".coupling");
  }
  std::erase_if(e.couplings, [](const auto& kv) { return kv.second.is_zero(); });
  return e;
}

/// Output envelope carried by every CLI result.
inline json envelope(const std::string& kind, json result) {
  return {{"ctm_version", version}, {"kind", kind}, {"result", std::move(result)}};
}

}  // namespace ctm::io

#endif  // CTM_JSON_IO_HPP
