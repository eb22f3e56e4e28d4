#ifndef CTM_TOOLS_CLI_HPP
#define CTM_TOOLS_CLI_HPP

#include "ctm/json_io.hpp"
#include "ctm/lie_compare.hpp"
#include "ctm/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ctm::cli {

using io::json;

enum Exit { ok = 0, verification_failed = 1, input_error = 2 };

/// Thrown by a command that ran to completion but found a failed identity.
struct VerificationFailure {
  json output;
};

// ------------------------------------------------------------- conventions

struct Conventions {
  SeriesTarget sd_form = SeriesTarget::z;
  DipoleMode sd_dipole = DipoleMode::variable;  // for brackets
  HopfConvention hopf = HopfConvention::without_singletons;
  FlowConvention flow;
};

inline Conventions parse_conventions(const std::vector<std::string>& items) {
  Conventions c;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw validation_error("--convention expects KEY=VALUE, got '" + item + "'");
    const auto k = item.substr(0, eq), v = item.substr(eq + 1);
    auto bad = [&] { return validation_error("--convention " + k + ": unknown value '" + v + "'"); };
    if (k == "sd.form") {
      if (v == "z") c.sd_form = SeriesTarget::z;
      else if (v == "w") c.sd_form = SeriesTarget::w;
      else throw bad();
    } else if (k == "sd.dipole") {
      if (v == "variable") c.sd_dipole = DipoleMode::variable;
      else if (v == "eliminated") c.sd_dipole = DipoleMode::eliminated;
      else throw bad();
    } else if (k == "hopf.singletons") {
      if (v == "off") c.hopf = HopfConvention::without_singletons;
      else if (v == "on") c.hopf = HopfConvention::all_subgraphs;
      else throw bad();
    } else if (k == "flow.k0") {
      if (v == "on" || v == "off") c.flow.include_k0 = v == "on";
      else throw bad();
    } else if (k == "flow.sign") {
      if (v == "-" || v == "+") c.flow.quadratic_sign = v == "-" ? -1 : 1;
      else throw bad();
    } else if (k == "flow.split") {
      if (v == "marked") c.flow.split = SplitMode::marked;
      else if (v == "all_ordered") c.flow.split = SplitMode::all_ordered;
      else if (v == "all_unordered") c.flow.split = SplitMode::all_unordered;
      else throw bad();
    } else {
      throw validation_error("--convention: unknown key '" + k + "'");
    }
  }
  return c;
}

// ----------------------------------------------------------------- input

inline json read_json(const std::string& path) {
  std::string text;
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw validation_error(path + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

/// Strips the output envelope, so results feed back in as inputs.
inline json payload(const json& j, std::string& path) {
  if (j.is_object() && j.contains("ctm_version") && j.contains("result")) {
    path += ".result";
    return j["result"];
  }
  return j;
}

/// Graphs from a graph object, a graph listing entry, or an array of either.
inline std::vector<ColoredGraph> graphs_from_input(const json& in, std::string path) {
  const json j = payload(in, path);
  auto one = [](const json& x, const std::string& at) {
    if (x.is_object() && x.contains("graph") && x["graph"].is_object()) return io::graph_from_json(x["graph"], at + ".graph");
    return io::graph_from_json(x, at);
  };
  std::vector<ColoredGraph> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(one(j[i], path + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(one(j, path));
  }
  return out;
}

inline ColoredGraph single_graph(const json& in, const std::string& path) {
  auto gs = graphs_from_input(in, path);
  if (gs.size() != 1) throw validation_error(path + ": expected exactly one graph, got " + std::to_string(gs.size()));
  return gs.front();
}

// ---------------------------------------------------------------- results

inline json graph_info(const ColoredGraph& g) {
  return {{"key", canonical_form(g).hex()},
          {"graph", io::to_json(g)},
          {"automorphisms", automorphism_count(g).str()},
          {"connected", g.order() > 0 && is_connected(g)}};
}

inline json graphs_result(const std::vector<ColoredGraph>& gs) {
  json out = json::array();
  for (const auto& g : gs) out.push_back(graph_info(g));
  return out;
}

inline json moment_result(const std::vector<ColoredGraph>& gs, const std::optional<int>& n) {
  if (gs.empty()) throw validation_error("moments: no graphs given");
  const int d = gs.front().colors();
  json keys = json::array();
  for (const auto& g : gs) {
    if (g.colors() != d) throw validation_error("moments: dimension mismatch between graphs");
    keys.push_back(io::to_json(g));
  }
  const auto poly = moment_polynomial(gs, d);
  json out{{"graphs", keys}, {"polynomial", io::to_json(poly)}};
  if (n) {
    if (*n < 1) throw validation_error("--N must be >= 1");
    const Rational v = poly.evaluate(*n);
    out["N"] = *n;
    out["value"] = numerator_of(v).str();
  }
  return out;
}

inline json cut_entry(const std::vector<Edge>& edges, const ColoredGraph& g) {
  json es = json::array();
  for (const auto& e : edges) es.push_back({{"color", e.color + 1}, {"white", e.white + 1}});
  return {{"edges", std::move(es)}, {"graph", graph_info(g)}};
}

inline std::vector<Edge> parse_edges(const std::string& spec) {
  std::vector<Edge> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw validation_error("--edges expects COLOR:WHITE pairs, got '" + item + "'");
    try {
      out.push_back({std::stoi(item.substr(colon + 1)) - 1, std::stoi(item.substr(0, colon)) - 1});
    } catch (const std::logic_error&) {
      throw validation_error("--edges: malformed pair '" + item + "'");
    }
  }
  return out;
}

// --------------------------------------------------------------------- sd

inline json sd_verify_entry(const MarkedKey& id, const CouplingSeries& residual) {
  return {{"operator", io::to_json(id)},
          {"status", residual.is_zero() ? "PASS" : "FAIL"},
          {"residual", io::to_json(residual)}};
}

/// `only` picks one operator: a graph and a 1-based black vertex of its canonical form.
inline json sd_verify(int d, int v_max, int op_vertices, const std::optional<std::pair<GraphKey, int>>& only,
                      SeriesTarget form) {
  if (d < 1) throw validation_error("--D must be >= 1");
  if (v_max < 2 || v_max % 2) throw validation_error("--max-order must be even and >= 2");
  std::vector<MarkedKey> ids;
  if (only) {
    if (only->first.colors() != d) throw validation_error("--graph: dimension mismatch");
    const auto g = graph_from_key(only->first);
    if (only->second < 1 || only->second > g.order()) throw validation_error("--vertex out of range");
    GraphCatalog catalog(d);
    ids.push_back(ConstraintOperator(g, only->second - 1, catalog).id());
  } else {
    GraphCatalog catalog(d);
    for (const auto& op : constraint_operators(catalog, op_vertices / 2)) ids.push_back(op.id());
  }
  // One catalog and one generating function per worker; results land by index.
  const int workers = std::max(1, std::min(worker_count(), static_cast<int>(ids.size())));
  auto chunks = parallel_map<std::vector<CouplingSeries>>(
      static_cast<std::size_t>(workers), [&](std::size_t w) {
        GraphCatalog catalog(d);
        const auto z = generating_function(catalog, v_max, form);
        std::vector<CouplingSeries> res;
        for (std::size_t i = w; i < ids.size(); i += static_cast<std::size_t>(workers))
          res.push_back(constraint_action(ConstraintOperator(ids[i], catalog), z, catalog));
        return res;
      }, workers);
  json ops = json::array();
  bool all = true;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& r = chunks[i % static_cast<std::size_t>(workers)][i / static_cast<std::size_t>(workers)];
    all = all && r.is_zero();
    ops.push_back(sd_verify_entry(ids[i], r));
  }
  json out{{"D", d}, {"max_vertices", v_max}, {"form", form == SeriesTarget::z ? "z" : "w"}, {"operators", ops}};
  if (!all) throw VerificationFailure{out};
  return out;
}

inline json bracket_entry(const MarkedKey& a, const MarkedKey& b, const BracketResult& r) {
  return {{"a", io::to_json(a)},
          {"b", io::to_json(b)},
          {"combination", io::to_json(r.combination)},
          {"closed", r.closed},
          {"unique", r.unique}};
}

inline json sd_bracket(int d, int op_vertices, DipoleMode mode) {
  GraphCatalog catalog(d);
  std::vector<MarkedKey> ids;
  for (const auto& op : constraint_operators(catalog, op_vertices / 2)) ids.push_back(op.id());
  int weight = 4;
  for (const auto& a : ids)
    for (const auto& b : ids) weight = std::max(weight, bracket_weight(a, b));
  BracketSolver solver(catalog, weight, mode);
  json out = json::array();
  bool closed = true;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const auto r = solver.bracket(ids[i], ids[j]);
      closed = closed && r.closed;
      out.push_back(bracket_entry(ids[i], ids[j], r));
    }
  json res{{"D", d}, {"max_vertices", op_vertices}, {"brackets", out}};
  if (!closed) throw VerificationFailure{res};
  return res;
}

inline json necklace_entry(int m, int n, const Rational& coefficient, bool single, const OperatorCombination& c) {
  return {{"m", m}, {"n", n}, {"coefficient", io::to_json(coefficient)}, {"single_term", single}, {"combination", io::to_json(c)}};
}

inline json sd_necklace(int max_sum, DipoleMode mode) {
  json out = json::array();
  for (const auto& r : necklace_relations(max_sum, mode))
    out.push_back(necklace_entry(r.m, r.n, r.coefficient, r.single_term, r.result.combination));
  return out;
}

// ------------------------------------------------------------------- hopf

inline Generator generator_from_input(const json& in, const std::string& path, const std::string& color, int vertex) {
  std::string at = path;
  const json j = payload(in, at);
  if (j.is_object() && j.contains("generator")) return io::marked_from_json(j["generator"], at + ".generator");
  if (j.is_object() && j.contains("color")) return io::marked_from_json(j, at);
  const auto g = single_graph(j, at);
  if (vertex < 1 || vertex > g.order()) throw validation_error("--vertex out of range");
  const auto c = io::color_from_json(color, "--color");
  return make_generator(g, Vertex{c, vertex - 1});
}

inline json coproduct_result(const Generator& x, const TensorElement& t) {
  return {{"generator", io::to_json(x)}, {"terms", io::to_json(t)}};
}

inline json antipode_result(const Generator& x, const HopfElement& e) {
  return {{"generator", io::to_json(x)}, {"terms", io::to_json(e)}};
}

inline json hopf_bracket_entry(const Generator& a, const Generator& b, const InfinitesimalCharacter& h,
                               const OperatorCombination& c, const std::string& agreement) {
  return {{"a", io::to_json(a)}, {"b", io::to_json(b)}, {"hopf", io::to_json(h)}, {"constraint", io::to_json(c)},
          {"agreement", agreement}};
}

inline json hopf_bracket(int d, int op_vertices) {
  json out = json::array();
  for (const auto& c : compare_brackets(d, op_vertices / 2))
    out.push_back(hopf_bracket_entry(c.a, c.b, c.hopf, c.constraint, to_string(c.agreement)));
  return out;
}

inline json hopf_verify_entry(const Generator& x, bool coassociative, bool counit, bool antipode) {
  return {{"generator", io::to_json(x)},
          {"coassociative", coassociative},
          {"counit", counit},
          {"antipode", antipode},
          {"status", coassociative && counit && antipode ? "PASS" : "FAIL"}};
}

/// Coassociativity, counit and antipode identities for every generator.
inline json hopf_verify(int d, int max_vertices, HopfConvention conv) {
  HopfAlgebra h(d, conv);
  json out = json::array();
  bool all = true;
  for (const auto& x : h.generators(max_vertices / 2)) {
    const auto [l, r] = coassociativity_sides(h, x);
    HopfElement left, right;
    for (const auto& [lr, c] : h.coproduct(x)) {
      if (lr.first.empty()) add_coefficient(left, lr.second, c);
      if (lr.second.empty()) add_coefficient(right, lr.first, c);
    }
    const HopfElement id{{monomial_of(x), 1}};
    bool anti = true;
    try {
      anti = antipode_contraction(h, x, true).empty() && antipode_contraction(h, x, false).empty();
    } catch (const std::logic_error&) {
      anti = false;  // the recursion does not terminate
    }
    const bool pass = l == r && left == id && right == id && anti;
    all = all && pass;
    out.push_back(hopf_verify_entry(x, l == r, left == id && right == id, anti));
  }
  json res{{"D", d}, {"max_vertices", max_vertices}, {"generators", out}};
  if (!all) throw VerificationFailure{res};
  return res;
}

// -------------------------------------------------------------------- flow

/// Dipole at 1/2 plus every connected two-pair graph at 1/10.
inline Seed default_seed(int d) {
  Seed s{{canonical_form(ColoredGraph::dipole(d)), Rational(1, 2)}};
  for (const auto& k : enumerate_graphs(d, 2, true))
    if (k.order() == 2) s[k] = Rational(1, 10);
  return s;
}

inline Seed seed_from_input(const std::string& file, int d) {
  if (file.empty()) return default_seed(d);
  std::string path = file;
  const json j = payload(read_json(file), path);
  auto [sd, seed] = io::seed_from_json(j, path);
  if (sd != d) throw validation_error(path + ".D: dimension mismatch, seed has D=" + std::to_string(sd));
  return seed;
}

inline json flow_verify_result(int d, int v_max, const FlowReport& rep) {
  json res = json::array(), dropped = json::array();
  for (const auto& [k, r] : rep.residuals) res.push_back({{"graph", k.hex()}, {"residual", io::to_json(r)}});
  for (const auto& [k, imgs] : rep.dropped) {
    json is = json::array();
    for (const auto& i : imgs) is.push_back(i.hex());
    dropped.push_back({{"graph", k.hex()}, {"images", is}});
  }
  return {{"D", d}, {"max_vertices", v_max}, {"convention", rep.convention.str()}, {"checked", rep.checked},
          {"residuals", res}, {"dropped", dropped}};
}

inline json trajectory_row(double t, const GraphKey& k, double v) { return {{"t", t}, {"graph", k.hex()}, {"value", v}}; }

inline json matrix_entry(const MatrixModeEntry& e) {
  json n = json::array();
  for (const auto& [k, c] : e.necklaces) n.push_back({{"length", k}, {"count", c}});
  return {{"necklaces", n},
          {"graph", e.key.hex()},
          {"symmetry_factor", e.symmetry_factor.str()},
          {"automorphisms", e.automorphisms.str()},
          {"consistent", e.consistent()},
          {"coupling", io::to_json(e.coupling)}};
}

// --------------------------------------------------------------- normalize

/// Re-reads a CLI result through the typed parsers and prints it again.
inline json normalize(const json& in) {
  const std::string kind = io::get_string(io::field(in, "kind", "$"), "$.kind");
  const json& r = io::field(in, "result", "$");
  const std::string p = "$.result";
  auto idx = [](const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; };
  auto arr = [&](const json& j, const std::string& at) -> const json& { return io::get_array(j, at); };
  auto boolean = [](const json& j, const std::string& at) {
    if (!j.is_boolean()) throw io::json_error(at, "expected a boolean");
    return j.get<bool>();
  };
  json out;
  if (kind == "graphs") {
    out = json::array();
    const auto& a = arr(r, p);
    for (std::size_t i = 0; i < a.size(); ++i)
      out.push_back(graph_info(io::graph_from_json(io::field(a[i], "graph", idx(p, i)), idx(p, i) + ".graph")));
  } else if (kind == "moment") {
    std::vector<ColoredGraph> gs;
    const auto& a = arr(io::field(r, "graphs", p), p + ".graphs");
    for (std::size_t i = 0; i < a.size(); ++i) gs.push_back(io::graph_from_json(a[i], idx(p + ".graphs", i)));
    std::optional<int> n;
    if (r.contains("N")) n = io::get_int(r["N"], p + ".N");
    out = moment_result(gs, n);
  } else if (kind == "cuts") {
    out = json::array();
    const auto& a = arr(r, p);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto at = idx(p, i);
      std::vector<Edge> edges;
      const auto& es = arr(io::field(a[i], "edges", at), at + ".edges");
      for (std::size_t e = 0; e < es.size(); ++e)
        edges.push_back({io::get_int(io::field(es[e], "white", idx(at + ".edges", e)), idx(at + ".edges", e)) - 1,
                         io::get_int(io::field(es[e], "color", idx(at + ".edges", e)), idx(at + ".edges", e)) - 1});
      const auto& gi = io::field(a[i], "graph", at);
      out.push_back(cut_entry(edges, io::graph_from_json(io::field(gi, "graph", at + ".graph"), at + ".graph.graph")));
    }
  } else if (kind == "sd_verify") {
    json ops = json::array();
    const auto& a = arr(io::field(r, "operators", p), p + ".operators");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto at = idx(p + ".operators", i);
      const auto id = io::marked_from_json(io::field(a[i], "operator", at), at + ".operator");
      ops.push_back(sd_verify_entry(id, io::series_from_json(io::field(a[i], "residual", at), 1 << 20, at + ".residual")));
    }
    out = {{"D", io::get_int(io::field(r, "D", p), p + ".D")},
           {"max_vertices", io::get_int(io::field(r, "max_vertices", p), p + ".max_vertices")},
           {"form", io::get_string(io::field(r, "form", p), p + ".form")},
           {"operators", ops}};
  } else if (kind == "sd_bracket") {
    json bs = json::array();
    const auto& a = arr(io::field(r, "brackets", p), p + ".brackets");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto at = idx(p + ".brackets", i);
      BracketResult br;
      br.combination = io::combination_from_json(io::field(a[i], "combination", at), at + ".combination");
      br.closed = boolean(io::field(a[i], "closed", at), at + ".closed");
      br.unique = boolean(io::field(a[i], "unique", at), at + ".unique");
      bs.push_back(bracket_entry(io::marked_from_json(io::field(a[i], "a", at), at + ".a"),
                                 io::marked_from_json(io::field(a[i], "b", at), at + ".b"), br));
    }
    out = {{"D", io::get_int(io::field(r, "D", p), p + ".D")},
           {"max_vertices", io::get_int(io::field(r, "max_vertices", p), p + ".max_vertices")},
           {"brackets", bs}};
  } else if (kind == "necklace_relations") {
    out = json::array();
    const auto& a = arr(r, p);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto at = idx(p, i);
      out.push_back(necklace_entry(io::get_int(io::field(a[i], "m", at), at + ".m"),
                                   io::get_int(io::field(a[i], "n", at), at + ".n"),
                                   io::rational_from_json(io::field(a[i], "coefficient", at), at + ".coefficient"),
                                   boolean(io::field(a[i], "single_term", at), at + ".single_term"),
                                   io::combination_from_json(io::field(a[i], "combination", at), at + ".combination")));
    }
  } else if (kind == "coproduct") {
    out = coproduct_result(io::marked_from_json(io::field(r, "generator", p), p + ".generator"),
                           io::tensor_from_json(io::field(r, "terms", p), p + ".terms"));
  } else if (kind == "antipode") {
    out = antipode_result(io::marked_from_json(io::field(r, "generator", p), p + ".generator"),
                          io::hopf_element_from_json(io::field(r, "terms", p), p + ".terms"));
  } else if (kind == "hopf_bracket") {
    out = json::array();
    const auto& a = arr(r, p);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto at = idx(p, i);
      out.push_back(hopf_bracket_entry(io::marked_from_json(io::field(a[i], "a", at), at + ".a"),
                                       io::marked_from_json(io::field(a[i], "b", at), at + ".b"),
                                       io::infinitesimal_from_json(io::field(a[i], "hopf", at), at + ".hopf"),
                                       io::combination_from_json(io::field(a[i], "constraint", at), at + ".constraint"),
                                       io::get_string(io::field(a[i], "agreement", at), at + ".agreement")));
    }
  } else if (kind == "hopf_verify") {
    json gs = json::array();
    const auto& a = arr(io::field(r, "generators", p), p + ".generators");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto at = idx(p + ".generators", i);
      gs.push_back(hopf_verify_entry(io::marked_from_json(io::field(a[i], "generator", at), at + ".generator"),
                                     boolean(io::field(a[i], "coassociative", at), at + ".coassociative"),
                                     boolean(io::field(a[i], "counit", at), at + ".counit"),
                                     boolean(io::field(a[i], "antipode", at), at + ".antipode")));
    }
    out = {{"D", io::get_int(io::field(r, "D", p), p + ".D")},
           {"max_vertices", io::get_int(io::field(r, "max_vertices", p), p + ".max_vertices")},
           {"generators", gs}};
  } else if (kind == "flow_verify") {
    FlowReport rep;
    const auto& res = arr(io::field(r, "residuals", p), p + ".residuals");
    for (std::size_t i = 0; i < res.size(); ++i) {
      const auto at = idx(p + ".residuals", i);
      rep.residuals[io::key_from_json(io::field(res[i], "graph", at), at + ".graph")] =
          io::tpolynomial_from_json(io::field(res[i], "residual", at), at + ".residual");
    }
    const auto& dr = arr(io::field(r, "dropped", p), p + ".dropped");
    for (std::size_t i = 0; i < dr.size(); ++i) {
      const auto at = idx(p + ".dropped", i);
      auto& v = rep.dropped[io::key_from_json(io::field(dr[i], "graph", at), at + ".graph")];
      const auto& im = arr(io::field(dr[i], "images", at), at + ".images");
      for (std::size_t k = 0; k < im.size(); ++k) v.push_back(io::key_from_json(im[k], idx(at + ".images", k)));
    }
    rep.checked = io::get_int(io::field(r, "checked", p), p + ".checked");
    out = flow_verify_result(io::get_int(io::field(r, "D", p), p + ".D"),
                             io::get_int(io::field(r, "max_vertices", p), p + ".max_vertices"), rep);
    out["convention"] = io::get_string(io::field(r, "convention", p), p + ".convention");
  } else if (kind == "effective_couplings") {
    out = io::to_json(io::couplings_from_json(r, p));
  } else if (kind == "trajectory") {
    json rows = json::array();
    const auto& a = arr(io::field(r, "rows", p), p + ".rows");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto at = idx(p + ".rows", i);
      const auto& t = io::field(a[i], "t", at);
      const auto& v = io::field(a[i], "value", at);
      if (!t.is_number() || !v.is_number()) throw io::json_error(at, "t and value must be numbers");
      rows.push_back(trajectory_row(t.get<double>(), io::key_from_json(io::field(a[i], "graph", at), at + ".graph"),
                                    v.get<double>()));
    }
    out = {{"D", io::get_int(io::field(r, "D", p), p + ".D")},
           {"N", io::field(r, "N", p)},
           {"max_vertices", io::get_int(io::field(r, "max_vertices", p), p + ".max_vertices")},
           {"aborted", boolean(io::field(r, "aborted", p), p + ".aborted")},
           {"rows", rows}};
  } else if (kind == "matrix_modes") {
    out = json::array();
    const auto& a = arr(r, p);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto at = idx(p, i);
      MatrixModeEntry e;
      const auto& ns = arr(io::field(a[i], "necklaces", at), at + ".necklaces");
      std::vector<ColoredGraph> parts;
      e.symmetry_factor = 1;
      for (std::size_t k = 0; k < ns.size(); ++k) {
        const auto nat = idx(at + ".necklaces", k);
        const int len = io::get_int(io::field(ns[k], "length", nat), nat + ".length");
        const int cnt = io::get_int(io::field(ns[k], "count", nat), nat + ".count");
        if (len < 1 || cnt < 1) throw io::json_error(nat, "length and count must be positive");
        e.necklaces[len] += cnt;
      }
      for (const auto& [len, cnt] : e.necklaces) {
        e.symmetry_factor *= ipow(len, cnt) * factorial(cnt);
        for (int c = 0; c < cnt; ++c) parts.push_back(necklace_graph(len));
      }
      const auto g = disjoint_union(parts, 2);
      e.key = canonical_form(g);
      e.automorphisms = automorphism_count(g);
      if (io::key_from_json(io::field(a[i], "graph", at), at + ".graph") != e.key)
        throw io::json_error(at + ".graph", "does not match the necklace multiset");
      e.coupling = io::tpolynomial_from_json(io::field(a[i], "coupling", at), at + ".coupling");
      out.push_back(matrix_entry(e));
    }
  } else {
    throw io::json_error("$.kind", "unknown result kind '" + kind + "'");
  }
  return io::envelope(kind, std::move(out));
}

// ------------------------------------------------------------------ output

/// Text or CSV rendering where a flat form exists.
inline std::string render_flat(const std::string& kind, const json& r, const std::string& format) {
  std::ostringstream o;
  auto status_lines = [&](const json& items, const std::string& id_field) {
    for (const auto& x : items) {
      const auto& id = x[id_field];
      o << x["status"].get<std::string>() << " " << id["graph"].get<std::string>() << " " << id["color"].get<std::string>()
        << " " << id["vertex"].get<int>() << "\n";
    }
  };
  if (format == "text" && kind == "sd_verify") {
    status_lines(r["operators"], "operator");
  } else if (format == "text" && kind == "hopf_verify") {
    status_lines(r["generators"], "generator");
  } else if (format == "text" && kind == "flow_verify") {
    o << "checked " << r["checked"].get<int>() << " classes, convention " << r["convention"].get<std::string>() << "\n";
    for (const auto& x : r["residuals"]) o << "FAIL " << x["graph"].get<std::string>() << "\n";
    if (r["residuals"].empty()) o << "PASS residual table all zero\n";
    for (const auto& x : r["dropped"])
      o << "DROPPED " << x["graph"].get<std::string>() << " " << x["images"].size() << " cut images past truncation\n";
  } else if (format == "csv" && kind == "graphs") {
    o << "key,p,loops,automorphisms,connected\n";
    for (const auto& x : r)
      o << x["key"].get<std::string>() << "," << x["graph"]["p"].get<int>() << "," << x["graph"]["loops"].get<int>() << ","
        << x["automorphisms"].get<std::string>() << "," << (x["connected"].get<bool>() ? "true" : "false") << "\n";
  } else if (format == "csv" && kind == "trajectory") {
    o << "t,graph,value\n";
    for (const auto& x : r["rows"]) o << x["t"].dump() << "," << x["graph"].get<std::string>() << "," << x["value"].dump() << "\n";
  } else {
    throw validation_error("--format " + format + " is not available for " + kind + " results");
  }
  return o.str();
}

inline std::string render(const std::string& kind, const json& r, const std::string& format) {
  if (format == "json") return io::envelope(kind, r).dump(2) + "\n";
  return render_flat(kind, r, format);
}

// --------------------------------------------------------------------- run

/// Parses args (without the program name), runs the command, writes to out/err.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Colored tensor model computations", "ctm_cli"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::version));
  std::string format = "json", output;
  std::vector<std::string> convention_items;
  app.add_option("--format", format, "json (default), csv or text")->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option("--output", output, "write to a file instead of stdout");
  app.add_option("--convention", convention_items,
                 "KEY=VALUE: sd.form=z|w, sd.dipole=variable|eliminated, hopf.singletons=off|on, "
                 "flow.k0=on|off, flow.sign=-|+, flow.split=marked|all_ordered|all_unordered");

  std::string kind;
  json result;
  std::function<void()> action;
  Conventions conv;

  int d = 3, max_vertices = 4, max_order = 6, op_vertices = 0, white = 0, black = 0, k = -1, vertex = 1, steps = 100,
      max_sum = 5;
  bool connected = false;
  std::optional<int> n_value;
  double n_float = 2, t_end = 0.1;
  std::string input = "-", edges, graph_key, color = "black", seed_file;

  // graphs
  auto* graphs = app.add_subcommand("graphs", "graph enumeration and canonical forms");
  graphs->require_subcommand(1);
  auto* g_enum = graphs->add_subcommand("enumerate", "all classes up to a vertex count");
  g_enum->add_option("--D", d)->required();
  g_enum->add_option("--max-vertices", max_vertices, "total vertex count, white plus black")->required();
  g_enum->add_flag("--connected", connected);
  g_enum->callback([&] {
    action = [&] {
      if (max_vertices < 2) throw validation_error("--max-vertices must be >= 2");
      std::vector<ColoredGraph> gs;
      for (const auto& key : enumerate_graphs(d, max_vertices / 2, connected)) gs.push_back(graph_from_key(key));
      kind = "graphs";
      result = graphs_result(gs);
    };
  });
  auto* g_canon = graphs->add_subcommand("canonical", "canonical key and automorphisms of input graphs");
  g_canon->add_option("--input", input, "graph JSON file, - for stdin");
  g_canon->callback([&] {
    action = [&] {
      std::vector<ColoredGraph> gs;
      for (const auto& g : graphs_from_input(read_json(input), input)) gs.push_back(graph_from_key(canonical_form(g)).with_loops(g.loops()));
      kind = "graphs";
      result = graphs_result(gs);
    };
  });

  // moments
  auto* moments = app.add_subcommand("moments", "Gaussian moment of a product of trace invariants");
  moments->add_option("--input", input, "JSON list of graphs");
  moments->add_option("--N", n_value, "evaluate at this N");
  moments->callback([&] {
    action = [&] {
      kind = "moment";
      result = moment_result(graphs_from_input(read_json(input), input), n_value);
    };
  });

  // contract / cut
  auto* contract_cmd = app.add_subcommand("contract", "remove a white/black pair and reconnect");
  contract_cmd->add_option("--input", input);
  contract_cmd->add_option("--white", white)->required();
  contract_cmd->add_option("--black", black)->required();
  contract_cmd->callback([&] {
    action = [&] {
      const auto g = single_graph(read_json(input), input);
      auto c = contract(g, white - 1, black - 1);
      kind = "graphs";
      result = graphs_result({c.graph.with_loops(c.graph.loops() + c.new_loops)});
    };
  });
  auto* cut_cmd = app.add_subcommand("cut", "edge cuts closed by a new pair");
  cut_cmd->add_option("--input", input);
  auto* edges_opt = cut_cmd->add_option("--edges", edges, "COLOR:WHITE pairs, 1-based, comma separated");
  cut_cmd->add_option("--k", k, "enumerate every cut of k edges")->excludes(edges_opt);
  cut_cmd->callback([&] {
    action = [&] {
      const auto g = single_graph(read_json(input), input);
      kind = "cuts";
      result = json::array();
      if (k >= 0) {
        for (const auto& cut : enumerate_cuts(g, k)) result.push_back(cut_entry(cut, edge_cut(g, cut)));
      } else {
        const auto cut = parse_edges(edges);
        result.push_back(cut_entry(cut, edge_cut(g, cut)));
      }
    };
  });

  // sd
  auto* sd = app.add_subcommand("sd", "Schwinger-Dyson constraints");
  sd->require_subcommand(1);
  auto* sd_ver = sd->add_subcommand("verify", "constraint residuals on the generating function");
  sd_ver->add_option("--D", d)->required();
  sd_ver->add_option("--max-order", max_order, "vertex order of the generating function")->required();
  sd_ver->add_option("--op-max-vertices", op_vertices, "largest constraint graph, default --max-order");
  auto* gk = sd_ver->add_option("--graph", graph_key, "single constraint: graph key");
  sd_ver->add_option("--vertex", vertex, "its black vertex, 1-based")->needs(gk);
  sd_ver->callback([&] {
    action = [&] {
      std::optional<std::pair<GraphKey, int>> only;
      if (!graph_key.empty()) only = std::pair{io::key_from_json(graph_key, "--graph"), vertex};
      kind = "sd_verify";
      result = sd_verify(d, max_order, op_vertices > 0 ? op_vertices : max_order, only, conv.sd_form);
    };
  });
  auto* sd_br = sd->add_subcommand("bracket", "structure constants of constraint commutators");
  sd_br->add_option("--D", d)->required();
  sd_br->add_option("--max-vertices", max_vertices, "largest constraint graph")->required();
  sd_br->callback([&] {
    action = [&] {
      kind = "sd_bracket";
      result = sd_bracket(d, max_vertices, conv.sd_dipole);
    };
  });
  auto* sd_neck = sd->add_subcommand("necklace", "D=2 necklace operator brackets [L_m, L_n]");
  sd_neck->add_option("--max-sum", max_sum);
  sd_neck->callback([&] {
    action = [&] {
      kind = "necklace_relations";
      result = sd_necklace(max_sum, conv.sd_dipole);
    };
  });

  // hopf
  auto* hopf = app.add_subcommand("hopf", "Hopf algebra of marked graphs");
  hopf->require_subcommand(1);
  for (const std::string name : {"coproduct", "antipode"}) {
    auto* c = hopf->add_subcommand(name, name + " of a marked graph");
    c->add_option("--input", input, "graph JSON, marked graph JSON, or a previous result");
    c->add_option("--color", color, "marked vertex color")->check(CLI::IsMember({"white", "black"}));
    c->add_option("--vertex", vertex, "marked vertex, 1-based");
    c->callback([&, name] {
      action = [&, name] {
        HopfAlgebra h(0 + generator_from_input(read_json(input), input, color, vertex).graph.colors(), conv.hopf);
        const auto x = generator_from_input(read_json(input), input, color, vertex);
        kind = name;
        if (name == "coproduct") {
          result = coproduct_result(x, h.coproduct(x));
        } else {
          try {
            result = antipode_result(x, h.antipode(x));
          } catch (const std::logic_error& e) {
            throw VerificationFailure{json{{"generator", io::to_json(x)}, {"error", e.what()}}};
          }
        }
      };
    });
  }
  auto* h_br = hopf->add_subcommand("bracket", "infinitesimal-character brackets beside the constraint brackets");
  h_br->add_option("--D", d)->required();
  h_br->add_option("--max-vertices", max_vertices)->required();
  h_br->callback([&] {
    action = [&] {
      kind = "hopf_bracket";
      result = hopf_bracket(d, max_vertices);
    };
  });
  auto* h_ver = hopf->add_subcommand("verify", "coassociativity, counit and antipode on every generator");
  h_ver->add_option("--D", d)->required();
  h_ver->add_option("--max-vertices", max_vertices)->required();
  h_ver->callback([&] {
    action = [&] {
      kind = "hopf_verify";
      result = hopf_verify(d, max_vertices, conv.hopf);
    };
  });

  // flow
  auto* flow = app.add_subcommand("flow", "effective couplings and their flow");
  flow->require_subcommand(1);
  auto* f_ver = flow->add_subcommand("verify", "exact flow identity on Wick effective couplings");
  f_ver->add_option("--D", d)->required();
  f_ver->add_option("--max-order", max_order, "V_max")->required();
  f_ver->add_option("--seed", seed_file, "seed JSON; default dipole 1/2 plus two-pair graphs 1/10");
  f_ver->callback([&] {
    action = [&] {
      const auto lambda = effective_couplings(d, max_order, seed_from_input(seed_file, d));
      const auto rep = verify_flow(lambda, conv.flow);
      kind = "flow_verify";
      result = flow_verify_result(d, max_order, rep);
      if (!rep.ok()) throw VerificationFailure{result};
    };
  });
  auto* f_coup = flow->add_subcommand("couplings", "effective couplings lambda(t)");
  f_coup->add_option("--D", d)->required();
  f_coup->add_option("--max-order", max_order)->required();
  f_coup->add_option("--seed", seed_file);
  f_coup->callback([&] {
    action = [&] {
      kind = "effective_couplings";
      result = io::to_json(effective_couplings(d, max_order, seed_from_input(seed_file, d)));
    };
  });
  auto* f_int = flow->add_subcommand("integrate", "RK4 trajectory of the truncated flow");
  f_int->add_option("--D", d)->required();
  f_int->add_option("--N", n_float)->required();
  f_int->add_option("--t-end", t_end)->required();
  f_int->add_option("--steps", steps)->required();
  f_int->add_option("--max-order", max_order);
  f_int->add_option("--seed", seed_file);
  f_int->callback([&] {
    action = [&] {
      const FlowSystem sys(d, max_order, n_float, conv.flow);
      FlowState start;
      for (const auto& [key, v] : seed_from_input(seed_file, d)) {
        double x = 0;
        for (const auto& [e, c] : v.terms()) x += static_cast<double>(c) * std::pow(n_float, e);
        start.couplings[key] = x;
      }
      const auto tr = integrate_flow(sys, start, t_end, steps);
      json rows = json::array();
      for (const auto& st : tr.states)
        for (const auto& [key, v] : st.couplings) rows.push_back(trajectory_row(st.t, key, v));
      kind = "trajectory";
      result = {{"D", d}, {"N", n_float}, {"max_vertices", max_order}, {"aborted", tr.aborted}, {"rows", rows}};
      if (tr.aborted) throw VerificationFailure{result};
    };
  });
  auto* f_mm = flow->add_subcommand("matrix-modes", "D=2 couplings by necklace multiset");
  f_mm->add_option("--max-order", max_order)->required();
  f_mm->add_option("--seed", seed_file);
  f_mm->callback([&] {
    action = [&] {
      kind = "matrix_modes";
      result = json::array();
      for (const auto& e : matrix_mode_expand(effective_couplings(2, max_order, seed_from_input(seed_file, 2))))
        result.push_back(matrix_entry(e));
    };
  });

  // json
  auto* js = app.add_subcommand("json", "result files");
  js->require_subcommand(1);
  auto* js_norm = js->add_subcommand("normalize", "re-read a result through the typed parsers and print it");
  js_norm->add_option("--input", input);
  js_norm->callback([&] {
    action = [&] {
      const auto env = normalize(read_json(input));
      kind = env["kind"].get<std::string>();
      result = env["result"];
    };
  });

  std::vector<std::string> argv_store{"ctm_cli"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return input_error;
  }

  auto write = [&](const std::string& text) {
    if (output.empty()) {
      out << text;
    } else {
      std::ofstream f(output);
      if (!f) throw validation_error("cannot write '" + output + "'");
      f << text;
    }
  };
  try {
    conv = parse_conventions(convention_items);
    action();
    write(render(kind, result, format));
    return ok;
  } catch (const VerificationFailure& f) {
    write(render(kind, f.output, format == "json" || f.output.contains("error") ? "json" : format));
    err << "verification failed\n";
    return verification_failed;
  } catch (const validation_error& e) {
    err << "input error: " << e.what() << "\n";
    return input_error;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << "\n";
    return input_error;
  }
}

}  // namespace ctm::cli

#endif  // CTM_TOOLS_CLI_HPP
