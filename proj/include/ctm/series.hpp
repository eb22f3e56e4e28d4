#ifndef CTM_SERIES_HPP
#define CTM_SERIES_HPP

#include "ctm/colored_graph.hpp"
#include "ctm/polynomial.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctm {

/// A series variable: either a graph (by canonical key bytes) or the flow scale t.
/// Graph symbols weigh their vertex count, t weighs 2 (one white-black pair).
class Symbol {
 public:
  Symbol() = default;
  explicit Symbol(GraphKey key) : key_(std::move(key)) {}
  static Symbol scale() {
    Symbol s;
    s.scale_ = true;
    return s;
  }

  bool is_scale() const noexcept { return scale_; }
  const GraphKey& graph() const {
    if (scale_) throw std::logic_error("scale symbol has no graph");
    return key_;
  }
  int weight() const { return scale_ ? 2 : 2 * key_.order(); }
  std::string str() const { return scale_ ? "t" : key_.hex(); }

  auto operator<=>(const Symbol&) const = default;

 private:
  bool scale_ = false;
  GraphKey key_;
};

/// Commutative monomial, factors sorted by symbol with positive powers.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(const Symbol& s, int power = 1) {
    if (power > 0) factors_.emplace_back(s, power);
  }

  const std::vector<std::pair<Symbol, int>>& factors() const noexcept { return factors_; }
  bool is_unit() const noexcept { return factors_.empty(); }

  int power(const Symbol& s) const {
    for (const auto& [sym, k] : factors_)
      if (sym == s) return k;
    return 0;
  }
  int weight() const {
    int w = 0;
    for (const auto& [sym, k] : factors_) w += sym.weight() * k;
    return w;
  }
  int degree() const {
    int d = 0;
    for (const auto& f : factors_) d += f.second;
    return d;
  }

  friend Monomial operator*(const Monomial& a, const Monomial& b) {
    Monomial r;
    auto i = a.factors_.begin();
    auto j = b.factors_.begin();
    while (i != a.factors_.end() || j != b.factors_.end()) {
      if (j == b.factors_.end() || (i != a.factors_.end() && i->first < j->first)) r.factors_.push_back(*i++);
      else if (i == a.factors_.end() || j->first < i->first) r.factors_.push_back(*j++);
      else {
        r.factors_.emplace_back(i->first, i->second + j->second);
        ++i;
        ++j;
      }
    }
    return r;
  }

  /// Lowers the power of s by k; the caller checks power(s) >= k.
  Monomial lowered(const Symbol& s, int k = 1) const {
    Monomial r;
    for (const auto& [sym, p] : factors_) {
      const int q = sym == s ? p - k : p;
      if (q < 0) throw std::logic_error("negative power in monomial");
      if (q > 0) r.factors_.emplace_back(sym, q);
    }
    return r;
  }

  std::string str() const {
    if (factors_.empty()) return "1";
    std::string out;
    for (const auto& [sym, k] : factors_) {
      if (!out.empty()) out += "*";
      out += sym.str();
      if (k > 1) out += "^" + std::to_string(k);
    }
    return out;
  }

  auto operator<=>(const Monomial&) const = default;

 private:
  std::vector<std::pair<Symbol, int>> factors_;
};

/// Truncated multivariate power series with N-polynomial coefficients.
/// Terms of weight above max_weight are discarded on every operation.
class CouplingSeries {
 public:
  explicit CouplingSeries(int max_weight = 0) : max_weight_(max_weight) {}

  static CouplingSeries constant(const NPolynomial& c, int max_weight) {
    CouplingSeries s(max_weight);
    s.add(Monomial{}, c);
    return s;
  }

  int max_weight() const noexcept { return max_weight_; }
  const std::map<Monomial, NPolynomial>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  NPolynomial coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? NPolynomial{} : it->second;
  }

  void add(const Monomial& m, const NPolynomial& c) {
    if (c.is_zero() || m.weight() > max_weight_) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  CouplingSeries truncated(int max_weight) const {
    CouplingSeries r(max_weight);
    for (const auto& [m, c] : terms_) r.add(m, c);
    return r;
  }

  CouplingSeries& operator+=(const CouplingSeries& o) {
    for (const auto& [m, c] : o.terms_) add(m, c);
    return *this;
  }
  CouplingSeries& operator-=(const CouplingSeries& o) {
    for (const auto& [m, c] : o.terms_) add(m, -c);
    return *this;
  }
  CouplingSeries& operator*=(const NPolynomial& s) {
    CouplingSeries r(max_weight_);
    for (const auto& [m, c] : terms_) r.add(m, c * s);
    return *this = std::move(r);
  }
  friend CouplingSeries operator+(CouplingSeries a, const CouplingSeries& b) { return a += b; }
  friend CouplingSeries operator-(CouplingSeries a, const CouplingSeries& b) { return a -= b; }
  friend CouplingSeries operator*(CouplingSeries a, const NPolynomial& s) { return a *= s; }
  friend CouplingSeries operator*(const CouplingSeries& a, const CouplingSeries& b) {
    CouplingSeries r(std::min(a.max_weight_, b.max_weight_));
    for (const auto& [ma, ca] : a.terms_) {
      const int wa = ma.weight();
      if (wa > r.max_weight_) continue;
      for (const auto& [mb, cb] : b.terms_)
        if (wa + mb.weight() <= r.max_weight_) r.add(ma * mb, ca * cb);
    }
    return r;
  }
  friend bool operator==(const CouplingSeries& a, const CouplingSeries& b) { return a.terms_ == b.terms_; }

 private:
  int max_weight_;
  std::map<Monomial, NPolynomial> terms_;
};

namespace detail {

inline int smallest_positive_weight(const CouplingSeries& x) {
  int w = -1;
  for (const auto& [m, c] : x.terms()) {
    const int mw = m.weight();
    if (mw == 0 && !m.is_unit()) throw std::domain_error("series contains a weight-zero variable");
    if (mw > 0 && (w < 0 || mw < w)) w = mw;
  }
  return w;
}

}  // namespace detail

/// log S for S with constant term 1, through log(1 + X) = sum_k (-1)^(k+1) X^k / k.
inline CouplingSeries log_series(const CouplingSeries& s) {
  if (!(s.coefficient(Monomial{}) == NPolynomial(1))) throw std::domain_error("log_series needs constant term 1");
  CouplingSeries x = s - CouplingSeries::constant(1, s.max_weight());
  CouplingSeries out(s.max_weight());
  if (detail::smallest_positive_weight(x) < 0) return out;
  CouplingSeries power = x;
  for (int k = 1; !power.is_zero(); ++k) {
    out += power * NPolynomial(Rational(k % 2 == 1 ? 1 : -1, k));
    power = power * x;
  }
  return out;
}

/// exp X for X with zero constant term.
inline CouplingSeries exp_series(const CouplingSeries& x) {
  if (!x.coefficient(Monomial{}).is_zero()) throw std::domain_error("exp_series needs zero constant term");
  CouplingSeries out = CouplingSeries::constant(1, x.max_weight());
  if (detail::smallest_positive_weight(x) < 0) return out;
  CouplingSeries power = CouplingSeries::constant(1, x.max_weight());
  for (int k = 1;; ++k) {
    power = power * x * NPolynomial(Rational(1, k));
    if (power.is_zero()) break;
    out += power;
  }
  return out;
}

/// Formal partial derivative with respect to one symbol. The result is only
/// complete up to the input order minus the symbol weight, and is truncated there.
inline CouplingSeries differentiate(const CouplingSeries& s, const Symbol& sym) {
  CouplingSeries r(s.max_weight() - sym.weight());
  for (const auto& [m, c] : s.terms()) {
    const int k = m.power(sym);
    if (k > 0) r.add(m.lowered(sym), c * Rational(k));
  }
  return r;
}

inline CouplingSeries differentiate(const CouplingSeries& s, const GraphKey& key) {
  return differentiate(s, Symbol(key));
}

}  // namespace ctm

#endif  // CTM_SERIES_HPP
