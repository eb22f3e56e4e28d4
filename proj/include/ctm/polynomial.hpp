#ifndef CTM_POLYNOMIAL_HPP
#define CTM_POLYNOMIAL_HPP

#include "ctm/rational.hpp"

#include <map>
#include <string>

namespace ctm {

/// Polynomial in the tensor size N with exact rational coefficients.
/// Zero coefficients are never stored.
class NPolynomial {
 public:
  NPolynomial() = default;
  NPolynomial(const Rational& c) { add_term(0, c); }  // NOLINT: constants convert implicitly
  NPolynomial(long c) : NPolynomial(Rational(c)) {}    // NOLINT

  static NPolynomial monomial(int exp, const Rational& coeff = 1) {
    NPolynomial p;
    p.add_term(exp, coeff);
    return p;
  }

  const std::map<int, Rational>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  int degree() const { return terms_.empty() ? -1 : terms_.rbegin()->first; }

  Rational coefficient(int exp) const {
    auto it = terms_.find(exp);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  void add_term(int exp, const Rational& coeff) {
    if (coeff == 0) return;
    auto [it, inserted] = terms_.emplace(exp, coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == 0) terms_.erase(it);
    }
  }

  Rational evaluate(const Rational& n) const {
    Rational acc = 0;
    int last = degree();
    // Horner over the sparse exponents.
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      for (int e = last; e > it->first; --e) acc *= n;
      acc += it->second;
      last = it->first;
    }
    for (int e = last; e > 0; --e) acc *= n;
    return acc;
  }

  NPolynomial& operator+=(const NPolynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  NPolynomial& operator-=(const NPolynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  NPolynomial& operator*=(const Rational& s) {
    if (s == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }
  friend NPolynomial operator+(NPolynomial a, const NPolynomial& b) { return a += b; }
  friend NPolynomial operator-(NPolynomial a, const NPolynomial& b) { return a -= b; }
  friend NPolynomial operator-(NPolynomial a) { return a *= Rational(-1); }
  friend NPolynomial operator*(NPolynomial a, const Rational& s) { return a *= s; }
  friend NPolynomial operator*(const Rational& s, NPolynomial a) { return a *= s; }
  friend NPolynomial operator*(const NPolynomial& a, const NPolynomial& b) {
    NPolynomial r;
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) r.add_term(ea + eb, ca * cb);
    return r;
  }
  NPolynomial& operator*=(const NPolynomial& o) { return *this = *this * o; }
  friend bool operator==(const NPolynomial& a, const NPolynomial& b) { return a.terms_ == b.terms_; }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      Rational c = it->second;
      const bool neg = c < 0;
      if (neg) c = -c;
      out += out.empty() ? (neg ? "-" : "") : (neg ? " - " : " + ");
      const bool unit = c == 1 && it->first != 0;
      if (!unit) out += to_string(c);
      if (it->first > 0) out += (unit ? "" : "*") + std::string("N") + (it->first > 1 ? "^" + std::to_string(it->first) : "");
    }
    return out;
  }

 private:
  std::map<int, Rational> terms_;
};

}  // namespace ctm

#endif  // CTM_POLYNOMIAL_HPP
