#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace cltrace {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// Polynomial in the rank symbol n with exact rational coefficients.
///
/// Dense storage, index = power of n. Trailing zeros are trimmed so that the
/// zero polynomial has no coefficients and equality is structural.
class RankPolynomial {
 public:
  RankPolynomial() = default;
  RankPolynomial(Rational constant);  // NOLINT(google-explicit-constructor)
  RankPolynomial(long long constant) : RankPolynomial(Rational(constant)) {}  // NOLINT
  RankPolynomial(int constant) : RankPolynomial(Rational(constant)) {}        // NOLINT
  RankPolynomial(std::initializer_list<Rational> coefficients);

  /// The monomial n.
  static RankPolynomial rank();

  bool is_zero() const noexcept { return coeffs_.empty(); }
  bool is_constant() const noexcept { return coeffs_.size() <= 1; }
  /// -1 for the zero polynomial.
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<Rational>& coefficients() const noexcept { return coeffs_; }
  Rational coefficient(int power) const;
  /// Constant term; the value when is_constant().
  Rational constant_term() const { return coefficient(0); }

  Rational evaluate(const Rational& n) const;
  double evaluate(double n) const;

  RankPolynomial& operator+=(const RankPolynomial& rhs);
  RankPolynomial& operator-=(const RankPolynomial& rhs);
  RankPolynomial& operator*=(const RankPolynomial& rhs);
  RankPolynomial operator-() const;

  friend RankPolynomial operator+(RankPolynomial lhs, const RankPolynomial& rhs) { return lhs += rhs; }
  friend RankPolynomial operator-(RankPolynomial lhs, const RankPolynomial& rhs) { return lhs -= rhs; }
  friend RankPolynomial operator*(RankPolynomial lhs, const RankPolynomial& rhs) { return lhs *= rhs; }
  friend bool operator==(const RankPolynomial&, const RankPolynomial&) = default;

  /// Human-readable form such as "(1/2)*n - 1/2" or "2*n".
  std::string to_string() const;

 private:
  void trim();
  std::vector<Rational> coeffs_;
};

/// Renders a rational as "3", "-2" or "1/2".
std::string rational_to_string(const Rational& q);

}  // namespace cltrace
