#include "cltrace/rank_polynomial.hpp"

#include <algorithm>
#include <sstream>

namespace cltrace {

RankPolynomial::RankPolynomial(Rational constant) {
  if (constant != 0) coeffs_.push_back(std::move(constant));
}

RankPolynomial::RankPolynomial(std::initializer_list<Rational> coefficients) : coeffs_(coefficients) {
  trim();
}

RankPolynomial RankPolynomial::rank() { return RankPolynomial{Rational(0), Rational(1)}; }

Rational RankPolynomial::coefficient(int power) const {
  if (power < 0 || power >= static_cast<int>(coeffs_.size())) return Rational(0);
  return coeffs_[static_cast<std::size_t>(power)];
}

Rational RankPolynomial::evaluate(const Rational& n) const {
  Rational acc = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * n + *it;
  return acc;
}

double RankPolynomial::evaluate(double n) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * n + it->convert_to<double>();
  return acc;
}

RankPolynomial& RankPolynomial::operator+=(const RankPolynomial& rhs) {
  if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size());
  for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) coeffs_[i] += rhs.coeffs_[i];
  trim();
  return *this;
}

RankPolynomial& RankPolynomial::operator-=(const RankPolynomial& rhs) {
  if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size());
  for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) coeffs_[i] -= rhs.coeffs_[i];
  trim();
  return *this;
}

RankPolynomial& RankPolynomial::operator*=(const RankPolynomial& rhs) {
  if (is_zero() || rhs.is_zero()) {
    coeffs_.clear();
    return *this;
  }
  std::vector<Rational> out(coeffs_.size() + rhs.coeffs_.size() - 1);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    if (coeffs_[i] == 0) continue;
    for (std::size_t j = 0; j < rhs.coeffs_.size(); ++j) out[i + j] += coeffs_[i] * rhs.coeffs_[j];
  }
  coeffs_ = std::move(out);
  trim();
  return *this;
}

RankPolynomial RankPolynomial::operator-() const {
  RankPolynomial out = *this;
  for (auto& c : out.coeffs_) c = -c;
  return out;
}

void RankPolynomial::trim() {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

std::string rational_to_string(const Rational& q) {
  std::ostringstream os;
  os << numerator(q);
  if (denominator(q) != 1) os << '/' << denominator(q);
  return os.str();
}

std::string RankPolynomial::to_string() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int p = degree(); p >= 0; --p) {
    Rational c = coefficient(p);
    if (c == 0) continue;
    const bool negative = c < 0;
    if (negative) c = -c;
    if (first) {
      if (negative) os << '-';
    } else {
      os << (negative ? " - " : " + ");
    }
    first = false;
    const std::string mag = rational_to_string(c);
    const bool fractional = denominator(c) != 1;
    if (p == 0) {
      os << mag;
      continue;
    }
    if (c != 1) os << (fractional ? "(" + mag + ")" : mag) << '*';
    os << 'n';
    if (p > 1) os << '^' << p;
  }
  return os.str();
}

}  // namespace cltrace
