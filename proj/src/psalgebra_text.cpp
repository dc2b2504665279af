// Rendering and parsing of power-sum polynomials.

#include "cltrace/errors.hpp"
#include "cltrace/psalgebra.hpp"

#include <boost/integer/common_factor_rt.hpp>

#include <cctype>
#include <sstream>

namespace cltrace {

namespace {

std::string index_list(const PowerSumMonomial::ExponentMap& m) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [j, e] : m) {
    for (int i = 0; i < e; ++i) {
      if (!first) os << ',';
      os << j;
      first = false;
    }
  }
  return os.str();
}

// Splits c into q * P with P primitive over Z and positive leading coefficient.
struct Factored {
  Rational content;
  RankPolynomial primitive;
};

Factored factor_content(const RankPolynomial& c) {
  Integer num_gcd = 0, den_lcm = 1;
  for (const auto& q : c.coefficients()) {
    if (q == 0) continue;
    const Integer num = abs(numerator(q));
    num_gcd = num_gcd == 0 ? num : gcd(num_gcd, num);
    den_lcm = lcm(den_lcm, Integer(denominator(q)));
  }
  Rational content(num_gcd, den_lcm);
  if (c.coefficients().back() < 0) content = -content;
  RankPolynomial primitive;
  {
    std::vector<Rational> scaled;
    for (const auto& q : c.coefficients()) scaled.push_back(q / content);
    for (std::size_t p = 0; p < scaled.size(); ++p) {
      RankPolynomial term(scaled[p]);
      for (std::size_t i = 0; i < p; ++i) term *= RankPolynomial::rank();
      primitive += term;
    }
  }
  return {content, primitive};
}

std::string power_of_n(std::size_t power) {
  if (power == 0) return "1";
  if (power == 1) return "n";
  return "n^" + std::to_string(power);
}

// Integer-coefficient polynomial in n, highest power first, written tight: "n-1".
std::string render_primitive(const RankPolynomial& p) {
  std::ostringstream os;
  bool first = true;
  const auto& cs = p.coefficients();
  for (std::size_t k = cs.size(); k-- > 0;) {
    const Rational& q = cs[k];
    if (q == 0) continue;
    const bool negative = q < 0;
    const Rational mag = negative ? Rational(-q) : q;
    if (first) {
      if (negative) os << '-';
    } else {
      os << (negative ? '-' : '+');
    }
    first = false;
    std::string body;
    if (k == 0) {
      body = rational_to_string(mag);
    } else if (mag == 1) {
      body = power_of_n(k);
    } else {
      body = rational_to_string(mag) + "*" + power_of_n(k);
    }
    os << body;
  }
  return os.str();
}

std::string scalar_factor(const Rational& q) {
  if (denominator(q) == 1) return rational_to_string(q);
  return "(" + rational_to_string(q) + ")";
}

// Signed rendering of coefficient * body, where body may be empty (constant term).
std::string render_term(const RankPolynomial& coefficient, const std::string& body) {
  const Factored f = factor_content(coefficient);
  const bool negative = f.content < 0;
  const Rational mag = negative ? Rational(-f.content) : f.content;
  std::vector<std::string> factors;
  if (f.primitive.is_constant()) {
    // primitive is exactly 1
    if (body.empty()) {
      factors.push_back(rational_to_string(mag));
    } else if (mag != 1) {
      factors.push_back(scalar_factor(mag));
    }
  } else {
    if (mag != 1) factors.push_back(scalar_factor(mag));
    const auto& cs = f.primitive.coefficients();
    std::size_t nonzero = 0;
    for (const auto& q : cs) nonzero += q != 0;
    if (nonzero == 1) {
      factors.push_back(power_of_n(cs.size() - 1));
    } else {
      factors.push_back("(" + render_primitive(f.primitive) + ")");
    }
  }
  if (!body.empty()) factors.push_back(body);
  std::string out = negative ? "-" : "";
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) out += '*';
    out += factors[i];
  }
  return out;
}

}  // namespace

std::string to_string(const PowerSumMonomial& m) {
  if (m.is_constant()) return "1";
  std::string out;
  if (!m.plain().empty()) out = "p[" + index_list(m.plain()) + "]";
  if (!m.conjugated().empty()) {
    if (!out.empty()) out += '*';
    out += "~p[" + index_list(m.conjugated()) + "]";
  }
  return out;
}

std::string to_string(const PowerSumPolynomial& f) {
  if (f.is_zero()) return "0";
  std::vector<std::pair<const PowerSumMonomial*, const RankPolynomial*>> ordered;
  for (int degree = 1; degree <= f.max_trace_degree(); ++degree)
    for (const auto& [m, c] : f.terms())
      if (m.trace_degree() == degree) ordered.emplace_back(&m, &c);
  for (const auto& [m, c] : f.terms())
    if (m.is_constant()) ordered.emplace_back(&m, &c);

  std::string out;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& [m, c] = ordered[i];
    std::string term = render_term(*c, m->is_constant() ? "" : to_string(*m));
    if (i == 0) {
      out = term;
    } else if (term.front() == '-') {
      out += " - " + term.substr(1);
    } else {
      out += " + " + term;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, GroupKind kind) : text_(text), kind_(kind) {}

  PowerSumPolynomial parse() {
    PowerSumPolynomial out = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  PowerSumPolynomial expression() {
    PowerSumPolynomial out = term();
    for (;;) {
      if (accept('+')) {
        out += term();
      } else if (accept('-')) {
        out -= term();
      } else {
        return out;
      }
    }
  }

  PowerSumPolynomial term() {
    PowerSumPolynomial out = unary();
    while (accept('*')) out *= unary();
    return out;
  }

  PowerSumPolynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    PowerSumPolynomial base = factor();
    if (accept('^')) {
      const long long e = integer();
      if (e < 0) fail("negative exponent");
      PowerSumPolynomial out = PowerSumPolynomial::constant(kind_, RankPolynomial(1));
      for (long long i = 0; i < e; ++i) out *= base;
      return out;
    }
    return base;
  }

  long long integer(bool allow_sign = false) {
    skip_space();
    const std::size_t start = pos_;
    if (allow_sign && pos_ < text_.size() && text_[pos_] == '-') ++pos_;
    const std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("expected an integer");
    }
    if (pos_ - digits > 15) fail("integer too large");
    return std::stoll(std::string(text_.substr(start, pos_ - start)));
  }

  PowerSumPolynomial power_sum(bool conjugated) {
    std::vector<long long> indices;
    if (accept('[')) {
      indices.push_back(integer(true));
      while (accept(',')) indices.push_back(integer(true));
      if (!accept(']')) fail("expected ']'");
    } else {
      // no whitespace between p and its index
      if (pos_ >= text_.size() || !(std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-'))
        fail("expected an index after 'p'");
      indices.push_back(integer(true));
    }
    PowerSumPolynomial out = PowerSumPolynomial::constant(kind_, RankPolynomial(1));
    for (long long j : indices) {
      if (j > 1'000'000 || j < -1'000'000) fail("index out of range");
      out *= normalize_index(static_cast<int>(j), kind_);
    }
    return conjugated ? conjugate(out) : out;
  }

  PowerSumPolynomial factor() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      PowerSumPolynomial inner = expression();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      Rational value(integer());
      if (accept('/')) {
        const long long den = integer();
        if (den == 0) fail("division by zero");
        value /= den;
      }
      return PowerSumPolynomial::constant(kind_, RankPolynomial(value));
    }
    if (c == 'n') {
      ++pos_;
      return PowerSumPolynomial::constant(kind_, RankPolynomial::rank());
    }
    if (c == '~') {
      ++pos_;
      if (peek() != 'p') fail("expected 'p' after '~'");
      if (has_real_traces(kind_)) fail("'~' is only meaningful on U(n); traces are real on SO and USp");
      ++pos_;
      return power_sum(true);
    }
    if (c == 'p') {
      ++pos_;
      return power_sum(false);
    }
    if (c == '\0') fail("unexpected end of input");
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  GroupKind kind_;
  std::size_t pos_ = 0;
};

}  // namespace

PowerSumPolynomial parse_polynomial(std::string_view text, GroupKind kind) {
  try {
    return Parser(text, kind).parse();
  } catch (const KindMismatch&) {
    throw;
  } catch (const DomainError& e) {
    throw ParseError(e.what(), 0);
  }
}

}  // namespace cltrace
