#pragma once

// Exact algebra of power-sum functionals p_j(M) = Tr(M^j) on the classical
// compact groups U(n), SO(n) and USp(2n): normalisation of extended indices,
// ring operations, the Laplace-Beltrami action on monomials of trace-degree
// at most two, and exact Haar expectations above their validity rank.

#include "cltrace/rank_polynomial.hpp"

#include <complex>
#include <compare>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cltrace {

enum class GroupKind { Unitary, SpecialOrthogonal, UnitarySymplectic };

/// Matrix size for rank n: n for U(n) and SO(n), 2n for USp(2n).
int matrix_dimension(GroupKind kind, int rank);

/// Short tag: "u", "so" or "sp".
std::string_view short_name(GroupKind kind);
/// Display name such as "U(n)".
std::string_view display_name(GroupKind kind);
/// Accepts "u", "so", "sp" (also "usp"), case-insensitive.
GroupKind parse_group_kind(std::string_view text);

/// True for SO and USp, whose traces of powers are real.
inline bool has_real_traces(GroupKind kind) { return kind != GroupKind::Unitary; }

/// prod_j p_j^{a_j} * prod_j conj(p_j)^{b_j} with strictly positive indices.
///
/// Exponent maps are ordered by index, which makes the representation
/// canonical and usable as a map key.
class PowerSumMonomial {
 public:
  using ExponentMap = std::map<int, int>;

  PowerSumMonomial() = default;
  /// Throws DomainError on a non-positive index or exponent.
  PowerSumMonomial(ExponentMap plain, ExponentMap conjugated = {});

  static PowerSumMonomial power_sum(int index, int exponent = 1);
  static PowerSumMonomial conj_power_sum(int index, int exponent = 1);

  const ExponentMap& plain() const noexcept { return plain_; }
  const ExponentMap& conjugated() const noexcept { return conj_; }

  /// k_a = sum j a_j.
  int plain_weight() const noexcept;
  /// k_b = sum j b_j.
  int conj_weight() const noexcept;
  int weight() const noexcept { return plain_weight() + conj_weight(); }
  /// Number of trace factors, counted with multiplicity.
  int trace_degree() const noexcept;
  /// Largest index appearing in either map; 0 for the constant monomial.
  int max_index() const noexcept;
  bool is_constant() const noexcept { return plain_.empty() && conj_.empty(); }

  PowerSumMonomial conjugate() const { return PowerSumMonomial(conj_, plain_); }
  PowerSumMonomial operator*(const PowerSumMonomial& rhs) const;

  friend auto operator<=>(const PowerSumMonomial&, const PowerSumMonomial&) = default;
  friend bool operator==(const PowerSumMonomial&, const PowerSumMonomial&) = default;

 private:
  ExponentMap plain_;
  ExponentMap conj_;
};

/// Finite sum of monomials with coefficients in Q[n], tied to one group family.
///
/// Zero coefficients are never stored. Under SO and USp every trace is real,
/// so conjugated factors are rejected on insertion.
class PowerSumPolynomial {
 public:
  using Terms = std::map<PowerSumMonomial, RankPolynomial>;

  explicit PowerSumPolynomial(GroupKind kind) : kind_(kind) {}

  static PowerSumPolynomial constant(GroupKind kind, const RankPolynomial& value);
  static PowerSumPolynomial monomial(GroupKind kind, const PowerSumMonomial& m,
                                     const RankPolynomial& coefficient = RankPolynomial(1));
  /// p_index with the extended-index convention applied (see normalize_index).
  static PowerSumPolynomial power_sum(GroupKind kind, int index);
  /// conj(p_index); equal to power_sum() for the real-trace groups.
  static PowerSumPolynomial conj_power_sum(GroupKind kind, int index);

  GroupKind kind() const noexcept { return kind_; }
  const Terms& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }
  RankPolynomial coefficient(const PowerSumMonomial& m) const;
  /// Largest index over all monomials; 0 for a constant.
  int max_index() const noexcept;
  int max_trace_degree() const noexcept;

  void add_term(const PowerSumMonomial& m, const RankPolynomial& coefficient);

  PowerSumPolynomial& operator+=(const PowerSumPolynomial& rhs);
  PowerSumPolynomial& operator-=(const PowerSumPolynomial& rhs);
  PowerSumPolynomial& operator*=(const PowerSumPolynomial& rhs);
  PowerSumPolynomial& operator*=(const RankPolynomial& scalar);
  PowerSumPolynomial operator-() const;

  friend PowerSumPolynomial operator+(PowerSumPolynomial lhs, const PowerSumPolynomial& rhs) { return lhs += rhs; }
  friend PowerSumPolynomial operator-(PowerSumPolynomial lhs, const PowerSumPolynomial& rhs) { return lhs -= rhs; }
  friend PowerSumPolynomial operator*(PowerSumPolynomial lhs, const PowerSumPolynomial& rhs) { return lhs *= rhs; }
  friend PowerSumPolynomial operator*(PowerSumPolynomial lhs, const RankPolynomial& s) { return lhs *= s; }
  friend PowerSumPolynomial operator*(const RankPolynomial& s, PowerSumPolynomial rhs) { return rhs *= s; }
  friend bool operator==(const PowerSumPolynomial&, const PowerSumPolynomial&) = default;

 private:
  void require_same_kind(const PowerSumPolynomial& rhs) const;

  GroupKind kind_;
  Terms terms_;
};

/// p_index as a polynomial: p_0 is the matrix dimension (n, or 2n for USp),
/// p_{-k} is conj(p_k) on U(n) and p_k on the real-trace groups.
PowerSumPolynomial normalize_index(int raw_index, GroupKind kind);

/// Distributive product; KindMismatch when the families differ.
PowerSumPolynomial poly_multiply(const PowerSumPolynomial& f, const PowerSumPolynomial& g);

/// Swaps plain and conjugated factors. Coefficients lie in Q[n] and are fixed.
/// The identity on SO and USp, where every trace is real.
PowerSumPolynomial conjugate(const PowerSumPolynomial& f);

/// Laplace-Beltrami operator for the metric <X, Y> = Tr(X^* Y).
///
/// Defined on monomials of trace-degree <= 2: 1, p_j, p_j p_k and, on U(n),
/// the conjugated and mixed shapes conj(p_j), conj(p_j p_k), p_j conj(p_k).
/// Throws UnsupportedShape for anything of trace-degree 3 or more.
PowerSumPolynomial laplacian(const PowerSumPolynomial& f);

/// Delta(fg) - f Delta(g) - g Delta(f): the limit of
/// E[(f(M_t) - f(M))(g(M_t) - g(M)) | M] / t for Brownian motion M_t.
/// Both arguments must be of trace-degree <= 1.
PowerSumPolynomial quadratic_variation(const PowerSumPolynomial& f, const PowerSumPolynomial& g);

/// Exact Haar expectation as a polynomial in n together with the smallest
/// rank from which the value is guaranteed.
struct ExpectationResult {
  RankPolynomial value;
  int validity_threshold = 1;

  struct Evaluated {
    Rational value;
    bool guaranteed;
  };
  /// Value at rank n. Throws BelowThreshold for n < validity_threshold unless
  /// `force` is set, in which case the formula value is returned flagged
  /// as not guaranteed.
  Evaluated at(int n, bool force = false) const;
};

/// Linear extension of the Diaconis-Shahshahani moment formulas.
///
/// Unitary: zero when k_a != k_b (any n); otherwise delta_{a,b} prod j^{a_j} a_j!
/// from n >= k_a. SO(n): prod f_a(j) from n >= k_a + 1. USp(2n):
/// prod (-1)^{(j-1) a_j} f_a(j) from n >= ceil(k_a / 2).
ExpectationResult haar_expectation(const PowerSumPolynomial& f);

/// Moment of a single monomial (same rules as haar_expectation).
ExpectationResult monomial_expectation(GroupKind kind, const PowerSumMonomial& m);

/// The case-split factor f_a(j) for exponent a = a_j.
Integer moment_factor(int index, int exponent);

/// Numerical value of f at a matrix whose power traces are `traces`, where
/// traces[j] = Tr(M^j) for j = 1..f.max_index() (traces[0] is ignored).
std::complex<double> evaluate(const PowerSumPolynomial& f, std::span<const std::complex<double>> traces,
                              int rank);

/// f with its coefficients evaluated at a fixed rank, for repeated numerical
/// evaluation in inner loops.
struct NumericPolynomial {
  struct Term {
    std::complex<double> coefficient;
    std::vector<int> plain;       // indices with multiplicity
    std::vector<int> conjugated;
  };
  std::vector<Term> terms;
  int max_index = 0;

  std::complex<double> operator()(std::span<const std::complex<double>> traces) const;
};

NumericPolynomial compile(const PowerSumPolynomial& f, int rank);

/// All monomials inside the Laplacian's domain with k_a + k_b <= max_weight,
/// including the constant monomial.
std::vector<PowerSumMonomial> laplacian_domain(GroupKind kind, int max_weight);

/// Every admissible monomial with k_a + k_b <= max_weight (no conjugated
/// factors for SO/USp), including the constant monomial.
std::vector<PowerSumMonomial> monomials_up_to_weight(GroupKind kind, int max_weight);

/// "p[1,2]", "~p[3]", "p[1]*~p[1]" or "1".
std::string to_string(const PowerSumMonomial& m);
/// e.g. "-2*n*p[2] - 2*p[1,1]"; non-constant terms by trace-degree, constant last.
std::string to_string(const PowerSumPolynomial& f);

/// Parses sums of products of integers/rationals, the symbol n, p<k>, ~p<k>,
/// p[i,j,...], ~p[i,j,...] and parenthesised subexpressions, e.g.
/// "p2*~p2 - 3/2*p1 + n". Throws ParseError.
PowerSumPolynomial parse_polynomial(std::string_view text, GroupKind kind);

}  // namespace cltrace
