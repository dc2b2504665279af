#pragma once

// Matrix models of U(n), SO(n) and USp(2n): Haar sampling, orthonormal
// Lie-algebra bases, one-step Brownian increments and trace statistics.

#include "cltrace/psalgebra.hpp"
#include "cltrace/random.hpp"

#include <Eigen/Dense>

#include <complex>
#include <iosfwd>
#include <vector>

namespace cltrace {

using cd = std::complex<double>;

/// Element of one of the three families. SO matrices are stored with zero
/// imaginary part so that every kind shares one code path.
struct GroupElement {
  GroupKind kind;
  int rank;
  Eigen::MatrixXcd matrix;

  int dimension() const { return static_cast<int>(matrix.rows()); }
};

/// Largest entrywise defects of the defining relations.
struct Diagnostics {
  double unitarity = 0;   // |M^*M - I|_max
  double determinant = 0; // |det M - 1| (SO only)
  double symplectic = 0;  // |M^T J M - J|_max (USp only)
  double realness = 0;    // |Im M|_max (SO only)

  bool passed(double tol = 1e-10) const {
    return unitarity <= tol && determinant <= tol && symplectic <= tol && realness <= tol;
  }
};

Diagnostics group_diagnostics(const GroupElement& m);

/// J = [[0, I_n], [-I_n, 0]].
Eigen::MatrixXcd symplectic_form(int rank);

GroupElement identity_element(GroupKind kind, int rank);

/// Haar-distributed element, built by QR of a Gaussian matrix (U, SO) or by
/// quaternionic Gram-Schmidt (USp). Throws DomainError for rank < 1.
GroupElement haar_sample(GroupKind kind, int rank, Rng& rng);

/// Orthonormal basis of the Lie algebra for <X, Y> = Re Tr(X^* Y).
struct LieBasis {
  GroupKind kind;
  int rank;
  std::vector<Eigen::MatrixXcd> elements;

  std::size_t size() const { return elements.size(); }
  /// sum_k xi_k X_k
  Eigen::MatrixXcd combine(const Eigen::VectorXd& xi) const;
};

LieBasis lie_basis(GroupKind kind, int rank);

/// exp(X) for skew-Hermitian X through the eigendecomposition of -iX.
Eigen::MatrixXcd expm_skew_hermitian(const Eigen::MatrixXcd& x);

/// Euler step of Brownian motion with generator Delta = sum_k d^2/dX_k^2:
/// M -> M exp(sum_k xi_k X_k) with xi_k iid N(0, 2h).
class BrownianMotion {
 public:
  BrownianMotion(GroupKind kind, int rank);

  const LieBasis& basis() const { return basis_; }
  /// Algebra increment A = sum xi_k X_k, xi ~ N(0, 2h).
  Eigen::MatrixXcd increment(double h, Rng& rng) const;
  /// Same, from standard normal coordinates z (xi = sqrt(2h) z).
  Eigen::MatrixXcd increment_from(const Eigen::VectorXd& z, double h) const;
  GroupElement step(const GroupElement& m, double h, Rng& rng) const;
  /// m * exp(a), with the real projection re-applied for SO.
  GroupElement apply(const GroupElement& m, const Eigen::MatrixXcd& a) const;

 private:
  LieBasis basis_;
};

/// One-off convenience wrapper; builds the basis on every call.
GroupElement brownian_step(const GroupElement& m, double h, Rng& rng);

/// traces[j] = Tr(M^j) for j = 0..max_power (traces[0] is the dimension),
/// by repeated multiplication.
std::vector<cd> power_traces(const Eigen::MatrixXcd& m, int max_power);

/// W = (Tr M^{d-r+1}, ..., Tr M^d), optionally centred for SO/USp.
struct TraceVector {
  GroupKind kind;
  int d, r, rank;
  bool centered;
  Eigen::VectorXcd values;

  int first_index() const { return d - r + 1; }
  /// Real parts (SO/USp statistics).
  Eigen::VectorXd real() const { return values.real(); }
  /// Interleaved (Re, Im) coordinates in R^{2r}.
  Eigen::VectorXd realified() const;
  /// Real coordinates matching the limiting Gaussian: realified for U, real otherwise.
  Eigen::VectorXd coordinates() const { return kind == GroupKind::Unitary ? realified() : real(); }
};

/// Shift applied by centring: -1 (SO, even j), +1 (USp, even j), else 0.
double centering_shift(GroupKind kind, int j);

/// Throws DomainError unless 1 <= r <= d. For SO/USp asserts |Im| <= 1e-9
/// on every entry before dropping the imaginary part.
TraceVector trace_vector(const GroupElement& m, int d, int r, bool centered);
TraceVector trace_vector(GroupKind kind, int rank, const std::vector<cd>& traces, int d, int r, bool centered);

/// Value and first two derivatives at s = 0 of a scalar function along a curve.
struct Jet2 {
  cd v = 0, d1 = 0, d2 = 0;

  Jet2& operator*=(const Jet2& o) {
    d2 = d2 * o.v + 2.0 * d1 * o.d1 + v * o.d2;
    d1 = d1 * o.v + v * o.d1;
    v *= o.v;
    return *this;
  }
  friend Jet2 operator*(Jet2 a, const Jet2& b) { return a *= b; }
  Jet2 conj() const { return {std::conj(v), std::conj(d1), std::conj(d2)}; }
};

/// Jets of Tr((M e^{sA})^j) for j = 0..max_power.
std::vector<Jet2> power_trace_jets(const Eigen::MatrixXcd& m, const Eigen::MatrixXcd& a, int max_power);

/// Jet of f along s -> M e^{sA}.
Jet2 evaluate_jet(const PowerSumPolynomial& f, const std::vector<Jet2>& jets, int rank);
Jet2 evaluate_jet(const NumericPolynomial& f, const std::vector<Jet2>& jets);

/// sum_k d^2/ds^2 f(M e^{s X_k}) at s = 0: the Laplacian computed from the
/// matrix model alone.
cd geometric_laplacian(const PowerSumPolynomial& f, const GroupElement& m, const LieBasis& basis);

/// One CSV row per sample: Re/Im of Tr(M^j) for j = 1..d and the diagnostics.
void write_sample_csv(std::ostream& out, const std::vector<GroupElement>& samples, int d);

}  // namespace cltrace
