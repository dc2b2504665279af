#include "cltrace/groups.hpp"

#include "cltrace/errors.hpp"

#include <cmath>
#include <ostream>

namespace cltrace {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;
const cd kI(0.0, 1.0);

Eigen::MatrixXcd complex_gaussian(int rows, int cols, Rng& rng) {
  // real and imaginary parts N(0, 1/2); the scale is irrelevant for QR
  std::normal_distribution<double> normal(0.0, kSqrtHalf);
  Eigen::MatrixXcd out(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(r, c) = cd(re, im);
    }
  return out;
}

Eigen::MatrixXd real_gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) out(r, c) = normal(rng);
  return out;
}

GroupElement sample_unitary(int n, Rng& rng) {
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(complex_gaussian(n, n, rng));
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd& r = qr.matrixQR();
  // Q R = (Q D)(D^{-1} R) with D_kk = R_kk/|R_kk| makes the triangular factor's diagonal positive.
  for (int k = 0; k < n; ++k) {
    const double mod = std::abs(r(k, k));
    if (mod > 0) q.col(k) *= r(k, k) / mod;
  }
  return {GroupKind::Unitary, n, std::move(q)};
}

GroupElement sample_orthogonal(int n, Rng& rng) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(real_gaussian(n, n, rng));
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (int k = 0; k < n; ++k)
    if (r(k, k) < 0) q.col(k) *= -1.0;
  if (q.determinant() < 0) q.col(n - 1) *= -1.0;
  return {GroupKind::SpecialOrthogonal, n, q.cast<cd>()};
}

// tau(u; v) = (-conj v; conj u). An antilinear isometry commuting with USp(2n).
Eigen::VectorXcd tau(const Eigen::VectorXcd& c, int n) {
  Eigen::VectorXcd out(2 * n);
  out.head(n) = -c.tail(n).conjugate();
  out.tail(n) = c.head(n).conjugate();
  return out;
}

GroupElement sample_symplectic(int n, Rng& rng) {
  const Eigen::MatrixXcd g = complex_gaussian(2 * n, n, rng);
  Eigen::MatrixXcd q(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXcd c = g.col(k);
    // modified Gram-Schmidt against q_m and tau(q_m), twice for stability
    for (int pass = 0; pass < 2; ++pass) {
      for (int m = 0; m < k; ++m) {
        c -= q.col(m) * q.col(m).dot(c);
        c -= q.col(n + m) * q.col(n + m).dot(c);
      }
    }
    c /= c.norm();
    q.col(k) = c;
    q.col(n + k) = tau(c, n);
  }
  return {GroupKind::UnitarySymplectic, n, std::move(q)};
}

Eigen::MatrixXcd unit(int dim, int r, int c, cd value = 1.0) {
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(dim, dim);
  x(r, c) = value;
  return x;
}

// Orthonormal basis of u(n).
std::vector<Eigen::MatrixXcd> unitary_algebra(int n) {
  std::vector<Eigen::MatrixXcd> out;
  for (int j = 0; j < n; ++j) out.push_back(unit(n, j, j, kI));
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      out.push_back((unit(n, j, k) - unit(n, k, j)) * kSqrtHalf);
      out.push_back((unit(n, j, k, kI) + unit(n, k, j, kI)) * kSqrtHalf);
    }
  return out;
}

}  // namespace

Eigen::MatrixXcd symplectic_form(int rank) {
  Eigen::MatrixXcd j = Eigen::MatrixXcd::Zero(2 * rank, 2 * rank);
  j.topRightCorner(rank, rank).setIdentity();
  j.bottomLeftCorner(rank, rank) = -Eigen::MatrixXcd::Identity(rank, rank);
  return j;
}

Diagnostics group_diagnostics(const GroupElement& m) {
  Diagnostics out;
  const auto& a = m.matrix;
  const int dim = static_cast<int>(a.rows());
  if (a.cols() != dim) {
    out.unitarity = INFINITY;
    return out;
  }
  out.unitarity = (a.adjoint() * a - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (m.kind == GroupKind::SpecialOrthogonal) {
    out.realness = a.imag().cwiseAbs().maxCoeff();
    out.determinant = std::abs(a.determinant() - 1.0);
  }
  if (m.kind == GroupKind::UnitarySymplectic) {
    if (dim % 2 != 0) {
      out.symplectic = INFINITY;
    } else {
      const Eigen::MatrixXcd j = symplectic_form(dim / 2);
      out.symplectic = (a.transpose() * j * a - j).cwiseAbs().maxCoeff();
    }
  }
  return out;
}

GroupElement identity_element(GroupKind kind, int rank) {
  const int dim = matrix_dimension(kind, rank);
  return {kind, rank, Eigen::MatrixXcd::Identity(dim, dim)};
}

GroupElement haar_sample(GroupKind kind, int rank, Rng& rng) {
  if (rank < 1) throw DomainError("haar_sample: rank must be at least 1");
  switch (kind) {
    case GroupKind::Unitary: return sample_unitary(rank, rng);
    case GroupKind::SpecialOrthogonal: return sample_orthogonal(rank, rng);
    case GroupKind::UnitarySymplectic: return sample_symplectic(rank, rng);
  }
  throw DomainError("haar_sample: unknown group");
}

Eigen::MatrixXcd LieBasis::combine(const Eigen::VectorXd& xi) const {
  const int dim = matrix_dimension(kind, rank);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::size_t k = 0; k < elements.size(); ++k) out += xi(static_cast<Eigen::Index>(k)) * elements[k];
  return out;
}

LieBasis lie_basis(GroupKind kind, int rank) {
  if (rank < 1) throw DomainError("lie_basis: rank must be at least 1");
  LieBasis out{kind, rank, {}};
  const int n = rank;
  switch (kind) {
    case GroupKind::Unitary:
      out.elements = unitary_algebra(n);
      break;
    case GroupKind::SpecialOrthogonal:
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) out.elements.push_back((unit(n, j, k) - unit(n, k, j)) * kSqrtHalf);
      break;
    case GroupKind::UnitarySymplectic: {
      // [[A, 0], [0, conj A]] for A in u(n) and [[0, B], [-conj B, 0]] for complex symmetric B
      for (const auto& a : unitary_algebra(n)) {
        Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
        x.topLeftCorner(n, n) = a * kSqrtHalf;
        x.bottomRightCorner(n, n) = a.conjugate() * kSqrtHalf;
        out.elements.push_back(std::move(x));
      }
      std::vector<Eigen::MatrixXcd> symmetric;
      for (int j = 0; j < n; ++j) {
        symmetric.push_back(unit(n, j, j));
        symmetric.push_back(unit(n, j, j, kI));
      }
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
          symmetric.push_back((unit(n, j, k) + unit(n, k, j)) * kSqrtHalf);
          symmetric.push_back((unit(n, j, k, kI) + unit(n, k, j, kI)) * kSqrtHalf);
        }
      for (const auto& b : symmetric) {
        Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
        x.topRightCorner(n, n) = b * kSqrtHalf;
        x.bottomLeftCorner(n, n) = -b.conjugate() * kSqrtHalf;
        out.elements.push_back(std::move(x));
      }
      break;
    }
  }
  return out;
}

Eigen::MatrixXcd expm_skew_hermitian(const Eigen::MatrixXcd& x) {
  // x = iH with H Hermitian
  const Eigen::MatrixXcd h = -kI * x;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  const Eigen::VectorXcd phases = (kI * eig.eigenvalues().cast<cd>()).array().exp();
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

BrownianMotion::BrownianMotion(GroupKind kind, int rank) : basis_(lie_basis(kind, rank)) {}

Eigen::MatrixXcd BrownianMotion::increment_from(const Eigen::VectorXd& z, double h) const {
  if (!std::isfinite(h) || h < 0) throw DomainError("Brownian step needs a finite h >= 0");
  return basis_.combine(z * std::sqrt(2.0 * h));
}

Eigen::MatrixXcd BrownianMotion::increment(double h, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(static_cast<Eigen::Index>(basis_.size()));
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal(rng);
  return increment_from(z, h);
}

GroupElement BrownianMotion::apply(const GroupElement& m, const Eigen::MatrixXcd& a) const {
  Eigen::MatrixXcd e = expm_skew_hermitian(a);
  if (m.kind == GroupKind::SpecialOrthogonal) e = e.real().cast<cd>();
  return {m.kind, m.rank, m.matrix * e};
}

GroupElement BrownianMotion::step(const GroupElement& m, double h, Rng& rng) const {
  if (m.kind != basis_.kind || m.rank != basis_.rank) throw KindMismatch("Brownian step: element and basis differ");
  return apply(m, increment(h, rng));
}

GroupElement brownian_step(const GroupElement& m, double h, Rng& rng) {
  return BrownianMotion(m.kind, m.rank).step(m, h, rng);
}

std::vector<cd> power_traces(const Eigen::MatrixXcd& m, int max_power) {
  std::vector<cd> out(static_cast<std::size_t>(std::max(max_power, 0)) + 1);
  out[0] = static_cast<double>(m.rows());
  if (max_power < 1) return out;
  Eigen::MatrixXcd power = m;
  Eigen::MatrixXcd next(m.rows(), m.cols());
  out[1] = power.trace();
  for (int j = 2; j <= max_power; ++j) {
    next.noalias() = power * m;
    power.swap(next);
    out[static_cast<std::size_t>(j)] = power.trace();
  }
  return out;
}

Eigen::VectorXd TraceVector::realified() const {
  Eigen::VectorXd out(2 * values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out(2 * i) = values(i).real();
    out(2 * i + 1) = values(i).imag();
  }
  return out;
}

double centering_shift(GroupKind kind, int j) {
  if (j % 2 != 0) return 0.0;
  if (kind == GroupKind::SpecialOrthogonal) return -1.0;
  if (kind == GroupKind::UnitarySymplectic) return 1.0;
  return 0.0;
}

TraceVector trace_vector(GroupKind kind, int rank, const std::vector<cd>& traces, int d, int r, bool centered) {
  if (r < 1 || r > d) throw DomainError("trace_vector: need 1 <= r <= d");
  if (static_cast<int>(traces.size()) <= d) throw DomainError("trace_vector: too few traces");
  TraceVector out{kind, d, r, rank, centered, Eigen::VectorXcd(r)};
  for (int i = 0; i < r; ++i) {
    const int j = d - r + 1 + i;
    cd v = traces[static_cast<std::size_t>(j)];
    if (has_real_traces(kind)) {
      if (std::abs(v.imag()) > 1e-9) {
        throw DomainError("trace of power " + std::to_string(j) + " has imaginary part " +
                          std::to_string(v.imag()) + " on a real-trace group");
      }
      v = v.real();
    }
    if (centered) v += centering_shift(kind, j);
    out.values(i) = v;
  }
  return out;
}

TraceVector trace_vector(const GroupElement& m, int d, int r, bool centered) {
  if (r < 1 || r > d) throw DomainError("trace_vector: need 1 <= r <= d");
  return trace_vector(m.kind, m.rank, power_traces(m.matrix, d), d, r, centered);
}

std::vector<Jet2> power_trace_jets(const Eigen::MatrixXcd& m, const Eigen::MatrixXcd& a, int max_power) {
  // d/ds Tr(G^j) = j Tr(M^j A),  d2/ds2 Tr(G^j) = j sum_{l=1}^{j} Tr(M^l A M^{j-l} A)
  std::vector<Jet2> out(static_cast<std::size_t>(std::max(max_power, 0)) + 1);
  const auto dim = m.rows();
  std::vector<Eigen::MatrixXcd> powers(out.size());
  powers[0] = Eigen::MatrixXcd::Identity(dim, dim);
  for (std::size_t j = 1; j < powers.size(); ++j) powers[j] = powers[j - 1] * m;
  // B_l = M^l A
  std::vector<Eigen::MatrixXcd> pa(out.size());
  for (std::size_t l = 0; l < pa.size(); ++l) pa[l] = powers[l] * a;
  out[0] = {static_cast<double>(dim), 0.0, 0.0};
  for (int j = 1; j <= max_power; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    Jet2 jet;
    jet.v = powers[uj].trace();
    jet.d1 = static_cast<double>(j) * pa[uj].trace();
    cd second = 0;
    for (int l = 1; l <= j; ++l) {
      // Tr(M^l A M^{j-l} A) = sum_{ik} (M^l A)_{ik} (M^{j-l} A)_{ki}
      second += (pa[static_cast<std::size_t>(l)].cwiseProduct(pa[static_cast<std::size_t>(j - l)].transpose())).sum();
    }
    jet.d2 = static_cast<double>(j) * second;
    out[uj] = jet;
  }
  return out;
}

Jet2 evaluate_jet(const NumericPolynomial& f, const std::vector<Jet2>& jets) {
  if (f.max_index >= static_cast<int>(jets.size())) throw DomainError("evaluate_jet: too few jets");
  Jet2 total;
  for (const auto& t : f.terms) {
    Jet2 term{t.coefficient, 0.0, 0.0};
    for (int j : t.plain) term *= jets[static_cast<std::size_t>(j)];
    for (int j : t.conjugated) term *= jets[static_cast<std::size_t>(j)].conj();
    total.v += term.v;
    total.d1 += term.d1;
    total.d2 += term.d2;
  }
  return total;
}

Jet2 evaluate_jet(const PowerSumPolynomial& f, const std::vector<Jet2>& jets, int rank) {
  return evaluate_jet(compile(f, rank), jets);
}

cd geometric_laplacian(const PowerSumPolynomial& f, const GroupElement& m, const LieBasis& basis) {
  const NumericPolynomial nf = compile(f, m.rank);
  cd out = 0;
  for (const auto& x : basis.elements) out += evaluate_jet(nf, power_trace_jets(m.matrix, x, nf.max_index)).d2;
  return out;
}
void write_sample_csv(std::ostream& out, const std::vector<GroupElement>& samples, int d) {
  out << "sample";
  for (int j = 1; j <= d; ++j) out << ",re_p" << j << ",im_p" << j;
  out << ",unitarity,determinant,symplectic,diagnostics\n";
  const auto old_precision = out.precision(17);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto traces = power_traces(samples[s].matrix, d);
    const Diagnostics diag = group_diagnostics(samples[s]);
    out << s;
    for (int j = 1; j <= d; ++j) out << ',' << traces[static_cast<std::size_t>(j)].real() << ',' << traces[static_cast<std::size_t>(j)].imag();
    out << ',' << diag.unitarity << ',' << diag.determinant << ',' << diag.symplectic << ','
        << (diag.passed() ? "pass" : "fail") << '\n';
  }
  out.precision(old_precision);
}

}  // namespace cltrace
