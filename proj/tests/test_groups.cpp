#include "cltrace/errors.hpp"
#include "cltrace/groups.hpp"

#include <doctest.h>

#include <sstream>

using namespace cltrace;
using Eigen::MatrixXcd;

namespace {

constexpr GroupKind kU = GroupKind::Unitary;
constexpr GroupKind kSO = GroupKind::SpecialOrthogonal;
constexpr GroupKind kSp = GroupKind::UnitarySymplectic;
const GroupKind kAll[] = {kU, kSO, kSp};

double casimir(GroupKind k, int n) {
  switch (k) {
    case kU: return -n;
    case kSO: return -(n - 1) / 2.0;
    case kSp: return -(2 * n + 1) / 2.0;
  }
  return 0;
}

// mean of x over `count` Haar draws together with its standard error
template <class F>
std::pair<double, double> mc_mean(GroupKind k, int n, int count, std::uint64_t seed, F&& f) {
  Rng rng = make_rng(seed, 0);
  double s = 0, s2 = 0;
  for (int i = 0; i < count; ++i) {
    const double x = f(haar_sample(k, n, rng));
    s += x;
    s2 += x * x;
  }
  const double mean = s / count;
  return {mean, std::sqrt((s2 / count - mean * mean) / (count - 1))};
}

}  // namespace

TEST_CASE("Haar samples satisfy the group relations") {
  Rng rng = make_rng(1, 0);
  for (GroupKind k : kAll) {
    for (int n : {1, 2, 3, 10}) {
      if (k == kSO && n == 1) continue;
      const auto m = haar_sample(k, n, rng);
      CHECK(m.dimension() == matrix_dimension(k, n));
      CHECK(group_diagnostics(m).passed());
    }
  }
  CHECK_THROWS_AS(haar_sample(kU, 0, rng), DomainError);
}

TEST_CASE("diagnostics detect defects") {
  Rng rng = make_rng(2, 0);
  auto m = haar_sample(kU, 10, rng);
  CHECK(group_diagnostics(m).passed());
  m.matrix(3, 4) += 1e-3;
  CHECK(group_diagnostics(m).unitarity > 1e-4);
  CHECK_FALSE(group_diagnostics(m).passed());

  auto so = haar_sample(kSO, 5, rng);
  CHECK(group_diagnostics(so).determinant <= 1e-10);
  so.matrix.col(0) *= -1.0;  // orthogonal, determinant -1
  CHECK(group_diagnostics(so).determinant > 1.9);

  auto sp = haar_sample(kSp, 3, rng);
  CHECK(group_diagnostics(sp).symplectic <= 1e-10);
  sp.matrix.col(0).swap(sp.matrix.col(1));  // still unitary, no longer symplectic
  CHECK(group_diagnostics(sp).unitarity <= 1e-10);
  CHECK(group_diagnostics(sp).symplectic > 0.1);
}

TEST_CASE("sampling is deterministic in the seed") {
  for (GroupKind k : kAll) {
    Rng a = make_rng(42, 7), b = make_rng(42, 7), c = make_rng(43, 7);
    const auto x = haar_sample(k, 4, a), y = haar_sample(k, 4, b), z = haar_sample(k, 4, c);
    CHECK(x.matrix == y.matrix);
    CHECK((x.matrix - z.matrix).norm() > 1e-3);
  }
}

TEST_CASE("low moments of Haar samples") {
  const int N = 20000;
  {
    auto [mean, se] = mc_mean(kU, 8, N, 10, [](const GroupElement& m) { return m.matrix.trace().real(); });
    CHECK(std::abs(mean) <= 5 * se);
  }
  {
    auto [mean, se] = mc_mean(kSO, 9, N, 11, [](const GroupElement& m) { return (m.matrix * m.matrix).trace().real(); });
    CHECK(std::abs(mean - 1) <= 5 * se);
  }
  {
    auto [mean, se] = mc_mean(kSp, 4, N, 12, [](const GroupElement& m) { return (m.matrix * m.matrix).trace().real(); });
    CHECK(std::abs(mean + 1) <= 5 * se);
  }
  {
    auto [mean, se] = mc_mean(kU, 6, N, 13, [](const GroupElement& m) { return std::norm(m.matrix.trace()); });
    CHECK(std::abs(mean - 1) <= 5 * se);
  }
}

TEST_CASE("Lie bases are orthonormal, closed and have the right Casimir") {
  CHECK(lie_basis(kU, 2).size() == 4);
  CHECK(lie_basis(kSO, 3).size() == 3);
  CHECK(lie_basis(kSp, 2).size() == 10);
  for (GroupKind k : kAll) {
    for (int n : {2, 3, 4}) {
      const auto basis = lie_basis(k, n);
      const int dim = matrix_dimension(k, n);
      const std::size_t expected = k == kU ? n * n : k == kSO ? n * (n - 1) / 2 : n * (2 * n + 1);
      REQUIRE(basis.size() == expected);
      MatrixXcd cas = MatrixXcd::Zero(dim, dim);
      const MatrixXcd J = symplectic_form(k == kSp ? n : 1);
      for (std::size_t a = 0; a < basis.size(); ++a) {
        const MatrixXcd& x = basis.elements[a];
        CHECK((x + x.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        if (k == kSO) CHECK(x.imag().cwiseAbs().maxCoeff() == 0);
        if (k == kSp) CHECK((x.transpose() * J + J * x).cwiseAbs().maxCoeff() < 1e-14);
        for (std::size_t b = 0; b < basis.size(); ++b) {
          const double g = (x.adjoint() * basis.elements[b]).trace().real();
          CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) < 1e-12);
        }
        cas += x * x;
      }
      CHECK((cas - casimir(k, n) * MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("matrix model Laplacian equals the symbolic one") {
  Rng rng = make_rng(5, 0);
  for (GroupKind k : kAll) {
    const int n = k == kSO ? 5 : 3;
    const auto basis = lie_basis(k, n);
    const auto m = haar_sample(k, n, rng);
    const auto traces = power_traces(m.matrix, 8);
    for (const auto& mono : laplacian_domain(k, 6)) {
      const auto f = PowerSumPolynomial::monomial(k, mono);
      const cd symbolic = evaluate(laplacian(f), traces, n);
      const cd geometric = geometric_laplacian(f, m, basis);
      CHECK_MESSAGE(std::abs(symbolic - geometric) < 1e-9 * (1 + std::abs(symbolic)), short_name(k) << " " << to_string(mono));
    }
  }
}

TEST_CASE("trace jets match finite differences") {
  Rng rng = make_rng(6, 0);
  const auto m = haar_sample(kU, 4, rng);
  const BrownianMotion bm(kU, 4);
  const MatrixXcd a = bm.increment(1.0, rng);
  const auto jets = power_trace_jets(m.matrix, a, 3);
  const double s = 1e-4;
  const auto plus = power_traces(m.matrix * expm_skew_hermitian(s * a), 3);
  const auto minus = power_traces(m.matrix * expm_skew_hermitian(-s * a), 3);
  for (int j = 1; j <= 3; ++j) {
    const cd d1 = (plus[j] - minus[j]) / (2 * s);
    const cd d2 = (plus[j] - 2.0 * jets[j].v + minus[j]) / (s * s);
    CHECK(std::abs(d1 - jets[j].d1) < 1e-6 * (1 + std::abs(d1)));
    CHECK(std::abs(d2 - jets[j].d2) < 1e-4 * (1 + std::abs(d2)));
  }
}

TEST_CASE("Brownian steps stay in the group") {
  Rng rng = make_rng(8, 0);
  for (GroupKind k : kAll) {
    const BrownianMotion bm(k, 4);
    auto m = haar_sample(k, 4, rng);
    for (double h : {1e-1, 1e-4, 1e-12}) {
      m = bm.step(m, h, rng);
      CHECK(group_diagnostics(m).passed());
    }
    CHECK(group_diagnostics(brownian_step(m, 0.5, rng)).passed());
  }
}

TEST_CASE("trace vectors") {
  const auto tv = trace_vector(identity_element(kU, 5), 3, 3, false);
  CHECK(tv.values.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(tv.values[i] == cd(5, 0));

  const auto so = trace_vector(identity_element(kSO, 4), 2, 2, true);
  CHECK(so.real()[0] == 4.0);
  CHECK(so.real()[1] == 3.0);

  const auto sp = trace_vector(identity_element(kSp, 2), 2, 1, true);
  CHECK(sp.first_index() == 2);
  CHECK(sp.real()[0] == 5.0);

  CHECK(centering_shift(kSO, 2) == -1.0);
  CHECK(centering_shift(kSp, 4) == 1.0);
  CHECK(centering_shift(kSp, 3) == 0.0);
  CHECK(centering_shift(kU, 2) == 0.0);

  const auto u = trace_vector(kU, 3, {cd(3), cd(1, 2), cd(0, -1)}, 2, 2, true);
  CHECK(u.realified().size() == 4);
  CHECK(u.coordinates()[1] == 2.0);
  CHECK(u.coordinates()[3] == -1.0);

  CHECK_THROWS_AS(trace_vector(identity_element(kU, 3), 2, 3, false), DomainError);
  CHECK_THROWS_AS(trace_vector(kSO, 3, {cd(3), cd(1, 1e-3)}, 1, 1, false), DomainError);
}

TEST_CASE("sample CSV") {
  Rng rng = make_rng(9, 0);
  std::vector<GroupElement> samples{haar_sample(kSO, 9, rng), haar_sample(kSO, 9, rng), haar_sample(kSO, 9, rng)};
  std::ostringstream out;
  write_sample_csv(out, samples, 2);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "sample,re_p1,im_p1,re_p2,im_p2,unitarity,determinant,symplectic,diagnostics");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.substr(line.size() - 4) == "pass");
  }
  CHECK(rows == 3);
}
