#include "cltrace/errors.hpp"
#include "cltrace/psalgebra.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cltrace;

namespace {

constexpr GroupKind kU = GroupKind::Unitary;
constexpr GroupKind kSO = GroupKind::SpecialOrthogonal;
constexpr GroupKind kSp = GroupKind::UnitarySymplectic;
const GroupKind kAll[] = {kU, kSO, kSp};

PowerSumPolynomial P(GroupKind k, const char* text) { return parse_polynomial(text, k); }
RankPolynomial n_() { return RankPolynomial::rank(); }

}  // namespace

TEST_CASE("extended indices") {
  CHECK(normalize_index(0, kSO) == PowerSumPolynomial::constant(kSO, n_()));
  CHECK(normalize_index(0, kU) == PowerSumPolynomial::constant(kU, n_()));
  CHECK(normalize_index(0, kSp) == PowerSumPolynomial::constant(kSp, RankPolynomial{0, 2}));
  CHECK(normalize_index(-3, kSO) == PowerSumPolynomial::power_sum(kSO, 3));
  CHECK(normalize_index(-3, kSp) == PowerSumPolynomial::power_sum(kSp, 3));
  CHECK(normalize_index(-2, kU) == PowerSumPolynomial::conj_power_sum(kU, 2));
  CHECK(normalize_index(4, kU) == PowerSumPolynomial::power_sum(kU, 4));
}

TEST_CASE("monomial bookkeeping") {
  const PowerSumMonomial m({{1, 2}, {3, 1}}, {{2, 1}});
  CHECK(m.plain_weight() == 5);
  CHECK(m.conj_weight() == 2);
  CHECK(m.trace_degree() == 4);
  CHECK(m.max_index() == 3);
  CHECK_THROWS_AS(PowerSumMonomial(PowerSumMonomial::ExponentMap{{0, 1}}), DomainError);
  CHECK_THROWS_AS(PowerSumMonomial(PowerSumMonomial::ExponentMap{{2, 0}}), DomainError);
  CHECK(PowerSumMonomial().is_constant());
}

TEST_CASE("products") {
  const auto p1 = PowerSumPolynomial::power_sum(kU, 1);
  CHECK(poly_multiply(p1, p1) == PowerSumPolynomial::monomial(kU, PowerSumMonomial::power_sum(1, 2)));

  const auto q = P(kSO, "p2 - 1");
  CHECK(q * q == P(kSO, "p[2,2] - 2*p2 + 1"));

  const auto mixed = p1 * PowerSumPolynomial::conj_power_sum(kU, 1);
  CHECK(mixed.size() == 1);
  CHECK(mixed.terms().begin()->first == PowerSumMonomial({{1, 1}}, {{1, 1}}));

  CHECK_THROWS_AS(p1 * PowerSumPolynomial::power_sum(kSO, 1), KindMismatch);
  CHECK_THROWS_AS(PowerSumPolynomial::monomial(kSO, PowerSumMonomial({}, {{1, 1}})), DomainError);
}

TEST_CASE("ring axioms on random polynomials") {
  std::mt19937 gen(3);
  auto random_poly = [&](GroupKind k) {
    PowerSumPolynomial f(k);
    std::uniform_int_distribution<int> idx(1, 4), coef(-3, 3), count(1, 4);
    for (int t = count(gen); t > 0; --t) {
      PowerSumMonomial::ExponentMap a{{idx(gen), 1}}, b;
      if (k == kU && gen() % 2) b[idx(gen)] = 1;
      f.add_term(PowerSumMonomial(a, b), RankPolynomial{coef(gen), coef(gen)});
    }
    return f;
  };
  for (GroupKind k : kAll) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto f = random_poly(k), g = random_poly(k), h = random_poly(k);
      CHECK(f * g == g * f);
      CHECK((f * g) * h == f * (g * h));
      CHECK(f * (g + h) == f * g + f * h);
      CHECK((f - f).is_zero());
      CHECK(conjugate(conjugate(f)) == f);
      CHECK(conjugate(f * g) == conjugate(f) * conjugate(g));
    }
  }
}

TEST_CASE("conjugation") {
  CHECK(conjugate(PowerSumPolynomial::power_sum(kU, 2)) == PowerSumPolynomial::conj_power_sum(kU, 2));
  CHECK(conjugate(P(kU, "p1*~p2")) == P(kU, "~p1*p2"));
  CHECK(conjugate(P(kSO, "p1*p2 + n")) == P(kSO, "p1*p2 + n"));
}

TEST_CASE("laplacian examples") {
  CHECK(laplacian(P(kU, "p2")) == P(kU, "-2*n*p2 - 2*p[1,1]"));
  CHECK(laplacian(P(kSO, "p2")) == P(kSO, "-(n-1)*p2 - p[1,1] + n"));
  CHECK(laplacian(P(kSp, "p1")) == P(kSp, "-(1/2)*(2*n+1)*p1"));
  CHECK(laplacian(P(kU, "p1*~p1")) == P(kU, "2*n - 2*n*p1*~p1"));
  for (GroupKind k : kAll) CHECK(laplacian(PowerSumPolynomial::constant(k, 5)).is_zero());
  CHECK_THROWS_AS(laplacian(P(kU, "p1*p1*p1")), UnsupportedShape);
  CHECK_THROWS_AS(laplacian(P(kSO, "p[1,2,3]")), UnsupportedShape);
}

TEST_CASE("laplacian commutes with conjugation and is linear") {
  for (const auto& m : laplacian_domain(kU, 6)) {
    const auto f = PowerSumPolynomial::monomial(kU, m);
    CHECK(laplacian(conjugate(f)) == conjugate(laplacian(f)));
  }
  for (GroupKind k : kAll) {
    const auto dom = laplacian_domain(k, 5);
    for (std::size_t i = 0; i + 1 < dom.size(); ++i) {
      const auto f = PowerSumPolynomial::monomial(k, dom[i], RankPolynomial{1, 2});
      const auto g = PowerSumPolynomial::monomial(k, dom[i + 1], Rational(-3, 7));
      CHECK(laplacian(f + g) == laplacian(f) + laplacian(g));
    }
  }
}

TEST_CASE("stationarity: E[Laplacian f] = 0 on the whole domain") {
  std::size_t count = 0;
  for (GroupKind k : kAll) {
    for (const auto& m : laplacian_domain(k, 8)) {
      const auto lap = laplacian(PowerSumPolynomial::monomial(k, m));
      const auto e = haar_expectation(lap);
      CHECK_MESSAGE(e.value.is_zero(), short_name(k) << " " << to_string(m));
      ++count;
    }
  }
  CHECK(count > 100);
}

TEST_CASE("moment examples") {
  auto E = [](GroupKind k, const char* text) { return haar_expectation(P(k, text)); };
  CHECK(E(kU, "p2*~p2").value == RankPolynomial(2));
  CHECK(E(kU, "p2*~p2").validity_threshold == 2);
  CHECK(E(kSO, "p2^2").value == RankPolynomial(3));
  CHECK(E(kSO, "p2^2").validity_threshold == 5);
  CHECK(E(kSp, "p2").value == RankPolynomial(-1));
  CHECK(E(kSp, "p2").validity_threshold == 1);
  CHECK(E(kU, "p1^2*~p2").value.is_zero());
  CHECK(E(kU, "p1*~p2").value.is_zero());
  for (GroupKind k : kAll) CHECK(E(k, "1").value == RankPolynomial(1));
  // constants in n survive
  CHECK(E(kU, "n*p1*~p1 + 2").value == RankPolynomial{2, 1});
}

TEST_CASE("moments agree with the Gaussian oracle") {
  for (GroupKind k : kAll) {
    for (const auto& m : monomials_up_to_weight(k, 8)) {
      const auto e = monomial_expectation(k, m);
      REQUIRE(e.value.is_constant());
      CHECK_MESSAGE(e.value.constant_term() == oracle::gaussian_moment(k, m), short_name(k) << " " << to_string(m));
    }
  }
}

TEST_CASE("validity thresholds") {
  CHECK(monomial_expectation(kU, PowerSumMonomial({{1, 3}}, {{3, 1}})).validity_threshold == 3);
  CHECK(monomial_expectation(kU, PowerSumMonomial({{1, 3}}, {{1, 1}})).validity_threshold == 1);
  CHECK(monomial_expectation(kSO, PowerSumMonomial(PowerSumMonomial::ExponentMap{{3, 2}})).validity_threshold == 7);
  CHECK(monomial_expectation(kSp, PowerSumMonomial(PowerSumMonomial::ExponentMap{{3, 1}})).validity_threshold == 2);
  const auto e = haar_expectation(P(kSO, "p2"));
  CHECK(e.at(3).guaranteed);
  CHECK_THROWS_AS(e.at(2), BelowThreshold);
  const auto forced = e.at(2, true);
  CHECK_FALSE(forced.guaranteed);
  CHECK(forced.value == 1);
}

TEST_CASE("moment factor") {
  CHECK(moment_factor(1, 1) == 0);
  CHECK(moment_factor(1, 2) == 1);
  CHECK(moment_factor(3, 2) == 3);
  CHECK(moment_factor(2, 1) == 1);
  CHECK(moment_factor(2, 2) == 3);
  CHECK(moment_factor(2, 4) == 1 + 6 * 2 + 1 * 4 * 3);
}

TEST_CASE("quadratic variation") {
  // Gamma(p_1, conj p_1) on U(n) is 2n (squared gradient of Tr M).
  CHECK(quadratic_variation(P(kU, "p1"), P(kU, "~p1")) == P(kU, "2*n"));
  CHECK(quadratic_variation(P(kU, "p1"), P(kU, "p1")) == P(kU, "-2*p2"));
  CHECK(quadratic_variation(P(kSO, "p1"), P(kSO, "p1")) == P(kSO, "n - p2"));
}

TEST_CASE("numeric evaluation") {
  std::vector<std::complex<double>> traces{{4, 0}, {1, 2}, {0, -1}, {3, 0}};
  const auto f = P(kU, "2*p1*~p2 + n");
  const auto expect = 2.0 * traces[1] * std::conj(traces[2]) + 4.0;
  CHECK(std::abs(evaluate(f, traces, 4) - expect) < 1e-14);
  CHECK(std::abs(compile(f, 4)(traces) - expect) < 1e-14);
}

TEST_CASE("rendering and parsing") {
  CHECK(to_string(laplacian(P(kU, "p2"))) == "-2*n*p[2] - 2*p[1,1]");
  CHECK(to_string(laplacian(P(kSO, "p1"))) == "-(1/2)*(n-1)*p[1]");
  CHECK(to_string(PowerSumPolynomial(kU)) == "0");
  CHECK(to_string(PowerSumMonomial()) == "1");
  CHECK(to_string(PowerSumMonomial({{1, 1}}, {{1, 1}})) == "p[1]*~p[1]");
  for (GroupKind k : kAll) {
    for (const auto& m : laplacian_domain(k, 6)) {
      const auto lap = laplacian(PowerSumPolynomial::monomial(k, m));
      CHECK(parse_polynomial(to_string(lap), k) == lap);
    }
  }
  CHECK(P(kU, "p[1,-2]") == P(kU, "p1*~p2"));
  CHECK(P(kSO, "p[0]") == P(kSO, "n"));
  CHECK(P(kU, "(p1 + 1)^2") == P(kU, "p[1,1] + 2*p1 + 1"));
  CHECK_THROWS_AS(P(kU, "p1 +"), ParseError);
  CHECK_THROWS_AS(P(kU, "q1"), ParseError);
  CHECK_THROWS_AS(P(kSO, "~p1"), ParseError);
  try {
    P(kU, "p1 * )");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
}
