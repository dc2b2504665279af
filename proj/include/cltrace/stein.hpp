#pragma once

// Exchangeable-pair data for the trace vector W = (p_{d-r+1}, ..., p_d):
// the linear drift Lambda, covariance Sigma, remainders R, S, T, their exact
// second moments and the resulting Wasserstein bound.

#include "cltrace/psalgebra.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <vector>

namespace cltrace {

struct RegressionData {
  GroupKind kind;
  int d, r, n;
  std::vector<Rational> lambda;  // lambda_j for j = d-r+1..d
  std::vector<Rational> sigma;   // sigma_j = j
};

/// lambda_j as a polynomial in n: n j (U), (n-1) j / 2 (SO), (2n+1) j / 2 (USp).
RankPolynomial lambda_symbol(GroupKind kind, int j);

/// Throws DomainError unless 1 <= r <= d and n >= 1.
RegressionData build_regression(GroupKind kind, int d, int r, int n);

using PolynomialMatrix = std::vector<std::vector<PowerSumPolynomial>>;

struct RemainderSymbols {
  GroupKind kind;
  int d, r;
  std::vector<PowerSumPolynomial> R;
  PolynomialMatrix S;
  std::optional<PolynomialMatrix> T;  // unitary only
};

RemainderSymbols build_remainders(GroupKind kind, int d, int r);

/// The statistic entry for index j: p_j, shifted by the centring constant
/// for SO/USp and even j.
PowerSumPolynomial centered_power_sum(GroupKind kind, int j);

struct SecondMoments {
  RankPolynomial ER2;
  RankPolynomial ES2;
  std::optional<RankPolynomial> ET2;
  // smallest n at which each value is exact, and their maximum
  int ER2_threshold = 1, ES2_threshold = 1, ET2_threshold = 1;
  int validity_threshold = 1;
};

/// E|R|^2, E|S|_HS^2 and E|T|_HS^2 as exact polynomials in n.
SecondMoments second_moments(GroupKind kind, int d, int r);
SecondMoments second_moments(const RemainderSymbols& symbols);

/// max{ r^{7/2} / (d-r+1)^{3/2}, (d-r)^{3/2} sqrt(r) } / n
double rate_formula(int d, int r, int n);

/// Smallest n covered by the main theorems: 2d for U and USp, 4d+1 for SO.
int theorem_threshold(GroupKind kind, int d);

struct SteinBoundReport {
  GroupKind kind;
  int d, r, n;
  double ER2 = 0, ES2 = 0;
  std::optional<double> ET2;
  double lambda_inv_op = 0, sigma_invhalf_op = 0;
  double bound = 0, rate = 0;
  bool thresholds_ok = false;
  int theorem_threshold = 0;
  int moment_threshold = 0;

  nlohmann::json to_json() const;
};

/// Evaluates the bound
///   |Lambda^{-1}| ( sqrt(E|R|^2) + (2 pi)^{-1/2} |Sigma^{-1/2}| (sqrt(E|S|^2) + sqrt(E|T|^2)) ).
/// Below the theorem or moment threshold this throws BelowThreshold unless
/// `override_thresholds` is set; thresholds_ok records the outcome either way.
SteinBoundReport wasserstein_bound(GroupKind kind, int d, int r, int n, bool override_thresholds = false);

void write_bound_csv_header(std::ostream& out);
void write_bound_csv_row(std::ostream& out, const SteinBoundReport& report);

}  // namespace cltrace
