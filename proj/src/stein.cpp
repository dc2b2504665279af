#include "cltrace/stein.hpp"

#include "cltrace/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <tuple>

namespace cltrace {

namespace {

void check_dims(int d, int r) {
  if (r < 1 || r > d) throw DomainError("need 1 <= r <= d, got d = " + std::to_string(d) + ", r = " + std::to_string(r));
}

PowerSumPolynomial p(GroupKind kind, int index) { return normalize_index(index, kind); }

PowerSumPolynomial split_sum(GroupKind kind, int j) {
  PowerSumPolynomial out(kind);
  for (int l = 1; l < j; ++l) out += p(kind, l) * p(kind, j - l);
  return out;
}

PowerSumPolynomial fold_sum(GroupKind kind, int j) {
  PowerSumPolynomial out(kind);
  for (int l = 1; l < j; ++l) out += p(kind, j - 2 * l);
  return out;
}

RankPolynomial scalar(long long num, long long den = 1) { return RankPolynomial(Rational(num, den)); }

}  // namespace

RankPolynomial lambda_symbol(GroupKind kind, int j) {
  switch (kind) {
    case GroupKind::Unitary: return RankPolynomial{Rational(0), Rational(j)};
    case GroupKind::SpecialOrthogonal: return RankPolynomial{Rational(-j, 2), Rational(j, 2)};
    case GroupKind::UnitarySymplectic: return RankPolynomial{Rational(j, 2), Rational(j)};
  }
  return {};
}

RegressionData build_regression(GroupKind kind, int d, int r, int n) {
  check_dims(d, r);
  if (n < 1) throw DomainError("rank must be at least 1");
  RegressionData out{kind, d, r, n, {}, {}};
  for (int j = d - r + 1; j <= d; ++j) {
    out.lambda.push_back(lambda_symbol(kind, j).evaluate(Rational(n)));
    out.sigma.push_back(Rational(j));
  }
  return out;
}

PowerSumPolynomial centered_power_sum(GroupKind kind, int j) {
  int shift = 0;
  if (j % 2 == 0 && kind == GroupKind::SpecialOrthogonal) shift = -1;
  if (j % 2 == 0 && kind == GroupKind::UnitarySymplectic) shift = 1;
  return p(kind, j) + PowerSumPolynomial::constant(kind, RankPolynomial(shift));
}

RemainderSymbols build_remainders(GroupKind kind, int d, int r) {
  check_dims(d, r);
  RemainderSymbols out{kind, d, r, {}, {}, std::nullopt};
  const int first = d - r + 1;
  for (int j = first; j <= d; ++j) {
    PowerSumPolynomial rj(kind);
    switch (kind) {
      case GroupKind::Unitary:
        rj = scalar(-j) * split_sum(kind, j);
        break;
      case GroupKind::SpecialOrthogonal:
        rj = scalar(-j, 2) * split_sum(kind, j) + scalar(j, 2) * fold_sum(kind, j);
        if (j % 2 == 0) rj -= PowerSumPolynomial::constant(kind, lambda_symbol(kind, j));
        break;
      case GroupKind::UnitarySymplectic:
        rj = scalar(-j, 2) * split_sum(kind, j) - scalar(j, 2) * fold_sum(kind, j);
        if (j % 2 == 0) rj += PowerSumPolynomial::constant(kind, lambda_symbol(kind, j));
        break;
    }
    out.R.push_back(std::move(rj));
  }

  const auto size = static_cast<std::size_t>(r);
  out.S.assign(size, std::vector<PowerSumPolynomial>(size, PowerSumPolynomial(kind)));
  if (kind == GroupKind::Unitary) out.T = PolynomialMatrix(size, std::vector<PowerSumPolynomial>(size, PowerSumPolynomial(kind)));
  for (int j = first; j <= d; ++j) {
    for (int k = first; k <= d; ++k) {
      const auto a = static_cast<std::size_t>(j - first), b = static_cast<std::size_t>(k - first);
      const long long jk = static_cast<long long>(j) * k;
      switch (kind) {
        case GroupKind::Unitary:
          if (j != k) out.S[a][b] = scalar(2 * jk) * p(kind, j - k);
          (*out.T)[a][b] = scalar(-2 * jk) * p(kind, j + k);
          break;
        case GroupKind::SpecialOrthogonal:
          if (j == k) {
            out.S[a][b] = scalar(jk) * (PowerSumPolynomial::constant(kind, 1) - p(kind, 2 * j));
          } else {
            out.S[a][b] = scalar(jk) * (p(kind, j - k) - p(kind, j + k));
          }
          break;
        case GroupKind::UnitarySymplectic:
          if (j == k) {
            out.S[a][b] = scalar(-jk) * (PowerSumPolynomial::constant(kind, 1) + p(kind, 2 * j));
          } else {
            out.S[a][b] = scalar(jk) * (p(kind, j - k) - p(kind, j + k));
          }
          break;
      }
    }
  }
  return out;
}

namespace {

void accumulate_square(const PowerSumPolynomial& f, RankPolynomial& sum, int& threshold) {
  const ExpectationResult e = haar_expectation(conjugate(f) * f);
  sum += e.value;
  threshold = std::max(threshold, e.validity_threshold);
}

}  // namespace

SecondMoments second_moments(const RemainderSymbols& symbols) {
  SecondMoments out;
  for (const auto& rj : symbols.R) accumulate_square(rj, out.ER2, out.ER2_threshold);
  for (const auto& row : symbols.S)
    for (const auto& s : row) accumulate_square(s, out.ES2, out.ES2_threshold);
  if (symbols.T) {
    RankPolynomial et2;
    for (const auto& row : *symbols.T)
      for (const auto& t : row) accumulate_square(t, et2, out.ET2_threshold);
    out.ET2 = et2;
  }
  out.validity_threshold = std::max({out.ER2_threshold, out.ES2_threshold, out.ET2_threshold});
  return out;
}

SecondMoments second_moments(GroupKind kind, int d, int r) { return second_moments(build_remainders(kind, d, r)); }

double rate_formula(int d, int r, int n) {
  check_dims(d, r);
  if (n < 1) throw DomainError("rank must be at least 1");
  const double a = std::pow(r, 3.5) / std::pow(d - r + 1, 1.5);
  const double b = std::pow(d - r, 1.5) * std::sqrt(static_cast<double>(r));
  return std::max(a, b) / n;
}

int theorem_threshold(GroupKind kind, int d) {
  return kind == GroupKind::SpecialOrthogonal ? 4 * d + 1 : 2 * d;
}

namespace {

// Grids evaluate the same (kind, d, r) at many n; the symbolic part only once.
const SecondMoments& cached_moments(GroupKind kind, int d, int r) {
  static std::mutex mutex;
  static std::map<std::tuple<GroupKind, int, int>, SecondMoments> cache;
  const std::lock_guard lock(mutex);
  auto key = std::make_tuple(kind, d, r);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, second_moments(kind, d, r)).first;
  return it->second;
}

}  // namespace

SteinBoundReport wasserstein_bound(GroupKind kind, int d, int r, int n, bool override_thresholds) {
  check_dims(d, r);
  if (n < 1) throw DomainError("rank must be at least 1");
  if (kind == GroupKind::SpecialOrthogonal && n < 2) throw DomainError("SO(1) has no nontrivial drift");
  const SecondMoments& moments = cached_moments(kind, d, r);

  SteinBoundReport out;
  out.kind = kind;
  out.d = d;
  out.r = r;
  out.n = n;
  out.theorem_threshold = theorem_threshold(kind, d);
  out.moment_threshold = moments.validity_threshold;
  const int needed = std::max(out.theorem_threshold, out.moment_threshold);
  out.thresholds_ok = n >= needed;
  if (!out.thresholds_ok && !override_thresholds) {
    throw BelowThreshold("bound requires n >= " + std::to_string(needed) + " for " +
                             std::string(display_name(kind)) + " with d = " + std::to_string(d),
                         needed, n);
  }
  const Rational nn(n);
  auto value = [&](const RankPolynomial& q) {
    const double v = q.evaluate(nn).convert_to<double>();
    if (v < 0) throw DomainError("negative second moment; formula used outside its range");
    return v;
  };
  out.ER2 = value(moments.ER2);
  out.ES2 = value(moments.ES2);
  if (moments.ET2) out.ET2 = value(*moments.ET2);

  const double lam_min = lambda_symbol(kind, d - r + 1).evaluate(nn).convert_to<double>();
  out.lambda_inv_op = 1.0 / lam_min;
  out.sigma_invhalf_op = 1.0 / std::sqrt(static_cast<double>(d - r + 1));
  const double st = std::sqrt(out.ES2) + (out.ET2 ? std::sqrt(*out.ET2) : 0.0);
  out.bound = out.lambda_inv_op *
              (std::sqrt(out.ER2) + out.sigma_invhalf_op * st / std::sqrt(2.0 * std::numbers::pi));
  out.rate = rate_formula(d, r, n);
  return out;
}

nlohmann::json SteinBoundReport::to_json() const {
  nlohmann::json j;
  j["kind"] = std::string(short_name(kind));
  j["d"] = d;
  j["r"] = r;
  j["n"] = n;
  j["ER2"] = ER2;
  j["ES2"] = ES2;
  if (ET2) j["ET2"] = *ET2;
  j["lambda_inv_op"] = lambda_inv_op;
  j["sigma_invhalf_op"] = sigma_invhalf_op;
  j["bound"] = bound;
  j["rate"] = rate;
  j["thresholds_ok"] = thresholds_ok;
  j["theorem_threshold"] = theorem_threshold;
  j["moment_threshold"] = moment_threshold;
  return j;
}

void write_bound_csv_header(std::ostream& out) {
  out << "kind,d,r,n,ER2,ES2,ET2,lambda_inv_op,sigma_invhalf_op,bound,rate,bound_over_rate,thresholds_ok\n";
}

void write_bound_csv_row(std::ostream& out, const SteinBoundReport& b) {
  const auto old = out.precision(17);
  out << short_name(b.kind) << ',' << b.d << ',' << b.r << ',' << b.n << ',' << b.ER2 << ',' << b.ES2 << ',';
  if (b.ET2) out << *b.ET2;
  out << ',' << b.lambda_inv_op << ',' << b.sigma_invhalf_op << ',' << b.bound << ',' << b.rate << ','
      << b.bound / b.rate << ',' << (b.thresholds_ok ? "true" : "false") << '\n';
  out.precision(old);
}

}  // namespace cltrace
