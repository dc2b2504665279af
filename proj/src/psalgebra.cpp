#include "cltrace/psalgebra.hpp"

#include "cltrace/errors.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace cltrace {

// ---------------------------------------------------------------------------
// GroupKind

int matrix_dimension(GroupKind kind, int rank) {
  return kind == GroupKind::UnitarySymplectic ? 2 * rank : rank;
}

std::string_view short_name(GroupKind kind) {
  switch (kind) {
    case GroupKind::Unitary: return "u";
    case GroupKind::SpecialOrthogonal: return "so";
    case GroupKind::UnitarySymplectic: return "sp";
  }
  return "?";
}

std::string_view display_name(GroupKind kind) {
  switch (kind) {
    case GroupKind::Unitary: return "U(n)";
    case GroupKind::SpecialOrthogonal: return "SO(n)";
    case GroupKind::UnitarySymplectic: return "USp(2n)";
  }
  return "?";
}

GroupKind parse_group_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "u" || lower == "unitary") return GroupKind::Unitary;
  if (lower == "so" || lower == "orthogonal" || lower == "special_orthogonal") return GroupKind::SpecialOrthogonal;
  if (lower == "sp" || lower == "usp" || lower == "symplectic") return GroupKind::UnitarySymplectic;
  throw DomainError("unknown group '" + std::string(text) + "' (expected u, so or sp)");
}

// ---------------------------------------------------------------------------
// PowerSumMonomial

namespace {

void validate_exponents(const PowerSumMonomial::ExponentMap& m) {
  for (const auto& [index, exponent] : m) {
    if (index <= 0) throw DomainError("monomial index must be positive, got " + std::to_string(index));
    if (exponent <= 0) throw DomainError("monomial exponent must be positive, got " + std::to_string(exponent));
  }
}

int weight_of(const PowerSumMonomial::ExponentMap& m) {
  int w = 0;
  for (const auto& [index, exponent] : m) w += index * exponent;
  return w;
}

int degree_of(const PowerSumMonomial::ExponentMap& m) {
  int d = 0;
  for (const auto& [index, exponent] : m) d += exponent;
  return d;
}

PowerSumMonomial::ExponentMap merge(PowerSumMonomial::ExponentMap lhs, const PowerSumMonomial::ExponentMap& rhs) {
  for (const auto& [index, exponent] : rhs) lhs[index] += exponent;
  return lhs;
}

}  // namespace

PowerSumMonomial::PowerSumMonomial(ExponentMap plain, ExponentMap conjugated)
    : plain_(std::move(plain)), conj_(std::move(conjugated)) {
  validate_exponents(plain_);
  validate_exponents(conj_);
}

PowerSumMonomial PowerSumMonomial::power_sum(int index, int exponent) {
  return PowerSumMonomial({{index, exponent}}, {});
}

PowerSumMonomial PowerSumMonomial::conj_power_sum(int index, int exponent) {
  return PowerSumMonomial({}, {{index, exponent}});
}

int PowerSumMonomial::plain_weight() const noexcept { return weight_of(plain_); }
int PowerSumMonomial::conj_weight() const noexcept { return weight_of(conj_); }
int PowerSumMonomial::trace_degree() const noexcept { return degree_of(plain_) + degree_of(conj_); }

int PowerSumMonomial::max_index() const noexcept {
  int m = 0;
  if (!plain_.empty()) m = std::max(m, plain_.rbegin()->first);
  if (!conj_.empty()) m = std::max(m, conj_.rbegin()->first);
  return m;
}

PowerSumMonomial PowerSumMonomial::operator*(const PowerSumMonomial& rhs) const {
  return PowerSumMonomial(merge(plain_, rhs.plain_), merge(conj_, rhs.conj_));
}

// ---------------------------------------------------------------------------
// PowerSumPolynomial

PowerSumPolynomial PowerSumPolynomial::constant(GroupKind kind, const RankPolynomial& value) {
  PowerSumPolynomial out(kind);
  out.add_term(PowerSumMonomial{}, value);
  return out;
}

PowerSumPolynomial PowerSumPolynomial::monomial(GroupKind kind, const PowerSumMonomial& m,
                                                const RankPolynomial& coefficient) {
  PowerSumPolynomial out(kind);
  out.add_term(m, coefficient);
  return out;
}

PowerSumPolynomial PowerSumPolynomial::power_sum(GroupKind kind, int index) { return normalize_index(index, kind); }

PowerSumPolynomial PowerSumPolynomial::conj_power_sum(GroupKind kind, int index) {
  return conjugate(normalize_index(index, kind));
}

RankPolynomial PowerSumPolynomial::coefficient(const PowerSumMonomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? RankPolynomial{} : it->second;
}

int PowerSumPolynomial::max_index() const noexcept {
  int m = 0;
  for (const auto& [mono, c] : terms_) m = std::max(m, mono.max_index());
  return m;
}

int PowerSumPolynomial::max_trace_degree() const noexcept {
  int m = 0;
  for (const auto& [mono, c] : terms_) m = std::max(m, mono.trace_degree());
  return m;
}

void PowerSumPolynomial::add_term(const PowerSumMonomial& m, const RankPolynomial& coefficient) {
  if (coefficient.is_zero()) return;
  if (has_real_traces(kind_) && !m.conjugated().empty()) {
    throw DomainError("conjugated trace factors are not admissible on " + std::string(display_name(kind_)) +
                      " (traces are real)");
  }
  auto [it, inserted] = terms_.try_emplace(m, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

void PowerSumPolynomial::require_same_kind(const PowerSumPolynomial& rhs) const {
  if (kind_ != rhs.kind_) {
    throw KindMismatch("cannot combine polynomials over " + std::string(display_name(kind_)) + " and " +
                       std::string(display_name(rhs.kind_)));
  }
}

PowerSumPolynomial& PowerSumPolynomial::operator+=(const PowerSumPolynomial& rhs) {
  require_same_kind(rhs);
  for (const auto& [m, c] : rhs.terms_) add_term(m, c);
  return *this;
}

PowerSumPolynomial& PowerSumPolynomial::operator-=(const PowerSumPolynomial& rhs) {
  require_same_kind(rhs);
  for (const auto& [m, c] : rhs.terms_) add_term(m, -c);
  return *this;
}

PowerSumPolynomial& PowerSumPolynomial::operator*=(const PowerSumPolynomial& rhs) {
  require_same_kind(rhs);
  PowerSumPolynomial out(kind_);
  for (const auto& [ml, cl] : terms_)
    for (const auto& [mr, cr] : rhs.terms_) out.add_term(ml * mr, cl * cr);
  terms_ = std::move(out.terms_);
  return *this;
}

PowerSumPolynomial& PowerSumPolynomial::operator*=(const RankPolynomial& scalar) {
  if (scalar.is_zero()) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= scalar;
  return *this;
}

PowerSumPolynomial PowerSumPolynomial::operator-() const {
  PowerSumPolynomial out = *this;
  for (auto& [m, c] : out.terms_) c = -c;
  return out;
}

// ---------------------------------------------------------------------------
// Normalisation, products, conjugation

PowerSumPolynomial normalize_index(int raw_index, GroupKind kind) {
  if (raw_index == 0) {
    const RankPolynomial dim = kind == GroupKind::UnitarySymplectic ? RankPolynomial{Rational(0), Rational(2)}
                                                                    : RankPolynomial::rank();
    return PowerSumPolynomial::constant(kind, dim);
  }
  if (raw_index > 0) return PowerSumPolynomial::monomial(kind, PowerSumMonomial::power_sum(raw_index));
  if (kind == GroupKind::Unitary) {
    return PowerSumPolynomial::monomial(kind, PowerSumMonomial::conj_power_sum(-raw_index));
  }
  return PowerSumPolynomial::monomial(kind, PowerSumMonomial::power_sum(-raw_index));
}

PowerSumPolynomial poly_multiply(const PowerSumPolynomial& f, const PowerSumPolynomial& g) { return f * g; }

PowerSumPolynomial conjugate(const PowerSumPolynomial& f) {
  if (has_real_traces(f.kind())) return f;
  PowerSumPolynomial out(f.kind());
  for (const auto& [m, c] : f.terms()) out.add_term(m.conjugate(), c);
  return out;
}

// ---------------------------------------------------------------------------
// Laplacian

namespace {

RankPolynomial rank_linear(const Rational& slope, const Rational& offset) {
  return RankPolynomial{offset, slope};
}

class LaplacianTable {
 public:
  explicit LaplacianTable(GroupKind kind) : kind_(kind) {}

  PowerSumPolynomial p(int index) const { return normalize_index(index, kind_); }
  PowerSumPolynomial constant(const RankPolynomial& c) const { return PowerSumPolynomial::constant(kind_, c); }

  // sum_{l=1}^{j-1} p_l p_{j-l}
  PowerSumPolynomial split_sum(int j) const {
    PowerSumPolynomial out(kind_);
    for (int l = 1; l < j; ++l) out += p(l) * p(j - l);
    return out;
  }

  // sum_{l=1}^{j-1} p_{2l-j}; the same set as sum p_{j-2l} after folding.
  PowerSumPolynomial fold_sum(int j) const {
    PowerSumPolynomial out(kind_);
    for (int l = 1; l < j; ++l) out += p(2 * l - j);
    return out;
  }

  // Coefficient of j p_j in Delta p_j: -n, -(n-1)/2, -(2n+1)/2.
  RankPolynomial linear_rate() const {
    switch (kind_) {
      case GroupKind::Unitary: return rank_linear(-1, 0);
      case GroupKind::SpecialOrthogonal: return rank_linear(Rational(-1, 2), Rational(1, 2));
      case GroupKind::UnitarySymplectic: return rank_linear(-1, Rational(-1, 2));
    }
    return {};
  }

  PowerSumPolynomial single(int j) const {
    const Rational jj(j);
    switch (kind_) {
      case GroupKind::Unitary:
        return linear_rate() * RankPolynomial(jj) * p(j) - RankPolynomial(jj) * split_sum(j);
      case GroupKind::SpecialOrthogonal:
        return linear_rate() * RankPolynomial(jj) * p(j) - RankPolynomial(jj / 2) * split_sum(j) +
               RankPolynomial(jj / 2) * fold_sum(j);
      case GroupKind::UnitarySymplectic:
        return linear_rate() * RankPolynomial(jj) * p(j) - RankPolynomial(jj / 2) * split_sum(j) -
               RankPolynomial(jj / 2) * fold_sum(j);
    }
    return PowerSumPolynomial(kind_);
  }

  PowerSumPolynomial pair(int j, int k) const {
    const Rational jj(j), kk(k);
    const PowerSumPolynomial pj = p(j), pk = p(k);
    switch (kind_) {
      case GroupKind::Unitary:
        return linear_rate() * RankPolynomial(jj + kk) * pj * pk - RankPolynomial(2 * jj * kk) * p(j + k) -
               RankPolynomial(jj) * pk * split_sum(j) - RankPolynomial(kk) * pj * split_sum(k);
      case GroupKind::SpecialOrthogonal:
        return linear_rate() * RankPolynomial(jj + kk) * pj * pk - RankPolynomial(jj / 2) * pk * split_sum(j) -
               RankPolynomial(kk / 2) * pj * split_sum(k) - RankPolynomial(jj * kk) * p(j + k) +
               RankPolynomial(jj / 2) * pk * fold_sum(j) + RankPolynomial(kk / 2) * pj * fold_sum(k) +
               RankPolynomial(jj * kk) * p(j - k);
      case GroupKind::UnitarySymplectic:
        return linear_rate() * RankPolynomial(jj + kk) * pj * pk - RankPolynomial(jj * kk) * p(j + k) -
               RankPolynomial(jj / 2) * pk * split_sum(j) - RankPolynomial(kk / 2) * pj * split_sum(k) -
               RankPolynomial(jj / 2) * pk * fold_sum(j) - RankPolynomial(kk / 2) * pj * fold_sum(k) +
               RankPolynomial(jj * kk) * p(j - k);
    }
    return PowerSumPolynomial(kind_);
  }

  // Delta(p_j conj(p_k)) on U(n).
  PowerSumPolynomial mixed(int j, int k) const {
    const Rational jj(j), kk(k);
    const PowerSumPolynomial pj = p(j);
    const PowerSumPolynomial cpk = conjugate(p(k));
    return RankPolynomial(2 * jj * kk) * p(j - k) + linear_rate() * RankPolynomial(jj + kk) * pj * cpk -
           RankPolynomial(jj) * cpk * split_sum(j) - RankPolynomial(kk) * pj * conjugate(split_sum(k));
  }

  PowerSumPolynomial apply(const PowerSumMonomial& m) const {
    if (m.is_constant()) return PowerSumPolynomial(kind_);
    if (m.trace_degree() > 2) {
      throw UnsupportedShape("Laplacian is tabulated only for monomials of trace-degree <= 2; " + to_string(m) +
                             " has degree " + std::to_string(m.trace_degree()));
    }
    const auto& a = m.plain();
    const auto& b = m.conjugated();
    if (b.empty()) {
      if (m.trace_degree() == 1) return single(a.begin()->first);
      if (a.size() == 1) return pair(a.begin()->first, a.begin()->first);
      return pair(a.begin()->first, std::next(a.begin())->first);
    }
    if (a.empty()) return conjugate(apply(m.conjugate()));
    return mixed(a.begin()->first, b.begin()->first);
  }

 private:
  GroupKind kind_;
};

}  // namespace

PowerSumPolynomial laplacian(const PowerSumPolynomial& f) {
  const LaplacianTable table(f.kind());
  PowerSumPolynomial out(f.kind());
  for (const auto& [m, c] : f.terms()) out += c * table.apply(m);
  return out;
}

PowerSumPolynomial quadratic_variation(const PowerSumPolynomial& f, const PowerSumPolynomial& g) {
  if (f.max_trace_degree() > 1 || g.max_trace_degree() > 1) {
    throw UnsupportedShape("quadratic_variation needs arguments of trace-degree <= 1");
  }
  return laplacian(f * g) - f * laplacian(g) - g * laplacian(f);
}

// ---------------------------------------------------------------------------
// Haar expectations

namespace {

Integer double_factorial(int m) {
  Integer out = 1;
  for (int k = m; k > 1; k -= 2) out *= k;
  return out;
}

Integer factorial(int m) {
  Integer out = 1;
  for (int k = 2; k <= m; ++k) out *= k;
  return out;
}

Integer binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  Integer out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

Integer ipow(int base, int exponent) {
  Integer out = 1;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

}  // namespace

Integer moment_factor(int index, int exponent) {
  if (exponent == 0) return 1;
  if ((index * exponent) % 2 == 1) return 0;
  if (index % 2 == 1) return ipow(index, exponent / 2) * double_factorial(exponent - 1);
  Integer out = 1;
  for (int d = 1; d <= exponent / 2; ++d) out += ipow(index, d) * binomial(exponent, 2 * d) * double_factorial(2 * d - 1);
  return out;
}

ExpectationResult monomial_expectation(GroupKind kind, const PowerSumMonomial& m) {
  const int ka = m.plain_weight();
  ExpectationResult out;
  switch (kind) {
    case GroupKind::Unitary: {
      const int kb = m.conj_weight();
      if (ka != kb) return out;  // rotation by the centre kills it for every n
      out.validity_threshold = std::max(1, ka);
      if (m.plain() != m.conjugated()) return out;
      Integer v = 1;
      for (const auto& [j, aj] : m.plain()) v *= ipow(j, aj) * factorial(aj);
      out.value = RankPolynomial(Rational(v));
      return out;
    }
    case GroupKind::SpecialOrthogonal: {
      if (!m.conjugated().empty()) throw DomainError("conjugated factors have no meaning on SO(n)");
      Integer v = 1;
      for (const auto& [j, aj] : m.plain()) v *= moment_factor(j, aj);
      out.value = RankPolynomial(Rational(v));
      out.validity_threshold = ka + 1;
      return out;
    }
    case GroupKind::UnitarySymplectic: {
      if (!m.conjugated().empty()) throw DomainError("conjugated factors have no meaning on USp(2n)");
      Integer v = 1;
      for (const auto& [j, aj] : m.plain()) {
        v *= moment_factor(j, aj);
        if ((j - 1) * aj % 2 == 1) v = -v;
      }
      out.value = RankPolynomial(Rational(v));
      out.validity_threshold = std::max(1, (ka + 1) / 2);
      return out;
    }
  }
  return out;
}

ExpectationResult haar_expectation(const PowerSumPolynomial& f) {
  ExpectationResult out;
  for (const auto& [m, c] : f.terms()) {
    const ExpectationResult e = monomial_expectation(f.kind(), m);
    out.value += c * e.value;
    out.validity_threshold = std::max(out.validity_threshold, e.validity_threshold);
  }
  return out;
}

ExpectationResult::Evaluated ExpectationResult::at(int n, bool force) const {
  const bool guaranteed = n >= validity_threshold;
  if (!guaranteed && !force) {
    throw BelowThreshold("moment formula is exact only for n >= " + std::to_string(validity_threshold) +
                             ", requested n = " + std::to_string(n),
                         validity_threshold, n);
  }
  return {value.evaluate(Rational(n)), guaranteed};
}

// ---------------------------------------------------------------------------
// Numerical evaluation

std::complex<double> evaluate(const PowerSumPolynomial& f, std::span<const std::complex<double>> traces, int rank) {
  if (f.max_index() >= static_cast<int>(traces.size())) {
    throw DomainError("evaluate: need traces up to power " + std::to_string(f.max_index()));
  }
  std::complex<double> total = 0.0;
  for (const auto& [m, c] : f.terms()) {
    std::complex<double> term = c.evaluate(static_cast<double>(rank));
    for (const auto& [j, e] : m.plain())
      for (int i = 0; i < e; ++i) term *= traces[static_cast<std::size_t>(j)];
    for (const auto& [j, e] : m.conjugated())
      for (int i = 0; i < e; ++i) term *= std::conj(traces[static_cast<std::size_t>(j)]);
    total += term;
  }
  return total;
}

NumericPolynomial compile(const PowerSumPolynomial& f, int rank) {
  NumericPolynomial out;
  out.max_index = f.max_index();
  for (const auto& [m, c] : f.terms()) {
    NumericPolynomial::Term t{c.evaluate(static_cast<double>(rank)), {}, {}};
    for (const auto& [j, e] : m.plain()) t.plain.insert(t.plain.end(), static_cast<std::size_t>(e), j);
    for (const auto& [j, e] : m.conjugated()) t.conjugated.insert(t.conjugated.end(), static_cast<std::size_t>(e), j);
    out.terms.push_back(std::move(t));
  }
  return out;
}

std::complex<double> NumericPolynomial::operator()(std::span<const std::complex<double>> traces) const {
  if (max_index >= static_cast<int>(traces.size())) throw DomainError("evaluate: too few traces");
  std::complex<double> total = 0.0;
  for (const auto& t : terms) {
    std::complex<double> v = t.coefficient;
    for (int j : t.plain) v *= traces[static_cast<std::size_t>(j)];
    for (int j : t.conjugated) v *= std::conj(traces[static_cast<std::size_t>(j)]);
    total += v;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

// Partitions of `total` as exponent maps, parts at most `max_part`.
void partitions(int total, int max_part, PowerSumMonomial::ExponentMap& current,
                std::vector<PowerSumMonomial::ExponentMap>& out) {
  if (total == 0) {
    out.push_back(current);
    return;
  }
  for (int part = std::min(total, max_part); part >= 1; --part) {
    ++current[part];
    partitions(total - part, part, current, out);
    if (--current[part] == 0) current.erase(part);
  }
}

std::vector<PowerSumMonomial::ExponentMap> partitions_of(int total) {
  std::vector<PowerSumMonomial::ExponentMap> out;
  PowerSumMonomial::ExponentMap current;
  partitions(total, total, current, out);
  return out;
}

}  // namespace

std::vector<PowerSumMonomial> laplacian_domain(GroupKind kind, int max_weight) {
  std::vector<PowerSumMonomial> out;
  out.emplace_back();
  const bool unitary = kind == GroupKind::Unitary;
  for (int j = 1; j <= max_weight; ++j) {
    out.push_back(PowerSumMonomial::power_sum(j));
    if (unitary) out.push_back(PowerSumMonomial::conj_power_sum(j));
  }
  for (int j = 1; j <= max_weight; ++j) {
    for (int k = j; j + k <= max_weight; ++k) {
      const PowerSumMonomial pair = PowerSumMonomial::power_sum(j) * PowerSumMonomial::power_sum(k);
      out.push_back(pair);
      if (unitary) out.push_back(pair.conjugate());
    }
  }
  if (unitary) {
    for (int j = 1; j <= max_weight; ++j)
      for (int k = 1; j + k <= max_weight; ++k)
        out.push_back(PowerSumMonomial::power_sum(j) * PowerSumMonomial::conj_power_sum(k));
  }
  return out;
}

std::vector<PowerSumMonomial> monomials_up_to_weight(GroupKind kind, int max_weight) {
  std::vector<PowerSumMonomial> out;
  if (kind != GroupKind::Unitary) {
    for (int w = 0; w <= max_weight; ++w)
      for (auto& a : partitions_of(w)) out.emplace_back(std::move(a));
    return out;
  }
  for (int w = 0; w <= max_weight; ++w) {
    for (int wa = 0; wa <= w; ++wa) {
      const auto as = partitions_of(wa);
      const auto bs = partitions_of(w - wa);
      for (const auto& a : as)
        for (const auto& b : bs) out.emplace_back(a, b);
    }
  }
  return out;
}

}  // namespace cltrace
