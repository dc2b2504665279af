// Acceptance suite: one pass/fail line per criterion.
//
//   acceptance              run all ten
//   acceptance --criterion 7

#include "cltrace/errors.hpp"
#include "cltrace/experiments.hpp"
#include "cltrace/groups.hpp"
#include "cltrace/psalgebra.hpp"
#include "cltrace/stein.hpp"
#include "cltrace/transport.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace cltrace;

namespace {

constexpr GroupKind kU = GroupKind::Unitary;
constexpr GroupKind kSO = GroupKind::SpecialOrthogonal;
constexpr GroupKind kSp = GroupKind::UnitarySymplectic;
const GroupKind kAll[] = {kU, kSO, kSp};

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

// Runs a shipped config with as many workers as the machine has; results do
// not depend on the worker count.
StudyReport run_config(const std::string& name) {
  std::ifstream in(std::string(CLTRACE_CONFIG_DIR) + "/" + name);
  if (!in) throw ConfigError("--config", "missing " + name);
  nlohmann::json doc = nlohmann::json::parse(in);
  doc["workers"] = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return run_study(StudyConfig::from_json(doc));
}

std::string failing_cells(const StudyReport& rep, std::size_t limit = 3) {
  std::string out;
  std::size_t shown = 0;
  for (const auto& c : rep.cells) {
    if (c.contains("pass") && !c["pass"].get<bool>() && shown++ < limit) out += " " + c.dump();
  }
  return out;
}

Outcome c1_stationarity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t count = 0, bad = 0;
  for (GroupKind k : kAll) {
    for (const auto& m : laplacian_domain(k, 8)) {
      ++count;
      if (!haar_expectation(laplacian(PowerSumPolynomial::monomial(k, m))).value.is_zero()) ++bad;
    }
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < 1.0, std::to_string(count) + " identities, " + std::to_string(bad) + " nonzero, " + fmt(t, 3) + " s"};
}

Outcome c2_regression() {
  std::size_t count = 0, bad = 0;
  for (GroupKind k : kAll) {
    const auto rem = build_remainders(k, 8, 8);
    for (int j = 1; j <= 8; ++j) {
      const auto fj = centered_power_sum(k, j);
      ++count;
      bad += !(laplacian(fj) + lambda_symbol(k, j) * fj - rem.R[j - 1]).is_zero();
      for (int l = 1; l <= 8; ++l) {
        const auto fl = centered_power_sum(k, l);
        auto expected = rem.S[j - 1][l - 1];
        if (j == l) expected += PowerSumPolynomial::constant(k, RankPolynomial(2 * j) * lambda_symbol(k, j));
        ++count;
        bad += !(quadratic_variation(fj, conjugate(fl)) - expected).is_zero();
        if (k == kU) {
          ++count;
          bad += !(quadratic_variation(fj, fl) - (*rem.T)[j - 1][l - 1]).is_zero();
        }
      }
    }
  }
  return {bad == 0, std::to_string(count) + " symbolic identities, " + std::to_string(bad) + " violated"};
}

Outcome c3_closed_forms() {
  std::size_t count = 0, bad = 0;
  for (int d = 1; d <= 8; ++d) {
    for (int r = 1; r <= d; ++r) {
      Rational expect = 0;
      for (int j = d - r + 1; j <= d; ++j) {
        expect += 2 * Rational(j) * j * j * j * j;
        for (int k = d - r + 1; k < j; ++k) expect += 4 * Rational(k) * k * j * j * j;
      }
      ++count;
      bad += second_moments(kSO, d, r).ES2 != RankPolynomial(expect);
    }
  }
  const bool u_r = second_moments(kU, 2, 2).ER2 == RankPolynomial(8);
  const bool u_t = *second_moments(kU, 1, 1).ET2 == RankPolynomial(8);
  return {bad == 0 && u_r && u_t, "SO E|S|^2 closed form on " + std::to_string(count) + " (d, r) pairs, " +
                                      std::to_string(bad) + " mismatches; U E|R|^2(2,2)=8 " + (u_r ? "ok" : "FAIL") +
                                      ", U E|T|^2(1,1)=8 " + (u_t ? "ok" : "FAIL")};
}

Outcome c4_bounds() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_exact = 0;
  for (int n = 2; n <= 200; ++n)
    worst_exact = std::max(worst_exact, std::abs(wasserstein_bound(kU, 1, 1, n).bound - 2 / (std::sqrt(M_PI) * n)));
  constexpr double kEnvelope = 10.0;
  std::string maxima;
  bool within = true;
  for (GroupKind k : kAll) {
    double worst = 0;
    for (int d = 1; d <= 8; ++d)
      for (int r = 1; r <= d; ++r)
        for (int n = 4 * d + 1; n <= 200; ++n) {
          const auto b = wasserstein_bound(k, d, r, n);
          worst = std::max(worst, b.bound / b.rate);
        }
    within = within && worst <= kEnvelope;
    maxima += std::string(" ") + std::string(short_name(k)) + "=" + fmt(worst);
  }
  const double t = seconds_since(t0);
  return {worst_exact <= 1e-12 && within && t < 10,
          "max |bound - 2/(sqrt(pi) n)| = " + fmt(worst_exact, 3) + "; max bound/rate" + maxima + " (envelope " +
              fmt(kEnvelope) + "); " + fmt(t, 3) + " s"};
}

Outcome study_outcome(std::initializer_list<const char*> configs) {
  Outcome o;
  for (const char* name : configs) {
    const auto rep = run_config(name);
    o.pass = o.pass && rep.all_pass();
    o.detail += std::string(o.detail.empty() ? "" : "; ") + name + ": " + std::to_string(rep.gated_cells() - rep.failures()) +
                "/" + std::to_string(rep.gated_cells()) + " gated cells pass in " + fmt(rep.wall_clock_seconds, 3) + " s" +
                failing_cells(rep);
  }
  return o;
}

Outcome c7_clt() {
  const auto rep = run_config("clt.json");
  std::string w;
  for (const auto& c : rep.cells)
    if (c["type"] == "w1") w += " n=" + c["n"].dump() + ":" + fmt(c["w1"].get<double>());
  std::string decay;
  for (const auto& c : rep.cells)
    if (c["type"] == "decay")
      decay = " strictly_decreasing=" + c["strictly_decreasing"].dump() + " slope=" + fmt(c["slope"].get<double>()) +
              " (need <= " + fmt(c["tolerance"].get<double>()) + ")";
  return {rep.all_pass(), "w1" + w + ";" + decay + "; " + fmt(rep.wall_clock_seconds, 3) + " s"};
}

Outcome c9_transport() {
  Rng rng = make_rng(9, 0);
  std::normal_distribution<double> z;
  auto points = [&](int n, int dim) {
    Eigen::MatrixXd m(n, dim);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < dim; ++k) m(i, k) = z(rng);
    return EmpiricalCloud{m, {}};
  };
  std::uniform_int_distribution<int> size(1, 500);
  double worst_1d = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = size(rng);
    const auto x = points(n, 1), y = points(n, 1);
    worst_1d = std::max(worst_1d, std::abs(w1_exact(x, y).value - w1_1d(x, y).value));
  }
  double worst_metric = 0;
  for (int t = 0; t < 10; ++t) {
    const auto x = points(60, 3), y = points(60, 3), w = points(60, 3);
    const double xy = w1_exact(x, y).value;
    worst_metric = std::max(worst_metric, std::abs(xy - w1_exact(y, x).value));
    worst_metric = std::max(worst_metric, xy - w1_exact(x, w).value - w1_exact(w, y).value);
    worst_metric = std::max(worst_metric, w1_exact(x, x).value);
    Eigen::RowVector3d c(z(rng), z(rng), z(rng));
    EmpiricalCloud shifted{x.points.rowwise() + c, {}};
    worst_metric = std::max(worst_metric, std::abs(w1_exact(x, shifted).value - c.norm()));
  }
  double worst_real = 0;
  for (int d : {1, 2, 4, 7}) {
    auto cplx = [&](int rows, int cols) {
      Eigen::MatrixXcd m(rows, cols);
      for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k) m(i, k) = {z(rng), z(rng)};
      return m;
    };
    const Eigen::MatrixXcd a = cplx(d, d), b = cplx(d, d);
    const Eigen::VectorXcd u = cplx(d, 1), v = cplx(d, 1);
    const Eigen::MatrixXd ar = realify(a);
    auto gap = [](const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) { return (p - q).cwiseAbs().maxCoeff(); };
    worst_real = std::max(worst_real, gap(realify(Eigen::MatrixXcd(a * b)), ar * realify(b)));
    worst_real = std::max(worst_real, gap(realify(Eigen::MatrixXcd(a.adjoint())), ar.transpose()));
    worst_real = std::max(worst_real, gap(realify(Eigen::MatrixXcd(a * a.adjoint())), ar * ar.transpose()));
    worst_real = std::max(worst_real, gap(realify(u) * realify(v).transpose(),
                                          0.5 * realify(Eigen::MatrixXcd(u * v.adjoint())) +
                                              0.5 * realify(Eigen::MatrixXcd(u * v.transpose())) * realified_conjugation(d)));
  }
  return {worst_1d <= 1e-12 && worst_metric <= 1e-12 && worst_real <= 1e-14,
          "exact vs sorted on 100 instances: " + fmt(worst_1d, 3) + "; metric/translation: " + fmt(worst_metric, 3) +
              "; realification: " + fmt(worst_real, 3)};
}

Outcome c10_sampler() {
  struct Case {
    GroupKind kind;
    int n;
    std::vector<const char*> observables;
  };
  const Case cases[] = {{kU, 6, {"p1", "p2", "p1*~p1", "p2*~p2", "p[1,1]*~p2", "p[1,1]*~p[1,1]"}},
                        {kSO, 9, {"p1", "p2", "p1^2", "p2^2", "p[1,2]", "p3^2"}},
                        {kSp, 4, {"p1", "p2", "p1^2", "p2^2", "p[1,2]", "p4"}}};
  Outcome o;
  for (const auto& c : cases) {
    Rng rng = make_rng(10, static_cast<std::uint64_t>(c.kind));
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
      const Diagnostics d = group_diagnostics(haar_sample(c.kind, c.n, rng));
      worst = std::max({worst, d.unitarity, d.determinant, d.symplectic, d.realness});
    }
    // left invariance: G M has the Haar moments for a fixed G
    const Eigen::MatrixXcd g = haar_sample(c.kind, c.n, rng).matrix;
    std::vector<NumericPolynomial> f;
    std::vector<double> exact;
    for (const char* text : c.observables) {
      const auto p = parse_polynomial(text, c.kind);
      f.push_back(compile(p, c.n));
      exact.push_back(haar_expectation(p).at(c.n).value.convert_to<double>());
    }
    const int N = 20000;
    std::vector<std::array<double, 4>> acc(f.size(), {0, 0, 0, 0});
    for (int i = 0; i < N; ++i) {
      const auto traces = power_traces(g * haar_sample(c.kind, c.n, rng).matrix, 6);
      for (std::size_t k = 0; k < f.size(); ++k) {
        const cd v = f[k](traces);
        acc[k][0] += v.real();
        acc[k][1] += v.real() * v.real();
        acc[k][2] += v.imag();
        acc[k][3] += v.imag() * v.imag();
      }
    }
    int fails = 0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double mr = acc[k][0] / N, mi = acc[k][2] / N;
      const double ser = std::sqrt(std::max(acc[k][1] / N - mr * mr, 0.0) / (N - 1));
      const double sei = std::sqrt(std::max(acc[k][3] / N - mi * mi, 0.0) / (N - 1));
      fails += std::abs(mr - exact[k]) > std::max(5 * ser, 1e-12) || std::abs(mi) > std::max(5 * sei, 1e-12);
    }
    o.pass = o.pass && worst <= 1e-10 && fails == 0;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + std::string(short_name(c.kind)) + "(" + std::to_string(c.n) +
                "): max defect " + fmt(worst, 3) + " over 1000 draws, left-invariance " +
                std::to_string(f.size() - static_cast<std::size_t>(fails)) + "/" + std::to_string(f.size()) + " within 5 SE";
  }
  return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list{
      {"exact stationarity suite", c1_stationarity},
      {"exact regression identities", c2_regression},
      {"closed-form second moments", c3_closed_forms},
      {"bound values and envelope", c4_bounds},
      {"moment Monte Carlo", [] { return study_outcome({"moments_u.json", "moments_so.json", "moments_sp.json"}); }},
      {"generator check", [] { return study_outcome({"generator_u.json", "generator_so.json"}); }},
      {"CLT decay of empirical W1", c7_clt},
      {"finite-n covariance", [] { return study_outcome({"covariance.json"}); }},
      {"transport correctness", c9_transport},
      {"sampler validity", c10_sampler},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    if (only && k != only) continue;
    Outcome o;
    try {
      o = criteria()[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << k << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria()[i].first << ": " << o.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
