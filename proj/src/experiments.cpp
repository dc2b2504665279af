#include "cltrace/experiments.hpp"

#include "cltrace/errors.hpp"
#include "cltrace/groups.hpp"
#include "cltrace/montecarlo.hpp"
#include "cltrace/stein.hpp"
#include "cltrace/transport.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace cltrace {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr double kGate = 5.0;  // standard errors

// Stream ids: block b (one per group/n/h combination) owns [b << 32, (b + 1) << 32).
std::uint64_t stream_base(std::uint64_t block) { return block << 32; }
constexpr std::uint64_t kReferenceStream = 0xfffffff0ULL;

// --------------------------------------------------------------------------
// config parsing

int as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) throw ConfigError(field, "out of range");
  return static_cast<int>(x);
}

// Integer, array of integers, or {"from", "to", "step"}.
std::vector<int> int_grid(const json& v, const std::string& field) {
  std::vector<int> out;
  if (v.is_number_integer()) {
    out.push_back(as_int(v, field));
  } else if (v.is_array()) {
    for (const auto& x : v) out.push_back(as_int(x, field));
  } else if (v.is_object()) {
    for (const auto& [key, value] : v.items())
      if (key != "from" && key != "to" && key != "step") throw ConfigError(field + "." + key, "unknown range key");
    if (!v.contains("from") || !v.contains("to")) throw ConfigError(field, "range needs 'from' and 'to'");
    const int from = as_int(v["from"], field + ".from");
    const int to = as_int(v["to"], field + ".to");
    const int step = v.contains("step") ? as_int(v["step"], field + ".step") : 1;
    if (step < 1) throw ConfigError(field + ".step", "must be positive");
    for (int x = from; x <= to; x += step) out.push_back(x);
  } else {
    throw ConfigError(field, "expected an integer, an array or a range object");
  }
  if (out.empty()) throw ConfigError(field, "grid is empty");
  return out;
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) throw ConfigError(field, "expected true or false");
  return v.get<bool>();
}

double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field, "must be finite");
  return x;
}

StudyKind parse_study(const std::string& s) {
  if (s == "moments") return StudyKind::Moments;
  if (s == "generator") return StudyKind::Generator;
  if (s == "bounds") return StudyKind::Bounds;
  if (s == "clt") return StudyKind::Clt;
  throw ConfigError("study", "expected moments, generator, bounds or clt, got '" + s + "'");
}

// --------------------------------------------------------------------------
// small helpers

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string group_tag(GroupKind kind) { return std::string(short_name(kind)); }

struct Observable {
  std::string label;
  PowerSumPolynomial poly;
};

std::vector<NumericPolynomial> compile_all(const std::vector<Observable>& obs, int n) {
  std::vector<NumericPolynomial> out;
  for (const auto& o : obs) out.push_back(compile(o.poly, n));
  return out;
}

std::vector<Observable> configured_observables(const StudyConfig& cfg, GroupKind kind, bool include_all) {
  std::vector<Observable> out;
  for (const auto& text : cfg.monomials) {
    try {
      PowerSumPolynomial f = parse_polynomial(text, kind);
      out.push_back({to_string(f), std::move(f)});
    } catch (const Error& e) {
      throw ConfigError("monomials", "'" + text + "': " + e.what());
    }
  }
  if (include_all && cfg.max_weight > 0) {
    for (const auto& m : monomials_up_to_weight(kind, cfg.max_weight)) {
      if (m.is_constant()) continue;
      out.push_back({to_string(m), PowerSumPolynomial::monomial(kind, m)});
    }
  }
  return out;
}

// |x - target| <= 5 SE, with a floor for quantities that are exact in floating point.
bool within_gate(double estimate, double se, double target, double* tolerance) {
  *tolerance = std::max(kGate * se, 1e-12);
  return std::abs(estimate - target) <= *tolerance;
}

std::string csv_field(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
  return v.dump();
}

}  // namespace

std::string to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::Moments: return "moments";
    case StudyKind::Generator: return "generator";
    case StudyKind::Bounds: return "bounds";
    case StudyKind::Clt: return "clt";
  }
  return "?";
}

// --------------------------------------------------------------------------
// StudyConfig

StudyConfig StudyConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("(root)", "expected a JSON object");
  static const std::set<std::string> known{"study",   "group",        "n",         "d",          "r",
                                           "samples", "h",            "seed",      "workers",    "max_weight",
                                           "monomials", "powers",     "override",  "skip_below_threshold",
                                           "ratio_envelope", "wasserstein", "covariance", "max_slope", "output"};
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw ConfigError(key, "unknown field");

  StudyConfig cfg;
  if (!doc.contains("study")) throw ConfigError("study", "missing");
  cfg.study = parse_study(as_string(doc["study"], "study"));

  if (doc.contains("group")) {
    cfg.groups.clear();
    auto add = [&](const json& v) {
      try {
        cfg.groups.push_back(parse_group_kind(as_string(v, "group")));
      } catch (const DomainError& e) {
        throw ConfigError("group", e.what());
      }
    };
    if (doc["group"].is_array()) {
      for (const auto& g : doc["group"]) add(g);
    } else {
      add(doc["group"]);
    }
    if (cfg.groups.empty()) throw ConfigError("group", "empty list");
  }
  if (doc.contains("d")) cfg.d_grid = int_grid(doc["d"], "d");
  for (int d : cfg.d_grid)
    if (d < 1) throw ConfigError("d", "must be at least 1");
  if (doc.contains("r")) {
    if (doc["r"].is_string()) {
      if (doc["r"].get<std::string>() != "all") throw ConfigError("r", "the only string value is \"all\"");
      cfg.r_grid.clear();
    } else {
      cfg.r_grid = int_grid(doc["r"], "r");
    }
  } else if (cfg.study == StudyKind::Bounds) {
    cfg.r_grid.clear();
  } else {
    cfg.r_grid = {cfg.d()};
  }
  for (int r : cfg.r_grid)
    if (r < 1) throw ConfigError("r", "must be at least 1");
  if (cfg.study != StudyKind::Bounds) {
    if (cfg.d_grid.size() != 1) throw ConfigError("d", "only the bounds study takes a grid of d");
    if (cfg.r_grid.size() != 1 || cfg.r() > cfg.d()) throw ConfigError("r", "need a single r with 1 <= r <= d");
  }

  if (!doc.contains("n")) throw ConfigError("n", "missing");
  cfg.n_grid = int_grid(doc["n"], "n");
  for (int n : cfg.n_grid)
    if (n < 1) throw ConfigError("n", "ranks must be positive");

  const bool stochastic = cfg.study != StudyKind::Bounds;
  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("seed", "expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("samples")) {
    if (!doc["samples"].is_number_integer()) throw ConfigError("samples", "expected an integer");
    cfg.samples = doc["samples"].get<long long>();
  }
  if (stochastic && cfg.samples < 2) throw ConfigError("samples", "need at least 2 samples");
  if (doc.contains("workers")) cfg.workers = as_int(doc["workers"], "workers");
  if (cfg.workers < 1) throw ConfigError("workers", "must be at least 1");

  if (doc.contains("h")) {
    if (!doc["h"].is_array()) throw ConfigError("h", "expected an array of step sizes");
    for (const auto& v : doc["h"]) {
      const double h = as_double(v, "h");
      if (h <= 0) throw ConfigError("h", "step sizes must be positive");
      cfg.h_grid.push_back(h);
    }
  }
  if (cfg.study == StudyKind::Generator) {
    if (cfg.h_grid.size() < 3) throw ConfigError("h", "need at least three step sizes (two halvings)");
    for (std::size_t i = 1; i < cfg.h_grid.size(); ++i)
      if (!(cfg.h_grid[i] < cfg.h_grid[i - 1])) throw ConfigError("h", "step sizes must be strictly decreasing");
  }

  if (doc.contains("max_weight")) cfg.max_weight = as_int(doc["max_weight"], "max_weight");
  if (cfg.max_weight < 0) throw ConfigError("max_weight", "must be non-negative");
  if (doc.contains("monomials")) {
    if (!doc["monomials"].is_array()) throw ConfigError("monomials", "expected an array of strings");
    for (const auto& m : doc["monomials"]) cfg.monomials.push_back(as_string(m, "monomials"));
  }
  if (cfg.study == StudyKind::Moments && cfg.monomials.empty() && cfg.max_weight == 0)
    throw ConfigError("monomials", "give monomials or a positive max_weight");
  if (cfg.study == StudyKind::Generator && cfg.monomials.empty()) cfg.monomials = {"p2"};
  if (doc.contains("powers")) {
    cfg.powers = int_grid(doc["powers"], "powers");
    for (int j : cfg.powers)
      if (j < 1) throw ConfigError("powers", "must be positive");
  }

  if (doc.contains("override")) cfg.override_thresholds = as_bool(doc["override"], "override");
  if (doc.contains("skip_below_threshold"))
    cfg.skip_below_threshold = as_bool(doc["skip_below_threshold"], "skip_below_threshold");
  if (doc.contains("ratio_envelope")) cfg.ratio_envelope = as_double(doc["ratio_envelope"], "ratio_envelope");
  if (cfg.ratio_envelope <= 0) throw ConfigError("ratio_envelope", "must be positive");
  if (doc.contains("wasserstein")) cfg.wasserstein = as_bool(doc["wasserstein"], "wasserstein");
  if (doc.contains("covariance")) cfg.covariance = as_bool(doc["covariance"], "covariance");
  if (doc.contains("max_slope")) cfg.max_slope = as_double(doc["max_slope"], "max_slope");
  if (cfg.study == StudyKind::Clt && cfg.wasserstein && cfg.samples > kAssignmentCap)
    throw ConfigError("samples", "exact assignment is capped at " + std::to_string(kAssignmentCap) +
                                     " points; set \"wasserstein\": false for larger runs");

  if (doc.contains("output")) {
    const auto& o = doc["output"];
    if (!o.is_object()) throw ConfigError("output", "expected {\"json\": path, \"csv\": path}");
    for (const auto& [key, value] : o.items()) {
      if (key == "json") {
        cfg.json_path = as_string(value, "output.json");
      } else if (key == "csv") {
        cfg.csv_path = as_string(value, "output.csv");
      } else {
        throw ConfigError("output." + key, "unknown field");
      }
    }
  }
  return cfg;
}

ojson StudyConfig::to_json() const {
  ojson j;
  j["study"] = cltrace::to_string(study);
  ojson g = ojson::array();
  for (auto k : groups) g.push_back(group_tag(k));
  j["group"] = g;
  j["n"] = n_grid;
  j["d"] = d_grid;
  if (r_grid.empty()) {
    j["r"] = "all";
  } else {
    j["r"] = r_grid;
  }
  j["samples"] = samples;
  if (!h_grid.empty()) j["h"] = h_grid;
  if (seed) j["seed"] = *seed;
  j["workers"] = workers;
  if (max_weight > 0) j["max_weight"] = max_weight;
  if (!monomials.empty()) j["monomials"] = monomials;
  if (study == StudyKind::Generator) j["powers"] = powers;
  if (study == StudyKind::Bounds) {
    j["override"] = override_thresholds;
    j["skip_below_threshold"] = skip_below_threshold;
    j["ratio_envelope"] = ratio_envelope;
  }
  if (study == StudyKind::Clt) {
    j["wasserstein"] = wasserstein;
    j["covariance"] = covariance;
    j["max_slope"] = max_slope;
  }
  return j;
}

// --------------------------------------------------------------------------
// StudyReport

std::size_t StudyReport::gated_cells() const {
  std::size_t count = 0;
  for (const auto& c : cells) count += c.contains("pass");
  return count;
}

std::size_t StudyReport::failures() const {
  std::size_t count = 0;
  for (const auto& c : cells)
    if (c.contains("pass") && !c["pass"].get<bool>()) ++count;
  return count;
}

ojson StudyReport::to_json() const {
  ojson j;
  j["study"] = cltrace::to_string(study);
  j["config"] = config;
  j["cells"] = cells;
  j["gated_cells"] = gated_cells();
  j["failures"] = failures();
  j["status"] = all_pass() ? "pass" : "fail";
  j["notes"] = notes;
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

void StudyReport::write_csv(std::ostream& out) const {
  std::vector<std::string> columns;
  std::set<std::string> seen;
  for (const auto& c : cells)
    for (const auto& [key, value] : c.items())
      if (seen.insert(key).second) columns.push_back(key);
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& c : cells) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out << ',';
      if (c.contains(columns[i])) out << csv_field(c[columns[i]]);
    }
    out << '\n';
  }
}

std::vector<std::string> StudyReport::summary_lines() const {
  std::vector<std::string> lines;
  for (const auto& c : cells) {
    std::ostringstream os;
    os << "study=" << cltrace::to_string(study);
    for (const auto& [key, value] : c.items()) {
      std::string v = value.is_string() ? value.get<std::string>() : value.dump();
      if (v.find(' ') != std::string::npos) v = "\"" + v + "\"";
      os << ' ' << key << '=' << v;
    }
    lines.push_back(os.str());
  }
  std::ostringstream tail;
  tail << "study=" << cltrace::to_string(study) << " status=" << (all_pass() ? "pass" : "fail")
       << " cells=" << cells.size() << " gated=" << gated_cells() << " failures=" << failures();
  lines.push_back(tail.str());
  return lines;
}

// --------------------------------------------------------------------------
// moments

StudyReport run_moment_study(const StudyConfig& cfg) {
  if (!cfg.seed) throw ConfigError("seed", "stochastic studies need an explicit seed");
  const auto start = std::chrono::steady_clock::now();
  StudyReport report;
  report.study = StudyKind::Moments;
  report.config = cfg.to_json();

  std::uint64_t block = 0;
  for (GroupKind kind : cfg.groups) {
    const auto observables = configured_observables(cfg, kind, true);
    int max_index = 1;
    for (const auto& o : observables) max_index = std::max(max_index, o.poly.max_index());
    for (int n : cfg.n_grid) {
      std::vector<Rational> exact;
      for (const auto& o : observables) exact.push_back(haar_expectation(o.poly).at(n).value);

      const auto compiled = compile_all(observables, n);
      const std::size_t width = 2 * observables.size();
      std::function<std::vector<RunningStats>(Rng&, long long)> body = [&](Rng& rng, long long count) {
        std::vector<RunningStats> stats(width);
        for (long long s = 0; s < count; ++s) {
          const GroupElement m = haar_sample(kind, n, rng);
          const auto traces = power_traces(m.matrix, max_index);
          for (std::size_t i = 0; i < observables.size(); ++i) {
            const cd v = compiled[i](traces);
            stats[2 * i].add(v.real());
            stats[2 * i + 1].add(v.imag());
          }
        }
        return stats;
      };
      const auto merged = merge_stats(run_chunks(*cfg.seed, stream_base(block++), cfg.samples, cfg.workers, body), width);

      for (std::size_t i = 0; i < observables.size(); ++i) {
        const auto& re = merged[2 * i];
        const auto& im = merged[2 * i + 1];
        const double target = exact[i].convert_to<double>();
        double tol_re = 0, tol_im = 0;
        const bool ok_re = within_gate(re.mean, re.standard_error(), target, &tol_re);
        const bool ok_im = within_gate(im.mean, im.standard_error(), 0.0, &tol_im);
        ojson cell;
        cell["type"] = "moment";
        cell["group"] = group_tag(kind);
        cell["n"] = n;
        cell["observable"] = observables[i].label;
        cell["samples"] = cfg.samples;
        cell["exact"] = target;
        cell["threshold"] = haar_expectation(observables[i].poly).validity_threshold;
        cell["estimate_re"] = re.mean;
        cell["se_re"] = re.standard_error();
        cell["tolerance_re"] = tol_re;
        cell["estimate_im"] = im.mean;
        cell["se_im"] = im.standard_error();
        cell["tolerance_im"] = tol_im;
        cell["pass"] = ok_re && ok_im;
        report.cells.push_back(std::move(cell));
      }
    }
  }
  report.notes.push_back("gates: |estimate - exact| <= 5 standard errors, separately for real and imaginary parts");
  report.wall_clock_seconds = elapsed(start);
  return report;
}

// --------------------------------------------------------------------------
// generator

StudyReport run_generator_study(const StudyConfig& cfg) {
  if (!cfg.seed) throw ConfigError("seed", "stochastic studies need an explicit seed");
  const auto start = std::chrono::steady_clock::now();
  StudyReport report;
  report.study = StudyKind::Generator;
  report.config = cfg.to_json();

  std::uint64_t block = 0;
  for (GroupKind kind : cfg.groups) {
    const auto observables = configured_observables(cfg, kind, false);
    int max_index = 1;
    for (const auto& o : observables) max_index = std::max(max_index, o.poly.max_index());
    const int max_power = *std::max_element(cfg.powers.begin(), cfg.powers.end());

    for (int n : cfg.n_grid) {
      const BrownianMotion bm(kind, n);
      const auto compiled = compile_all(observables, n);
      Rng ref_rng = make_rng(*cfg.seed, stream_base(block) + kReferenceStream);
      const GroupElement m0 = haar_sample(kind, n, ref_rng);
      const auto traces0 = power_traces(m0.matrix, max_index);
      {
        ojson cell;
        cell["type"] = "reference_point";
        cell["group"] = group_tag(kind);
        cell["n"] = n;
        for (int j = 1; j <= max_index; ++j) {
          cell["p" + std::to_string(j) + "_re"] = traces0[static_cast<std::size_t>(j)].real();
          cell["p" + std::to_string(j) + "_im"] = traces0[static_cast<std::size_t>(j)].imag();
        }
        report.cells.push_back(std::move(cell));
      }

      // drift: finite-difference quotient of E[f(M_h)] - f(M0) against the symbolic Laplacian
      std::vector<cd> symbolic, geometric, f0;
      for (const auto& o : observables) {
        symbolic.push_back(evaluate(laplacian(o.poly), power_traces(m0.matrix, 2 * max_index), n));
        geometric.push_back(geometric_laplacian(o.poly, m0, bm.basis()));
        f0.push_back(evaluate(o.poly, traces0, n));
      }
      for (std::size_t i = 0; i < observables.size(); ++i) {
        const double diff = std::abs(symbolic[i] - geometric[i]);
        const double tol = 1e-8 * (1.0 + std::abs(symbolic[i]));
        ojson cell;
        cell["type"] = "laplacian_check";
        cell["group"] = group_tag(kind);
        cell["n"] = n;
        cell["observable"] = observables[i].label;
        cell["laplacian_re"] = symbolic[i].real();
        cell["laplacian_im"] = symbolic[i].imag();
        cell["geometric_re"] = geometric[i].real();
        cell["geometric_im"] = geometric[i].imag();
        cell["deviation"] = diff;
        cell["tolerance"] = tol;
        cell["pass"] = diff <= tol;
        report.cells.push_back(std::move(cell));
      }

      std::vector<std::vector<double>> deviation(observables.size()), deviation_se(observables.size());
      for (double h : cfg.h_grid) {
        const std::size_t width = 2 * observables.size();
        std::function<std::vector<RunningStats>(Rng&, long long)> body = [&](Rng& rng, long long count) {
          std::vector<RunningStats> stats(width);
          std::normal_distribution<double> normal(0.0, 1.0);
          Eigen::VectorXd z(static_cast<Eigen::Index>(bm.basis().size()));
          for (long long s = 0; s < count; ++s) {
            for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal(rng);
            const Eigen::MatrixXcd a = bm.increment_from(z, h);
            Eigen::MatrixXcd e = expm_skew_hermitian(a);
            if (kind == GroupKind::SpecialOrthogonal) e = e.real().cast<cd>();
            // antithetic pair: exp(-A) = exp(A)^*
            const auto plus = power_traces(m0.matrix * e, max_index);
            const auto minus = power_traces(m0.matrix * e.adjoint(), max_index);
            const auto jets = power_trace_jets(m0.matrix, a, max_index);
            for (std::size_t i = 0; i < observables.size(); ++i) {
              const cd even = 0.5 * (compiled[i](plus) + compiled[i](minus)) - f0[i];
              // second-order term as control variate; its mean is h * geometric[i]
              const cd v = (even - 0.5 * evaluate_jet(compiled[i], jets).d2) / h;
              stats[2 * i].add(v.real());
              stats[2 * i + 1].add(v.imag());
            }
          }
          return stats;
        };
        const auto merged = merge_stats(run_chunks(*cfg.seed, stream_base(block++), cfg.samples, cfg.workers, body), width);
        for (std::size_t i = 0; i < observables.size(); ++i) {
          const cd estimate = cd(merged[2 * i].mean, merged[2 * i + 1].mean) + geometric[i];
          const double se = std::hypot(merged[2 * i].standard_error(), merged[2 * i + 1].standard_error());
          const double dev = std::abs(estimate - symbolic[i]);
          deviation[i].push_back(dev);
          deviation_se[i].push_back(se);
          ojson cell;
          cell["type"] = "drift";
          cell["group"] = group_tag(kind);
          cell["n"] = n;
          cell["observable"] = observables[i].label;
          cell["h"] = h;
          cell["samples"] = cfg.samples;
          cell["estimate_re"] = estimate.real();
          cell["estimate_im"] = estimate.imag();
          cell["se"] = se;
          cell["laplacian_re"] = symbolic[i].real();
          cell["laplacian_im"] = symbolic[i].imag();
          cell["deviation"] = dev;
          report.cells.push_back(std::move(cell));
        }
      }
      for (std::size_t i = 0; i < observables.size(); ++i) {
        for (std::size_t k = 0; k + 1 < cfg.h_grid.size(); ++k) {
          const double a = deviation[i][k], b = deviation[i][k + 1];
          const double ratio = a / b;
          const double ratio_se = ratio * std::hypot(deviation_se[i][k] / a, deviation_se[i][k + 1] / b);
          ojson cell;
          cell["type"] = "drift_ratio";
          cell["group"] = group_tag(kind);
          cell["n"] = n;
          cell["observable"] = observables[i].label;
          cell["h"] = cfg.h_grid[k];
          cell["h_next"] = cfg.h_grid[k + 1];
          cell["ratio"] = ratio;
          cell["ratio_se"] = ratio_se;
          cell["lower"] = 1.5;
          cell["upper"] = 3.0;
          cell["pass"] = std::isfinite(ratio) && ratio >= 1.5 && ratio <= 3.0;
          report.cells.push_back(std::move(cell));
        }
      }

      // increments from Haar starting points: E|dp_j|^2 / h and E|dp_j|^4 / h^2
      const double rate_n = kind == GroupKind::Unitary             ? 2.0 * n
                            : kind == GroupKind::SpecialOrthogonal ? n - 1.0
                                                                   : 2.0 * n + 1.0;
      std::vector<std::vector<RunningStats>> fourth(cfg.powers.size());
      for (double h : cfg.h_grid) {
        const std::size_t width = 2 * cfg.powers.size();
        std::function<std::vector<RunningStats>(Rng&, long long)> body = [&](Rng& rng, long long count) {
          std::vector<RunningStats> stats(width);
          for (long long s = 0; s < count; ++s) {
            const GroupElement m = haar_sample(kind, n, rng);
            const GroupElement mh = bm.step(m, h, rng);
            const auto before = power_traces(m.matrix, max_power);
            const auto after = power_traces(mh.matrix, max_power);
            for (std::size_t i = 0; i < cfg.powers.size(); ++i) {
              const auto j = static_cast<std::size_t>(cfg.powers[i]);
              const double sq = std::norm(after[j] - before[j]);
              stats[2 * i].add(sq / h);
              stats[2 * i + 1].add(sq * sq / (h * h));
            }
          }
          return stats;
        };
        const auto merged = merge_stats(run_chunks(*cfg.seed, stream_base(block++), cfg.samples, cfg.workers, body), width);
        for (std::size_t i = 0; i < cfg.powers.size(); ++i) {
          const int j = cfg.powers[i];
          const double exact = static_cast<double>(j) * j * rate_n;
          double tol = 0;
          const bool ok = within_gate(merged[2 * i].mean, merged[2 * i].standard_error(), exact, &tol);
          ojson cell;
          cell["type"] = "second_moment";
          cell["group"] = group_tag(kind);
          cell["n"] = n;
          cell["j"] = j;
          cell["h"] = h;
          cell["samples"] = cfg.samples;
          cell["estimate"] = merged[2 * i].mean;
          cell["se"] = merged[2 * i].standard_error();
          cell["exact"] = exact;
          cell["tolerance"] = tol;
          cell["pass"] = ok;
          report.cells.push_back(std::move(cell));

          ojson f4;
          f4["type"] = "fourth_moment";
          f4["group"] = group_tag(kind);
          f4["n"] = n;
          f4["j"] = j;
          f4["h"] = h;
          f4["samples"] = cfg.samples;
          f4["estimate"] = merged[2 * i + 1].mean;  // E|dp_j|^4 / h^2
          f4["se"] = merged[2 * i + 1].standard_error();
          report.cells.push_back(std::move(f4));
          fourth[i].push_back(merged[2 * i + 1]);
        }
      }
      for (std::size_t i = 0; i < cfg.powers.size(); ++i) {
        for (std::size_t k = 0; k + 1 < cfg.h_grid.size(); ++k) {
          const double scale = cfg.h_grid[k] / cfg.h_grid[k + 1];
          const auto& a = fourth[i][k];
          const auto& b = fourth[i][k + 1];
          // E4(h)/E4(h') with E4 = estimate * h^2
          const double ratio = a.mean / b.mean * scale * scale;
          const double ratio_se = ratio * std::hypot(a.standard_error() / a.mean, b.standard_error() / b.mean);
          const double expected = scale * scale;
          double tol = 0;
          const bool ok = within_gate(ratio, ratio_se, expected, &tol);
          ojson cell;
          cell["type"] = "fourth_moment_ratio";
          cell["group"] = group_tag(kind);
          cell["n"] = n;
          cell["j"] = cfg.powers[i];
          cell["h"] = cfg.h_grid[k];
          cell["h_next"] = cfg.h_grid[k + 1];
          cell["ratio"] = ratio;
          cell["ratio_se"] = ratio_se;
          cell["expected"] = expected;
          cell["tolerance"] = tol;
          cell["pass"] = ok;
          report.cells.push_back(std::move(cell));
        }
      }
    }
  }
  report.notes.push_back(
      "drift estimator: antithetic increments with the exact second-order term as control variate; unbiased for "
      "(E[f(M_h)] - f(M0)) / h");
  report.wall_clock_seconds = elapsed(start);
  return report;
}

// --------------------------------------------------------------------------
// bounds

StudyReport run_bound_table(const StudyConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  StudyReport report;
  report.study = StudyKind::Bounds;
  report.config = cfg.to_json();

  for (GroupKind kind : cfg.groups) {
    for (int d : cfg.d_grid) {
      std::vector<int> rs = cfg.r_grid;
      if (rs.empty())
        for (int r = 1; r <= d; ++r) rs.push_back(r);
      for (int r : rs) {
        if (r > d) continue;
        double previous = std::numeric_limits<double>::infinity();
        for (int n : cfg.n_grid) {
          const int needed = theorem_threshold(kind, d);
          if (n < needed && cfg.skip_below_threshold) continue;
          const SteinBoundReport b = wasserstein_bound(kind, d, r, n, cfg.override_thresholds);
          const double ratio = b.bound / b.rate;
          const bool finite = std::isfinite(b.bound) && b.bound > 0;
          const bool decreasing = b.bound < previous;
          previous = b.bound;
          ojson cell;
          cell["type"] = "bound";
          cell["group"] = group_tag(kind);
          cell["d"] = d;
          cell["r"] = r;
          cell["n"] = n;
          cell["ER2"] = b.ER2;
          cell["ES2"] = b.ES2;
          if (b.ET2) cell["ET2"] = *b.ET2;
          cell["bound"] = b.bound;
          cell["rate"] = b.rate;
          cell["bound_over_rate"] = ratio;
          cell["d_over_n"] = static_cast<double>(d) / n;
          if (r == 1) cell["bound_over_sqrt_d"] = b.bound / std::sqrt(static_cast<double>(d));
          cell["thresholds_ok"] = b.thresholds_ok;
          cell["decreasing_in_n"] = decreasing;
          cell["tolerance"] = cfg.ratio_envelope;
          cell["pass"] = finite && decreasing && ratio <= cfg.ratio_envelope;
          report.cells.push_back(std::move(cell));
        }
      }
    }
  }
  report.notes.push_back("pass: bound finite, positive, strictly decreasing in n, and bound/rate <= ratio_envelope");
  report.wall_clock_seconds = elapsed(start);
  return report;
}

// --------------------------------------------------------------------------
// clt

std::pair<double, double> ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  if (m < 2 || y.size() != m) throw DomainError("ols_slope needs at least two paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw DomainError("ols_slope: x values are all equal");
  const double slope = sxy / sxx;
  if (m == 2) return {slope, 0.0};
  double rss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - my - slope * (x[i] - mx);
    rss += e * e;
  }
  return {slope, std::sqrt(rss / static_cast<double>(m - 2) / sxx)};
}

namespace {

struct CltChunk {
  Eigen::MatrixXd coords;
  std::vector<RunningStats> stats;
};

}  // namespace

StudyReport run_clt_study(const StudyConfig& cfg) {
  if (!cfg.seed) throw ConfigError("seed", "stochastic studies need an explicit seed");
  if (cfg.wasserstein && cfg.samples > kAssignmentCap)
    throw DomainError("exact assignment capped at N = " + std::to_string(kAssignmentCap));
  const auto start = std::chrono::steady_clock::now();
  StudyReport report;
  report.study = StudyKind::Clt;
  report.config = cfg.to_json();
  const int d = cfg.d(), r = cfg.r();

  std::uint64_t block = 0;
  for (GroupKind kind : cfg.groups) {
    const bool complex = kind == GroupKind::Unitary;
    const int dim = complex ? 2 * r : r;
    const std::size_t rr = static_cast<std::size_t>(r);
    // per (j, k): Re/Im of W_j conj(W_k), then Re/Im of W_j W_k (unitary only)
    const std::size_t width = (complex ? 4 : 2) * rr * rr;
    std::vector<double> log_n, log_w;
    std::vector<double> w1_values;

    for (int n : cfg.n_grid) {
      std::function<CltChunk(Rng&, long long)> body = [&](Rng& rng, long long count) {
        CltChunk out;
        out.coords.resize(cfg.wasserstein ? count : 0, dim);
        out.stats.resize(width);
        for (long long s = 0; s < count; ++s) {
          const TraceVector w = trace_vector(haar_sample(kind, n, rng), d, r, true);
          if (cfg.wasserstein) out.coords.row(s) = w.coordinates().transpose();
          for (std::size_t a = 0; a < rr; ++a)
            for (std::size_t b = 0; b < rr; ++b) {
              const std::size_t idx = a * rr + b;
              const cd wa = w.values(static_cast<Eigen::Index>(a)), wb = w.values(static_cast<Eigen::Index>(b));
              const cd herm = wa * std::conj(wb);
              out.stats[2 * idx].add(herm.real());
              out.stats[2 * idx + 1].add(herm.imag());
              if (complex) {
                const cd sym = wa * wb;
                out.stats[2 * rr * rr + 2 * idx].add(sym.real());
                out.stats[2 * rr * rr + 2 * idx + 1].add(sym.imag());
              }
            }
        }
        return out;
      };
      const std::uint64_t this_block = block++;
      const auto chunks = run_chunks(*cfg.seed, stream_base(this_block), cfg.samples, cfg.workers, body);

      if (cfg.covariance) {
        std::vector<RunningStats> merged(width);
        for (const auto& c : chunks)
          for (std::size_t i = 0; i < width; ++i) merged[i].merge(c.stats[i]);
        const int first = d - r + 1;
        auto emit = [&](const char* type, std::size_t offset, bool conjugated) {
          for (std::size_t a = 0; a < rr; ++a)
            for (std::size_t b = 0; b < rr; ++b) {
              const int j = first + static_cast<int>(a), k = first + static_cast<int>(b);
              PowerSumPolynomial fj = centered_power_sum(kind, j), fk = centered_power_sum(kind, k);
              if (conjugated) fk = conjugate(fk);
              const auto exact = haar_expectation(fj * fk);
              const double target = exact.at(n).value.convert_to<double>();
              const auto& re = merged[offset + 2 * (a * rr + b)];
              const auto& im = merged[offset + 2 * (a * rr + b) + 1];
              double tol_re = 0, tol_im = 0;
              const bool ok_re = within_gate(re.mean, re.standard_error(), target, &tol_re);
              const bool ok_im = within_gate(im.mean, im.standard_error(), 0.0, &tol_im);
              ojson cell;
              cell["type"] = type;
              cell["group"] = group_tag(kind);
              cell["n"] = n;
              cell["j"] = j;
              cell["k"] = k;
              cell["samples"] = cfg.samples;
              cell["exact"] = target;
              cell["estimate_re"] = re.mean;
              cell["se_re"] = re.standard_error();
              cell["tolerance_re"] = tol_re;
              cell["estimate_im"] = im.mean;
              cell["se_im"] = im.standard_error();
              cell["tolerance_im"] = tol_im;
              cell["pass"] = ok_re && ok_im;
              report.cells.push_back(std::move(cell));
            }
        };
        emit("covariance", 0, true);
        if (complex) emit("pseudo_covariance", 2 * rr * rr, false);
      }

      if (cfg.wasserstein) {
        EmpiricalCloud sample;
        sample.points.resize(cfg.samples, dim);
        Eigen::Index row = 0;
        for (const auto& c : chunks) {
          sample.points.middleRows(row, c.coords.rows()) = c.coords;
          row += c.coords.rows();
        }
        sample.info = {kind, d, r, n, *cfg.seed};
        Rng gauss_rng = make_rng(*cfg.seed, stream_base(this_block) + kReferenceStream);
        const EmpiricalCloud reference = gaussian_reference(kind, d, r, static_cast<int>(cfg.samples), gauss_rng);
        const WassersteinEstimate w = w1_exact(sample, reference);
        w1_values.push_back(w.value);
        log_n.push_back(std::log(static_cast<double>(n)));
        log_w.push_back(std::log(std::max(w.value, std::numeric_limits<double>::min())));
        ojson cell;
        cell["type"] = "w1";
        cell["group"] = group_tag(kind);
        cell["n"] = n;
        cell["d"] = d;
        cell["r"] = r;
        cell["samples"] = cfg.samples;
        cell["dimension"] = dim;
        cell["method"] = to_string(w.method);
        cell["w1"] = w.value;
        report.cells.push_back(std::move(cell));
      }
    }

    if (cfg.wasserstein && w1_values.size() >= 2) {
      bool decreasing = true;
      for (std::size_t i = 1; i < w1_values.size(); ++i) decreasing = decreasing && w1_values[i] < w1_values[i - 1];
      const auto [slope, slope_se] = ols_slope(log_n, log_w);
      ojson cell;
      cell["type"] = "decay";
      cell["group"] = group_tag(kind);
      cell["d"] = d;
      cell["r"] = r;
      cell["samples"] = cfg.samples;
      cell["strictly_decreasing"] = decreasing;
      cell["slope"] = slope;
      cell["slope_se"] = slope_se;
      cell["tolerance"] = cfg.max_slope;
      cell["pass"] = decreasing && slope <= cfg.max_slope;
      report.cells.push_back(std::move(cell));
    }
  }
  report.notes.push_back(
      "qualitative study: the empirical W1 estimate has a bias floor of order N^(-1/k) in dimension k, so only "
      "decay in n is assessed, never the constants of the bound");
  report.wall_clock_seconds = elapsed(start);
  return report;
}

StudyReport run_study(const StudyConfig& cfg) {
  switch (cfg.study) {
    case StudyKind::Moments: return run_moment_study(cfg);
    case StudyKind::Generator: return run_generator_study(cfg);
    case StudyKind::Bounds: return run_bound_table(cfg);
    case StudyKind::Clt: return run_clt_study(cfg);
  }
  throw ConfigError("study", "unknown study");
}

}  // namespace cltrace
