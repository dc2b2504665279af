// cltrace: command-line front end.
//
// Exit codes: 0 success, 1 domain error, 2 usage or configuration error,
// 3 a study or diagnostic gate failed.

#include "cltrace/errors.hpp"
#include "cltrace/experiments.hpp"
#include "cltrace/groups.hpp"
#include "cltrace/psalgebra.hpp"
#include "cltrace/stein.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace cltrace;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;
constexpr int kGateFailed = 3;

GroupKind group_or_usage(const std::string& text) {
  try {
    return parse_group_kind(text);
  } catch (const DomainError& e) {
    throw CLI::ValidationError("--group", e.what());
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output", "cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ConfigError("output", "failed writing '" + path + "'");
}

int cmd_laplacian(const std::string& group, const std::string& monomial) {
  const GroupKind kind = group_or_usage(group);
  const PowerSumPolynomial f = parse_polynomial(monomial, kind);
  std::cout << to_string(laplacian(f)) << '\n';
  return kOk;
}

int cmd_expect(const std::string& group, const std::string& poly, std::optional<int> n, bool force) {
  const GroupKind kind = group_or_usage(group);
  const ExpectationResult e = haar_expectation(parse_polynomial(poly, kind));
  if (!n) {
    std::cout << e.value.to_string() << " (valid for n >= " << e.validity_threshold << ")\n";
    return kOk;
  }
  const auto v = e.at(*n, force);
  std::cout << rational_to_string(v.value) << " (n = " << *n << ", valid for n >= " << e.validity_threshold << ")";
  if (!v.guaranteed) std::cout << " not guaranteed exact";
  std::cout << std::endl;
  if (!v.guaranteed) {
    std::cerr << "warning: n = " << *n << " is below the validity threshold " << e.validity_threshold
              << "; the formula value is not guaranteed to equal the Haar moment\n";
  }
  return kOk;
}

int cmd_sample(const std::string& group, int n, int count, std::uint64_t seed, int d, const std::string& out_path) {
  const GroupKind kind = group_or_usage(group);
  if (count < 1) throw CLI::ValidationError("--count", "must be positive");
  if (d < 1) throw CLI::ValidationError("--d", "must be positive");
  Rng rng = make_rng(seed, 0);
  std::vector<GroupElement> samples;
  double worst = 0;
  std::size_t failed = 0;
  for (int i = 0; i < count; ++i) {
    samples.push_back(haar_sample(kind, n, rng));
    const Diagnostics diag = group_diagnostics(samples.back());
    worst = std::max({worst, diag.unitarity, diag.determinant, diag.symplectic, diag.realness});
    failed += !diag.passed();
  }
  std::ostringstream csv;
  write_sample_csv(csv, samples, d);
  std::ostringstream summary;
  summary << "command=sample group=" << short_name(kind) << " n=" << n << " count=" << count << " seed=" << seed
          << " max_defect=" << worst << " diagnostics=" << (failed == 0 ? "pass" : "fail") << '\n';
  if (out_path.empty()) {
    std::cout << csv.str();
    std::cerr << summary.str();
  } else {
    write_file(out_path, csv.str());
    std::cout << summary.str();
  }
  return failed == 0 ? kOk : kGateFailed;
}

int cmd_bound(const std::string& group, int d, int r, int n, bool override_thresholds, const std::string& format,
              const std::string& out_path) {
  const GroupKind kind = group_or_usage(group);
  const SteinBoundReport b = wasserstein_bound(kind, d, r, n, override_thresholds);
  std::ostringstream body;
  if (format == "csv") {
    write_bound_csv_header(body);
    write_bound_csv_row(body, b);
  } else {
    body << b.to_json().dump(2) << '\n';
  }
  if (out_path.empty()) {
    std::cout << body.str();
  } else {
    write_file(out_path, body.str());
    std::ostringstream line;
    line.precision(12);
    line << "command=bound group=" << short_name(kind) << " d=" << d << " r=" << r << " n=" << n
         << " bound=" << b.bound << " rate=" << b.rate << " thresholds_ok=" << (b.thresholds_ok ? "true" : "false");
    std::cout << line.str() << '\n';
  }
  return kOk;
}

int cmd_study(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> workers,
              const std::string& out_csv, const std::string& out_json) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("--config", "cannot open '" + config_path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("(file)", std::string("invalid JSON: ") + e.what());
  }
  if (seed) doc["seed"] = *seed;
  if (workers) doc["workers"] = *workers;
  StudyConfig cfg = StudyConfig::from_json(doc);
  if (!out_csv.empty()) cfg.csv_path = out_csv;
  if (!out_json.empty()) cfg.json_path = out_json;
  if (cfg.study != StudyKind::Bounds && !cfg.seed) throw ConfigError("seed", "stochastic studies need --seed or a seed field");

  const StudyReport report = run_study(cfg);
  std::ostringstream csv;
  report.write_csv(csv);
  if (!cfg.json_path.empty()) write_file(cfg.json_path, report.to_json().dump(2) + "\n");
  std::ostream& summary = cfg.csv_path.empty() ? std::cerr : std::cout;
  if (cfg.csv_path.empty()) {
    std::cout << csv.str();
  } else {
    write_file(cfg.csv_path, csv.str());
  }
  for (const auto& line : report.summary_lines()) summary << line << '\n';
  return report.all_pass() ? kOk : kGateFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-sum algebra, Haar moments, Stein bounds and CLT studies on U(n), SO(n) and USp(2n)"};
  app.require_subcommand(1);

  std::string group, monomial, poly, config, out, out_json, format = "json";
  int n = 0, d = 1, r = 1, count = 1;
  std::uint64_t seed = 0;
  bool force = false, override_thresholds = false;

  auto* lap = app.add_subcommand("laplacian", "Laplacian of a power-sum polynomial");
  lap->add_option("--group", group, "u, so or sp")->required();
  lap->add_option("--monomial", monomial, "e.g. p2, p1*~p1, p[1,2]")->required();

  auto* exp = app.add_subcommand("expect", "Exact Haar expectation");
  exp->add_option("--group", group, "u, so or sp")->required();
  exp->add_option("--poly", poly, "e.g. \"p2*~p2 - 1\"")->required();
  auto* exp_n = exp->add_option("--n", n, "evaluate at this rank");
  exp->add_flag("--force", force, "evaluate below the validity threshold");

  auto* smp = app.add_subcommand("sample", "Haar samples as CSV with diagnostics");
  smp->add_option("--group", group, "u, so or sp")->required();
  smp->add_option("--n", n, "rank")->required()->check(CLI::PositiveNumber);
  smp->add_option("--count", count, "number of samples")->required();
  smp->add_option("--seed", seed, "master seed")->required();
  smp->add_option("--d", d, "largest trace power written")->capture_default_str();
  smp->add_option("--out", out, "CSV path (default stdout)");

  auto* bnd = app.add_subcommand("bound", "Wasserstein bound for the trace vector");
  bnd->add_option("--group", group, "u, so or sp")->required();
  bnd->add_option("--d", d, "largest power")->required()->check(CLI::PositiveNumber);
  bnd->add_option("--r", r, "vector length")->required()->check(CLI::PositiveNumber);
  bnd->add_option("--n", n, "rank")->required()->check(CLI::PositiveNumber);
  bnd->add_flag("--override", override_thresholds, "evaluate below the theorem threshold");
  bnd->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  bnd->add_option("--out", out, "output path (default stdout)");

  std::uint64_t study_seed = 0;
  int workers = 1;
  auto* std_cmd = app.add_subcommand("study", "Run a study from a JSON config");
  std_cmd->add_option("--config", config, "study config")->required();
  auto* seed_opt = std_cmd->add_option("--seed", study_seed, "master seed (overrides the config)");
  auto* workers_opt = std_cmd->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  std_cmd->add_option("--out", out, "CSV path (default stdout, summary then goes to stderr)");
  std_cmd->add_option("--json", out_json, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (lap->parsed()) return cmd_laplacian(group, monomial);
    if (exp->parsed()) return cmd_expect(group, poly, exp_n->count() ? std::optional<int>(n) : std::nullopt, force);
    if (smp->parsed()) return cmd_sample(group, n, count, seed, d, out);
    if (bnd->parsed()) return cmd_bound(group, d, r, n, override_thresholds, format, out);
    if (std_cmd->parsed()) {
      return cmd_study(config, seed_opt->count() ? std::optional<std::uint64_t>(study_seed) : std::nullopt,
                       workers_opt->count() ? std::optional<int>(workers) : std::nullopt, out, out_json);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UnsupportedShape& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  }
  return kUsage;
}
