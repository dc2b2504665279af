#pragma once

// Reproducible studies built on the other modules: Monte Carlo moments,
// Brownian generator checks, bound tables and empirical CLT convergence.

#include "cltrace/psalgebra.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cltrace {

enum class StudyKind { Moments, Generator, Bounds, Clt };

std::string to_string(StudyKind kind);

struct StudyConfig {
  StudyKind study = StudyKind::Moments;
  std::vector<GroupKind> groups{GroupKind::Unitary};
  std::vector<int> n_grid;
  std::vector<int> d_grid{1};
  std::vector<int> r_grid{1};  // empty: every r in 1..d (bounds only)
  long long samples = 0;
  std::vector<double> h_grid;
  std::optional<std::uint64_t> seed;
  int workers = 1;

  // moments and generator
  int max_weight = 0;
  std::vector<std::string> monomials;
  std::vector<int> powers{1, 2};

  // bounds
  bool override_thresholds = false;
  bool skip_below_threshold = false;
  double ratio_envelope = 10.0;

  // clt
  bool wasserstein = true;
  bool covariance = true;
  double max_slope = -0.5;

  std::string json_path;
  std::string csv_path;

  int d() const { return d_grid.front(); }
  int r() const { return r_grid.empty() ? d() : r_grid.front(); }

  /// Validates every field; throws ConfigError naming the first bad key.
  static StudyConfig from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;
};

/// Flat result cells plus metadata. Every Monte Carlo estimate carries its
/// standard error, every pass flag its tolerance.
struct StudyReport {
  StudyKind study = StudyKind::Moments;
  nlohmann::ordered_json config;
  std::vector<nlohmann::ordered_json> cells;
  std::vector<std::string> notes;
  double wall_clock_seconds = 0;

  std::size_t gated_cells() const;
  std::size_t failures() const;
  bool all_pass() const { return failures() == 0; }

  /// Includes the wall-clock time; everything else is deterministic.
  nlohmann::ordered_json to_json() const;
  /// Union of cell keys in first-seen order; no timing data.
  void write_csv(std::ostream& out) const;
  /// One "key=value ..." line per cell and a closing status line.
  std::vector<std::string> summary_lines() const;
};

StudyReport run_moment_study(const StudyConfig& cfg);
StudyReport run_generator_study(const StudyConfig& cfg);
StudyReport run_bound_table(const StudyConfig& cfg);
StudyReport run_clt_study(const StudyConfig& cfg);
StudyReport run_study(const StudyConfig& cfg);

/// Least-squares fit y = a + b x; returns {b, standard error of b}.
std::pair<double, double> ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cltrace
