#pragma once

// Realification of complex data, Gaussian reference clouds and Wasserstein-1
// distances between equal-size empirical measures.

#include "cltrace/psalgebra.hpp"
#include "cltrace/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace cltrace {

/// z in C^d -> (Re z_1, Im z_1, ..., Re z_d, Im z_d).
Eigen::VectorXd realify(const Eigen::VectorXcd& z);
/// Entry a_jk -> 2x2 block [[Re a, -Im a], [Im a, Re a]].
Eigen::MatrixXd realify(const Eigen::MatrixXcd& a);
/// Conjugation in realified coordinates: diag(1, -1) on every (Re, Im) pair,
/// so that (conj z)_R = J z_R.
Eigen::MatrixXd realified_conjugation(int d);

struct CloudInfo {
  GroupKind kind = GroupKind::Unitary;
  int d = 0, r = 0, n = 0;
  std::uint64_t seed = 0;
};

/// N equally weighted points in R^k, one per row.
struct EmpiricalCloud {
  Eigen::MatrixXd points;
  CloudInfo info;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dimension() const { return points.cols(); }
};

/// Samples of Sigma^{1/2} Z with Sigma = diag(d-r+1, ..., d). For U, Z is
/// standard complex normal (Re, Im iid N(0, 1/2)) and the cloud lives in
/// R^{2r}; otherwise Z is real standard normal in R^r.
EmpiricalCloud gaussian_reference(GroupKind kind, int d, int r, int count, Rng& rng);

enum class W1Method { AssignmentExact, OneDimensional, Sliced };
std::string to_string(W1Method method);

struct WassersteinEstimate {
  double value = 0;
  W1Method method = W1Method::AssignmentExact;
  int projections = 0;
  std::uint64_t seed = 0;
};

inline constexpr int kAssignmentCap = 4096;

/// (1/N) min_pi sum |x_i - y_pi(i)|_2 by an O(N^3) shortest augmenting path
/// assignment solver. Throws DomainError on size or dimension mismatch or
/// when N exceeds `cap`.
WassersteinEstimate w1_exact(const EmpiricalCloud& x, const EmpiricalCloud& y, int cap = kAssignmentCap);

/// Sorted matching; requires dimension 1.
WassersteinEstimate w1_1d(const EmpiricalCloud& x, const EmpiricalCloud& y);

/// Average 1-D distance over random unit directions. A surrogate only.
WassersteinEstimate w1_sliced(const EmpiricalCloud& x, const EmpiricalCloud& y, int projections, Rng& rng);

/// Minimum-cost perfect matching for a square cost matrix: returns the
/// column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace cltrace
