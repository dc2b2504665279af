#include "cltrace/transport.hpp"

#include "cltrace/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cltrace {

Eigen::VectorXd realify(const Eigen::VectorXcd& z) {
  Eigen::VectorXd out(2 * z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out(2 * i) = z(i).real();
    out(2 * i + 1) = z(i).imag();
  }
  return out;
}

Eigen::MatrixXd realify(const Eigen::MatrixXcd& a) {
  Eigen::MatrixXd out(2 * a.rows(), 2 * a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double re = a(i, j).real(), im = a(i, j).imag();
      out(2 * i, 2 * j) = re;
      out(2 * i, 2 * j + 1) = -im;
      out(2 * i + 1, 2 * j) = im;
      out(2 * i + 1, 2 * j + 1) = re;
    }
  return out;
}

Eigen::MatrixXd realified_conjugation(int d) {
  Eigen::VectorXd diag(2 * d);
  for (int i = 0; i < d; ++i) {
    diag(2 * i) = 1.0;
    diag(2 * i + 1) = -1.0;
  }
  return diag.asDiagonal();
}

EmpiricalCloud gaussian_reference(GroupKind kind, int d, int r, int count, Rng& rng) {
  if (r < 1 || r > d) throw DomainError("gaussian_reference: need 1 <= r <= d");
  if (count < 1) throw DomainError("gaussian_reference: count must be positive");
  const bool complex = kind == GroupKind::Unitary;
  const int dim = complex ? 2 * r : r;
  EmpiricalCloud out;
  out.info = {kind, d, r, 0, 0};
  out.points.resize(count, dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double half = std::sqrt(0.5);
  for (int s = 0; s < count; ++s) {
    for (int i = 0; i < r; ++i) {
      const double scale = std::sqrt(static_cast<double>(d - r + 1 + i));
      if (complex) {
        const double re = normal(rng) * half;
        const double im = normal(rng) * half;
        out.points(s, 2 * i) = scale * re;
        out.points(s, 2 * i + 1) = scale * im;
      } else {
        out.points(s, i) = scale * normal(rng);
      }
    }
  }
  return out;
}

std::string to_string(W1Method method) {
  switch (method) {
    case W1Method::AssignmentExact: return "assignment_exact";
    case W1Method::OneDimensional: return "one_dimensional";
    case W1Method::Sliced: return "sliced";
  }
  return "?";
}

namespace {

void check_pair(const EmpiricalCloud& x, const EmpiricalCloud& y) {
  if (x.size() != y.size()) throw DomainError("clouds have different sizes");
  if (x.dimension() != y.dimension()) throw DomainError("clouds have different dimensions");
  if (x.size() == 0) throw DomainError("empty cloud");
  if (!x.points.allFinite() || !y.points.allFinite()) throw DomainError("cloud has non-finite entries");
}

double sorted_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Hungarian method with potentials, rows added one at a time (1-based inside).
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DomainError("assignment needs a square cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  // row-major copy: the inner loop walks a row
  std::vector<double> c(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c[static_cast<std::size_t>(i) * n + j] = cost(i, j);
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      const double ui0 = u[i0];
      const double* row = c.data() + static_cast<std::size_t>(i0 - 1) * n - 1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j] - ui0 - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

WassersteinEstimate w1_exact(const EmpiricalCloud& x, const EmpiricalCloud& y, int cap) {
  check_pair(x, y);
  const Eigen::Index n = x.size();
  if (n > cap) {
    throw DomainError("exact assignment capped at N = " + std::to_string(cap) + ", got " + std::to_string(n));
  }
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) cost(i, j) = (x.points.row(i) - y.points.row(j)).norm();
  const std::vector<int> match = solve_assignment(cost);
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) total += (x.points.row(i) - y.points.row(match[static_cast<std::size_t>(i)])).norm();
  return {total / static_cast<double>(n), W1Method::AssignmentExact, 0, 0};
}

WassersteinEstimate w1_1d(const EmpiricalCloud& x, const EmpiricalCloud& y) {
  check_pair(x, y);
  if (x.dimension() != 1) throw DomainError("w1_1d needs one-dimensional clouds");
  std::vector<double> a(x.points.data(), x.points.data() + x.size());
  std::vector<double> b(y.points.data(), y.points.data() + y.size());
  return {sorted_distance(std::move(a), std::move(b)), W1Method::OneDimensional, 0, 0};
}

WassersteinEstimate w1_sliced(const EmpiricalCloud& x, const EmpiricalCloud& y, int projections, Rng& rng) {
  check_pair(x, y);
  if (projections < 1) throw DomainError("w1_sliced needs at least one projection");
  std::normal_distribution<double> normal(0.0, 1.0);
  double total = 0;
  for (int p = 0; p < projections; ++p) {
    Eigen::VectorXd dir(x.dimension());
    do {
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = normal(rng);
    } while (dir.norm() == 0.0);
    dir.normalize();
    const Eigen::VectorXd px = x.points * dir, py = y.points * dir;
    total += sorted_distance({px.data(), px.data() + px.size()}, {py.data(), py.data() + py.size()});
  }
  return {total / projections, W1Method::Sliced, projections, 0};
}

}  // namespace cltrace
