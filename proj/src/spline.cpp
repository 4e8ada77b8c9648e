#include "bkan/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bkan {

namespace {

constexpr int kStackCells = 64;

int clamp_cell(const KnotVector& kv, double x) {
  // Index of the degree-0 cell containing x, restricted to the interior
  // cells [k, G+k-1]. x is already clamped to the domain; the knot
  // comparisons below repair any floor() rounding at cell edges.
  const int k = kv.degree;
  const int last = kv.grid_size + k - 1;
  int c = k + static_cast<int>(std::floor((x - kv.domain_min) / kv.step()));
  c = std::clamp(c, k, last);
  if (x < kv.knots[static_cast<std::size_t>(c)] && c > k) --c;
  if (x >= kv.knots[static_cast<std::size_t>(c) + 1] && c < last) ++c;
  return c;
}

// Runs the Cox–de Boor triangle up to `max_degree` over the full extended
// cell range and leaves the level-`max_degree` values in work[0..n_cells).
void cox_de_boor(const KnotVector& kv, double x, int max_degree,
                 std::span<double> work) {
  const auto& t = kv.knots;
  const int n_cells = kv.grid_size + 2 * kv.degree;
  std::fill(work.begin(), work.begin() + n_cells, 0.0);
  work[static_cast<std::size_t>(clamp_cell(kv, x))] = 1.0;
  for (int d = 1; d <= max_degree; ++d) {
    for (int c = 0; c + d < n_cells; ++c) {
      const double left = (x - t[c]) / (t[c + d] - t[c]) * work[c];
      const double right =
          (t[c + d + 1] - x) / (t[c + d + 1] - t[c + 1]) * work[c + 1];
      work[static_cast<std::size_t>(c)] = left + right;
    }
    work[static_cast<std::size_t>(n_cells - d)] = 0.0;
  }
}

}  // namespace

KnotVector build_knots(double domain_min, double domain_max, int grid_size,
                       int degree) {
  if (!std::isfinite(domain_min) || !std::isfinite(domain_max))
    throw std::invalid_argument("build_knots: non-finite domain bound");
  if (!(domain_min < domain_max))
    throw std::invalid_argument("build_knots: domain_min must be < domain_max");
  if (grid_size < 1)
    throw std::invalid_argument("build_knots: grid_size must be >= 1");
  if (degree < 0)
    throw std::invalid_argument("build_knots: degree must be >= 0");

  KnotVector kv;
  kv.domain_min = domain_min;
  kv.domain_max = domain_max;
  kv.grid_size = grid_size;
  kv.degree = degree;
  const double h = (domain_max - domain_min) / grid_size;
  kv.knots.resize(static_cast<std::size_t>(grid_size + 2 * degree) + 1);
  for (int i = 0; i < static_cast<int>(kv.knots.size()); ++i)
    kv.knots[static_cast<std::size_t>(i)] = domain_min + (i - degree) * h;
  // Pin the domain endpoints exactly; the loop above can round them.
  kv.knots[static_cast<std::size_t>(degree)] = domain_min;
  kv.knots[static_cast<std::size_t>(grid_size + degree)] = domain_max;
  return kv;
}

void basis_values(const KnotVector& kv, double x, std::span<double> out) {
  if (!std::isfinite(x))
    throw std::invalid_argument("basis_values: non-finite x");
  const int n_basis = kv.basis_count();
  if (static_cast<int>(out.size()) != n_basis)
    throw std::invalid_argument("basis_values: output size mismatch");
  const double xc = std::clamp(x, kv.domain_min, kv.domain_max);

  const int n_cells = kv.grid_size + 2 * kv.degree;
  double stack[kStackCells];
  std::vector<double> heap;
  std::span<double> work;
  if (n_cells <= kStackCells) {
    work = std::span<double>(stack, static_cast<std::size_t>(n_cells));
  } else {
    heap.resize(static_cast<std::size_t>(n_cells));
    work = heap;
  }
  cox_de_boor(kv, xc, kv.degree, work);
  std::copy(work.begin(), work.begin() + n_basis, out.begin());
}

void basis_derivatives(const KnotVector& kv, double x, std::span<double> out) {
  if (!std::isfinite(x))
    throw std::invalid_argument("basis_derivatives: non-finite x");
  const int n_basis = kv.basis_count();
  if (static_cast<int>(out.size()) != n_basis)
    throw std::invalid_argument("basis_derivatives: output size mismatch");

  const int k = kv.degree;
  if (k == 0 || x < kv.domain_min || x > kv.domain_max) {
    // Piecewise-constant basis, or the flat clamped region.
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }

  const int n_cells = kv.grid_size + 2 * k;
  double stack[kStackCells];
  std::vector<double> heap;
  std::span<double> work;
  if (n_cells <= kStackCells) {
    work = std::span<double>(stack, static_cast<std::size_t>(n_cells));
  } else {
    heap.resize(static_cast<std::size_t>(n_cells));
    work = heap;
  }
  cox_de_boor(kv, x, k - 1, work);

  // B'_{c,k} = k * (B_{c,k-1}/(t[c+k]-t[c]) - B_{c+1,k-1}/(t[c+k+1]-t[c+1]))
  const auto& t = kv.knots;
  for (int c = 0; c < n_basis; ++c) {
    const double left = work[static_cast<std::size_t>(c)] / (t[c + k] - t[c]);
    const double right =
        work[static_cast<std::size_t>(c) + 1] / (t[c + k + 1] - t[c + 1]);
    out[static_cast<std::size_t>(c)] = k * (left - right);
  }
}

std::vector<double> basis_values(const KnotVector& kv, double x) {
  std::vector<double> out(static_cast<std::size_t>(kv.basis_count()));
  basis_values(kv, x, out);
  return out;
}

std::vector<double> basis_derivatives(const KnotVector& kv, double x) {
  std::vector<double> out(static_cast<std::size_t>(kv.basis_count()));
  basis_derivatives(kv, x, out);
  return out;
}

}  // namespace bkan
