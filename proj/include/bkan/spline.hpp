#pragma once

#include <span>
#include <vector>

namespace bkan {

// Uniform B-spline knot sequence over [domain_min, domain_max] with
// grid_size interior intervals, extended `degree` steps past each end
// (uniform continuation, no repeated endpoints). Carries basis_count()
// = grid_size + degree basis functions.
struct KnotVector {
  double domain_min = 0.0;
  double domain_max = 1.0;
  int grid_size = 1;  // G, number of interior intervals
  int degree = 0;     // k
  std::vector<double> knots;  // G + 2k + 1 values, uniformly spaced

  int basis_count() const { return grid_size + degree; }
  double step() const { return (domain_max - domain_min) / grid_size; }
};

// Throws std::invalid_argument on non-finite or inverted bounds, G < 1,
// or k < 0. knots[k] == domain_min and knots[G+k] == domain_max exactly.
KnotVector build_knots(double domain_min, double domain_max, int grid_size,
                       int degree);

// Cox–de Boor evaluation of all basis_count() functions at x. Inputs
// outside the domain are clamped to the nearer boundary first. `out`
// must have size basis_count(). Values are nonnegative, at most k+1 are
// nonzero, and they sum to 1 on the domain.
void basis_values(const KnotVector& kv, double x, std::span<double> out);

// dB_m/dx of the clamped evaluation: zero outside the domain, one-sided
// interior derivative exactly at the boundary. Degree 0 gives all zeros.
void basis_derivatives(const KnotVector& kv, double x, std::span<double> out);

std::vector<double> basis_values(const KnotVector& kv, double x);
std::vector<double> basis_derivatives(const KnotVector& kv, double x);

}  // namespace bkan
