#pragma once

// Closed-form references shared by the unit and acceptance tests.

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <random>

#include "optitomo/fem.hpp"
#include "optitomo/field.hpp"
#include "optitomo/mesh.hpp"
#include "optitomo/ntd.hpp"

namespace oracle {

inline double bessel_i(int n, double x) { return boost::math::cyl_bessel_i(n, x); }
inline double bessel_i_prime(int n, double x) { return boost::math::cyl_bessel_i_prime(n, x); }

/// sigma = q = 1 on the unit disk with current cos(n theta): u = I_n(r) cos(n theta) / I_n'(1),
/// so the boundary trace is (I_n(1) / I_n'(1)) cos(n theta).
inline double trace_amplitude(int n) { return bessel_i(n, 1.0) / bessel_i_prime(n, 1.0); }

/// M-weighted L2 error of the discrete Neumann trace for current cos(n theta)
/// against the Bessel solution.
inline double bessel_trace_error(const optitomo::MeshPtr& mesh, int n) {
  using namespace optitomo;
  const auto one = PiecewiseConstantField::constant(mesh, 1.0);
  const AssembledSystem sys = assemble(mesh, one, one);
  const BoundaryTrace g = sample_boundary(mesh, parse_boundary(n == 0 ? "const:1" : "cos:" + std::to_string(n)));
  const BoundaryTrace trace = restrict_to_boundary(solve_neumann(sys, g));
  const double amp = trace_amplitude(n);
  Eigen::VectorXd err = trace.values;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    err[i] -= amp * std::cos(n * mesh->boundary_angle(static_cast<std::size_t>(i)));
  }
  return std::sqrt(boundary_inner(err, err, boundary_mass_matrix(*mesh)));
}

/// <g, Lambda g>_M via one Neumann solve.
inline double ntd_form(const optitomo::PiecewiseConstantField& sigma, const optitomo::PiecewiseConstantField& q,
                       const optitomo::BoundaryTrace& g) {
  using namespace optitomo;
  const AssembledSystem sys = assemble(sigma.mesh, sigma, q);
  const BoundaryTrace u = restrict_to_boundary(solve_neumann(sys, g));
  return boundary_inner(g, u, boundary_mass_matrix(*sigma.mesh));
}

/// Best relative error between `analytic` and the central difference of `fn`
/// over the given steps.
inline double best_central_difference_error(const std::function<double(double)>& fn, double analytic,
                                            std::initializer_list<double> steps = {1e-2, 1e-3, 1e-4}) {
  double best = std::numeric_limits<double>::infinity();
  for (double t : steps) {
    const double fd = (fn(t) - fn(-t)) / (2.0 * t);
    best = std::min(best, std::abs(fd - analytic) / std::max(std::abs(analytic), 1e-300));
  }
  return best;
}

/// Element field with values uniform in [lo, hi].
inline optitomo::PiecewiseConstantField random_field(const optitomo::MeshPtr& mesh, double lo, double hi,
                                                     std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh->num_elements()));
  for (auto& x : v) x = u(rng);
  return {mesh, v};
}

inline optitomo::BoundaryTrace random_trace(const optitomo::MeshPtr& mesh, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh->num_boundary_nodes()));
  for (auto& x : v) x = n(rng);
  return {mesh, v};
}

}  // namespace oracle
