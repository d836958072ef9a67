#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "optitomo/errors.hpp"
#include "optitomo/fem.hpp"
#include "optitomo/ntd.hpp"
#include "support/oracles.hpp"

using namespace optitomo;

namespace {

MeshPtr small_mesh() { return generate_disk_mesh(254); }

AssembledSystem unit_system(const MeshPtr& mesh) {
  const auto one = PiecewiseConstantField::constant(mesh, 1.0);
  return assemble(mesh, one, one);
}

}  // namespace

TEST_CASE("stiffness rows vanish on constants, so A(1,1) rows sum to mass rows") {
  const auto mesh = small_mesh();
  const auto sys = unit_system(mesh);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(mesh->num_nodes()));
  const Eigen::VectorXd row_sums = sys.matrix() * ones;
  // Mass row sums of P1 elements: one third of the adjacent element areas.
  Eigen::VectorXd mass_sums = Eigen::VectorXd::Zero(row_sums.size());
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    for (int v : mesh->elements()[e]) mass_sums[v] += mesh->area(e) / 3.0;
  }
  CHECK((row_sums - mass_sums).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(row_sums.sum() == doctest::Approx(mesh->total_area()).epsilon(1e-13));
}

TEST_CASE("assembled matrix is symmetric positive definite") {
  const auto mesh = small_mesh();
  std::mt19937_64 rng(7);
  const auto sys = assemble(mesh, oracle::random_field(mesh, 1, 3, rng), oracle::random_field(mesh, 0.5, 2, rng));
  const Eigen::MatrixXd a = Eigen::MatrixXd(sys.matrix());
  const double norm = a.cwiseAbs().maxCoeff();
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * norm);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(unit_system(mesh).matrix().toDense(), Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues()[0] > 0.0);
}

TEST_CASE("assembly rejects non-positive sigma and identically zero q") {
  const auto mesh = small_mesh();
  const auto one = PiecewiseConstantField::constant(mesh, 1.0);
  const auto zero = PiecewiseConstantField::constant(mesh, 0.0);
  CHECK_THROWS_AS(assemble(mesh, zero, one), InvalidInput);
  CHECK_THROWS_AS(assemble(mesh, one, zero), InvalidInput);
  auto negative = one;
  negative.values[3] = -1.0;
  CHECK_THROWS_AS(assemble(mesh, one, negative), InvalidInput);
}

TEST_CASE("Neumann solve: zero data, energy identity and coercivity") {
  const auto mesh = generate_disk_mesh(1016);
  std::mt19937_64 rng(11);
  const auto sys = assemble(mesh, oracle::random_field(mesh, 1, 2, rng), oracle::random_field(mesh, 1, 3, rng));
  CHECK(solve_neumann(sys, BoundaryTrace::zero(mesh)).values.cwiseAbs().maxCoeff() == 0.0);
  const auto g = sample_boundary(mesh, parse_boundary("sin:1"));
  const auto u = solve_neumann(sys, g);
  const double e = energy(sys, u.values);
  const double work = boundary_inner(g, restrict_to_boundary(u), boundary_mass_matrix(*mesh));
  CHECK(work > 0.0);
  CHECK(std::abs(e - work) <= 1e-10 * e);
  CHECK((sys.matrix() * u.values - sys.boundary_load(g)).norm() <= 1e-10 * sys.boundary_load(g).norm());
}

TEST_CASE("Neumann solve with g = 1 matches the radial Bessel solution") {
  const auto mesh = generate_disk_mesh(4064);
  const auto u = solve_neumann(unit_system(mesh), sample_boundary(mesh, parse_boundary("const:1")));
  const double exact = oracle::bessel_i(0, 1.0) / oracle::bessel_i(1, 1.0);
  CHECK(exact == doctest::Approx(2.2402).epsilon(1e-4));
  const auto trace = restrict_to_boundary(u);
  CHECK((trace.values.array() - exact).abs().maxCoeff() <= 5e-3);
}

TEST_CASE("Dirichlet solve with f = cos theta matches I1(r)/I1(1) cos theta") {
  const auto mesh = generate_disk_mesh(4064);
  const auto sys = unit_system(mesh);
  CHECK(solve_dirichlet(sys, BoundaryTrace::zero(mesh)).values.cwiseAbs().maxCoeff() == 0.0);
  const auto u = solve_dirichlet(sys, sample_boundary(mesh, parse_boundary("cos:1")));
  double worst = 0.0;
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) {
    const Point2 p = mesh->nodes()[i];
    const double r = std::hypot(p.x, p.y);
    const double exact = r == 0.0 ? 0.0 : oracle::bessel_i(1, r) / oracle::bessel_i(1, 1.0) * p.x / r;
    worst = std::max(worst, std::abs(u.values[static_cast<Eigen::Index>(i)] - exact));
  }
  CHECK(oracle::bessel_i(1, 0.5) / oracle::bessel_i(1, 1.0) == doctest::Approx(0.4563).epsilon(1e-3));
  CHECK(worst <= 2e-3);
}

TEST_CASE("Dirichlet solve reproduces the Neumann solution from its own trace") {
  const auto mesh = generate_disk_mesh(1016);
  std::mt19937_64 rng(3);
  const auto sys = assemble(mesh, oracle::random_field(mesh, 1, 2, rng), oracle::random_field(mesh, 1, 2, rng));
  const auto u = solve_neumann(sys, oracle::random_trace(mesh, rng));
  const auto v = solve_dirichlet(sys, restrict_to_boundary(u));
  CHECK((u.values - v.values).cwiseAbs().maxCoeff() <= 1e-10 * u.values.cwiseAbs().maxCoeff());
}

TEST_CASE("interior source solves are adjoint to Neumann solves restricted to omega") {
  const auto mesh = generate_disk_mesh(1016);
  const Partition part = subdomain_partition(*mesh, 0.5, 4);
  std::mt19937_64 rng(5);
  const auto sys = assemble(mesh, oracle::random_field(mesh, 1, 2, rng), oracle::random_field(mesh, 1, 2, rng));
  CHECK(solve_source(sys, PiecewiseConstantField::constant(mesh, 0.0)).values.cwiseAbs().maxCoeff() == 0.0);

  PiecewiseConstantField f = oracle::random_field(mesh, -1, 1, rng);
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    if (!part.in_omega(e)) f.values[static_cast<Eigen::Index>(e)] = 0.0;
  }
  const auto g = oracle::random_trace(mesh, rng);
  const auto v = solve_source(sys, f, part, {1, 2, 3, 4});
  const double lhs = boundary_inner(restrict_to_boundary(v), g, boundary_mass_matrix(*mesh));
  const auto u = solve_neumann(sys, g);
  const Eigen::VectorXd means = element_means(*mesh, u.values);
  double rhs = 0.0;
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    const auto i = static_cast<Eigen::Index>(e);
    rhs += f.values[i] * means[i] * mesh->area(e);
  }
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
}

TEST_CASE("a source on omega peaks inside omega") {
  const auto mesh = generate_disk_mesh(1016);
  const Partition part = subdomain_partition(*mesh, 0.5, 1);
  const auto v = solve_source(unit_system(mesh), PiecewiseConstantField::constant(mesh, 1.0), part, {1});
  double inside = 0.0, boundary = 0.0;
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) {
    const Point2 p = mesh->nodes()[i];
    if (std::hypot(p.x, p.y) < 0.5) inside = std::max(inside, v.values[static_cast<Eigen::Index>(i)]);
  }
  boundary = restrict_to_boundary(v).values.maxCoeff();
  CHECK(inside > boundary);
  CHECK(boundary > 0.0);
}

TEST_CASE("element gradients reproduce linear functions and the energy") {
  const auto mesh = generate_disk_mesh(254);
  for (const auto& grad : element_gradients(sample_nodal(mesh, [](Point2 p) { return p.x; }))) {
    CHECK(std::abs(grad.x() - 1.0) <= 1e-12);
    CHECK(std::abs(grad.y()) <= 1e-12);
  }
  for (const auto& grad : element_gradients(sample_nodal(mesh, [](Point2) { return 4.0; }))) {
    CHECK(grad.norm() <= 1e-12);
  }
  std::mt19937_64 rng(9);
  const auto sigma = oracle::random_field(mesh, 1, 2, rng);
  const auto q = oracle::random_field(mesh, 1, 2, rng);
  const auto sys = assemble(mesh, sigma, q);
  const auto u = solve_neumann(sys, oracle::random_trace(mesh, rng));
  const auto grads = element_gradients(u);
  const Eigen::VectorXd mass = element_mass_squares(*mesh, u.values);
  double total = 0.0;
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    const auto i = static_cast<Eigen::Index>(e);
    total += mesh->area(e) * sigma.values[i] * grads[e].squaredNorm() + q.values[i] * mass[i];
  }
  CHECK(std::abs(total - energy(sys, u.values)) <= 1e-12 * total);
}

TEST_CASE("boundary traces converge at second order against the Bessel oracle") {
  const auto m0 = generate_disk_mesh(254);
  const auto m1 = refine_uniform(*m0);
  const auto m2 = refine_uniform(*m1);
  for (int n = 0; n <= 2; ++n) {
    CAPTURE(n);
    const double e0 = oracle::bessel_trace_error(m0, n);
    const double e1 = oracle::bessel_trace_error(m1, n);
    const double e2 = oracle::bessel_trace_error(m2, n);
    CHECK(e0 / e1 >= 3.0);
    CHECK(e0 / e1 <= 5.0);
    CHECK(e1 / e2 >= 3.0);
    CHECK(e1 / e2 <= 5.0);
  }
}
