#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

#include "optitomo/errors.hpp"
#include "optitomo/ntd.hpp"
#include "support/oracles.hpp"

using namespace optitomo;

namespace {

// Per-element values uniform in [lo, hi] inside |x| < 0.5, `outside` elsewhere.
PiecewiseConstantField omega_field(const MeshPtr& mesh, double lo, double hi, double outside, std::mt19937_64& rng) {
  auto f = oracle::random_field(mesh, lo, hi, rng);
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    const Point2 c = mesh->centroid(e);
    if (std::hypot(c.x, c.y) >= 0.5) f.values[static_cast<Eigen::Index>(e)] = outside;
  }
  return f;
}

}  // namespace

TEST_CASE("NtD operator is M-symmetric and M-positive") {
  const auto mesh = generate_disk_mesh(1016);
  const auto one = PiecewiseConstantField::constant(mesh, 1.0);
  const NtDMatrix ntd = build_ntd(mesh, one, one);
  const auto nb = static_cast<Eigen::Index>(mesh->num_boundary_nodes());
  CHECK(ntd.lambda.rows() == nb);
  CHECK(ntd.lambda.cols() == nb);
  CHECK(m_symmetry_defect(ntd) <= 1e-10);
  const Eigen::MatrixXd ml = ntd.mass * ntd.lambda;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (ml + ml.transpose()), Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues()[0] > 0.0);
}

TEST_CASE("NtD columns are the traces of hat-function currents") {
  const auto mesh = generate_disk_mesh(254);
  std::mt19937_64 rng(1);
  const auto sigma = oracle::random_field(mesh, 1, 2, rng);
  const auto q = oracle::random_field(mesh, 1, 2, rng);
  const NtDMatrix ntd = build_ntd(mesh, sigma, q, 3);
  const auto sys = assemble(mesh, sigma, q);
  const auto g = oracle::random_trace(mesh, rng);
  const Eigen::VectorXd direct = restrict_to_boundary(solve_neumann(sys, g)).values;
  CHECK((ntd.lambda * g.values - direct).norm() <= 1e-12 * direct.norm());
  CHECK(build_ntd(mesh, sigma, q, 1).lambda == ntd.lambda);
}

TEST_CASE("Rayleigh quotient on cos theta approaches I1(1)/I1'(1)") {
  const auto mesh = generate_disk_mesh(4064);
  const auto one = PiecewiseConstantField::constant(mesh, 1.0);
  const double rq = rayleigh_quotient(build_ntd(mesh, one, one), sample_boundary(mesh, parse_boundary("cos:1")));
  CHECK(oracle::trace_amplitude(1) == doctest::Approx(0.8063).epsilon(1e-4));
  CHECK(std::abs(rq - oracle::trace_amplitude(1)) <= 0.02 * oracle::trace_amplitude(1));
}

TEST_CASE("boundary inner product") {
  const auto mesh = generate_disk_mesh(1016);
  const Eigen::MatrixXd m = boundary_mass_matrix(*mesh);
  const auto one = sample_boundary(mesh, parse_boundary("const:1"));
  const double perimeter = boundary_inner(one, one, m);
  CHECK(perimeter < 2.0 * std::numbers::pi);
  CHECK(perimeter == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-3));
  const auto c = sample_boundary(mesh, parse_boundary("cos:1"));
  const auto s = sample_boundary(mesh, parse_boundary("sin:1"));
  CHECK(std::abs(boundary_inner(c, s, m)) <= 1e-3);
  CHECK(boundary_inner(c, one, m) == boundary_inner(one, c, m));
}

TEST_CASE("operator norm of differences") {
  const auto mesh = generate_disk_mesh(254);
  const auto one = PiecewiseConstantField::constant(mesh, 1.0);
  const auto two = PiecewiseConstantField::constant(mesh, 2.0);
  const NtDMatrix a = build_ntd(mesh, one, one);
  const NtDMatrix b = build_ntd(mesh, one, two);
  CHECK(opnorm_diff(a, a) == 0.0);
  CHECK(opnorm_diff(a, b) == doctest::Approx(opnorm_diff(b, a)).epsilon(1e-12));

  NtDMatrix h1, h2;
  h1.mass = h2.mass = Eigen::MatrixXd::Identity(3, 3);
  h1.lambda = Eigen::Vector3d(2.0, -5.0, 1.0).asDiagonal();
  h2.lambda = Eigen::MatrixXd::Zero(3, 3);
  CHECK(opnorm_diff(h1, h2) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("absorption monotonicity sandwich over 100 random draws") {
  const auto mesh = generate_disk_mesh(1016);
  const auto sigma = sample_coefficient(mesh, parse_coefficient("example1_sigma"));
  std::mt19937_64 rng(2024);
  int violations = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const auto q1 = omega_field(mesh, 1, 2, 1.0, rng);
    const auto q2 = omega_field(mesh, 1, 2, 1.0, rng);
    const auto gap = monotonicity_gap_q(q1, q2, sigma, oracle::random_trace(mesh, rng));
    if (gap.upper < gap.middle - 1e-10 || gap.middle < gap.lower - 1e-10) ++violations;
  }
  CHECK(violations == 0);

  const auto q = omega_field(mesh, 1, 2, 1.0, rng);
  const auto g = oracle::random_trace(mesh, rng);
  const auto same = monotonicity_gap_q(q, q, sigma, g);
  CHECK(std::abs(same.upper) <= 1e-12);
  CHECK(std::abs(same.middle) <= 1e-12);
  CHECK(std::abs(same.lower) <= 1e-12);
  const auto ordered = monotonicity_gap_q(PiecewiseConstantField::constant(mesh, 2.0),
                                          PiecewiseConstantField::constant(mesh, 1.0), sigma, g);
  CHECK(ordered.middle >= 0.0);
}

TEST_CASE("joint monotonicity inequalities over 100 random draws") {
  const auto mesh = generate_disk_mesh(1016);
  std::mt19937_64 rng(77);
  int violations = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const auto s1 = oracle::random_field(mesh, 1, 2, rng);
    const auto q1 = oracle::random_field(mesh, 1, 3, rng);
    const auto s2 = oracle::random_field(mesh, 1, 2, rng);
    const auto q2 = oracle::random_field(mesh, 1, 3, rng);
    const auto gap = monotonicity_gap_joint(s1, q1, s2, q2, oracle::random_trace(mesh, rng));
    if (gap.upper < gap.middle - 1e-10 || gap.middle < gap.lower - 1e-10 || gap.middle < gap.lower2 - 1e-10) {
      ++violations;
    }
  }
  CHECK(violations == 0);

  const auto s = oracle::random_field(mesh, 1, 2, rng);
  const auto q = oracle::random_field(mesh, 1, 3, rng);
  const auto g = oracle::random_trace(mesh, rng);
  const auto same = monotonicity_gap_joint(s, q, s, q, g);
  CHECK(std::abs(same.upper) + std::abs(same.middle) + std::abs(same.lower) + std::abs(same.lower2) <= 1e-12);
  PiecewiseConstantField s_big = s, q_big = q;
  s_big.values.array() += 0.5;
  q_big.values.array() += 0.5;
  CHECK(monotonicity_gap_joint(s, q, s_big, q_big, g).middle >= 0.0);
}

TEST_CASE("ordered absorptions give ordered NtD operators") {
  const auto mesh = generate_disk_mesh(1016);
  const auto sigma = PiecewiseConstantField::constant(mesh, 1.0);
  const auto l1 = build_ntd(mesh, sigma, PiecewiseConstantField::constant(mesh, 1.0));
  const auto l2 = build_ntd(mesh, sigma, PiecewiseConstantField::constant(mesh, 2.0));
  CHECK(difference_spectrum(l1, l2)[0] >= -1e-10);

  std::mt19937_64 rng(99);
  for (int pair = 0; pair < 20; ++pair) {
    const auto lo = oracle::random_field(mesh, 0.5, 2, rng);
    auto hi = lo;
    hi.values += oracle::random_field(mesh, 0, 1, rng).values;
    CHECK(difference_spectrum(build_ntd(mesh, sigma, lo), build_ntd(mesh, sigma, hi))[0] >= -1e-10);
  }
}

TEST_CASE("Frechet form of the NtD map") {
  const auto mesh = generate_disk_mesh(254);
  std::mt19937_64 rng(4);
  const auto sigma = oracle::random_field(mesh, 1, 2, rng);
  const auto q = oracle::random_field(mesh, 1, 2, rng);
  const auto g = oracle::random_trace(mesh, rng);
  const auto zero = PiecewiseConstantField::constant(mesh, 0.0);
  CHECK(lambda_frechet_form(sigma, q, zero, zero, g, g) == 0.0);
  const auto pos1 = oracle::random_field(mesh, 0, 1, rng);
  const auto pos2 = oracle::random_field(mesh, 0, 1, rng);
  CHECK(lambda_frechet_form(sigma, q, pos1, pos2, g, g) <= 0.0);

  for (int dir = 0; dir < 5; ++dir) {
    const auto d1 = oracle::random_field(mesh, -1, 1, rng);
    const auto d2 = oracle::random_field(mesh, -1, 1, rng);
    const auto h = oracle::random_trace(mesh, rng);
    const double analytic = lambda_frechet_form(sigma, q, d1, d2, h, h);
    auto form = [&](double t) {
      return oracle::ntd_form(PiecewiseConstantField(mesh, sigma.values + t * d1.values),
                              PiecewiseConstantField(mesh, q.values + t * d2.values), h);
    };
    CHECK(oracle::best_central_difference_error(form, analytic, {1e-3}) <= 1e-4);
  }
}

TEST_CASE("Dirichlet-to-Neumann inverts the NtD map") {
  const auto mesh = generate_disk_mesh(1016);
  std::mt19937_64 rng(8);
  const auto sys = assemble(mesh, oracle::random_field(mesh, 1, 2, rng), oracle::random_field(mesh, 1, 2, rng));
  const auto g = oracle::random_trace(mesh, rng);
  const auto f = restrict_to_boundary(solve_neumann(sys, g));
  const auto back = dirichlet_to_neumann(sys, f);
  CHECK((back.values - g.values).norm() <= 1e-8 * g.values.norm());
}
