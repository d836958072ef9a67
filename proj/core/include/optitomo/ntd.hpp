#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <optional>

#include "optitomo/fem.hpp"
#include "optitomo/field.hpp"

namespace optitomo {

/// Discrete Neumann-to-Dirichlet operator.
///
/// `lambda` maps the boundary-hat coefficient vector of a current g to the
/// nodal trace of the Neumann solution; `mass` is the boundary mass matrix M.
/// M * lambda is symmetric positive definite, so lambda is self-adjoint in the
/// M inner product and all norms below are M-weighted.
struct NtDMatrix {
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd mass;
  MeshPtr mesh;  // null for hand-built operators
  std::optional<PiecewiseConstantField> sigma;
  std::optional<PiecewiseConstantField> q;
};

NtDMatrix build_ntd(const MeshPtr& mesh, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                    int threads = 0);
NtDMatrix build_ntd(const AssembledSystem& sys, int threads = 0);

/// ||M lambda - lambda^T M||_max / ||M lambda||_max.
double m_symmetry_defect(const NtDMatrix& ntd);

/// g^T M h.
double boundary_inner(const BoundaryTrace& g, const BoundaryTrace& h, const Eigen::MatrixXd& mass);
double boundary_inner(const Eigen::VectorXd& g, const Eigen::VectorXd& h, const Eigen::MatrixXd& mass);

/// Eigenvalues (ascending) of the M-generalised symmetric problem
/// M(L1 - L2) g = lambda M g, after symmetrising M(L1 - L2).
Eigen::VectorXd difference_spectrum(const NtDMatrix& l1, const NtDMatrix& l2);

/// sup_g |<g, (L1 - L2) g>_M| / <g, g>_M.
double opnorm_diff(const NtDMatrix& l1, const NtDMatrix& l2);

/// <g, L g>_M / <g, g>_M.
double rayleigh_quotient(const NtDMatrix& ntd, const BoundaryTrace& g);

/// Quantities of the absorption monotonicity sandwich, with u2 the Neumann
/// solution for q2:
///   upper  = int (q1 - q2) u2^2
///   middle = <g, (L(q2) - L(q1)) g>
///   lower  = int (q2 - q2^2 / q1) u2^2
/// upper >= middle >= lower for every current g.
struct AbsorptionGap {
  double upper;
  double middle;
  double lower;
};

AbsorptionGap monotonicity_gap_q(const PiecewiseConstantField& q1, const PiecewiseConstantField& q2,
                                 const PiecewiseConstantField& sigma, const BoundaryTrace& g);

/// Joint monotonicity quantities with u1, u2 the Neumann solutions for
/// (sigma1, q1) and (sigma2, q2):
///   upper  = int (s2 - s1)|grad u1|^2 + (q2 - q1) u1^2
///   middle = <g, (L(s1,q1) - L(s2,q2)) g>
///   lower  = int (s2 - s1)|grad u2|^2 + (q2 - q1) u2^2
///   lower2 = int (s1/s2)(s2 - s1)|grad u1|^2 + (q1/q2)(q2 - q1) u1^2
/// upper >= middle >= lower and middle >= lower2.
struct JointGap {
  double upper;
  double middle;
  double lower;
  double lower2;
};

JointGap monotonicity_gap_joint(const PiecewiseConstantField& sigma1, const PiecewiseConstantField& q1,
                                const PiecewiseConstantField& sigma2, const PiecewiseConstantField& q2,
                                const BoundaryTrace& g);

/// Derivative of <g, L(sigma, q) h> in direction (d_sigma, d_q):
///   -int d_sigma grad u_g . grad u_h - int d_q u_g u_h.
double lambda_frechet_form(const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                           const PiecewiseConstantField& d_sigma, const PiecewiseConstantField& d_q,
                           const BoundaryTrace& g, const BoundaryTrace& h);

/// Discrete Dirichlet-to-Neumann map: Dirichlet solve for f, then the current
/// g whose boundary load equals the boundary rows of A u.
BoundaryTrace dirichlet_to_neumann(const AssembledSystem& sys, const BoundaryTrace& f);

/// Row-major CSV: header "n_b,<n>", then n rows of n comma-separated values.
void write_ntd_csv(std::ostream& out, const NtDMatrix& ntd);

}  // namespace optitomo
