#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "optitomo/fem.hpp"
#include "optitomo/field.hpp"
#include "optitomo/mesh.hpp"

namespace optitomo {

/// Setting of the quantitative absorption-stability construction: q is
/// piecewise constant on the N cells D_j of omega with a <= q_j <= b, zero
/// outside omega, and sigma is known (sigma_out outside omega, sigma_in inside).
struct ProbingSetup {
  MeshPtr mesh;
  Partition partition;
  double a = 1.0;
  double b = 2.0;
  int K = 0;
  PiecewiseConstantField sigma;
  int max_iter = 200;
  /// Certificate value the accepted current is scaled to; must exceed 1.
  double certificate_target = 1.1;
};

/// K = floor(3 (b/a - 1)) + 3. Requires b >= a > 0.
int compute_K(double a, double b);

ProbingSetup make_probing_setup(MeshPtr mesh, Partition partition, double a, double b, double sigma_out = 1.0,
                                double sigma_in = 2.0);

/// Probing coefficient: (k+4)a/3 on D_j, a/3 on the rest of omega, 0 outside.
/// j in [1, N], k in [1, K].
PiecewiseConstantField eta_field(const ProbingSetup& setup, int j, int k);

/// Bracket index k with (k+2)a/3 <= value < (k+3)a/3.
int bracket_index(const ProbingSetup& setup, double value);

/// The virtual-measurement pair for a fixed absorption q:
///   forward  f -> trace of v, A v = int_omega f w      (P0(omega) -> boundary)
///   adjoint  g -> element means of u|_omega, u the Neumann solution for g
/// They are mutually adjoint for the area-weighted P0 inner product on omega
/// and the M inner product on the boundary.
class ProbeOperators {
 public:
  ProbeOperators(const ProbingSetup& setup, const PiecewiseConstantField& q);

  /// f holds one value per omega element (ordering of omega_elements()).
  Eigen::VectorXd forward(const Eigen::VectorXd& f) const;
  Eigen::VectorXd adjoint(const Eigen::VectorXd& g) const;
  /// Full nodal Neumann solution for current coefficients g.
  Eigen::VectorXd neumann(const Eigen::VectorXd& g) const;

  double omega_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& h) const;
  double boundary_inner(const Eigen::VectorXd& g, const Eigen::VectorXd& h) const;

  const std::vector<std::size_t>& omega_elements() const { return omega_elements_; }
  const Eigen::MatrixXd& mass() const { return mass_; }
  const AssembledSystem& system() const { return sys_; }

 private:
  AssembledSystem sys_;
  Eigen::MatrixXd mass_;
  std::vector<std::size_t> omega_elements_;
  Eigen::VectorXd omega_areas_;
};

struct LocalizedCurrent {
  int j = 0;
  int k = 0;
  BoundaryTrace g;
  double beta = 0.0;      // certificate of g (after scaling)
  double raw_beta = 0.0;  // certificate of the unscaled CG iterate
  double scale = 1.0;     // g = scale * iterate
  int cg_iterations = 0;
  double norm_sq = 0.0;                 // <g, g>_M
  std::vector<double> residual_history;  // ||A* g_n - target||_omega, n = 0, 1, ...
};

/// beta = 1/2 int_{D_j} u^2 - (3b/(2a) - 1/2) int_{omega \ D_j} u^2.
double localization_certificate(const ProbingSetup& setup, int j, const Eigen::VectorXd& u);

/// int_{D_j} u^2 - int_{omega \ D_j} u^2 for the Neumann solution u of (sigma, q, g).
double localization_functional(const ProbingSetup& setup, int j, const BoundaryTrace& g,
                               const PiecewiseConstantField& q);

/// Relative defect of <A f, g>_M = <f, A* g>_omega for random f, g.
double adjoint_defect(const ProbeOperators& ops, std::uint64_t seed);

/// CGLS on A* g = 3 chi_{D_j} with q = eta^(j,k). The certificate is quadratic
/// in g, so the first iterate with a positive certificate is scaled until the
/// certificate equals setup.certificate_target (> 1). Throws NumericalFailure
/// (with the best certificate reached) after max_iter iterations.
LocalizedCurrent find_localized_current(const ProbingSetup& setup, int j, int k, int max_iter);

/// Returns the localisation functional for q in F_[a,b]; requires current.k to
/// be the bracket index of q on D_j. Throws InvalidInput otherwise.
double verify_localization(const ProbingSetup& setup, const LocalizedCurrent& current,
                           const PiecewiseConstantField& q);

/// q in F_[a,b] from per-cell values (zero outside omega). Throws InvalidInput
/// for values outside [a, b].
PiecewiseConstantField cellwise_field(const ProbingSetup& setup, const std::vector<double>& cell_values);

struct LipschitzResult {
  /// 1 / max_{j,k} <g^(j,k), g^(j,k)>_M
  double L = 0.0;
  /// max_{j,k} <g^(j,k), g^(j,k)>_M = 1/L; ||q1 - q2||_inf <= C ||L(q1) - L(q2)||.
  double stability_constant = 0.0;
  std::vector<LocalizedCurrent> currents;  // ordered by (j, k)
};

LipschitzResult lipschitz_constant(const ProbingSetup& setup, int threads = 0);

/// L and the stability constant from already accepted currents.
LipschitzResult lipschitz_from_currents(std::vector<LocalizedCurrent> currents);

struct StabilitySample {
  std::vector<double> q1;  // per-cell values
  std::vector<double> q2;
  double max_diff = 0.0;   // ||q1 - q2||_inf
  double opnorm = 0.0;     // ||L(q1) - L(q2)|| (M-weighted)
  double bound = 0.0;      // stability_constant * opnorm
  bool violated = false;   // max_diff > bound
};

/// Random pairs q1 != q2 in F_[a,b] (per-cell values uniform in [a, b], drawn
/// from std::mt19937_64 seeded with seed) checked against
/// ||q1 - q2||_inf <= stability_constant * ||L(q1) - L(q2)||.
std::vector<StabilitySample> sample_stability(const ProbingSetup& setup, double stability_constant, int count,
                                              std::uint64_t seed, int threads = 0);

/// CSV with header pair,max_diff,opnorm,bound,violated.
void write_stability_csv(std::ostream& out, const std::vector<StabilitySample>& samples);

/// CSV with header j,k,beta,raw_beta,scale,cg_iterations,norm_sq.
void write_certificates_csv(std::ostream& out, const LipschitzResult& result);

}  // namespace optitomo
