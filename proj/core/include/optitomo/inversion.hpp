#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "optitomo/field.hpp"
#include "optitomo/optimize.hpp"

namespace optitomo {

/// Current/voltage pairs on the inversion mesh.
struct MeasurementPair {
  BoundaryTrace g;  // applied current
  BoundaryTrace f;  // measured boundary voltage
};

struct MeasurementSet {
  MeshPtr mesh;
  std::vector<MeasurementPair> pairs;

  void validate() const;
};

/// CSV with header k,boundary_index,node_index,g,f.
void write_measurements_csv(std::ostream& out, const MeasurementSet& meas);

enum class InversionMode { q_only, joint };

InversionMode parse_mode(const std::string& name);
std::string to_string(InversionMode mode);

struct InversionConfig {
  InversionMode mode = InversionMode::q_only;
  double q_lower = 0.1;
  double q_upper = 10.0;
  double sigma_lower = 0.1;  // joint mode only
  double sigma_upper = 10.0;
  double rho = 0.0;
  double beta_balance = 1.5;
  BfgsOptions bfgs;
  /// Scale the initial inverse Hessian by 1/area (the gradient carries an area factor).
  bool area_scaling = true;
  /// Initial guesses. In q-only mode sigma_init is the known diffusion.
  PiecewiseConstantField sigma_init;
  PiecewiseConstantField q_init;
  /// Balancing-principle fixed point.
  double rho_init = 1e-6;
  double balance_tolerance = 1e-3;
  int balance_max_outer = 20;
  int threads = 0;

  void validate() const;
};

/// J = F + penalty with F = sum_k int sigma |grad d_k|^2 + q d_k^2,
/// d_k = u^(g_k) - u^(f_k), and penalty = rho/2 int (sigma^2 + q^2)
/// (q^2 only in q-only mode).
struct KvTerms {
  double data_fit = 0.0;
  double penalty_integral = 0.0;  // int (sigma^2 + q^2), or int q^2
  double penalty = 0.0;           // rho/2 * penalty_integral
  double value = 0.0;
};

KvTerms kv_terms(const MeasurementSet& meas, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                 double rho, InversionMode mode = InversionMode::joint, int threads = 0);

double kv_value(const MeasurementSet& meas, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                double rho, InversionMode mode = InversionMode::joint, int threads = 0);

struct KvGradient {
  PiecewiseConstantField sigma;  // zero in q-only mode
  PiecewiseConstantField q;
  KvTerms terms;
};

/// Exact derivative of the discrete functional with respect to the element
/// values of sigma and q:
///   d/d sigma_e = sum_k int_e |grad u^(f_k)|^2 - |grad u^(g_k)|^2 + rho |e| sigma_e
///   d/d q_e     = sum_k int_e (u^(f_k))^2 - (u^(g_k))^2 + rho |e| q_e
KvGradient kv_gradient(const MeasurementSet& meas, const PiecewiseConstantField& sigma, const PiecewiseConstantField& q,
                       double rho, InversionMode mode = InversionMode::joint, int threads = 0);

struct Reconstruction {
  PiecewiseConstantField sigma;
  PiecewiseConstantField q;
  KvTerms terms;
  BfgsResult optimizer;
};

/// Projected BFGS on the box of the configuration at regularisation config.rho.
Reconstruction bfgs_minimize(const MeasurementSet& meas, const InversionConfig& config);

struct BalanceStep {
  double rho = 0.0;
  double data_fit = 0.0;
  double penalty_integral = 0.0;
  double next_rho = 0.0;
  int bfgs_iterations = 0;
};

struct BalanceResult {
  double rho = 0.0;
  /// |(beta - 1) F - rho/2 P| / ((beta - 1) F) at the returned reconstruction.
  double relative_residual = 0.0;
  bool converged = false;
  /// F vanished: the balance equation has only the trivial root rho = 0.
  bool degenerate = false;
  std::vector<BalanceStep> history;
  Reconstruction reconstruction;
};

/// Fixed point rho <- 2 (beta - 1) F / P, each step warm-started from the
/// previous reconstruction. Stops when |rho_{n+1} - rho_n| <= tol min(rho_n, rho_{n+1}).
BalanceResult balancing_rho(const MeasurementSet& meas, const InversionConfig& config);

/// CSV with header iter,J,F,penalty,grad_norm,step.
void write_iteration_log(std::ostream& out, const std::vector<IterationRecord>& log);

/// True if J never increases along the log.
bool monotone_descent(const std::vector<IterationRecord>& log);

}  // namespace optitomo
