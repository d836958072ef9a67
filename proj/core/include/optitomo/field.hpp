#pragma once

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <string>

#include "optitomo/mesh.hpp"

namespace optitomo {

/// One value per element. Used for sigma, q, probing coefficients and
/// per-element gradients.
struct PiecewiseConstantField {
  MeshPtr mesh;
  Eigen::VectorXd values;

  PiecewiseConstantField() = default;
  PiecewiseConstantField(MeshPtr mesh, Eigen::VectorXd values);
  static PiecewiseConstantField constant(MeshPtr mesh, double value);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// One value per mesh node (P1 coefficients).
struct NodalField {
  MeshPtr mesh;
  Eigen::VectorXd values;

  NodalField() = default;
  NodalField(MeshPtr mesh, Eigen::VectorXd values);
};

/// One value per boundary node, in boundary (angle) order. Interpreted as the
/// piecewise-linear function on the polygonal boundary.
struct BoundaryTrace {
  MeshPtr mesh;
  Eigen::VectorXd values;

  BoundaryTrace() = default;
  BoundaryTrace(MeshPtr mesh, Eigen::VectorXd values);
  static BoundaryTrace zero(MeshPtr mesh);
};

/// Throws InvalidInput unless every value is strictly positive.
void require_positive(const PiecewiseConstantField& field, const std::string& role);

/// Throws InvalidInput unless a and b live on the same mesh object.
void require_same_mesh(const MeshPtr& a, const MeshPtr& b, const std::string& what);

/// An analytic coefficient from the built-in catalogue, evaluated pointwise.
struct CoefficientExpr {
  std::string name;
  std::function<double(Point2)> eval;

  double operator()(Point2 p) const { return eval(p); }
};

/// Parses "name" or "name:v1,v2,...". Catalogue:
///   const:c
///   disk:background,value,cx,cy,radius
///   square:background,value,cx,cy,half_width     (sup-norm ball)
///   example1_sigma, example1_q, example1_box_init
///   example2_sigma, example2_q, example2_sigma_init, example2_q_init
CoefficientExpr parse_coefficient(const std::string& descriptor);

/// An analytic boundary function of the polar angle.
struct BoundaryExpr {
  std::string name;
  std::function<double(double)> eval;

  double operator()(double theta) const { return eval(theta); }
};

/// Parses "const:c", "sin:k", "cos:k" or "offset_sin:c,k" (c + sin(k theta)).
BoundaryExpr parse_boundary(const std::string& descriptor);

/// Per-element value = expr(centroid). With positive=true a non-positive
/// sample is an error (coefficient roles).
PiecewiseConstantField sample_coefficient(const MeshPtr& mesh, const CoefficientExpr& expr, bool positive = true);

/// Nodal interpolation of a function of position.
NodalField sample_nodal(const MeshPtr& mesh, const std::function<double(Point2)>& fn);

BoundaryTrace sample_boundary(const MeshPtr& mesh, const BoundaryExpr& expr);

/// Piecewise-linear interpolation in the polar angle (periodic).
BoundaryTrace transfer_boundary_trace(const TriMesh& fine, const BoundaryTrace& trace, const MeshPtr& coarse);

BoundaryTrace restrict_to_boundary(const NodalField& u);

void write_element_csv(std::ostream& out, const PiecewiseConstantField& field);
void write_nodal_csv(std::ostream& out, const NodalField& field);
/// Boundary traces use the node_index,value layout with global node indices.
void write_trace_csv(std::ostream& out, const BoundaryTrace& trace);

PiecewiseConstantField read_element_csv(std::istream& in, const MeshPtr& mesh);

/// Binary PGM (P5) heatmap of element values rasterised on size x size pixels
/// over [-1,1]^2. Pixels outside the mesh take the value 0; the grey scale
/// spans [min(0, min value), max(0, max value)].
void write_pgm(std::ostream& out, const PiecewiseConstantField& field, int size = 512);

}  // namespace optitomo
