#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace optitomo {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Angle of p in [0, 2*pi).
double polar_angle(Point2 p);

/// Conforming triangulation of the unit disk.
///
/// Elements are counterclockwise node triples. The boundary is stored as the
/// list of nodes on the unit circle sorted by polar angle; consecutive entries
/// (cyclically) form the boundary edges. The constructor validates all of
/// this and throws InvalidInput on any violation, so a TriMesh that exists is
/// valid. Meshes are immutable and shared through shared_ptr<const TriMesh>.
class TriMesh {
 public:
  using Element = std::array<int, 3>;
  using Edge = std::array<int, 2>;

  TriMesh(std::vector<Point2> nodes, std::vector<Element> elements, std::vector<int> boundary_nodes);

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  std::vector<Edge> boundary_edges() const;

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  std::size_t num_boundary_nodes() const { return boundary_nodes_.size(); }

  double area(std::size_t element) const { return areas_[element]; }
  const std::vector<double>& areas() const { return areas_; }
  double total_area() const;
  Point2 centroid(std::size_t element) const;

  /// Angle of the i-th boundary node (position in boundary order).
  double boundary_angle(std::size_t i) const { return boundary_angles_[i]; }
  const std::vector<double>& boundary_angles() const { return boundary_angles_; }

  /// Position of a node in boundary order, or -1 for interior nodes.
  int boundary_position(int node) const { return boundary_position_[static_cast<std::size_t>(node)]; }

  /// Tolerance for "lies on the unit circle": 1e-12 times the mesh diameter.
  double geometric_tolerance() const { return 1e-12 * 2.0; }

 private:
  std::vector<Point2> nodes_;
  std::vector<Element> elements_;
  std::vector<int> boundary_nodes_;
  std::vector<double> areas_;
  std::vector<double> boundary_angles_;
  std::vector<int> boundary_position_;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

double signed_area(Point2 a, Point2 b, Point2 c);

/// Concentric-ring disk mesh. Ring i sits at radius i/R and carries m*i
/// nodes, giving m*R^2 triangles; (m, R) with m in [4, 8] are chosen to land
/// closest to the requested count. Throws InvalidInput if target < 16 or no
/// ring layout falls within 15% of the target.
MeshPtr generate_disk_mesh(int target_elements);

/// Red refinement: every triangle split into four through edge midpoints.
/// Boundary midpoints are projected onto the unit circle.
MeshPtr refine_uniform(const TriMesh& mesh);

/// Per-element labels: 0 outside omega, 1..N for the cells of omega.
struct Partition {
  std::vector<int> labels;
  int num_cells = 0;

  /// Area per label; entry 0 is the area outside omega.
  std::vector<double> cell_areas(const TriMesh& mesh) const;
  bool in_omega(std::size_t element) const { return labels[element] > 0; }
};

/// Omega is the union of elements whose centroid lies strictly inside
/// radius omega_radius; it is cut into n_cells angular sectors of equal angle.
Partition subdomain_partition(const TriMesh& mesh, double omega_radius, int n_cells);

/// Checks label range, cell non-emptiness and edge-connectivity of each cell.
void validate_partition(const TriMesh& mesh, const Partition& partition);

void write_mesh(std::ostream& out, const TriMesh& mesh);
MeshPtr read_mesh(std::istream& in);
void write_mesh_file(const std::string& path, const TriMesh& mesh);
MeshPtr read_mesh_file(const std::string& path);

}  // namespace optitomo
