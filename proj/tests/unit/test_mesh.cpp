#include "doctest.h"

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "optitomo/errors.hpp"
#include "optitomo/mesh.hpp"

using namespace optitomo;

namespace {

// Independent re-check of the TriMesh invariants.
void check_mesh_invariants(const TriMesh& mesh) {
  const auto& nodes = mesh.nodes();
  for (const auto& e : mesh.elements()) {
    CHECK(signed_area(nodes[e[0]], nodes[e[1]], nodes[e[2]]) > 0.0);
  }
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& e : mesh.elements()) {
    for (int i = 0; i < 3; ++i) {
      const int a = e[i], b = e[(i + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::set<std::pair<int, int>> boundary;
  for (const auto& be : mesh.boundary_edges()) boundary.insert({std::min(be[0], be[1]), std::max(be[0], be[1])});
  for (const auto& [edge, count] : edge_count) {
    CHECK(count == (boundary.count(edge) ? 1 : 2));
  }
  CHECK(boundary.size() == mesh.num_boundary_nodes());
  double prev = -1.0;
  for (std::size_t i = 0; i < mesh.num_boundary_nodes(); ++i) {
    const Point2 p = nodes[mesh.boundary_nodes()[i]];
    CHECK(std::abs(std::hypot(p.x, p.y) - 1.0) <= mesh.geometric_tolerance());
    CHECK(mesh.boundary_angle(i) > prev);
    prev = mesh.boundary_angle(i);
  }
}

}  // namespace

TEST_CASE("generated meshes land within 15% of the requested element count") {
  const auto m1 = generate_disk_mesh(1016);
  CHECK(m1->num_elements() >= 864);
  CHECK(m1->num_elements() <= 1168);
  const auto m4 = generate_disk_mesh(4064);
  CHECK(m4->num_elements() >= 3455);
  CHECK(m4->num_elements() <= 4674);
  for (int target : {16, 100, 254, 1016}) {
    const auto m = generate_disk_mesh(target);
    CHECK(std::abs(static_cast<double>(m->num_elements()) - target) <= 0.15 * target);
    CHECK(m->total_area() < std::numbers::pi);
    // The inscribed polygon of the coarsest meshes is too crude for 2%.
    if (target >= 100) CHECK(m->total_area() == doctest::Approx(std::numbers::pi).epsilon(0.02));
    check_mesh_invariants(*m);
  }
}

TEST_CASE("tiny targets are rejected") { CHECK_THROWS_AS(generate_disk_mesh(15), InvalidInput); }

TEST_CASE("uniform refinement quadruples elements and keeps the boundary on the circle") {
  const auto m0 = generate_disk_mesh(254);
  const auto m1 = refine_uniform(*m0);
  const auto m2 = refine_uniform(*m1);
  CHECK(m1->num_elements() == 4 * m0->num_elements());
  CHECK(m2->num_elements() == 16 * m0->num_elements());
  CHECK(m1->num_boundary_nodes() == 2 * m0->num_boundary_nodes());
  check_mesh_invariants(*m1);
  check_mesh_invariants(*m2);
  CHECK(m2->total_area() > m0->total_area());
  CHECK(m2->total_area() < std::numbers::pi);
}

TEST_CASE("constructor rejects clockwise elements and broken boundaries") {
  std::vector<Point2> nodes = {{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  std::vector<TriMesh::Element> ccw = {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}};
  CHECK_NOTHROW(TriMesh(nodes, ccw, {1, 2, 3, 4}));
  auto cw = ccw;
  std::swap(cw[0][1], cw[0][2]);
  CHECK_THROWS_AS(TriMesh(nodes, cw, {1, 2, 3, 4}), InvalidInput);
  CHECK_THROWS_AS(TriMesh(nodes, ccw, {1, 3, 2, 4}), InvalidInput);
  auto off_circle = nodes;
  off_circle[2] = {0, 0.9};
  CHECK_THROWS_AS(TriMesh(off_circle, ccw, {1, 2, 3, 4}), InvalidInput);
}

TEST_CASE("single-cell partition labels exactly the centroids inside the radius") {
  const auto mesh = generate_disk_mesh(1016);
  const Partition p = subdomain_partition(*mesh, 0.5, 1);
  CHECK(p.num_cells == 1);
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    const Point2 c = mesh->centroid(e);
    CHECK(p.labels[e] == (std::hypot(c.x, c.y) < 0.5 ? 1 : 0));
  }
}

TEST_CASE("eight sectors tile omega with comparable areas") {
  const auto mesh = generate_disk_mesh(1016);
  const Partition p = subdomain_partition(*mesh, 0.5, 8);
  CHECK(p.num_cells == 8);
  CHECK_NOTHROW(validate_partition(*mesh, p));
  const auto areas = p.cell_areas(*mesh);
  REQUIRE(areas.size() == 9);
  double omega = 0.0;
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    if (p.in_omega(e)) omega += mesh->area(e);
  }
  double sum = 0.0, lo = 1e300, hi = 0.0;
  for (std::size_t j = 1; j < areas.size(); ++j) {
    const double a = areas[j];
    CHECK(a > 0.0);
    sum += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  CHECK(sum == doctest::Approx(omega).epsilon(1e-12));
  const double mean = sum / 8.0;
  CHECK(hi <= 1.25 * mean);
  CHECK(lo >= 0.75 * mean);
}

TEST_CASE("more cells than omega elements is an error") {
  const auto mesh = generate_disk_mesh(100);
  CHECK_THROWS_AS(subdomain_partition(*mesh, 0.5, 500), InvalidInput);
}

TEST_CASE("mesh text format round-trips exactly") {
  const auto mesh = refine_uniform(*generate_disk_mesh(100));
  std::stringstream ss;
  write_mesh(ss, *mesh);
  const auto back = read_mesh(ss);
  REQUIRE(back->num_nodes() == mesh->num_nodes());
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) {
    CHECK(back->nodes()[i].x == mesh->nodes()[i].x);
    CHECK(back->nodes()[i].y == mesh->nodes()[i].y);
  }
  CHECK(back->elements() == mesh->elements());
  CHECK(back->boundary_nodes() == mesh->boundary_nodes());
}
