#include "optitomo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <queue>
#include <sstream>
#include <utility>

#include "optitomo/errors.hpp"

namespace optitomo {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

Point2 snap_to_circle(Point2 p) {
  const double r = std::hypot(p.x, p.y);
  return {p.x / r, p.y / r};
}

std::string describe_element(std::size_t e, const TriMesh::Element& el) {
  std::ostringstream os;
  os << "element " << e << " (" << el[0] << ", " << el[1] << ", " << el[2] << ")";
  return os.str();
}

}  // namespace

double polar_angle(Point2 p) {
  double theta = std::atan2(p.y, p.x);
  if (theta < 0.0) theta += kTwoPi;
  if (theta >= kTwoPi) theta = 0.0;
  return theta;
}

double signed_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

TriMesh::TriMesh(std::vector<Point2> nodes, std::vector<Element> elements, std::vector<int> boundary_nodes)
    : nodes_(std::move(nodes)), elements_(std::move(elements)), boundary_nodes_(std::move(boundary_nodes)) {
  const int n = static_cast<int>(nodes_.size());
  if (elements_.empty()) throw InvalidInput("mesh has no elements");
  if (boundary_nodes_.size() < 3) throw InvalidInput("mesh boundary needs at least 3 nodes");

  areas_.resize(elements_.size());
  std::map<std::pair<int, int>, int> edge_count;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    for (int v : el) {
      if (v < 0 || v >= n) throw InvalidInput(describe_element(e, el) + " references a missing node");
    }
    if (el[0] == el[1] || el[1] == el[2] || el[0] == el[2]) {
      throw InvalidInput(describe_element(e, el) + " repeats a node");
    }
    const double a = signed_area(nodes_[el[0]], nodes_[el[1]], nodes_[el[2]]);
    if (!(a > 0.0)) throw InvalidInput(describe_element(e, el) + " has non-positive signed area");
    areas_[e] = a;
    for (int i = 0; i < 3; ++i) ++edge_count[edge_key(el[i], el[(i + 1) % 3])];
  }

  boundary_position_.assign(nodes_.size(), -1);
  boundary_angles_.resize(boundary_nodes_.size());
  const double tol = geometric_tolerance();
  for (std::size_t i = 0; i < boundary_nodes_.size(); ++i) {
    const int v = boundary_nodes_[i];
    if (v < 0 || v >= n) throw InvalidInput("boundary list references a missing node");
    if (boundary_position_[v] != -1) throw InvalidInput("boundary list repeats a node");
    boundary_position_[v] = static_cast<int>(i);
    const Point2 p = nodes_[v];
    if (std::abs(std::hypot(p.x, p.y) - 1.0) > tol) {
      throw InvalidInput("boundary node " + std::to_string(v) + " is not on the unit circle");
    }
    boundary_angles_[i] = polar_angle(p);
    if (i > 0 && !(boundary_angles_[i] > boundary_angles_[i - 1])) {
      throw InvalidInput("boundary nodes are not strictly sorted by angle");
    }
  }

  // Boundary edges of the triangulation must be exactly the cyclic boundary list.
  std::size_t single_edges = 0;
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) throw InvalidInput("non-manifold edge shared by more than two elements");
    if (count == 1) ++single_edges;
  }
  if (single_edges != boundary_nodes_.size()) {
    throw InvalidInput("boundary edge count does not match the boundary node cycle");
  }
  for (std::size_t i = 0; i < boundary_nodes_.size(); ++i) {
    const int a = boundary_nodes_[i];
    const int b = boundary_nodes_[(i + 1) % boundary_nodes_.size()];
    auto it = edge_count.find(edge_key(a, b));
    if (it == edge_count.end() || it->second != 1) {
      throw InvalidInput("consecutive boundary nodes do not form a boundary edge");
    }
  }
}

std::vector<TriMesh::Edge> TriMesh::boundary_edges() const {
  std::vector<Edge> edges(boundary_nodes_.size());
  for (std::size_t i = 0; i < boundary_nodes_.size(); ++i) {
    edges[i] = {boundary_nodes_[i], boundary_nodes_[(i + 1) % boundary_nodes_.size()]};
  }
  return edges;
}

double TriMesh::total_area() const {
  double sum = 0.0;
  for (double a : areas_) sum += a;
  return sum;
}

Point2 TriMesh::centroid(std::size_t element) const {
  const auto& el = elements_[element];
  const Point2 a = nodes_[el[0]], b = nodes_[el[1]], c = nodes_[el[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

MeshPtr generate_disk_mesh(int target_elements) {
  if (target_elements < 16) throw InvalidInput("target_elements must be at least 16");

  int best_m = 0, best_r = 0;
  long best_err = -1;
  for (int m = 4; m <= 8; ++m) {
    const int r0 = static_cast<int>(std::lround(std::sqrt(static_cast<double>(target_elements) / m)));
    for (int r = std::max(1, r0 - 1); r <= r0 + 1; ++r) {
      const long err = std::labs(static_cast<long>(m) * r * r - target_elements);
      const bool better = best_err < 0 || err < best_err ||
                          (err == best_err && std::abs(m - 6) < std::abs(best_m - 6));
      if (better) {
        best_err = err;
        best_m = m;
        best_r = r;
      }
    }
  }
  if (static_cast<double>(best_err) > 0.15 * target_elements) {
    throw InvalidInput("no ring layout within 15% of " + std::to_string(target_elements) + " elements");
  }

  const int m = best_m;
  const int rings = best_r;
  std::vector<Point2> nodes;
  std::vector<std::vector<int>> ring_nodes(static_cast<std::size_t>(rings) + 1);
  nodes.push_back({0.0, 0.0});
  ring_nodes[0] = {0};
  for (int i = 1; i <= rings; ++i) {
    const int count = m * i;
    const double radius = static_cast<double>(i) / rings;
    for (int k = 0; k < count; ++k) {
      const double theta = kTwoPi * k / count;
      Point2 p{radius * std::cos(theta), radius * std::sin(theta)};
      if (i == rings) p = snap_to_circle(p);
      ring_nodes[i].push_back(static_cast<int>(nodes.size()));
      nodes.push_back(p);
    }
  }

  // Stitch neighbouring rings by merging their angular sequences.
  std::vector<TriMesh::Element> elements;
  for (int i = 1; i <= rings; ++i) {
    const auto& inner = ring_nodes[i - 1];
    const auto& outer = ring_nodes[i];
    const long n_in = static_cast<long>(inner.size());
    const long n_out = static_cast<long>(outer.size());
    long ia = 0, ib = 0;
    while (ia < n_in || ib < n_out) {
      const bool can_inner = n_in > 1 && ia < n_in;
      const bool advance_outer = ib < n_out && (!can_inner || (ib + 1) * n_in <= (ia + 1) * n_out);
      if (advance_outer) {
        elements.push_back({inner[ia % n_in], outer[ib], outer[(ib + 1) % n_out]});
        ++ib;
      } else {
        elements.push_back({inner[ia], outer[ib % n_out], inner[(ia + 1) % n_in]});
        ++ia;
      }
      if (n_in == 1 && ib == n_out) break;
    }
  }

  for (std::size_t e = 0; e < elements.size(); ++e) {
    auto& el = elements[e];
    const double a = signed_area(nodes[el[0]], nodes[el[1]], nodes[el[2]]);
    if (a < 0.0) std::swap(el[1], el[2]);
    if (a == 0.0) throw InvalidInput("degenerate triangle generated in ring " + std::to_string(e));
  }

  return std::make_shared<const TriMesh>(std::move(nodes), std::move(elements), ring_nodes[rings]);
}

MeshPtr refine_uniform(const TriMesh& mesh) {
  std::vector<Point2> nodes = mesh.nodes();
  std::map<std::pair<int, int>, int> midpoint;

  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Point2 p{0.5 * (nodes[a].x + nodes[b].x), 0.5 * (nodes[a].y + nodes[b].y)};
    const int ia = mesh.boundary_position(a), ib = mesh.boundary_position(b);
    const int nb = static_cast<int>(mesh.num_boundary_nodes());
    const bool boundary_edge = ia >= 0 && ib >= 0 && (std::abs(ia - ib) == 1 || std::abs(ia - ib) == nb - 1);
    if (boundary_edge) p = snap_to_circle(p);
    const int index = static_cast<int>(nodes.size());
    nodes.push_back(p);
    midpoint.emplace(key, index);
    return index;
  };

  std::vector<TriMesh::Element> elements;
  elements.reserve(4 * mesh.num_elements());
  for (const auto& el : mesh.elements()) {
    const int a = el[0], b = el[1], c = el[2];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    elements.push_back({a, ab, ca});
    elements.push_back({ab, b, bc});
    elements.push_back({ca, bc, c});
    elements.push_back({ab, bc, ca});
  }

  std::vector<int> boundary;
  const auto& old_boundary = mesh.boundary_nodes();
  boundary.reserve(2 * old_boundary.size());
  for (std::size_t i = 0; i < old_boundary.size(); ++i) {
    const int a = old_boundary[i];
    const int b = old_boundary[(i + 1) % old_boundary.size()];
    boundary.push_back(a);
    boundary.push_back(midpoint.at(edge_key(a, b)));
  }
  std::sort(boundary.begin(), boundary.end(),
            [&](int u, int v) { return polar_angle(nodes[u]) < polar_angle(nodes[v]); });

  return std::make_shared<const TriMesh>(std::move(nodes), std::move(elements), std::move(boundary));
}

std::vector<double> Partition::cell_areas(const TriMesh& mesh) const {
  std::vector<double> areas(static_cast<std::size_t>(num_cells) + 1, 0.0);
  for (std::size_t e = 0; e < labels.size(); ++e) areas[labels[e]] += mesh.area(e);
  return areas;
}

namespace {

std::vector<std::vector<std::size_t>> element_neighbours(const TriMesh& mesh) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> edge_elements;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements()[e];
    for (int i = 0; i < 3; ++i) edge_elements[edge_key(el[i], el[(i + 1) % 3])].push_back(e);
  }
  std::vector<std::vector<std::size_t>> neighbours(mesh.num_elements());
  for (const auto& [edge, elems] : edge_elements) {
    if (elems.size() == 2) {
      neighbours[elems[0]].push_back(elems[1]);
      neighbours[elems[1]].push_back(elems[0]);
    }
  }
  return neighbours;
}

// Components of one cell, largest first.
std::vector<std::vector<std::size_t>> cell_components(const std::vector<std::vector<std::size_t>>& neighbours,
                                                      const std::vector<int>& labels, int cell) {
  std::vector<std::vector<std::size_t>> components;
  std::vector<char> seen(labels.size(), 0);
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (labels[start] != cell || seen[start]) continue;
    std::vector<std::size_t> comp{start};
    seen[start] = 1;
    for (std::size_t head = 0; head < comp.size(); ++head) {
      for (std::size_t nb : neighbours[comp[head]]) {
        if (!seen[nb] && labels[nb] == cell) {
          seen[nb] = 1;
          comp.push_back(nb);
        }
      }
    }
    components.push_back(std::move(comp));
  }
  std::stable_sort(components.begin(), components.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return components;
}

// Sector cuts need not follow mesh edges, so a few elements near the cuts can
// end up edge-disconnected from their sector. Such fragments join the
// neighbouring cell they share most edges with.
void merge_fragments(const TriMesh& mesh, Partition& partition) {
  const auto neighbours = element_neighbours(mesh);
  for (int sweep = 0; sweep < 16; ++sweep) {
    bool changed = false;
    for (int cell = 1; cell <= partition.num_cells; ++cell) {
      const auto components = cell_components(neighbours, partition.labels, cell);
      for (std::size_t c = 1; c < components.size(); ++c) {
        std::map<int, int> shared;
        for (std::size_t e : components[c]) {
          for (std::size_t nb : neighbours[e]) {
            const int label = partition.labels[nb];
            if (label > 0 && label != cell) ++shared[label];
          }
        }
        if (shared.empty()) continue;
        const int target = std::max_element(shared.begin(), shared.end(), [](const auto& a, const auto& b) {
                             return a.second < b.second;
                           })->first;
        for (std::size_t e : components[c]) partition.labels[e] = target;
        changed = true;
      }
    }
    if (!changed) return;
  }
}

}  // namespace

Partition subdomain_partition(const TriMesh& mesh, double omega_radius, int n_cells) {
  if (!(omega_radius > 0.0 && omega_radius < 1.0)) throw InvalidInput("omega_radius must lie in (0, 1)");
  if (n_cells < 1) throw InvalidInput("n_cells must be positive");

  Partition partition;
  partition.num_cells = n_cells;
  partition.labels.assign(mesh.num_elements(), 0);
  std::size_t in_omega = 0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Point2 c = mesh.centroid(e);
    if (std::hypot(c.x, c.y) >= omega_radius) continue;
    ++in_omega;
    int cell = static_cast<int>(std::floor(polar_angle(c) * n_cells / kTwoPi));
    cell = std::clamp(cell, 0, n_cells - 1);
    partition.labels[e] = cell + 1;
  }
  if (static_cast<std::size_t>(n_cells) > in_omega) {
    throw InvalidInput("more cells (" + std::to_string(n_cells) + ") than elements in omega (" +
                       std::to_string(in_omega) + ")");
  }
  merge_fragments(mesh, partition);
  validate_partition(mesh, partition);
  return partition;
}

void validate_partition(const TriMesh& mesh, const Partition& partition) {
  if (partition.labels.size() != mesh.num_elements()) throw InvalidInput("partition size mismatch");
  const int n = partition.num_cells;
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n) + 1);
  for (std::size_t e = 0; e < partition.labels.size(); ++e) {
    const int label = partition.labels[e];
    if (label < 0 || label > n) throw InvalidInput("partition label out of range");
    members[label].push_back(e);
  }

  const auto neighbours = element_neighbours(mesh);

  for (int cell = 1; cell <= n; ++cell) {
    const auto& list = members[cell];
    if (list.empty()) throw InvalidInput("partition cell " + std::to_string(cell) + " has no elements");
    std::vector<char> seen(mesh.num_elements(), 0);
    std::queue<std::size_t> frontier;
    frontier.push(list.front());
    seen[list.front()] = 1;
    std::size_t reached = 0;
    while (!frontier.empty()) {
      const std::size_t e = frontier.front();
      frontier.pop();
      ++reached;
      for (std::size_t nb : neighbours[e]) {
        if (!seen[nb] && partition.labels[nb] == cell) {
          seen[nb] = 1;
          frontier.push(nb);
        }
      }
    }
    if (reached != list.size()) {
      throw InvalidInput("partition cell " + std::to_string(cell) + " is not edge-connected");
    }
  }
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << std::setprecision(17);
  out << "# nodes\n";
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    out << i << ' ' << mesh.nodes()[i].x << ' ' << mesh.nodes()[i].y << '\n';
  }
  out << "# elements\n";
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements()[e];
    out << e << ' ' << el[0] << ' ' << el[1] << ' ' << el[2] << '\n';
  }
  out << "# boundary\n";
  for (int v : mesh.boundary_nodes()) out << v << '\n';
}

MeshPtr read_mesh(std::istream& in) {
  enum class Section { none, nodes, elements, boundary } section = Section::none;
  std::vector<Point2> nodes;
  std::vector<TriMesh::Element> elements;
  std::vector<int> boundary;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw InvalidInput("mesh file line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line == "# nodes") section = Section::nodes;
      else if (line == "# elements") section = Section::elements;
      else if (line == "# boundary") section = Section::boundary;
      else fail("unknown section header '" + line + "'");
      continue;
    }
    std::istringstream ls(line);
    switch (section) {
      case Section::nodes: {
        std::size_t index;
        Point2 p;
        if (!(ls >> index >> p.x >> p.y) || index != nodes.size()) fail("bad node record");
        nodes.push_back(p);
        break;
      }
      case Section::elements: {
        std::size_t index;
        TriMesh::Element el;
        if (!(ls >> index >> el[0] >> el[1] >> el[2]) || index != elements.size()) fail("bad element record");
        elements.push_back(el);
        break;
      }
      case Section::boundary: {
        int v;
        if (!(ls >> v)) fail("bad boundary record");
        boundary.push_back(v);
        break;
      }
      case Section::none:
        fail("data before the first section header");
    }
  }
  return std::make_shared<const TriMesh>(std::move(nodes), std::move(elements), std::move(boundary));
}

void write_mesh_file(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  write_mesh(out, mesh);
}

MeshPtr read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_mesh(in);
}

}  // namespace optitomo
