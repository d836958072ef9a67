#include "optitomo/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <vector>

#include "optitomo/errors.hpp"

namespace optitomo {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> parse_numbers(const std::string& text, const std::string& descriptor) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidInput("bad number '" + item + "' in descriptor '" + descriptor + "'");
    }
  }
  return out;
}

void expect_args(const std::vector<double>& args, std::size_t n, const std::string& descriptor) {
  if (args.size() != n) {
    throw InvalidInput("descriptor '" + descriptor + "' expects " + std::to_string(n) + " parameters");
  }
}

bool in_disk(Point2 p, double cx, double cy, double r) {
  const double dx = p.x - cx, dy = p.y - cy;
  return dx * dx + dy * dy < r * r;
}

// Inclusion disks of the joint-reconstruction benchmark.
bool in_d1(Point2 p) { return in_disk(p, 0.5, 0.0, 0.2); }
bool in_d2(Point2 p) { return in_disk(p, -0.5, 0.0, 0.2); }
bool in_d3(Point2 p) { return in_disk(p, 0.0, 0.5, 0.2); }
bool in_d4(Point2 p) { return in_disk(p, 0.0, -0.5, 0.2); }

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

PiecewiseConstantField::PiecewiseConstantField(MeshPtr m, Eigen::VectorXd v) : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh) throw InvalidInput("field without mesh");
  if (static_cast<std::size_t>(values.size()) != mesh->num_elements()) {
    throw InvalidInput("element field length " + std::to_string(values.size()) + " != element count " +
                       std::to_string(mesh->num_elements()));
  }
}

PiecewiseConstantField PiecewiseConstantField::constant(MeshPtr mesh, double value) {
  const auto n = static_cast<Eigen::Index>(mesh->num_elements());
  return {std::move(mesh), Eigen::VectorXd::Constant(n, value)};
}

NodalField::NodalField(MeshPtr m, Eigen::VectorXd v) : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh) throw InvalidInput("field without mesh");
  if (static_cast<std::size_t>(values.size()) != mesh->num_nodes()) {
    throw InvalidInput("nodal field length does not match node count");
  }
}

BoundaryTrace::BoundaryTrace(MeshPtr m, Eigen::VectorXd v) : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh) throw InvalidInput("trace without mesh");
  if (static_cast<std::size_t>(values.size()) != mesh->num_boundary_nodes()) {
    throw InvalidInput("boundary trace length does not match boundary node count");
  }
}

BoundaryTrace BoundaryTrace::zero(MeshPtr mesh) {
  const auto n = static_cast<Eigen::Index>(mesh->num_boundary_nodes());
  return {std::move(mesh), Eigen::VectorXd::Zero(n)};
}

void require_positive(const PiecewiseConstantField& field, const std::string& role) {
  for (Eigen::Index e = 0; e < field.values.size(); ++e) {
    if (!(field.values[e] > 0.0)) {
      throw InvalidInput(role + " must be strictly positive; element " + std::to_string(e) + " has value " +
                         format_double(field.values[e]));
    }
  }
}

void require_same_mesh(const MeshPtr& a, const MeshPtr& b, const std::string& what) {
  if (a.get() != b.get()) throw InvalidInput(what + ": fields live on different meshes");
}

CoefficientExpr parse_coefficient(const std::string& descriptor) {
  const auto colon = descriptor.find(':');
  const std::string name = descriptor.substr(0, colon);
  const std::vector<double> args =
      parse_numbers(colon == std::string::npos ? std::string{} : descriptor.substr(colon + 1), descriptor);

  if (name == "const") {
    expect_args(args, 1, descriptor);
    const double c = args[0];
    return {descriptor, [c](Point2) { return c; }};
  }
  if (name == "disk") {
    expect_args(args, 5, descriptor);
    const double bg = args[0], val = args[1], cx = args[2], cy = args[3], r = args[4];
    return {descriptor, [=](Point2 p) { return in_disk(p, cx, cy, r) ? val : bg; }};
  }
  if (name == "square") {
    expect_args(args, 5, descriptor);
    const double bg = args[0], val = args[1], cx = args[2], cy = args[3], hw = args[4];
    return {descriptor, [=](Point2 p) {
              return std::max(std::abs(p.x - cx), std::abs(p.y - cy)) < hw ? val : bg;
            }};
  }
  if (!args.empty()) throw InvalidInput("descriptor '" + descriptor + "' takes no parameters");
  if (name == "example1_sigma") {
    return {name, [](Point2 p) { return std::hypot(p.x, p.y) < 0.5 ? 2.0 : 1.0; }};
  }
  if (name == "example1_q") {
    return {name, [](Point2 p) {
              const bool inside = std::max(std::abs(p.x), std::abs(p.y)) < 0.5;
              return 1.0 + (inside ? std::cos(kPi * p.x) * std::cos(kPi * p.y) : 0.0);
            }};
  }
  if (name == "example1_box_init") {
    return {name, [](Point2 p) { return (std::abs(p.x) < 0.2 && std::abs(p.y) < 0.2) ? 1.0 : 0.0; }};
  }
  if (name == "example2_sigma") {
    return {name, [](Point2 p) { return in_d1(p) ? 2.0 : in_d2(p) ? 3.0 : 1.0; }};
  }
  if (name == "example2_q") {
    return {name, [](Point2 p) { return in_d3(p) ? 3.0 : in_d4(p) ? 4.0 : 1.0; }};
  }
  if (name == "example2_sigma_init") {
    return {name, [](Point2 p) { return in_d1(p) ? 1.1 : in_d2(p) ? 1.2 : 1.0; }};
  }
  if (name == "example2_q_init") {
    return {name, [](Point2 p) { return in_d3(p) ? 1.1 : in_d4(p) ? 1.2 : 1.0; }};
  }
  throw InvalidInput("unknown coefficient descriptor '" + descriptor + "'");
}

BoundaryExpr parse_boundary(const std::string& descriptor) {
  const auto colon = descriptor.find(':');
  const std::string name = descriptor.substr(0, colon);
  const std::vector<double> args =
      parse_numbers(colon == std::string::npos ? std::string{} : descriptor.substr(colon + 1), descriptor);
  if (name == "const") {
    expect_args(args, 1, descriptor);
    const double c = args[0];
    return {descriptor, [c](double) { return c; }};
  }
  if (name == "sin") {
    expect_args(args, 1, descriptor);
    const double k = args[0];
    return {descriptor, [k](double t) { return std::sin(k * t); }};
  }
  if (name == "cos") {
    expect_args(args, 1, descriptor);
    const double k = args[0];
    return {descriptor, [k](double t) { return std::cos(k * t); }};
  }
  if (name == "offset_sin") {
    expect_args(args, 2, descriptor);
    const double c = args[0], k = args[1];
    return {descriptor, [c, k](double t) { return c + std::sin(k * t); }};
  }
  throw InvalidInput("unknown boundary descriptor '" + descriptor + "'");
}

PiecewiseConstantField sample_coefficient(const MeshPtr& mesh, const CoefficientExpr& expr, bool positive) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(mesh->num_elements()));
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) values[static_cast<Eigen::Index>(e)] = expr(mesh->centroid(e));
  PiecewiseConstantField field(mesh, std::move(values));
  if (positive) require_positive(field, "coefficient '" + expr.name + "'");
  return field;
}

NodalField sample_nodal(const MeshPtr& mesh, const std::function<double(Point2)>& fn) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(mesh->num_nodes()));
  for (std::size_t i = 0; i < mesh->num_nodes(); ++i) values[static_cast<Eigen::Index>(i)] = fn(mesh->nodes()[i]);
  return {mesh, std::move(values)};
}

BoundaryTrace sample_boundary(const MeshPtr& mesh, const BoundaryExpr& expr) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(mesh->num_boundary_nodes()));
  for (std::size_t i = 0; i < mesh->num_boundary_nodes(); ++i) {
    values[static_cast<Eigen::Index>(i)] = expr(mesh->boundary_angle(i));
  }
  return {mesh, std::move(values)};
}

BoundaryTrace transfer_boundary_trace(const TriMesh& fine, const BoundaryTrace& trace, const MeshPtr& coarse) {
  if (trace.mesh.get() != &fine) throw InvalidInput("trace does not live on the fine mesh");
  const auto& angles = fine.boundary_angles();
  const std::size_t n = angles.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(coarse->num_boundary_nodes()));
  for (std::size_t i = 0; i < coarse->num_boundary_nodes(); ++i) {
    const double theta = coarse->boundary_angle(i);
    const auto upper = std::upper_bound(angles.begin(), angles.end(), theta);
    // Bracket [lo, hi] in angle, wrapping through 2*pi at either end.
    std::size_t hi = static_cast<std::size_t>(upper - angles.begin());
    std::size_t lo = hi == 0 ? n - 1 : hi - 1;
    if (hi == n) hi = 0;
    double theta_lo = angles[lo];
    double theta_hi = angles[hi];
    if (theta_lo > theta) theta_lo -= 2.0 * kPi;
    if (theta_hi <= theta_lo) theta_hi += 2.0 * kPi;
    const double t = (theta - theta_lo) / (theta_hi - theta_lo);
    const double v_lo = trace.values[static_cast<Eigen::Index>(lo)];
    const double v_hi = trace.values[static_cast<Eigen::Index>(hi)];
    out[static_cast<Eigen::Index>(i)] = v_lo + t * (v_hi - v_lo);
  }
  return {coarse, std::move(out)};
}

BoundaryTrace restrict_to_boundary(const NodalField& u) {
  const auto& boundary = u.mesh->boundary_nodes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(boundary.size()));
  for (std::size_t i = 0; i < boundary.size(); ++i) out[static_cast<Eigen::Index>(i)] = u.values[boundary[i]];
  return {u.mesh, std::move(out)};
}

void write_element_csv(std::ostream& out, const PiecewiseConstantField& field) {
  out << "element_index,value\n" << std::setprecision(17);
  for (Eigen::Index e = 0; e < field.values.size(); ++e) out << e << ',' << field.values[e] << '\n';
}

void write_nodal_csv(std::ostream& out, const NodalField& field) {
  out << "node_index,value\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < field.values.size(); ++i) out << i << ',' << field.values[i] << '\n';
}

void write_trace_csv(std::ostream& out, const BoundaryTrace& trace) {
  out << "node_index,value\n" << std::setprecision(17);
  const auto& boundary = trace.mesh->boundary_nodes();
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    out << boundary[i] << ',' << trace.values[static_cast<Eigen::Index>(i)] << '\n';
  }
}

PiecewiseConstantField read_element_csv(std::istream& in, const MeshPtr& mesh) {
  std::string line;
  if (!std::getline(in, line) || line != "element_index,value") throw InvalidInput("missing element CSV header");
  Eigen::VectorXd values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh->num_elements()), std::nan(""));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidInput("bad element CSV row '" + line + "'");
    const long index = std::stol(line.substr(0, comma));
    if (index < 0 || index >= values.size()) throw InvalidInput("element index out of range in CSV");
    values[index] = std::stod(line.substr(comma + 1));
  }
  if (values.hasNaN()) throw InvalidInput("element CSV does not cover every element");
  return {mesh, std::move(values)};
}

void write_pgm(std::ostream& out, const PiecewiseConstantField& field, int size) {
  const TriMesh& mesh = *field.mesh;
  std::vector<double> raster(static_cast<std::size_t>(size) * size, 0.0);
  const double pixel = 2.0 / size;

  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements()[e];
    const Point2 a = mesh.nodes()[el[0]], b = mesh.nodes()[el[1]], c = mesh.nodes()[el[2]];
    const double xmin = std::min({a.x, b.x, c.x}), xmax = std::max({a.x, b.x, c.x});
    const double ymin = std::min({a.y, b.y, c.y}), ymax = std::max({a.y, b.y, c.y});
    const int col0 = std::max(0, static_cast<int>(std::floor((xmin + 1.0) / pixel)));
    const int col1 = std::min(size - 1, static_cast<int>(std::ceil((xmax + 1.0) / pixel)));
    // Row 0 is the top of the image (y = +1).
    const int row0 = std::max(0, static_cast<int>(std::floor((1.0 - ymax) / pixel)));
    const int row1 = std::min(size - 1, static_cast<int>(std::ceil((1.0 - ymin) / pixel)));
    const double area = mesh.area(e);
    for (int row = row0; row <= row1; ++row) {
      const double y = 1.0 - (row + 0.5) * pixel;
      for (int col = col0; col <= col1; ++col) {
        const Point2 p{-1.0 + (col + 0.5) * pixel, y};
        const double l0 = signed_area(p, b, c) / area;
        const double l1 = signed_area(a, p, c) / area;
        const double l2 = 1.0 - l0 - l1;
        if (l0 >= 0.0 && l1 >= 0.0 && l2 >= 0.0) {
          raster[static_cast<std::size_t>(row) * size + col] = field.values[static_cast<Eigen::Index>(e)];
        }
      }
    }
  }

  const double lo = std::min(0.0, field.values.minCoeff());
  const double hi = std::max(0.0, field.values.maxCoeff());
  const double span = hi > lo ? hi - lo : 1.0;
  out << "P5\n" << size << ' ' << size << "\n255\n";
  std::vector<unsigned char> bytes(raster.size());
  for (std::size_t i = 0; i < raster.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(255.0 * (raster[i] - lo) / span));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace optitomo
