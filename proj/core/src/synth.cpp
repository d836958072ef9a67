#include "optitomo/synth.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

#include "optitomo/errors.hpp"
#include "optitomo/fem.hpp"

namespace optitomo {

void ExperimentSpec::validate() const {
  if (fine_elements <= coarse_elements) throw InvalidInput("fine mesh must have more elements than the coarse mesh");
  if (coarse_elements < 16) throw InvalidInput("coarse mesh needs at least 16 elements");
  if (!(noise_level >= 0.0)) throw InvalidInput("noise level must be nonnegative");
  if (fluxes.empty()) throw InvalidInput("experiment needs at least one current");
}

ExperimentSpec example1_spec() {
  ExperimentSpec spec;
  spec.name = "example1";
  for (int k = 1; k <= 5; ++k) spec.fluxes.push_back("offset_sin:10," + std::to_string(k));
  spec.sigma_truth = "example1_sigma";
  spec.q_truth = "example1_q";
  spec.mode = InversionMode::q_only;
  spec.sigma_init = "example1_sigma";
  spec.q_init = "const:1";
  return spec;
}

ExperimentSpec example2_spec() {
  ExperimentSpec spec;
  spec.name = "example2";
  for (int k = 1; k <= 5; ++k) spec.fluxes.push_back("sin:" + std::to_string(k));
  spec.sigma_truth = "example2_sigma";
  spec.q_truth = "example2_q";
  spec.mode = InversionMode::joint;
  spec.sigma_init = "example2_sigma_init";
  spec.q_init = "example2_q_init";
  return spec;
}

std::vector<double> gaussian_stream(std::uint64_t seed, std::uint64_t k, std::size_t count) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  std::mt19937_64 rng(seq);
  // 53-bit uniforms in (0, 1]; std::normal_distribution is not specified
  // bit-for-bit across standard libraries.
  auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; };
  std::vector<double> out;
  out.reserve(count + 1);
  while (out.size() < count) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    out.push_back(r * std::cos(t));
    out.push_back(r * std::sin(t));
  }
  out.resize(count);
  return out;
}

std::vector<BoundaryTrace> fine_traces(const ExperimentSpec& spec, const MeshPtr& fine) {
  const auto sigma = sample_coefficient(fine, parse_coefficient(spec.sigma_truth));
  const auto q = sample_coefficient(fine, parse_coefficient(spec.q_truth));
  const AssembledSystem sys = assemble(fine, sigma, q);
  std::vector<BoundaryTrace> out;
  for (const auto& flux : spec.fluxes) {
    out.push_back(restrict_to_boundary(solve_neumann(sys, sample_boundary(fine, parse_boundary(flux)))));
  }
  return out;
}

MeasurementSet make_measurements(const ExperimentSpec& spec, const MeshPtr& fine, const MeshPtr& coarse) {
  spec.validate();
  const std::vector<BoundaryTrace> traces = fine_traces(spec, fine);
  MeasurementSet meas;
  meas.mesh = coarse;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    BoundaryTrace f = traces[k];
    if (spec.noise_level > 0.0) {
      const double sd = spec.noise_level * f.values.cwiseAbs().maxCoeff();
      const auto noise = gaussian_stream(spec.seed, k + 1, static_cast<std::size_t>(f.values.size()));
      for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values[i] += sd * noise[static_cast<std::size_t>(i)];
    }
    meas.pairs.push_back({sample_boundary(coarse, parse_boundary(spec.fluxes[k])),
                          transfer_boundary_trace(*fine, f, coarse)});
  }
  return meas;
}

Experiment build_experiment(const ExperimentSpec& spec) {
  spec.validate();
  Experiment ex;
  ex.spec = spec;
  ex.fine = generate_disk_mesh(spec.fine_elements);
  ex.coarse = generate_disk_mesh(spec.coarse_elements);
  ex.sigma_truth = sample_coefficient(ex.coarse, parse_coefficient(spec.sigma_truth));
  ex.q_truth = sample_coefficient(ex.coarse, parse_coefficient(spec.q_truth));
  ex.measurements = make_measurements(spec, ex.fine, ex.coarse);
  return ex;
}

ErrorMetrics error_metrics(const PiecewiseConstantField& rec, const PiecewiseConstantField& truth,
                           const std::vector<Region>& regions) {
  require_same_mesh(rec.mesh, truth.mesh, "error_metrics");
  const TriMesh& mesh = *truth.mesh;
  const Eigen::VectorXd diff = rec.values - truth.values;
  const Eigen::Map<const Eigen::VectorXd> areas(mesh.areas().data(), static_cast<Eigen::Index>(mesh.num_elements()));

  ErrorMetrics m;
  const double truth_l2 = std::sqrt(areas.dot(truth.values.cwiseAbs2()));
  const double truth_linf = truth.values.cwiseAbs().maxCoeff();
  if (!(truth_l2 > 0.0) || !(truth_linf > 0.0)) throw InvalidInput("reference field is zero");
  m.rel_l2 = std::sqrt(areas.dot(diff.cwiseAbs2())) / truth_l2;
  m.rel_linf = diff.cwiseAbs().maxCoeff() / truth_linf;

  for (const auto& region : regions) {
    RegionError row;
    row.name = region.name;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      if (!region.contains(mesh.centroid(e))) continue;
      const auto idx = static_cast<Eigen::Index>(e);
      row.area += mesh.area(e);
      row.mean_error += mesh.area(e) * diff[idx];
      row.mean_abs_error += mesh.area(e) * std::abs(diff[idx]);
    }
    if (row.area > 0.0) {
      row.mean_error /= row.area;
      row.mean_abs_error /= row.area;
    }
    m.regions.push_back(row);
  }
  return m;
}

namespace {

std::function<bool(Point2)> disk(double cx, double cy, double r) {
  return [=](Point2 p) { return std::hypot(p.x - cx, p.y - cy) < r; };
}

}  // namespace

std::vector<Region> example2_regions() {
  const auto d1 = disk(0.5, 0.0, 0.2), d2 = disk(-0.5, 0.0, 0.2);
  const auto d3 = disk(0.0, 0.5, 0.2), d4 = disk(0.0, -0.5, 0.2);
  return {{"D1", d1},
          {"D2", d2},
          {"D3", d3},
          {"D4", d4},
          {"D1+D2", [=](Point2 p) { return d1(p) || d2(p); }},
          {"D3+D4", [=](Point2 p) { return d3(p) || d4(p); }},
          {"background", [=](Point2 p) { return !(d1(p) || d2(p) || d3(p) || d4(p)); }}};
}

std::vector<Region> example1_regions() {
  auto square = [](Point2 p) { return std::max(std::abs(p.x), std::abs(p.y)) < 0.5; };
  return {{"omega", disk(0.0, 0.0, 0.5)},
          {"square", square},
          {"outside_square", [=](Point2 p) { return !square(p); }}};
}

void write_region_csv(std::ostream& out, const std::vector<RegionError>& rows) {
  out << "region,area,mean_error,mean_abs_error\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.name << ',' << r.area << ',' << r.mean_error << ',' << r.mean_abs_error << '\n';
}

}  // namespace optitomo
