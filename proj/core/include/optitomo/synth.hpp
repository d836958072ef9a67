#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "optitomo/field.hpp"
#include "optitomo/inversion.hpp"

namespace optitomo {

/// Synthetic experiment: truth coefficients and currents on a fine mesh,
/// inversion on a coarser one.
struct ExperimentSpec {
  std::string name = "custom";
  int fine_elements = 4064;
  int coarse_elements = 1016;
  std::vector<std::string> fluxes;  // boundary descriptors, see parse_boundary
  double noise_level = 0.0;         // epsilon
  std::uint64_t seed = 1;
  std::string sigma_truth = "const:1";
  std::string q_truth = "const:1";
  InversionMode mode = InversionMode::q_only;
  std::string sigma_init = "const:1";  // the known sigma in q-only mode
  std::string q_init = "const:1";

  void validate() const;
};

/// sigma = 2 on the disk of radius 1/2, 1 elsewhere; q = 1 + cos(pi x) cos(pi y)
/// on the square |x|, |y| < 1/2; currents 10 + sin(k theta), k = 1..5.
ExperimentSpec example1_spec();

/// Four disks of radius 0.2: sigma = 2, 3 on D1, D2; q = 3, 4 on D3, D4;
/// currents sin(k theta), k = 1..5; joint reconstruction.
ExperimentSpec example2_spec();

struct Experiment {
  ExperimentSpec spec;
  MeshPtr fine;
  MeshPtr coarse;
  PiecewiseConstantField sigma_truth;  // sampled on the coarse mesh
  PiecewiseConstantField q_truth;
  MeasurementSet measurements;
};

/// Noise-free fine-mesh traces, one per current (no transfer).
std::vector<BoundaryTrace> fine_traces(const ExperimentSpec& spec, const MeshPtr& fine);

/// For each current: fine Neumann solve with the truth, boundary trace, i.i.d.
/// N(0, (eps ||f_k||_inf)^2) per boundary node, transfer to the coarse mesh.
/// Normal deviates come from std::mt19937_64 seeded with seed_seq{seed, k}
/// through a Box-Muller transform, so streams are independent per current and
/// identical across platforms.
MeasurementSet make_measurements(const ExperimentSpec& spec, const MeshPtr& fine, const MeshPtr& coarse);

Experiment build_experiment(const ExperimentSpec& spec);

/// Deterministic standard normal deviates for stream (seed, k).
std::vector<double> gaussian_stream(std::uint64_t seed, std::uint64_t k, std::size_t count);

/// Element-centroid region used for per-region error tables.
struct Region {
  std::string name;
  std::function<bool(Point2)> contains;
};

struct RegionError {
  std::string name;
  double area = 0.0;
  double mean_error = 0.0;      // area-weighted mean of rec - truth
  double mean_abs_error = 0.0;  // area-weighted mean of |rec - truth|
};

struct ErrorMetrics {
  double rel_l2 = 0.0;    // ||rec - truth||_L2 / ||truth||_L2
  double rel_linf = 0.0;  // max |rec - truth| / max |truth|
  std::vector<RegionError> regions;
};

ErrorMetrics error_metrics(const PiecewiseConstantField& rec, const PiecewiseConstantField& truth,
                           const std::vector<Region>& regions = {});

/// D1..D4, D1+D2, D3+D4 and the background of the second example.
std::vector<Region> example2_regions();
/// omega (radius 1/2), the square |x|, |y| < 1/2 and the rest.
std::vector<Region> example1_regions();

/// CSV with header region,area,mean_error,mean_abs_error.
void write_region_csv(std::ostream& out, const std::vector<RegionError>& rows);

}  // namespace optitomo
