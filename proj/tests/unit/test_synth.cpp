#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "optitomo/errors.hpp"
#include "optitomo/synth.hpp"

using namespace optitomo;

namespace {

ExperimentSpec small_spec(double noise) {
  ExperimentSpec spec = example1_spec();
  spec.fine_elements = 1016;
  spec.coarse_elements = 254;
  spec.noise_level = noise;
  spec.seed = 123;
  return spec;
}

}  // namespace

TEST_CASE("first example: truth and currents") {
  const ExperimentSpec spec = example1_spec();
  CHECK(spec.fine_elements == 4064);
  CHECK(spec.coarse_elements == 1016);
  REQUIRE(spec.fluxes.size() == 5);
  CHECK(parse_boundary(spec.fluxes[2])(std::numbers::pi / 2) == doctest::Approx(9.0));
  const auto q = parse_coefficient(spec.q_truth);
  CHECK(q({0.0, 0.0}) == doctest::Approx(2.0));
  CHECK(q({0.7, 0.0}) == 1.0);
  CHECK(parse_coefficient(spec.sigma_truth)({0.0, 0.0}) == 2.0);
  CHECK(spec.mode == InversionMode::q_only);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-0.7, 0.7);
  for (int i = 0; i < 200; ++i) {
    const Point2 p{coord(rng), coord(rng)};
    const bool in_square = std::abs(p.x) < 0.5 && std::abs(p.y) < 0.5;
    const double expected = 1.0 + (in_square ? std::cos(std::numbers::pi * p.x) * std::cos(std::numbers::pi * p.y) : 0.0);
    CHECK(q(p) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(parse_coefficient(spec.sigma_truth)(p) == (std::hypot(p.x, p.y) < 0.5 ? 2.0 : 1.0));
  }
}

TEST_CASE("second example: four inclusions and initialisation") {
  const ExperimentSpec spec = example2_spec();
  REQUIRE(spec.fluxes.size() == 5);
  CHECK(parse_boundary(spec.fluxes[1])(std::numbers::pi / 4) == doctest::Approx(1.0));
  const auto sigma = parse_coefficient(spec.sigma_truth);
  const auto q = parse_coefficient(spec.q_truth);
  CHECK(sigma({0.5, 0.0}) == 2.0);
  CHECK(q({0.0, -0.5}) == 4.0);
  CHECK(q({0.0, 0.5}) == 3.0);
  CHECK(sigma({0.0, 0.0}) == 1.0);
  CHECK(parse_coefficient(spec.sigma_init)({0.5, 0.0}) == doctest::Approx(1.1));
  CHECK(parse_coefficient(spec.q_init)({0.0, -0.5}) == doctest::Approx(1.2));
  CHECK(spec.mode == InversionMode::joint);
}

TEST_CASE("noise-free measurements are the transferred fine traces") {
  const ExperimentSpec spec = small_spec(0.0);
  const auto fine = generate_disk_mesh(spec.fine_elements);
  const auto coarse = generate_disk_mesh(spec.coarse_elements);
  const auto meas = make_measurements(spec, fine, coarse);
  const auto traces = fine_traces(spec, fine);
  REQUIRE(meas.pairs.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(meas.pairs[k].f.values == transfer_boundary_trace(*fine, traces[k], coarse).values);
    CHECK(meas.pairs[k].g.values == sample_boundary(coarse, parse_boundary(spec.fluxes[k])).values);
  }
}

TEST_CASE("noise is added on the fine mesh with standard deviation eps ||f||_inf") {
  const ExperimentSpec spec = small_spec(0.05);
  const auto fine = generate_disk_mesh(spec.fine_elements);
  const auto coarse = generate_disk_mesh(spec.coarse_elements);
  const auto meas = make_measurements(spec, fine, coarse);
  const auto traces = fine_traces(spec, fine);
  for (std::size_t k = 0; k < traces.size(); ++k) {
    BoundaryTrace noisy = traces[k];
    const double sd = 0.05 * noisy.values.cwiseAbs().maxCoeff();
    const auto z = gaussian_stream(spec.seed, k + 1, static_cast<std::size_t>(noisy.values.size()));
    for (Eigen::Index i = 0; i < noisy.values.size(); ++i) noisy.values[i] += sd * z[static_cast<std::size_t>(i)];
    CHECK((meas.pairs[k].f.values - transfer_boundary_trace(*fine, noisy, coarse).values).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("normal deviates: moments over 10^4 replicates of one node") {
  const double sd = 0.05 * 11.0;  // eps ||f||_inf for a trace of sup norm 11
  double sum = 0.0, sum_sq = 0.0;
  const int n = 10000;
  for (int rep = 0; rep < n; ++rep) {
    const double x = sd * gaussian_stream(static_cast<std::uint64_t>(rep), 1, 8)[3];
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(std - sd) <= 0.05 * sd);
  CHECK(std::abs(mean) <= 4.0 * sd / std::sqrt(n));

  const auto long_stream = gaussian_stream(9, 2, 20000);
  double s2 = 0.0;
  for (double v : long_stream) s2 += v * v;
  CHECK(std::sqrt(s2 / 20000.0) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("noise streams are reproducible and independent per current") {
  CHECK(gaussian_stream(5, 1, 100) == gaussian_stream(5, 1, 100));
  CHECK(gaussian_stream(5, 1, 100) != gaussian_stream(5, 2, 100));
  CHECK(gaussian_stream(5, 1, 100) != gaussian_stream(6, 1, 100));
  // Prefixes agree: the stream does not depend on its length.
  const auto a = gaussian_stream(5, 1, 7);
  const auto b = gaussian_stream(5, 1, 100);
  CHECK(std::equal(a.begin(), a.end(), b.begin()));

  const ExperimentSpec spec = small_spec(0.05);
  const auto fine = generate_disk_mesh(spec.fine_elements);
  const auto coarse = generate_disk_mesh(spec.coarse_elements);
  const auto m1 = make_measurements(spec, fine, coarse);
  const auto m2 = make_measurements(spec, fine, coarse);
  for (std::size_t k = 0; k < m1.pairs.size(); ++k) CHECK(m1.pairs[k].f.values == m2.pairs[k].f.values);
}

TEST_CASE("experiment specs are validated") {
  ExperimentSpec spec = small_spec(0.0);
  spec.fine_elements = 100;
  CHECK_THROWS_AS(build_experiment(spec), InvalidInput);
  spec = small_spec(-0.1);
  CHECK_THROWS_AS(build_experiment(spec), InvalidInput);
  spec = small_spec(0.0);
  spec.fluxes.clear();
  CHECK_THROWS_AS(build_experiment(spec), InvalidInput);
}

TEST_CASE("error metrics") {
  const auto mesh = generate_disk_mesh(254);
  const auto truth = PiecewiseConstantField::constant(mesh, 1.0);
  const auto same = error_metrics(truth, truth, example1_regions());
  CHECK(same.rel_l2 == 0.0);
  CHECK(same.rel_linf == 0.0);
  for (const auto& r : same.regions) {
    CHECK(r.mean_error == 0.0);
    CHECK(r.mean_abs_error == 0.0);
  }
  CHECK(error_metrics(PiecewiseConstantField::constant(mesh, 2.0), truth).rel_linf == doctest::Approx(1.0));
  const auto q = sample_coefficient(mesh, parse_coefficient("example2_q"));
  CHECK(error_metrics(PiecewiseConstantField(mesh, 2.0 * q.values), q).rel_l2 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(error_metrics(truth, PiecewiseConstantField::constant(generate_disk_mesh(254), 1.0)), InvalidInput);
}

TEST_CASE("per-region table of the second example") {
  const auto mesh = generate_disk_mesh(1016);
  const auto q = sample_coefficient(mesh, parse_coefficient("example2_q"));
  PiecewiseConstantField rec = q;
  const auto regions = example2_regions();
  // Perturb D3 only.
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    if (regions[2].contains(mesh->centroid(e))) rec.values[static_cast<Eigen::Index>(e)] += 0.5;
  }
  const auto m = error_metrics(rec, q, regions);
  REQUIRE(m.regions.size() == regions.size());
  for (const auto& r : m.regions) {
    CAPTURE(r.name);
    CHECK(r.area > 0.0);
    if (r.name == "D3") CHECK(r.mean_error == doctest::Approx(0.5));
    if (r.name == "D1" || r.name == "D2" || r.name == "D1+D2" || r.name == "D4") CHECK(r.mean_abs_error == 0.0);
    if (r.name == "D3+D4") CHECK(r.mean_error == doctest::Approx(0.25).epsilon(0.1));
  }
  std::ostringstream csv;
  write_region_csv(csv, m.regions);
  CHECK(csv.str().rfind("region,area,mean_error,mean_abs_error\n", 0) == 0);
}
