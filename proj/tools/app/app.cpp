#include "app.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "optitomo/errors.hpp"
#include "optitomo/fem.hpp"
#include "optitomo/locpot.hpp"
#include "optitomo/ntd.hpp"
#include "optitomo/parallel.hpp"

namespace optitomo::app {
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<unsigned long long> seed;
  int threads = 1;
  std::string out = "optitomo_out";
};

struct Context {
  RunConfig rc;
  fs::path out_dir;
  int threads = 1;
  RunManifest manifest;
  std::ostream& log;

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream file(out_dir / name, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + (out_dir / name).string() + " for writing");
    body(file);
    file.close();
    if (!file) throw std::runtime_error("failed writing " + (out_dir / name).string());
    manifest.add_output(name);
  }
};

MeshPtr build_mesh(int elements, int refinements) {
  MeshPtr mesh = generate_disk_mesh(elements);
  for (int i = 0; i < refinements; ++i) mesh = refine_uniform(*mesh);
  return mesh;
}

void cmd_mesh(Context& ctx) {
  const MeshPtr mesh = build_mesh(ctx.rc.elements, ctx.rc.refinements);
  ctx.write("mesh.txt", [&](std::ostream& os) { write_mesh(os, *mesh); });
  auto& r = ctx.manifest.results();
  r["elements"] = mesh->num_elements();
  r["nodes"] = mesh->num_nodes();
  r["boundary_nodes"] = mesh->num_boundary_nodes();
  r["total_area"] = mesh->total_area();
  ctx.log << "mesh: " << mesh->num_elements() << " elements, " << mesh->num_nodes() << " nodes, "
          << mesh->num_boundary_nodes() << " boundary nodes\n";
}

void cmd_forward(Context& ctx) {
  const MeshPtr mesh = build_mesh(ctx.rc.elements, ctx.rc.refinements);
  const auto sigma = sample_coefficient(mesh, parse_coefficient(ctx.rc.spec.sigma_truth));
  const auto q = sample_coefficient(mesh, parse_coefficient(ctx.rc.spec.q_truth));
  const AssembledSystem sys = assemble(mesh, sigma, q);
  const BoundaryTrace g = sample_boundary(mesh, parse_boundary(ctx.rc.forward_flux));
  const NodalField u = solve_neumann(sys, g);
  const BoundaryTrace trace = restrict_to_boundary(u);

  ctx.write("solution.csv", [&](std::ostream& os) { write_nodal_csv(os, u); });
  ctx.write("trace.csv", [&](std::ostream& os) { write_trace_csv(os, trace); });
  ctx.write("solution.pgm", [&](std::ostream& os) {
    write_pgm(os, PiecewiseConstantField(mesh, element_means(*mesh, u.values)));
  });
  const double e = energy(sys, u.values);
  const double work = boundary_inner(g.values, trace.values, boundary_mass_matrix(*mesh));
  auto& r = ctx.manifest.results();
  r["elements"] = mesh->num_elements();
  r["boundary_nodes"] = mesh->num_boundary_nodes();
  r["energy"] = e;
  r["energy_identity_defect"] = std::abs(e - work) / std::max(std::abs(e), 1e-300);
  ctx.log << "forward: energy " << e << ", trace length " << trace.values.size() << '\n';
}

void cmd_ntd(Context& ctx) {
  const MeshPtr mesh = build_mesh(ctx.rc.elements, ctx.rc.refinements);
  const auto sigma = sample_coefficient(mesh, parse_coefficient(ctx.rc.spec.sigma_truth));
  const auto q = sample_coefficient(mesh, parse_coefficient(ctx.rc.spec.q_truth));
  const NtDMatrix ntd = build_ntd(mesh, sigma, q, ctx.threads);
  ctx.write("ntd.csv", [&](std::ostream& os) { write_ntd_csv(os, ntd); });
  const double defect = m_symmetry_defect(ntd);
  const double rq = rayleigh_quotient(ntd, sample_boundary(mesh, parse_boundary("cos:1")));
  auto& r = ctx.manifest.results();
  r["boundary_nodes"] = mesh->num_boundary_nodes();
  r["m_symmetry_defect"] = defect;
  r["rayleigh_cos1"] = rq;
  ctx.log << "ntd: n_b " << mesh->num_boundary_nodes() << ", M-symmetry defect " << defect << '\n';
}

void cmd_lipschitz(Context& ctx) {
  const LipschitzSettings& s = ctx.rc.lipschitz;
  const MeshPtr mesh = generate_disk_mesh(s.elements);
  ProbingSetup setup =
      make_probing_setup(mesh, subdomain_partition(*mesh, s.omega_radius, s.cells), s.a, s.b, s.sigma_out, s.sigma_in);
  setup.max_iter = s.max_iter;
  setup.certificate_target = s.certificate_target;

  const LipschitzResult result = lipschitz_constant(setup, ctx.threads);
  const auto samples = sample_stability(setup, result.stability_constant, s.samples, ctx.rc.seed, ctx.threads);
  int violations = 0;
  for (const auto& smp : samples) violations += smp.violated ? 1 : 0;
  double min_beta = std::numeric_limits<double>::infinity();
  int max_cg = 0;
  for (const auto& c : result.currents) {
    min_beta = std::min(min_beta, c.beta);
    max_cg = std::max(max_cg, c.cg_iterations);
  }

  ctx.write("certificates.csv", [&](std::ostream& os) { write_certificates_csv(os, result); });
  ctx.write("stability_samples.csv", [&](std::ostream& os) { write_stability_csv(os, samples); });
  ctx.write("lipschitz_report.csv", [&](std::ostream& os) {
    os << "metric,value\n" << std::setprecision(17);
    os << "K," << setup.K << "\ncurrents," << result.currents.size() << "\nmin_beta," << min_beta
       << "\nmax_cg_iterations," << max_cg << "\nL," << result.L << "\nstability_constant,"
       << result.stability_constant << "\nsamples," << samples.size() << "\nviolations," << violations << '\n';
  });
  auto& r = ctx.manifest.results();
  r["K"] = setup.K;
  r["currents"] = result.currents.size();
  r["min_beta"] = min_beta;
  r["L"] = result.L;
  r["stability_constant"] = result.stability_constant;
  r["samples"] = samples.size();
  r["violations"] = violations;
  ctx.log << "lipschitz: " << result.currents.size() << " certificates (min beta " << min_beta << "), L " << result.L
          << ", violations " << violations << "/" << samples.size() << '\n';
}

PiecewiseConstantField initial_field(const MeshPtr& mesh, const std::string& descriptor, double lower, double upper) {
  PiecewiseConstantField f = sample_coefficient(mesh, parse_coefficient(descriptor), false);
  f.values = f.values.cwiseMax(lower).cwiseMin(upper);
  return f;
}

void write_field_outputs(Context& ctx, const std::string& stem, const PiecewiseConstantField& field) {
  ctx.write(stem + ".csv", [&](std::ostream& os) { write_element_csv(os, field); });
  ctx.write(stem + ".pgm", [&](std::ostream& os) { write_pgm(os, field); });
}

void cmd_reconstruct(Context& ctx) {
  RunConfig& rc = ctx.rc;
  const Experiment ex = build_experiment(rc.spec);
  InversionConfig inv = rc.inversion;
  inv.threads = ctx.threads;
  const bool joint = inv.mode == InversionMode::joint;
  // In q-only mode sigma is known and not clipped.
  inv.sigma_init = joint ? initial_field(ex.coarse, rc.spec.sigma_init, inv.sigma_lower, inv.sigma_upper)
                         : sample_coefficient(ex.coarse, parse_coefficient(rc.spec.sigma_init));
  inv.q_init = initial_field(ex.coarse, rc.spec.q_init, inv.q_lower, inv.q_upper);

  Reconstruction rec;
  auto& r = ctx.manifest.results();
  if (rc.balance) {
    BalanceResult bal = balancing_rho(ex.measurements, inv);
    ctx.write("balance_history.csv", [&](std::ostream& os) {
      os << "step,rho,F,penalty_integral,next_rho,bfgs_iterations\n" << std::setprecision(17);
      for (std::size_t i = 0; i < bal.history.size(); ++i) {
        const auto& h = bal.history[i];
        os << i << ',' << h.rho << ',' << h.data_fit << ',' << h.penalty_integral << ',' << h.next_rho << ','
           << h.bfgs_iterations << '\n';
      }
    });
    r["rho"] = bal.rho;
    r["balance_residual"] = bal.relative_residual;
    r["balance_converged"] = bal.converged;
    r["balance_degenerate"] = bal.degenerate;
    r["balance_steps"] = bal.history.size();
    rec = std::move(bal.reconstruction);
  } else {
    rec = bfgs_minimize(ex.measurements, inv);
    r["rho"] = inv.rho;
  }

  const auto& log = rec.optimizer.log;
  ctx.write("measurements.csv", [&](std::ostream& os) { write_measurements_csv(os, ex.measurements); });
  ctx.write("iteration_log.csv", [&](std::ostream& os) { write_iteration_log(os, log); });
  write_field_outputs(ctx, "q_rec", rec.q);
  write_field_outputs(ctx, "q_true", ex.q_truth);

  const bool example2 = rc.experiment == "example2";
  const auto regions = example2 ? example2_regions() : example1_regions();
  const ErrorMetrics mq = error_metrics(rec.q, ex.q_truth, regions);
  ctx.write("regions_q.csv", [&](std::ostream& os) { write_region_csv(os, mq.regions); });
  ErrorMetrics ms;
  if (joint) {
    write_field_outputs(ctx, "sigma_rec", rec.sigma);
    write_field_outputs(ctx, "sigma_true", ex.sigma_truth);
    ms = error_metrics(rec.sigma, ex.sigma_truth, regions);
    ctx.write("regions_sigma.csv", [&](std::ostream& os) { write_region_csv(os, ms.regions); });
  }
  ctx.write("metrics.csv", [&](std::ostream& os) {
    os << "field,rel_l2,rel_linf\n" << std::setprecision(17) << "q," << mq.rel_l2 << ',' << mq.rel_linf << '\n';
    if (joint) os << "sigma," << ms.rel_l2 << ',' << ms.rel_linf << '\n';
  });

  r["experiment"] = rc.experiment;
  r["mode"] = to_string(inv.mode);
  r["noise_level"] = rc.spec.noise_level;
  r["coarse_elements"] = ex.coarse->num_elements();
  r["fine_elements"] = ex.fine->num_elements();
  r["J0"] = log.front().value;
  r["J_final"] = log.back().value;
  r["F_final"] = rec.terms.data_fit;
  r["iterations"] = log.back().iter;
  r["stop_reason"] = to_string(rec.optimizer.reason);
  r["monotone"] = monotone_descent(log);
  r["q_rel_l2"] = mq.rel_l2;
  if (joint) r["sigma_rel_l2"] = ms.rel_l2;
  ctx.log << rc.experiment << ": J " << log.front().value << " -> " << log.back().value << " in " << log.back().iter
          << " iterations (" << to_string(rec.optimizer.reason) << "), rel_L2(q) " << mq.rel_l2 << '\n';
}

void add_common(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("--config", opts.config, "INI configuration file");
  sub->add_option("--seed", opts.seed, "RNG seed (overrides experiment.seed)");
  sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", opts.out, "output directory (OPTITOMO_OUT overrides)");
  sub->allow_extras();
  sub->footer("Any config entry can be overridden with --section.key=value.");
}

ConfigStore load_store(const CommonOptions& opts, const std::vector<std::string>& extras) {
  ConfigStore store = opts.config.empty() ? ConfigStore{} : ConfigStore::from_file(opts.config);
  for (const auto& arg : extras) {
    const auto eq = arg.find('=');
    if (arg.rfind("--", 0) != 0 || eq == std::string::npos || arg.find('.') > eq) {
      throw InvalidInput("unexpected argument '" + arg + "' (overrides use --section.key=value)");
    }
    store.set(arg.substr(2, eq - 2), arg.substr(eq + 1));
  }
  if (opts.seed) store.set("experiment.seed", std::to_string(*opts.seed));
  return store;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optical tomography toolkit: forward solves, NtD operators, Lipschitz certificates and reconstructions",
               "optitomo"};
  app.require_subcommand(1);
  CommonOptions opts;
  using Command = std::function<void(Context&)>;
  const std::vector<std::tuple<std::string, std::string, std::string, Command>> commands = {
      {"mesh", "generate (and refine) a unit-disk mesh", "", cmd_mesh},
      {"forward", "solve the Neumann problem for one current", "", cmd_forward},
      {"ntd", "assemble the discrete Neumann-to-Dirichlet matrix", "", cmd_ntd},
      {"lipschitz", "localized currents, certificates and the Lipschitz constant", "", cmd_lipschitz},
      {"reconstruct", "synthetic data and Kohn-Vogelius reconstruction", "", cmd_reconstruct},
      {"example1", "absorption reconstruction, first example", "example1", cmd_reconstruct},
      {"example2", "joint diffusion/absorption reconstruction, second example", "example2", cmd_reconstruct},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, preset, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, opts);
    subs.push_back(sub);
  }

  std::vector<std::string> argv_store = args;
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const auto& [name, help, preset, fn] = commands[i];
      const ConfigStore store = load_store(opts, subs[i]->remaining());
      RunConfig rc = resolve(store, preset);
      fs::path out_dir = opts.out;
      if (const char* env = std::getenv("OPTITOMO_OUT"); env && *env) out_dir = env;
      fs::create_directories(out_dir);
      set_default_threads(opts.threads);

      Context ctx{std::move(rc), out_dir, opts.threads, RunManifest(name, out_dir), out};
      if (!opts.config.empty()) {
        ctx.manifest.set_config(opts.config);
        ctx.manifest.add_input(opts.config);
      }
      ctx.manifest.set_seed(ctx.rc.seed);
      fn(ctx);
      ctx.manifest.write(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      return kSuccess;
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace optitomo::app
