#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <sstream>

#include "optitomo/errors.hpp"

namespace optitomo::app {
namespace {

namespace pt = boost::property_tree;

const std::vector<std::string> kKeys = {
    "experiment.name", "experiment.seed", "experiment.mode",
    "mesh.elements", "mesh.refinements", "mesh.fine_elements", "mesh.coarse_elements",
    "truth.sigma", "truth.q",
    "fluxes.currents",
    "noise.level",
    "forward.flux",
    "optimizer.max_iter", "optimizer.gradient_tolerance", "optimizer.relative_tolerance", "optimizer.armijo_c1",
    "optimizer.backtrack", "optimizer.max_backtracks", "optimizer.dense_limit", "optimizer.memory",
    "optimizer.area_scaling", "optimizer.rescale_initial", "optimizer.q_lower", "optimizer.q_upper",
    "optimizer.sigma_lower", "optimizer.sigma_upper", "optimizer.rho", "optimizer.balance",
    "optimizer.beta_balance", "optimizer.rho_init", "optimizer.balance_tolerance", "optimizer.balance_max_outer",
    "optimizer.sigma_init", "optimizer.q_init",
    "lipschitz.elements", "lipschitz.omega_radius", "lipschitz.cells", "lipschitz.a", "lipschitz.b",
    "lipschitz.sigma_out", "lipschitz.sigma_in", "lipschitz.max_iter", "lipschitz.certificate_target",
    "lipschitz.samples",
};

ConfigStore from_tree(const pt::ptree& tree) {
  ConfigStore store;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw InvalidInput("config entry '" + section + "' is outside a section");
    for (const auto& [key, value] : body) store.set(section + "." + key, value.get_value<std::string>());
  }
  return store;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double to_double(const ConfigStore& store, const std::string& key) {
  const std::string text = trim(store.get(key));
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidInput("config key " + key + ": '" + text + "' is not a number");
  }
  return v;
}

long long to_integer(const ConfigStore& store, const std::string& key) {
  const std::string text = trim(store.get(key));
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidInput("config key " + key + ": '" + text + "' is not an integer");
  }
  return v;
}

bool to_bool(const ConfigStore& store, const std::string& key) {
  const std::string text = trim(store.get(key));
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InvalidInput("config key " + key + ": '" + text + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename Fn>
void maybe(const ConfigStore& store, const std::string& key, T& target, Fn convert) {
  if (store.has(key)) target = static_cast<T>(convert(store, key));
}

std::string as_string(const ConfigStore& store, const std::string& key) { return trim(store.get(key)); }

}  // namespace

ConfigStore ConfigStore::from_file(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput("cannot read config '" + path + "': " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return from_tree(tree);
}

ConfigStore ConfigStore::from_string(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput("cannot parse config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return from_tree(tree);
}

void ConfigStore::set(const std::string& key, const std::string& value) {
  if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) throw InvalidInput("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::vector<std::string>& ConfigStore::known_keys() { return kKeys; }

RunConfig resolve(const ConfigStore& store, const std::string& preset) {
  RunConfig rc;
  rc.experiment = store.has("experiment.name") ? as_string(store, "experiment.name") : preset;
  if (rc.experiment.empty()) rc.experiment = "custom";
  if (rc.experiment == "example1") {
    rc.spec = example1_spec();
    rc.inversion.q_lower = 0.1;
    rc.inversion.q_upper = 5.0;
  } else if (rc.experiment == "example2") {
    rc.spec = example2_spec();
    rc.inversion.q_lower = 0.1;
    rc.inversion.q_upper = 10.0;
    rc.inversion.sigma_lower = 0.1;
    rc.inversion.sigma_upper = 10.0;
  } else if (rc.experiment == "custom") {
    rc.spec.fluxes = {"cos:1"};
  } else {
    throw InvalidInput("experiment.name must be example1, example2 or custom");
  }

  maybe(store, "experiment.seed", rc.seed, to_integer);
  rc.spec.seed = rc.seed;
  if (store.has("experiment.mode")) rc.spec.mode = parse_mode(as_string(store, "experiment.mode"));

  maybe(store, "mesh.elements", rc.elements, to_integer);
  maybe(store, "mesh.refinements", rc.refinements, to_integer);
  maybe(store, "mesh.fine_elements", rc.spec.fine_elements, to_integer);
  maybe(store, "mesh.coarse_elements", rc.spec.coarse_elements, to_integer);
  if (store.has("truth.sigma")) rc.spec.sigma_truth = as_string(store, "truth.sigma");
  if (store.has("truth.q")) rc.spec.q_truth = as_string(store, "truth.q");
  if (store.has("fluxes.currents")) rc.spec.fluxes = split_list(store.get("fluxes.currents"));
  maybe(store, "noise.level", rc.spec.noise_level, to_double);
  if (store.has("forward.flux")) rc.forward_flux = as_string(store, "forward.flux");

  InversionConfig& inv = rc.inversion;
  inv.mode = rc.spec.mode;
  BfgsOptions& bfgs = inv.bfgs;
  maybe(store, "optimizer.max_iter", bfgs.max_iter, to_integer);
  maybe(store, "optimizer.gradient_tolerance", bfgs.gradient_tolerance, to_double);
  maybe(store, "optimizer.relative_tolerance", bfgs.relative_tolerance, to_double);
  maybe(store, "optimizer.armijo_c1", bfgs.armijo_c1, to_double);
  maybe(store, "optimizer.backtrack", bfgs.backtrack, to_double);
  maybe(store, "optimizer.max_backtracks", bfgs.max_backtracks, to_integer);
  maybe(store, "optimizer.dense_limit", bfgs.dense_limit, to_integer);
  maybe(store, "optimizer.memory", bfgs.memory, to_integer);
  maybe(store, "optimizer.rescale_initial", bfgs.rescale_initial, to_bool);
  maybe(store, "optimizer.area_scaling", inv.area_scaling, to_bool);
  maybe(store, "optimizer.q_lower", inv.q_lower, to_double);
  maybe(store, "optimizer.q_upper", inv.q_upper, to_double);
  maybe(store, "optimizer.sigma_lower", inv.sigma_lower, to_double);
  maybe(store, "optimizer.sigma_upper", inv.sigma_upper, to_double);
  maybe(store, "optimizer.rho", inv.rho, to_double);
  maybe(store, "optimizer.balance", rc.balance, to_bool);
  maybe(store, "optimizer.beta_balance", inv.beta_balance, to_double);
  maybe(store, "optimizer.rho_init", inv.rho_init, to_double);
  maybe(store, "optimizer.balance_tolerance", inv.balance_tolerance, to_double);
  maybe(store, "optimizer.balance_max_outer", inv.balance_max_outer, to_integer);
  if (store.has("optimizer.sigma_init")) rc.spec.sigma_init = as_string(store, "optimizer.sigma_init");
  if (store.has("optimizer.q_init")) rc.spec.q_init = as_string(store, "optimizer.q_init");

  LipschitzSettings& lip = rc.lipschitz;
  maybe(store, "lipschitz.elements", lip.elements, to_integer);
  maybe(store, "lipschitz.omega_radius", lip.omega_radius, to_double);
  maybe(store, "lipschitz.cells", lip.cells, to_integer);
  maybe(store, "lipschitz.a", lip.a, to_double);
  maybe(store, "lipschitz.b", lip.b, to_double);
  maybe(store, "lipschitz.sigma_out", lip.sigma_out, to_double);
  maybe(store, "lipschitz.sigma_in", lip.sigma_in, to_double);
  maybe(store, "lipschitz.max_iter", lip.max_iter, to_integer);
  maybe(store, "lipschitz.certificate_target", lip.certificate_target, to_double);
  maybe(store, "lipschitz.samples", lip.samples, to_integer);

  if (rc.elements < 16) throw InvalidInput("mesh.elements must be at least 16");
  if (rc.refinements < 0) throw InvalidInput("mesh.refinements must be nonnegative");
  if (lip.samples < 0) throw InvalidInput("lipschitz.samples must be nonnegative");
  if (!(inv.beta_balance > 1.0)) throw InvalidInput("optimizer.beta_balance must exceed 1");
  return rc;
}

}  // namespace optitomo::app
