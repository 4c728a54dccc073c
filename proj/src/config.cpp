#include "hypoflow/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "hypoflow/random_state.hpp"

namespace hypoflow {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"grid", {"dim", "nx", "nv", "period"}},
      {"model", {"collision", "lambda"}},
      {"entropy", {"family", "p"}},
      {"initial", {"family", "amplitude", "mode", "velocity_coupling", "max_mode", "seed"}},
      {"schedule", {"dt", "t_end", "snapshot_every"}},
      {"output", {"directory", "formats", "save_states"}},
      {"certificate", {"C", "eta", "estimator_starts", "estimator_max_mode"}},
      {"verify", {"states", "mixed_eta", "epsilons", "etas", "delta", "abs_tolerance", "rel_tolerance", "speed_scale",
                  "transport_times"}},
      {"fit", {"functional", "t_start", "t_end", "trajectory"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::optional<double> real(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    return parse_real(*r, section + "." + key);
  }

  std::optional<long long> integer(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(r->data(), r->data() + r->size(), v);
    if (ec != std::errc() || ptr != r->data() + r->size()) throw ConfigError(section + "." + key + ": expected an integer, got '" + *r + "'");
    return v;
  }

  std::optional<bool> boolean(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    if (*r == "true" || *r == "1" || *r == "yes") return true;
    if (*r == "false" || *r == "0" || *r == "no") return false;
    throw ConfigError(section + "." + key + ": expected a boolean, got '" + *r + "'");
  }

  std::optional<std::vector<double>> reals(const std::string& section, const std::string& key) const {
    const auto r = raw(section, key);
    if (!r) return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(*r);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(trim(item), section + "." + key));
    if (out.empty()) throw ConfigError(section + "." + key + ": empty list");
    return out;
  }

 private:
  static double parse_real(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ConfigError(where + ": expected a number, got '" + s + "'");
    }
    return v;
  }

  const pt::ptree& tree_;
};

void check_schema(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty() && body.empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
}

void check_positive_list(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!(x > 0.0)) throw ConfigError(std::string(what) + ": entries must be positive");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_schema(tree);
  const Reader r(tree);
  RunConfig c;

  if (auto v = r.integer("grid", "dim")) c.grid.dim = static_cast<int>(*v);
  if (auto v = r.integer("grid", "nx")) c.grid.nx = static_cast<int>(*v);
  if (auto v = r.integer("grid", "nv")) c.grid.nv = static_cast<int>(*v);
  if (auto v = r.real("grid", "period")) {
    if (*v != 1.0) throw ConfigError("grid.period: only period 1 is supported");
  }
  c.grid.validate();

  const std::string collision = r.raw("model", "collision").value_or("bgk");
  const std::string family = r.raw("entropy", "family").value_or("boltzmann");
  if (family == "boltzmann") {
    if (r.raw("entropy", "p")) throw ConfigError("entropy.p given for the Boltzmann family");
    c.p = PIndex::log_entropy();
  } else if (family == "p") {
    const auto p = r.real("entropy", "p");
    if (!p) throw ConfigError("entropy.p is required for the p family");
    c.p = PIndex::power(*p);
  } else {
    throw ConfigError("entropy.family: unknown value '" + family + "'");
  }
  if (collision == "bgk") {
    const auto lambda = r.real("model", "lambda");
    if (!lambda) throw ConfigError("model.lambda is required for BGK");
    if (!(*lambda > 0.0)) throw ConfigError("model.lambda must be positive");
    c.lambda = *lambda;
    c.model = c.p.boltzmann ? Model::BgkBoltzmann : Model::BgkP;
  } else if (collision == "fokker_planck") {
    if (r.raw("model", "lambda")) throw ConfigError("model.lambda does not apply to Fokker-Planck");
    if (c.p.boltzmann) throw ConfigError("Fokker-Planck runs need entropy.family = p");
    c.lambda = 0.0;
    c.model = Model::FokkerPlanckP;
  } else {
    throw ConfigError("model.collision: unknown value '" + collision + "'");
  }

  InitialData& in = c.initial;
  in.family = r.raw("initial", "family").value_or(in.family);
  if (in.family != "equilibrium" && in.family != "cosine" && in.family != "velocity" && in.family != "random") {
    throw ConfigError("initial.family: unknown value '" + in.family + "'");
  }
  if (auto v = r.real("initial", "amplitude")) in.amplitude = *v;
  if (auto v = r.integer("initial", "mode")) in.mode = static_cast<int>(*v);
  if (auto v = r.real("initial", "velocity_coupling")) in.velocity_coupling = *v;
  if (auto v = r.integer("initial", "max_mode")) in.max_mode = static_cast<int>(*v);
  if (auto v = r.integer("initial", "seed")) {
    if (*v < 0) throw ConfigError("initial.seed must be non-negative");
    in.seed = static_cast<std::uint64_t>(*v);
    in.seed_given = true;
  }
  if (in.mode < 1 || 2 * in.mode >= c.grid.nx) throw ConfigError("initial.mode out of range for nx");
  if (in.max_mode < 1 || 2 * in.max_mode >= c.grid.nx) throw ConfigError("initial.max_mode out of range for nx");
  if (!(in.amplitude >= 0.0)) throw ConfigError("initial.amplitude must be non-negative");

  c.schedule.collision = c.collision();
  c.schedule.dt = r.real("schedule", "dt").value_or(Schedule::default_dt(c.schedule.collision));
  if (auto v = r.real("schedule", "t_end")) c.schedule.t_end = *v;
  if (auto v = r.integer("schedule", "snapshot_every")) c.schedule.snapshot_every = static_cast<int>(*v);
  c.schedule.validate();

  if (auto v = r.raw("output", "directory")) c.output.directory = *v;
  if (auto v = r.raw("output", "formats")) {
    c.output.csv = c.output.json = false;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item == "csv") c.output.csv = true;
      else if (item == "json") c.output.json = true;
      else throw ConfigError("output.formats: unknown format '" + item + "'");
    }
  }
  if (auto v = r.boolean("output", "save_states")) c.output.save_states = *v;

  if (auto v = r.real("certificate", "C")) {
    if (!(*v > 0.0)) throw ConfigError("certificate.C must be positive");
    c.certificate.C = *v;
  }
  if (auto v = r.real("certificate", "eta")) {
    if (!(*v > 0.0)) throw ConfigError("certificate.eta must be positive");
    if (c.model == Model::FokkerPlanckP) throw ConfigError("certificate.eta does not apply to Fokker-Planck");
    c.certificate.eta = *v;
  }
  if (auto v = r.integer("certificate", "estimator_starts")) c.certificate.estimator_starts = static_cast<int>(*v);
  if (auto v = r.integer("certificate", "estimator_max_mode")) c.certificate.estimator_max_mode = static_cast<int>(*v);
  if (c.certificate.estimator_starts < 1) throw ConfigError("certificate.estimator_starts must be >= 1");
  if (c.certificate.estimator_max_mode < 1) throw ConfigError("certificate.estimator_max_mode must be >= 1");

  VerifyOptions& vo = c.verify;
  if (auto v = r.integer("verify", "states")) vo.states = static_cast<int>(*v);
  if (vo.states < 1) throw ConfigError("verify.states must be >= 1");
  if (auto v = r.real("verify", "mixed_eta")) vo.mixed_eta = *v;
  if (auto v = r.reals("verify", "epsilons")) vo.epsilons = *v;
  if (auto v = r.reals("verify", "etas")) vo.etas = *v;
  if (auto v = r.real("verify", "delta")) vo.delta = *v;
  if (auto v = r.real("verify", "abs_tolerance")) vo.abs_tolerance = *v;
  if (auto v = r.real("verify", "rel_tolerance")) vo.rel_tolerance = *v;
  if (auto v = r.real("verify", "speed_scale")) vo.speed_scale = *v;
  if (auto v = r.reals("verify", "transport_times")) vo.transport_times = *v;
  check_positive_list(vo.epsilons, "verify.epsilons");
  check_positive_list(vo.etas, "verify.etas");
  if (vo.delta && !(*vo.delta > 0.0)) throw ConfigError("verify.delta must be positive");
  if (!(vo.abs_tolerance > 0.0) || !(vo.rel_tolerance >= 0.0)) throw ConfigError("verify tolerances must be positive");

  FitOptions& fo = c.fit;
  if (auto v = r.raw("fit", "functional")) fo.functional = *v;
  if (auto v = r.real("fit", "t_start")) fo.t_start = *v;
  if (auto v = r.real("fit", "t_end")) fo.t_end = *v;
  if (auto v = r.raw("fit", "trajectory")) fo.trajectory = *v;
  if (!(fo.t_end > fo.t_start)) throw ConfigError("fit window is empty");
  if (fo.functional != "composite" && fo.functional != "fisher" && fo.functional != "decay_lhs" &&
      !functional_from_string(fo.functional)) {
    throw ConfigError("fit.functional: unknown functional '" + fo.functional + "'");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["grid"] = {{"dim", c.grid.dim}, {"nx", c.grid.nx}, {"nv", c.grid.nv}, {"period", c.grid.period}};
  j["model"] = {{"model", to_string(c.model)}, {"lambda", c.lambda}};
  j["entropy"] = {{"label", c.p.label()}};
  j["initial"] = {{"family", c.initial.family},       {"amplitude", c.initial.amplitude},
                  {"mode", c.initial.mode},           {"velocity_coupling", c.initial.velocity_coupling},
                  {"max_mode", c.initial.max_mode},   {"seed", c.initial.seed}};
  j["schedule"] = {{"dt", c.schedule.dt}, {"t_end", c.schedule.t_end}, {"snapshot_every", c.schedule.snapshot_every}};
  j["certificate"] = {{"C", c.certificate.C ? nlohmann::json(*c.certificate.C) : nlohmann::json()},
                      {"eta", c.certificate.eta ? nlohmann::json(*c.certificate.eta) : nlohmann::json()},
                      {"estimator_starts", c.certificate.estimator_starts},
                      {"estimator_max_mode", c.certificate.estimator_max_mode}};
  const VerifyOptions& v = c.verify;
  j["verify"] = {{"states", v.states},
                 {"mixed_eta", v.mixed_eta},
                 {"epsilons", v.epsilons},
                 {"etas", v.etas},
                 {"delta", v.delta ? nlohmann::json(*v.delta) : nlohmann::json()},
                 {"abs_tolerance", v.abs_tolerance},
                 {"rel_tolerance", v.rel_tolerance},
                 {"speed_scale", v.speed_scale},
                 {"transport_times", v.transport_times}};
  j["fit"] = {{"functional", c.fit.functional},
              {"t_start", c.fit.t_start},
              {"t_end", c.fit.t_end},
              {"trajectory", c.fit.trajectory}};
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = config_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

State<double> initial_state(const RunConfig& cfg, GridPtr<double> grid) {
  const InitialData& in = cfg.initial;
  const double two_pi = 2.0 * std::numbers::pi;
  Field<double> h;
  if (in.family == "equilibrium") {
    h = Field<double>::Ones(grid->num_x(), grid->num_v());
  } else if (in.family == "cosine") {
    h = sample(*grid, [&](const auto& x, const auto& v) {
      const double shape = 1.0 + in.velocity_coupling * v[0] / std::sqrt(1.0 + v[0] * v[0]);
      return 1.0 + in.amplitude * std::cos(two_pi * in.mode * x[0]) * shape;
    });
  } else if (in.family == "velocity") {
    h = sample(*grid, [&](const auto&, const auto& v) { return 1.0 + in.amplitude * v[0] / std::sqrt(1.0 + v[0] * v[0]); });
  } else {
    std::mt19937_64 rng(in.seed);
    RandomStateOptions opt;
    opt.amplitude = in.amplitude;
    opt.max_mode = in.max_mode;
    if (!(in.amplitude < 1.0)) throw ConfigError("initial.amplitude must be < 1 for random data");
    State<double> s = random_state(grid, rng, opt);
    if (s.h.minCoeff() < kMinInitialDensity) throw ConfigError("initial data falls below 0.1");
    return s;
  }
  if (h.minCoeff() < kMinInitialDensity) throw ConfigError("initial data falls below 0.1");
  State<double> s = normalized_state<double>(std::move(grid), std::move(h), 0.0);
  if (s.h.minCoeff() < kMinInitialDensity) throw ConfigError("initial data falls below 0.1");
  return s;
}

}  // namespace hypoflow
