#include "dphase/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dphase/errors.hpp"

namespace dphase::config {
namespace {

int line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : -1;
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) throw ConfigError(where + " must be a mapping", line_of(map));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
  }
}

template <class T>
T as(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(what + ": cannot convert '" + YAML::Dump(node) + "'", line_of(node));
  }
}

template <class T>
T get(const YAML::Node& map, const std::string& key, T fallback) {
  const YAML::Node n = map[key];
  if (!n) return fallback;
  return as<T>(n, key);
}

template <class T>
std::vector<T> get_list(const YAML::Node& map, const std::string& key, std::vector<T> fallback) {
  const YAML::Node n = map[key];
  if (!n) return fallback;
  if (!n.IsSequence()) throw ConfigError(key + " must be a list", line_of(n));
  std::vector<T> out;
  for (const auto& item : n) out.push_back(as<T>(item, key));
  return out;
}

Field parse_field(const YAML::Node& node, int dim, const std::string& name) {
  if (node.IsScalar()) return Field::constant(as<double>(node, name));
  check_keys(node,
             {"family", "value", "gradient", "dt", "amplitude", "wave", "phase", "omega", "center", "radius",
              "terms", "decay"},
             name);
  const auto family = get<std::string>(node, "family", "");
  try {
    if (family == "constant") return Field::constant(get<double>(node, "value", 0.0));
    if (family == "affine") {
      return Field::affine(get<double>(node, "value", 0.0), get_list<double>(node, "gradient", {}),
                           get<double>(node, "dt", 0.0));
    }
    if (family == "sinusoidal") {
      return Field::sinusoidal(get<double>(node, "value", 0.0), get<double>(node, "amplitude", 0.0),
                               get_list<double>(node, "wave", {}), get<double>(node, "phase", 0.0),
                               get<double>(node, "omega", 0.0));
    }
    if (family == "bump") {
      return Field::bump(get<double>(node, "value", 0.0), get<double>(node, "amplitude", 0.0),
                         get_list<double>(node, "center", std::vector<double>(static_cast<std::size_t>(dim), 0.5)),
                         get<double>(node, "radius", 0.25));
    }
    if (family == "sine_series") {
      std::vector<SineTerm> terms;
      const YAML::Node list = node["terms"];
      if (!list || !list.IsSequence()) throw ConfigError(name + ": sine_series needs a 'terms' list", line_of(node));
      for (const auto& item : list) {
        check_keys(item, {"mode", "amplitude"}, name + " term");
        SineTerm term{get_list<int>(item, "mode", {}), get<double>(item, "amplitude", 0.0)};
        if (static_cast<int>(term.mode.size()) != dim) {
          throw ConfigError(name + ": mode must have " + std::to_string(dim) + " entries", line_of(item));
        }
        terms.push_back(std::move(term));
      }
      return Field::sine_series(std::move(terms), get<double>(node, "decay", 0.0));
    }
    if (family == "bubble") {
      return Field::bubble(get<double>(node, "amplitude", 1.0), dim, get<double>(node, "decay", 0.0));
    }
  } catch (const ConfigError& e) {
    if (e.line() >= 0) throw;
    throw ConfigError(name + ": " + e.what(), line_of(node));
  } catch (const DomainError& e) {
    throw ConfigError(name + ": " + e.what(), line_of(node));
  }
  throw ConfigError(name + ": unknown field family '" + family + "'", line_of(node));
}

SweepKind parse_kind(const YAML::Node& node) {
  const auto s = as<std::string>(node, "sweep.kind");
  if (s == "none") return SweepKind::kNone;
  if (s == "eps") return SweepKind::kEps;
  if (s == "m") return SweepKind::kM;
  if (s == "stability") return SweepKind::kStability;
  if (s == "random") return SweepKind::kRandom;
  throw ConfigError("sweep.kind must be one of none, eps, m, stability, random", line_of(node));
}

void require(bool ok, const std::string& what, const YAML::Node& node) {
  if (!ok) throw ConfigError(what, line_of(node));
}

}  // namespace

std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::kNone: return "none";
    case SweepKind::kEps: return "eps";
    case SweepKind::kM: return "m";
    case SweepKind::kStability: return "stability";
    case SweepKind::kRandom: return "random";
  }
  return "?";
}

RunConfig parse(const std::string& text, const std::filesystem::path& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : -1);
  }
  if (!root || root.IsNull()) throw ConfigError("empty configuration");
  check_keys(root,
             {"scenario", "dim", "horizon", "alpha", "probe", "p", "q", "a", "b", "initial", "source", "exact",
              "solver", "diagnostics", "sweep", "output", "workers", "seed"},
             "configuration");

  RunConfig cfg;
  cfg.source_path = origin;
  cfg.source_text = text;
  cfg.scenario = get<std::string>(root, "scenario", origin.empty() ? "run" : origin.stem().string());

  auto& data = cfg.data;
  data.space_dim = get<int>(root, "dim", 2);
  require(data.space_dim == 1 || data.space_dim == 2, "dim must be 1 or 2", root["dim"]);
  data.horizon = get<double>(root, "horizon", 0.1);
  require(data.horizon > 0.0, "horizon must be positive", root["horizon"]);
  data.alpha = get<double>(root, "alpha", 1.0);
  require(data.alpha > 0.0, "alpha must be positive", root["alpha"]);
  if (const auto probe = root["probe"]) {
    check_keys(probe, {"space", "time"}, "probe");
    data.lipschitz_probe_resolution = get<int>(probe, "space", data.lipschitz_probe_resolution);
    data.time_probe_resolution = get<int>(probe, "time", data.time_probe_resolution);
    require(data.lipschitz_probe_resolution >= 2 && data.time_probe_resolution >= 2,
            "probe resolutions must be >= 2", probe);
  }
  const int dim = data.space_dim;
  if (root["p"]) data.p = parse_field(root["p"], dim, "p");
  if (root["q"]) data.q = parse_field(root["q"], dim, "q");
  if (root["a"]) data.a = parse_field(root["a"], dim, "a");
  if (root["b"]) data.b = parse_field(root["b"], dim, "b");

  if (const auto ex = root["exact"]) {
    check_keys(ex, {"mode", "amplitude", "decay", "manufactured"}, "exact");
    mms::ModeSolution sol;
    sol.dim = dim;
    const auto mode = get_list<int>(ex, "mode", std::vector<int>(static_cast<std::size_t>(dim), 1));
    require(static_cast<int>(mode.size()) == dim, "exact.mode must have dim entries", ex);
    for (int d = 0; d < dim; ++d) {
      require(mode[static_cast<std::size_t>(d)] >= 1, "exact.mode entries must be >= 1", ex);
      sol.mode[static_cast<std::size_t>(d)] = mode[static_cast<std::size_t>(d)];
    }
    sol.amplitude = get<double>(ex, "amplitude", 1.0);
    const YAML::Node decay = ex["decay"];
    if (decay && decay.IsScalar() && decay.Scalar() == "eigenvalue") {
      sol.decay = mms::eigenvalue(sol);
    } else {
      sol.decay = get<double>(ex, "decay", 1.0);
    }
    cfg.manufactured = get<bool>(ex, "manufactured", false);
    cfg.exact = sol;
  }
  if (root["initial"]) {
    cfg.initial = parse_field(root["initial"], dim, "initial");
  } else if (cfg.exact) {
    cfg.initial = cfg.exact->as_field();
  }
  if (root["source"]) {
    require(!cfg.manufactured, "source must be omitted when exact.manufactured is true", root["source"]);
    cfg.forcing = parse_field(root["source"], dim, "source");
  }

  auto& s = cfg.solver;
  if (const auto sv = root["solver"]) {
    check_keys(sv,
               {"m_per_dim", "eps", "tau", "newton_tol", "newton_max_iter", "damping_halvings", "tau_retries",
                "quad_order"},
               "solver");
    s.m_per_dim = get<int>(sv, "m_per_dim", s.m_per_dim);
    s.eps = get<double>(sv, "eps", s.eps);
    s.tau = get<double>(sv, "tau", s.tau);
    s.newton_tol = get<double>(sv, "newton_tol", s.newton_tol);
    s.newton_max_iter = get<int>(sv, "newton_max_iter", s.newton_max_iter);
    s.damping_halvings = get<int>(sv, "damping_halvings", s.damping_halvings);
    s.tau_retries = get<int>(sv, "tau_retries", s.tau_retries);
    s.quad_order = get<int>(sv, "quad_order", s.quad_order);
    require(s.m_per_dim >= 1, "solver.m_per_dim must be >= 1", sv);
    require(s.eps > 0.0 && s.eps < 1.0, "solver.eps must lie in (0,1)", sv);
    require(s.tau > 0.0, "solver.tau must be positive", sv);
    require(s.newton_tol > 0.0 && s.newton_max_iter >= 1, "invalid Newton settings", sv);
  }

  auto& o = cfg.diagnostics;
  if (const auto dg = root["diagnostics"]) {
    check_keys(dg,
               {"sigma_grid", "energy_tolerance", "linf_slack", "linf_lattice", "fd_h", "second_order_samples",
                "second_order", "interpolation_beta", "higher_integrability_ceiling", "second_order_ceiling",
                "mms_tolerance"},
               "diagnostics");
    o.sigma_grid = get_list<double>(dg, "sigma_grid", o.sigma_grid);
    o.energy_tolerance = get<double>(dg, "energy_tolerance", o.energy_tolerance);
    o.linf_slack = get<double>(dg, "linf_slack", o.linf_slack);
    o.linf_lattice = get<int>(dg, "linf_lattice", o.linf_lattice);
    o.fd_h = get<double>(dg, "fd_h", o.fd_h);
    o.second_order_samples = get<int>(dg, "second_order_samples", o.second_order_samples);
    o.second_order = get<bool>(dg, "second_order", o.second_order);
    o.interpolation_beta = get<double>(dg, "interpolation_beta", o.interpolation_beta);
    o.higher_integrability_ceiling = get<double>(dg, "higher_integrability_ceiling", o.higher_integrability_ceiling);
    o.second_order_ceiling = get<double>(dg, "second_order_ceiling", o.second_order_ceiling);
    o.mms_tolerance = get<double>(dg, "mms_tolerance", o.mms_tolerance);
    const double rs = exponent::r_sharp(dim);
    for (double sg : o.sigma_grid) require(sg > 0.0 && sg < rs, "sigma_grid entries must lie in (0, 4/(N+2))", dg);
  }
  o.exact = cfg.exact;

  if (const auto sw = root["sweep"]) {
    check_keys(sw, {"kind", "eps", "m", "deltas", "perturbation_mode", "members", "tolerance", "ceiling",
                    "ratio_ceiling"},
               "sweep");
    auto& sc = cfg.sweep;
    if (sw["kind"]) sc.kind = parse_kind(sw["kind"]);
    sc.eps = get_list<double>(sw, "eps", {});
    sc.m = get_list<int>(sw, "m", {});
    sc.deltas = get_list<double>(sw, "deltas", {});
    sc.perturbation_mode = get_list<int>(sw, "perturbation_mode", dim == 1 ? std::vector<int>{2} : sc.perturbation_mode);
    sc.members = get<int>(sw, "members", sc.members);
    sc.tolerance = get<double>(sw, "tolerance", sc.tolerance);
    sc.ceiling = get<double>(sw, "ceiling", sc.ceiling);
    sc.ratio_ceiling = get<double>(sw, "ratio_ceiling", sc.ratio_ceiling);
    switch (sc.kind) {
      case SweepKind::kEps:
        require(!sc.eps.empty(), "eps sweep needs a non-empty 'eps' list", sw);
        for (std::size_t k = 1; k < sc.eps.size(); ++k) {
          require(sc.eps[k] < sc.eps[k - 1], "sweep.eps must be strictly decreasing", sw);
        }
        for (double e : sc.eps) require(e > 0.0 && e < 1.0, "sweep.eps entries must lie in (0,1)", sw);
        break;
      case SweepKind::kM:
        require(!sc.m.empty(), "m sweep needs a non-empty 'm' list", sw);
        for (int m : sc.m) require(m >= 1, "sweep.m entries must be >= 1", sw);
        break;
      case SweepKind::kStability:
        require(!sc.deltas.empty(), "stability sweep needs a non-empty 'deltas' list", sw);
        require(static_cast<int>(sc.perturbation_mode.size()) == dim, "perturbation_mode must have dim entries", sw);
        break;
      case SweepKind::kRandom:
        require(sc.members >= 1, "random sweep needs members >= 1", sw);
        break;
      case SweepKind::kNone:
        break;
    }
  } else {
    cfg.sweep.perturbation_mode = dim == 1 ? std::vector<int>{2} : cfg.sweep.perturbation_mode;
  }

  if (const auto out = root["output"]) {
    check_keys(out, {"dir", "snapshots", "snapshot_lattice"}, "output");
    if (out["dir"]) cfg.output = as<std::string>(out["dir"], "output.dir");
    cfg.snapshots = get_list<double>(out, "snapshots", {});
    cfg.snapshot_lattice = get<int>(out, "snapshot_lattice", cfg.snapshot_lattice);
    require(cfg.snapshot_lattice >= 2, "output.snapshot_lattice must be >= 2", out);
  }
  if (cfg.output.empty()) cfg.output = std::filesystem::path("runs") / cfg.scenario;

  cfg.workers = get<int>(root, "workers", default_workers());
  require(cfg.workers >= 1, "workers must be >= 1", root["workers"]);
  cfg.seed = get<std::uint64_t>(root, "seed", cfg.seed);
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

galerkin::SpaceFunction initial_datum(const RunConfig& cfg) {
  return [field = cfg.initial](std::span<const double> x) { return field.value(x, 0.0); };
}

galerkin::SourceTerm source_term(const RunConfig& cfg) {
  if (cfg.manufactured && cfg.exact) return mms::manufactured_source(*cfg.exact, cfg.data, cfg.solver.eps);
  return [field = cfg.forcing](std::span<const double> x, double t) { return field.value(x, t); };
}

int default_workers() {
  if (const char* env = std::getenv("DPHASE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  return 1;
}

}  // namespace dphase::config
