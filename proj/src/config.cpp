#include "negf/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "negf/errors.hpp"

namespace negf {
namespace {

using nlohmann::json;

// Line number of a byte offset, for parse diagnostics.
int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
  throw ConfigError(origin + ": " + msg);
}

void require_keys(const json& obj, const std::string& origin,
                  const std::string& path,
                  std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) fail(origin, "unknown config key '" + path + it.key() + "'");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& origin,
                  const std::string& path, const char* key, double dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number()) fail(origin, "'" + path + key + "' must be a number");
  return v->get<double>();
}

int get_int(const json& obj, const std::string& origin, const std::string& path,
            const char* key, int dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number_integer())
    fail(origin, "'" + path + key + "' must be an integer");
  return v->get<int>();
}

bool get_bool(const json& obj, const std::string& origin,
              const std::string& path, const char* key, bool dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_boolean()) fail(origin, "'" + path + key + "' must be a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& origin,
                       const std::string& path, const char* key,
                       const std::string& dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_string()) fail(origin, "'" + path + key + "' must be a string");
  return v->get<std::string>();
}

SolverKind parse_solver(const std::string& s, const std::string& origin,
                        const std::string& where) {
  if (s == "rgf") return SolverKind::Rgf;
  if (s == "hsc") return SolverKind::Hsc;
  if (s == "dense") return SolverKind::Dense;
  fail(origin, where + " must be one of \"rgf\", \"hsc\", \"dense\" (got \"" +
                   s + "\")");
}

EnergyGrid parse_energy(const json& e, const std::string& origin) {
  require_keys(e, origin, "energy.",
               {"points_ev", "emin_ev", "emax_ev", "count"});
  const json* points = find(e, "points_ev");
  if (points) {
    if (find(e, "emin_ev") || find(e, "emax_ev") || find(e, "count"))
      fail(origin,
           "'energy' takes either 'points_ev' or the uniform-grid keys, not "
           "both");
    if (!points->is_array() || points->empty())
      fail(origin, "'energy.points_ev' must be a nonempty array of numbers");
    std::vector<double> pts;
    pts.reserve(points->size());
    for (const auto& p : *points) {
      if (!p.is_number())
        fail(origin, "'energy.points_ev' must contain only numbers");
      pts.push_back(p.get<double>());
    }
    try {
      return make_energy_grid(pts);
    } catch (const ConfigError& err) {
      fail(origin, err.what());
    }
  }
  if (!find(e, "emin_ev") || !find(e, "emax_ev") || !find(e, "count"))
    fail(origin,
         "'energy' needs either 'points_ev' or all of 'emin_ev', 'emax_ev', "
         "'count'");
  try {
    return uniform_energy_grid(
        get_number(e, origin, "energy.", "emin_ev", 0.0),
        get_number(e, origin, "energy.", "emax_ev", 0.0),
        get_int(e, origin, "energy.", "count", 0));
  } catch (const ConfigError& err) {
    fail(origin, err.what());
  }
}

}  // namespace

const char* to_string(DeviceKind k) {
  switch (k) {
    case DeviceKind::Superlattice: return "superlattice";
    case DeviceKind::Graphene: return "graphene";
    default: return "synthetic-random";
  }
}

const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Rgf: return "rgf";
    case SolverKind::Hsc: return "hsc";
    default: return "dense";
  }
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, "JSON parse error at line " +
                     std::to_string(line_of_offset(text, e.byte)) + ": " +
                     e.what());
  }
  if (!root.is_object()) fail(origin, "config root must be a JSON object");
  require_keys(root, origin, "",
               {"device", "solver", "contact", "energy", "partition", "output",
                "seed", "threads", "bench"});

  RunConfig cfg;

  const json* device = find(root, "device");
  if (!device) fail(origin, "missing required section 'device'");
  if (!device->is_object()) fail(origin, "'device' must be an object");
  const std::string kind = get_string(*device, origin, "device.", "kind", "");
  if (kind == "superlattice") {
    cfg.device_kind = DeviceKind::Superlattice;
    require_keys(*device, origin, "device.",
                 {"kind", "nx", "ny", "dx_nm", "dy_nm", "n_barriers",
                  "barrier_width_nm", "well_width_nm", "barrier_height_ev",
                  "left_flat_nm", "right_flat_nm", "m_eff", "fermi_energy_ev",
                  "temperature_k"});
    auto& s = cfg.superlattice;
    s.nx = get_int(*device, origin, "device.", "nx", s.nx);
    s.ny = get_int(*device, origin, "device.", "ny", s.ny);
    s.dx_nm = get_number(*device, origin, "device.", "dx_nm", s.dx_nm);
    s.dy_nm = get_number(*device, origin, "device.", "dy_nm", s.dy_nm);
    s.n_barriers = get_int(*device, origin, "device.", "n_barriers",
                           s.n_barriers);
    s.barrier_width_nm = get_number(*device, origin, "device.",
                                    "barrier_width_nm", s.barrier_width_nm);
    s.well_width_nm = get_number(*device, origin, "device.", "well_width_nm",
                                 s.well_width_nm);
    s.barrier_height_ev = get_number(*device, origin, "device.",
                                     "barrier_height_ev", s.barrier_height_ev);
    s.left_flat_nm =
        get_number(*device, origin, "device.", "left_flat_nm", s.left_flat_nm);
    s.right_flat_nm = get_number(*device, origin, "device.", "right_flat_nm",
                                 s.right_flat_nm);
    s.m_eff = get_number(*device, origin, "device.", "m_eff", s.m_eff);
    s.fermi_energy_ev = get_number(*device, origin, "device.",
                                   "fermi_energy_ev", s.fermi_energy_ev);
    s.temperature_k = get_number(*device, origin, "device.", "temperature_k",
                                 s.temperature_k);
  } else if (kind == "graphene") {
    cfg.device_kind = DeviceKind::Graphene;
    require_keys(*device, origin, "device.",
                 {"kind", "nx", "ny", "onsite_ev", "hopping_ev",
                  "fermi_energy_ev"});
    auto& g = cfg.graphene;
    g.nx = get_int(*device, origin, "device.", "nx", g.nx);
    g.ny = get_int(*device, origin, "device.", "ny", g.ny);
    g.onsite_ev = get_number(*device, origin, "device.", "onsite_ev",
                             g.onsite_ev);
    g.hopping_ev = get_number(*device, origin, "device.", "hopping_ev",
                              g.hopping_ev);
    g.fermi_energy_ev = get_number(*device, origin, "device.",
                                   "fermi_energy_ev", g.fermi_energy_ev);
    if (g.ny < 4 || g.ny % 4 != 0)
      fail(origin,
           "graphene ribbons need a whole number of four-atom layers (ny "
           "divisible by 4)");
  } else if (kind == "synthetic-random") {
    cfg.device_kind = DeviceKind::SyntheticRandom;
    require_keys(*device, origin, "device.",
                 {"kind", "nx", "ny", "coupling_t", "fuzz"});
    auto& s = cfg.synthetic;
    s.nx = get_int(*device, origin, "device.", "nx", s.nx);
    s.ny = get_int(*device, origin, "device.", "ny", s.ny);
    s.coupling_t =
        get_number(*device, origin, "device.", "coupling_t", s.coupling_t);
    s.fuzz = get_bool(*device, origin, "device.", "fuzz", s.fuzz);
  } else if (kind.empty()) {
    fail(origin, "missing required key 'device.kind'");
  } else {
    fail(origin, "'device.kind' must be one of \"superlattice\", \"graphene\","
                 " \"synthetic-random\" (got \"" + kind + "\")");
  }

  cfg.solver = parse_solver(get_string(root, origin, "", "solver", "hsc"),
                            origin, "'solver'");

  if (const json* contact = find(root, "contact")) {
    if (!contact->is_object()) fail(origin, "'contact' must be an object");
    require_keys(*contact, origin, "contact.",
                 {"model", "eta_ev", "eta_phonon_ev"});
    const std::string model =
        get_string(*contact, origin, "contact.", "model", "diagonal");
    if (model == "diagonal")
      cfg.contact.model = ContactModel::Diagonal;
    else if (model == "dense-lead")
      cfg.contact.model = ContactModel::DenseLead;
    else
      fail(origin, "'contact.model' must be \"diagonal\" or \"dense-lead\" "
                   "(got \"" + model + "\")");
    cfg.contact.eta_ev =
        get_number(*contact, origin, "contact.", "eta_ev", cfg.contact.eta_ev);
    cfg.contact.eta_phonon_ev = get_number(
        *contact, origin, "contact.", "eta_phonon_ev", cfg.contact.eta_phonon_ev);
  }

  if (const json* energy = find(root, "energy")) {
    if (!energy->is_object()) fail(origin, "'energy' must be an object");
    cfg.energy = parse_energy(*energy, origin);
  } else {
    switch (cfg.device_kind) {
      case DeviceKind::Superlattice:
        cfg.energy = uniform_energy_grid(0.0, 0.5, 100);
        break;
      case DeviceKind::Graphene:
        cfg.energy = make_energy_grid({0.5});
        break;
      default:
        cfg.energy = make_energy_grid({0.0});
        break;
    }
  }
  cfg.superlattice.energy_grid_ev = cfg.energy.energies_ev;
  cfg.graphene.energy_points_ev = cfg.energy.energies_ev;

  if (const json* part = find(root, "partition")) {
    if (!part->is_object()) fail(origin, "'partition' must be an object");
    require_keys(*part, origin, "partition.", {"max_leaf"});
    cfg.max_leaf = get_int(*part, origin, "partition.", "max_leaf",
                           cfg.max_leaf);
    if (cfg.max_leaf < 1)
      fail(origin, "'partition.max_leaf' must be at least 1");
  }

  if (const json* output = find(root, "output")) {
    if (!output->is_object()) fail(origin, "'output' must be an object");
    require_keys(*output, origin, "output.", {"dir"});
    cfg.out_dir = get_string(*output, origin, "output.", "dir", cfg.out_dir);
  }

  if (const json* seed = find(root, "seed")) {
    if (!seed->is_number_integer() || seed->get<std::int64_t>() < 0)
      fail(origin, "'seed' must be a nonnegative integer");
    cfg.seed = seed->get<std::uint64_t>();
  }
  cfg.threads = get_int(root, origin, "", "threads", cfg.threads);
  if (cfg.threads < 1) fail(origin, "'threads' must be at least 1");

  if (const json* bench = find(root, "bench")) {
    if (!bench->is_object()) fail(origin, "'bench' must be an object");
    require_keys(*bench, origin, "bench.",
                 {"sizes", "solvers", "max_mem_mb", "record_wall"});
    if (const json* sizes = find(*bench, "sizes")) {
      if (!sizes->is_array()) fail(origin, "'bench.sizes' must be an array");
      for (const auto& s : *sizes) {
        if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() ||
            !s[1].is_number_integer())
          fail(origin, "'bench.sizes' entries must be [nx, ny] integer pairs");
        cfg.bench.sizes.push_back({s[0].get<int>(), s[1].get<int>()});
      }
    }
    if (const json* solvers = find(*bench, "solvers")) {
      if (!solvers->is_array() || solvers->empty())
        fail(origin, "'bench.solvers' must be a nonempty array");
      cfg.bench.solvers.clear();
      for (const auto& s : *solvers) {
        if (!s.is_string())
          fail(origin, "'bench.solvers' must contain strings");
        const SolverKind k =
            parse_solver(s.get<std::string>(), origin, "'bench.solvers' entry");
        if (k == SolverKind::Dense)
          fail(origin,
               "'bench.solvers' supports \"rgf\" and \"hsc\" (the dense "
               "oracle has no operation ledger)");
        cfg.bench.solvers.push_back(k);
      }
    }
    cfg.bench.max_mem_mb = get_number(*bench, origin, "bench.", "max_mem_mb",
                                      cfg.bench.max_mem_mb);
    if (cfg.bench.max_mem_mb <= 0.0)
      fail(origin, "'bench.max_mem_mb' must be positive");
    cfg.bench.record_wall =
        get_bool(*bench, origin, "bench.", "record_wall", cfg.bench.record_wall);
  }

  cfg.synthetic.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

}  // namespace negf
