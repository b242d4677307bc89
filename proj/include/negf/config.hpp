// Run configuration: one JSON document per run, strictly validated (unknown
// keys anywhere are rejected so typos cannot silently corrupt benchmarks).
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "negf/device.hpp"
#include "negf/observables.hpp"
#include "negf/synthetic.hpp"

namespace negf {

enum class DeviceKind { Superlattice, Graphene, SyntheticRandom };
enum class SolverKind { Rgf, Hsc, Dense };

const char* to_string(DeviceKind k);
const char* to_string(SolverKind k);

struct ContactConfig {
  ContactModel model = ContactModel::Diagonal;
  double eta_ev = 1e-6;         // contact broadening
  double eta_phonon_ev = 0.0;   // interior diagonal phonon broadening
};

struct BenchConfig {
  std::vector<std::array<int, 2>> sizes;  // (nx, ny) sweep
  std::vector<SolverKind> solvers{SolverKind::Rgf, SolverKind::Hsc};
  double max_mem_mb = 4096.0;  // skip sizes whose block estimate exceeds this
  bool record_wall = false;    // default off so bench output is reproducible
};

struct RunConfig {
  DeviceKind device_kind = DeviceKind::Superlattice;
  SuperlatticeSpec superlattice;
  GrapheneSpec graphene;
  SyntheticSpec synthetic;
  SolverKind solver = SolverKind::Hsc;
  ContactConfig contact;
  EnergyGrid energy;  // resolved quadrature grid
  int max_leaf = 64;  // nested-dissection leaf size
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  BenchConfig bench;
};

// Parses and validates a JSON config.  `origin` names the source (file name)
// in error messages; parse errors carry a line number.
RunConfig parse_run_config(const std::string& text, const std::string& origin);

RunConfig load_run_config(const std::string& path);

}  // namespace negf
