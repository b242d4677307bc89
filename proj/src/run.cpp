#include "negf/run.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>
#include <utility>
#include <vector>

#include "negf/block.hpp"
#include "negf/errors.hpp"
#include "negf/hsc.hpp"
#include "negf/oracle.hpp"
#include "negf/partition.hpp"
#include "negf/rgf.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <xmmintrin.h>
#endif

namespace negf {
namespace {

namespace fs = std::filesystem;

struct Problem {
  DeviceKind kind = DeviceKind::Superlattice;
  SparseCoo h;
  std::vector<std::vector<int>> layers;
  std::vector<std::array<double, 2>> coords;
  int nx = 0, ny = 0;
  int n_dofs = 0;
  double mu = 0.0;  // zero bias: both contacts at the Fermi energy
  double temperature = 300.0;
  double density_scale = 1.0;  // to nm^-2 for the superlattice; 1 otherwise
  SyntheticSystem synth;       // synthetic-random: fixed self-energies
  DeviceSystem dev;            // physical devices
};

Problem build_problem(const RunConfig& cfg) {
  Problem p;
  p.kind = cfg.device_kind;
  switch (cfg.device_kind) {
    case DeviceKind::Superlattice: {
      p.dev = build_superlattice_hamiltonian(cfg.superlattice);
      p.nx = cfg.superlattice.nx;
      p.ny = cfg.superlattice.ny;
      p.mu = cfg.superlattice.fermi_energy_ev;
      p.temperature = cfg.superlattice.temperature_k;
      p.density_scale =
          1.0 / (cfg.superlattice.dx_nm * cfg.superlattice.dy_nm);
      break;
    }
    case DeviceKind::Graphene: {
      p.dev = build_graphene_hamiltonian(cfg.graphene);
      p.nx = cfg.graphene.nx;
      p.ny = cfg.graphene.ny;
      p.mu = cfg.graphene.fermi_energy_ev;
      p.temperature = 300.0;  // ribbon runs use room temperature
      p.density_scale = 1.0;  // per atom
      break;
    }
    default: {
      SyntheticSpec spec = cfg.synthetic;
      spec.seed = cfg.seed;
      p.synth = make_synthetic_system(spec);
      p.nx = spec.nx;
      p.ny = spec.ny;
      break;
    }
  }
  if (p.kind == DeviceKind::SyntheticRandom) {
    p.h = p.synth.h;
    p.layers = p.synth.layers;
    p.coords = p.synth.coords;
  } else {
    p.h = p.dev.h;
    p.layers = p.dev.layers;
    p.coords = p.dev.coords;
  }
  p.n_dofs = p.h.n;
  return p;
}

SelfEnergySet sigma_for_energy(const RunConfig& cfg, const Problem& p,
                               double energy) {
  SelfEnergySet s;
  if (p.kind == DeviceKind::SyntheticRandom) {
    s.sigma_r_left = p.synth.sigma_r_left;
    s.sigma_r_right = p.synth.sigma_r_right;
    s.sigma_r_phonon = p.synth.sigma_r_phonon;
    s.sigma_lesser = p.synth.sigma_lesser;
    return s;
  }
  attach_contacts(p.dev, cfg.contact.model, energy, cfg.contact.eta_ev, s);
  s.sigma_r_phonon = phonon_self_energy(p.dev, cfg.contact.eta_phonon_ev);
  s.mu_left = p.mu;
  s.mu_right = p.mu;
  s.temperature_k = p.temperature;
  s.sigma_lesser =
      lesser_self_energy(s.sigma_r_left, s.sigma_r_right, s.sigma_r_phonon,
                         p.n_dofs, energy, p.mu, p.mu, p.temperature);
  return s;
}

// Dense contact self-energy blocks must stay inside single clusters so the
// lesser self-energy is cluster-diagonal for the extraction pass.
std::vector<std::vector<int>> atomic_groups(const RunConfig& cfg,
                                            const Problem& p) {
  const bool dense_contacts = p.kind == DeviceKind::SyntheticRandom ||
                              cfg.contact.model == ContactModel::DenseLead;
  if (!dense_contacts || p.layers.empty()) return {};
  std::vector<std::vector<int>> groups{p.layers.front()};
  if (p.layers.size() > 1) groups.push_back(p.layers.back());
  return groups;
}

std::shared_ptr<const SeparatorTree> build_tree(const RunConfig& cfg,
                                                const Problem& p) {
  const double e0 = cfg.energy.energies_ev.front();
  const SelfEnergySet s = sigma_for_energy(cfg, p, e0);
  const SparseCoo a0 =
      assemble_system(p.h, s.sigma_r_left, s.sigma_r_right, s.sigma_r_phonon,
                      e0, p.layers);
  const Graph graph = graph_of_pattern(a0);
  return std::make_shared<SeparatorTree>(nested_dissection(
      graph, atomic_groups(cfg, p), cfg.max_leaf, p.coords));
}

struct EnergySolution {
  std::vector<cplx> gr;     // per dof
  std::vector<cplx> gless;  // per dof
  FlopLedger ledger;
};

EnergySolution solve_energy(const RunConfig& cfg, const Problem& p,
                            const std::shared_ptr<const SeparatorTree>& tree,
                            double energy) {
  const SelfEnergySet s = sigma_for_energy(cfg, p, energy);
  const SparseCoo a =
      assemble_system(p.h, s.sigma_r_left, s.sigma_r_right, s.sigma_r_phonon,
                      energy, p.layers);
  EnergySolution out;
  GreensDiagonal d;
  d.energy_eV = energy;
  d.n_dofs = p.n_dofs;
  switch (cfg.solver) {
    case SolverKind::Rgf: {
      LayeredSystem sys = layered_from_coo(a, p.layers);
      attach_sigma_lesser(sys, s.sigma_lesser);
      RgfGrResult r = rgf_gr(sys, RgfGrOptions{}, out.ledger);
      std::vector<CMatrix> gl = rgf_gless(sys, r, out.ledger);
      d.dof_sets = p.layers;
      d.gr_diag = std::move(r.gr_diag);
      d.gless_diag = std::move(gl);
      break;
    }
    case SolverKind::Hsc: {
      ClusterBlockMatrix am = group_by_partition(a, tree);
      HscFactorization fact = hsc_fold(std::move(am), out.ledger);
      ClusterBlockMatrix sig =
          group_by_partition(s.sigma_lesser, tree,
                             BlockSymmetry::SkewHermitian);
      HscGlessResult res = hsc_gless(fact, sig, out.ledger);
      d.dof_sets.reserve(static_cast<std::size_t>(tree->num_clusters()));
      for (int c = 0; c < tree->num_clusters(); ++c)
        d.dof_sets.push_back(tree->cluster(c).dofs);
      d.gr_diag = std::move(res.gr_diag);
      d.gless_diag = std::move(res.gless_diag);
      break;
    }
    default: {  // dense oracle
      const CMatrix gr = dense_gr(a);
      const CMatrix gl = dense_gless(gr, dense_from_coo(s.sigma_lesser));
      out.gr.resize(static_cast<std::size_t>(p.n_dofs));
      out.gless.resize(static_cast<std::size_t>(p.n_dofs));
      for (int j = 0; j < p.n_dofs; ++j) {
        out.gr[static_cast<std::size_t>(j)] = gr(j, j);
        out.gless[static_cast<std::size_t>(j)] = gl(j, j);
      }
      return out;
    }
  }
  out.gr = d.gr_dof_diagonal();
  out.gless = d.gless_dof_diagonal();
  return out;
}

[[noreturn]] void rethrow_with_energy(std::exception_ptr ep, int index,
                                      double energy) {
  const std::string prefix = "energy point " + std::to_string(index) +
                             " (E = " + format_double(energy) + " eV): ";
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const SingularBlock& e) {
    throw SingularBlock(prefix + e.what(), e.pivot_index);
  } catch (const PartitionViolation& e) {
    throw PartitionViolation(prefix + e.what(), e.edges);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(prefix + e.what());
  } catch (const NonSkewHermitianInput& e) {
    throw NonSkewHermitianInput(prefix + e.what());
  } catch (const ResidualTooLarge& e) {
    throw ResidualTooLarge(prefix + e.what());
  } catch (const ContractViolation& e) {
    throw ContractViolation(prefix + e.what());
  }
  // Anything else propagates unchanged.
}

std::vector<EnergySolution> solve_all(const RunConfig& cfg, const Problem& p) {
  std::shared_ptr<const SeparatorTree> tree;
  if (cfg.solver == SolverKind::Hsc) tree = build_tree(cfg, p);

  const auto& energies = cfg.energy.energies_ev;
  const int m = static_cast<int>(energies.size());
  std::vector<EnergySolution> results(static_cast<std::size_t>(m));
  const int threads = std::max(1, std::min<int>(cfg.threads, m));

  if (threads == 1) {
    for (int k = 0; k < m; ++k) {
      try {
        results[static_cast<std::size_t>(k)] =
            solve_energy(cfg, p, tree, energies[static_cast<std::size_t>(k)]);
      } catch (...) {
        rethrow_with_energy(std::current_exception(), k,
                            energies[static_cast<std::size_t>(k)]);
      }
    }
    return results;
  }

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(m));
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= m) return;
      try {
        results[static_cast<std::size_t>(k)] =
            solve_energy(cfg, p, tree, energies[static_cast<std::size_t>(k)]);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  // Deterministic error selection: the lowest failing energy index wins.
  for (int k = 0; k < m; ++k)
    if (errors[static_cast<std::size_t>(k)])
      rethrow_with_energy(errors[static_cast<std::size_t>(k)], k,
                          energies[static_cast<std::size_t>(k)]);
  return results;
}

std::ofstream open_out(const RunConfig& cfg, const char* name) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path.string() + "'");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void cmd_solve(const RunConfig& cfg) {
  const Problem p = build_problem(cfg);
  std::vector<EnergySolution> results = solve_all(cfg, p);
  const int m = static_cast<int>(results.size());

  std::vector<std::vector<cplx>> gless;
  gless.reserve(static_cast<std::size_t>(m));
  for (auto& r : results) gless.push_back(std::move(r.gless));
  DensityMap map = electron_density(gless, cfg.energy, p.nx, p.ny);
  for (auto& v : map.value) v *= p.density_scale;
  const std::vector<double> line = line_density_y(map);

  {
    std::ofstream out = open_out(cfg, "density.csv");
    out << "x_index,y_index,density\n";
    for (int y = 0; y < p.ny; ++y)
      for (int x = 0; x < p.nx; ++x)
        out << x << ',' << y << ','
            << format_double(
                   map.value[static_cast<std::size_t>(y) * p.nx + x])
            << '\n';
  }
  {
    std::ofstream out = open_out(cfg, "ldos.csv");
    out << "x_index,y_index,energy_eV,ldos\n";
    for (int k = 0; k < m; ++k) {
      const std::vector<double> ld =
          ldos(results[static_cast<std::size_t>(k)].gr);
      const std::string e =
          format_double(cfg.energy.energies_ev[static_cast<std::size_t>(k)]);
      for (int y = 0; y < p.ny; ++y)
        for (int x = 0; x < p.nx; ++x)
          out << x << ',' << y << ',' << e << ','
              << format_double(ld[static_cast<std::size_t>(y) * p.nx + x])
              << '\n';
    }
  }
  {
    std::ofstream out = open_out(cfg, "line_density.csv");
    out << "y_index,density\n";
    for (int y = 0; y < p.ny; ++y)
      out << y << ',' << format_double(line[static_cast<std::size_t>(y)])
          << '\n';
  }
}

namespace {

// Scoped flush-to-zero / denormals-are-zero.  Benchmark systems are strongly
// gapped at the probe energy, so resolvent entries decay exponentially
// through the device and intermediate products underflow into subnormals,
// which cost ~10x on common x86 cores.  Operation counts are value-
// independent, so flushing changes no ledger output; wall clock is
// informational.  The previous FP environment is restored on scope exit.
class DenormalFlushScope {
 public:
  DenormalFlushScope() {
#if defined(__x86_64__) || defined(__i386__)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);  // FTZ (bit 15) | DAZ (bit 6)
#endif
  }
  ~DenormalFlushScope() {
#if defined(__x86_64__) || defined(__i386__)
    _mm_setcsr(saved_);
#endif
  }
  DenormalFlushScope(const DenormalFlushScope&) = delete;
  DenormalFlushScope& operator=(const DenormalFlushScope&) = delete;

 private:
#if defined(__x86_64__) || defined(__i386__)
  unsigned saved_ = 0;
#endif
};

}  // namespace

void cmd_bench(const RunConfig& cfg) {
  if (cfg.bench.sizes.empty())
    throw ConfigError("bench needs a nonempty 'bench.sizes' sweep");
  const DenormalFlushScope flush_scope;
  std::ofstream out = open_out(cfg, "bench.csv");
  out << "solver,Nx,Ny,multiply_ops,inverse_ops,wall_seconds\n";

  for (const auto& size : cfg.bench.sizes) {
    const int nx = size[0], ny = size[1];
    if (nx < 1 || ny < 1)
      throw ConfigError("bench sizes must be positive");
    for (SolverKind solver : cfg.bench.solvers) {
      // Working-set estimate: a handful of dense layer blocks for the
      // layered solver, which dominates the HSC footprint as well.
      const double bytes =
          16.0 * 8.0 * static_cast<double>(nx) * nx * static_cast<double>(ny);
      if (bytes > cfg.bench.max_mem_mb * 1048576.0) {
        out << to_string(solver) << ',' << nx << ',' << ny
            << ",skipped,skipped,skipped\n";
        continue;
      }

      SyntheticSpec spec = cfg.synthetic;
      spec.nx = nx;
      spec.ny = ny;
      spec.seed = cfg.seed;
      const SyntheticSystem sys = make_synthetic_system(spec);
      const SparseCoo a = sys.system_matrix(0.0);

      FlopLedger ledger;
      const auto t0 = std::chrono::steady_clock::now();
      if (solver == SolverKind::Rgf) {
        LayeredSystem lay = layered_from_coo(a, sys.layers);
        attach_sigma_lesser(lay, sys.sigma_lesser);
        RgfGrResult r = rgf_gr(lay, RgfGrOptions{}, ledger);
        rgf_gless(lay, r, ledger);
      } else {
        std::vector<std::vector<int>> atomic{sys.layers.front()};
        if (sys.layers.size() > 1) atomic.push_back(sys.layers.back());
        auto tree = std::make_shared<SeparatorTree>(
            nested_dissection(sys.graph, atomic, cfg.max_leaf, sys.coords));
        ClusterBlockMatrix am = group_by_partition(a, tree);
        HscFactorization fact = hsc_fold(std::move(am), ledger);
        ClusterBlockMatrix sig = group_by_partition(
            sys.sigma_lesser, tree, BlockSymmetry::SkewHermitian);
        hsc_gless(fact, sig, ledger);
      }
      const double wall =
          cfg.bench.record_wall
              ? std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count()
              : 0.0;
      out << to_string(solver) << ',' << nx << ',' << ny << ','
          << ledger.multiply_ops << ',' << ledger.inverse_ops << ','
          << format_double(wall) << '\n';
    }
  }
}

void cmd_partition(const RunConfig& cfg) {
  const Problem p = build_problem(cfg);
  const double e0 = cfg.energy.energies_ev.front();
  const SelfEnergySet s = sigma_for_energy(cfg, p, e0);
  const SparseCoo a0 =
      assemble_system(p.h, s.sigma_r_left, s.sigma_r_right, s.sigma_r_phonon,
                      e0, p.layers);
  const Graph graph = graph_of_pattern(a0);
  const SeparatorTree tree =
      cfg.solver == SolverKind::Rgf
          ? rgf_chain_partition(p.layers, p.n_dofs)
          : nested_dissection(graph, atomic_groups(cfg, p), cfg.max_leaf,
                              p.coords);
  const PartitionReport report = validate_partition(tree, graph);

  {
    std::ofstream out = open_out(cfg, "tree.json");
    out << tree.to_json() << '\n';
  }
  {
    std::ofstream out = open_out(cfg, "validation.txt");
    out << report.summary() << '\n';
    for (const auto& v : report.violations)
      out << "violation: dof " << v[0] << " (cluster " << v[2] << ") - dof "
          << v[1] << " (cluster " << v[3] << ")\n";
  }
}

}  // namespace negf
