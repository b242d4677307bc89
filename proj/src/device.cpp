#include "negf/device.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "negf/errors.hpp"

namespace negf {
namespace {

// Integer cell count of a width that must be a whole multiple of the grid
// spacing.
int as_cells(double width_nm, double dy_nm, const char* what) {
  if (width_nm < 0.0)
    throw ConfigError(std::string(what) + " must be nonnegative");
  const double cells = width_nm / dy_nm;
  const long rounded = std::lround(cells);
  if (std::abs(cells - static_cast<double>(rounded)) > 1e-6)
    throw ConfigError(std::string(what) + " = " + std::to_string(width_nm) +
                      " nm is not an integer multiple of dy = " +
                      std::to_string(dy_nm) + " nm");
  return static_cast<int>(rounded);
}

// Dense sub-block of a sparse matrix over explicit row/col dof sets.
CMatrix dense_block(const SparseCoo& a, const std::vector<int>& rows,
                    const std::vector<int>& cols) {
  std::unordered_map<int, int> ri, ci;
  ri.reserve(rows.size());
  ci.reserve(cols.size());
  for (int k = 0; k < static_cast<int>(rows.size()); ++k) ri.emplace(rows[k], k);
  for (int k = 0; k < static_cast<int>(cols.size()); ++k) ci.emplace(cols[k], k);
  CMatrix m(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (const auto& e : a.entries) {
    auto r = ri.find(e.row);
    if (r == ri.end()) continue;
    auto c = ci.find(e.col);
    if (c == ci.end()) continue;
    m(r->second, c->second) += e.val;
  }
  return m;
}

CMatrix z_minus(cplx z, const CMatrix& m) {
  const int n = m.rows();
  CMatrix r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = (i == j ? z : cplx(0.0, 0.0)) - m(i, j);
  return r;
}

}  // namespace

double SuperlatticeSpec::hopping_ev() const {
  if (m_eff <= 0.0) throw ConfigError("effective mass must be positive");
  if (dx_nm <= 0.0) throw ConfigError("dx must be positive");
  return kHbar2Over2m0 / (m_eff * dx_nm * dx_nm);
}

std::vector<double> superlattice_potential(const SuperlatticeSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1)
    throw ConfigError("superlattice grid dimensions must be positive");
  if (spec.dx_nm <= 0.0 || spec.dy_nm <= 0.0)
    throw ConfigError("grid spacings must be positive");
  if (spec.n_barriers < 0)
    throw ConfigError("barrier count must be nonnegative");
  if (spec.barrier_height_ev < 0.0)
    throw ConfigError("barrier height must be nonnegative");

  const int left = as_cells(spec.left_flat_nm, spec.dy_nm, "left flat width");
  const int right = as_cells(spec.right_flat_nm, spec.dy_nm, "right flat width");
  const int barrier =
      spec.n_barriers > 0
          ? as_cells(spec.barrier_width_nm, spec.dy_nm, "barrier width")
          : 0;
  const int n_wells = spec.n_barriers > 0 ? spec.n_barriers - 1 : 0;
  const int well =
      n_wells > 0 ? as_cells(spec.well_width_nm, spec.dy_nm, "well width") : 0;

  const long total =
      static_cast<long>(left) + static_cast<long>(spec.n_barriers) * barrier +
      static_cast<long>(n_wells) * well + static_cast<long>(right);
  if (total != spec.ny)
    throw ConfigError(
        "superlattice stack covers " +
        std::to_string(static_cast<double>(total) * spec.dy_nm) +
        " nm but the grid is " +
        std::to_string(static_cast<double>(spec.ny) * spec.dy_nm) + " nm long");

  std::vector<double> v(static_cast<std::size_t>(spec.ny), 0.0);
  int row = left;
  for (int b = 0; b < spec.n_barriers; ++b) {
    for (int k = 0; k < barrier; ++k) v[static_cast<std::size_t>(row++)] =
        spec.barrier_height_ev;
    if (b + 1 < spec.n_barriers) row += well;
  }
  return v;
}

DeviceSystem build_superlattice_hamiltonian(const SuperlatticeSpec& spec) {
  const std::vector<double> v = superlattice_potential(spec);
  if (std::abs(spec.dx_nm - spec.dy_nm) > 1e-12 * spec.dx_nm)
    throw ConfigError("dx and dy must be equal for the five-point stencil");
  const double t = spec.hopping_ev();

  DeviceSystem dev;
  const int nx = spec.nx, ny = spec.ny;
  const int n = nx * ny;
  dev.h.n = n;
  dev.layers.assign(static_cast<std::size_t>(ny), {});
  dev.coords.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < ny; ++j) {
    auto& layer = dev.layers[static_cast<std::size_t>(j)];
    layer.reserve(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) {
      const int d = j * nx + i;
      layer.push_back(d);
      dev.coords[static_cast<std::size_t>(d)] = {static_cast<double>(i),
                                                 static_cast<double>(j)};
      dev.h.add(d, d, cplx(4.0 * t + v[static_cast<std::size_t>(j)], 0.0));
      if (i + 1 < nx) {
        dev.h.add(d, d + 1, cplx(-t, 0.0));
        dev.h.add(d + 1, d, cplx(-t, 0.0));
      }
      if (j + 1 < ny) {
        dev.h.add(d, d + nx, cplx(-t, 0.0));
        dev.h.add(d + nx, d, cplx(-t, 0.0));
      }
    }
  }
  coo_normalize(dev.h);
  dev.graph = graph_of_pattern(dev.h);
  return dev;
}

DeviceSystem build_graphene_hamiltonian(const GrapheneSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1)
    throw ConfigError("graphene ribbon dimensions must be positive");

  DeviceSystem dev;
  const int nx = spec.nx, ny = spec.ny;
  const int n = nx * ny;
  const double t = spec.hopping_ev;
  dev.h.n = n;
  dev.layers.assign(static_cast<std::size_t>(ny), {});
  dev.coords.resize(static_cast<std::size_t>(n));

  auto bond = [&](int a, int b) {
    dev.h.add(a, b, cplx(t, 0.0));
    dev.h.add(b, a, cplx(t, 0.0));
  };

  for (int j = 0; j < ny; ++j) {
    const int type = j % 4;
    const double xoff = (type == 2 || type == 3) ? 0.5 : 0.0;
    auto& layer = dev.layers[static_cast<std::size_t>(j)];
    layer.reserve(static_cast<std::size_t>(nx));
    for (int k = 0; k < nx; ++k) {
      const int d = j * nx + k;
      layer.push_back(d);
      dev.coords[static_cast<std::size_t>(d)] = {static_cast<double>(k) + xoff,
                                                 static_cast<double>(j)};
      dev.h.add(d, d, cplx(spec.onsite_ev, 0.0));
    }
    if (j + 1 == ny) continue;
    // Couplings to the next atom layer cycle with the layer type: straight
    // bonds, a lower-bidiagonal zigzag, straight bonds, an upper-bidiagonal
    // zigzag.  Every atom ends up with at most three neighbors.
    for (int k = 0; k < nx; ++k) {
      const int d = j * nx + k;
      const int up = (j + 1) * nx + k;
      switch (type) {
        case 0:
        case 2:
          bond(d, up);
          break;
        case 1:
          bond(d, up);
          if (k > 0) bond(d, up - 1);
          break;
        default:  // type 3
          bond(d, up);
          if (k + 1 < nx) bond(d, up + 1);
          break;
      }
    }
  }
  coo_normalize(dev.h);
  dev.graph = graph_of_pattern(dev.h);
  return dev;
}

CMatrix surface_self_energy(const CMatrix& h00, const CMatrix& h01,
                            double energy_ev, double eta_ev) {
  const int n = h00.rows();
  if (h00.cols() != n)
    throw ContractViolation("surface_self_energy: h00 must be square");
  if (h01.rows() != n || h01.cols() != n)
    throw ContractViolation("surface_self_energy: h01 must match h00's shape");
  if (eta_ev <= 0.0) throw ConfigError("contact broadening eta must be positive");

  // Lead construction is not part of any solver's operation budget.
  FlopLedger scratch;
  const cplx z(energy_ev, eta_ev);
  const CMatrix h01ct = adjoint(h01, AdjointMode::ConjugateTranspose);

  // Energy-doubling decimation: each sweep doubles the number of eliminated
  // lead cells, so the effective chain length grows as 2^sweeps and the tiny
  // broadening eta still converges in a few dozen sweeps.
  CMatrix es = h00;  // surface onsite, renormalized
  CMatrix e = h00;   // bulk onsite, renormalized
  CMatrix alpha = h01ct;
  CMatrix beta = h01;
  for (int sweep = 0; sweep < 200; ++sweep) {
    CMatrix g = inverse(z_minus(z, es), scratch);
    // Fixed-point residual of the candidate surface Green's function.
    CMatrix rhs = z_minus(z, h00);
    sub_inplace(rhs, matmul(matmul(h01ct, g, scratch), h01, scratch));
    CMatrix refined = inverse(rhs, scratch);
    CMatrix diff = refined;
    sub_inplace(diff, g);
    if (frobenius_norm(diff) <= 1e-10) {
      CMatrix sigma =
          matmul(matmul(h01ct, refined, scratch), h01, scratch);
      // The lead blocks are real symmetric, so Sigma is complex symmetric up
      // to roundoff; make it exactly so.
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const cplx avg = 0.5 * (sigma(i, j) + sigma(j, i));
          sigma(i, j) = avg;
          sigma(j, i) = avg;
        }
      return sigma;
    }
    CMatrix m = inverse(z_minus(z, e), scratch);
    CMatrix am = matmul(alpha, m, scratch);
    CMatrix bm = matmul(beta, m, scratch);
    CMatrix ab = matmul(am, beta, scratch);
    CMatrix ba = matmul(bm, alpha, scratch);
    add_inplace(es, ab);
    add_inplace(e, ab);
    add_inplace(e, ba);
    alpha = matmul(am, alpha, scratch);
    beta = matmul(bm, beta, scratch);
  }
  throw ConvergenceError(
      "surface self-energy decimation did not reach a 1e-10 fixed-point "
      "residual within 200 sweeps");
}

double fermi_function(double energy_ev, double mu_ev, double temperature_k) {
  if (temperature_k <= 0.0)
    throw ConfigError("temperature must be positive");
  const double x = (energy_ev - mu_ev) / (kBoltzmannEvPerK * temperature_k);
  if (x > 700.0) return 0.0;
  if (x < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(x));
}

void attach_contacts(const DeviceSystem& dev, ContactModel model,
                     double energy_ev, double eta_ev, SelfEnergySet& out) {
  if (dev.layers.empty()) throw ConfigError("device has no layers");
  out.sigma_r_left.dofs = dev.layers.front();
  out.sigma_r_right.dofs = dev.layers.back();
  const int nl = static_cast<int>(out.sigma_r_left.dofs.size());
  const int nr = static_cast<int>(out.sigma_r_right.dofs.size());

  if (model == ContactModel::Diagonal) {
    if (eta_ev <= 0.0)
      throw ConfigError("contact broadening eta must be positive");
    const cplx val(0.0, -eta_ev);
    out.sigma_r_left.sigma = CMatrix(nl, nl);
    for (int i = 0; i < nl; ++i) out.sigma_r_left.sigma(i, i) = val;
    out.sigma_r_right.sigma = CMatrix(nr, nr);
    for (int i = 0; i < nr; ++i) out.sigma_r_right.sigma(i, i) = val;
    return;
  }

  if (dev.layers.size() < 2)
    throw ConfigError("dense-lead contacts need at least two device layers");
  const auto& first = dev.layers.front();
  const auto& second = dev.layers[1];
  const auto& last = dev.layers.back();
  const auto& second_last = dev.layers[dev.layers.size() - 2];
  if (second.size() != first.size() || second_last.size() != last.size())
    throw ConfigError(
        "dense-lead contacts need boundary layers of matching sizes");

  // Left lead: periodic repetition of the first layer; the inter-cell hop
  // equals the device's first inter-layer coupling, oriented toward the
  // device, which gives the fixed point g = (z - H00 - H01^dag g H01)^-1.
  const CMatrix h00_l = dense_block(dev.h, first, first);
  const CMatrix h01_l = dense_block(dev.h, first, second);
  out.sigma_r_left.sigma = surface_self_energy(h00_l, h01_l, energy_ev, eta_ev);

  // Right lead: repetition of the last layer; the hop away from the device
  // is the transpose of the device's last inter-layer coupling.
  const CMatrix h00_r = dense_block(dev.h, last, last);
  const CMatrix b_r = dense_block(dev.h, second_last, last);
  out.sigma_r_right.sigma = surface_self_energy(
      h00_r, adjoint(b_r, AdjointMode::Transpose), energy_ev, eta_ev);
}

std::vector<cplx> phonon_self_energy(const DeviceSystem& dev,
                                     double eta_ph_ev) {
  if (eta_ph_ev < 0.0)
    throw ConfigError("phonon broadening must be nonnegative");
  const int n = dev.h.n;
  std::vector<cplx> sigma(static_cast<std::size_t>(n), cplx(0.0, 0.0));
  if (eta_ph_ev == 0.0 || dev.layers.size() < 2) return sigma;
  std::vector<char> boundary(static_cast<std::size_t>(n), 0);
  for (int d : dev.layers.front()) boundary[static_cast<std::size_t>(d)] = 1;
  for (int d : dev.layers.back()) boundary[static_cast<std::size_t>(d)] = 1;
  for (int d = 0; d < n; ++d)
    if (!boundary[static_cast<std::size_t>(d)])
      sigma[static_cast<std::size_t>(d)] = cplx(0.0, -eta_ph_ev);
  return sigma;
}

SparseCoo lesser_self_energy(const ContactBlock& sigma_r_left,
                             const ContactBlock& sigma_r_right,
                             const std::vector<cplx>& sigma_r_phonon,
                             int n_dofs, double energy_ev, double mu_left,
                             double mu_right, double temperature_k) {
  if (static_cast<int>(sigma_r_phonon.size()) != n_dofs)
    throw ConfigError("phonon diagonal length does not match the dof count");
  SparseCoo out;
  out.n = n_dofs;

  // -f (S - S^dag) entrywise; the mirrored entries are exact negated
  // conjugates of each other, so the result is skew-Hermitian by
  // construction, not merely to rounding.
  auto add_contact = [&](const ContactBlock& c, double mu) {
    if (c.empty()) return;
    if (c.sigma.rows() != static_cast<int>(c.dofs.size()) ||
        c.sigma.cols() != static_cast<int>(c.dofs.size()))
      throw ConfigError("contact block shape does not match its dof set");
    const double f = fermi_function(energy_ev, mu, temperature_k);
    const int m = c.sigma.rows();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const cplx v = -f * (c.sigma(i, j) - std::conj(c.sigma(j, i)));
        if (v != cplx(0.0, 0.0)) out.add(c.dofs[i], c.dofs[j], v);
      }
  };
  add_contact(sigma_r_left, mu_left);
  add_contact(sigma_r_right, mu_right);

  const double f_ph =
      fermi_function(energy_ev, 0.5 * (mu_left + mu_right), temperature_k);
  for (int d = 0; d < n_dofs; ++d) {
    const cplx s = sigma_r_phonon[static_cast<std::size_t>(d)];
    const cplx v = -f_ph * (s - std::conj(s));
    if (v != cplx(0.0, 0.0)) out.add(d, d, v);
  }
  coo_normalize(out);
  return out;
}

}  // namespace negf
