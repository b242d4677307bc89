#include "negf/observables.hpp"

#include <cmath>
#include <string>

#include "negf/errors.hpp"

namespace negf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

EnergyGrid make_energy_grid(const std::vector<double>& energies_ev) {
  if (energies_ev.empty()) throw ConfigError("energy grid must not be empty");
  for (std::size_t k = 1; k < energies_ev.size(); ++k)
    if (!(energies_ev[k] > energies_ev[k - 1]))
      throw ConfigError("energy grid must be strictly increasing");
  EnergyGrid grid;
  grid.energies_ev = energies_ev;
  const std::size_t m = energies_ev.size();
  if (m == 1) {
    grid.weights = {1.0};
    return grid;
  }
  grid.weights.resize(m);
  grid.weights[0] = 0.5 * (energies_ev[1] - energies_ev[0]);
  for (std::size_t k = 1; k + 1 < m; ++k)
    grid.weights[k] = 0.5 * (energies_ev[k + 1] - energies_ev[k - 1]);
  grid.weights[m - 1] = 0.5 * (energies_ev[m - 1] - energies_ev[m - 2]);
  return grid;
}

EnergyGrid uniform_energy_grid(double emin_ev, double emax_ev, int count) {
  if (count < 1) throw ConfigError("energy grid needs at least one point");
  if (count == 1) {
    if (emin_ev != emax_ev)
      throw ConfigError("a single-point energy grid requires emin == emax");
    return make_energy_grid({emin_ev});
  }
  if (!(emax_ev > emin_ev))
    throw ConfigError("energy grid requires emax > emin");
  std::vector<double> e(static_cast<std::size_t>(count));
  const double step = (emax_ev - emin_ev) / static_cast<double>(count - 1);
  for (int k = 0; k < count; ++k)
    e[static_cast<std::size_t>(k)] = emin_ev + step * static_cast<double>(k);
  e.back() = emax_ev;
  return make_energy_grid(e);
}

std::vector<double> ldos(const std::vector<cplx>& gr_diag) {
  std::vector<double> out(gr_diag.size());
  for (std::size_t j = 0; j < gr_diag.size(); ++j)
    out[j] = -gr_diag[j].imag() / kPi;
  return out;
}

DensityMap electron_density(const std::vector<std::vector<cplx>>& gless_diag,
                            const EnergyGrid& grid, int nx, int ny) {
  if (nx < 1 || ny < 1)
    throw ContractViolation("electron_density: grid geometry must be positive");
  const std::size_t n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  if (gless_diag.size() != grid.energies_ev.size())
    throw ContractViolation(
        "electron_density: one diagonal vector per grid energy required");

  DensityMap map;
  map.nx = nx;
  map.ny = ny;
  map.value.assign(n, 0.0);
  for (std::size_t k = 0; k < gless_diag.size(); ++k) {
    const auto& g = gless_diag[k];
    if (g.size() != n)
      throw ContractViolation("electron_density: diagonal length mismatch at "
                              "energy index " + std::to_string(k));
    const double w = grid.weights[k];
    for (std::size_t j = 0; j < n; ++j) {
      const double mag = std::abs(g[j]);
      const double re = std::abs(g[j].real());
      if (re > 1e-8 * mag)
        throw ResidualTooLarge(
            "G^< diagonal entry has a real part beyond the skew-Hermitian "
            "tolerance at energy index " + std::to_string(k) + ", dof " +
            std::to_string(j));
      if (mag > 0.0)
        map.max_real_residual = std::max(map.max_real_residual, re / mag);
      // Re(-i g) = Im(g).
      map.value[j] += w * g[j].imag();
    }
  }
  for (std::size_t j = 0; j < n; ++j) map.value[j] /= 2.0 * kPi;
  return map;
}

std::vector<double> line_density_y(const DensityMap& map) {
  const std::size_t n =
      static_cast<std::size_t>(map.nx) * static_cast<std::size_t>(map.ny);
  if (map.nx < 1 || map.ny < 1 || map.value.size() != n)
    throw ContractViolation("line_density_y: map is not reshapeable to its "
                            "stated geometry");
  std::vector<double> line(static_cast<std::size_t>(map.ny), 0.0);
  for (int y = 0; y < map.ny; ++y) {
    double s = 0.0;
    for (int x = 0; x < map.nx; ++x)
      s += map.value[static_cast<std::size_t>(y) * map.nx + x];
    line[static_cast<std::size_t>(y)] = s;
  }
  return line;
}

}  // namespace negf
