#include "negf/synthetic.hpp"

#include "negf/errors.hpp"

namespace negf {

SparseCoo SyntheticSystem::system_matrix(double energy) const {
  return assemble_system(h, sigma_r_left, sigma_r_right, sigma_r_phonon,
                         energy, layers);
}

SyntheticSystem make_synthetic_system(const SyntheticSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1)
    throw ConfigError("synthetic grid dimensions must be positive");
  if (spec.coupling_t == 0.0)
    throw ConfigError("synthetic coupling strength must be nonzero");

  std::mt19937_64 rng(spec.seed);
  auto u = [&] { return uniform01(rng); };

  SyntheticSystem sys;
  const int nx = spec.nx, ny = spec.ny;
  const int n = nx * ny;
  const double t = spec.coupling_t;
  sys.h.n = n;
  sys.layers.assign(static_cast<std::size_t>(ny), {});
  sys.coords.resize(static_cast<std::size_t>(n));
  sys.sigma_r_phonon.assign(static_cast<std::size_t>(n), cplx(0.0, 0.0));

  for (int j = 0; j < ny; ++j) {
    auto& layer = sys.layers[static_cast<std::size_t>(j)];
    layer.reserve(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) {
      const int d = j * nx + i;
      layer.push_back(d);
      sys.coords[static_cast<std::size_t>(d)] = {static_cast<double>(i),
                                                 static_cast<double>(j)};
    }
  }

  // 1. Diagonal: strongly dominant so every seed yields a well-conditioned
  // system near E = 0.  The fuzz variant adds a negative imaginary part,
  // which shows up in A = E - H with a positive one.
  for (int d = 0; d < n; ++d) {
    const double re = 6.0 + u();
    const double im = spec.fuzz ? -0.2 * uniform01(rng) : 0.0;
    sys.h.add(d, d, cplx(re, im));
  }

  // 2. Within-layer bonds (x direction); both orientations share one value,
  // keeping H complex symmetric.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      const int d = j * nx + i;
      const cplx v = spec.fuzz ? cplx(-(0.5 + u()), 0.3 * (u() - 0.5))
                               : cplx(-t, 0.0);
      sys.h.add(d, d + 1, v);
      sys.h.add(d + 1, d, v);
    }

  // 3. Inter-layer blocks.  Regular variant: exactly -t * I.  Fuzz variant:
  // rotate through scaled-identity, diagonal, and dense block structures.
  for (int j = 0; j + 1 < ny; ++j) {
    if (!spec.fuzz) {
      for (int i = 0; i < nx; ++i) {
        const int d = j * nx + i;
        sys.h.add(d, d + nx, cplx(-t, 0.0));
        sys.h.add(d + nx, d, cplx(-t, 0.0));
      }
      continue;
    }
    const int kind = j % 3;
    if (kind == 0) {
      const cplx v(-(0.5 + u()), 0.0);
      for (int i = 0; i < nx; ++i) {
        const int d = j * nx + i;
        sys.h.add(d, d + nx, v);
        sys.h.add(d + nx, d, v);
      }
    } else {
      for (int i = 0; i < nx; ++i) {
        const cplx v(-(0.5 + u()), 0.2 * (u() - 0.5));
        const int d = j * nx + i;
        sys.h.add(d, d + nx, v);
        sys.h.add(d + nx, d, v);
      }
      if (kind == 2 && nx >= 2) {
        // Two extra bonds make the block genuinely dense-structured.
        const cplx v(-0.3 * u(), 0.1 * (u() - 0.5));
        const int d = j * nx;
        sys.h.add(d, d + nx + 1, v);
        sys.h.add(d + nx + 1, d, v);
        const cplx w(-0.3 * u(), 0.1 * (u() - 0.5));
        sys.h.add(d + 1, d + nx, w);
        sys.h.add(d + nx, d + 1, w);
      }
    }
  }
  coo_normalize(sys.h);

  // 4. Contact retarded blocks: dense complex symmetric with a negative
  // imaginary diagonal shift (the physical sign of contact broadening).
  auto draw_contact = [&](const std::vector<int>& dofs) {
    const int m = static_cast<int>(dofs.size());
    CMatrix r(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        r(a, b) = cplx(0.2 * (u() - 0.5), 0.2 * (u() - 0.5));
    CMatrix s(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) s(a, b) = r(a, b) + r(b, a);
    for (int a = 0; a < m; ++a) s(a, a) -= cplx(0.0, 0.5 + 0.25 * u());
    ContactBlock c;
    c.dofs = dofs;
    c.sigma = std::move(s);
    return c;
  };
  sys.sigma_r_left = draw_contact(sys.layers.front());
  sys.sigma_r_right =
      ny > 1 ? draw_contact(sys.layers.back()) : ContactBlock{};

  // 5. Lesser self-energy: dense exactly-skew contact blocks, X - X^dagger;
  // the fuzz variant adds a positive imaginary diagonal on interior dofs.
  sys.sigma_lesser.n = n;
  auto add_lesser = [&](const std::vector<int>& dofs) {
    const int m = static_cast<int>(dofs.size());
    CMatrix x(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        x(a, b) = cplx(0.3 * (u() - 0.5), 0.3 * (u() - 0.5));
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const cplx v = x(a, b) - std::conj(x(b, a));
        if (v != cplx(0.0, 0.0)) sys.sigma_lesser.add(dofs[a], dofs[b], v);
      }
  };
  add_lesser(sys.layers.front());
  if (ny > 1) add_lesser(sys.layers.back());
  if (spec.fuzz) {
    for (int j = 1; j + 1 < ny; ++j)
      for (int d : sys.layers[static_cast<std::size_t>(j)])
        sys.sigma_lesser.add(d, d, cplx(0.0, 0.1 + 0.2 * u()));
  }
  coo_normalize(sys.sigma_lesser);

  sys.graph = graph_of_pattern(sys.system_matrix(0.0));
  return sys;
}

}  // namespace negf
