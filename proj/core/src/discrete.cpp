#include "terracelab/discrete.hpp"

#include <stdexcept>

namespace terracelab {

std::vector<double> sample_coefficient(const PeriodicCoefficient& a, int m) {
  std::vector<double> out(m);
  for (int j = 0; j < m; ++j) out[j] = a.eval(a.period() * j / m);
  return out;
}

std::vector<double> sample_modulation(const Nonlinearity& nl, int m) {
  std::vector<double> out(m);
  for (int j = 0; j < m; ++j) out[j] = nl.modulation(nl.period() * j / m);
  return out;
}

std::vector<double> harmonic_faces(const std::vector<double>& a_node) {
  const std::size_t m = a_node.size();
  std::vector<double> face(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double l = a_node[j], r = a_node[(j + 1) % m];
    face[j] = 2.0 * l * r / (l + r);
  }
  return face;
}

void apply_periodic_diffusion(const std::vector<double>& face, double dx,
                              const std::vector<double>& u, std::vector<double>& out) {
  const std::size_t m = u.size();
  if (face.size() != m) throw std::invalid_argument("apply_periodic_diffusion: size mismatch");
  out.resize(m);
  const double inv = 1.0 / (dx * dx);
  for (std::size_t j = 0; j < m; ++j) {
    const double up = u[(j + 1) % m], um = u[(j + m - 1) % m];
    out[j] = (face[j] * (up - u[j]) - face[(j + m - 1) % m] * (u[j] - um)) * inv;
  }
}

} // namespace terracelab
