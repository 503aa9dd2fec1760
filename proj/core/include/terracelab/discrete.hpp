#pragma once

#include <vector>

#include "terracelab/model.hpp"

namespace terracelab {

/// One period of node samples of an L-periodic function, m nodes at x = j L / m.
std::vector<double> sample_coefficient(const PeriodicCoefficient& a, int m);
std::vector<double> sample_modulation(const Nonlinearity& nl, int m);

/// Face diffusivities by harmonic mean of the two adjacent node values.
/// face[j] couples nodes j and j+1; the last face wraps around to node 0.
std::vector<double> harmonic_faces(const std::vector<double>& a_node);

/// Conservative second difference with periodic wrap:
///   out[j] = (face[j] (u[j+1] - u[j]) - face[j-1] (u[j] - u[j-1])) / dx^2.
void apply_periodic_diffusion(const std::vector<double>& face, double dx,
                              const std::vector<double>& u, std::vector<double>& out);

} // namespace terracelab
