#pragma once

#include "windingstats/ensemble.hpp"

namespace windingstats {

enum class WindingMethod { phase_unwrap, root_count, pencil };

struct WindingResult {
    int w = 0;
    WindingMethod method = WindingMethod::phase_unwrap;
    int grid_points_used = 0;
    int refinement_depth = 0;
};

// Default unwrap grid: max(256, 4 N (m_max - m_min)).
int default_initial_grid(const Realization& real, const CoefficientField& field);

// Accumulates arg det K(p) on a uniform grid, adaptively bisecting any
// interval whose wrapped phase step exceeds pi/2. Requires a 2pi-periodic
// field (not the gauged one).
WindingResult winding_unwrap(const Realization& real, const CoefficientField& field,
                             int initial_grid = 0, int max_depth = 30);

// Recovers the Laurent polynomial s^{-N m_min} det K(s), s = e^{ip}, from
// det values at roots of unity, then counts roots strictly inside the unit
// circle via companion-matrix eigenvalues. Degree cap 2048.
WindingResult winding_root_count(const Realization& real, const CoefficientField& field);

// Counts zeros of det K inside the unit circle as eigenvalues of the block
// companion linearization of the matrix polynomial sum_j s^j (a_j K1 + b_j K2).
// One N(m_max-m_min) eigensolve per realization; the fast path for Monte
// Carlo production runs.
WindingResult winding_pencil(const Realization& real, const CoefficientField& field);

WindingResult compute_winding(const Realization& real, const CoefficientField& field,
                              WindingMethod method);

}  // namespace windingstats
