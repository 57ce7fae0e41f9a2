#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "windingstats/coeff_field.hpp"

namespace windingstats {

// One sampled pair (K1, K2) of N x N complex Ginibre matrices,
// E[K_jl] = 0 and E[|K_jl|^2] = 1. Immutable after creation.
struct Realization {
    Eigen::MatrixXcd k1;
    Eigen::MatrixXcd k2;
    int n = 0;
    std::uint64_t seed = 0;
};

Realization sample(int n, std::uint64_t seed);

// K(p) = a(p) K1 + b(p) K2 or its p-derivative; gauged coefficients when
// the field is canonical.
Eigen::MatrixXcd eval_k(const Realization& real, const CoefficientField& field,
                        double p, int order = 0);

// Winding number density w(p) = tr[K^{-1}(p) K'(p)], one LU + solve.
// Near-singular K(p) is retried at p +- 1e-9 before erroring.
Complex winding_density(const Realization& real, const CoefficientField& field,
                        double p);

// Complex log det K(p) from the LU factors; real part is log|det|,
// imaginary part a principal-branch phase. Avoids overflow of det at
// large N.
// Optional rcond output reports the reciprocal condition estimate of K(p);
// values near machine epsilon mean the phase of det is unreliable.
Complex log_det_k(const Realization& real, const CoefficientField& field,
                  double p, double* rcond = nullptr);

// Binary dump for cross-platform reproducibility checks. Layout: magic
// "WSRE", u32 version, u32 n, u64 seed, then K1 and K2 row-major as
// little-endian complex doubles.
void save_realization(const Realization& real, const std::string& path);
Realization load_realization(const std::string& path);

}  // namespace windingstats
