#include "windingstats/winding.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "windingstats/errors.hpp"

namespace windingstats {

namespace {

constexpr double pi = 3.14159265358979323846;

double wrap_to_pi(double x) {
    x = std::fmod(x + pi, two_pi);
    if (x < 0) x += two_pi;
    return x - pi;
}

// Phase of det K(p) together with |d/dp log det K| = |tr(K^{-1} K')|.
// The derivative magnitude drives interval refinement: wrapped phase steps
// alone can alias away full turns when several zeros of det K sit close to
// the unit circle inside one interval, but the 1/distance tails of the
// log-derivative make such zeros visible from the interval endpoints.
struct PhaseSample {
    double phi;
    double slope;  // |tr(K^{-1} K')|
};

PhaseSample det_phase(const Realization& real, const CoefficientField& field,
                      double p) {
    const Eigen::MatrixXcd k = eval_k(real, field, p, 0);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(k);
    // When K(p) is singular to machine precision the computed phase is
    // roundoff noise and unwrapping can silently miscount; bail out so the
    // realization is recorded as excluded instead.
    if (lu.rcond() < 3e-15)
        throw NonConvergentError(
            "det K numerically vanishes on the contour: phase unreliable");
    const auto& u = lu.matrixLU();
    double arg = 0.0;
    for (int i = 0; i < real.n; ++i) arg += std::arg(u(i, i));
    if (lu.permutationP().determinant() < 0) arg += pi;
    const Complex trace = lu.solve(eval_k(real, field, p, 1)).trace();
    return {wrap_to_pi(arg), std::abs(trace)};
}

void require_periodic(const CoefficientField& field, const char* op) {
    if (!field.periodic())
        throw ModelError(std::string(op) + " requires a 2pi-periodic field");
}

struct UnwrapState {
    const Realization& real;
    const CoefficientField& field;
    int max_depth;
    int points = 0;
    int deepest = 0;
    double total = 0.0;

    void accumulate(double p_lo, const PhaseSample& lo, double p_hi,
                    const PhaseSample& hi, int depth) {
        const double step = wrap_to_pi(hi.phi - lo.phi);
        // Accept the interval only when the measured step is small AND the
        // endpoint log-derivative bound says the true phase cannot have
        // moved by much more than that.
        const double swing_bound = 0.5 * (lo.slope + hi.slope) * (p_hi - p_lo);
        if (std::abs(step) <= pi / 2 && swing_bound <= pi / 2) {
            total += step;
            return;
        }
        if (depth >= max_depth)
            throw NonConvergentError(
                "phase step stays above pi/2 at max bisection depth (near-zero of det?)");
        const double p_mid = 0.5 * (p_lo + p_hi);
        const PhaseSample mid = det_phase(real, field, p_mid);
        ++points;
        deepest = std::max(deepest, depth + 1);
        accumulate(p_lo, lo, p_mid, mid, depth + 1);
        accumulate(p_mid, mid, p_hi, hi, depth + 1);
    }
};

// Count eigenvalues strictly inside the unit circle; reject circle grazers.
int count_inside(const Eigen::VectorXcd& values) {
    int inside = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double r = std::abs(values(i));
        if (std::abs(r - 1.0) < 1e-8)
            throw RootOnCircleError("root of det K on the unit circle: winding undefined");
        if (r < 1.0) ++inside;
    }
    return inside;
}

}  // namespace

int default_initial_grid(const Realization& real, const CoefficientField& field) {
    return std::max(256, 4 * real.n * (field.max_index() - field.min_index()));
}

WindingResult winding_unwrap(const Realization& real, const CoefficientField& field,
                             int initial_grid, int max_depth) {
    require_periodic(field, "winding_unwrap");
    if (initial_grid == 0) initial_grid = default_initial_grid(real, field);
    if (initial_grid < 64) throw ModelError("winding_unwrap requires initial_grid >= 64");

    std::vector<PhaseSample> phase(static_cast<std::size_t>(initial_grid) + 1);
    for (int i = 0; i <= initial_grid; ++i)
        phase[static_cast<std::size_t>(i)] = det_phase(real, field, two_pi * i / initial_grid);

    UnwrapState state{real, field, max_depth};
    state.points = initial_grid + 1;
    for (int i = 0; i < initial_grid; ++i) {
        state.accumulate(two_pi * i / initial_grid, phase[static_cast<std::size_t>(i)],
                         two_pi * (i + 1) / initial_grid, phase[static_cast<std::size_t>(i) + 1],
                         0);
    }

    const double turns = state.total / two_pi;
    const int w = static_cast<int>(std::lround(turns));
    if (std::abs(turns - w) >= 0.1)
        throw InconsistentError("unwrapped phase is not close to an integer multiple of 2pi");
    return WindingResult{w, WindingMethod::phase_unwrap, state.points, state.deepest};
}

WindingResult winding_root_count(const Realization& real, const CoefficientField& field) {
    require_periodic(field, "winding_root_count");
    const int m_min = field.min_index();
    const int m_max = field.max_index();
    const int degree_bound = real.n * (m_max - m_min);
    if (degree_bound > 2048)
        throw ModelError("root counting capped at polynomial degree 2048");

    const int d = m_max - m_min;
    if (d == 0) {
        // det K is const * s^{N m_min}.
        return WindingResult{real.n * m_min, WindingMethod::root_count, 1, 0};
    }

    // Zeros of s^{-N m_min} det K(s) are the finite generalized eigenvalues
    // of the block companion pencil (A, B) of the matrix polynomial
    // P(s) = sum_j B_j s^j.  Going through the matrix linearization instead
    // of scalar polynomial coefficients matters: the zeros can cluster near
    // the unit circle, where a monomial-basis companion cannot resolve them
    // in double precision.  Solved by shift-invert so a singular leading
    // block (roots at infinity) is handled without special cases.
    auto coeff_at = [](const LaurentSeries& s, int m) {
        const auto it = s.coeffs().find(m);
        return it == s.coeffs().end() ? Complex(0.0, 0.0) : it->second;
    };

    const int n = real.n;
    const int dim = n * d;
    std::vector<Eigen::MatrixXcd> blocks;
    blocks.reserve(static_cast<std::size_t>(d) + 1);
    for (int j = 0; j <= d; ++j)
        blocks.push_back(coeff_at(field.a(), m_min + j) * real.k1 +
                         coeff_at(field.b(), m_min + j) * real.k2);

    Eigen::MatrixXcd a_mat = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::MatrixXcd b_mat = Eigen::MatrixXcd::Identity(dim, dim);
    for (int j = 0; j + 1 < d; ++j)
        a_mat.block(n * j, n * (j + 1), n, n).setIdentity();
    for (int j = 0; j < d; ++j)
        a_mat.block(n * (d - 1), n * j, n, n) = -blocks[static_cast<std::size_t>(j)];
    b_mat.block(n * (d - 1), n * (d - 1), n, n) = blocks[static_cast<std::size_t>(d)];

    // Generic interior shifts; retried if one happens to hit a zero.
    const Complex shifts[3] = {{0.31, -0.27}, {-0.41, 0.18}, {0.13, 0.44}};
    for (const Complex& sigma : shifts) {
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(a_mat - sigma * b_mat);
        if (!lu.isInvertible()) continue;
        const Eigen::MatrixXcd shifted = lu.solve(b_mat);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(shifted, false);
        int inside = 0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const Complex mu = solver.eigenvalues()(i);
            if (std::abs(mu) < 1e-300) continue;  // eigenvalue at infinity
            const double r = std::abs(sigma + 1.0 / mu);
            if (std::abs(r - 1.0) < 1e-8)
                throw RootOnCircleError(
                    "root of det K on the unit circle: winding undefined");
            if (r < 1.0) ++inside;
        }
        return WindingResult{inside + n * m_min, WindingMethod::root_count, dim, 0};
    }
    throw NonConvergentError("root counting: all shift candidates hit a zero of det K");
}

WindingResult winding_pencil(const Realization& real, const CoefficientField& field) {
    require_periodic(field, "winding_pencil");
    const int m_min = field.min_index();
    const int m_max = field.max_index();
    const int d = m_max - m_min;
    if (d == 0) return WindingResult{real.n * m_min, WindingMethod::pencil, 0, 0};

    auto coeff_at = [](const LaurentSeries& s, int m) {
        const auto it = s.coeffs().find(m);
        return it == s.coeffs().end() ? Complex(0.0, 0.0) : it->second;
    };

    std::vector<Eigen::MatrixXcd> blocks;
    blocks.reserve(static_cast<std::size_t>(d) + 1);
    for (int j = 0; j <= d; ++j)
        blocks.push_back(coeff_at(field.a(), m_min + j) * real.k1 +
                         coeff_at(field.b(), m_min + j) * real.k2);

    Eigen::PartialPivLU<Eigen::MatrixXcd> lead(blocks.back());
    if (lead.rcond() < 1e-12)
        throw NearSingularError("leading matrix coefficient nearly singular");

    const int n = real.n;
    const int dim = n * d;
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(dim, dim);
    for (int j = 0; j + 1 < d; ++j)
        companion.block(n * j, n * (j + 1), n, n).setIdentity();
    for (int j = 0; j < d; ++j)
        companion.block(n * (d - 1), n * j, n, n) =
            -lead.solve(blocks[static_cast<std::size_t>(j)]);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    const int inside = count_inside(solver.eigenvalues());
    return WindingResult{inside + n * m_min, WindingMethod::pencil, dim, 0};
}

WindingResult compute_winding(const Realization& real, const CoefficientField& field,
                              WindingMethod method) {
    switch (method) {
        case WindingMethod::phase_unwrap:
            return winding_unwrap(real, field);
        case WindingMethod::root_count:
            return winding_root_count(real, field);
        case WindingMethod::pencil:
        default:
            return winding_pencil(real, field);
    }
}

}  // namespace windingstats
