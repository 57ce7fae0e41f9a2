#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "windingstats/errors.hpp"

namespace windingstats {

using Complex = std::complex<double>;
using Vec2c = Eigen::Vector2cd;

inline constexpr double two_pi = 6.283185307179586476925286766559;

// u^T tau_2 w with tau_2 the second Pauli matrix: i (u_2 w_1 - u_1 w_2).
inline Complex tau2_form(const Vec2c& u, const Vec2c& w) {
    return Complex(0.0, 1.0) * (u(1) * w(0) - u(0) * w(1));
}

// Finite Laurent series sum_m c_m e^{imp}. Derivatives are exact
// (term-wise multiplication by im).
class LaurentSeries {
public:
    LaurentSeries() = default;
    explicit LaurentSeries(std::map<int, Complex> coeffs);

    Complex eval(double p, int order = 0) const;

    const std::map<int, Complex>& coeffs() const { return coeffs_; }
    bool empty() const { return coeffs_.empty(); }
    int min_index() const;
    int max_index() const;

    LaurentSeries scaled(Complex factor) const;

private:
    std::map<int, Complex> coeffs_;
};

// Tabulated scalar gauge f(p) = scale * exp(-I(p)) with
// I(p) = int_0^p v'dag v' / vdag v. The cumulative integral is stored on a
// uniform grid; evaluation completes the final partial panel by
// Gauss-Legendre quadrature, so no interpolation error enters.
struct GaugeTable {
    int grid_size = 0;
    double scale = 1.0;
    std::vector<Complex> cumulative;  // grid_size + 1 values of I(p_k)
    Complex berry{1.0, 0.0};
};

struct ParallelPoint {
    double p = 0.0;
    double q = 0.0;
    Complex phase{1.0, 0.0};  // S(p,q), unit modulus on the curve
};

class CoefficientField {
public:
    CoefficientField(LaurentSeries a, LaurentSeries b);

    // v(p), v'(p) or v''(p); gauged values when the field is canonical
    // with a nontrivial gauge.
    Vec2c eval(double p, int order = 0) const;

    // Underlying periodic Laurent field, ignoring any gauge.
    Vec2c eval_raw(double p, int order = 0) const;

    // S(p,q) = vdag(p) v(q).
    Complex covariance(double p, double q) const;

    // Mixed derivative d^i/dp^i d^j/dq^j S(p,q) for i,j <= 2.
    Complex covariance_deriv(double p, double q, int dp, int dq) const;

    // Delta(p) = v^T(p) tau_2 v'(p). Requires a canonical field.
    Complex delta(double p) const;

    // L(p,q) = -ln S(p,q), principal branch.
    Complex lagrangian(double p, double q) const;

    // Gradient (d/dp Re L, d/dq Re L), computed analytically.
    Eigen::Vector2d re_lagrangian_gradient(double p, double q) const;

    Eigen::Matrix2d hessian(const ParallelPoint& point) const;

    // Sign s(p,q) = sign Re[Delta*(p) Delta(q) S(q,p) / S(p,q)].
    double parallel_sign(double p, double q) const;

    ParallelPoint make_parallel_point(double p, double q) const;

    CoefficientField canonicalize(int grid_size = 4096) const;

    bool canonical() const { return canonical_; }
    bool has_gauge() const { return gauge_.has_value(); }
    // True when evaluation is 2pi-periodic (no nontrivial gauge applied).
    bool periodic() const { return !gauge_.has_value(); }
    std::optional<Complex> berry_phase() const { return berry_; }
    Complex gauge_factor(double p) const;
    Complex gauge_log_derivative(double p) const;  // f'/f = -vdag v'/vdag v

    const LaurentSeries& a() const { return a_; }
    const LaurentSeries& b() const { return b_; }
    int min_index() const;
    int max_index() const;

    std::uint64_t model_hash() const;

    static constexpr double parallel_tolerance = 1e-10;

private:
    Complex raw_log_derivative(double p) const;       // vdag v'/vdag v
    Complex raw_log_derivative_prime(double p) const;
    Complex gauge_integral(double p) const;           // I(p)

    LaurentSeries a_;
    LaurentSeries b_;
    bool canonical_ = false;
    std::optional<GaugeTable> gauge_;
    std::optional<Complex> berry_;
};

}  // namespace windingstats
