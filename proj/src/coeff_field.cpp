#include "windingstats/coeff_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace windingstats {

namespace {

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr double gl8_x[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double gl8_w[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

template <typename F>
Complex gl8_integrate(const F& f, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    Complex acc{0.0, 0.0};
    for (int i = 0; i < 8; ++i) acc += gl8_w[i] * f(mid + half * gl8_x[i]);
    return acc * half;
}

bool finite(Complex z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace

LaurentSeries::LaurentSeries(std::map<int, Complex> coeffs)
    : coeffs_(std::move(coeffs)) {
    for (const auto& [m, c] : coeffs_) {
        (void)m;
        if (!finite(c)) throw ModelError("non-finite Laurent coefficient");
    }
}

Complex LaurentSeries::eval(double p, int order) const {
    Complex acc{0.0, 0.0};
    for (const auto& [m, c] : coeffs_) {
        Complex term = c * std::polar(1.0, m * p);
        for (int d = 0; d < order; ++d) term *= Complex(0.0, m);
        acc += term;
    }
    return acc;
}

int LaurentSeries::min_index() const {
    int idx = std::numeric_limits<int>::max();
    for (const auto& [m, c] : coeffs_)
        if (std::abs(c) > 0.0) idx = std::min(idx, m);
    if (idx == std::numeric_limits<int>::max())
        throw ModelError("Laurent series is identically zero");
    return idx;
}

int LaurentSeries::max_index() const {
    int idx = std::numeric_limits<int>::min();
    for (const auto& [m, c] : coeffs_)
        if (std::abs(c) > 0.0) idx = std::max(idx, m);
    if (idx == std::numeric_limits<int>::min())
        throw ModelError("Laurent series is identically zero");
    return idx;
}

LaurentSeries LaurentSeries::scaled(Complex factor) const {
    std::map<int, Complex> out;
    for (const auto& [m, c] : coeffs_) out[m] = factor * c;
    return LaurentSeries(std::move(out));
}

CoefficientField::CoefficientField(LaurentSeries a, LaurentSeries b)
    : a_(std::move(a)), b_(std::move(b)) {
    if (a_.empty() || b_.empty())
        throw ModelError("coefficient series must not be empty");
    // Model requirement v(p) != 0 everywhere, checked on a grid.
    constexpr int grid = 1024;
    for (int i = 0; i < grid; ++i) {
        const double p = two_pi * i / grid;
        if (eval_raw(p).norm() < 1e-12)
            throw ModelError("v(p) vanishes on the validation grid");
    }
}

Vec2c CoefficientField::eval_raw(double p, int order) const {
    return Vec2c(a_.eval(p, order), b_.eval(p, order));
}

Vec2c CoefficientField::eval(double p, int order) const {
    if (!gauge_) return eval_raw(p, order);
    if (order < 0 || order > 2) throw ModelError("derivative order must be 0, 1 or 2");
    const Complex f = gauge_factor(p);
    const Vec2c v = eval_raw(p, 0);
    if (order == 0) return f * v;
    // f'/f = -g with g = vdag v'/vdag v, known analytically, so derivatives
    // of the gauged field never differentiate the table.
    const Complex g = raw_log_derivative(p);
    const Vec2c v1 = eval_raw(p, 1);
    if (order == 1) return f * (v1 - g * v);
    const Complex g1 = raw_log_derivative_prime(p);
    const Vec2c v2 = eval_raw(p, 2);
    return f * (v2 - 2.0 * g * v1 + (g * g - g1) * v);
}

Complex CoefficientField::covariance(double p, double q) const {
    return eval(p).dot(eval(q));
}

Complex CoefficientField::covariance_deriv(double p, double q, int dp, int dq) const {
    return eval(p, dp).dot(eval(q, dq));
}

Complex CoefficientField::delta(double p) const {
    if (!canonical_) throw ModelError("delta requires a canonical field");
    return tau2_form(eval(p, 0), eval(p, 1));
}

Complex CoefficientField::lagrangian(double p, double q) const {
    const Complex s = covariance(p, q);
    if (std::abs(s) < 1e-14)
        throw BranchPointError("S(p,q) vanishes: vectors orthogonal, L undefined");
    return -std::log(s);
}

Eigen::Vector2d CoefficientField::re_lagrangian_gradient(double p, double q) const {
    const Complex s = covariance(p, q);
    if (std::abs(s) < 1e-14)
        throw BranchPointError("S(p,q) vanishes: vectors orthogonal, L undefined");
    const Complex dLdp = -covariance_deriv(p, q, 1, 0) / s;
    const Complex dLdq = -covariance_deriv(p, q, 0, 1) / s;
    return Eigen::Vector2d(dLdp.real(), dLdq.real());
}

double CoefficientField::parallel_sign(double p, double q) const {
    const Complex spq = covariance(p, q);
    const Complex sqp = covariance(q, p);
    const Complex value = std::conj(delta(p)) * delta(q) * sqp / spq;
    return value.real() >= 0.0 ? 1.0 : -1.0;
}

ParallelPoint CoefficientField::make_parallel_point(double p, double q) const {
    const Complex s = covariance(p, q);
    const Complex l = lagrangian(p, q);
    if (l.real() > parallel_tolerance || std::abs(std::abs(s) - 1.0) > 1e-8)
        throw ModelError("point fails the parallelism tolerance");
    return ParallelPoint{p, q, s};
}

Eigen::Matrix2d CoefficientField::hessian(const ParallelPoint& point) const {
    const Complex l = lagrangian(point.p, point.q);
    if (l.real() > parallel_tolerance)
        throw ModelError("hessian: point fails the parallelism tolerance");
    const double dp = std::abs(delta(point.p));
    const double dq = std::abs(delta(point.q));
    const double s = parallel_sign(point.p, point.q);
    Eigen::Matrix2d h;
    h << dp * dp, -s * dp * dq, -s * dp * dq, dq * dq;
    return h;
}

Complex CoefficientField::raw_log_derivative(double p) const {
    const Vec2c v = eval_raw(p, 0);
    const Vec2c v1 = eval_raw(p, 1);
    return v.dot(v1) / v.dot(v);
}

Complex CoefficientField::raw_log_derivative_prime(double p) const {
    const Vec2c v = eval_raw(p, 0);
    const Vec2c v1 = eval_raw(p, 1);
    const Vec2c v2 = eval_raw(p, 2);
    const Complex n = v.dot(v);
    const Complex h = v.dot(v1);
    const Complex h1 = v1.dot(v1) + v.dot(v2);
    const Complex n1 = v1.dot(v) + v.dot(v1);
    return (h1 * n - h * n1) / (n * n);
}

Complex CoefficientField::gauge_integral(double p) const {
    const GaugeTable& table = *gauge_;
    const double panel = two_pi / table.grid_size;
    int k = static_cast<int>(std::floor(p / panel));
    k = std::clamp(k, 0, table.grid_size);
    Complex acc = table.cumulative[static_cast<std::size_t>(k)];
    const double lo = k * panel;
    if (p > lo) {
        acc += gl8_integrate([this](double x) { return raw_log_derivative(x); },
                             lo, p);
    }
    return acc;
}

Complex CoefficientField::gauge_factor(double p) const {
    if (!gauge_) return Complex(1.0, 0.0);
    // Extend past the seam by the Berry phase: f(p + 2pi) = B f(p).
    double wraps = std::floor(p / two_pi);
    const double r = p - two_pi * wraps;
    Complex f = gauge_->scale * std::exp(-gauge_integral(r));
    if (wraps != 0.0) f *= std::pow(gauge_->berry, wraps);
    return f;
}

Complex CoefficientField::gauge_log_derivative(double p) const {
    if (!gauge_) return Complex(0.0, 0.0);
    return -raw_log_derivative(p - two_pi * std::floor(p / two_pi));
}

CoefficientField CoefficientField::canonicalize(int grid_size) const {
    if (grid_size < 256) throw ModelError("canonicalize requires grid_size >= 256");

    const double panel = two_pi / grid_size;
    double max_g = 0.0;
    double max_norm_dev = 0.0;
    for (int i = 0; i <= grid_size; ++i) {
        const double p = std::min(i * panel, two_pi);
        const double nrm = eval_raw(p).norm();
        if (nrm < 1e-12) throw ModelError("degenerate model: ||v(p)|| vanishes");
        max_norm_dev = std::max(max_norm_dev, std::abs(nrm - 1.0));
        max_g = std::max(max_g, std::abs(raw_log_derivative(p)));
    }

    if (max_g < 1e-13) {
        // The gauge reduces to a constant; absorb it into the coefficients
        // so the field stays a periodic Laurent series.
        const double scale = 1.0 / eval_raw(0.0).norm();
        CoefficientField out(a_.scaled(scale), b_.scaled(scale));
        out.canonical_ = true;
        out.berry_ = Complex(1.0, 0.0);
        return out;
    }

    GaugeTable table;
    table.grid_size = grid_size;
    table.scale = 1.0 / eval_raw(0.0).norm();
    table.cumulative.resize(static_cast<std::size_t>(grid_size) + 1);
    table.cumulative[0] = Complex(0.0, 0.0);
    for (int i = 0; i < grid_size; ++i) {
        const Complex inc = gl8_integrate(
            [this](double x) { return raw_log_derivative(x); }, i * panel,
            (i + 1) * panel);
        table.cumulative[static_cast<std::size_t>(i) + 1] =
            table.cumulative[static_cast<std::size_t>(i)] + inc;
    }
    table.berry = std::exp(-table.cumulative.back());
    if (std::abs(std::abs(table.berry) - 1.0) > 1e-10)
        throw ModelError("Berry phase is not a complex phase");

    CoefficientField out(a_, b_);
    out.canonical_ = true;
    out.gauge_ = std::move(table);
    out.berry_ = out.gauge_->berry;
    return out;
}

int CoefficientField::min_index() const {
    int idx = std::numeric_limits<int>::max();
    for (const LaurentSeries* s : {&a_, &b_}) {
        for (const auto& [m, c] : s->coeffs())
            if (std::abs(c) > 0.0) idx = std::min(idx, m);
    }
    if (idx == std::numeric_limits<int>::max())
        throw ModelError("all coefficients vanish");
    return idx;
}

int CoefficientField::max_index() const {
    int idx = std::numeric_limits<int>::min();
    for (const LaurentSeries* s : {&a_, &b_}) {
        for (const auto& [m, c] : s->coeffs())
            if (std::abs(c) > 0.0) idx = std::max(idx, m);
    }
    if (idx == std::numeric_limits<int>::min())
        throw ModelError("all coefficients vanish");
    return idx;
}

std::uint64_t CoefficientField::model_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t x) {
        h ^= x;
        h *= 1099511628211ULL;
    };
    auto mix_double = [&](double d) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(d));
        std::memcpy(&bits, &d, sizeof(bits));
        mix(bits);
    };
    for (const LaurentSeries* s : {&a_, &b_}) {
        for (const auto& [m, c] : s->coeffs()) {
            mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(m)));
            mix_double(c.real());
            mix_double(c.imag());
        }
        mix(0x5bd1e995ULL);
    }
    mix(canonical_ ? 2u : 1u);
    return h;
}

}  // namespace windingstats
