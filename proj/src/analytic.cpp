#include "windingstats/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "windingstats/errors.hpp"

namespace windingstats {

namespace {

constexpr double pi = 3.14159265358979323846;

void require_canonical(const CoefficientField& field, const char* op) {
    if (!field.canonical())
        throw ModelError(std::string(op) + " requires a canonical field");
}

void require_small_k(std::size_t k, const char* op) {
    if (k == 0 || k > 8)
        throw ModelError(std::string(op) + " supports 1 <= k <= 8");
}

Complex pow_n(Complex base, int n) { return std::pow(base, n); }

double condition_estimate(const Eigen::FullPivLU<Eigen::MatrixXcd>& lu) {
    const auto& u = lu.matrixLU();
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double d = std::abs(u(i, i));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

double re_lagrangian(const CoefficientField& field, double p, double q) {
    const double mag = std::abs(field.covariance(p, q));
    if (mag < 1e-300) return 700.0;
    return -std::log(mag);
}

double torus_wrap(double x) {
    x = std::fmod(x, two_pi);
    if (x < 0) x += two_pi;
    return x;
}

double torus_delta(double a, double b) {
    double d = std::fmod(a - b, two_pi);
    if (d > pi) d -= two_pi;
    if (d < -pi) d += two_pi;
    return d;
}

double torus_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const double dx = torus_delta(a(0), b(0));
    const double dy = torus_delta(a(1), b(1));
    return std::hypot(dx, dy);
}

// Transverse Newton steps on Re L using the analytic gradient and a
// finite-difference Hessian; the Hessian is singular along the curve, so
// the step is restricted to the non-degenerate eigendirections.
bool refine_to_curve(const CoefficientField& field, Eigen::Vector2d& x) {
    constexpr double fd_step = 1e-6;
    for (int iter = 0; iter < 80; ++iter) {
        if (re_lagrangian(field, x(0), x(1)) < 1e-13) return true;
        const Eigen::Vector2d g = field.re_lagrangian_gradient(x(0), x(1));
        Eigen::Matrix2d h;
        for (int axis = 0; axis < 2; ++axis) {
            Eigen::Vector2d lo = x, hi = x;
            lo(axis) -= fd_step;
            hi(axis) += fd_step;
            h.col(axis) = (field.re_lagrangian_gradient(hi(0), hi(1)) -
                           field.re_lagrangian_gradient(lo(0), lo(1))) /
                          (2.0 * fd_step);
        }
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
        Eigen::Vector2d step = Eigen::Vector2d::Zero();
        const double scale = std::max(1.0, std::abs(es.eigenvalues().maxCoeff()));
        for (int i = 0; i < 2; ++i) {
            const double lambda = es.eigenvalues()(i);
            if (lambda > 1e-8 * scale)
                step -= (es.eigenvectors().col(i).dot(g) / lambda) * es.eigenvectors().col(i);
        }
        const double cap = 0.1;
        if (step.norm() > cap) step *= cap / step.norm();
        if (step.norm() < 1e-16) break;
        x += step;
    }
    return re_lagrangian(field, x(0), x(1)) < CoefficientField::parallel_tolerance;
}

double hessian_trace(const CoefficientField& field, const Eigen::Vector2d& x) {
    const double dp = std::abs(field.delta(x(0)));
    const double dq = std::abs(field.delta(x(1)));
    return dp * dp + dq * dq;
}

Eigen::Vector2d curve_tangent(const CoefficientField& field, const Eigen::Vector2d& x,
                              const Eigen::Vector2d* prev) {
    const double dp = std::abs(field.delta(x(0)));
    const double dq = std::abs(field.delta(x(1)));
    const double s = field.parallel_sign(x(0), x(1));
    Eigen::Vector2d t(dq, s * dp);
    const double nrm = t.norm();
    if (nrm < 1e-12) throw MulticriticalPointError("Hessian vanishes: multicritical point");
    t /= nrm;
    if (prev && t.dot(*prev) < 0) t = -t;
    if (!prev && (t(0) < 0 || (t(0) == 0 && t(1) < 0))) t = -t;
    return t;
}

// A small Hessian trace means a possible crossing of curves; minimize the
// trace along the tangent line and reject the model if it actually reaches
// zero there.
void check_multicritical(const CoefficientField& field, const Eigen::Vector2d& x,
                         const Eigen::Vector2d& dir, double window) {
    if (hessian_trace(field, x) > 1e-2) return;
    const double gr = 0.6180339887498949;
    double a = -window, b = window;
    auto value = [&](double t) { return hessian_trace(field, x + t * dir); };
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = value(c), fd = value(d);
    for (int iter = 0; iter < 90; ++iter) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = value(d);
        }
    }
    if (std::min(fc, fd) < 1e-8)
        throw MulticriticalPointError(
            "parallelism curves cross: Hessian trace vanishes along the curve");
}

CurveSample make_sample(const CoefficientField& field, const Eigen::Vector2d& x,
                        const Eigen::Vector2d& dir, double t) {
    CurveSample s;
    s.t = t;
    s.p = torus_wrap(x(0));
    s.q = torus_wrap(x(1));
    s.s1 = dir(0) >= 0 ? 1.0 : -1.0;
    s.s2 = dir(1) >= 0 ? 1.0 : -1.0;
    s.abs_delta_p = std::abs(field.delta(x(0)));
    s.abs_delta_q = std::abs(field.delta(x(1)));
    s.tangent_norm = 1.0;  // arclength parametrization
    return s;
}

Curve trace_curve(const CoefficientField& field, Eigen::Vector2d start, double h,
                  int max_steps) {
    if (!refine_to_curve(field, start))
        throw NonClosureError("seed point did not converge onto a parallelism curve");

    Curve curve;
    Eigen::Vector2d dir = curve_tangent(field, start, nullptr);
    check_multicritical(field, start, dir, 2.0 * h);
    const Eigen::Vector2d start_dir = dir;
    curve.samples.push_back(make_sample(field, start, dir, 0.0));

    Eigen::Vector2d x = start;
    double arc = 0.0;
    for (int step = 0; step < max_steps; ++step) {
        Eigen::Vector2d next = x + h * dir;
        bool ok = refine_to_curve(field, next);
        if (!ok) {
            next = x + 0.5 * h * dir;
            ok = refine_to_curve(field, next);
        }
        if (!ok) throw NonClosureError("curve continuation lost the curve");
        dir = curve_tangent(field, next, &dir);
        check_multicritical(field, next, dir, 2.0 * h);
        arc += (next - x).norm();
        x = next;

        if (step >= 4 && torus_distance(x, start) < 0.6 * h && dir.dot(start_dir) > 0.5) {
            const double closing = torus_distance(x, start);
            curve.samples.push_back(make_sample(field, x, dir, arc));
            CurveSample last = curve.samples.front();
            last.t = arc + closing;
            last.s1 = curve.samples.back().s1;
            last.s2 = curve.samples.back().s2;
            curve.samples.push_back(last);
            curve.length = last.t;
            return curve;
        }
        curve.samples.push_back(make_sample(field, x, dir, arc));
    }
    throw NonClosureError("curve continuation did not close");
}

double min_distance_to_curve(const Curve& curve, const Eigen::Vector2d& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const CurveSample& s : curve.samples)
        best = std::min(best, torus_distance(Eigen::Vector2d(s.p, s.q), x));
    return best;
}

bool hausdorff_duplicate(const Curve& a, const Curve& b, double tol) {
    double worst = 0.0;
    for (const CurveSample& s : a.samples)
        worst = std::max(worst, min_distance_to_curve(b, Eigen::Vector2d(s.p, s.q)));
    return worst < tol;
}

// d_a = s_a |Delta_a| psi_a for the unfolded formulas.
std::vector<double> scaled_offsets(std::span<const double> signs,
                                   std::span<const double> abs_delta,
                                   std::span<const double> psi) {
    std::vector<double> d(psi.size());
    for (std::size_t a = 0; a < psi.size(); ++a) d[a] = signs[a] * abs_delta[a] * psi[a];
    return d;
}

double unfolded_sum(std::span<const double> signs, std::span<const double> abs_delta,
                    std::span<const double> psi) {
    const std::size_t k = psi.size();
    require_small_k(k, "unfolded_corr");
    const std::vector<double> d = scaled_offsets(signs, abs_delta, psi);

    double pref = 1.0;
    for (std::size_t a = 0; a < k; ++a) pref *= signs[a] * abs_delta[a];

    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                                   static_cast<Eigen::Index>(k));
    Eigen::MatrixXd pair = kernel;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            if (a == b) continue;
            const double x = d[a] - d[b];
            kernel(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                std::exp(-0.5 * x * x) / x;
            pair(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1.0 / (x * x);
        }

    double total = 0.0;
    std::vector<int> perm(k);
    for (std::size_t l = 0; 2 * l <= k; ++l) {
        double factor = (l % 2 == 0) ? 1.0 : -1.0;
        for (std::size_t m = 0; m < l; ++m) factor /= 2.0 * (m + 1.0);
        double rest_fact = 1.0;
        for (std::size_t m = 2; m <= k - 2 * l; ++m) rest_fact *= static_cast<double>(m);
        factor /= rest_fact;

        std::iota(perm.begin(), perm.end(), 0);
        double perm_sum = 0.0;
        do {
            double term = 1.0;
            for (std::size_t m = 0; m < l; ++m)
                term *= pair(perm[2 * m], perm[2 * m + 1]);
            const std::size_t rest = k - 2 * l;
            if (rest > 0) {
                Eigen::MatrixXd sub(static_cast<Eigen::Index>(rest),
                                    static_cast<Eigen::Index>(rest));
                for (std::size_t a = 0; a < rest; ++a)
                    for (std::size_t b = 0; b < rest; ++b)
                        sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                            kernel(perm[2 * l + a], perm[2 * l + b]);
                term *= sub.determinant();
            }
            perm_sum += term;
        } while (std::next_permutation(perm.begin(), perm.end()));
        total += factor * perm_sum;
    }
    return pref * total;
}

// (exp(-x^2) - 1) / x^2 with its removable singularity expanded.
double exp_ratio(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return -1.0 + 0.5 * x2 - x2 * x2 / 6.0;
    }
    return std::expm1(-x * x) / (x * x);
}

struct CurveGraph {
    std::vector<double> p;  // strictly increasing, covers [p0, p0 + 2pi]
    std::vector<double> q;  // unwrapped

    double value(double x) const {
        double t = p.front() + std::fmod(x - p.front(), two_pi);
        if (t < p.front()) t += two_pi;
        const auto it = std::upper_bound(p.begin(), p.end(), t);
        std::size_t i = static_cast<std::size_t>(std::distance(p.begin(), it));
        i = std::clamp<std::size_t>(i, 1, p.size() - 1);
        const double w = (t - p[i - 1]) / (p[i] - p[i - 1]);
        return q[i - 1] + w * (q[i] - q[i - 1]);
    }

    double slope(double x) const {
        double t = p.front() + std::fmod(x - p.front(), two_pi);
        if (t < p.front()) t += two_pi;
        const auto it = std::upper_bound(p.begin(), p.end(), t);
        std::size_t i = static_cast<std::size_t>(std::distance(p.begin(), it));
        i = std::clamp<std::size_t>(i, 1, p.size() - 1);
        return (q[i] - q[i - 1]) / (p[i] - p[i - 1]);
    }
};

CurveGraph as_graph(const Curve& curve) {
    // Interpret the curve as q = g(p); requires a fixed sign of Gamma'_1.
    CurveGraph graph;
    const double s1 = curve.samples.front().s1;
    double prev_p = curve.samples.front().p;
    double prev_q = curve.samples.front().q;
    double p_acc = prev_p, q_acc = prev_q;
    for (const CurveSample& s : curve.samples) {
        if (s.s1 != s1)
            throw ModelError("i3 quadrature requires graph-like parallelism curves");
        p_acc += torus_delta(s.p, prev_p);
        q_acc += torus_delta(s.q, prev_q);
        prev_p = s.p;
        prev_q = s.q;
        graph.p.push_back(p_acc);
        graph.q.push_back(q_acc);
    }
    if (s1 < 0) {
        std::reverse(graph.p.begin(), graph.p.end());
        std::reverse(graph.q.begin(), graph.q.end());
    }
    for (std::size_t i = 1; i < graph.p.size(); ++i)
        if (graph.p[i] <= graph.p[i - 1])
            throw ModelError("i3 quadrature requires graph-like parallelism curves");
    return graph;
}

}  // namespace

Complex gen_func(const CoefficientField& field, int n, std::span<const double> p,
                 std::span<const double> j) {
    require_canonical(field, "gen_func");
    const std::size_t k = p.size();
    require_small_k(k, "gen_func");
    if (j.size() != k) throw ModelError("gen_func: p and J must have equal length");

    std::vector<Vec2c> v(k), v_shift(k);
    for (std::size_t i = 0; i < k; ++i) {
        v[i] = field.eval(p[i]);
        v_shift[i] = field.eval(p[i] + j[i]);
    }

    Eigen::MatrixXcd num(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    Eigen::MatrixXcd den = num;
    for (std::size_t col = 0; col < k; ++col) {
        const Complex own = tau2_form(v[col], v_shift[col]);
        for (std::size_t row = 0; row < k; ++row) {
            Complex ratio;
            if (row == col) {
                ratio = Complex(1.0, 0.0);
            } else {
                const Complex cross = tau2_form(v[row], v_shift[col]);
                if (std::abs(cross) < 1e-14)
                    throw IllConditionedError(
                        "gen_func: shifted points are parallel across indices");
                ratio = own / cross;
            }
            den(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = ratio;
            const Complex s_shift = v[row].dot(v_shift[col]);
            num(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                ratio * pow_n(s_shift, n);
        }
    }

    Eigen::FullPivLU<Eigen::MatrixXcd> lu_num(num);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu_den(den);
    if (condition_estimate(lu_num) > 1e12 || condition_estimate(lu_den) > 1e12)
        throw IllConditionedError("gen_func: points too close to parallel");
    return lu_num.determinant() / lu_den.determinant();
}

namespace {

struct CorrKernel {
    Eigen::MatrixXcd o;     // Delta(p_b)/beta_ab * S_ab^N, zero diagonal
    Eigen::MatrixXcd pair;  // Delta_a Delta_b / beta_ab^2
};

CorrKernel corr_kernel(const CoefficientField& field, int n, std::span<const double> p) {
    const std::size_t k = p.size();
    std::vector<Vec2c> v(k);
    std::vector<Complex> delta(k);
    for (std::size_t i = 0; i < k; ++i) {
        v[i] = field.eval(p[i]);
        delta[i] = field.delta(p[i]);
    }
    CorrKernel kern;
    kern.o = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(k),
                                    static_cast<Eigen::Index>(k));
    kern.pair = kern.o;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            if (a == b) continue;
            const Complex beta = tau2_form(v[a], v[b]);
            if (std::abs(beta) < 1e-14)
                throw IllConditionedError("corr_k: parallel points; use unfolded_corr");
            const Complex s_ab = v[a].dot(v[b]);
            kern.o(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                delta[b] / beta * pow_n(s_ab, n);
            kern.pair(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                delta[a] * delta[b] / (beta * beta);
        }
    return kern;
}

}  // namespace

Complex corr_k(const CoefficientField& field, int n, std::span<const double> p) {
    require_canonical(field, "corr_k");
    const std::size_t k = p.size();
    require_small_k(k, "corr_k");
    const CorrKernel kern = corr_kernel(field, n, p);

    Complex total{0.0, 0.0};
    std::vector<int> perm(k);
    for (std::size_t l = 0; 2 * l <= k; ++l) {
        double factor = (l % 2 == 0) ? 1.0 : -1.0;
        for (std::size_t m = 0; m < l; ++m) factor /= 2.0 * (m + 1.0);
        double rest_fact = 1.0;
        for (std::size_t m = 2; m <= k - 2 * l; ++m) rest_fact *= static_cast<double>(m);
        factor /= rest_fact;

        std::iota(perm.begin(), perm.end(), 0);
        Complex perm_sum{0.0, 0.0};
        do {
            Complex term{1.0, 0.0};
            for (std::size_t m = 0; m < l; ++m)
                term *= kern.pair(perm[2 * m], perm[2 * m + 1]);
            const std::size_t rest = k - 2 * l;
            if (rest > 0) {
                Eigen::MatrixXcd sub(static_cast<Eigen::Index>(rest),
                                     static_cast<Eigen::Index>(rest));
                for (std::size_t a = 0; a < rest; ++a)
                    for (std::size_t b = 0; b < rest; ++b)
                        sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                            kern.o(perm[2 * l + a], perm[2 * l + b]);
                term *= sub.determinant();
            }
            perm_sum += term;
        } while (std::next_permutation(perm.begin(), perm.end()));
        total += factor * perm_sum;
    }
    return total;
}

Complex corr_1(const CoefficientField& field, int n, double p) {
    const Vec2c v = field.eval(p);
    const Vec2c v1 = field.eval(p, 1);
    return static_cast<double>(n) * v.dot(v1) / v.dot(v);
}

Complex corr_2(const CoefficientField& field, int n, double p1, double p2) {
    require_canonical(field, "corr_2");
    const Vec2c va = field.eval(p1), vb = field.eval(p2);
    const Complex beta = tau2_form(va, vb);
    if (std::abs(beta) < 1e-14)
        throw IllConditionedError("corr_2: parallel points; use unfolded_corr");
    const Complex s12 = va.dot(vb);
    const Complex s21 = vb.dot(va);
    return field.delta(p1) * field.delta(p2) / (beta * beta) *
           (pow_n(s12 * s21, n) - 1.0);
}

Complex corr_3(const CoefficientField& field, int n, double p1, double p2, double p3) {
    require_canonical(field, "corr_3");
    const Vec2c v1 = field.eval(p1), v2 = field.eval(p2), v3 = field.eval(p3);
    const Complex b12 = tau2_form(v1, v2);
    const Complex b23 = tau2_form(v2, v3);
    const Complex b31 = tau2_form(v3, v1);
    if (std::abs(b12) < 1e-14 || std::abs(b23) < 1e-14 || std::abs(b31) < 1e-14)
        throw IllConditionedError("corr_3: parallel points; use unfolded_corr");
    const Complex cycle = pow_n(v1.dot(v2) * v2.dot(v3) * v3.dot(v1), n);
    const Complex anticycle = pow_n(v1.dot(v3) * v3.dot(v2) * v2.dot(v1), n);
    return field.delta(p1) * field.delta(p2) * field.delta(p3) * (cycle - anticycle) /
           (b12 * b23 * b31);
}

Complex f1_derivative(const CoefficientField& field, int n, std::span<const double> p) {
    require_canonical(field, "f1_derivative");
    require_small_k(p.size(), "f1_derivative");
    return corr_kernel(field, n, p).o.determinant();
}

CurveSet find_parallel_curves(const CoefficientField& field, int scan_grid) {
    require_canonical(field, "find_parallel_curves");
    if (scan_grid < 128) throw ModelError("find_parallel_curves requires scan_grid >= 128");

    const double h = two_pi / scan_grid;
    const int max_steps = 16 * scan_grid;

    CurveSet result;
    auto near_existing = [&](const Eigen::Vector2d& x) {
        for (const Curve& c : result.curves)
            if (min_distance_to_curve(c, x) < 0.6 * h) return true;
        return false;
    };

    // The diagonal (t,t) is always a solution; trace it first.
    result.curves.push_back(trace_curve(field, Eigen::Vector2d(0.0, 0.0), h, max_steps));

    // Scan for further curves: grid-local minima of Re L, refined onto the
    // curve and kept when they land on new ground.
    Eigen::MatrixXd rel(scan_grid, scan_grid);
    for (int i = 0; i < scan_grid; ++i)
        for (int jj = 0; jj < scan_grid; ++jj)
            rel(i, jj) = re_lagrangian(field, i * h, jj * h);

    std::vector<std::pair<double, std::pair<int, int>>> seeds;
    for (int i = 0; i < scan_grid; ++i)
        for (int jj = 0; jj < scan_grid; ++jj) {
            const double val = rel(i, jj);
            if (val > 1e-2) continue;
            bool minimal = true;
            for (int di = -1; di <= 1 && minimal; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ni = (i + di + scan_grid) % scan_grid;
                    const int nj = (jj + dj + scan_grid) % scan_grid;
                    if (rel(ni, nj) < val) {
                        minimal = false;
                        break;
                    }
                }
            if (minimal) seeds.emplace_back(val, std::make_pair(i, jj));
        }
    std::sort(seeds.begin(), seeds.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    for (const auto& [val, ij] : seeds) {
        (void)val;
        Eigen::Vector2d x(ij.first * h, ij.second * h);
        if (near_existing(x)) continue;
        if (!refine_to_curve(field, x)) continue;
        x(0) = torus_wrap(x(0));
        x(1) = torus_wrap(x(1));
        if (near_existing(x)) continue;
        if (hessian_trace(field, x) < 1e-8)
            throw MulticriticalPointError("Hessian vanishes at a refined point");
        result.curves.push_back(trace_curve(field, x, h, max_steps));
    }

    // Defensive final deduplication.
    for (std::size_t a = 0; a < result.curves.size(); ++a)
        for (std::size_t b = result.curves.size(); b-- > a + 1;)
            if (hausdorff_duplicate(result.curves[b], result.curves[a], 1e-3))
                result.curves.erase(result.curves.begin() +
                                    static_cast<std::ptrdiff_t>(b));

    std::sort(result.curves.begin(), result.curves.end(), [](const Curve& a, const Curve& b) {
        double ka = std::numeric_limits<double>::infinity(), qa = 0.0;
        for (const CurveSample& s : a.samples)
            if (s.p < ka || (s.p == ka && s.q < qa)) ka = s.p, qa = s.q;
        double kb = std::numeric_limits<double>::infinity(), qb = 0.0;
        for (const CurveSample& s : b.samples)
            if (s.p < kb || (s.p == kb && s.q < qb)) kb = s.p, qb = s.q;
        return ka != kb ? ka < kb : qa < qb;
    });
    return result;
}

double unfolded_corr(std::span<const double> signs, std::span<const double> abs_delta,
                     std::span<const double> psi) {
    const std::size_t k = psi.size();
    require_small_k(k, "unfolded_corr");
    if (signs.size() != k || abs_delta.size() != k)
        throw ModelError("unfolded_corr: mismatched argument lengths");
    if (k % 2 == 1) return 0.0;  // skew-symmetric determinant of odd dimension
    if (k == 2) {
        const std::vector<double> d = scaled_offsets(signs, abs_delta, psi);
        return signs[0] * signs[1] * abs_delta[0] * abs_delta[1] * exp_ratio(d[0] - d[1]);
    }
    return unfolded_sum(signs, abs_delta, psi);
}

double unfolded_corr_general(std::span<const double> signs,
                             std::span<const double> abs_delta,
                             std::span<const double> psi) {
    return unfolded_sum(signs, abs_delta, psi);
}

double unfolded_corr(const CoefficientField& field, const CurveSet& curves,
                     std::size_t curve_index, double t, std::span<const double> psi) {
    (void)field;
    if (curve_index >= curves.curves.size())
        throw ModelError("unfolded_corr: curve index out of range");
    if (psi.size() != 2)
        throw ModelError("unfolded_corr on a curve supports k = 2; use the span overload");
    const Curve& curve = curves.curves[curve_index];
    double tt = std::fmod(t, curve.length);
    if (tt < 0) tt += curve.length;
    auto it = std::upper_bound(curve.samples.begin(), curve.samples.end(), tt,
                               [](double x, const CurveSample& s) { return x < s.t; });
    std::size_t i = static_cast<std::size_t>(std::distance(curve.samples.begin(), it));
    i = std::clamp<std::size_t>(i, 1, curve.samples.size() - 1);
    const CurveSample& lo = curve.samples[i - 1];
    const CurveSample& hi = curve.samples[i];
    const double w = (tt - lo.t) / std::max(hi.t - lo.t, 1e-300);
    const double signs[2] = {w < 0.5 ? lo.s1 : hi.s1, w < 0.5 ? lo.s2 : hi.s2};
    const double dabs[2] = {lo.abs_delta_p + w * (hi.abs_delta_p - lo.abs_delta_p),
                            lo.abs_delta_q + w * (hi.abs_delta_q - lo.abs_delta_q)};
    return unfolded_corr(signs, dabs, psi);
}

double i2(const CoefficientField& field, const CurveSet& curves) {
    (void)field;
    if (curves.curves.empty()) throw ModelError("i2: empty curve set");
    double total = 0.0;
    for (const Curve& curve : curves.curves) {
        // Integrand carries |Delta(p)||Delta(q)| from the prefactor of the
        // unfolded two-point function; the transverse Gaussian integral only
        // cancels the |Delta| factors inside its argument, not this one.
        // (Monte Carlo cross-check: without it the variance prediction for
        // the affine reference model is off by a factor ~50.)
        auto integrand = [](const CurveSample& s) {
            return s.s1 * s.s2 * s.abs_delta_p * s.abs_delta_q * s.tangent_norm /
                   std::sqrt(s.abs_delta_p * s.abs_delta_p + s.abs_delta_q * s.abs_delta_q);
        };
        for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i) {
            const double seg = curve.samples[i + 1].t - curve.samples[i].t;
            total += 0.5 * (integrand(curve.samples[i]) + integrand(curve.samples[i + 1])) * seg;
        }
    }
    return total / (2.0 * std::pow(pi, 1.5));
}

double i3(const CoefficientField& field, const CurveSet& curves) {
    if (curves.curves.empty()) throw ModelError("i3: empty curve set");
    std::vector<CurveGraph> graphs;
    graphs.reserve(curves.curves.size());
    for (const Curve& c : curves.curves) graphs.push_back(as_graph(c));

    // 16-node Gauss-Legendre on [-6, 6] for each transverse direction.
    constexpr double gx[16] = {
        -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
        -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
        -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
        0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
        0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
        0.9894009349916499};
    constexpr double gw[16] = {
        0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
        0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
        0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
        0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
        0.0271524594117541};

    const int t_points = 64;
    double total = 0.0;
    for (const CurveGraph& gj : graphs) {
        for (const CurveGraph& gl : graphs) {
            for (int it = 0; it < t_points; ++it) {
                const double t = two_pi * it / t_points;
                const double q2 = gj.value(t), q3 = gl.value(t);
                const double d2 = gj.slope(t), d3 = gl.slope(t);
                if (std::abs(d3) < 1e-12) continue;
                const double grad_sq = 1.0 + d2 * d2 + d3 * d3;
                const double signs[3] = {1.0, d2 >= 0 ? 1.0 : -1.0, d3 >= 0 ? 1.0 : -1.0};
                const double dabs[3] = {std::abs(field.delta(t)),
                                        std::abs(field.delta(q2)),
                                        std::abs(field.delta(q3))};
                double inner = 0.0;
                for (int ia = 0; ia < 16; ++ia)
                    for (int ib = 0; ib < 16; ++ib) {
                        const double psi1 = 6.0 * gx[ia];
                        double psi2 = 6.0 * gx[ib];
                        // The integrand has removable singularities where two
                        // scaled offsets d_a coincide (exactly hit by symmetric
                        // quadrature nodes); nudge psi2 off the degenerate set.
                        for (int attempt = 0; attempt < 8; ++attempt) {
                            const double psi3 = -(psi1 + d2 * psi2) / d3;
                            const double d[3] = {signs[0] * dabs[0] * psi1,
                                                 signs[1] * dabs[1] * psi2,
                                                 signs[2] * dabs[2] * psi3};
                            if (std::abs(d[0] - d[1]) > 1e-7 &&
                                std::abs(d[0] - d[2]) > 1e-7 &&
                                std::abs(d[1] - d[2]) > 1e-7)
                                break;
                            psi2 += 1e-5 * (1.0 + std::abs(psi2));
                        }
                        const double psi[3] = {psi1, psi2, -(psi1 + d2 * psi2) / d3};
                        inner += 36.0 * gw[ia] * gw[ib] *
                                 unfolded_corr_general(signs, dabs, psi);
                    }
                total += (two_pi / t_points) * grad_sq / std::abs(d3) * inner;
            }
        }
    }
    return total / (8.0 * pi * pi * pi);
}

MomentPrediction predict_moments(int n, int k, double i2_value) {
    if (k < 1) throw ModelError("predict_moments requires k >= 1");
    MomentPrediction pred;
    pred.order = k;
    pred.i2 = i2_value;
    if (k % 2 == 0) {
        const int kt = k / 2;
        double double_fact = 1.0;
        for (int m = 2 * kt - 1; m > 1; m -= 2) double_fact *= m;
        pred.leading_value =
            double_fact * std::pow(static_cast<double>(n), kt / 2.0) * std::pow(i2_value, kt);
        pred.error_order = (kt - 1) / 2.0;
    } else {
        const int kt = (k - 1) / 2;
        pred.leading_value = 0.0;
        pred.error_order = (kt - 1) / 2.0;
    }
    return pred;
}

double gaussian_pdf(double w, double mean, int n, double i2_value) {
    if (i2_value <= 0.0) throw ModelError("gaussian_pdf requires i2 > 0");
    const double variance = std::sqrt(static_cast<double>(n)) * i2_value;
    const double d = w - mean;
    return std::exp(-d * d / (2.0 * variance)) / std::sqrt(2.0 * pi * variance);
}

double cauchy_identity_check(const CoefficientField& field, std::span<const double> p,
                             std::span<const double> j) {
    const std::size_t k = p.size();
    require_small_k(k, "cauchy_identity_check");
    if (j.size() != k) throw ModelError("cauchy_identity_check: p and J must match");

    auto kappa = [&field](double x) {
        const Vec2c v = field.eval(x);
        if (std::abs(v(1)) < 1e-14)
            throw PoleEncounteredError("kappa = a/b has a pole at a query point");
        return v(0) / v(1);
    };

    std::vector<Complex> base(k), shifted(k);
    for (std::size_t i = 0; i < k; ++i) {
        base[i] = kappa(p[i]);
        shifted[i] = kappa(p[i] + j[i]);
    }

    Eigen::MatrixXcd mat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t col = 0; col < k; ++col)
        for (std::size_t row = 0; row < k; ++row) {
            if (j[col] == 0.0) {
                mat(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                    row == col ? 1.0 : 0.0;  // J_n -> 0 limit of the column
            } else {
                mat(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                    (shifted[col] - base[col]) / (shifted[col] - base[row]);
            }
        }
    const Complex lhs = 1.0 / mat.determinant();

    Complex rhs{1.0, 0.0};
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t n_ = m + 1; n_ < k; ++n_) {
            rhs *= (shifted[m] - base[n_]) / (shifted[m] - shifted[n_]) *
                   (shifted[n_] - base[m]) / (base[n_] - base[m]);
        }
    return std::abs(lhs - rhs);
}

void export_curves_csv(const CurveSet& curves, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write curve CSV: " + path);
    out << "curve_id,t,p,q,s1,s2,abs_delta_p,abs_delta_q,tangent_norm\n";
    out.precision(17);
    for (std::size_t id = 0; id < curves.curves.size(); ++id)
        for (const CurveSample& s : curves.curves[id].samples)
            out << id << ',' << s.t << ',' << s.p << ',' << s.q << ',' << s.s1 << ','
                << s.s2 << ',' << s.abs_delta_p << ',' << s.abs_delta_q << ','
                << s.tangent_norm << '\n';
}

}  // namespace windingstats
