#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "windingstats/analytic.hpp"
#include "windingstats/model_io.hpp"
#include "windingstats/rng.hpp"

using namespace windingstats;

namespace {

const double pi = 3.14159265358979323846;
const double sqrt_pi = 1.7724538509055160273;

// Mixed first-order finite difference of gen_func in every source variable.
Complex gen_func_mixed_fd(const CoefficientField& field, int n,
                          std::span<const double> p, double h) {
    const std::size_t k = p.size();
    Complex acc{0.0, 0.0};
    // Sum over the 2^k sign corners of the central difference stencil.
    for (std::size_t corner = 0; corner < (std::size_t(1) << k); ++corner) {
        std::vector<double> j(k);
        double sign = 1.0;
        for (std::size_t l = 0; l < k; ++l) {
            const bool plus = corner & (std::size_t(1) << l);
            j[l] = plus ? h : -h;
            if (!plus) sign = -sign;
        }
        acc += sign * gen_func(field, n, p, j);
    }
    return acc / std::pow(2.0 * h, static_cast<double>(k));
}

std::vector<double> random_angles(Xoshiro256& rng, std::size_t k, double min_gap) {
    for (;;) {
        std::vector<double> p(k);
        for (double& x : p) x = two_pi * rng.uniform();
        bool ok = true;
        for (std::size_t i = 0; i < k && ok; ++i)
            for (std::size_t j = i + 1; j < k; ++j) {
                double d = std::fmod(std::abs(p[i] - p[j]), two_pi);
                d = std::min(d, two_pi - d);
                // Also keep away from the antipodal parallel configuration.
                if (d < min_gap || std::abs(d - pi) < min_gap) {
                    ok = false;
                    break;
                }
            }
        if (ok) return p;
    }
}

}  // namespace

TEST_CASE("gen_func is exactly 1 at J = 0") {
    const CoefficientField trig = models::trig().canonicalize();
    Xoshiro256 rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> p = random_angles(rng, 3, 0.3);
        const std::vector<double> j(3, 0.0);
        CHECK(std::abs(gen_func(trig, 5, p, j) - 1.0) < 1e-12);
    }
}

TEST_CASE("corr_2 closed form: trig model, N = 1, separation pi/4 gives -1") {
    const CoefficientField trig = models::trig().canonicalize();
    const Complex c2 = corr_2(trig, 1, 0.0, pi / 4);
    CHECK(std::abs(c2 - Complex(-1.0, 0.0)) < 1e-12);
    CHECK(std::abs(corr_k(trig, 1, std::array<double, 2>{0.0, pi / 4}) - c2) < 1e-12);
}

TEST_CASE("corr_k reduces to the closed-form specializations") {
    Xoshiro256 rng(202);
    for (const CoefficientField& canon :
         {models::trig().canonicalize(), models::reference_affine().canonicalize()}) {
        for (int n : {1, 3, 10}) {
            const std::vector<double> p = random_angles(rng, 3, 0.25);
            const Complex c1 = corr_k(canon, n, std::span<const double>(p.data(), 1));
            CHECK(std::abs(c1 - corr_1(canon, n, p[0])) < 1e-10);
            const Complex c2 = corr_k(canon, n, std::span<const double>(p.data(), 2));
            CHECK(std::abs(c2 - corr_2(canon, n, p[0], p[1])) <
                  1e-10 * std::max(1.0, std::abs(c2)));
            const Complex c3 = corr_k(canon, n, std::span<const double>(p.data(), 3));
            CHECK(std::abs(c3 - corr_3(canon, n, p[0], p[1], p[2])) <
                  1e-10 * std::max(1.0, std::abs(c3)));
        }
    }
}

TEST_CASE("corr_1 vanishes on canonical fields (centering)") {
    const CoefficientField canon = models::reference_affine().canonicalize();
    for (double p : {0.3, 2.0, 5.1}) CHECK(std::abs(corr_1(canon, 7, p)) < 1e-9);
}

TEST_CASE("corr_k is symmetric under permutations of the points") {
    const CoefficientField canon = models::reference_affine().canonicalize();
    Xoshiro256 rng(303);
    const std::vector<double> p = random_angles(rng, 3, 0.25);
    std::vector<double> q = {p[2], p[0], p[1]};
    const Complex a = corr_k(canon, 4, p);
    const Complex b = corr_k(canon, 4, q);
    CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(a)));
}

TEST_CASE("finite differences of gen_func reproduce corr_k") {
    Xoshiro256 rng(404);
    const CoefficientField canon = models::reference_affine().canonicalize();
    for (std::size_t k = 1; k <= 3; ++k) {
        for (int trial = 0; trial < 4; ++trial) {
            const int n = 2 + static_cast<int>(rng.next() % 4);
            const std::vector<double> p = random_angles(rng, k, 0.3);
            const Complex exact = corr_k(canon, n, p);
            const Complex fd = gen_func_mixed_fd(canon, n, p, 1e-3);
            CAPTURE(k);
            CHECK(std::abs(fd - exact) < 1e-4 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST_CASE("corr_2 equals det-term minus pair-term (derivative structure)") {
    const CoefficientField canon = models::reference_affine().canonicalize();
    Xoshiro256 rng(505);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> p = random_angles(rng, 2, 0.25);
        const int n = 1 + static_cast<int>(rng.next() % 8);
        const Complex det_term = f1_derivative(canon, n, p);
        const Vec2c v1 = canon.eval(p[0]), v2 = canon.eval(p[1]);
        const Complex beta = tau2_form(v1, v2);
        const Complex pair = canon.delta(p[0]) * canon.delta(p[1]) / (beta * beta);
        const Complex expected = det_term - pair;
        const Complex actual = corr_2(canon, n, p[0], p[1]);
        CHECK(std::abs(actual - expected) < 1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("Cauchy determinant identity holds to 1e-10") {
    Xoshiro256 rng(606);
    const CoefficientField canon = models::reference_affine().canonicalize();
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng.next() % 3;  // 2..4
        const std::vector<double> p = random_angles(rng, k, 0.2);
        std::vector<double> j(k);
        for (double& x : j) x = 0.2 * (rng.uniform() - 0.5);
        CHECK(cauchy_identity_check(canon, p, j) < 1e-10);
    }
}

TEST_CASE("trig curve inventory: the diagonal and its antipodal shift") {
    const CoefficientField canon = models::trig().canonicalize();
    const CurveSet curves = find_parallel_curves(canon);
    REQUIRE(curves.curves.size() == 2);
    for (const Curve& curve : curves.curves) {
        CHECK(curve.length == doctest::Approx(two_pi * std::sqrt(2.0)).epsilon(1e-6));
        CHECK(curve.samples.front().t == 0.0);
        CHECK(curve.samples.back().t == doctest::Approx(curve.length));
        // Closure: last sample repeats the first.
        CHECK(curve.samples.back().p == doctest::Approx(curve.samples.front().p));
        CHECK(curve.samples.back().q == doctest::Approx(curve.samples.front().q));
    }
    // One curve passes near (0,0), the other near (0,pi); samples are spaced
    // ~2pi/256 apart, so test with half a step of slack.
    auto passes_near = [&](double q0) {
        double best = 1e300;
        for (const Curve& curve : curves.curves)
            for (const CurveSample& s : curve.samples) {
                double dp = std::min(s.p, two_pi - s.p);
                double dq = std::abs(s.q - q0);
                dq = std::min(dq, two_pi - dq);
                best = std::min(best, std::hypot(dp, dq));
            }
        return best < 0.05;
    };
    CHECK(passes_near(0.0));
    CHECK(passes_near(pi));
}

TEST_CASE("crossing model triggers the multicritical error") {
    const CoefficientField canon = models::crossing().canonicalize();
    CHECK_THROWS_AS(find_parallel_curves(canon), MulticriticalPointError);
}

TEST_CASE("Hessian zero mode along every curve sample of the affine model") {
    const CoefficientField canon = models::reference_affine().canonicalize();
    const CurveSet curves = find_parallel_curves(canon);
    REQUIRE(!curves.curves.empty());
    for (const Curve& curve : curves.curves) {
        for (const CurveSample& s : curve.samples) {
            const ParallelPoint point = canon.make_parallel_point(s.p, s.q);
            const Eigen::Matrix2d h = canon.hessian(point);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
            CHECK(std::abs(es.eigenvalues()(0)) < 1e-8);
            CHECK(es.eigenvalues()(1) > 0.0);
        }
    }
}

TEST_CASE("i2 for the trig model is 2/sqrt(pi)") {
    const CoefficientField canon = models::trig().canonicalize();
    const CurveSet curves = find_parallel_curves(canon);
    CHECK(i2(canon, curves) == doctest::Approx(2.0 / sqrt_pi).epsilon(1e-8));
}

TEST_CASE("i2 on a synthetic constant-|Delta| curve is c/sqrt(pi)") {
    // Diagonal-type closed curve with |Delta| = c everywhere and positive
    // tangent signs: the integrand is constant, so the quadrature is exact.
    const double c = 1.7;
    Curve curve;
    const int m = 200;
    const double length = two_pi * std::sqrt(2.0);
    for (int i = 0; i <= m; ++i) {
        CurveSample s;
        s.t = length * i / m;
        s.p = std::fmod(s.t / std::sqrt(2.0), two_pi);
        s.q = s.p;
        s.s1 = s.s2 = 1.0;
        s.abs_delta_p = s.abs_delta_q = c;
        curve.samples.push_back(s);
    }
    curve.length = length;
    CurveSet set;
    set.curves.push_back(curve);
    const CoefficientField canon = models::trig().canonicalize();
    // The f2 prefactor contributes |Delta(p)||Delta(q)| = c^2 and the
    // transverse Gaussian width contributes 1/c, leaving c/sqrt(pi).
    CHECK(i2(canon, set) == doctest::Approx(c / sqrt_pi).epsilon(1e-12));
}

TEST_CASE("sqrt(N) i2 matches the exact variance from the corr_2 double integral") {
    // The winding-number variance is exactly the torus double integral of the
    // connected two-point correlator, Var(W) = -(2pi)^{-2} int int C_2 dp dq,
    // at any N; sqrt(N) I2 is its large-N limit.  Staggered midpoint grids
    // keep the quadrature nodes off the parallel set where the closed form
    // for C_2 is 0/0.
    const CoefficientField canon = models::reference_affine().canonicalize();
    const CurveSet curves = find_parallel_curves(canon);
    const int n = 200;
    const int g = 384;
    Complex acc{0.0, 0.0};
    for (int i = 0; i < g; ++i) {
        const double p = two_pi * (i + 0.5) / g;
        for (int j = 0; j < g; ++j) {
            const double q = two_pi * (j + 0.37) / g;
            try {
                acc += corr_2(canon, n, p, q);
            } catch (const IllConditionedError&) {
                // measure-zero parallel point; skip
            }
        }
    }
    const double cell = two_pi / g;
    const double var = -(acc * cell * cell).real() / (4.0 * pi * pi);
    CHECK(std::sqrt(static_cast<double>(n)) * i2(canon, curves) ==
          doctest::Approx(var).epsilon(0.02));
}

TEST_CASE("unfolded two-point function: closed form and examples") {
    const double signs[2] = {1.0, 1.0};
    const double dabs[2] = {1.0, 1.0};
    // psi = (0, 1): f2 = e^{-1} - 1.
    const double psi_a[2] = {0.0, 1.0};
    CHECK(unfolded_corr(signs, dabs, psi_a) ==
          doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
    // Coinciding arguments: f2 = -|Delta|^2.
    const double dabs_b[2] = {1.3, 1.3};
    const double psi_b[2] = {0.4, 0.4};
    CHECK(unfolded_corr(signs, dabs_b, psi_b) ==
          doctest::Approx(-1.3 * 1.3).epsilon(1e-10));
    // Closed form matches the determinantal sum.
    const double psi_c[2] = {-0.7, 0.9};
    const double dabs_c[2] = {0.8, 1.4};
    const double signs_c[2] = {1.0, -1.0};
    CHECK(unfolded_corr(signs_c, dabs_c, psi_c) ==
          doctest::Approx(unfolded_corr_general(signs_c, dabs_c, psi_c))
              .epsilon(1e-12));
}

TEST_CASE("odd unfolded correlators vanish") {
    Xoshiro256 rng(707);
    for (std::size_t k : {std::size_t(3), std::size_t(5)}) {
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> signs(k), dabs(k), psi(k);
            for (std::size_t i = 0; i < k; ++i) {
                signs[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
                dabs[i] = 0.5 + rng.uniform();
                psi[i] = 4.0 * (rng.uniform() - 0.5);
            }
            CHECK(unfolded_corr(signs, dabs, psi) == 0.0);
            CHECK(std::abs(unfolded_corr_general(signs, dabs, psi)) < 1e-10);
        }
    }
}

TEST_CASE("unfolding convergence: N^{-1} corr_2 approaches f_2 on the diagonal") {
    const CoefficientField canon = models::trig().canonicalize();
    const double t = 0.9;
    const double f2 = std::exp(-1.0) - 1.0;  // |Delta| = 1, psi = (0, 1)
    double prev_err = 1e300;
    for (int n : {100, 10000, 1000000}) {
        const double root_n = std::sqrt(static_cast<double>(n));
        const Complex c2 = corr_2(canon, n, t, t + 1.0 / root_n);
        const double err = std::abs(c2 / static_cast<double>(n) - f2);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 1e-2);
}

TEST_CASE("odd correlator suppression along the unfolding scaling") {
    // Needs a complex covariance: for the trig model S is real and corr_3
    // vanishes identically.
    const CoefficientField canon = models::reference_affine().canonicalize();
    const double t = 2.1;
    double prev = 1e300;
    int prev_n = 0;
    for (int n : {100, 10000, 1000000}) {
        const double root_n = std::sqrt(static_cast<double>(n));
        const Complex c3 =
            corr_3(canon, n, t, t + 0.7 / root_n, t + 1.9 / root_n);
        const double scaled = std::abs(c3) / std::pow(static_cast<double>(n), 1.5);
        if (prev_n > 0) {
            // Decrease at least as fast as N^{-1/2}.
            const double expected_drop =
                std::sqrt(static_cast<double>(prev_n) / static_cast<double>(n));
            CHECK(scaled <= prev * expected_drop * 1.5 + 1e-12);
        }
        prev = scaled;
        prev_n = n;
    }
}

TEST_CASE("f_2 evaluated along a traced curve matches the direct kernel") {
    const CoefficientField canon = models::trig().canonicalize();
    const CurveSet curves = find_parallel_curves(canon);
    const double psi[2] = {0.0, 1.0};
    const double direct = std::exp(-1.0) - 1.0;
    const double on_curve = unfolded_corr(canon, curves, 0, 1.3, psi);
    CHECK(on_curve == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("i3 vanishes by parity of f_3") {
    const CoefficientField canon = models::trig().canonicalize();
    const CurveSet curves = find_parallel_curves(canon);
    CHECK(std::abs(i3(canon, curves)) < 1e-8);
}

TEST_CASE("moment predictions: Gaussian double factorials and odd suppression") {
    const double i2v = 2.0 / sqrt_pi;
    const MomentPrediction m2 = predict_moments(64, 2, i2v);
    CHECK(m2.leading_value == doctest::Approx(8.0 * i2v).epsilon(1e-14));
    const MomentPrediction m4 = predict_moments(64, 4, i2v);
    CHECK(m4.leading_value == doctest::Approx(3.0 * 64.0 * i2v * i2v).epsilon(1e-14));
    const MomentPrediction m6 = predict_moments(64, 6, i2v);
    CHECK(m6.leading_value ==
          doctest::Approx(15.0 * std::pow(64.0, 1.5) * i2v * i2v * i2v).epsilon(1e-14));
    CHECK(predict_moments(64, 3, i2v).leading_value == 0.0);
    CHECK(predict_moments(64, 5, i2v).leading_value == 0.0);
}

TEST_CASE("gaussian_pdf is normalized") {
    const double i2v = 1.1283791670955126;
    double sum = 0.0;
    const double lo = -80.0, hi = 80.0;
    const int m = 20000;
    for (int i = 0; i < m; ++i)
        sum += gaussian_pdf(lo + (hi - lo) * (i + 0.5) / m, 0.0, 64, i2v);
    sum *= (hi - lo) / m;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("block factorization into separated pairs at large N") {
    const CoefficientField canon = models::trig().canonicalize();
    const int n = 10000;
    const double delta = 2.0 / std::sqrt(static_cast<double>(n));
    const std::array<double, 4> p = {0.3, 0.3 + delta, 2.5, 2.5 + delta};
    const Complex c4 = corr_k(canon, n, p);
    const Complex product =
        corr_2(canon, n, p[0], p[1]) * corr_2(canon, n, p[2], p[3]);
    CHECK(std::abs(c4 - product) / std::abs(c4) < 10.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("curve CSV export has the documented schema") {
    const CoefficientField canon = models::trig().canonicalize();
    const CurveSet curves = find_parallel_curves(canon);
    const std::string path = "curves_schema_test.csv";
    export_curves_csv(curves, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "curve_id,t,p,q,s1,s2,abs_delta_p,abs_delta_q,tangent_norm");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    std::size_t expected = 0;
    for (const Curve& c : curves.curves) expected += c.samples.size();
    CHECK(rows == expected);
    in.close();
    std::remove(path.c_str());
}
