#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "windingstats/ensemble.hpp"
#include "windingstats/model_io.hpp"
#include "windingstats/rng.hpp"

using namespace windingstats;

TEST_CASE("sampling is bit-for-bit reproducible and seed-sensitive") {
    const Realization a = sample(16, 42);
    const Realization b = sample(16, 42);
    const Realization c = sample(16, 43);
    CHECK(a.k1 == b.k1);
    CHECK(a.k2 == b.k2);
    CHECK(a.k1 != c.k1);
}

TEST_CASE("entry statistics match the complex Ginibre normalization") {
    const int n = 200;
    const Realization real = sample(n, 7);
    Complex mean{0.0, 0.0};
    double mean_sq = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            mean += real.k1(i, j);
            mean_sq += std::norm(real.k1(i, j));
        }
    const double count = static_cast<double>(n) * n;
    mean /= count;
    mean_sq /= count;
    // 40000 entries: standard errors ~ 1/200 for the mean, ~1/200 for E|z|^2.
    CHECK(std::abs(mean) < 0.02);
    CHECK(mean_sq == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("derived seeds are order independent") {
    CHECK(derive_seed(5, 0) != derive_seed(5, 1));
    CHECK(derive_seed(5, 3) == derive_seed(5, 3));
    CHECK(derive_seed(5, 3) != derive_seed(6, 3));
}

TEST_CASE("log_det_k agrees with the direct determinant at small n") {
    const CoefficientField trig = models::trig();
    const Realization real = sample(5, 11);
    for (double p : {0.3, 1.8, 4.0}) {
        const Complex direct = eval_k(real, trig, p).determinant();
        const Complex ld = log_det_k(real, trig, p);
        CHECK(std::abs(std::exp(ld) - direct) < 1e-10 * std::abs(direct));
    }
}

TEST_CASE("winding_density is the logarithmic derivative of det K") {
    const CoefficientField field = models::reference_affine();
    const Realization real = sample(8, 3);
    const double h = 1e-6;
    for (double p : {0.5, 2.1, 5.3}) {
        Complex diff = log_det_k(real, field, p + h) - log_det_k(real, field, p - h);
        // The phase may wrap across the branch cut; bring it back.
        double im = diff.imag();
        while (im > 3.141592653589793) im -= two_pi;
        while (im < -3.141592653589793) im += two_pi;
        const Complex fd = Complex(diff.real(), im) / (2.0 * h);
        const Complex w = winding_density(real, field, p);
        CHECK(std::abs(w - fd) < 1e-4 * std::max(1.0, std::abs(w)));
    }
}

TEST_CASE("realization dumps round-trip exactly") {
    const Realization real = sample(12, 99);
    const std::string path = "realization_roundtrip.bin";
    save_realization(real, path);
    const Realization back = load_realization(path);
    CHECK(back.n == real.n);
    CHECK(back.seed == real.seed);
    CHECK(back.k1 == real.k1);
    CHECK(back.k2 == real.k2);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_realization(path), ModelError);
}

TEST_CASE("eval_k uses the gauged coefficients of a canonical field") {
    const CoefficientField canon = models::reference_affine().canonicalize();
    const Realization real = sample(4, 5);
    const double p = 1.3;
    const Eigen::MatrixXcd k = eval_k(real, canon, p);
    const Vec2c u = canon.eval(p);
    const Eigen::MatrixXcd direct = u(0) * real.k1 + u(1) * real.k2;
    CHECK((k - direct).norm() < 1e-14 * direct.norm());
}
