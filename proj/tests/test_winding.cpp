#include <doctest.h>

#include "windingstats/model_io.hpp"
#include "windingstats/winding.hpp"

using namespace windingstats;

namespace {

Realization scalar_realization(Complex k1, Complex k2) {
    Realization real;
    real.n = 1;
    real.seed = 0;
    real.k1.resize(1, 1);
    real.k2.resize(1, 1);
    real.k1(0, 0) = k1;
    real.k2(0, 0) = k2;
    return real;
}

}  // namespace

TEST_CASE("scalar winding +1: K(p) = e^{ip}") {
    const CoefficientField trig = models::trig();
    const Realization real = scalar_realization(1.0, Complex(0.0, 1.0));
    CHECK(winding_unwrap(real, trig).w == 1);
    CHECK(winding_root_count(real, trig).w == 1);
    CHECK(winding_pencil(real, trig).w == 1);
}

TEST_CASE("scalar winding -1: K(p) = e^{-ip}, pencil degenerates") {
    const CoefficientField trig = models::trig();
    const Realization real = scalar_realization(1.0, Complex(0.0, -1.0));
    CHECK(winding_unwrap(real, trig).w == -1);
    CHECK(winding_root_count(real, trig).w == -1);
    // The leading matrix coefficient vanishes identically for this
    // realization; the pencil route must refuse rather than miscount.
    CHECK_THROWS_AS(winding_pencil(real, trig), NearSingularError);
}

TEST_CASE("extractors agree on random realizations") {
    for (const CoefficientField& field :
         {models::trig(), models::reference_affine()}) {
        for (int n : {2, 6}) {
            for (int trial = 0; trial < 15; ++trial) {
                const Realization real =
                    sample(n, 1000 + static_cast<std::uint64_t>(trial));
                const int w_unwrap = winding_unwrap(real, field).w;
                const int w_roots = winding_root_count(real, field).w;
                const int w_pencil = winding_pencil(real, field).w;
                CAPTURE(n);
                CAPTURE(trial);
                CHECK(w_unwrap == w_roots);
                CHECK(w_unwrap == w_pencil);
            }
        }
    }
}

TEST_CASE("winding bounds: |W| <= N * max_index spread") {
    const CoefficientField trig = models::trig();
    for (int trial = 0; trial < 10; ++trial) {
        const Realization real = sample(4, 77 + static_cast<std::uint64_t>(trial));
        const int w = winding_pencil(real, trig).w;
        CHECK(w >= 4 * trig.min_index());
        CHECK(w <= 4 * trig.max_index());
    }
}

TEST_CASE("default unwrap grid follows the coefficient bandwidth") {
    const Realization small = sample(2, 1);
    CHECK(default_initial_grid(small, models::trig()) == 256);
    const Realization big = sample(64, 1);
    CHECK(default_initial_grid(big, models::trig()) == 512);
}

TEST_CASE("gauged fields are rejected by all extractors") {
    const CoefficientField canon = models::reference_affine().canonicalize();
    REQUIRE(canon.has_gauge());
    const Realization real = sample(4, 9);
    CHECK_THROWS_AS(winding_unwrap(real, canon), ModelError);
    CHECK_THROWS_AS(winding_root_count(real, canon), ModelError);
    CHECK_THROWS_AS(winding_pencil(real, canon), ModelError);
}

TEST_CASE("root counting refuses degrees beyond the cap") {
    // n * (m_max - m_min) = 3000 > 2048.
    const CoefficientField trig = models::trig();
    Realization real;
    real.n = 1500;
    // Matrices never touched before the degree check.
    real.k1.resize(1, 1);
    real.k2.resize(1, 1);
    CHECK_THROWS_AS(winding_root_count(real, trig), ModelError);
}
