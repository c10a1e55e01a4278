#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "fedloc/rng.hpp"
#include "fedloc/smoothing.hpp"
#include "oracles.hpp"

using fedloc::Vec;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kExactTol = 1e-12;
constexpr double kObjectiveTol = 1e-8;

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

Vec random_vec(fedloc::Rng& rng, int dim, double half_width) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.uniform(-half_width, half_width);
    return v;
}

Eigen::MatrixXd random_rotation(fedloc::Rng& rng, int dim) {
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = rng.normal();
    return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
}

}  // namespace

TEST_CASE("smooth_abs follows the two-piece definition") {
    CHECK_THAT(fedloc::smooth_abs(2.0, 1.0), WithinAbs(2.0, kExactTol));
    CHECK_THAT(fedloc::smooth_abs(0.0, 1.0), WithinAbs(0.5, kExactTol));
    CHECK_THAT(fedloc::smooth_abs(0.5, 1.0), WithinAbs(0.625, kExactTol));
    CHECK_THAT(fedloc::smooth_abs(-0.5, 1.0), WithinAbs(0.625, kExactTol));
    CHECK_THAT(fedloc::smooth_abs(1.0, 1.0), WithinAbs(1.0, kExactTol));

    CHECK_THROWS_AS(fedloc::smooth_abs(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fedloc::smooth_abs(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("smooth_l1 sums componentwise") {
    Vec a(2);
    a << 2.0, -3.0;
    CHECK_THAT(fedloc::smooth_l1(a, 1.0), WithinAbs(5.0, kExactTol));

    CHECK_THAT(fedloc::smooth_l1(Vec::Zero(3), 1.0), WithinAbs(1.5, kExactTol));

    Vec b(2);
    b << 0.5, 2.0;
    CHECK_THAT(fedloc::smooth_l1(b, 1.0), WithinAbs(2.625, kExactTol));

    CHECK_THROWS_AS(fedloc::smooth_l1(b, 0.0), std::invalid_argument);
}

TEST_CASE("moreau_residual cases and continuity at the switch radius") {
    const Vec origin = Vec::Zero(3);
    CHECK_THAT(fedloc::moreau_residual(origin, origin, 2.0, 1.0), WithinAbs(-2.0, kExactTol));
    CHECK_THAT(fedloc::moreau_residual(vec3(5, 0, 0), origin, 2.0, 1.0),
               WithinAbs(2.5, kExactTol));
    CHECK_THAT(fedloc::moreau_residual(vec3(1, 0, 0), origin, 0.0, 1.0),
               WithinAbs(0.5, kExactTol));

    const double below = fedloc::moreau_residual(vec3(1.0 - 1e-9, 0, 0), origin, 0.0, 1.0);
    const double above = fedloc::moreau_residual(vec3(1.0 + 1e-9, 0, 0), origin, 0.0, 1.0);
    CHECK_THAT(below, WithinAbs(above, 1e-8));

    CHECK_THROWS_AS(fedloc::moreau_residual(origin, origin, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("range hinge prox closed form matches the scan oracle") {
    const Vec anchor = Vec::Zero(3);
    const double range = 1.0;
    const double lambda = 0.5;

    SECTION("inside the ball the point is fixed") {
        const Vec p = vec3(0.5, 0, 0);
        CHECK((fedloc::prox_range_hinge(p, anchor, range, lambda) - p).norm() < kExactTol);
    }
    SECTION("intermediate points project to the sphere") {
        const Vec p = vec3(1.5, 0, 0);
        const Vec got = fedloc::prox_range_hinge(p, anchor, range, lambda);
        CHECK((got - vec3(1, 0, 0)).norm() < kExactTol);
        const Vec scanned = oracle::scan_hinge_prox(p, anchor, range, lambda);
        CHECK(oracle::hinge_prox_objective(got, p, anchor, range, lambda) <=
              oracle::hinge_prox_objective(scanned, p, anchor, range, lambda) + kObjectiveTol);
    }
    SECTION("distant points shrink by a constant step") {
        const Vec p = vec3(4, 0, 0);
        const Vec got = fedloc::prox_range_hinge(p, anchor, range, lambda);
        CHECK((got - vec3(3, 0, 0)).norm() < kExactTol);
        const Vec scanned = oracle::scan_hinge_prox(p, anchor, range, lambda);
        CHECK(oracle::hinge_prox_objective(got, p, anchor, range, lambda) <=
              oracle::hinge_prox_objective(scanned, p, anchor, range, lambda) + kObjectiveTol);
    }
    SECTION("zero range at the anchor is a fixed point") {
        const Vec got = fedloc::prox_range_hinge(anchor, anchor, 0.0, lambda);
        CHECK(got.norm() < kExactTol);
    }
    SECTION("nonpositive lambda is rejected") {
        CHECK_THROWS_AS(fedloc::prox_range_hinge(anchor, anchor, 1.0, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("negative envelope prox closed form matches the scan oracle") {
    const Vec anchor = Vec::Zero(3);
    const double mu = 2.0;
    const double step = 1.0;

    SECTION("frozen examples") {
        CHECK(fedloc::prox_neg_envelope(Vec::Zero(3), anchor, mu, step).norm() < kExactTol);

        const Vec inner = fedloc::prox_neg_envelope(vec3(0.5, 0, 0), anchor, mu, step);
        CHECK((inner - vec3(1, 0, 0)).norm() < kExactTol);

        const Vec outer = fedloc::prox_neg_envelope(vec3(3, 0, 0), anchor, mu, step);
        CHECK((outer - vec3(4, 0, 0)).norm() < kExactTol);
    }
    SECTION("derived examples agree with the dense scan") {
        for (const Vec& c : {vec3(0.5, 0, 0), vec3(3, 0, 0)}) {
            const Vec got = fedloc::prox_neg_envelope(c, anchor, mu, step);
            const Vec scanned = oracle::scan_neg_envelope_prox(c, anchor, 0.0, mu, step);
            CHECK(oracle::neg_envelope_prox_objective(got, c, anchor, 0.0, mu, step) <=
                  oracle::neg_envelope_prox_objective(scanned, c, anchor, 0.0, mu, step) +
                      kObjectiveTol);
        }
    }
    SECTION("both branches meet at the case boundary") {
        const double r = mu - step;
        const Vec lo = fedloc::prox_neg_envelope(vec3(r - 1e-9, 0, 0), anchor, mu, step);
        const Vec hi = fedloc::prox_neg_envelope(vec3(r + 1e-9, 0, 0), anchor, mu, step);
        CHECK((lo - hi).norm() < 1e-7);
        const Vec at = fedloc::prox_neg_envelope(vec3(r, 0, 0), anchor, mu, step);
        CHECK((at - vec3(mu, 0, 0)).norm() < kExactTol);
    }
    SECTION("the range offset does not move the minimizer") {
        const Vec c = vec3(1.3, -0.4, 0.7);
        const Vec with_zero = oracle::scan_neg_envelope_prox(c, anchor, 0.0, mu, step);
        const Vec with_offset = oracle::scan_neg_envelope_prox(c, anchor, 7.0, mu, step);
        CHECK((with_zero - with_offset).norm() < 1e-6);
        const Vec got = fedloc::prox_neg_envelope(c, anchor, mu, step);
        CHECK(oracle::neg_envelope_prox_objective(got, c, anchor, 7.0, mu, step) <=
              oracle::neg_envelope_prox_objective(with_offset, c, anchor, 7.0, mu, step) +
                  kObjectiveTol);
    }
    SECTION("a step at or above mu is rejected") {
        CHECK_THROWS_AS(fedloc::prox_neg_envelope(vec3(1, 0, 0), anchor, 1.0, 1.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(fedloc::prox_neg_envelope(vec3(1, 0, 0), anchor, 1.0, 2.0),
                        std::invalid_argument);
    }
}

TEST_CASE("scalar smoothed-abs prox") {
    CHECK_THAT(fedloc::prox_smooth_abs(0.0, 1.0, 1.0), WithinAbs(0.0, kExactTol));
    CHECK_THAT(fedloc::prox_smooth_abs(1.0, 1.0, 1.0), WithinAbs(0.5, kExactTol));
    CHECK_THAT(fedloc::prox_smooth_abs(5.0, 1.0, 1.0), WithinAbs(4.0, kExactTol));

    SECTION("odd symmetry") {
        fedloc::Rng rng(11);
        for (int i = 0; i < 200; ++i) {
            const double v = rng.uniform(-8.0, 8.0);
            const double lambda = rng.uniform(0.05, 2.0);
            const double mu = rng.uniform(0.05, 2.0);
            CHECK_THAT(fedloc::prox_smooth_abs(-v, lambda, mu),
                       WithinAbs(-fedloc::prox_smooth_abs(v, lambda, mu), kExactTol));
        }
    }
    SECTION("zero coupling is the identity") {
        CHECK_THAT(fedloc::prox_smooth_abs(3.7, 0.0, 1.0), WithinAbs(3.7, kExactTol));
        CHECK_THAT(fedloc::prox_smooth_abs(-0.2, 0.0, 0.5), WithinAbs(-0.2, kExactTol));
    }
    SECTION("invalid parameters are rejected") {
        CHECK_THROWS_AS(fedloc::prox_smooth_abs(1.0, -1.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(fedloc::prox_smooth_abs(1.0, 1.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("smoothing and envelope sandwiches") {
    fedloc::Rng rng(17);
    for (int i = 0; i < 2000; ++i) {
        const double z = rng.uniform(-10.0, 10.0);
        const double mu = rng.uniform(1e-3, 4.0);
        const double f = fedloc::smooth_abs(z, mu);
        CHECK(f >= std::abs(z) - kExactTol);
        CHECK(f <= std::abs(z) + mu / 2.0 + kExactTol);
    }
    for (int i = 0; i < 2000; ++i) {
        const Vec x = random_vec(rng, 3, 10.0);
        const Vec a = random_vec(rng, 3, 5.0);
        const double d = rng.uniform(0.0, 6.0);
        const double mu = rng.uniform(1e-3, 4.0);
        const double phi = (x - a).norm() - d;
        const double env = fedloc::moreau_residual(x, a, d, mu);
        CHECK(env <= phi + kExactTol);
        CHECK(env >= phi - mu / 2.0 - kExactTol);
    }
}

TEST_CASE("smaller mu refines both approximations monotonically") {
    fedloc::Rng rng(23);
    for (int i = 0; i < 2000; ++i) {
        const double mu1 = rng.uniform(1e-3, 2.0);
        const double mu2 = mu1 + rng.uniform(1e-3, 2.0);
        const double z = rng.uniform(-6.0, 6.0);
        CHECK(fedloc::smooth_abs(z, mu1) <= fedloc::smooth_abs(z, mu2) + kExactTol);

        const Vec x = random_vec(rng, 3, 8.0);
        const Vec a = random_vec(rng, 3, 4.0);
        const double d = rng.uniform(0.0, 5.0);
        CHECK(fedloc::moreau_residual(x, a, d, mu1) >=
              fedloc::moreau_residual(x, a, d, mu2) - kExactTol);
    }
}

TEST_CASE("random-instance prox optimality against scans and perturbed candidates") {
    fedloc::Rng rng(31);
    constexpr int kInstances = 1000;
    constexpr int kCandidates = 10000;

    SECTION("range hinge prox") {
        int violations = 0;
        for (int i = 0; i < kInstances; ++i) {
            const Vec a = random_vec(rng, 3, 5.0);
            const Vec p = random_vec(rng, 3, 10.0);
            const double d = rng.uniform(0.0, 5.0);
            const double lambda = rng.uniform(0.05, 2.0);
            const Vec got = fedloc::prox_range_hinge(p, a, d, lambda);

            if ((got - a).norm() > (p - a).norm() + kExactTol) ++violations;

            const double obj = oracle::hinge_prox_objective(got, p, a, d, lambda);
            const Vec scanned = oracle::scan_hinge_prox(p, a, d, lambda);
            if (obj > oracle::hinge_prox_objective(scanned, p, a, d, lambda) + kObjectiveTol)
                ++violations;
            for (int t = 0; t < kCandidates; ++t) {
                Vec cand = got;
                const double radius = rng.uniform(1e-4, 2.0);
                for (int j = 0; j < 3; ++j) cand[j] += radius * rng.normal();
                if (obj > oracle::hinge_prox_objective(cand, p, a, d, lambda) + kObjectiveTol)
                    ++violations;
            }
        }
        REQUIRE(violations == 0);
    }
    SECTION("negative envelope prox") {
        int violations = 0;
        for (int i = 0; i < kInstances; ++i) {
            const Vec a = random_vec(rng, 3, 5.0);
            const Vec c = random_vec(rng, 3, 10.0);
            const double d = rng.uniform(0.0, 5.0);
            const double mu = rng.uniform(0.1, 3.0);
            const double step = rng.uniform(0.05, 0.9) * mu;
            const Vec got = fedloc::prox_neg_envelope(c, a, mu, step);

            const double obj = oracle::neg_envelope_prox_objective(got, c, a, d, mu, step);
            const Vec scanned = oracle::scan_neg_envelope_prox(c, a, d, mu, step);
            if (obj >
                oracle::neg_envelope_prox_objective(scanned, c, a, d, mu, step) + kObjectiveTol)
                ++violations;
            for (int t = 0; t < kCandidates; ++t) {
                Vec cand = got;
                const double radius = rng.uniform(1e-4, 2.0);
                for (int j = 0; j < 3; ++j) cand[j] += radius * rng.normal();
                if (obj >
                    oracle::neg_envelope_prox_objective(cand, c, a, d, mu, step) + kObjectiveTol)
                    ++violations;
            }
        }
        REQUIRE(violations == 0);
    }
    SECTION("scalar smoothed-abs prox") {
        int violations = 0;
        for (int i = 0; i < kInstances; ++i) {
            const double v = rng.uniform(-10.0, 10.0);
            const double lambda = rng.uniform(0.05, 2.0);
            const double mu = rng.uniform(0.05, 2.0);
            const double got = fedloc::prox_smooth_abs(v, lambda, mu);

            const double obj = oracle::smooth_abs_prox_objective(got, v, lambda, mu);
            const double scanned = oracle::scan_smooth_abs_prox(v, lambda, mu);
            if (obj > oracle::smooth_abs_prox_objective(scanned, v, lambda, mu) + kObjectiveTol)
                ++violations;
            for (int t = 0; t < kCandidates; ++t) {
                const double cand = got + rng.uniform(1e-4, 2.0) * rng.normal();
                if (obj > oracle::smooth_abs_prox_objective(cand, v, lambda, mu) + kObjectiveTol)
                    ++violations;
            }
        }
        REQUIRE(violations == 0);
    }
}

TEST_CASE("range hinge prox is nonexpansive") {
    fedloc::Rng rng(37);
    for (int i = 0; i < 2000; ++i) {
        const Vec a = random_vec(rng, 3, 5.0);
        const Vec p1 = random_vec(rng, 3, 10.0);
        const Vec p2 = random_vec(rng, 3, 10.0);
        const double d = rng.uniform(0.0, 5.0);
        const double lambda = rng.uniform(0.05, 2.0);
        const Vec q1 = fedloc::prox_range_hinge(p1, a, d, lambda);
        const Vec q2 = fedloc::prox_range_hinge(p2, a, d, lambda);
        CHECK((q1 - q2).norm() <= (p1 - p2).norm() + kExactTol);
    }
}

TEST_CASE("vector proxes commute with rotations about the anchor") {
    fedloc::Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        const Eigen::MatrixXd rot = random_rotation(rng, 3);
        const Vec a = random_vec(rng, 3, 5.0);
        const Vec p = random_vec(rng, 3, 10.0);
        const double d = rng.uniform(0.0, 5.0);
        const double lambda = rng.uniform(0.05, 2.0);
        const double mu = rng.uniform(0.1, 3.0);
        const double step = rng.uniform(0.05, 0.9) * mu;

        const Vec rotated_input = a + rot * (p - a);

        const Vec hinge_then_rotate = a + rot * (fedloc::prox_range_hinge(p, a, d, lambda) - a);
        const Vec rotate_then_hinge = fedloc::prox_range_hinge(rotated_input, a, d, lambda);
        CHECK((hinge_then_rotate - rotate_then_hinge).norm() < 1e-10);

        const Vec env_then_rotate = a + rot * (fedloc::prox_neg_envelope(p, a, mu, step) - a);
        const Vec rotate_then_env = fedloc::prox_neg_envelope(rotated_input, a, mu, step);
        CHECK((env_then_rotate - rotate_then_env).norm() < 1e-10);
    }
}
