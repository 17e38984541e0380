#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "perch/target_model.hpp"

using namespace perch;

TEST_CASE("predict extrapolates at constant velocity") {
    SurfaceTrack track;
    track.s0 = SurfaceState::make(Vec3(0.0, 0.0, 1.0), Vec3(0.0, 3.0, 0.0),
                                  Vec3(0.0, -0.9396926, 0.3420201));
    const SurfaceState s = predict(track, 0.5);
    CHECK(s.p_s.isApprox(Vec3(0.0, 1.5, 1.0), 1e-12));
    CHECK(s.v_s.isApprox(track.s0.v_s));
    CHECK(s.Z_s.isApprox(track.s0.Z_s));
    CHECK(s.Y_s.isApprox(track.s0.Y_s));

    const SurfaceState at_epoch = predict(track, 0.0);
    CHECK(at_epoch.p_s.isApprox(track.s0.p_s));

    // reversing target
    track.s0.p_s = Vec3(0.0, 5.0, 1.0);
    track.s0.v_s = Vec3(0.0, -1.0, 0.0);
    CHECK(predict(track, 2.0).p_s.isApprox(Vec3(0.0, 3.0, 1.0), 1e-12));
}

TEST_CASE("terminal covariance growth") {
    NoiseSpec n;
    n.sigma_v = Vec3(0.09, 0.09, 0.09);
    n.sigma_p = Vec3(0.01, 0.01, 0.01);

    const Vec9 v1 = terminal_covariance(n, 1.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(v1[i] == doctest::Approx(0.10).epsilon(1e-12));
        CHECK(v1[3 + i] == doctest::Approx(0.09).epsilon(1e-12));
        CHECK(v1[6 + i] == 0.0);
    }

    const Vec9 v0 = terminal_covariance(n, 0.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(v0[i] == doctest::Approx(0.01).epsilon(1e-12));
    }

    CHECK(terminal_covariance(NoiseSpec{}, 3.0).isZero());
}

TEST_CASE("terminal covariance is monotone in the horizon") {
    for (int i = 0; i < 50; ++i) {
        NoiseSpec n;
        for (int k = 0; k < 3; ++k) {
            n.sigma_p[k] = oracles::uni(3, i, k, 0.0, 0.2);
            n.sigma_v[k] = oracles::uni(3, i, 3 + k, 0.0, 0.5);
        }
        const double T1 = oracles::uni(3, 100 + i, 0, 0.0, 2.0);
        const double T2 = T1 + oracles::uni(3, 200 + i, 0, 0.0, 2.0);
        const Vec9 a = terminal_covariance(n, T1);
        const Vec9 b = terminal_covariance(n, T2);
        CHECK(((b - a).array() >= -1e-15).all());
        CHECK(a[6] == 0.0);
        CHECK(b[7] == 0.0);
        CHECK(b[8] == 0.0);
    }
}
