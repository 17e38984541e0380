#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "perch/state_core.hpp"

#include <cmath>

using namespace perch;

namespace {
const double kDeg = M_PI / 180.0;
}

TEST_CASE("flow matches the nilpotent series") {
    State9 x;
    x.v = Vec3(1.0, 0.0, 0.0);
    const State9 back = flow(x, -2.0);
    CHECK(back.p.isApprox(Vec3(-2.0, 0.0, 0.0)));
    CHECK(back.v.isApprox(Vec3(1.0, 0.0, 0.0)));
    CHECK(back.a.norm() == 0.0);

    const State9 zero;
    for (double t : {-3.0, 0.0, 0.7, 12.0}) {
        const State9 y = flow(zero, t);
        CHECK(y.p.norm() == 0.0);
        CHECK(y.v.norm() == 0.0);
        CHECK(y.a.norm() == 0.0);
    }
}

TEST_CASE("flow equals the matrix-exponential oracle") {
    State9 x;
    x.p = Vec3(1.0, 1.0, 1.0);
    x.v = Vec3(0.0, 1.0, 0.0);
    x.a = Vec3(0.0, 0.0, 2.0);
    const State9 y = flow(x, 1.0);
    CHECK(y.p.isApprox(Vec3(1.0, 2.0, 2.0), 1e-12));
    CHECK(y.v.isApprox(Vec3(0.0, 1.0, 2.0), 1e-12));
    CHECK(y.a.isApprox(Vec3(0.0, 0.0, 2.0), 1e-12));

    const auto A = oracles::triple_integrator_A();
    for (int i = 0; i < 50; ++i) {
        const State9 r = oracles::random_state(7, i, 5.0, 3.0, 2.0);
        const double t = oracles::uni(7, 1000 + i, 0, -3.0, 3.0);
        const Vec9 expected = oracles::expm9(A * t) * r.to_vec();
        CHECK((flow(r, t).to_vec() - expected).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("flow inverse and semigroup properties") {
    for (int i = 0; i < 200; ++i) {
        const State9 x = oracles::random_state(11, i, 10.0, 5.0, 3.0);
        const double t = oracles::uni(11, 5000 + i, 0, -4.0, 4.0);
        const double t2 = oracles::uni(11, 9000 + i, 0, -4.0, 4.0);

        const State9 round = flow(flow(x, t), -t);
        CHECK((round.to_vec() - x.to_vec()).cwiseAbs().maxCoeff() < 1e-9);

        const State9 joint = flow(x, t + t2);
        const State9 split = flow(flow(x, t), t2);
        CHECK((joint.to_vec() - split.to_vec()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("terminal_from_surface reproduces the inclined-surface case") {
    const double s70 = std::sin(70.0 * kDeg), c70 = std::cos(70.0 * kDeg);
    SurfaceState s;
    s.p_s = Vec3(0.0, 5.0, 1.0);
    s.v_s = Vec3(0.0, 3.0, 0.0);
    s.Z_s = Vec3(0.0, -s70, c70);
    s.Y_s = Vec3(0.0, c70, s70);
    REQUIRE(s.valid());

    const PerchParams params{0.1, 1.0, 0.0, 9.81};
    const State9 xT = terminal_from_surface(s, params);
    CHECK(xT.p.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(xT.p.y() == doctest::Approx(5.0940).epsilon(1e-4));
    CHECK(xT.p.z() == doctest::Approx(0.9658).epsilon(1e-4));
    CHECK(xT.v.y() == doctest::Approx(3.9397).epsilon(1e-4));
    CHECK(xT.v.z() == doctest::Approx(-0.3420).epsilon(1e-3));
    CHECK(xT.a.y() == doctest::Approx(-9.2185).epsilon(1e-4));
    CHECK(xT.a.z() == doctest::Approx(-6.4547).epsilon(1e-4));
}

TEST_CASE("terminal_from_surface flat-surface cases") {
    SurfaceState s = SurfaceState::make(Vec3(1.0, 2.0, 0.5), Vec3(0.0, 1.0, 0.0), Vec3::UnitZ());
    PerchParams params{0.0, 0.0, 0.0, 9.81};
    State9 xT = terminal_from_surface(s, params);
    CHECK(xT.p.isApprox(s.p_s));
    CHECK(xT.v.isApprox(s.v_s));
    CHECK(xT.a.norm() == doctest::Approx(0.0));

    params.v_tau = 1.0;
    xT = terminal_from_surface(s, params);
    CHECK(xT.v.isApprox(s.v_s + s.Y_s));
}

TEST_CASE("terminal acceleration depends only on the normal") {
    const Vec3 Z = Vec3(0.0, -0.6, 0.8);
    const PerchParams params{0.1, 1.2, 0.3, 9.81};
    Vec3 a_ref;
    for (int i = 0; i < 5; ++i) {
        SurfaceState s = SurfaceState::make(Vec3(0.0, i * 2.0, 1.0), Vec3(0.0, i * 0.5, 0.0), Z);
        const State9 xT = terminal_from_surface(s, params);
        if (i == 0) {
            a_ref = xT.a;
        } else {
            CHECK(xT.a.isApprox(a_ref, 1e-15));
        }
        // velocity identity: v_T - v_s + v_n Z_s - v_tau Y_s = 0
        const Vec3 resid = xT.v - s.v_s + params.v_n * s.Z_s - params.v_tau * s.Y_s;
        CHECK(resid.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("surface construction derives the up-slope tangent") {
    const double s70 = std::sin(70.0 * kDeg), c70 = std::cos(70.0 * kDeg);
    const SurfaceState s =
        SurfaceState::make(Vec3::Zero(), Vec3::Zero(), Vec3(0.0, -s70, c70));
    CHECK(s.Y_s.isApprox(Vec3(0.0, c70, s70), 1e-12));
    CHECK(s.valid());
    CHECK(s.inclination() == doctest::Approx(70.0 * kDeg));
}

TEST_CASE("classify_impact against the gripper window") {
    const SuccessBounds b;
    const double phi_s = 70.0 * kDeg;
    CHECK(classify_impact(0.1, 1.0, -1.0, phi_s, phi_s, b));
    CHECK_FALSE(classify_impact(0.0, 0.0, -2.5, phi_s, phi_s, b)); // too fast into the surface
    CHECK_FALSE(classify_impact(0.2, 0.0, -1.0, phi_s, phi_s, b)); // off the surface extent
    // angle window is relative to the surface inclination
    CHECK(classify_impact(0.0, 0.5, -1.0, phi_s + 0.30, phi_s, b));
    CHECK_FALSE(classify_impact(0.0, 0.5, -1.0, phi_s + 0.32, phi_s, b));
}
