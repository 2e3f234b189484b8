#include <cmath>
#include <random>

#include "adsb/vehicle_model.hpp"
#include "doctest.h"

using namespace adsb;

namespace {

// Fine-step integration oracle: many small RK4 steps over the same interval.
EgoState integrate_fine(const EgoState& s0, const EgoInput& u, double dt, double L, int substeps) {
    EgoState s = s0;
    const double h = dt / substeps;
    for (int i = 0; i < substeps; ++i) s = rk4_step(s, u, h, L);
    return s;
}

double state_dist(const EgoState& a, const EgoState& b) {
    return std::sqrt(std::pow(a.X - b.X, 2) + std::pow(a.Y - b.Y, 2) + std::pow(a.psi - b.psi, 2) +
                     std::pow(a.v - b.v, 2) + std::pow(a.delta - b.delta, 2));
}

}  // namespace

TEST_CASE("kinematic derivative basic cases") {
    EgoState s;
    s.v = 10.0;
    auto d = kinematic_derivative(s, EgoInput{}, 2.0);
    CHECK(d(0) == doctest::Approx(10.0));
    CHECK(d(1) == doctest::Approx(0.0));
    CHECK(d(2) == doctest::Approx(0.0));
    CHECK(d(3) == doctest::Approx(0.0));
    CHECK(d(4) == doctest::Approx(0.0));

    EgoState rest;
    rest.psi = 0.7;
    rest.delta = 0.2;
    auto dz = kinematic_derivative(rest, EgoInput{}, 2.0);
    CHECK(dz.norm() == doctest::Approx(0.0));

    EgoState c;
    c.v = 10.0;
    c.delta = M_PI / 6.0;
    auto dc = kinematic_derivative(c, EgoInput{}, 2.0);
    CHECK(dc(2) == doctest::Approx(10.0 * std::tan(M_PI / 6.0) / 2.0).epsilon(1e-9));
    CHECK(dc(2) == doctest::Approx(2.8867513).epsilon(1e-6));
}

TEST_CASE("rk4 step straight-line cases are exact") {
    EgoState s;
    s.v = 10.0;
    EgoState n = rk4_step(s, EgoInput{}, 0.2, 2.0);
    CHECK(n.X == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(n.Y == doctest::Approx(0.0));
    CHECK(n.v == doctest::Approx(10.0));

    EgoState m = rk4_step(s, EgoInput{0.0, 3.0}, 0.2, 2.0);
    CHECK(m.v == doctest::Approx(10.6).epsilon(1e-12));
    CHECK(m.X == doctest::Approx(2.06).epsilon(1e-12));
}

TEST_CASE("rk4 step matches fine-step oracle on a curved path") {
    EgoState s;
    s.v = 10.0;
    s.delta = 0.1;
    EgoState coarse = rk4_step(s, EgoInput{}, 0.2, 2.0);
    EgoState fine = integrate_fine(s, EgoInput{}, 0.2, 2.0, 1000);
    CHECK(std::abs(coarse.X - fine.X) < 1e-6);
    CHECK(std::abs(coarse.Y - fine.Y) < 1e-6);
}

TEST_CASE("rk4 is fourth order on random smooth instances") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> uv(5.0, 25.0), upsi(-0.5, 0.5), udelta(-0.3, 0.3),
        ua(-2.0, 2.0), ur(-0.2, 0.2);
    int ok = 0;
    for (int trial = 0; trial < 10; ++trial) {
        EgoState s;
        s.v = uv(rng);
        s.psi = upsi(rng);
        s.delta = udelta(rng);
        EgoInput u{ur(rng), ua(rng)};
        const double T = 0.8, L = 2.5;
        EgoState ref = integrate_fine(s, u, T, L, 8000);
        EgoState a = s, b = s;
        for (int i = 0; i < 8; ++i) a = rk4_step(a, u, T / 8, L);
        for (int i = 0; i < 16; ++i) b = rk4_step(b, u, T / 16, L);
        const double ea = state_dist(a, ref), eb = state_dist(b, ref);
        if (eb > 1e-14) {
            const double ratio = ea / eb;
            if (ratio > 8.0 && ratio < 40.0) ++ok;
        } else {
            ++ok;  // already at floating-point floor
        }
    }
    CHECK(ok >= 8);
}

TEST_CASE("simple step examples") {
    SimpleState s;
    s.v_sq = 100.0;

    auto r0 = simple_step(s, SimpleInput{0.0, 0.0}, 5.0);
    CHECK(!r0.stopped_within_step);
    CHECK(r0.next.t == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r0.next.v_sq == doctest::Approx(100.0));

    auto r1 = simple_step(s, SimpleInput{2.0, 0.0}, 5.0);
    CHECK(r1.next.v_sq == doctest::Approx(120.0));
    CHECK(r1.next.t == doctest::Approx(-5.0 + std::sqrt(30.0)).epsilon(1e-12));
    CHECK(r1.next.t == doctest::Approx(0.47723).epsilon(1e-4));

    auto r2 = simple_step(s, SimpleInput{-2.0, 0.0}, 5.0);
    CHECK(r2.next.v_sq == doctest::Approx(80.0));
    CHECK(r2.next.t == doctest::Approx(5.0 - std::sqrt(20.0)).epsilon(1e-12));
    CHECK(r2.next.t == doctest::Approx(0.52786).epsilon(1e-4));
}

TEST_CASE("simple step clamps to the stopping distance when braking hard") {
    SimpleState s;
    s.v_sq = 16.0;  // 4 m/s
    auto r = simple_step(s, SimpleInput{-3.0, 0.0}, 5.0);
    CHECK(r.stopped_within_step);
    CHECK(r.next.v_sq == doctest::Approx(0.0));
    CHECK(r.dx_covered == doctest::Approx(16.0 / 6.0).epsilon(1e-12));
    CHECK(r.next.X == doctest::Approx(16.0 / 6.0).epsilon(1e-12));
    CHECK(r.next.t == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("simple step time and speed are mutually consistent") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uvsq(4.0, 900.0), ua(-3.0, 3.0), udx(1.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        SimpleState s;
        s.v_sq = uvsq(rng);
        SimpleInput u{ua(rng), 0.0};
        const double dx = udx(rng);
        if (s.v_sq + 2.0 * u.u_a * dx <= 1e-6) continue;
        auto r = simple_step(s, u, dx);
        const double v0 = std::sqrt(s.v_sq);
        const double dt = r.next.t - s.t;
        if (std::abs(u.u_a) > 1e-12) {
            const double covered = v0 * dt + 0.5 * u.u_a * dt * dt;
            CHECK(covered == doctest::Approx(dx).epsilon(1e-9));
        }
        CHECK(std::sqrt(r.next.v_sq) == doctest::Approx(v0 + u.u_a * dt).epsilon(1e-9));
    }
}

TEST_CASE("kinematic and simple models agree on straight motion") {
    const double dt_lattice = 5.0;  // one dX step
    EgoState ks;
    ks.v = 10.0;
    SimpleState ss;
    ss.v_sq = 100.0;
    SimpleInput su{1.5, 0.0};
    EgoInput ku{0.0, 1.5};
    for (int i = 0; i < 6; ++i) {
        auto r = simple_step(ss, su, dt_lattice);
        const double step_time = r.next.t - ss.t;
        // integrate the kinematic model over the same time window
        int sub = 200;
        for (int k = 0; k < sub; ++k) ks = rk4_step(ks, ku, step_time / sub, 2.0);
        ss = r.next;
        CHECK(ks.X == doctest::Approx(ss.X).epsilon(1e-6));
        CHECK(ks.v == doctest::Approx(std::sqrt(ss.v_sq)).epsilon(1e-6));
    }
}

TEST_CASE("vehicle model jacobians match finite differences") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> un(-0.4, 0.4);
    for (auto kind : {VehicleModel::Kind::kKinematic, VehicleModel::Kind::kDirectSteer}) {
        VehicleModel m(kind, 2.5);
        for (int trial = 0; trial < 5; ++trial) {
            Vec x = Vec::Zero(m.nx());
            x(2) = un(rng);
            x(3) = 15.0 + 10.0 * un(rng);
            if (m.nx() == 5) x(4) = 0.5 * un(rng);
            Vec u(2);
            u << 0.5 * un(rng), 2.0 * un(rng);
            Mat A, B;
            m.step_jacobians(x, u, 0.2, A, B);
            const double h = 1e-6;
            for (int i = 0; i < m.nx(); ++i) {
                Vec xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                Vec col = (m.step(xp, u, 0.2) - m.step(xm, u, 0.2)) / (2 * h);
                CHECK((A.col(i) - col).norm() < 1e-6);
            }
            for (int i = 0; i < m.nu(); ++i) {
                Vec up = u, um = u;
                up(i) += h;
                um(i) -= h;
                Vec col = (m.step(x, up, 0.2) - m.step(x, um, 0.2)) / (2 * h);
                CHECK((B.col(i) - col).norm() < 1e-6);
            }
        }
    }
}
