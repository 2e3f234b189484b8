#include "adsb/vehicle_model.hpp"

#include <cmath>

namespace adsb {

Eigen::Matrix<double, 5, 1> kinematic_derivative(const EgoState& s, const EgoInput& u,
                                                 double wheelbase) {
    Eigen::Matrix<double, 5, 1> d;
    d << s.v * std::cos(s.psi), s.v * std::sin(s.psi), s.v * std::tan(s.delta) / wheelbase,
        u.accel, u.steer_rate;
    return d;
}

EgoState rk4_step(const EgoState& s, const EgoInput& u, double dt, double wheelbase) {
    auto add = [](const EgoState& a, const Eigen::Matrix<double, 5, 1>& d, double h) {
        EgoState r = a;
        r.X += h * d(0);
        r.Y += h * d(1);
        r.psi += h * d(2);
        r.v += h * d(3);
        r.delta += h * d(4);
        return r;
    };
    const auto k1 = kinematic_derivative(s, u, wheelbase);
    const auto k2 = kinematic_derivative(add(s, k1, 0.5 * dt), u, wheelbase);
    const auto k3 = kinematic_derivative(add(s, k2, 0.5 * dt), u, wheelbase);
    const auto k4 = kinematic_derivative(add(s, k3, dt), u, wheelbase);
    return add(s, k1 + 2.0 * k2 + 2.0 * k3 + k4, dt / 6.0);
}

SimpleStepResult simple_step(const SimpleState& s, const SimpleInput& u, double dx) {
    SimpleStepResult r;
    const double v_sq_next = s.v_sq + 2.0 * u.u_a * dx;
    if (v_sq_next < 0.0) {
        // Vehicle stops inside the step: clamp to the stopping distance.
        const double dx_stop = -s.v_sq / (2.0 * u.u_a);
        const double v0 = std::sqrt(s.v_sq);
        r.next.X = s.X + dx_stop;
        r.next.Y = s.Y + u.u_y * dx_stop;
        r.next.v_sq = 0.0;
        r.next.t = s.t + v0 / (-u.u_a);
        r.stopped_within_step = true;
        r.dx_covered = dx_stop;
        return r;
    }
    r.next.X = s.X + dx;
    r.next.Y = s.Y + u.u_y * dx;
    r.next.v_sq = v_sq_next;
    const double v0 = std::sqrt(s.v_sq);
    if (u.u_a > 0.0) {
        r.next.t = s.t - v0 / u.u_a + std::sqrt(s.v_sq / (u.u_a * u.u_a) + 2.0 * dx / u.u_a);
    } else if (u.u_a == 0.0) {
        r.next.t = s.t + dx / v0;
    } else {
        r.next.t = s.t - v0 / u.u_a - std::sqrt(s.v_sq / (u.u_a * u.u_a) + 2.0 * dx / u.u_a);
    }
    r.dx_covered = dx;
    return r;
}

Vec VehicleModel::to_vec(const EgoState& s) const {
    Vec x(nx());
    if (kind_ == Kind::kKinematic) {
        x << s.X, s.Y, s.psi, s.v, s.delta;
    } else {
        x << s.X, s.Y, s.psi, s.v;
    }
    return x;
}

EgoState VehicleModel::to_state(const Vec& x, const Vec& u) const {
    EgoState s;
    s.X = x(0);
    s.Y = x(1);
    s.psi = x(2);
    s.v = x(3);
    s.delta = kind_ == Kind::kKinematic ? x(4) : u(0);
    return s;
}

Vec VehicleModel::input_vec(const EgoInput& u) const {
    Vec v(2);
    v << u.steer_rate, u.accel;
    return v;
}

EgoInput VehicleModel::to_input(const Vec& u) const { return EgoInput{u(0), u(1)}; }

Vec VehicleModel::f(const Vec& x, const Vec& u) const {
    Vec d(nx());
    const double psi = x(2), v = x(3);
    const double delta = kind_ == Kind::kKinematic ? x(4) : u(0);
    d(0) = v * std::cos(psi);
    d(1) = v * std::sin(psi);
    d(2) = v * std::tan(delta) / wheelbase_;
    d(3) = u(1);
    if (kind_ == Kind::kKinematic) d(4) = u(0);
    return d;
}

Mat VehicleModel::fx(const Vec& x, const Vec& u) const {
    Mat J = Mat::Zero(nx(), nx());
    const double psi = x(2), v = x(3);
    const double delta = kind_ == Kind::kKinematic ? x(4) : u(0);
    const double c = std::cos(psi), s = std::sin(psi);
    J(0, 2) = -v * s;
    J(0, 3) = c;
    J(1, 2) = v * c;
    J(1, 3) = s;
    J(2, 3) = std::tan(delta) / wheelbase_;
    if (kind_ == Kind::kKinematic) {
        const double sec = 1.0 / std::cos(delta);
        J(2, 4) = v * sec * sec / wheelbase_;
    }
    return J;
}

Mat VehicleModel::fu(const Vec& x, const Vec& u) const {
    Mat J = Mat::Zero(nx(), nu());
    if (kind_ == Kind::kKinematic) {
        J(4, 0) = 1.0;
        J(3, 1) = 1.0;
    } else {
        const double v = x(3);
        const double sec = 1.0 / std::cos(u(0));
        J(2, 0) = v * sec * sec / wheelbase_;
        J(3, 1) = 1.0;
    }
    return J;
}

Vec VehicleModel::step(const Vec& x, const Vec& u, double dt) const {
    const Vec k1 = f(x, u);
    const Vec k2 = f(x + 0.5 * dt * k1, u);
    const Vec k3 = f(x + 0.5 * dt * k2, u);
    const Vec k4 = f(x + dt * k3, u);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void VehicleModel::step_jacobians(const Vec& x, const Vec& u, double dt, Mat& A, Mat& B) const {
    const int n = nx();
    const Vec k1 = f(x, u);
    const Vec x2 = x + 0.5 * dt * k1;
    const Vec k2 = f(x2, u);
    const Vec x3 = x + 0.5 * dt * k2;
    const Vec k3 = f(x3, u);
    const Vec x4 = x + dt * k3;
    const Vec k4 = f(x4, u);

    const Mat I = Mat::Identity(n, n);
    const Mat J1x = fx(x, u), J1u = fu(x, u);
    const Mat J2x_loc = fx(x2, u), J2u_loc = fu(x2, u);
    const Mat J3x_loc = fx(x3, u), J3u_loc = fu(x3, u);
    const Mat J4x_loc = fx(x4, u), J4u_loc = fu(x4, u);

    const Mat K1x = J1x;
    const Mat K1u = J1u;
    const Mat K2x = J2x_loc * (I + 0.5 * dt * K1x);
    const Mat K2u = J2x_loc * (0.5 * dt * K1u) + J2u_loc;
    const Mat K3x = J3x_loc * (I + 0.5 * dt * K2x);
    const Mat K3u = J3x_loc * (0.5 * dt * K2u) + J3u_loc;
    const Mat K4x = J4x_loc * (I + dt * K3x);
    const Mat K4u = J4x_loc * (dt * K3u) + J4u_loc;

    A = I + dt / 6.0 * (K1x + 2.0 * K2x + 2.0 * K3x + K4x);
    B = dt / 6.0 * (K1u + 2.0 * K2u + 2.0 * K3u + K4u);
}

}  // namespace adsb
