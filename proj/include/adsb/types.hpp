#pragma once

#include <Eigen/Dense>

namespace adsb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;

/// Continuous ego-vehicle state. For the direct-steer model variant the
/// steering angle `delta` mirrors the commanded input.
struct EgoState {
    double X = 0.0;      // longitudinal position (m)
    double Y = 0.0;      // lateral position (m)
    double psi = 0.0;    // heading (rad)
    double v = 0.0;      // speed (m/s)
    double delta = 0.0;  // steering angle (rad)
};

/// Ego control input. In the direct-steer variant `steer_rate` is reused
/// as the commanded steering angle.
struct EgoInput {
    double steer_rate = 0.0;  // u_deltadot (rad/s), or delta (rad) in direct-steer mode
    double accel = 0.0;       // u_a (m/s^2)
};

/// State of the distance-parameterized point model: X is the free variable,
/// squared speed keeps the update linear, t is carried along.
struct SimpleState {
    double X = 0.0;
    double Y = 0.0;
    double v_sq = 0.0;  // squared speed (m^2/s^2)
    double t = 0.0;     // elapsed time (s)
};

/// Constant inputs of the simple model over one X-step.
struct SimpleInput {
    double u_a = 0.0;  // acceleration (m/s^2)
    double u_y = 0.0;  // lateral movement per unit longitudinal movement
};

}  // namespace adsb
