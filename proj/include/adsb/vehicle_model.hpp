#pragma once

#include <stdexcept>

#include "adsb/types.hpp"

namespace adsb {

/// Result of one simple-model step. When braking would stop the vehicle
/// before covering the requested dX, the step is clamped to the stopping
/// distance (v_sq = 0, t advanced by the exact stopping time) and
/// `stopped_within_step` is set.
struct SimpleStepResult {
    SimpleState next;
    bool stopped_within_step = false;
    double dx_covered = 0.0;
};

/// Time derivative of the kinematic single-track model,
/// (X, Y, psi, v, delta) -> (v cos psi, v sin psi, v tan(delta)/L, u_a, u_deltadot).
Eigen::Matrix<double, 5, 1> kinematic_derivative(const EgoState& s, const EgoInput& u,
                                                 double wheelbase);

/// Classical RK4 update of the kinematic model with the input held constant.
EgoState rk4_step(const EgoState& s, const EgoInput& u, double dt, double wheelbase);

/// One step of the distance-parameterized simple model.
SimpleStepResult simple_step(const SimpleState& s, const SimpleInput& u, double dx);

/// Ego prediction model used by the OCP: either the full kinematic model
/// with state (X, Y, psi, v, delta) and input (steer rate, accel), or the
/// direct-steer variant with state (X, Y, psi, v) and input (delta, accel).
class VehicleModel {
  public:
    enum class Kind { kKinematic, kDirectSteer };

    VehicleModel(Kind kind, double wheelbase) : kind_(kind), wheelbase_(wheelbase) {
        if (wheelbase <= 0.0) throw std::invalid_argument("wheelbase must be positive");
    }

    Kind kind() const { return kind_; }
    double wheelbase() const { return wheelbase_; }
    int nx() const { return kind_ == Kind::kKinematic ? 5 : 4; }
    int nu() const { return 2; }

    Vec to_vec(const EgoState& s) const;
    EgoState to_state(const Vec& x, const Vec& u) const;
    Vec input_vec(const EgoInput& u) const;
    EgoInput to_input(const Vec& u) const;

    /// Continuous-time derivative and its Jacobians.
    Vec f(const Vec& x, const Vec& u) const;
    Mat fx(const Vec& x, const Vec& u) const;
    Mat fu(const Vec& x, const Vec& u) const;

    /// Discrete RK4 step and its Jacobians (chain rule through the stages).
    Vec step(const Vec& x, const Vec& u, double dt) const;
    void step_jacobians(const Vec& x, const Vec& u, double dt, Mat& A, Mat& B) const;

  private:
    Kind kind_;
    double wheelbase_;
};

}  // namespace adsb
