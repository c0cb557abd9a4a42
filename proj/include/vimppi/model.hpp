/*
 Copyright 2026 The vimppi Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef VIMPPI_MODEL_HPP
#define VIMPPI_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace vimppi {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;

/**
 * @brief Physical parameters of a two-link pendulum.
 *
 * Inertias are referred to the joint axis (they include the m*r^2 term), so a
 * point-mass link has I = m*r^2. Joint 2 is measured relative to link 1.
 * The defaults put each link's mass at its tip.
 */
template <typename Scalar>
struct ModelParams {
    Scalar m1{0.608};
    Scalar m2{0.630};
    Scalar l1{0.3};
    Scalar l2{0.4};
    Scalar r1{0.3};
    Scalar r2{0.4};
    Scalar I1{0.05472};
    Scalar I2{0.1008};
    Scalar b1{0.001};
    Scalar b2{0.001};
    Scalar g{9.81};
    Scalar tau_max{6.0};
    std::array<bool, 2> actuation_mask{true, false};

    Vector2<Scalar> damping() const { return {b1, b2}; }
};

using ModelParamsd = ModelParams<double>;

template <typename Scalar>
ModelParams<Scalar> pendubot_params(ModelParams<Scalar> p = {}) {
    p.actuation_mask = {true, false};
    return p;
}

template <typename Scalar>
ModelParams<Scalar> acrobot_params(ModelParams<Scalar> p = {}) {
    p.actuation_mask = {false, true};
    return p;
}

/// Throws std::invalid_argument when the parameters describe no physical plant.
template <typename Scalar>
void validate(const ModelParams<Scalar>& p) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(what);
    };
    require(p.m1 > 0 && p.m2 > 0, "model: masses must be positive");
    require(p.l1 > 0 && p.l2 > 0, "model: link lengths must be positive");
    require(p.r1 > 0 && p.r1 <= p.l1 && p.r2 > 0 && p.r2 <= p.l2,
            "model: center of mass must lie on the link (0 < r <= l)");
    require(p.I1 > 0 && p.I2 > 0, "model: inertias must be positive");
    require(p.b1 >= 0 && p.b2 >= 0, "model: damping must be nonnegative");
    require(p.g >= 0, "model: gravity must be nonnegative");
    require(p.tau_max >= 0, "model: torque limit must be nonnegative");
}

/// Joint angles (q = 0 hanging, unwrapped) and joint velocities.
template <typename Scalar>
struct State {
    Vector2<Scalar> q = Vector2<Scalar>::Zero();
    Vector2<Scalar> v = Vector2<Scalar>::Zero();

    State() = default;
    State(const Vector2<Scalar>& q_, const Vector2<Scalar>& v_) : q(q_), v(v_) {}
    State(Scalar q1, Scalar q2, Scalar v1, Scalar v2) : q(q1, q2), v(v1, v2) {}

    Vector4<Scalar> vector() const { return {q(0), q(1), v(0), v(1)}; }
    static State from_vector(const Vector4<Scalar>& x) { return {x(0), x(1), x(2), x(3)}; }

    bool finite() const { return q.allFinite() && v.allFinite(); }

    friend bool operator==(const State& a, const State& b) { return a.q == b.q && a.v == b.v; }
};

using Stated = State<double>;

/// Upright target and the thresholds used to score "upright".
struct GoalSpec {
    Stated x_goal{std::numbers::pi, 0.0, 0.0, 0.0};
    double upright_height_threshold = 0.9;
    double upright_velocity_threshold = 10.0;
};

/// Representative of x in (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar x) {
    using std::remainder;
    const Scalar pi = Scalar(std::numbers::pi);
    const Scalar two_pi = Scalar(2 * std::numbers::pi);
    if (x > -pi && x <= pi) return x;
    if (x > -3 * pi && x <= 3 * pi) return x > 0 ? x - two_pi : x + two_pi;
    Scalar y = remainder(x, two_pi);
    if (y <= -Scalar(std::numbers::pi)) y += two_pi;
    return y;
}

/// Lane-wise wrap_angle over an Eigen array.
template <typename Derived>
typename Derived::PlainObject wrap_angle_lanes(const Eigen::ArrayBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Scalar pi = Scalar(std::numbers::pi);
    const Scalar two_pi = Scalar(2 * std::numbers::pi);
    typename Derived::PlainObject y = (x > pi).select(x - two_pi, x);
    y = (y <= -pi).select(y + two_pi, y);
    if (((y > pi) || (y <= -pi)).any()) {
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = wrap_angle(x(i));
    }
    return y;
}

template <typename Scalar>
Matrix2<Scalar> mass_matrix(const Vector2<Scalar>& q, const ModelParams<Scalar>& p) {
    using std::cos;
    const Scalar h = p.m2 * p.l1 * p.r2;
    const Scalar c2 = cos(q(1));
    Matrix2<Scalar> M;
    M(0, 0) = p.I1 + p.I2 + p.m2 * p.l1 * p.l1 + 2 * h * c2;
    M(0, 1) = p.I2 + h * c2;
    M(1, 0) = M(0, 1);
    M(1, 1) = p.I2;
    return M;
}

/// dM/dq2 (M does not depend on q1).
template <typename Scalar>
Matrix2<Scalar> mass_matrix_dq2(const Vector2<Scalar>& q, const ModelParams<Scalar>& p) {
    using std::sin;
    const Scalar hs = p.m2 * p.l1 * p.r2 * sin(q(1));
    Matrix2<Scalar> dM;
    dM << -2 * hs, -hs, -hs, Scalar(0);
    return dM;
}

/// Potential energy with datum V(0, 0) = 0.
template <typename Scalar>
Scalar potential_energy(const Vector2<Scalar>& q, const ModelParams<Scalar>& p) {
    using std::cos;
    return p.g * ((p.m1 * p.r1 + p.m2 * p.l1) * (1 - cos(q(0))) +
                  p.m2 * p.r2 * (1 - cos(q(0) + q(1))));
}

/// Generalized gravity torque, -dV/dq.
template <typename Scalar>
Vector2<Scalar> gravity_torque(const Vector2<Scalar>& q, const ModelParams<Scalar>& p) {
    using std::sin;
    const Scalar s12 = sin(q(0) + q(1));
    return {-p.g * ((p.m1 * p.r1 + p.m2 * p.l1) * sin(q(0)) + p.m2 * p.r2 * s12),
            -p.g * p.m2 * p.r2 * s12};
}

template <typename Scalar>
Scalar kinetic_energy(const State<Scalar>& s, const ModelParams<Scalar>& p) {
    return Scalar(0.5) * s.v.dot(mass_matrix(s.q, p) * s.v);
}

template <typename Scalar>
Scalar total_energy(const State<Scalar>& s, const ModelParams<Scalar>& p) {
    return kinetic_energy(s, p) + potential_energy(s.q, p);
}

template <typename Scalar>
Scalar continuous_lagrangian(const State<Scalar>& s, const ModelParams<Scalar>& p) {
    return kinetic_energy(s, p) - potential_energy(s.q, p);
}

/// Velocity-product terms C(q, v) v of the manipulator equation.
template <typename Scalar>
Vector2<Scalar> coriolis_terms(const State<Scalar>& s, const ModelParams<Scalar>& p) {
    using std::sin;
    const Scalar hs = p.m2 * p.l1 * p.r2 * sin(s.q(1));
    const Scalar v1 = s.v(0);
    const Scalar v2 = s.v(1);
    return {-hs * (2 * v1 * v2 + v2 * v2), hs * v1 * v1};
}

/**
 * @brief Joint accelerations of M(q) qdd + C(q, v) v + G(q) + b v = tau.
 *
 * tau is the applied joint torque; masking and clamping are the caller's job.
 */
template <typename Scalar>
Vector2<Scalar> forward_dynamics(const State<Scalar>& s, const Vector2<Scalar>& tau,
                                 const ModelParams<Scalar>& p) {
    const Vector2<Scalar> rhs = tau - p.damping().cwiseProduct(s.v) - coriolis_terms(s, p) +
                                gravity_torque(s.q, p);
    return mass_matrix(s.q, p).inverse() * rhs;
}

/// Zeroes the passive joint and clamps to the torque limit.
template <typename Scalar>
Vector2<Scalar> apply_actuation(const Vector2<Scalar>& u_raw, const ModelParams<Scalar>& p) {
    Vector2<Scalar> tau;
    for (int i = 0; i < 2; ++i) {
        tau(i) = p.actuation_mask[i] ? std::clamp(u_raw(i), -p.tau_max, p.tau_max) : Scalar(0);
    }
    return tau;
}

/// Height of the second link's tip above the first joint.
template <typename Scalar>
Scalar end_effector_height(const Vector2<Scalar>& q, const ModelParams<Scalar>& p) {
    using std::cos;
    return -p.l1 * cos(q(0)) - p.l2 * cos(q(0) + q(1));
}

inline bool is_upright(const Stated& s, const GoalSpec& goal, const ModelParamsd& p) {
    const double height = end_effector_height(s.q, p);
    return height >= goal.upright_height_threshold * (p.l1 + p.l2) &&
           s.v.cwiseAbs().maxCoeff() < goal.upright_velocity_threshold;
}

/// State error relative to the goal with both angle components wrapped.
inline Eigen::Vector4d state_error(const Stated& s, const Stated& goal) {
    return {wrap_angle(s.q(0) - goal.q(0)), wrap_angle(s.q(1) - goal.q(1)), s.v(0) - goal.v(0),
            s.v(1) - goal.v(1)};
}

}  // namespace vimppi

#endif  // VIMPPI_MODEL_HPP
