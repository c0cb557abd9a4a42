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

#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vimppi/integrators.hpp"
#include "vimppi/model.hpp"

namespace vimppi {
namespace {

TEST(MassMatrix, UnitPointMassesStraight) {
    const auto p = oracle::unit_point_masses();
    for (double q1 : {0.0, 0.7, -2.0}) {
        const Eigen::Matrix2d M = mass_matrix<double>({q1, 0.0}, p);
        EXPECT_NEAR(M(0, 0), 5.0, 1e-14);
        EXPECT_NEAR(M(0, 1), 2.0, 1e-14);
        EXPECT_NEAR(M(1, 0), 2.0, 1e-14);
        EXPECT_NEAR(M(1, 1), 1.0, 1e-14);
    }
}

TEST(MassMatrix, UnitPointMassesFolded) {
    const auto p = oracle::unit_point_masses();
    const Eigen::Matrix2d M = mass_matrix<double>({1.3, M_PI}, p);
    EXPECT_LT((M - Eigen::Matrix2d::Identity()).norm(), 1e-14);
}

TEST(MassMatrix, MatchesCartesianKinematics) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = oracle::random_params(rng);
        const Stated s = oracle::random_state(rng);
        const Eigen::Matrix2d expected = oracle::mass_matrix(s.q, p);
        EXPECT_LT((mass_matrix(s.q, p) - expected).norm(), 1e-12 * expected.norm());
    }
}

TEST(MassMatrix, SymmetricPositiveDefinite) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> angle(-20.0, 20.0);
    const auto p = ModelParamsd{};
    for (int trial = 0; trial < 10000; ++trial) {
        const Eigen::Matrix2d M = mass_matrix<double>({angle(rng), angle(rng)}, p);
        ASSERT_EQ(M(0, 1), M(1, 0));
        ASSERT_EQ(Eigen::LLT<Eigen::Matrix2d>(M).info(), Eigen::Success);
    }
}

TEST(MassMatrix, DerivativeMatchesFiniteDifference) {
    const auto p = ModelParamsd{};
    const Eigen::Vector2d q(0.4, 1.1);
    const double h = 1e-6;
    const Eigen::Matrix2d fd =
        (mass_matrix<double>(q + Eigen::Vector2d(0, h), p) - mass_matrix<double>(q - Eigen::Vector2d(0, h), p)) /
        (2 * h);
    EXPECT_LT((mass_matrix_dq2(q, p) - fd).norm(), 1e-8);
}

TEST(GravityTorque, VanishesAtEquilibria) {
    const auto p = ModelParamsd{};
    EXPECT_LT(gravity_torque<double>({0.0, 0.0}, p).norm(), 1e-15);
    EXPECT_LT(gravity_torque<double>({M_PI, 0.0}, p).norm(), 1e-14);
}

TEST(GravityTorque, IsNegativePotentialGradient) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = oracle::random_params(rng);
        const Stated s = oracle::random_state(rng);
        const double h = 1e-6;
        for (int i = 0; i < 2; ++i) {
            Eigen::Vector2d e = Eigen::Vector2d::Zero();
            e(i) = h;
            const double fd = -(potential_energy<double>(s.q + e, p) - potential_energy<double>(s.q - e, p)) / (2 * h);
            const double scale = p.g * (p.m1 * p.r1 + p.m2 * (p.l1 + p.r2));
            EXPECT_LT(std::abs(gravity_torque(s.q, p)(i) - fd), 1e-6 * scale);
        }
    }
}

TEST(Energy, PotentialMatchesCartesianHeights) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = oracle::random_params(rng);
        const Stated s = oracle::random_state(rng);
        EXPECT_NEAR(potential_energy(s.q, p), oracle::potential(s.q, p), 1e-12);
    }
    EXPECT_EQ(potential_energy<double>({0.0, 0.0}, ModelParamsd{}), 0.0);
}

TEST(Lagrangian, RestAtDatumIsZero) {
    EXPECT_EQ(continuous_lagrangian(Stated(0, 0, 0, 0), ModelParamsd{}), 0.0);
}

TEST(Lagrangian, KineticPartIsQuadraticInVelocity) {
    const auto p = ModelParamsd{};
    const Stated s(0.3, -0.8, 1.2, -0.4);
    const Stated doubled(s.q, 2.0 * s.v);
    EXPECT_NEAR(kinetic_energy(doubled, p), 4.0 * kinetic_energy(s, p), 1e-14);
}

TEST(Lagrangian, MatchesCartesianOracle) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = oracle::random_params(rng);
        const Stated s = oracle::random_state(rng);
        const double expected = oracle::kinetic(s, p) - oracle::potential(s.q, p);
        EXPECT_NEAR(continuous_lagrangian(s, p), expected, 1e-9);
    }
}

TEST(ForwardDynamics, EquilibriumHasNoAcceleration) {
    EXPECT_LT(forward_dynamics<double>(Stated(0, 0, 0, 0), {0, 0}, ModelParamsd{}).norm(), 1e-15);
}

TEST(ForwardDynamics, MatchesEulerLagrangeOracle) {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> torque(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = oracle::random_params(rng);
        const Stated s = oracle::random_state(rng);
        const Eigen::Vector2d tau(torque(rng), torque(rng));
        const Eigen::Vector2d expected = oracle::accelerations(s, tau, p);
        const Eigen::Vector2d actual = forward_dynamics(s, tau, p);
        EXPECT_LT((actual - expected).norm(), 1e-6 * std::max(1.0, expected.norm()));
    }
}

TEST(ForwardDynamics, EnergyRateIsTorquePower) {
    std::mt19937_64 rng(17);
    const auto p = ModelParamsd{};
    for (int trial = 0; trial < 50; ++trial) {
        const Stated s = oracle::random_state(rng);
        const Eigen::Vector2d tau(0.7, -0.3);
        const Eigen::Vector2d a = forward_dynamics(s, tau, p);
        const double h = 1e-6;
        const Stated plus(s.q + h * s.v, s.v + h * a);
        const Stated minus(s.q - h * s.v, s.v - h * a);
        const double dE = (total_energy(plus, p) - total_energy(minus, p)) / (2 * h);
        const double power = s.v.dot(tau - p.damping().cwiseProduct(s.v));
        EXPECT_NEAR(dE, power, 1e-6);
    }
}

TEST(ForwardDynamics, UnforcedRk4ConservesEnergy) {
    const auto p = oracle::undamped(ModelParamsd{});
    Stated s(2.0, 0.5, 0.0, 0.0);
    const double e0 = total_energy(s, p);
    for (int i = 0; i < 10000; ++i) s = rk4_step<double>(s, {0, 0}, 1e-4, p);
    EXPECT_LT(std::abs(total_energy(s, p) - e0) / std::abs(e0), 1e-6);
}

TEST(Actuation, PendubotZeroesElbow) {
    auto p = pendubot_params<double>();
    p.tau_max = 5.0;
    const Eigen::Vector2d tau = apply_actuation<double>({3.0, 3.0}, p);
    EXPECT_EQ(tau, Eigen::Vector2d(3.0, 0.0));
}

TEST(Actuation, AcrobotZeroesShoulderAndClamps) {
    auto p = acrobot_params<double>();
    p.tau_max = 6.0;
    EXPECT_EQ(apply_actuation<double>({-9.0, 9.0}, p), Eigen::Vector2d(0.0, 6.0));
    EXPECT_EQ(apply_actuation<double>({-9.0, -9.0}, p), Eigen::Vector2d(0.0, -6.0));
}

TEST(Actuation, ZeroIsFixedAndProjectionIdempotent) {
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (const auto& p : {pendubot_params<double>(), acrobot_params<double>()}) {
        EXPECT_EQ(apply_actuation<double>({0.0, 0.0}, p), Eigen::Vector2d::Zero());
        for (int i = 0; i < 100; ++i) {
            const Eigen::Vector2d once = apply_actuation<double>({u(rng), u(rng)}, p);
            EXPECT_EQ(apply_actuation<double>(once, p), once);
        }
    }
}

TEST(Upright, GoalHangingAndSpinning) {
    const GoalSpec goal;
    const ModelParamsd p;
    EXPECT_TRUE(is_upright(goal.x_goal, goal, p));
    EXPECT_FALSE(is_upright(Stated(0, 0, 0, 0), goal, p));
    EXPECT_FALSE(is_upright(Stated(M_PI, 0, 10, 0), goal, p));
    EXPECT_TRUE(is_upright(Stated(M_PI, 0, 9.99, 0), goal, p));
}

TEST(Upright, InvariantUnderFullTurns) {
    const GoalSpec goal;
    const ModelParamsd p;
    std::mt19937_64 rng(19);
    for (int i = 0; i < 500; ++i) {
        const Stated s = oracle::random_state(rng, 12.0);
        const Stated turned(s.q(0) + 2 * M_PI, s.q(1), s.v(0), s.v(1));
        const Stated back(s.q(0) - 4 * M_PI, s.q(1) + 2 * M_PI, s.v(0), s.v(1));
        EXPECT_EQ(is_upright(s, goal, p), is_upright(turned, goal, p));
        EXPECT_EQ(is_upright(s, goal, p), is_upright(back, goal, p));
    }
}

TEST(WrapAngle, RangeAndRepresentative) {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> x(-100.0, 100.0);
    for (int i = 0; i < 10000; ++i) {
        const double a = x(rng);
        const double w = wrap_angle(a);
        ASSERT_GT(w, -M_PI);
        ASSERT_LE(w, M_PI);
        ASSERT_NEAR(std::remainder(a - w, 2 * M_PI), 0.0, 1e-12);
    }
    EXPECT_EQ(wrap_angle(M_PI), M_PI);
    EXPECT_EQ(wrap_angle(0.25), 0.25);
}

TEST(WrapAngle, LanesAgreeWithScalar) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> x(-40.0, 40.0);
    for (int i = 0; i < 1000; ++i) {
        Eigen::Array<double, 8, 1> a;
        for (int j = 0; j < 8; ++j) a(j) = j % 3 ? x(rng) : 0.1 * x(rng);
        const Eigen::Array<double, 8, 1> w = wrap_angle_lanes(a);
        for (int j = 0; j < 8; ++j) ASSERT_EQ(w(j), wrap_angle(a(j)));
    }
}

TEST(StateError, WrapsAnglesOnly) {
    const Stated goal(M_PI, 0, 0, 0);
    const Eigen::Vector4d e = state_error(Stated(3 * M_PI + 0.1, -2 * M_PI, 1.0, -2.0), goal);
    EXPECT_NEAR(e(0), 0.1, 1e-12);
    EXPECT_NEAR(e(1), 0.0, 1e-12);
    EXPECT_EQ(e(2), 1.0);
    EXPECT_EQ(e(3), -2.0);
}

TEST(ModelParams, ValidationRejectsUnphysicalValues) {
    EXPECT_NO_THROW(validate(ModelParamsd{}));
    auto p = ModelParamsd{};
    p.m1 = 0.0;
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = ModelParamsd{};
    p.r2 = p.l2 * 1.01;
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = ModelParamsd{};
    p.I2 = 0.0;
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = ModelParamsd{};
    p.b1 = -1e-3;
    EXPECT_THROW(validate(p), std::invalid_argument);
}

TEST(ModelParams, RobotsDifferOnlyInActuation) {
    const auto pend = pendubot_params<double>();
    const auto acro = acrobot_params<double>();
    EXPECT_EQ(pend.actuation_mask, (std::array<bool, 2>{true, false}));
    EXPECT_EQ(acro.actuation_mask, (std::array<bool, 2>{false, true}));
    EXPECT_EQ(pend.m2, acro.m2);
    EXPECT_EQ(pend.I2, acro.I2);
}

}  // namespace
}  // namespace vimppi
