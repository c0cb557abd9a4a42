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


#ifndef VIMPPI_INTEGRATORS_HPP
#define VIMPPI_INTEGRATORS_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vimppi/errors.hpp"
#include "vimppi/model.hpp"

namespace vimppi {

enum class StepperKind { ExplicitEuler, SemiImplicit, ImplicitMidpoint, RK4, Variational };

/// Accepts the short names "e", "if", "i", "vi" and "rk4".
StepperKind parse_stepper(std::string_view name);
std::string stepper_name(StepperKind kind);
/// Controller label used in summaries, e.g. "VIMPPI" or "EMPPI".
std::string stepper_label(StepperKind kind);

/// Configuration of the midpoint discrete Lagrangian and its Newton solve.
template <typename Scalar>
struct DiscreteLagrangianCtx {
    Scalar dt{0.02};
    ModelParams<Scalar> params{};
    int newton_iters{2};
    Scalar newton_tol{1e-9};
};

namespace detail {

/// sin and cos of an increment |d| <= 0.1; Taylor terms through d^10 are below one ulp there.
template <typename T>
void small_angle_sincos(const T& d, T& sd, T& cd) {
    const T d2 = d * d;
    sd = d * (1.0 + d2 * (-1.0 / 6 + d2 * (1.0 / 120 + d2 * (-1.0 / 5040 + d2 * (1.0 / 362880)))));
    cd = 1.0 + d2 * (-0.5 + d2 * (1.0 / 24 + d2 * (-1.0 / 720 + d2 * (1.0 / 40320 - d2 * (1.0 / 3628800)))));
}

/// sin and cos of both joint angles of a configuration.
template <typename Scalar>
struct AngleTrig {
    Vector2<Scalar> angles;
    Vector2<Scalar> sines;
    Vector2<Scalar> cosines;

    static AngleTrig at(const Vector2<Scalar>& q) {
        using std::cos;
        using std::sin;
        return {q, {sin(q(0)), sin(q(1))}, {cos(q(0)), cos(q(1))}};
    }

    /// Trig at q by angle addition from this point; falls back to sin/cos for large shifts.
    AngleTrig moved_to(const Vector2<Scalar>& q) const {
        using std::abs;
        using std::cos;
        using std::sin;
        AngleTrig out{q, {}, {}};
        for (int i = 0; i < 2; ++i) {
            const Scalar d = q(i) - angles(i);
            if (abs(d) > Scalar(0.1)) {
                out.sines(i) = sin(q(i));
                out.cosines(i) = cos(q(i));
                continue;
            }
            Scalar sd, cd;
            small_angle_sincos(d, sd, cd);
            out.sines(i) = sines(i) * cd + cosines(i) * sd;
            out.cosines(i) = cosines(i) * cd - sines(i) * sd;
        }
        return out;
    }
};

template <typename Scalar>
Matrix2<Scalar> mass_matrix_from_cos(Scalar c2, const ModelParams<Scalar>& p) {
    const Scalar h = p.m2 * p.l1 * p.r2;
    Matrix2<Scalar> M;
    M(0, 0) = p.I1 + p.I2 + p.m2 * p.l1 * p.l1 + 2 * h * c2;
    M(0, 1) = p.I2 + h * c2;
    M(1, 0) = M(0, 1);
    M(1, 1) = p.I2;
    return M;
}

/// Everything the momentum-matching step needs at one (q_n, q_{n+1}) pair.
template <typename Scalar>
struct DiscreteLagrangianTerms {
    AngleTrig<Scalar> trig;      // at the midpoint
    Matrix2<Scalar> mass;        // M(q_mid)
    Vector2<Scalar> d1;          // D1 L_d
    Vector2<Scalar> d2;          // D2 L_d
    Matrix2<Scalar> d12;         // d(D1 L_d)/d q_{n+1}
};

template <typename Scalar>
DiscreteLagrangianTerms<Scalar> discrete_lagrangian_terms(const Vector2<Scalar>& q0,
                                                          const Vector2<Scalar>& q1,
                                                          const DiscreteLagrangianCtx<Scalar>& ctx,
                                                          bool with_hessian,
                                                          const AngleTrig<Scalar>* near = nullptr,
                                                          bool near_is_midpoint = false) {
    const auto& p = ctx.params;
    const Scalar dt = ctx.dt;
    const Vector2<Scalar> qm = Scalar(0.5) * (q0 + q1);
    const Scalar w1 = (q1(0) - q0(0)) / dt;
    const Scalar w2 = (q1(1) - q0(1)) / dt;

    DiscreteLagrangianTerms<Scalar> out;
    if (near_is_midpoint) {
        out.trig = *near;
    } else {
        out.trig = near ? near->moved_to(qm) : AngleTrig<Scalar>::at(qm);
    }
    const Scalar s1 = out.trig.sines(0), c1 = out.trig.cosines(0);
    const Scalar s2 = out.trig.sines(1), c2 = out.trig.cosines(1);
    const Scalar s12 = s1 * c2 + c1 * s2;
    const Scalar c12 = c1 * c2 - s1 * s2;

    const Scalar h = p.m2 * p.l1 * p.r2;
    const Scalar a = p.m1 * p.r1 + p.m2 * p.l1;
    const Scalar e = p.m2 * p.r2;

    const Scalar m11 = p.I1 + p.I2 + p.m2 * p.l1 * p.l1 + 2 * h * c2;
    const Scalar m12 = p.I2 + h * c2;
    const Scalar m22 = p.I2;
    out.mass << m11, m12, m12, m22;

    // dM/dq2 applied to the midpoint velocity; M does not depend on q1.
    const Scalar hs2 = h * s2;
    const Scalar dMv1 = -hs2 * (2 * w1 + w2);
    const Scalar dMv2 = -hs2 * w1;
    const Scalar kinetic_q2 = Scalar(0.5) * (w1 * dMv1 + w2 * dMv2);
    const Scalar gs12 = p.g * e * s12;
    const Scalar Lq1 = -p.g * a * s1 - gs12;
    const Scalar Lq2 = kinetic_q2 - gs12;
    const Scalar Mv1 = m11 * w1 + m12 * w2;
    const Scalar Mv2 = m12 * w1 + m22 * w2;
    const Scalar half_dt = Scalar(0.5) * dt;

    out.d1 << half_dt * Lq1 - Mv1, half_dt * Lq2 - Mv2;
    out.d2 << half_dt * Lq1 + Mv1, half_dt * Lq2 + Mv2;

    if (with_hessian) {
        // d12 = dt/4 L_qq + (N^T - N)/2 - M/dt with N(i, j) = (dM/dq_j v)_i.
        const Scalar gc12 = p.g * e * c12;
        const Scalar Lqq11 = -p.g * a * c1 - gc12;
        const Scalar Lqq12 = -gc12;
        const Scalar Lqq22 = -h * c2 * (w1 * w1 + w1 * w2) - gc12;
        const Scalar quarter_dt = Scalar(0.25) * dt;
        const Scalar skew = Scalar(0.5) * dMv1;  // (N^T - N)(1, 0) = N(0, 1)
        out.d12 << quarter_dt * Lqq11 - m11 / dt, quarter_dt * Lqq12 - skew - m12 / dt,
            quarter_dt * Lqq12 + skew - m12 / dt, quarter_dt * Lqq22 - m22 / dt;
    }
    return out;
}

}  // namespace detail

template <typename Scalar>
Scalar discrete_lagrangian(const Vector2<Scalar>& q_n, const Vector2<Scalar>& q_np1,
                           const DiscreteLagrangianCtx<Scalar>& ctx) {
    const State<Scalar> mid(Scalar(0.5) * (q_n + q_np1), (q_np1 - q_n) / ctx.dt);
    return continuous_lagrangian(mid, ctx.params) * ctx.dt;
}

template <typename Scalar>
Vector2<Scalar> d1_ld(const Vector2<Scalar>& q_n, const Vector2<Scalar>& q_np1,
                      const DiscreteLagrangianCtx<Scalar>& ctx) {
    return detail::discrete_lagrangian_terms(q_n, q_np1, ctx, false).d1;
}

template <typename Scalar>
Vector2<Scalar> d2_ld(const Vector2<Scalar>& q_n, const Vector2<Scalar>& q_np1,
                      const DiscreteLagrangianCtx<Scalar>& ctx) {
    return detail::discrete_lagrangian_terms(q_n, q_np1, ctx, false).d2;
}

/// Mixed second derivative d/dq_{n+1} (D1 L_d), the conservative Newton matrix.
template <typename Scalar>
Matrix2<Scalar> d12_ld(const Vector2<Scalar>& q_n, const Vector2<Scalar>& q_np1,
                       const DiscreteLagrangianCtx<Scalar>& ctx) {
    return detail::discrete_lagrangian_terms(q_n, q_np1, ctx, true).d12;
}

/// Result of one variational step together with its momentum residual history.
template <typename Scalar>
struct VariationalStepResult {
    State<Scalar> next;
    /// Residual norm at the Euler guess (index 0) and after each correction.
    std::vector<Scalar> residuals;
};

/**
 * @brief Variational integrator that carries its state between steps.
 *
 * Keeps the discrete momentum and the joint-angle trig of the current
 * configuration so consecutive steps reuse them; trig is refreshed with
 * sin/cos every few dozen steps and whenever an angle moves more than 0.1
 * rad. vi_step() is a single advance() from a fresh reset().
 */
template <typename Scalar>
class VariationalStepper {
public:
    explicit VariationalStepper(const DiscreteLagrangianCtx<Scalar>& ctx) : ctx_(ctx) {}

    const DiscreteLagrangianCtx<Scalar>& context() const { return ctx_; }
    const State<Scalar>& state() const { return state_; }

    void reset(const State<Scalar>& s) {
        state_ = s;
        trig_ = detail::AngleTrig<Scalar>::at(s.q);
        momentum_ = detail::mass_matrix_from_cos(trig_.cosines(1), ctx_.params) * s.v;
        steps_since_anchor_ = 0;
    }

    /**
     * Advances one step under the held torque tau. When `residuals` is given it
     * receives the momentum residual norm at the Euler guess and after every
     * correction.
     */
    const State<Scalar>& advance(const Vector2<Scalar>& tau, std::vector<Scalar>* residuals = nullptr) {
        using std::abs;
        const auto& p = ctx_.params;
        const Scalar dt = ctx_.dt;
        const Scalar half_dt = Scalar(0.5) * dt;
        const Vector2<Scalar> b = p.damping();
        const Vector2<Scalar>& q0 = state_.q;

        if (++steps_since_anchor_ > kAnchorInterval) {
            trig_ = detail::AngleTrig<Scalar>::at(q0);
            steps_since_anchor_ = 0;
        }

        // Trapezoidal forcing with damping evaluated at the discrete velocity.
        auto forcing = [&](const Vector2<Scalar>& q1) -> Vector2<Scalar> {
            return half_dt * (tau - b.cwiseProduct((q1 - q0) / dt));
        };

        Vector2<Scalar> q1 = q0 + dt * state_.v;
        const detail::AngleTrig<Scalar> guess = trig_.moved_to(Scalar(0.5) * (q0 + q1));
        auto terms = detail::discrete_lagrangian_terms(q0, q1, ctx_, true, &guess, true);
        Vector2<Scalar> r = momentum_ + terms.d1 + forcing(q1);
        Scalar rnorm = r.norm();
        if (residuals) residuals->push_back(rnorm);

        for (int it = 0; it < ctx_.newton_iters && rnorm > ctx_.newton_tol; ++it) {
            Matrix2<Scalar> A = terms.d12;
            A.diagonal() -= Scalar(0.5) * b;
            const Scalar det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
            const Scalar scale = A.cwiseAbs().maxCoeff();
            if (!(abs(det) > Scalar(1e-12) * scale * scale)) {
                throw SingularCorrectionMatrix("variational step: singular Newton matrix");
            }
            q1(0) -= (A(1, 1) * r(0) - A(0, 1) * r(1)) / det;
            q1(1) -= (A(0, 0) * r(1) - A(1, 0) * r(0)) / det;
            const detail::AngleTrig<Scalar> previous = terms.trig;
            terms = detail::discrete_lagrangian_terms(q0, q1, ctx_, it + 1 < ctx_.newton_iters,
                                                      &previous);
            r = momentum_ + terms.d1 + forcing(q1);
            rnorm = r.norm();
            if (residuals) residuals->push_back(rnorm);
        }

        momentum_ = terms.d2 + forcing(q1);
        trig_ = terms.trig.moved_to(q1);
        const Matrix2<Scalar> M = detail::mass_matrix_from_cos(trig_.cosines(1), p);
        const Scalar det_m = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
        state_.q = q1;
        state_.v(0) = (M(1, 1) * momentum_(0) - M(0, 1) * momentum_(1)) / det_m;
        state_.v(1) = (M(0, 0) * momentum_(1) - M(1, 0) * momentum_(0)) / det_m;
        return state_;
    }

private:
    static constexpr int kAnchorInterval = 64;

    DiscreteLagrangianCtx<Scalar> ctx_;
    State<Scalar> state_{};
    Vector2<Scalar> momentum_ = Vector2<Scalar>::Zero();
    detail::AngleTrig<Scalar> trig_{};
    int steps_since_anchor_ = 0;
};

namespace detail {

/// Per-lane sin/cos of two angles, moved by angle addition like AngleTrig.
template <typename Scalar, int N>
struct LaneTrig {
    using Lane = Eigen::Array<Scalar, N, 1>;
    Lane a1, a2, s1, c1, s2, c2;

    static LaneTrig at(const Lane& t1, const Lane& t2) { return {t1, t2, t1.sin(), t1.cos(), t2.sin(), t2.cos()}; }

    void move_to(const Lane& t1, const Lane& t2, LaneTrig& to) const {
        using std::abs;
        using std::cos;
        using std::sin;
        const Lane d1 = t1 - a1;
        const Lane d2 = t2 - a2;
        Lane sd, cd;
        small_angle_sincos(d1, sd, cd);
        to.s1 = s1 * cd + c1 * sd;
        to.c1 = c1 * cd - s1 * sd;
        small_angle_sincos(d2, sd, cd);
        to.s2 = s2 * cd + c2 * sd;
        to.c2 = c2 * cd - s2 * sd;
        to.a1 = t1;
        to.a2 = t2;
        if (((d1.abs() > Scalar(0.1)) || (d2.abs() > Scalar(0.1))).any()) {
            for (int j = 0; j < N; ++j) {
                if (abs(d1(j)) > Scalar(0.1)) {
                    to.s1(j) = sin(t1(j));
                    to.c1(j) = cos(t1(j));
                }
                if (abs(d2(j)) > Scalar(0.1)) {
                    to.s2(j) = sin(t2(j));
                    to.c2(j) = cos(t2(j));
                }
            }
        }
    }
};

}  // namespace detail

/**
 * @brief N variational steppers advanced in lockstep.
 *
 * The scheme of VariationalStepper with every quantity held as an Eigen array
 * over lanes so the arithmetic vectorizes. Lanes never mix: each lane's
 * trajectory depends only on its own torques. A lane whose Newton matrix goes
 * singular is flagged in failed() instead of throwing.
 */
template <typename Scalar, int N>
class VariationalLanes {
public:
    using Lane = Eigen::Array<Scalar, N, 1>;
    using Mask = Eigen::Array<bool, N, 1>;

    explicit VariationalLanes(const DiscreteLagrangianCtx<Scalar>& ctx) : ctx_(ctx) {}

    /// Puts every lane at s.
    void reset(const State<Scalar>& s) {
        q1_.setConstant(s.q(0));
        q2_.setConstant(s.q(1));
        anchor();
        const Matrix2<Scalar> M = mass_matrix(s.q, ctx_.params);
        const Vector2<Scalar> p = M * s.v;
        v1_.setConstant(s.v(0));
        v2_.setConstant(s.v(1));
        p1_.setConstant(p(0));
        p2_.setConstant(p(1));
        failed_.setConstant(false);
        steps_since_anchor_ = 0;
    }

    void advance(const Lane& tau1, const Lane& tau2) {
        const auto& prm = ctx_.params;
        const Scalar dt = ctx_.dt;
        const Scalar half_dt = Scalar(0.5) * dt;
        const Scalar b1 = prm.b1;
        const Scalar b2 = prm.b2;

        if (++steps_since_anchor_ > kAnchorInterval) {
            anchor();
            steps_since_anchor_ = 0;
        }

        Lane g1 = q1_ + dt * v1_;
        Lane g2 = q2_ + dt * v2_;
        Trig mid;
        trig_.move_to(Scalar(0.5) * (q1_ + g1), Scalar(0.5) * (q2_ + g2), mid);
        Lane w1 = (g1 - q1_) / dt;
        Lane w2 = (g2 - q2_) / dt;
        Terms t;
        terms(mid, w1, w2, true, t);
        Lane r1 = p1_ + t.d1_1 + half_dt * (tau1 - b1 * w1);
        Lane r2 = p2_ + t.d1_2 + half_dt * (tau2 - b2 * w2);
        Mask active = (r1 * r1 + r2 * r2).sqrt() > ctx_.newton_tol;

        for (int it = 0; it < ctx_.newton_iters && active.any(); ++it) {
            const Lane a11 = t.a11 - Scalar(0.5) * b1;
            const Lane a22 = t.a22 - Scalar(0.5) * b2;
            const Lane det = a11 * a22 - t.a12 * t.a21;
            const Lane scale = a11.abs().max(t.a12.abs()).max(t.a21.abs()).max(a22.abs());
            failed_ = failed_ || (active && !(det.abs() > Scalar(1e-12) * scale * scale));
            g1 = active.select(g1 - (a22 * r1 - t.a12 * r2) / det, g1);
            g2 = active.select(g2 - (a11 * r2 - t.a21 * r1) / det, g2);
            const Trig previous = mid;
            previous.move_to(Scalar(0.5) * (q1_ + g1), Scalar(0.5) * (q2_ + g2), mid);
            w1 = (g1 - q1_) / dt;
            w2 = (g2 - q2_) / dt;
            terms(mid, w1, w2, it + 1 < ctx_.newton_iters, t);
            r1 = p1_ + t.d1_1 + half_dt * (tau1 - b1 * w1);
            r2 = p2_ + t.d1_2 + half_dt * (tau2 - b2 * w2);
            active = active && ((r1 * r1 + r2 * r2).sqrt() > ctx_.newton_tol);
        }

        p1_ = t.d2_1 + half_dt * (tau1 - b1 * w1);
        p2_ = t.d2_2 + half_dt * (tau2 - b2 * w2);
        const Trig previous = mid;
        previous.move_to(g1, g2, trig_);
        q1_ = g1;
        q2_ = g2;
        const Scalar h = prm.m2 * prm.l1 * prm.r2;
        const Lane m11 = (prm.I1 + prm.I2 + prm.m2 * prm.l1 * prm.l1) + 2 * h * trig_.c2;
        const Lane m12 = prm.I2 + h * trig_.c2;
        const Scalar m22 = prm.I2;
        const Lane det_m = m11 * m22 - m12 * m12;
        v1_ = (m22 * p1_ - m12 * p2_) / det_m;
        v2_ = (m11 * p2_ - m12 * p1_) / det_m;
    }

    const Lane& q1() const { return q1_; }
    const Lane& q2() const { return q2_; }
    const Lane& v1() const { return v1_; }
    const Lane& v2() const { return v2_; }
    const Mask& failed() const { return failed_; }

    State<Scalar> state(int lane) const { return {q1_(lane), q2_(lane), v1_(lane), v2_(lane)}; }

private:
    static constexpr int kAnchorInterval = 64;
    using Trig = detail::LaneTrig<Scalar, N>;

    struct Terms {
        Lane d1_1, d1_2, d2_1, d2_2;
        Lane a11, a12, a21, a22;  // D12 L_d
    };

    void anchor() { trig_ = Trig::at(q1_, q2_); }

    void terms(const Trig& m, const Lane& w1, const Lane& w2, bool with_hessian, Terms& out) const {
        const auto& p = ctx_.params;
        const Scalar dt = ctx_.dt;
        const Scalar h = p.m2 * p.l1 * p.r2;
        const Scalar a = p.m1 * p.r1 + p.m2 * p.l1;
        const Scalar ge = p.g * p.m2 * p.r2;
        const Lane s12 = m.s1 * m.c2 + m.c1 * m.s2;

        const Lane m11 = (p.I1 + p.I2 + p.m2 * p.l1 * p.l1) + 2 * h * m.c2;
        const Lane m12 = p.I2 + h * m.c2;
        const Scalar m22 = p.I2;

        const Lane hs2 = h * m.s2;
        const Lane dMv1 = -hs2 * (2 * w1 + w2);
        const Lane dMv2 = -hs2 * w1;
        const Lane kinetic_q2 = Scalar(0.5) * (w1 * dMv1 + w2 * dMv2);
        const Lane gs12 = ge * s12;
        const Lane Lq1 = -p.g * a * m.s1 - gs12;
        const Lane Lq2 = kinetic_q2 - gs12;
        const Lane Mv1 = m11 * w1 + m12 * w2;
        const Lane Mv2 = m12 * w1 + m22 * w2;
        const Scalar half_dt = Scalar(0.5) * dt;

        out.d1_1 = half_dt * Lq1 - Mv1;
        out.d1_2 = half_dt * Lq2 - Mv2;
        out.d2_1 = half_dt * Lq1 + Mv1;
        out.d2_2 = half_dt * Lq2 + Mv2;

        if (with_hessian) {
            const Lane gc12 = ge * (m.c1 * m.c2 - m.s1 * m.s2);
            const Scalar quarter_dt = Scalar(0.25) * dt;
            const Lane skew = Scalar(0.5) * dMv1;
            out.a11 = quarter_dt * (-p.g * a * m.c1 - gc12) - m11 / dt;
            out.a12 = quarter_dt * (-gc12) - skew - m12 / dt;
            out.a21 = quarter_dt * (-gc12) + skew - m12 / dt;
            out.a22 = quarter_dt * (-h * m.c2 * (w1 * w1 + w1 * w2) - gc12) - m22 / dt;
        }
    }

    DiscreteLagrangianCtx<Scalar> ctx_;
    Lane q1_ = Lane::Zero(), q2_ = Lane::Zero();
    Lane v1_ = Lane::Zero(), v2_ = Lane::Zero();
    Lane p1_ = Lane::Zero(), p2_ = Lane::Zero();
    Trig trig_{};
    Mask failed_ = Mask::Constant(false);
    int steps_since_anchor_ = 0;
};

/**
 * @brief One step of the midpoint variational integrator in momentum form.
 *
 * Starts from the explicit Euler guess q + v dt and corrects it with Newton
 * iterations on the forced discrete Euler-Lagrange residual
 *   M(q_n) v_n + D1 L_d(q_n, q_{n+1}) + dt/2 (tau - b (q_{n+1} - q_n) / dt) = 0.
 * The new velocity comes from the right discrete momentum. tau is held over
 * the step.
 */
template <typename Scalar>
State<Scalar> vi_step(const State<Scalar>& s, const Vector2<Scalar>& tau,
                      const DiscreteLagrangianCtx<Scalar>& ctx) {
    VariationalStepper<Scalar> stepper(ctx);
    stepper.reset(s);
    return stepper.advance(tau);
}

template <typename Scalar>
VariationalStepResult<Scalar> vi_step_with_report(const State<Scalar>& s,
                                                  const Vector2<Scalar>& tau,
                                                  const DiscreteLagrangianCtx<Scalar>& ctx) {
    VariationalStepResult<Scalar> out;
    out.residuals.reserve(static_cast<std::size_t>(ctx.newton_iters) + 1);
    VariationalStepper<Scalar> stepper(ctx);
    stepper.reset(s);
    out.next = stepper.advance(tau, &out.residuals);
    return out;
}

template <typename Scalar>
std::vector<Scalar> newton_residual_report(const State<Scalar>& s, const Vector2<Scalar>& tau,
                                           const DiscreteLagrangianCtx<Scalar>& ctx) {
    return vi_step_with_report(s, tau, ctx).residuals;
}

template <typename Scalar>
State<Scalar> rk4_step(const State<Scalar>& s, const Vector2<Scalar>& tau, Scalar dt,
                       const ModelParams<Scalar>& p) {
    auto deriv = [&](const State<Scalar>& x) {
        return State<Scalar>(x.v, forward_dynamics(x, tau, p));
    };
    auto advance = [](const State<Scalar>& x, const State<Scalar>& dx, Scalar h) {
        return State<Scalar>(x.q + h * dx.q, x.v + h * dx.v);
    };
    const State<Scalar> k1 = deriv(s);
    const State<Scalar> k2 = deriv(advance(s, k1, dt / 2));
    const State<Scalar> k3 = deriv(advance(s, k2, dt / 2));
    const State<Scalar> k4 = deriv(advance(s, k3, dt));
    return State<Scalar>(s.q + dt / 6 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q),
                         s.v + dt / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v));
}

namespace detail {

template <typename Scalar>
State<Scalar> implicit_midpoint_step(const State<Scalar>& s, const Vector2<Scalar>& tau,
                                     Scalar dt, const ModelParams<Scalar>& p) {
    using std::sqrt;
    constexpr int kMaxIters = 100;
    const Scalar tol = Scalar(1e-12);

    auto image = [&](const Vector4<Scalar>& x1) -> Vector4<Scalar> {
        const Vector4<Scalar> x0 = s.vector();
        const State<Scalar> mid = State<Scalar>::from_vector(Scalar(0.5) * (x0 + x1));
        Vector4<Scalar> f;
        f << mid.v, forward_dynamics(mid, tau, p);
        return x0 + dt * f;
    };

    Vector4<Scalar> x1 = image(s.vector());
    Scalar relaxation = 1;
    Scalar last_step = std::numeric_limits<Scalar>::infinity();
    for (int it = 0; it < kMaxIters; ++it) {
        const Vector4<Scalar> delta = image(x1) - x1;
        const Scalar step = delta.norm();
        if (!(step == step)) break;
        if (step <= tol * (1 + x1.norm())) return State<Scalar>::from_vector(x1 + delta);
        if (step > last_step) {
            // Damp the update until the map contracts.
            relaxation /= 2;
            if (relaxation < Scalar(1.0 / 16)) break;
        }
        last_step = step;
        x1 += relaxation * delta;
    }
    throw FixedPointDivergence("implicit midpoint: fixed-point iteration did not contract");
}

}  // namespace detail

/// One step of a non-variational scheme. RK4 is included for use as an oracle.
template <typename Scalar>
State<Scalar> classical_step(StepperKind kind, const State<Scalar>& s, const Vector2<Scalar>& tau,
                             Scalar dt, const ModelParams<Scalar>& p) {
    switch (kind) {
        case StepperKind::ExplicitEuler: {
            const Vector2<Scalar> acc = forward_dynamics(s, tau, p);
            return State<Scalar>(s.q + dt * s.v, s.v + dt * acc);
        }
        case StepperKind::SemiImplicit: {
            const Vector2<Scalar> v1 = s.v + dt * forward_dynamics(s, tau, p);
            return State<Scalar>(s.q + dt * v1, v1);
        }
        case StepperKind::ImplicitMidpoint:
            return detail::implicit_midpoint_step(s, tau, dt, p);
        case StepperKind::RK4:
            return rk4_step(s, tau, dt, p);
        case StepperKind::Variational:
            break;
    }
    throw std::invalid_argument("classical_step: use vi_step for the variational integrator");
}

/**
 * @brief N lanes of a non-variational scheme advanced in lockstep.
 *
 * Same arithmetic as classical_step() on Eigen arrays. The implicit midpoint
 * fixed point runs until every lane has converged or given up; a lane that
 * does not contract is flagged in failed() instead of throwing.
 */
template <typename Scalar, int N>
class ClassicalLanes {
public:
    using Lane = Eigen::Array<Scalar, N, 1>;
    using Mask = Eigen::Array<bool, N, 1>;

    ClassicalLanes(StepperKind kind, Scalar dt, const ModelParams<Scalar>& p) : kind_(kind), dt_(dt), p_(p) {
        if (kind == StepperKind::Variational) {
            throw std::invalid_argument("ClassicalLanes: use VariationalLanes for the variational integrator");
        }
    }

    void reset(const State<Scalar>& s) {
        x_.q1.setConstant(s.q(0));
        x_.q2.setConstant(s.q(1));
        x_.v1.setConstant(s.v(0));
        x_.v2.setConstant(s.v(1));
        trig_ = Trig::at(x_.q1, x_.q2);
        failed_.setConstant(false);
        steps_since_anchor_ = 0;
    }

    void advance(const Lane& tau1, const Lane& tau2) {
        const Scalar dt = dt_;
        if (++steps_since_anchor_ > kAnchorInterval) {
            trig_ = Trig::at(x_.q1, x_.q2);
            steps_since_anchor_ = 0;
        }
        switch (kind_) {
            case StepperKind::ExplicitEuler: {
                Lane a1, a2;
                accelerations(x_, trig_, tau1, tau2, a1, a2);
                x_.q1 += dt * x_.v1;
                x_.q2 += dt * x_.v2;
                x_.v1 += dt * a1;
                x_.v2 += dt * a2;
                break;
            }
            case StepperKind::SemiImplicit: {
                Lane a1, a2;
                accelerations(x_, trig_, tau1, tau2, a1, a2);
                x_.v1 += dt * a1;
                x_.v2 += dt * a2;
                x_.q1 += dt * x_.v1;
                x_.q2 += dt * x_.v2;
                break;
            }
            case StepperKind::RK4: {
                auto deriv = [&](const Lanes& x) {
                    Lanes d{x.v1, x.v2, Lane(), Lane()};
                    Trig t;
                    trig_.move_to(x.q1, x.q2, t);
                    accelerations(x, t, tau1, tau2, d.v1, d.v2);
                    return d;
                };
                const Lanes k1 = deriv(x_);
                const Lanes k2 = deriv(x_.plus(k1, dt / 2));
                const Lanes k3 = deriv(x_.plus(k2, dt / 2));
                const Lanes k4 = deriv(x_.plus(k3, dt));
                x_.q1 += dt / 6 * (k1.q1 + 2 * k2.q1 + 2 * k3.q1 + k4.q1);
                x_.q2 += dt / 6 * (k1.q2 + 2 * k2.q2 + 2 * k3.q2 + k4.q2);
                x_.v1 += dt / 6 * (k1.v1 + 2 * k2.v1 + 2 * k3.v1 + k4.v1);
                x_.v2 += dt / 6 * (k1.v2 + 2 * k2.v2 + 2 * k3.v2 + k4.v2);
                break;
            }
            case StepperKind::ImplicitMidpoint:
                implicit_midpoint(tau1, tau2);
                break;
            case StepperKind::Variational:
                break;
        }
        Trig next;
        trig_.move_to(x_.q1, x_.q2, next);
        trig_ = next;
    }

    const Lane& q1() const { return x_.q1; }
    const Lane& q2() const { return x_.q2; }
    const Lane& v1() const { return x_.v1; }
    const Lane& v2() const { return x_.v2; }
    const Mask& failed() const { return failed_; }

    State<Scalar> state(int lane) const { return {x_.q1(lane), x_.q2(lane), x_.v1(lane), x_.v2(lane)}; }

private:
    static constexpr int kAnchorInterval = 64;
    using Trig = detail::LaneTrig<Scalar, N>;

    struct Lanes {
        Lane q1, q2, v1, v2;

        Lanes plus(const Lanes& d, Scalar h) const {
            return {q1 + h * d.q1, q2 + h * d.q2, v1 + h * d.v1, v2 + h * d.v2};
        }
    };

    // forward_dynamics() per lane.
    void accelerations(const Lanes& x, const Trig& t, const Lane& tau1, const Lane& tau2, Lane& a1,
                       Lane& a2) const {
        const auto& p = p_;
        const Scalar h = p.m2 * p.l1 * p.r2;
        const Lane& s1 = t.s1;
        const Lane& s2 = t.s2;
        const Lane& c2 = t.c2;
        const Lane s12 = t.s1 * t.c2 + t.c1 * t.s2;
        const Lane m11 = (p.I1 + p.I2 + p.m2 * p.l1 * p.l1) + 2 * h * c2;
        const Lane m12 = p.I2 + h * c2;
        const Scalar m22 = p.I2;
        const Lane hs = h * s2;
        const Lane gs12 = p.g * p.m2 * p.r2 * s12;
        const Lane rhs1 = tau1 - p.b1 * x.v1 + hs * (2 * x.v1 * x.v2 + x.v2 * x.v2) -
                          p.g * (p.m1 * p.r1 + p.m2 * p.l1) * s1 - gs12;
        const Lane rhs2 = tau2 - p.b2 * x.v2 - hs * x.v1 * x.v1 - gs12;
        const Lane det = m11 * m22 - m12 * m12;
        a1 = (m22 * rhs1 - m12 * rhs2) / det;
        a2 = (m11 * rhs2 - m12 * rhs1) / det;
    }

    void implicit_midpoint(const Lane& tau1, const Lane& tau2) {
        constexpr int kMaxIters = 100;
        const Scalar tol = Scalar(1e-12);
        const Scalar dt = dt_;
        const Lanes x0 = x_;
        Trig near = trig_;
        auto image = [&](const Lanes& x1) {
            const Lanes mid{Scalar(0.5) * (x0.q1 + x1.q1), Scalar(0.5) * (x0.q2 + x1.q2),
                            Scalar(0.5) * (x0.v1 + x1.v1), Scalar(0.5) * (x0.v2 + x1.v2)};
            Lanes out{x0.q1 + dt * mid.v1, x0.q2 + dt * mid.v2, Lane(), Lane()};
            Trig t;
            near.move_to(mid.q1, mid.q2, t);
            near = t;
            Lane a1, a2;
            accelerations(mid, t, tau1, tau2, a1, a2);
            out.v1 = x0.v1 + dt * a1;
            out.v2 = x0.v2 + dt * a2;
            return out;
        };

        Lanes x1 = image(x0);
        Lane relaxation = Lane::Ones();
        Lane last_step = Lane::Constant(std::numeric_limits<Scalar>::infinity());
        Mask open = !failed_;
        Mask done = failed_;
        for (int it = 0; it < kMaxIters && open.any(); ++it) {
            const Lanes y = image(x1);
            const Lanes d{y.q1 - x1.q1, y.q2 - x1.q2, y.v1 - x1.v1, y.v2 - x1.v2};
            const Lane step = (d.q1.square() + d.q2.square() + d.v1.square() + d.v2.square()).sqrt();
            const Lane size = (x1.q1.square() + x1.q2.square() + x1.v1.square() + x1.v2.square()).sqrt();
            const Mask converged = open && step <= tol * (1 + size);
            const Mask nan = open && !(step == step);
            const Mask grew = open && !converged && step > last_step;
            relaxation = grew.select(relaxation / 2, relaxation);
            const Mask give_up = nan || (grew && relaxation < Scalar(1.0 / 16));
            // Converged lanes take the final full update, as in the scalar scheme.
            const Lane r = converged.select(Lane::Ones(), relaxation);
            const Mask move = converged || (open && !give_up);
            x1.q1 = move.select(x1.q1 + r * d.q1, x1.q1);
            x1.q2 = move.select(x1.q2 + r * d.q2, x1.q2);
            x1.v1 = move.select(x1.v1 + r * d.v1, x1.v1);
            x1.v2 = move.select(x1.v2 + r * d.v2, x1.v2);
            last_step = open.select(step, last_step);
            failed_ = failed_ || give_up;
            done = done || converged || give_up;
            open = !done;
        }
        failed_ = failed_ || open;
        x_ = x1;
    }

    StepperKind kind_;
    Scalar dt_;
    ModelParams<Scalar> p_;
    Lanes x_{Lane::Zero(), Lane::Zero(), Lane::Zero(), Lane::Zero()};
    Trig trig_ = Trig::at(Lane::Zero(), Lane::Zero());
    Mask failed_ = Mask::Constant(false);
    int steps_since_anchor_ = 0;
};

/// Uniform entry point over every stepper kind.
template <typename Scalar>
State<Scalar> step(StepperKind kind, const State<Scalar>& s, const Vector2<Scalar>& tau,
                   const DiscreteLagrangianCtx<Scalar>& ctx) {
    if (kind == StepperKind::Variational) return vi_step(s, tau, ctx);
    return classical_step(kind, s, tau, ctx.dt, ctx.params);
}

}  // namespace vimppi

#endif  // VIMPPI_INTEGRATORS_HPP
