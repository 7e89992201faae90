//! Extended inverse dynamics, mass matrix and its inverse, forward dynamics.
//!
//! The extended inverse dynamics treats the base as actuated by a fictitious
//! wrench `τ̄_b`, which makes inverse dynamics defined for any accelerations:
//!
//! ```text
//! ID̄(H, s, v, r, v̇, ṙ) = [τ̄_b; τ] = M(s)·[v̇; ṙ] + h(H, s, v, r)
//! ```
//!
//! Accelerations are consistent when `τ̄_b = 0`.

use std::cell::Cell;

use nalgebra::{Cholesky, DMatrix, DVector, Matrix6, Matrix6xX, Vector6};

use crate::error::{Error, Result};
use crate::model::{jcalc, MultibodyModel, SystemState};
use crate::spatial::{
    cross_force, cross_motion, velocity_transform, ForceVector, MotionVector, Pose,
};

/// `[0, 0, −9.81, 0, 0, 0]` in the inertial frame.
pub fn default_gravity() -> MotionVector {
    MotionVector::new(0.0, 0.0, -9.81, 0.0, 0.0, 0.0)
}

/// Every intermediate of one extended inverse dynamics sweep.
///
/// Per-body arrays are indexed `0..=n_B`; entry 0 of joint quantities
/// (`x_up`, `gamma`, `v_joint`) is unused and holds identity or zero.
#[derive(Debug, Clone)]
pub struct DynamicsWorkspace {
    /// `⁰H_A`.
    pub base_pose_inv: Pose,
    /// `⁰X_A`.
    pub x_base: Matrix6<f64>,
    /// `ᴬv_{A,0}`, the base twist expressed in the inertial frame.
    pub world_twist: MotionVector,
    /// `ᴬa_grav`.
    pub gravity: MotionVector,
    /// `⁰a_{A,0}`.
    pub base_acc: MotionVector,
    pub joint_pos: DVector<f64>,
    pub joint_acc: DVector<f64>,
    /// `ⁱX_{λ(i)|i}`.
    pub x_joint: Vec<Matrix6<f64>>,
    /// `ⁱX_{λ(i)}`.
    pub x_up: Vec<Matrix6<f64>>,
    pub gamma: Vec<MotionVector>,
    pub v: Vec<MotionVector>,
    pub v_joint: Vec<MotionVector>,
    pub a_r: Vec<MotionVector>,
    pub a_vp: Vec<MotionVector>,
    /// `ⁱa_{A,0}`.
    pub a_base: Vec<MotionVector>,
    pub momentum: Vec<ForceVector>,
    /// Composite inertias after the backward sweep.
    pub mc: Vec<Matrix6<f64>>,
    pub bc: Vec<ForceVector>,
    pub bvp: Vec<ForceVector>,
    /// `₀F`, one column per joint.
    pub f0: Matrix6xX<f64>,
}

/// `[τ̄_b; τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTorque {
    pub base_wrench: ForceVector,
    pub joint_torques: DVector<f64>,
}

impl ExtendedTorque {
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.joint_torques.len();
        let mut out = DVector::zeros(6 + n);
        out.rows_mut(0, 6).copy_from(&self.base_wrench);
        out.rows_mut(6, n).copy_from(&self.joint_torques);
        out
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}

/// Kinematic and composite sweeps, everything up to the torque loop.
fn sweep(
    model: &MultibodyModel,
    state: &SystemState,
    joint_acc: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<DynamicsWorkspace> {
    state.check(model)?;
    let nb = model.n_bodies();
    check_len("joint accelerations", nb, joint_acc.len())?;

    let base_pose_inv = state.base_pose.inverse();
    let x_base = velocity_transform(&base_pose_inv);
    let world_twist = velocity_transform(&state.base_pose) * state.base_twist;

    let zero = Vector6::zeros();
    let mut x_joint = vec![Matrix6::identity(); nb + 1];
    let mut x_up = vec![Matrix6::identity(); nb + 1];
    let mut gamma = vec![zero; nb + 1];
    let mut v = vec![zero; nb + 1];
    let mut v_joint = vec![zero; nb + 1];
    let mut a_r = vec![zero; nb + 1];
    let mut a_vp = vec![zero; nb + 1];
    let mut momentum = vec![zero; nb + 1];
    let mut mc = model.inertias().to_vec();
    let mut bc = vec![zero; nb + 1];
    let mut bvp = vec![zero; nb + 1];

    v[0] = x_base * world_twist;
    a_r[0] = x_base * gravity;
    a_vp[0] = a_r[0];
    let m0 = model.inertia(0);
    momentum[0] = m0 * v[0];
    bc[0] = m0 * a_r[0] + cross_force(&v[0]) * momentum[0];
    bvp[0] = bc[0];

    for i in 1..=nb {
        let p = model.parent(i);
        let (xj, g) = jcalc(model.joint(i), state.joint_pos[i - 1]);
        x_joint[i] = xj;
        gamma[i] = g;
        v_joint[i] = g * state.joint_vel[i - 1];
        x_up[i] = xj * model.fixed_velocity_transform(i);
        v[i] = x_up[i] * v[p] + v_joint[i];
        let vxvj = cross_motion(&v[i]) * v_joint[i];
        a_r[i] = x_up[i] * a_r[p] + g * joint_acc[i - 1] + vxvj;
        a_vp[i] = x_up[i] * a_vp[p] + vxvj;
        let mi = model.inertia(i);
        momentum[i] = mi * v[i];
        let vxm = cross_force(&v[i]) * momentum[i];
        bc[i] = mi * a_r[i] + vxm;
        bvp[i] = mi * a_vp[i] + vxm;
    }

    for i in (1..=nb).rev() {
        let p = model.parent(i);
        let xt = x_up[i].transpose();
        let (mci, bci, bvpi) = (mc[i], bc[i], bvp[i]);
        mc[p] += xt * mci * x_up[i];
        bc[p] += xt * bci;
        bvp[p] += xt * bvpi;
    }

    Ok(DynamicsWorkspace {
        base_pose_inv,
        x_base,
        world_twist,
        gravity: *gravity,
        base_acc: zero,
        joint_pos: state.joint_pos.clone(),
        joint_acc: joint_acc.clone(),
        x_joint,
        x_up,
        gamma,
        v,
        v_joint,
        a_r,
        a_vp,
        a_base: vec![zero; nb + 1],
        momentum,
        mc,
        bc,
        bvp,
        f0: Matrix6xX::zeros(nb),
    })
}

/// Torque loop and base line, given the base acceleration.
fn finish(
    model: &MultibodyModel,
    mut ws: DynamicsWorkspace,
    base_acc: &MotionVector,
) -> (ExtendedTorque, DynamicsWorkspace) {
    let nb = model.n_bodies();
    ws.base_acc = *base_acc;
    ws.a_base[0] = *base_acc;
    let mut tau = DVector::zeros(nb);
    for i in 1..=nb {
        let p = model.parent(i);
        ws.a_base[i] = ws.x_up[i] * ws.a_base[p];
        tau[i - 1] = ws.gamma[i].dot(&(ws.mc[i] * ws.a_base[i] + ws.bc[i]));
        let mut f = ws.mc[i] * ws.gamma[i];
        let mut j = i;
        while model.parent(j) > 0 {
            f = ws.x_up[j].transpose() * f;
            j = model.parent(j);
        }
        ws.f0.set_column(i - 1, &(ws.x_up[j].transpose() * f));
    }
    let base_wrench = ws.mc[0] * base_acc + &ws.f0 * &ws.joint_acc + ws.bvp[0];
    (
        ExtendedTorque {
            base_wrench,
            joint_torques: tau,
        },
        ws,
    )
}

/// Extended inverse dynamics with all intermediates.
///
/// `base_acc` is `⁰a_{A,0}` in the base frame, `gravity` is `ᴬa_grav` in the
/// inertial frame and enters the base acceleration term with a plus sign.
pub fn eidamb(
    model: &MultibodyModel,
    state: &SystemState,
    base_acc: &MotionVector,
    joint_acc: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<(ExtendedTorque, DynamicsWorkspace)> {
    let ws = sweep(model, state, joint_acc, gravity)?;
    Ok(finish(model, ws, base_acc))
}

/// Same as [`eidamb`] with the base acceleration chosen so that `τ̄_b = 0`.
pub fn eidamb_consistent(
    model: &MultibodyModel,
    state: &SystemState,
    joint_acc: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<(ExtendedTorque, DynamicsWorkspace)> {
    let ws = sweep(model, state, joint_acc, gravity)?;
    let a0 = consistent_base_acceleration(&ws)?;
    Ok(finish(model, ws, &a0))
}

/// `a₀ = −(𝕄^c_0)⁻¹ b^c_0`.
pub fn consistent_base_acceleration(ws: &DynamicsWorkspace) -> Result<MotionVector> {
    let chol = Cholesky::new(ws.mc[0]).ok_or_else(|| {
        Error::SingularInertia("composite inertia of the base is not positive definite".into())
    })?;
    Ok(-chol.solve(&ws.bc[0]))
}

/// Stacked `[τ̄_b; τ]`.
pub fn inverse_dynamics(
    model: &MultibodyModel,
    state: &SystemState,
    base_acc: &MotionVector,
    joint_acc: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<DVector<f64>> {
    Ok(eidamb(model, state, base_acc, joint_acc, gravity)?
        .0
        .stacked())
}

/// `h = ID̄(H, s, v, r, 0, 0)`.
pub fn bias_vector(
    model: &MultibodyModel,
    state: &SystemState,
    gravity: &MotionVector,
) -> Result<DVector<f64>> {
    let nj = model.n_joints();
    inverse_dynamics(
        model,
        state,
        &Vector6::zeros(),
        &DVector::zeros(nj),
        gravity,
    )
}

/// Mass matrix from unit-acceleration inverse dynamics columns.
pub fn mass_matrix(model: &MultibodyModel, s: &DVector<f64>) -> Result<DMatrix<f64>> {
    let nj = model.n_joints();
    let n = model.n_dof();
    let mut state = SystemState::zero(nj);
    check_len("joint positions", nj, s.len())?;
    state.joint_pos = s.clone();
    let g = Vector6::zeros();
    let id = |a0: &MotionVector, rdd: &DVector<f64>| -> Result<DVector<f64>> {
        let ws = sweep(model, &state, rdd, &g)?;
        Ok(finish(model, ws, a0).0.stacked())
    };
    let base = id(&Vector6::zeros(), &DVector::zeros(nj))?;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut a0 = Vector6::zeros();
        let mut rdd = DVector::zeros(nj);
        if j < 6 {
            a0[j] = 1.0;
        } else {
            rdd[j - 6] = 1.0;
        }
        m.set_column(j, &(id(&a0, &rdd)? - &base));
    }
    Ok(m)
}

thread_local! {
    static IMMAMB_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`immamb`] evaluations on the current thread.
pub fn immamb_call_count() -> u64 {
    IMMAMB_CALLS.with(Cell::get)
}

/// Inverse mass matrix by articulated-body recursion.
pub fn immamb(model: &MultibodyModel, s: &DVector<f64>) -> Result<DMatrix<f64>> {
    IMMAMB_CALLS.with(|c| c.set(c.get() + 1));
    let nb = model.n_bodies();
    check_len("joint positions", nb, s.len())?;
    let n = 6 + nb;

    let mut x_up = vec![Matrix6::identity(); nb + 1];
    let mut gamma = vec![Vector6::zeros(); nb + 1];
    for i in 1..=nb {
        let (xj, g) = jcalc(model.joint(i), s[i - 1]);
        x_up[i] = xj * model.fixed_velocity_transform(i);
        gamma[i] = g;
    }
    let mut ma = model.inertias().to_vec();
    let mut u = vec![Vector6::zeros(); nb + 1];
    let mut d = vec![0.0; nb + 1];
    // Column j − 1 of each wrench set belongs to joint j.
    let mut fset = vec![Matrix6xX::<f64>::zeros(nb); nb + 1];
    let mut minv = DMatrix::zeros(n, n);

    for i in (1..=nb).rev() {
        let p = model.parent(i);
        let row = 5 + i;
        u[i] = ma[i] * gamma[i];
        d[i] = gamma[i].dot(&u[i]);
        if d[i].is_nan() || d[i] <= 0.0 {
            return Err(Error::SingularInertia(format!(
                "articulated inertia of joint {i} has D = {:e}",
                d[i]
            )));
        }
        let dinv = 1.0 / d[i];
        minv[(row, row)] = dinv;
        let sub = model.subtree(i);
        for &j in &sub {
            minv[(row, 5 + j)] -= dinv * gamma[i].dot(&fset[i].column(j - 1));
        }
        let xt = x_up[i].transpose();
        for &j in &sub {
            let col = xt * (fset[i].column(j - 1) + u[i] * minv[(row, 5 + j)]);
            let mut target = fset[p].column_mut(j - 1);
            target += col;
        }
        let m_app = ma[i] - u[i] * u[i].transpose() * dinv;
        ma[p] += xt * m_app * x_up[i];
    }

    let chol = Cholesky::new(ma[0]).ok_or_else(|| {
        Error::SingularInertia("articulated inertia of the base is not positive definite".into())
    })?;
    let ma0_inv = chol.inverse();
    let mut pset = vec![Matrix6xX::<f64>::zeros(nb); nb + 1];
    pset[0] = -(ma0_inv * &fset[0]);

    for i in 1..=nb {
        let p = model.parent(i);
        let row = 5 + i;
        let dinv = 1.0 / d[i];
        let ut_x = u[i].transpose() * x_up[i];
        for j in i..=nb {
            minv[(row, 5 + j)] -= dinv * (ut_x * pset[p].column(j - 1))[0];
        }
        for j in i..=nb {
            let col = gamma[i] * minv[(row, 5 + j)] + x_up[i] * pset[p].column(j - 1);
            pset[i].set_column(j - 1, &col);
        }
    }

    minv.view_mut((0, 6), (6, nb)).copy_from(&pset[0]);
    minv.view_mut((6, 0), (nb, 6))
        .copy_from(&pset[0].transpose());
    for i in 1..=nb {
        for j in i + 1..=nb {
            minv[(5 + j, 5 + i)] = minv[(5 + i, 5 + j)];
        }
    }
    minv.view_mut((0, 0), (6, 6)).copy_from(&ma0_inv);
    Ok(minv)
}

/// `M⁻¹(Sτ − h)` from a precomputed inverse mass matrix and bias vector.
pub fn forward_dynamics_with(
    minv: &DMatrix<f64>,
    bias: &DVector<f64>,
    tau: &DVector<f64>,
) -> (MotionVector, DVector<f64>) {
    let n = bias.len();
    let mut rhs = -bias;
    {
        let mut joint = rhs.rows_mut(6, n - 6);
        joint += tau;
    }
    let acc = minv * rhs;
    (
        Vector6::from_iterator(acc.rows(0, 6).iter().copied()),
        acc.rows(6, n - 6).into_owned(),
    )
}

/// Base and joint accelerations `(v̇, ṙ)` under joint torques `tau`.
pub fn forward_dynamics(
    model: &MultibodyModel,
    state: &SystemState,
    tau: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<(MotionVector, DVector<f64>)> {
    check_len("joint torques", model.n_joints(), tau.len())?;
    let minv = immamb(model, &state.joint_pos)?;
    let h = bias_vector(model, state, gravity)?;
    Ok(forward_dynamics_with(&minv, &h, tau))
}
