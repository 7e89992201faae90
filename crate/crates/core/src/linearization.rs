//! State and input matrices of the dynamics linearized on the Lie algebra.
//!
//! Rows and columns follow `z = [z_H; z_s; z_v; z_r]`, with `z_H` the
//! left-trivialized pose perturbation and `v` the base twist in body frame.

use nalgebra::{DMatrix, DVector};

use crate::derivatives::{id_jacobians, IdJacobians};
use crate::dynamics::{bias_vector, eidamb, forward_dynamics_with, immamb};
use crate::error::Result;
use crate::model::{MultibodyModel, SystemState};
use crate::spatial::{cross_motion, MotionVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationMatrices {
    /// `2n × 2n`.
    pub a: DMatrix<f64>,
    /// `2n × n_J`.
    pub b: DMatrix<f64>,
}

fn input_matrix_from(minv: &DMatrix<f64>, nj: usize) -> DMatrix<f64> {
    let n = 6 + nj;
    let mut b = DMatrix::zeros(2 * n, nj);
    b.view_mut((n, 0), (n, nj)).copy_from(&minv.columns(6, nj));
    b
}

fn state_matrix_from(
    minv: &DMatrix<f64>,
    jac: &IdJacobians,
    base_twist: &MotionVector,
    nj: usize,
) -> DMatrix<f64> {
    let n = 6 + nj;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (6, 6))
        .copy_from(&(-cross_motion(base_twist)));
    a.view_mut((0, n), (6, 6)).fill_with_identity();
    a.view_mut((6, n + 6), (nj, nj)).fill_with_identity();
    a.view_mut((n, 0), (n, 2 * n))
        .copy_from(&(-(minv * jac.stacked())));
    a
}

/// `B = [0; 0; M⁻¹S]`.
pub fn input_matrix(model: &MultibodyModel, s: &DVector<f64>) -> Result<DMatrix<f64>> {
    let minv = immamb(model, s)?;
    Ok(input_matrix_from(&minv, model.n_joints()))
}

/// `A` at a state with the given accelerations, which should be the forward
/// dynamics solution so that the base wrench vanishes.
pub fn state_matrix(
    model: &MultibodyModel,
    state: &SystemState,
    base_acc: &MotionVector,
    joint_acc: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<DMatrix<f64>> {
    state.check(model)?;
    let (_, ws) = eidamb(model, state, base_acc, joint_acc, gravity)?;
    let minv = immamb(model, &state.joint_pos)?;
    let jac = id_jacobians(model, &ws);
    Ok(state_matrix_from(
        &minv,
        &jac,
        &state.base_twist,
        model.n_joints(),
    ))
}

/// Linearizes the forward dynamics under joint torques `tau`.
///
/// Accelerations are recomputed from `tau`. The inverse mass matrix is
/// evaluated once and shared by `A`, `B` and the forward dynamics.
pub fn linearize(
    model: &MultibodyModel,
    state: &SystemState,
    tau: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<LinearizationMatrices> {
    state.check(model)?;
    let nj = model.n_joints();
    crate::dynamics::check_len("joint torques", nj, tau.len())?;
    let minv = immamb(model, &state.joint_pos)?;
    let h = bias_vector(model, state, gravity)?;
    let (a0, rdd) = forward_dynamics_with(&minv, &h, tau);
    let (_, ws) = eidamb(model, state, &a0, &rdd, gravity)?;
    let jac = id_jacobians(model, &ws);
    Ok(LinearizationMatrices {
        a: state_matrix_from(&minv, &jac, &state.base_twist, nj),
        b: input_matrix_from(&minv, nj),
    })
}
