//! Finite-difference oracle for the forward-dynamics derivatives and the
//! normalized error metrics used to compare it with the analytic result.
//!
//! The pose is perturbed on the right, `H·exp(δ e_i)`, which matches the
//! left-trivialized derivative. Joint positions and both velocities are
//! perturbed additively.

mod study;

pub use study::{
    parametric_study, run_validation, trial_seed, StudyConfig, Trial, TrialErrors, ValidationRun,
};

use nalgebra::{DMatrix, DVector, Vector6};

use crate::derivatives::{id_jacobians, IdJacobians};
use crate::dynamics::{bias_vector, eidamb, forward_dynamics, forward_dynamics_with, immamb};
use crate::error::{Error, Result};
use crate::model::{MultibodyModel, SystemState};
use crate::spatial::{se3_exp, MotionVector};

/// Block names in `[H, s, v, r]` order.
pub const BLOCK_NAMES: [&str; 4] = ["H", "s", "v", "r"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Forward,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub delta: f64,
    pub scheme: Scheme,
}

impl FdConfig {
    pub fn new(delta: f64, scheme: Scheme) -> Result<Self> {
        if delta > 0.0 && delta.is_finite() {
            Ok(Self { delta, scheme })
        } else {
            Err(Error::Config(format!(
                "perturbation must be positive and finite, got {delta}"
            )))
        }
    }
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            scheme: Scheme::Forward,
        }
    }
}

fn stacked_fd(
    model: &MultibodyModel,
    state: &SystemState,
    tau: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<DVector<f64>> {
    let (a0, rdd) = forward_dynamics(model, state, tau, gravity)?;
    let mut out = DVector::zeros(6 + rdd.len());
    out.rows_mut(0, 6).copy_from(&a0);
    out.rows_mut(6, rdd.len()).copy_from(&rdd);
    Ok(out)
}

/// Copy of `state` moved by `d` along coordinate `c` of block `block`.
pub fn perturb(state: &SystemState, block: usize, c: usize, d: f64) -> SystemState {
    let mut out = state.clone();
    match block {
        0 => {
            let mut xi = Vector6::zeros();
            xi[c] = d;
            out.base_pose = state.base_pose.compose(&se3_exp(&xi));
        }
        1 => out.joint_pos[c] += d,
        2 => out.base_twist[c] += d,
        3 => out.joint_vel[c] += d,
        _ => unreachable!("four blocks"),
    }
    out
}

/// Finite-difference derivatives of `[v̇; ṙ]` with respect to each block.
pub fn fd_forward_dynamics_jacobians(
    model: &MultibodyModel,
    state: &SystemState,
    tau: &DVector<f64>,
    gravity: &MotionVector,
    cfg: &FdConfig,
) -> Result<IdJacobians> {
    state.check(model)?;
    let n = model.n_dof();
    let nj = model.n_joints();
    let nominal = match cfg.scheme {
        Scheme::Forward => Some(stacked_fd(model, state, tau, gravity)?),
        Scheme::Central => None,
    };
    let mut blocks = Vec::with_capacity(4);
    for (block, width) in [6, nj, 6, nj].into_iter().enumerate() {
        let mut jac = DMatrix::zeros(n, width);
        for c in 0..width {
            let plus = stacked_fd(model, &perturb(state, block, c, cfg.delta), tau, gravity)?;
            let col = match &nominal {
                Some(f0) => (plus - f0) / cfg.delta,
                None => {
                    let minus =
                        stacked_fd(model, &perturb(state, block, c, -cfg.delta), tau, gravity)?;
                    (plus - minus) / (2.0 * cfg.delta)
                }
            };
            jac.set_column(c, &col);
        }
        blocks.push(jac);
    }
    let dr = blocks.pop().unwrap();
    let dv = blocks.pop().unwrap();
    let ds = blocks.pop().unwrap();
    let dh = blocks.pop().unwrap();
    Ok(IdJacobians { dh, ds, dv, dr })
}

/// Analytic derivatives `−M⁻¹·D ID̄` of the forward dynamics, evaluated at the
/// accelerations produced by `tau`.
pub fn analytic_forward_dynamics_jacobians(
    model: &MultibodyModel,
    state: &SystemState,
    tau: &DVector<f64>,
    gravity: &MotionVector,
) -> Result<IdJacobians> {
    state.check(model)?;
    let minv = immamb(model, &state.joint_pos)?;
    let h = bias_vector(model, state, gravity)?;
    let (a0, rdd) = forward_dynamics_with(&minv, &h, tau);
    let (_, ws) = eidamb(model, state, &a0, &rdd, gravity)?;
    let jac = id_jacobians(model, &ws);
    Ok(IdJacobians {
        dh: -(&minv * jac.dh),
        ds: -(&minv * jac.ds),
        dv: -(&minv * jac.dv),
        dr: -(&minv * jac.dr),
    })
}

/// How `|analytic − fd|` is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// One scalar per block: mean of `|analytic|` over all entries and trials.
    #[default]
    Block,
    /// Per entry: mean of `|analytic|` over trials. Ill-conditioned for
    /// entries that vanish structurally and carry only round-off.
    Entrywise,
}

/// Normalized errors of one block over a set of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockErrors {
    pub e_max: f64,
    pub e_avg: f64,
    /// Per-trial maximum and mean over the block's entries.
    pub trial_max: Vec<f64>,
    pub trial_avg: Vec<f64>,
    /// Entries whose normalizer is zero and that are reported as absolute
    /// error instead.
    pub absolute_entries: usize,
}

/// `|analytic − fd|` divided by the normalizer, reduced by maximum and mean
/// over entries and trials. Entries with a zero normalizer keep their
/// absolute error and are counted in `absolute_entries`.
pub fn error_metrics(
    analytic: &[&DMatrix<f64>],
    fd: &[&DMatrix<f64>],
    normalization: Normalization,
) -> Result<BlockErrors> {
    if analytic.len() != fd.len() {
        return Err(Error::Dimension {
            what: "trial count",
            expected: analytic.len(),
            got: fd.len(),
        });
    }
    let trials = analytic.len();
    if trials == 0 {
        return Err(Error::Config(
            "error metrics need at least one trial".into(),
        ));
    }
    let shape = analytic[0].shape();
    for m in analytic.iter().chain(fd) {
        if m.shape() != shape {
            return Err(Error::Dimension {
                what: "jacobian entries",
                expected: shape.0 * shape.1,
                got: m.nrows() * m.ncols(),
            });
        }
    }
    let mut norm = DMatrix::<f64>::zeros(shape.0, shape.1);
    for a in analytic {
        norm += a.abs();
    }
    norm /= trials as f64;
    if normalization == Normalization::Block && !norm.is_empty() {
        norm.fill(norm.mean());
    }
    let absolute_entries = norm.iter().filter(|&&x| x == 0.0).count();

    let entries = (shape.0 * shape.1).max(1) as f64;
    let mut trial_max = Vec::with_capacity(trials);
    let mut trial_avg = Vec::with_capacity(trials);
    for (a, f) in analytic.iter().zip(fd) {
        let mut mx = 0.0f64;
        let mut sum = 0.0;
        for ((x, y), n) in a.iter().zip(f.iter()).zip(norm.iter()) {
            let diff = (x - y).abs();
            let e = if *n == 0.0 { diff } else { diff / n };
            mx = mx.max(e);
            sum += e;
        }
        trial_max.push(mx);
        trial_avg.push(sum / entries);
    }
    Ok(BlockErrors {
        e_max: trial_max.iter().copied().fold(0.0, f64::max),
        e_avg: trial_avg.iter().sum::<f64>() / trials as f64,
        trial_max,
        trial_avg,
        absolute_entries,
    })
}

/// Aggregate errors of the four blocks at one perturbation size.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub e_max: [f64; 4],
    pub e_avg: [f64; 4],
    pub trial_count: usize,
    pub delta: f64,
    pub absolute_entries: [usize; 4],
}
