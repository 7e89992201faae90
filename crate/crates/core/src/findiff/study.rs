//! Randomized trials, aggregate error reports and the sweep over `δ`.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    analytic_forward_dynamics_jacobians, error_metrics, fd_forward_dynamics_jacobians, ErrorReport,
    FdConfig, Normalization, Scheme,
};
use crate::derivatives::IdJacobians;
use crate::dynamics::{default_gravity, eidamb_consistent};
use crate::error::{Error, Result};
use crate::model::{random_parameters, random_state_with, MultibodyModel, SystemState};
use crate::spatial::MotionVector;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `t`: `splitmix64(master ^ splitmix64(t))`.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    splitmix64(master ^ splitmix64(t as u64))
}

/// One random combination of parameters, state and consistent torques.
#[derive(Debug, Clone)]
pub struct Trial {
    pub seed: u64,
    pub model: MultibodyModel,
    pub state: SystemState,
    pub tau: DVector<f64>,
}

impl Trial {
    /// Keeps the tree and joints of `template` and redraws placements,
    /// inertias, state and joint accelerations. Torques follow from the
    /// inverse dynamics at the consistent base acceleration.
    pub fn generate(template: &MultibodyModel, seed: u64, gravity: &MotionVector) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_parameters(template, &mut rng);
        let state = random_state_with(&mut rng, &model);
        let rdd = DVector::from_fn(model.n_joints(), |_, _| rng.random::<f64>());
        let (torque, _) = eidamb_consistent(&model, &state, &rdd, gravity)?;
        Ok(Self {
            seed,
            model,
            state,
            tau: torque.joint_torques,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub trials: usize,
    pub seed: u64,
    pub gravity: MotionVector,
    pub scheme: Scheme,
    pub normalization: Normalization,
}

impl StudyConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            gravity: default_gravity(),
            scheme: Scheme::Forward,
            normalization: Normalization::Block,
        }
    }
}

/// Errors of one trial, normalized with the all-trial normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialErrors {
    pub index: usize,
    pub seed: u64,
    pub e_max: [f64; 4],
    pub e_avg: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRun {
    pub report: ErrorReport,
    pub trials: Vec<TrialErrors>,
}

/// Runs `f` on a pool capped by `GEOLIN_THREADS` when set.
fn in_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = match std::env::var("GEOLIN_THREADS") {
        Ok(s) => s.trim().parse::<usize>().map_err(|_| {
            Error::Config(format!(
                "GEOLIN_THREADS must be a positive integer, got {s:?}"
            ))
        })?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

struct Prepared {
    trial: Trial,
    analytic: IdJacobians,
}

fn prepare(template: &MultibodyModel, cfg: &StudyConfig) -> Result<Vec<Prepared>> {
    if cfg.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    in_pool(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let trial = Trial::generate(template, trial_seed(cfg.seed, t), &cfg.gravity)?;
                let analytic = analytic_forward_dynamics_jacobians(
                    &trial.model,
                    &trial.state,
                    &trial.tau,
                    &cfg.gravity,
                )?;
                Ok(Prepared { trial, analytic })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

fn evaluate(prepared: &[Prepared], cfg: &StudyConfig, delta: f64) -> Result<ValidationRun> {
    let fd_cfg = FdConfig::new(delta, cfg.scheme)?;
    let fd: Vec<IdJacobians> = in_pool(|| {
        prepared
            .par_iter()
            .map(|p| {
                let t = &p.trial;
                fd_forward_dynamics_jacobians(&t.model, &t.state, &t.tau, &cfg.gravity, &fd_cfg)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut report = ErrorReport {
        e_max: [0.0; 4],
        e_avg: [0.0; 4],
        trial_count: prepared.len(),
        delta,
        absolute_entries: [0; 4],
    };
    let mut trials: Vec<TrialErrors> = prepared
        .iter()
        .enumerate()
        .map(|(index, p)| TrialErrors {
            index,
            seed: p.trial.seed,
            e_max: [0.0; 4],
            e_avg: [0.0; 4],
        })
        .collect();
    for b in 0..4 {
        let analytic: Vec<_> = prepared.iter().map(|p| p.analytic.blocks()[b]).collect();
        let numeric: Vec<_> = fd.iter().map(|j| j.blocks()[b]).collect();
        let e = error_metrics(&analytic, &numeric, cfg.normalization)?;
        report.e_max[b] = e.e_max;
        report.e_avg[b] = e.e_avg;
        report.absolute_entries[b] = e.absolute_entries;
        for (t, row) in trials.iter_mut().enumerate() {
            row.e_max[b] = e.trial_max[t];
            row.e_avg[b] = e.trial_avg[t];
        }
    }
    Ok(ValidationRun { report, trials })
}

/// Analytic versus finite-difference derivatives over `cfg.trials` random
/// trials at one perturbation size.
pub fn run_validation(
    template: &MultibodyModel,
    cfg: &StudyConfig,
    delta: f64,
) -> Result<ValidationRun> {
    let prepared = prepare(template, cfg)?;
    evaluate(&prepared, cfg, delta)
}

/// One aggregate report per `δ`. The analytic derivatives are computed once
/// and shared across the sweep. `deltas` must be strictly decreasing.
pub fn parametric_study(
    template: &MultibodyModel,
    cfg: &StudyConfig,
    deltas: &[f64],
) -> Result<Vec<ErrorReport>> {
    if let Some(&bad) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::Config(format!(
            "perturbation must be positive and finite, got {bad}"
        )));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(
            "perturbations must be sorted in decreasing order".into(),
        ));
    }
    if deltas.is_empty() {
        return Ok(Vec::new());
    }
    let prepared = prepare(template, cfg)?;
    deltas
        .iter()
        .map(|&d| evaluate(&prepared, cfg, d).map(|run| run.report))
        .collect()
}
