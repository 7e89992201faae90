//! Median wall time per call of each kernel over a set of random trials.

use std::hint::black_box;
use std::time::Instant;

use geolin::derivatives::{did_dh_body_twist, did_dr, did_ds, did_dv};
use geolin::dynamics::{default_gravity, eidamb, forward_dynamics, immamb, DynamicsWorkspace};
use geolin::findiff::{trial_seed, Trial};
use geolin::linearization::linearize;
use geolin::model::MultibodyModel;

use crate::commands::{load, write_output, Outcome};
use crate::report::{float, CsvResult};
use crate::BenchArgs;

pub const OPERATIONS: [&str; 7] = [
    "eidamb",
    "did_dH",
    "did_ds",
    "did_dv",
    "did_dr",
    "immamb",
    "linearize",
];

struct Point {
    trial: Trial,
    ws: DynamicsWorkspace,
}

fn run(op: &str, p: &Point) -> geolin::Result<()> {
    let t = &p.trial;
    let g = default_gravity();
    match op {
        "eidamb" => {
            black_box(eidamb(
                &t.model,
                &t.state,
                &p.ws.base_acc,
                &p.ws.joint_acc,
                &g,
            )?);
        }
        "did_dH" => {
            black_box(did_dh_body_twist(&t.model, &p.ws));
        }
        "did_ds" => {
            black_box(did_ds(&t.model, &p.ws));
        }
        "did_dv" => {
            black_box(did_dv(&t.model, &p.ws));
        }
        "did_dr" => {
            black_box(did_dr(&t.model, &p.ws));
        }
        "immamb" => {
            black_box(immamb(&t.model, &t.state.joint_pos)?);
        }
        "linearize" => {
            black_box(linearize(&t.model, &t.state, &t.tau, &g)?);
        }
        _ => unreachable!("unknown operation {op}"),
    }
    Ok(())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median over repeats of the mean time per call across all trials.
pub fn measure(
    model: &MultibodyModel,
    trials: usize,
    repeats: usize,
    seed: u64,
) -> geolin::Result<Vec<(String, f64)>> {
    let g = default_gravity();
    let points = (0..trials)
        .map(|t| {
            let trial = Trial::generate(model, trial_seed(seed, t), &g)?;
            let (a0, rdd) = forward_dynamics(&trial.model, &trial.state, &trial.tau, &g)?;
            let (_, ws) = eidamb(&trial.model, &trial.state, &a0, &rdd, &g)?;
            Ok(Point { trial, ws })
        })
        .collect::<geolin::Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(OPERATIONS.len());
    for op in OPERATIONS {
        let mut samples = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let start = Instant::now();
            for p in &points {
                run(op, p)?;
            }
            samples.push(start.elapsed().as_secs_f64() / trials as f64);
        }
        out.push((op.to_string(), median(samples)));
    }
    Ok(out)
}

pub fn bench(args: &BenchArgs) -> CsvResult<Outcome> {
    let model = load(&args.source)?;
    let rows = measure(
        &model,
        args.trials as usize,
        args.repeats as usize,
        args.seed,
    )?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["operation", "median_seconds", "repeats", "trials"])?;
    for (op, t) in &rows {
        w.write_record([
            op.clone(),
            float(*t),
            args.repeats.to_string(),
            args.trials.to_string(),
        ])?;
    }
    write_output(&args.out, &w.into_inner()?)?;
    Ok(Outcome {
        passed: true,
        message: None,
    })
}
