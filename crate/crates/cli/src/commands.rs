use std::fs;
use std::path::Path;

use geolin::findiff::{parametric_study, run_validation, ErrorReport, StudyConfig, BLOCK_NAMES};
use geolin::model::{build_test_system, load_model, MultibodyModel};

use crate::report::{study_csv, validation_csv, CsvResult};
use crate::{ModelSource, StudyArgs, TrialArgs, ValidateArgs};

/// Result of a command that ran to completion.
pub struct Outcome {
    pub passed: bool,
    pub message: Option<String>,
}

pub fn load(source: &ModelSource) -> CsvResult<MultibodyModel> {
    match &source.model {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(load_model(&text).map_err(|e| format!("{}: {e}", path.display()))?)
        }
        None => Ok(build_test_system()),
    }
}

fn study_config(args: &TrialArgs) -> StudyConfig {
    let mut cfg = StudyConfig::new(args.trials as usize, args.seed);
    cfg.scheme = args.scheme.into();
    cfg.normalization = args.normalization.into();
    cfg
}

pub fn write_output(path: &Path, bytes: &[u8]) -> CsvResult<()> {
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()).into())
}

pub fn validate(args: &ValidateArgs) -> CsvResult<Outcome> {
    let model = load(&args.source)?;
    let run = run_validation(&model, &study_config(&args.trials), args.delta)?;
    let bytes = validation_csv(&run.trials, &run.report)?;
    write_output(&args.out, &bytes)?;

    let breaches: Vec<String> = (0..4)
        .flat_map(|b| {
            let r = &run.report;
            let name = BLOCK_NAMES[b];
            let max =
                (r.e_max[b] > args.max_tol).then(|| format!("e_max[{name}] = {:e}", r.e_max[b]));
            let avg =
                (r.e_avg[b] > args.avg_tol).then(|| format!("e_avg[{name}] = {:e}", r.e_avg[b]));
            max.into_iter().chain(avg)
        })
        .collect();
    Ok(Outcome {
        passed: breaches.is_empty(),
        message: (!breaches.is_empty())
            .then(|| format!("tolerance exceeded: {}", breaches.join(", "))),
    })
}

/// Indices of error series whose minimum sits at either end of the sweep.
/// Sweeps shorter than three steps have no interior and are not checked.
pub fn edge_minima(rows: &[ErrorReport]) -> Vec<String> {
    if rows.len() < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for b in 0..4 {
        for (label, pick) in [("e_max", 0), ("e_avg", 1)] {
            let series: Vec<f64> = rows
                .iter()
                .map(|r| if pick == 0 { r.e_max[b] } else { r.e_avg[b] })
                .collect();
            let argmin = series
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            if argmin == 0 || argmin + 1 == series.len() {
                out.push(format!("{label}[{}]", BLOCK_NAMES[b]));
            }
        }
    }
    out
}

pub fn study(args: &StudyArgs) -> CsvResult<Outcome> {
    let model = load(&args.source)?;
    let rows = parametric_study(&model, &study_config(&args.trials), &args.deltas)?;
    let bytes = study_csv(&rows)?;
    write_output(&args.out, &bytes)?;
    let edges = edge_minima(&rows);
    Ok(Outcome {
        passed: edges.is_empty(),
        message: (!edges.is_empty())
            .then(|| format!("minimum at an end of the sweep: {}", edges.join(", "))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(delta: f64, e: f64) -> ErrorReport {
        ErrorReport {
            e_max: [e; 4],
            e_avg: [e; 4],
            trial_count: 1,
            delta,
            absolute_entries: [0; 4],
        }
    }

    #[test]
    fn interior_minimum_detected() {
        let rows = [row(1e-2, 1.0), row(1e-3, 0.1), row(1e-4, 0.5)];
        assert!(edge_minima(&rows).is_empty());
    }

    #[test]
    fn monotone_sweep_flagged() {
        let rows = [row(1e-2, 1.0), row(1e-3, 0.1), row(1e-4, 0.05)];
        assert_eq!(edge_minima(&rows).len(), 8);
    }

    #[test]
    fn short_sweeps_not_checked() {
        assert!(edge_minima(&[row(1e-6, 1.0)]).is_empty());
        assert!(edge_minima(&[]).is_empty());
    }
}
