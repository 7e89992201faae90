//! CSV rendering. Floats use 17 significant digits.

use geolin::findiff::{ErrorReport, TrialErrors};

pub type CsvResult<T> = Result<T, Box<dyn std::error::Error>>;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn error_columns(prefix: &str) -> impl Iterator<Item = String> + '_ {
    (1..=4).map(move |i| format!("{prefix}_{i}"))
}

fn header(lead: &[&str]) -> Vec<String> {
    lead.iter()
        .map(|s| s.to_string())
        .chain(error_columns("e_max"))
        .chain(error_columns("e_avg"))
        .collect()
}

fn errors(e_max: &[f64; 4], e_avg: &[f64; 4]) -> impl Iterator<Item = String> {
    e_max
        .iter()
        .chain(e_avg)
        .map(|&x| float(x))
        .collect::<Vec<_>>()
        .into_iter()
}

/// Per-trial rows followed by one aggregate row.
pub fn validation_csv(trials: &[TrialErrors], report: &ErrorReport) -> CsvResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(&["kind", "trial", "seed", "delta"]))?;
    let delta = float(report.delta);
    for t in trials {
        let lead = [
            "trial".to_string(),
            t.index.to_string(),
            t.seed.to_string(),
            delta.clone(),
        ];
        w.write_record(lead.into_iter().chain(errors(&t.e_max, &t.e_avg)))?;
    }
    let lead = [
        "aggregate".to_string(),
        report.trial_count.to_string(),
        String::new(),
        delta,
    ];
    w.write_record(lead.into_iter().chain(errors(&report.e_max, &report.e_avg)))?;
    Ok(w.into_inner()?)
}

pub fn study_csv(rows: &[ErrorReport]) -> CsvResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(&["delta"]))?;
    for r in rows {
        w.write_record(std::iter::once(float(r.delta)).chain(errors(&r.e_max, &r.e_avg)))?;
    }
    Ok(w.into_inner()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(delta: f64) -> ErrorReport {
        ErrorReport {
            e_max: [1.0, 2.0, 3.0, 4.0],
            e_avg: [0.5, 0.25, 0.125, 0.0625],
            trial_count: 1,
            delta,
            absolute_entries: [0; 4],
        }
    }

    #[test]
    fn float_has_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(1e-6).parse::<f64>().unwrap(), 1e-6);
    }

    #[test]
    fn study_layout() {
        let text = String::from_utf8(study_csv(&[report(1e-3)]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "delta,e_max_1,e_max_2,e_max_3,e_max_4,e_avg_1,e_avg_2,e_avg_3,e_avg_4"
        );
        assert_eq!(lines.next().unwrap().split(',').count(), 9);
        assert!(lines.next().is_none());
    }

    #[test]
    fn validation_layout() {
        let t = TrialErrors {
            index: 0,
            seed: 99,
            e_max: [1.0; 4],
            e_avg: [0.5; 4],
        };
        let text = String::from_utf8(validation_csv(&[t], &report(1e-6)).unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("trial,0,99,"));
        assert!(lines[2].starts_with("aggregate,1,,"));
    }
}
