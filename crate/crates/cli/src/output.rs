//! CSV tables.

use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;
use ufo_core::metrics::MetricReport;
use ufo_core::training::EpochRecord;

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(|e| CliError::io(p, e)),
        _ => Ok(()),
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

pub fn write_results(path: &Path, rows: &[MetricReport]) -> Result<(), CliError> {
    write_csv(path, rows)
}

pub fn write_history(path: &Path, rows: &[EpochRecord]) -> Result<(), CliError> {
    write_csv(path, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub mode: String,
    pub resolution: String,
    pub rel_l2: f64,
    pub barron_rel: f64,
    /// `ok`, or the reason the model could not be evaluated.
    pub status: String,
}

/// One scenario of an ablation: the full and the ablated model side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub benchmark: String,
    pub scenario: String,
    pub seed: u64,
    pub ufo_rel_l2: f64,
    pub ablated_rel_l2: f64,
    /// `ablated_rel_l2 / ufo_rel_l2`.
    pub ratio: f64,
    pub ufo_barron_rel: f64,
    pub ablated_barron_rel: f64,
}

/// Mean and sample standard deviation over seeds. `scenario` is `all` in
/// the aggregate row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub benchmark: String,
    pub scenario: String,
    pub model: String,
    pub n_seeds: usize,
    pub rel_l2_mean: f64,
    pub rel_l2_std: f64,
    pub barron_rel_mean: f64,
    pub barron_rel_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub benchmark: String,
    pub model: String,
    pub params: usize,
}

/// Mean and sample standard deviation (`n − 1`; zero for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// One row per scenario (in first-seen order) plus the aggregate row.
pub fn summarize(rows: &[MetricReport]) -> Vec<SummaryRow> {
    let mut scenarios: Vec<&str> = Vec::new();
    for r in rows {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let row = |scenario: &str, sel: Vec<&MetricReport>| {
        let (rm, rs) = mean_std(&sel.iter().map(|r| r.rel_l2).collect::<Vec<_>>());
        let (bm, bs) = mean_std(&sel.iter().map(|r| r.barron_rel).collect::<Vec<_>>());
        let mut seeds: Vec<u64> = sel.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        SummaryRow {
            benchmark: first.benchmark.clone(),
            scenario: scenario.to_string(),
            model: first.model.clone(),
            n_seeds: seeds.len(),
            rel_l2_mean: rm,
            rel_l2_std: rs,
            barron_rel_mean: bm,
            barron_rel_std: bs,
        }
    };
    let mut out: Vec<SummaryRow> = scenarios
        .iter()
        .map(|s| row(s, rows.iter().filter(|r| r.scenario == *s).collect()))
        .collect();
    out.push(row("all", rows.iter().collect()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(scenario: &str, seed: u64, rel: f64) -> MetricReport {
        MetricReport {
            benchmark: "burgers".into(),
            scenario: scenario.into(),
            model: "ufo".into(),
            seed,
            rel_l2: rel,
            barron_rel: 2.0 * rel,
            n_input: 4,
            n_query: 4,
            wall_ms: 1.0,
            failure: None,
        }
    }

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn summary_has_one_row_per_scenario_and_an_aggregate() {
        let rows = vec![
            report("lambda=1.5", 1, 0.1),
            report("lambda=4.5", 1, 0.3),
            report("lambda=1.5", 2, 0.2),
            report("lambda=4.5", 2, 0.5),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].scenario, "lambda=1.5");
        assert!((s[0].rel_l2_mean - 0.15).abs() < 1e-15);
        assert_eq!(s[2].scenario, "all");
        assert_eq!(s[2].n_seeds, 2);
        assert!((s[2].barron_rel_mean - 0.55).abs() < 1e-15);
    }

    #[test]
    fn results_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/results.csv");
        let rows = vec![report("s=0.41", 42, 0.125)];
        write_results(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("benchmark,scenario,model,seed,rel_l2,barron_rel,n_input,n_query,wall_ms\n"));
        let back: Vec<MetricReport> = read_csv(&p).unwrap();
        assert_eq!(back, rows);
    }
}
