use super::{create_dir, resolve_input};
use crate::args::{AblateArgs, EvalArgs, SeedsArgs, TrainArgs, TrainFlags};
use crate::manifest::{self, RunManifest};
use crate::output::{self, PairedRow};
use crate::{resolve_output, CliError, Outcome};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use ufo_core::benchmarks::{read_dataset, Dataset};
use ufo_core::metrics::MetricReport;
use ufo_core::model::ModelKind;
use ufo_core::nn::Parameterized;
use ufo_core::training::{
    evaluate, load_checkpoint, save_checkpoint, train, Checkpoint, EvalContext, LrSchedule, TrainConfig,
    PROTOCOL_SEEDS,
};

/// Benchmark recipe for `kind`, overridden by the given flags.
pub fn train_config(ds: &Dataset, kind: ModelKind, seed: u64, f: &TrainFlags) -> Result<TrainConfig, CliError> {
    let mut c = TrainConfig::recipe(ds.benchmark, kind);
    c.seed = seed;
    if let Some(v) = f.epochs {
        c.epochs = v;
    }
    if let Some(v) = f.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = f.lr {
        c.lr = v;
    }
    if let Some(v) = f.lr_min {
        c.lr_min = v;
    } else if c.lr_min > c.lr {
        c.lr_min = c.lr;
    }
    if f.constant_lr {
        c.schedule = LrSchedule::Constant;
    }
    if let Some(q) = f.query_subset {
        c.query_subset = (q > 0).then_some(q);
    }
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(c)
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    Ok(read_dataset(&resolve_input(path)?)?)
}

/// `model.ufoc` → `model.loss.csv`.
fn history_path(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("loss.csv")
}

/// Trains, then writes the checkpoint and loss history. A run stopped by a
/// non-finite loss still writes its last good state before failing.
fn train_and_save(ds: &Dataset, cfg: &TrainConfig, out: &Path, m: &mut RunManifest) -> Result<Checkpoint, CliError> {
    output::ensure_parent(out)?;
    log::info!(
        "training {} on {} ({} samples, {} epochs, seed {})",
        cfg.model,
        ds.benchmark,
        ds.len(),
        cfg.epochs,
        cfg.seed
    );
    let outcome = train(ds, cfg)?;
    let params = outcome.model.param_count();
    log::info!("{} on {}: {params} trainable parameters", cfg.model, ds.benchmark);
    let hist = history_path(out);
    output::write_history(&hist, &outcome.history)?;
    let aborted = outcome.aborted.clone();
    let ckpt = outcome.into_checkpoint(cfg);
    save_checkpoint(out, &ckpt)?;
    m.outputs.push(out.to_path_buf());
    m.outputs.push(hist);
    if let Some(msg) = aborted {
        return Err(CliError::Diverged(format!("{msg}; last good state saved to {}", out.display())));
    }
    Ok(ckpt)
}

fn eval_checkpoint(ckpt: &Checkpoint, ds: &Dataset) -> Result<Vec<MetricReport>, CliError> {
    if ckpt.benchmark != ds.benchmark {
        return Err(CliError::Usage(format!(
            "checkpoint is for {} but the dataset is {}",
            ckpt.benchmark, ds.benchmark
        )));
    }
    let ctx = EvalContext {
        model: ckpt.model.kind().to_string(),
        seed: ckpt.train_config.as_ref().map_or(0, |c| c.seed),
    };
    let rows = evaluate(&ckpt.model, &ds.samples, &ctx)?;
    for r in rows.iter().filter(|r| r.failure.is_some()) {
        log::warn!("{} {}: {}", r.model, r.scenario, r.failure.as_deref().unwrap_or(""));
    }
    Ok(rows)
}

fn describe(rows: &[MetricReport]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            format!(
                "{} {} seed={} rel_l2={:.4e} barron_rel={:.4e}",
                r.model, r.scenario, r.seed, r.rel_l2, r.barron_rel
            )
        })
        .collect()
}

pub fn run_train(a: &TrainArgs, args: &[OsString]) -> Result<Outcome, CliError> {
    let ds = load_dataset(&a.data)?;
    let cfg = train_config(&ds, a.model.into(), a.seed, &a.train)?;
    let out = resolve_output(&a.out);
    let mut m = RunManifest::start(args);
    m.seeds = vec![a.seed];
    m.extra.push(("dataset".into(), a.data.display().to_string()));
    let result = train_and_save(&ds, &cfg, &out, &mut m);
    let man = manifest::beside(&out);
    let outputs = m.outputs.clone();
    m.finish(&man)?;
    let ckpt = result?;
    Ok(Outcome {
        report: vec![format!(
            "{} on {}: {} epochs, final loss {:.4e}, {} parameters -> {}",
            cfg.model,
            ckpt.benchmark,
            ckpt.epoch,
            ckpt.final_loss,
            ckpt.model.param_count(),
            out.display()
        )],
        outputs,
    })
}

pub fn run_eval(a: &EvalArgs, args: &[OsString]) -> Result<Outcome, CliError> {
    let ckpt = load_checkpoint(&resolve_input(&a.checkpoint)?)?;
    let ds = load_dataset(&a.data)?;
    let rows = eval_checkpoint(&ckpt, &ds)?;
    let out = resolve_output(&a.out);
    output::write_results(&out, &rows)?;
    let mut m = RunManifest::start(args);
    m.seeds = rows.first().map(|r| vec![r.seed]).unwrap_or_default();
    m.outputs.push(out.clone());
    m.finish(&manifest::beside(&out))?;
    Ok(Outcome {
        report: describe(&rows),
        outputs: vec![out],
    })
}

pub fn run_ablate(a: &AblateArgs, args: &[OsString]) -> Result<Outcome, CliError> {
    let ds = load_dataset(&a.data)?;
    let test = load_dataset(&a.test)?;
    let dir = resolve_output(&a.out_dir);
    create_dir(&dir)?;
    let mut m = RunManifest::start(args);
    m.seeds = vec![a.seed];
    let mut all = Vec::new();
    let mut per_kind = Vec::new();
    for kind in [ModelKind::Ufo, ModelKind::UfoAblated] {
        let cfg = train_config(&ds, kind, a.seed, &a.train)?;
        let ckpt = train_and_save(&ds, &cfg, &dir.join(format!("{kind}.ufoc")), &mut m)?;
        let rows = eval_checkpoint(&ckpt, &test)?;
        all.extend(rows.iter().cloned());
        per_kind.push(rows);
    }
    let paired: Vec<PairedRow> = per_kind[0]
        .iter()
        .zip(&per_kind[1])
        .map(|(f, b)| PairedRow {
            benchmark: f.benchmark.clone(),
            scenario: f.scenario.clone(),
            seed: f.seed,
            ufo_rel_l2: f.rel_l2,
            ablated_rel_l2: b.rel_l2,
            ratio: b.rel_l2 / f.rel_l2,
            ufo_barron_rel: f.barron_rel,
            ablated_barron_rel: b.barron_rel,
        })
        .collect();
    let results = dir.join("results.csv");
    let paired_path = dir.join("paired.csv");
    output::write_results(&results, &all)?;
    output::write_csv(&paired_path, &paired)?;
    m.outputs.extend([results, paired_path]);
    let outputs = m.outputs.clone();
    m.finish(&dir.join("manifest.txt"))?;
    let report = paired
        .iter()
        .map(|p| {
            format!(
                "{}: ufo {:.4e}, ablated {:.4e}, ratio {:.2}",
                p.scenario, p.ufo_rel_l2, p.ablated_rel_l2, p.ratio
            )
        })
        .collect();
    Ok(Outcome { outputs, report })
}

pub fn run_seeds(a: &SeedsArgs, args: &[OsString]) -> Result<Outcome, CliError> {
    let ds = load_dataset(&a.data)?;
    let test = load_dataset(&a.test)?;
    let seeds = a.seeds.clone().unwrap_or_else(|| PROTOCOL_SEEDS.to_vec());
    if seeds.is_empty() {
        return Err(CliError::Usage("--seeds needs at least one seed".into()));
    }
    let dir = resolve_output(&a.out_dir);
    create_dir(&dir)?;
    let kind: ModelKind = a.model.into();
    let mut m = RunManifest::start(args);
    m.seeds = seeds.clone();
    let mut rows = Vec::new();
    for &seed in &seeds {
        let cfg = train_config(&ds, kind, seed, &a.train)?;
        let ckpt = train_and_save(&ds, &cfg, &dir.join(format!("{kind}_seed{seed}.ufoc")), &mut m)?;
        rows.extend(eval_checkpoint(&ckpt, &test)?);
    }
    let summary = output::summarize(&rows);
    let results = dir.join("results.csv");
    let summary_path = dir.join("summary.csv");
    output::write_results(&results, &rows)?;
    output::write_csv(&summary_path, &summary)?;
    m.outputs.extend([results, summary_path]);
    let outputs = m.outputs.clone();
    m.finish(&dir.join("manifest.txt"))?;
    let report = summary
        .iter()
        .map(|s| {
            format!(
                "{} {}: rel_l2 {:.4e} ± {:.1e}, barron_rel {:.4e} ± {:.1e} over {} seeds",
                s.model, s.scenario, s.rel_l2_mean, s.rel_l2_std, s.barron_rel_mean, s.barron_rel_std, s.n_seeds
            )
        })
        .collect();
    Ok(Outcome { outputs, report })
}
