use super::resolve_input;
use crate::args::{CheckKind, GradcheckArgs, ParamsArgs, ResolutionArgs, ResolutionMode};
use crate::manifest::{self, RunManifest};
use crate::output::{self, ParamRow, ResolutionRow};
use crate::{resolve_output, CliError, Outcome};
use std::ffi::OsString;
use std::sync::Arc;
use ufo_core::benchmarks::{burgers, decimate_grid, grid_2d, BenchmarkId, BurgersConfig, FunctionSample};
use ufo_core::model::{toy_grad_check, ModelKind, ToyShape, UfoConfig};
use ufo_core::training::{evaluate_one, load_checkpoint, EvalContext};

/// Inputs of `full` (a square raster of `side²` points) thinned to `g²`.
fn coarsen_inputs(full: &FunctionSample, side: usize, g: usize) -> Result<FunctionSample, CliError> {
    let mut s = full.clone();
    s.input_coords = Arc::new(decimate_grid(&full.input_coords, side, side, g, g)?);
    s.input_values = decimate_grid(&full.input_values, side, side, g, g)?;
    s.input_dims = vec![g, g];
    Ok(s)
}

pub fn run_resolution(a: &ResolutionArgs, args: &[OsString]) -> Result<Outcome, CliError> {
    let ckpt = load_checkpoint(&resolve_input(&a.checkpoint)?)?;
    if ckpt.benchmark != BenchmarkId::Burgers {
        return Err(CliError::Usage(format!(
            "the resolution study is defined on burgers only; checkpoint is for {}",
            ckpt.benchmark
        )));
    }
    if a.grids.iter().any(|&g| g < 2) {
        return Err(CliError::Usage("grid sizes must be at least 2".into()));
    }
    let cfg = BurgersConfig::default();
    let side = cfg.n_side;
    let base_grid = Arc::new(grid_2d(side, side));
    let full = burgers::sample_on(a.lambda, &cfg, &base_grid, &base_grid)?;
    let ctx = EvalContext {
        model: ckpt.model.kind().to_string(),
        seed: ckpt.train_config.as_ref().map_or(0, |c| c.seed),
    };
    let mode = match a.mode {
        ResolutionMode::Input => "input",
        ResolutionMode::Output => "output",
    };
    let mut rows = Vec::new();
    for &g in &a.grids {
        let sample = match a.mode {
            ResolutionMode::Input => {
                if g > side {
                    return Err(CliError::Usage(format!("input grids cannot exceed the {side}x{side} base grid")));
                }
                coarsen_inputs(&full, side, g)?
            }
            ResolutionMode::Output => burgers::sample_on(a.lambda, &cfg, &base_grid, &Arc::new(grid_2d(g, g)))?,
        };
        let r = evaluate_one(&ckpt.model, &sample, &ctx)?;
        let status = match &r.failure {
            Some(f) => format!("failed: {f}"),
            None => "ok".into(),
        };
        log::info!("{mode} {g}x{g}: rel_l2 {:.4e} ({status})", r.rel_l2);
        rows.push(ResolutionRow {
            mode: mode.into(),
            resolution: format!("{g}x{g}"),
            rel_l2: r.rel_l2,
            barron_rel: r.barron_rel,
            status,
        });
    }
    let out = resolve_output(&a.out);
    output::write_csv(&out, &rows)?;
    let mut m = RunManifest::start(args);
    m.seeds = vec![ctx.seed];
    m.extra.push(("lambda".into(), a.lambda.to_string()));
    m.outputs.push(out.clone());
    m.finish(&manifest::beside(&out))?;
    let report = rows
        .iter()
        .map(|r| format!("{} {}: rel_l2 {:.4e}, barron_rel {:.4e}, {}", r.mode, r.resolution, r.rel_l2, r.barron_rel, r.status))
        .collect();
    Ok(Outcome {
        outputs: vec![out],
        report,
    })
}

pub fn run_gradcheck(a: &GradcheckArgs) -> Result<Outcome, CliError> {
    let kinds = match a.model {
        CheckKind::Ufo => vec![ModelKind::Ufo],
        CheckKind::UfoAblated => vec![ModelKind::UfoAblated],
        CheckKind::Deeponet => vec![ModelKind::Deeponet],
        CheckKind::All => vec![ModelKind::Ufo, ModelKind::UfoAblated, ModelKind::Deeponet],
    };
    let shape = ToyShape {
        n_input: a.n_input,
        n_query: a.n_query,
        width: a.width,
    };
    let mut report = Vec::new();
    let mut failed = false;
    for kind in kinds {
        let r = toy_grad_check(kind, shape, a.seed, a.corrupt)?;
        let pass = r.max_rel_error <= a.tol;
        failed |= !pass;
        report.push(format!(
            "{kind}: max relative error {:.3e} at {}[{}] over {} entries: {}",
            r.max_rel_error,
            r.worst.0,
            r.worst.1,
            r.checked,
            if pass { "pass" } else { "FAIL" }
        ));
    }
    if failed {
        return Err(CliError::Threshold(format!(
            "gradient check above {:e}\n{}",
            a.tol,
            report.join("\n")
        )));
    }
    Ok(Outcome {
        outputs: Vec::new(),
        report,
    })
}

pub fn run_params(a: &ParamsArgs, args: &[OsString]) -> Result<Outcome, CliError> {
    let mut rows = Vec::new();
    for b in BenchmarkId::ALL {
        let (d_f, d_in, d_out) = b.dims();
        let full = UfoConfig::new(d_f, d_in, d_out);
        for (kind, cfg) in [(ModelKind::Ufo, full.clone()), (ModelKind::UfoAblated, full.ablated())] {
            rows.push(ParamRow {
                benchmark: b.to_string(),
                model: kind.to_string(),
                params: cfg.param_count(),
            });
        }
    }
    let mut outputs = Vec::new();
    if let Some(p) = &a.out {
        let out = resolve_output(p);
        output::write_csv(&out, &rows)?;
        let mut m = RunManifest::start(args);
        m.outputs.push(out.clone());
        m.finish(&manifest::beside(&out))?;
        outputs.push(out);
    }
    Ok(Outcome {
        outputs,
        report: rows.iter().map(|r| format!("{} {} {}", r.benchmark, r.model, r.params)).collect(),
    })
}
