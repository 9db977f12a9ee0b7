use crate::args::{GenerateArgs, Layout};
use crate::manifest::{self, RunManifest};
use crate::output::ensure_parent;
use crate::{resolve_output, CliError, Outcome};
use std::ffi::OsString;
use ufo_core::benchmarks::{
    make_dataset, write_dataset, write_manifest, BenchmarkId, DatasetSpec, InputLayout, ParamSet,
};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn param_set(a: &GenerateArgs, base: &ParamSet, range: Option<&Vec<f64>>) -> Result<ParamSet, CliError> {
    if let Some(v) = &a.values {
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(usage("--values needs finite numbers"));
        }
        return Ok(ParamSet::List(v.clone()));
    }
    if a.test {
        if range.is_some() {
            return Err(usage("--test uses the standard scenarios; pass --values to choose others"));
        }
        return Ok(base.clone());
    }
    let ParamSet::Uniform { n, lo, hi } = *base else {
        return Ok(base.clone());
    };
    let n = a.n.unwrap_or(n);
    let (lo, hi) = match range {
        Some(r) => (r[0], r[1]),
        None => (lo, hi),
    };
    if n == 0 {
        return Err(usage("--n must be positive"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(usage(format!("bad parameter range [{lo}, {hi}]")));
    }
    Ok(ParamSet::uniform(n, lo, hi))
}

/// The dataset described by the `generate` flags.
pub fn dataset_spec(a: &GenerateArgs) -> Result<DatasetSpec, CliError> {
    let id: BenchmarkId = a.benchmark.into();
    let mut spec = if a.test {
        DatasetSpec::test_for(id)
    } else {
        DatasetSpec::default_for(id)
    };
    let foreign = |flag: &str, set: bool, owner: BenchmarkId| {
        if set && owner != id {
            Err(usage(format!("--{flag} applies to {owner}, not {id}")))
        } else {
            Ok(())
        }
    };
    foreign("s-range", a.s_range.is_some(), BenchmarkId::StepHeat)?;
    foreign("delta-range", a.delta_range.is_some(), BenchmarkId::DeltaHelmholtz)?;
    foreign("lambda-range", a.lambda_range.is_some(), BenchmarkId::Burgers)?;
    foreign("grid", a.grid.is_some(), BenchmarkId::Burgers)?;
    foreign("layout", a.layout.is_some(), BenchmarkId::DeltaHelmholtz)?;
    for (flag, set) in [
        ("k", a.k.is_some()),
        ("ells", a.ells.is_some()),
        ("per-ell", a.per_ell.is_some()),
    ] {
        foreign(flag, set, BenchmarkId::GrfHelmholtz)?;
    }
    if a.n_input.is_some() && !matches!(id, BenchmarkId::StepHeat | BenchmarkId::DeltaHelmholtz) {
        return Err(usage(format!("--n-input does not apply to {id}")));
    }
    if a.n_input == Some(0) || a.grid.is_some_and(|g| g < 2) {
        return Err(usage("grid sizes must be at least 2 points"));
    }
    match &mut spec {
        DatasetSpec::StepHeat { config, s } => {
            *s = param_set(a, s, a.s_range.as_ref())?;
            if let Some(n) = a.n_input {
                config.n_input = n;
            }
        }
        DatasetSpec::DeltaHelmholtz { config, delta } => {
            *delta = param_set(a, delta, a.delta_range.as_ref())?;
            if let Some(l) = a.layout {
                config.layout = match l {
                    Layout::Random => InputLayout::Random,
                    Layout::Regular => InputLayout::Regular,
                };
            }
            if let Some(n) = a.n_input {
                config.n_input = n;
            }
        }
        DatasetSpec::Burgers { config, lambda } => {
            *lambda = param_set(a, lambda, a.lambda_range.as_ref())?;
            if let Some(g) = a.grid {
                config.n_side = g;
            }
        }
        DatasetSpec::GrfHelmholtz { per_ell, ells, k, .. } => {
            if a.values.is_some() {
                return Err(usage("grf_helmholtz takes --ells, not --values"));
            }
            if let Some(v) = &a.ells {
                if v.is_empty() || v.iter().any(|e| !(*e > 0.0)) {
                    return Err(usage("--ells needs positive correlation lengths"));
                }
                *ells = v.clone();
            }
            if let Some(n) = a.per_ell.or(a.n) {
                if n == 0 {
                    return Err(usage("--per-ell must be positive"));
                }
                *per_ell = n;
            }
            if let Some(kk) = a.k {
                if !(kk > 0.0) {
                    return Err(usage("--k must be positive"));
                }
                *k = kk;
            }
        }
    }
    Ok(spec)
}

pub fn run(a: &GenerateArgs, args: &[OsString]) -> Result<Outcome, CliError> {
    let spec = dataset_spec(a)?;
    let out = resolve_output(&a.out);
    ensure_parent(&out)?;
    let mut m = RunManifest::start(args);
    m.seeds = vec![a.seed];
    log::info!("generating {} samples of {}", spec.len(), spec.benchmark());
    let ds = make_dataset(&spec, a.seed)?;
    write_dataset(&out, &ds)?;
    let man = manifest::beside(&out);
    m.extra = spec.describe();
    m.extra.push(("dataset_seed".into(), a.seed.to_string()));
    m.finished = Some(manifest::now());
    m.outputs = vec![out.clone(), man.clone()];
    write_manifest(&man, &m.pairs(), &ds)?;
    Ok(Outcome {
        report: vec![format!("wrote {} samples of {} to {}", ds.len(), ds.benchmark, out.display())],
        outputs: m.outputs,
    })
}
