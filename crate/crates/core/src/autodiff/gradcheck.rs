use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub h: f64,
    /// Parameter names used in reports and errors; indices are used when absent.
    pub names: Option<Vec<String>>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { h: 1e-5, names: None }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// max over all parameter elements of |analytic − fd| / (|fd| + 1e-12)
    pub max_rel_error: f64,
    /// Parameter and flat element index where the maximum occurred.
    pub worst: (String, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

fn param_name(opts: &GradCheckOptions, i: usize) -> String {
    opts.names
        .as_ref()
        .and_then(|n| n.get(i).cloned())
        .unwrap_or_else(|| format!("param[{i}]"))
}

fn eval_scalar<F>(f: &F, params: &[Tensor], what: impl FnOnce() -> String) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|p| tape.constant(p.clone())).collect();
    let v = f(&tape, &vars)?.value().item()?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what: what() })
    }
}

/// Compares reverse-mode gradients of the scalar produced by `f` against
/// central finite differences, element by element.
///
/// `f` must be deterministic. Any non-finite loss value aborts with an error
/// naming the parameter being perturbed.
pub fn grad_check<F>(f: F, params: &[Tensor], opts: GradCheckOptions) -> Result<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    if opts.h <= 0.0 || !opts.h.is_finite() {
        return Err(Error::contract("grad_check", "step h must be positive"));
    }
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = f(&tape, &vars)?;
    if !loss.value().is_finite() {
        return Err(Error::NonFinite {
            what: "loss at unperturbed parameters".into(),
        });
    }
    let grads = tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|v| grads.wrt(*v)).collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    let mut work: Vec<Tensor> = params.to_vec();
    for (pi, g) in analytic.iter().enumerate() {
        for j in 0..g.numel() {
            let orig = work[pi].data()[j];
            work[pi].data_mut()[j] = orig + opts.h;
            let plus = eval_scalar(&f, &work, || format!("{} element {j} (+h)", param_name(&opts, pi)))?;
            work[pi].data_mut()[j] = orig - opts.h;
            let minus = eval_scalar(&f, &work, || format!("{} element {j} (-h)", param_name(&opts, pi)))?;
            work[pi].data_mut()[j] = orig;
            let fd = (plus - minus) / (2.0 * opts.h);
            let a = g.data()[j];
            let rel = (a - fd).abs() / (fd.abs() + 1e-12);
            report.checked += 1;
            if rel > report.max_rel_error || report.checked == 1 {
                report.max_rel_error = rel;
                report.worst = (param_name(&opts, pi), j);
                report.analytic = a;
                report.numeric = fd;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_is_exact() {
        // y = w·x with w = 2, x = 3 → dy/dw = 3
        let x = 3.0;
        let report = grad_check(
            |tape, p| p[0].mul(tape.constant(Tensor::vector(vec![x]))).map(Var::sum_all),
            &[Tensor::vector(vec![2.0])],
            GradCheckOptions::default(),
        )
        .unwrap();
        assert!((report.analytic - 3.0).abs() < 1e-12);
        assert!((report.numeric - 3.0).abs() < 1e-9);
        assert!(report.max_rel_error < 1e-9);
    }

    #[test]
    fn nan_closure_is_a_diagnostic_error() {
        let err = grad_check(
            |tape, p| p[0].mul(tape.constant(Tensor::vector(vec![f64::NAN]))).map(Var::sum_all),
            &[Tensor::vector(vec![1.0])],
            GradCheckOptions {
                names: Some(vec!["weight".into()]),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn perturbation_that_produces_nan_names_the_parameter() {
        // sqrt-like blow up: 1/(w - 1) is infinite at w = 1 + h
        let err = grad_check(
            |tape, p| {
                let one = tape.constant(Tensor::vector(vec![1.0 + 1e-5]));
                let d = p[0].sub(one)?;
                tape.constant(Tensor::vector(vec![1.0])).div(d).map(Var::sum_all)
            },
            &[Tensor::vector(vec![1.0])],
            GradCheckOptions {
                names: Some(vec!["bias".into()]),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("bias"), "{err}");
    }

    #[test]
    fn rejects_nonpositive_step() {
        let r = grad_check(
            |_, p| Ok(p[0].sum_all()),
            &[Tensor::vector(vec![1.0])],
            GradCheckOptions { h: 0.0, names: None },
        );
        assert!(r.is_err());
    }
}
