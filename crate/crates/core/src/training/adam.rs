use crate::error::{Error, Result};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments, one pair per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    /// Number of applied updates.
    pub step: u64,
}

impl AdamState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let m: Vec<Tensor> = params.into_iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            v: m.clone(),
            m,
            step: 0,
        }
    }
}

/// What happened in one [`adam_step`].
#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Applied,
    /// A gradient contained NaN or infinity; nothing was changed.
    Skipped { param: String },
}

/// One bias-corrected Adam update. `names` is only used for diagnostics.
pub fn adam_step(
    params: &mut [&mut Tensor],
    grads: &[Tensor],
    names: &[String],
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<StepOutcome> {
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::dim(
            "adam_step",
            format!("{n} params, {} grads, {} moment pairs", grads.len(), state.m.len()),
        ));
    }
    for i in 0..n {
        let s = params[i].shape();
        if grads[i].shape() != s || state.m[i].shape() != s || state.v[i].shape() != s {
            return Err(Error::dim("adam_step", format!("shape mismatch for parameter {i}")));
        }
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        let param = names.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
        log::warn!("non-finite gradient for {param}; skipping optimizer step");
        return Ok(StepOutcome::Skipped { param });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..n {
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        for (m, g) in m.iter_mut().zip(g) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        }
        let v = state.v[i].data_mut();
        for (v, g) in v.iter_mut().zip(g) {
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        }
        let (m, v) = (state.m[i].data(), state.v[i].data());
        for ((p, m), v) in params[i].data_mut().iter_mut().zip(m).zip(v) {
            *p -= lr * (m / c1) / ((v / c2).sqrt() + cfg.eps);
        }
    }
    Ok(StepOutcome::Applied)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(p: &mut Tensor, g: &Tensor, state: &mut AdamState, lr: f64) -> StepOutcome {
        adam_step(&mut [p], std::slice::from_ref(g), &["w".into()], state, lr, &AdamConfig::default()).unwrap()
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Tensor::vector(vec![0.5, -2.0]);
        let mut st = AdamState::new([&p]);
        run(&mut p, &Tensor::vector(vec![1.0, 1.0]), &mut st, 1e-3);
        // m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε)
        let want = 1e-3 * 1.0 / (1.0 + 1e-8);
        assert!((p.data()[0] - (0.5 - want)).abs() < 1e-15);
        assert!((p.data()[1] - (-2.0 - want)).abs() < 1e-15);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = Tensor::vector(vec![0.25, 3.0]);
        let before = p.clone();
        let mut st = AdamState::new([&p]);
        for _ in 0..3 {
            run(&mut p, &Tensor::zeros(&[2]), &mut st, 1e-2);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn non_finite_gradient_is_skipped() {
        let mut p = Tensor::vector(vec![1.0]);
        let mut st = AdamState::new([&p]);
        let out = run(&mut p, &Tensor::vector(vec![f64::NAN]), &mut st, 1e-3);
        assert_eq!(out, StepOutcome::Skipped { param: "w".into() });
        assert_eq!(p.data(), &[1.0]);
        assert_eq!(st.step, 0);
    }

    #[test]
    fn deterministic_over_ten_steps() {
        let go = || {
            let mut p = Tensor::vector(vec![0.1, 0.2, 0.3]);
            let mut st = AdamState::new([&p]);
            for k in 0..10 {
                let g = p.map(|x| x * x - 0.1 * k as f64);
                run(&mut p, &g, &mut st, 1e-2);
            }
            p
        };
        assert_eq!(go(), go());
    }
}
