//! Heat-type problem on `[0,1]×[0,1]` with a step initial condition
//! `𝟙_{x>s}`, solved by a frequency-scaled sine series
//!
//! ```text
//! u(x,t;s) = Σ_{n=1..N} a_n(s) sin(nκπx) exp(−β(nκπ)²t)
//! a_n(s)   = 2/(nκπ) · (cos(nκπs) − cos(nκπ))
//! ```

use super::{linspace, FunctionSample, Scenario};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct StepHeatConfig {
    pub kappa: f64,
    pub beta: f64,
    /// Series truncation.
    pub n_terms: usize,
    /// Input observation points on `[0, 1]`.
    pub n_input: usize,
    pub n_x: usize,
    pub n_t: usize,
}

impl Default for StepHeatConfig {
    fn default() -> Self {
        Self {
            kappa: 20.0,
            beta: 6.25e-4,
            n_terms: 64,
            n_input: 100,
            n_x: 150,
            n_t: 50,
        }
    }
}

/// Series coefficient `a_n(s)`.
pub fn coefficient(n: usize, s: f64, kappa: f64) -> f64 {
    let w = n as f64 * kappa * PI;
    2.0 / w * ((w * s).cos() - w.cos())
}

/// Truncated series solution at one point.
pub fn solution(x: f64, t: f64, s: f64, config: &StepHeatConfig) -> f64 {
    (1..=config.n_terms)
        .map(|n| {
            let w = n as f64 * config.kappa * PI;
            coefficient(n, s, config.kappa) * (w * x).sin() * (-config.beta * w * w * t).exp()
        })
        .sum()
}

/// Shared coordinate tensors for one configuration.
pub(crate) struct Grids {
    input: Arc<Tensor>,
    query: Arc<Tensor>,
}

impl Grids {
    pub(crate) fn new(config: &StepHeatConfig) -> Self {
        let xs = linspace(config.n_input);
        let input = Tensor::from_parts(vec![config.n_input, 1], xs);
        let (qx, qt) = (linspace(config.n_x), linspace(config.n_t));
        let mut q = Vec::with_capacity(2 * config.n_x * config.n_t);
        for t in &qt {
            for x in &qx {
                q.push(*x);
                q.push(*t);
            }
        }
        Self {
            input: Arc::new(input),
            query: Arc::new(Tensor::from_parts(vec![config.n_x * config.n_t, 2], q)),
        }
    }
}

/// One StepHeat sample for discontinuity location `s`.
pub fn stepheat_sample(s: f64, config: &StepHeatConfig) -> Result<FunctionSample> {
    sample_on(s, config, &Grids::new(config))
}

pub(crate) fn sample_on(s: f64, config: &StepHeatConfig, grids: &Grids) -> Result<FunctionSample> {
    if !(s > 0.0 && s < 1.0) || config.n_terms == 0 {
        return Err(Error::contract("stepheat_sample", format!("need s in (0,1) and N >= 1, got s={s}")));
    }
    let values: Vec<f64> = grids.input.data().iter().map(|&x| if x > s { 1.0 } else { 0.0 }).collect();
    let n_x = config.n_x;
    // sin(nκπx) and a_n do not depend on t; build them once per sample
    let xs = linspace(n_x);
    let ts = linspace(config.n_t);
    let coef: Vec<f64> = (1..=config.n_terms).map(|n| coefficient(n, s, config.kappa)).collect();
    let freq: Vec<f64> = (1..=config.n_terms).map(|n| n as f64 * config.kappa * PI).collect();
    let sines: Vec<f64> = xs
        .iter()
        .flat_map(|&x| freq.iter().map(move |w| (w * x).sin()))
        .collect();
    let mut targets = Vec::with_capacity(n_x * config.n_t);
    for &t in &ts {
        let decay: Vec<f64> = freq
            .iter()
            .zip(&coef)
            .map(|(w, a)| a * (-config.beta * w * w * t).exp())
            .collect();
        for i in 0..n_x {
            let row = &sines[i * config.n_terms..(i + 1) * config.n_terms];
            targets.push(row.iter().zip(&decay).map(|(s, d)| s * d).sum());
        }
    }
    let sample = FunctionSample {
        input_coords: grids.input.clone(),
        input_values: Tensor::from_parts(vec![config.n_input, 1], values),
        query_coords: grids.query.clone(),
        targets: Tensor::from_parts(vec![n_x * config.n_t], targets),
        scenario: Scenario::StepHeat { s },
        input_dims: vec![config.n_input],
        query_dims: vec![config.n_t, n_x],
    };
    sample.validate()?;
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_coefficient_vanishes_at_half() {
        // cos(10π) − cos(20π) = 0
        assert!(coefficient(1, 0.5, 20.0).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_boundaries_hold() {
        let cfg = StepHeatConfig::default();
        let smp = stepheat_sample(0.41, &cfg).unwrap();
        let nx = cfg.n_x;
        for j in 0..cfg.n_t {
            assert!(smp.targets.data()[j * nx].abs() < 1e-12);
            assert!(smp.targets.data()[j * nx + nx - 1].abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_decays_in_time() {
        let cfg = StepHeatConfig::default();
        let smp = stepheat_sample(0.32, &cfg).unwrap();
        let nx = cfg.n_x;
        let maxes: Vec<f64> = (0..cfg.n_t)
            .map(|j| smp.targets.data()[j * nx..(j + 1) * nx].iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        assert!(maxes[1..].windows(2).all(|w| w[1] <= w[0] + 1e-12), "{maxes:?}");
    }

    #[test]
    fn input_is_the_step() {
        let smp = stepheat_sample(0.5, &StepHeatConfig::default()).unwrap();
        assert_eq!(smp.input_values.data()[49], 0.0);
        assert_eq!(smp.input_values.data()[50], 1.0);
        assert!(stepheat_sample(1.2, &StepHeatConfig::default()).is_err());
    }
}
