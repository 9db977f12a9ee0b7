//! Globally shifted Helmholtz pair on the unit square:
//!
//! ```text
//! u(x,y;δ) = (x+y) sin(10πx) sin(10πy) + δ
//! f(x,y;δ) = 2π(sin πx cos πy + cos πx sin πy) + (1−2π²)(x+y) sin πx sin πy + δ
//! ```
//!
//! The forcing is evaluated exactly as written; the pair is used purely as
//! supervised data. UFO observes `f` at scattered points drawn uniformly per
//! sample and kept in draw order; the fixed-sensor baseline observes it on a
//! regular grid.

use super::{grid_2d, FunctionSample, Scenario};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::Rng;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputLayout {
    /// Independent uniform points, redrawn for every sample.
    Random,
    /// Regular grid shared by every sample.
    Regular,
}

impl InputLayout {
    pub fn as_str(self) -> &'static str {
        match self {
            InputLayout::Random => "random",
            InputLayout::Regular => "regular",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaHelmholtzConfig {
    pub layout: InputLayout,
    /// Number of input observations (a perfect square for the regular layout).
    pub n_input: usize,
    pub n_query_side: usize,
}

impl Default for DeltaHelmholtzConfig {
    fn default() -> Self {
        Self {
            layout: InputLayout::Random,
            n_input: 2500,
            n_query_side: 60,
        }
    }
}

impl DeltaHelmholtzConfig {
    pub(crate) fn regular_side(&self) -> usize {
        (self.n_input as f64).sqrt().round() as usize
    }
}

pub fn solution(x: f64, y: f64, delta: f64) -> f64 {
    (x + y) * (10.0 * PI * x).sin() * (10.0 * PI * y).sin() + delta
}

pub fn forcing(x: f64, y: f64, delta: f64) -> f64 {
    let (sx, cx) = (PI * x).sin_cos();
    let (sy, cy) = (PI * y).sin_cos();
    2.0 * PI * (sx * cy + cx * sy) + (1.0 - 2.0 * PI * PI) * (x + y) * sx * sy + delta
}

/// One sample for shift `delta`; scattered input locations come from `rng`.
pub fn delta_helmholtz_sample<R: Rng + ?Sized>(
    delta: f64,
    config: &DeltaHelmholtzConfig,
    rng: &mut R,
) -> Result<FunctionSample> {
    let query = Arc::new(grid_2d(config.n_query_side, config.n_query_side));
    let regular = Arc::new(grid_2d(config.regular_side(), config.regular_side()));
    sample_with(delta, config, rng, &query, &regular)
}

pub(crate) fn sample_with<R: Rng + ?Sized>(
    delta: f64,
    config: &DeltaHelmholtzConfig,
    rng: &mut R,
    query: &Arc<Tensor>,
    regular: &Arc<Tensor>,
) -> Result<FunctionSample> {
    if !delta.is_finite() {
        return Err(Error::contract("delta_helmholtz_sample", "delta must be finite"));
    }
    let (coords, input_dims) = match config.layout {
        InputLayout::Random => {
            let pts: Vec<f64> = (0..2 * config.n_input).map(|_| rng.random::<f64>()).collect();
            (Arc::new(Tensor::new(vec![config.n_input, 2], pts)?), Vec::new())
        }
        InputLayout::Regular => {
            let side = config.regular_side();
            if side * side != config.n_input {
                return Err(Error::contract(
                    "delta_helmholtz_sample",
                    format!("regular layout needs a square input count, got {}", config.n_input),
                ));
            }
            (regular.clone(), vec![side, side])
        }
    };
    let values: Vec<f64> = (0..coords.rows())
        .map(|i| {
            let p = coords.row(i);
            forcing(p[0], p[1], delta)
        })
        .collect();
    let targets: Vec<f64> = (0..query.rows())
        .map(|i| {
            let p = query.row(i);
            solution(p[0], p[1], delta)
        })
        .collect();
    let n = coords.rows();
    let sample = FunctionSample {
        input_coords: coords,
        input_values: Tensor::new(vec![n, 1], values)?,
        query_coords: query.clone(),
        targets: Tensor::new(vec![query.rows()], targets)?,
        scenario: Scenario::DeltaHelmholtz { delta },
        input_dims,
        query_dims: vec![config.n_query_side, config.n_query_side],
    };
    sample.validate()?;
    Ok(sample)
}
