//! Steady 2D Burgers with the manufactured solution
//! `u = x(1−x)y(1−y)·exp(λ(x−y))` and forcing
//! `f = u·u_x + u·u_y − ν(u_xx + u_yy)` from closed-form derivatives.

use super::{decimate_grid, grid_2d, FunctionSample, Scenario};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct BurgersConfig {
    pub nu: f64,
    /// Points per side of the shared input/query grid.
    pub n_side: usize,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self { nu: 0.05, n_side: 100 }
    }
}

pub fn solution(x: f64, y: f64, lambda: f64) -> f64 {
    x * (1.0 - x) * y * (1.0 - y) * (lambda * (x - y)).exp()
}

/// Forcing from the analytic derivatives of [`solution`].
pub fn forcing(x: f64, y: f64, lambda: f64, nu: f64) -> f64 {
    let (p, q) = (x * (1.0 - x), y * (1.0 - y));
    let (px, qy) = (1.0 - 2.0 * x, 1.0 - 2.0 * y);
    let g = p * q;
    let (gx, gy) = (px * q, p * qy);
    let (gxx, gyy) = (-2.0 * q, -2.0 * p);
    let e = (lambda * (x - y)).exp();
    let u = e * g;
    let ux = e * (gx + lambda * g);
    let uy = e * (gy - lambda * g);
    let uxx = e * (gxx + 2.0 * lambda * gx + lambda * lambda * g);
    let uyy = e * (gyy - 2.0 * lambda * gy + lambda * lambda * g);
    u * ux + u * uy - nu * (uxx + uyy)
}

/// One sample on the configured grid.
pub fn burgers_sample(lambda: f64, config: &BurgersConfig) -> Result<FunctionSample> {
    let grid = Arc::new(grid_2d(config.n_side, config.n_side));
    sample_on(lambda, config, &grid, &grid)
}

/// Sample with inputs on `input_grid` and targets on `query_grid`, both
/// square raster grids.
pub fn sample_on(
    lambda: f64,
    config: &BurgersConfig,
    input_grid: &Arc<Tensor>,
    query_grid: &Arc<Tensor>,
) -> Result<FunctionSample> {
    if !lambda.is_finite() || !(config.nu > 0.0) {
        return Err(Error::contract("burgers_sample", "need finite lambda and positive nu"));
    }
    let side = |t: &Tensor| (t.rows() as f64).sqrt().round() as usize;
    let values: Vec<f64> = (0..input_grid.rows())
        .map(|i| {
            let p = input_grid.row(i);
            forcing(p[0], p[1], lambda, config.nu)
        })
        .collect();
    let targets: Vec<f64> = (0..query_grid.rows())
        .map(|i| {
            let p = query_grid.row(i);
            solution(p[0], p[1], lambda)
        })
        .collect();
    let (ni, nq) = (side(input_grid), side(query_grid));
    let sample = FunctionSample {
        input_coords: input_grid.clone(),
        input_values: Tensor::new(vec![input_grid.rows(), 1], values)?,
        query_coords: query_grid.clone(),
        targets: Tensor::new(vec![query_grid.rows()], targets)?,
        scenario: Scenario::Burgers { lambda },
        input_dims: vec![ni, ni],
        query_dims: vec![nq, nq],
    };
    sample.validate()?;
    Ok(sample)
}

/// Same sample with targets regenerated analytically on an `n × n` query grid.
pub fn with_query_resolution(sample: &FunctionSample, n: usize) -> Result<FunctionSample> {
    let Scenario::Burgers { lambda } = sample.scenario else {
        return Err(Error::contract("with_query_resolution", "defined for Burgers samples only"));
    };
    let grid = grid_2d(n, n);
    let targets: Vec<f64> = (0..grid.rows())
        .map(|i| {
            let p = grid.row(i);
            solution(p[0], p[1], lambda)
        })
        .collect();
    Ok(FunctionSample {
        query_coords: Arc::new(grid),
        targets: Tensor::new(vec![n * n], targets)?,
        query_dims: vec![n, n],
        ..sample.clone()
    })
}

/// Same sample with input observations decimated to the nearest `n × n`
/// sub-grid (targets unchanged).
pub fn with_input_resolution(sample: &FunctionSample, n: usize) -> Result<FunctionSample> {
    let [ny, nx] = sample.input_dims[..] else {
        return Err(Error::contract("with_input_resolution", "inputs are not on a 2D grid"));
    };
    if n > ny || n > nx {
        return Err(Error::contract("with_input_resolution", format!("cannot refine {ny}x{nx} to {n}x{n}")));
    }
    let coords = decimate_grid(&sample.input_coords, ny, nx, n, n)?;
    let values = decimate_grid(&sample.input_values, ny, nx, n, n)?;
    Ok(FunctionSample {
        input_coords: if n == nx && n == ny {
            sample.input_coords.clone()
        } else {
            Arc::new(coords)
        },
        input_values: values,
        input_dims: vec![n, n],
        ..sample.clone()
    })
}
