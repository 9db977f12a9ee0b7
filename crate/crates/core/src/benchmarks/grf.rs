//! Helmholtz problems driven by Matérn-1.5 Gaussian random field forcing.
//!
//! The field is separable: `f = L_y · Z · L_xᵀ` with `Z` standard normal and
//! `L_x`, `L_y` Cholesky factors of 1D covariance matrices on the grid axes,
//! so `Cov(f) = K_y ⊗ K_x`. The solution of `u_xx + u_yy + k²u = f` with zero
//! boundary values is computed by finite differences on the fine grid, and
//! both fields are then decimated to the training grid.

use super::{grid_2d, linspace, nearest_indices, FunctionSample, Scenario};
use crate::error::{Error, Result};
use crate::numerics::{cholesky_with_jitter, HelmholtzSolver};
use crate::tensor::{gemm, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct GrfConfig {
    /// Points per side of the generation (and evaluation) grid.
    pub fine: usize,
    /// Points per side of the training grid.
    pub coarse: usize,
    /// Marginal standard deviation of the forcing.
    pub sigma: f64,
    /// Keep the fine grid instead of decimating.
    pub keep_fine: bool,
}

impl Default for GrfConfig {
    fn default() -> Self {
        Self {
            fine: 128,
            coarse: 50,
            sigma: 1.0,
            keep_fine: false,
        }
    }
}

/// `C(r) = σ²(1 + √3 r/ℓ) exp(−√3 r/ℓ)`.
pub fn matern15(r: f64, ell: f64, sigma: f64) -> f64 {
    let a = 3f64.sqrt() * r.abs() / ell;
    sigma * sigma * (1.0 + a) * (-a).exp()
}

/// Covariance matrix of [`matern15`] on the given points.
pub fn covariance(points: &[f64], ell: f64, sigma: f64) -> Tensor {
    let n = points.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = matern15(points[i] - points[j], ell, sigma);
        }
    }
    Tensor::from_parts(vec![n, n], k)
}

/// Cholesky factors for one correlation length.
#[derive(Clone, Debug)]
pub struct FieldFactors {
    pub ell: f64,
    /// Carries the variance σ².
    pub l_x: Tensor,
    pub l_y: Tensor,
}

/// Generator for one `(grid, k)` pair; the Helmholtz factorization is shared
/// by every sample.
pub struct Generator {
    config: GrfConfig,
    k: f64,
    solver: HelmholtzSolver,
    coords: Arc<Tensor>,
    select: Vec<usize>,
    dims: Vec<usize>,
}

impl Generator {
    pub fn new(config: &GrfConfig, k: f64) -> Result<Self> {
        if !(k > 0.0) || config.fine < 3 || config.coarse < 2 || config.coarse > config.fine {
            return Err(Error::contract("grf_helmholtz", "need k > 0 and 2 <= coarse <= fine"));
        }
        let m = config.fine;
        let h = 1.0 / (m - 1) as f64;
        let solver = HelmholtzSolver::new(m, k, h)?;
        let fine_axis = linspace(m);
        let (coords, select, dims) = if config.keep_fine {
            (grid_2d(m, m), (0..m * m).collect(), vec![m, m])
        } else {
            let idx = nearest_indices(m, config.coarse);
            let mut select = Vec::with_capacity(idx.len() * idx.len());
            let mut pts = Vec::with_capacity(2 * idx.len() * idx.len());
            for &j in &idx {
                for &i in &idx {
                    select.push(j * m + i);
                    pts.push(fine_axis[i]);
                    pts.push(fine_axis[j]);
                }
            }
            let c = idx.len();
            (Tensor::from_parts(vec![c * c, 2], pts), select, vec![c, c])
        };
        Ok(Self {
            config: config.clone(),
            k,
            solver,
            coords: Arc::new(coords),
            select,
            dims,
        })
    }

    pub fn field(&self, ell: f64) -> Result<FieldFactors> {
        if !(ell > 0.0) {
            return Err(Error::contract("grf_helmholtz", "correlation length must be positive"));
        }
        let axis = linspace(self.config.fine);
        let wrap = |e: Error| match e {
            Error::Factorization { pivot, value } => Error::Solver(format!(
                "Matérn covariance with ell={ell} is not positive definite on a {}-point axis \
                 (pivot {pivot}, value {value:e}); use a larger ell or a coarser grid",
                self.config.fine
            )),
            other => other,
        };
        let l_x = cholesky_with_jitter(&covariance(&axis, ell, self.config.sigma)).map_err(wrap)?.l;
        let l_y = cholesky_with_jitter(&covariance(&axis, ell, 1.0)).map_err(wrap)?.l;
        Ok(FieldFactors { ell, l_x, l_y })
    }

    /// Forcing on the fine grid (row index = y) for a given noise matrix.
    pub fn forcing(&self, field: &FieldFactors, z: &Tensor) -> Result<Tensor> {
        let m = self.config.fine;
        if z.shape() != [m, m] {
            return Err(Error::dim("grf_helmholtz", "noise must match the fine grid"));
        }
        let mut tmp = vec![0.0; m * m];
        gemm(m, m, m, field.l_y.data(), false, z.data(), false, &mut tmp, 0.0);
        let mut f = vec![0.0; m * m];
        gemm(m, m, m, &tmp, false, field.l_x.data(), true, &mut f, 0.0);
        Tensor::new(vec![m, m], f)
    }

    /// Standard normal noise for `seed`.
    pub fn noise(&self, seed: u64) -> Tensor {
        let m = self.config.fine;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..m * m).map(|_| StandardNormal.sample(&mut rng)).collect();
        Tensor::from_parts(vec![m, m], z)
    }

    /// Fine-grid forcing and solution for `seed`.
    pub fn fine_fields(&self, field: &FieldFactors, seed: u64) -> Result<(Tensor, Tensor)> {
        let f = self.forcing(field, &self.noise(seed))?;
        let u = self.solver.solve(&f)?;
        Ok((f, u))
    }

    pub fn sample(&self, field: &FieldFactors, seed: u64) -> Result<FunctionSample> {
        let (f, u) = self.fine_fields(field, seed)?;
        let n = self.select.len();
        let fv: Vec<f64> = self.select.iter().map(|&i| f.data()[i]).collect();
        let uv: Vec<f64> = self.select.iter().map(|&i| u.data()[i]).collect();
        let sample = FunctionSample {
            input_coords: self.coords.clone(),
            input_values: Tensor::new(vec![n, 1], fv)?,
            query_coords: self.coords.clone(),
            targets: Tensor::new(vec![n], uv)?,
            scenario: Scenario::GrfHelmholtz {
                ell: field.ell,
                k: self.k,
                seed,
            },
            input_dims: self.dims.clone(),
            query_dims: self.dims.clone(),
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn solver(&self) -> &HelmholtzSolver {
        &self.solver
    }
}

/// One GRF-Helmholtz sample.
pub fn grf_helmholtz_sample(ell: f64, k: f64, seed: u64, config: &GrfConfig) -> Result<FunctionSample> {
    let gen = Generator::new(config, k)?;
    let field = gen.field(ell)?;
    gen.sample(&field, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::helmholtz::grid_residual;

    #[test]
    fn zero_noise_gives_zero_fields() {
        let cfg = GrfConfig {
            fine: 40,
            coarse: 20,
            ..Default::default()
        };
        let gen = Generator::new(&cfg, 60.0).unwrap();
        let field = gen.field(0.2).unwrap();
        let f = gen.forcing(&field, &Tensor::zeros(&[40, 40])).unwrap();
        assert!(f.data().iter().all(|&v| v == 0.0));
        let u = gen.solver().solve(&f).unwrap();
        assert!(u.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fine_grid_residual() {
        let gen = Generator::new(&GrfConfig::default(), 60.0).unwrap();
        let field = gen.field(0.1).unwrap();
        let (f, u) = gen.fine_fields(&field, 11).unwrap();
        let h = 1.0 / 127.0;
        assert!(grid_residual(&u, &f, 60.0, h).unwrap() < 1e-8);
    }

    #[test]
    fn decimated_sample_uses_fine_coordinates() {
        let smp = grf_helmholtz_sample(0.2, 60.0, 3, &GrfConfig::default()).unwrap();
        assert_eq!(smp.input_values.numel(), 2500);
        assert_eq!(smp.query_dims, vec![50, 50]);
        let last = smp.input_coords.row(2499);
        assert_eq!(last, &[1.0, 1.0]);
        // every coordinate is a fine-grid node
        for &c in smp.input_coords.data() {
            let k = c * 127.0;
            assert!((k - k.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn pointwise_variance_matches_kernel() {
        let cfg = GrfConfig {
            fine: 32,
            coarse: 16,
            ..Default::default()
        };
        let gen = Generator::new(&cfg, 10.0).unwrap();
        let field = gen.field(0.2).unwrap();
        let (iy, ix) = (13, 19);
        let trials = 500;
        let mut s2 = 0.0;
        for seed in 0..trials {
            let f = gen.forcing(&field, &gen.noise(seed)).unwrap();
            s2 += f.data()[iy * 32 + ix].powi(2);
        }
        let var = s2 / trials as f64;
        assert!((var - 1.0).abs() < 0.15, "empirical variance {var}");
    }
}
