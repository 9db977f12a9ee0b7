use super::sparse::{BandedLu, SparseMatrix};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Pivots smaller than this fraction of the largest operator entry count as singular.
const PIVOT_RTOL: f64 = 1e-11;
const RESIDUAL_TOL: f64 = 1e-8;

/// Assembles `Δ_h + k²I` on the `(m−2)²` interior nodes of an `m×m` grid
/// with spacing `h`, using the 5-point stencil and zero Dirichlet boundary.
///
/// Interior unknowns are numbered with x varying fastest.
pub fn helmholtz_operator(m: usize, k: f64, h: f64) -> Result<SparseMatrix> {
    if m < 3 {
        return Err(Error::contract("helmholtz_operator", format!("grid size {m} has no interior")));
    }
    if !(h > 0.0 && h.is_finite() && k.is_finite()) {
        return Err(Error::contract("helmholtz_operator", "need finite k and positive h"));
    }
    let w = m - 2;
    let n = w * w;
    let inv_h2 = 1.0 / (h * h);
    let mut trips = Vec::with_capacity(5 * n);
    for j in 0..w {
        for i in 0..w {
            let row = j * w + i;
            trips.push((row, row, k * k - 4.0 * inv_h2));
            if i > 0 {
                trips.push((row, row - 1, inv_h2));
            }
            if i + 1 < w {
                trips.push((row, row + 1, inv_h2));
            }
            if j > 0 {
                trips.push((row, row - w, inv_h2));
            }
            if j + 1 < w {
                trips.push((row, row + w, inv_h2));
            }
        }
    }
    SparseMatrix::from_triplets(n, trips)
}

/// Factored Helmholtz operator for one `(m, k, h)`, reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct HelmholtzSolver {
    m: usize,
    operator: SparseMatrix,
    lu: BandedLu,
}

impl HelmholtzSolver {
    pub fn new(m: usize, k: f64, h: f64) -> Result<Self> {
        let operator = helmholtz_operator(m, k, h)?;
        let scale = (k * k - 4.0 / (h * h)).abs().max(1.0 / (h * h));
        let lu = BandedLu::factor(&operator, PIVOT_RTOL * scale).map_err(|e| match e {
            Error::Solver(msg) => Error::Solver(format!("m={m}, k={k}: {msg}")),
            other => other,
        })?;
        Ok(Self { m, operator, lu })
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn operator(&self) -> &SparseMatrix {
        &self.operator
    }

    /// Solves for `u` given forcing `f` on the full `m×m` grid (row index = y).
    ///
    /// Boundary values of `f` are ignored; the returned field is zero there.
    pub fn solve(&self, f_grid: &Tensor) -> Result<Tensor> {
        let m = self.m;
        if f_grid.shape() != [m, m] {
            return Err(Error::dim(
                "helmholtz_solve",
                format!("forcing shape {:?}, expected [{m}, {m}]", f_grid.shape()),
            ));
        }
        f_grid.ensure_finite("helmholtz forcing")?;
        let f_int = interior(f_grid.data(), m);
        let u_int = self.lu.solve(&f_int)?;
        let rel = relative_residual(&self.operator, &u_int, &f_int)?;
        if !(rel < RESIDUAL_TOL) {
            return Err(Error::Solver(format!(
                "relative residual {rel:e} exceeds {RESIDUAL_TOL:e}; the system is too close to \
                 singular at m={m}, change the grid size"
            )));
        }
        let mut u = vec![0.0; m * m];
        let w = m - 2;
        for j in 0..w {
            u[(j + 1) * m + 1..(j + 1) * m + 1 + w].copy_from_slice(&u_int[j * w..(j + 1) * w]);
        }
        Tensor::new(vec![m, m], u)
    }
}

/// One-shot solve of `u_xx + u_yy + k²u = f` with `u = 0` on the boundary.
pub fn helmholtz_solve(f_grid: &Tensor, k: f64, h: f64) -> Result<Tensor> {
    let m = match f_grid.shape() {
        [a, b] if a == b => *a,
        s => return Err(Error::dim("helmholtz_solve", format!("forcing must be square, got {s:?}"))),
    };
    HelmholtzSolver::new(m, k, h)?.solve(f_grid)
}

fn interior(full: &[f64], m: usize) -> Vec<f64> {
    let w = m - 2;
    let mut out = Vec::with_capacity(w * w);
    for j in 1..m - 1 {
        out.extend_from_slice(&full[j * m + 1..j * m + 1 + w]);
    }
    out
}

/// `‖A·u − f‖∞ / ‖f‖∞`, or the absolute residual when `f ≡ 0`.
pub fn relative_residual(a: &SparseMatrix, u: &[f64], f: &[f64]) -> Result<f64> {
    let au = a.matvec(u)?;
    let res = au.iter().zip(f).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let fnorm = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(if fnorm > 0.0 { res / fnorm } else { res })
}

/// Residual of a full-grid solution against a full-grid forcing (interior only).
pub fn grid_residual(u_grid: &Tensor, f_grid: &Tensor, k: f64, h: f64) -> Result<f64> {
    let m = u_grid.shape()[0];
    let a = helmholtz_operator(m, k, h)?;
    relative_residual(&a, &interior(u_grid.data(), m), &interior(f_grid.data(), m))
}
