use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Diagonal shift applied (once) when a factorization stalls.
pub const JITTER: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    /// Lower-triangular factor, row-major `n×n`.
    pub l: Tensor,
    /// Whether [`JITTER`]·I had to be added to `A`.
    pub jittered: bool,
}

fn square_dim(a: &Tensor) -> Result<usize> {
    match a.shape() {
        [n, m] if n == m => Ok(*n),
        s => Err(Error::dim("cholesky", format!("expected a square matrix, got {s:?}"))),
    }
}

fn factor(a: &[f64], n: usize, shift: f64) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j] + shift;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Factorization { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Lower-triangular `L` with `L·Lᵀ = A` for symmetric positive definite `A`.
pub fn cholesky(a: &Tensor) -> Result<Tensor> {
    let n = square_dim(a)?;
    check_symmetric(a, n)?;
    Ok(Tensor::from_parts(vec![n, n], factor(a.data(), n, 0.0)?))
}

/// Like [`cholesky`], retrying once with `A + 1e-10·I` if the plain factorization fails.
pub fn cholesky_with_jitter(a: &Tensor) -> Result<CholeskyFactor> {
    let n = square_dim(a)?;
    check_symmetric(a, n)?;
    match factor(a.data(), n, 0.0) {
        Ok(l) => Ok(CholeskyFactor {
            l: Tensor::from_parts(vec![n, n], l),
            jittered: false,
        }),
        Err(Error::Factorization { .. }) => Ok(CholeskyFactor {
            l: Tensor::from_parts(vec![n, n], factor(a.data(), n, JITTER)?),
            jittered: true,
        }),
        Err(e) => Err(e),
    }
}

fn check_symmetric(a: &Tensor, n: usize) -> Result<()> {
    let d = a.data();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (d[i * n + j] - d[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::contract(
                    "cholesky",
                    format!("matrix is not symmetric at ({i},{j})"),
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruction_error(a: &Tensor, l: &Tensor) -> f64 {
        let llt = l.matmul(&l.transpose().unwrap()).unwrap();
        let diff: f64 = llt.data().iter().zip(a.data()).map(|(x, y)| (x - y).powi(2)).sum();
        diff.sqrt() / a.norm_l2()
    }

    fn matern15(points: &[f64], ell: f64) -> Tensor {
        let n = points.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let r = (points[i] - points[j]).abs() * 3f64.sqrt() / ell;
                k[i * n + j] = (1.0 + r) * (-r).exp();
            }
        }
        Tensor::new(vec![n, n], k).unwrap()
    }

    #[test]
    fn identity_factors_to_identity() {
        let eye = Tensor::new(vec![3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(cholesky(&eye).unwrap(), eye);
    }

    #[test]
    fn hand_computed_two_by_two() {
        let a = Tensor::new(vec![2, 2], vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let l = cholesky(&a).unwrap();
        let d = l.data();
        assert_eq!(d[0], 2.0);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 1.0);
        assert!((d[3] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn matern_reconstruction() {
        let pts: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let a = matern15(&pts, 0.2);
        let f = cholesky_with_jitter(&a).unwrap();
        assert!(reconstruction_error(&a, &f.l) < 1e-8);
    }

    #[test]
    fn spd_matrices_up_to_200() {
        for n in [1, 10, 80, 200] {
            let pts: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            let mut a = matern15(&pts, 0.3);
            for i in 0..n {
                a.data_mut()[i * n + i] += 0.1;
            }
            let l = cholesky(&a).unwrap();
            assert!(reconstruction_error(&a, &l) < 1e-8, "n={n}");
        }
    }

    #[test]
    fn indefinite_matrix_names_pivot() {
        let a = Tensor::new(vec![2, 2], vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        match cholesky_with_jitter(&a) {
            Err(Error::Factorization { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected factorization error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_is_rejected() {
        let a = Tensor::new(vec![2, 2], vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(cholesky(&a), Err(Error::Contract { .. })));
    }
}
