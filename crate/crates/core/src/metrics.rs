//! Field-level error metrics.
//!
//! [`barron_rel`] is a frequency-weighted spectral norm ratio
//! `Σ_k w(k)|ĝ(k)| / Σ_k w(k)|r̂(k)|` with `g = pred − ref`, unnormalized DFT
//! bins mapped to signed wavenumbers and `w(k) = 1 + ‖k‖₂`.

use crate::benchmarks::BenchmarkId;
use crate::error::{Error, Result};
use crate::numerics::fft::fft_nd;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

/// One evaluated sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub benchmark: String,
    pub scenario: String,
    pub model: String,
    pub seed: u64,
    pub rel_l2: f64,
    pub barron_rel: f64,
    pub n_input: usize,
    pub n_query: usize,
    pub wall_ms: f64,
    /// Set when the model could not be evaluated on the sample.
    #[serde(skip)]
    pub failure: Option<String>,
}

impl MetricReport {
    pub fn benchmark_id(&self) -> Result<BenchmarkId> {
        self.benchmark.parse()
    }
}

fn same_len(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.numel() != b.numel() {
        return Err(Error::dim(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// `‖pred − ref‖₂ / ‖ref‖₂` over all values.
pub fn rel_l2(pred: &Tensor, reference: &Tensor) -> Result<f64> {
    same_len("rel_l2", pred, reference)?;
    let den = reference.norm_l2();
    if !(den > 0.0) {
        return Err(Error::contract("rel_l2", "reference field has zero norm"));
    }
    let num = pred
        .data()
        .iter()
        .zip(reference.data())
        .map(|(p, r)| (p - r) * (p - r))
        .sum::<f64>()
        .sqrt();
    Ok(num / den)
}

/// Signed wavenumber of DFT bin `j` on an axis of length `n`.
fn signed_bin(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// `Σ_k (1 + ‖k‖₂)·|ĝ(k)|` of a real field on a row-major grid of shape `dims`.
pub fn barron_norm(field: &[f64], dims: &[usize]) -> Result<f64> {
    let mut re = field.to_vec();
    let mut im = vec![0.0; field.len()];
    fft_nd(&mut re, &mut im, dims, false)?;
    let mut total = 0.0;
    let mut idx = vec![0usize; dims.len()];
    for (r, i) in re.iter().zip(&im) {
        let k2: f64 = idx
            .iter()
            .zip(dims)
            .map(|(&j, &n)| signed_bin(j, n).powi(2))
            .sum();
        total += (1.0 + k2.sqrt()) * r.hypot(*i);
        // advance the multi-index, last axis fastest
        for a in (0..dims.len()).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(total)
}

/// Barron-weighted relative error on a uniform grid (`dims` slowest axis first).
pub fn barron_rel(pred: &Tensor, reference: &Tensor, dims: &[usize]) -> Result<f64> {
    same_len("barron_rel", pred, reference)?;
    if dims.iter().product::<usize>() != reference.numel() {
        return Err(Error::dim(
            "barron_rel",
            format!("grid {dims:?} does not hold {} values", reference.numel()),
        ));
    }
    let den = barron_norm(reference.data(), dims)?;
    if !(den > 0.0) {
        return Err(Error::contract("barron_rel", "reference field has zero Barron norm"));
    }
    let diff: Vec<f64> = pred.data().iter().zip(reference.data()).map(|(p, r)| p - r).collect();
    Ok(barron_norm(&diff, dims)? / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn field(dims: &[usize], f: impl Fn(usize, usize) -> f64) -> Tensor {
        let (ny, nx) = (dims[0], dims[1]);
        let d = (0..ny).flat_map(|j| (0..nx).map(move |i| (j, i))).map(|(j, i)| f(j, i)).collect();
        Tensor::new(vec![ny * nx], d).unwrap()
    }

    #[test]
    fn rel_l2_cases() {
        let r = Tensor::vector(vec![1.0, -2.0, 3.0]);
        assert_eq!(rel_l2(&r, &r).unwrap(), 0.0);
        assert_eq!(rel_l2(&Tensor::zeros(&[3]), &r).unwrap(), 1.0);
        assert!((rel_l2(&r.map(|v| 1.1 * v), &r).unwrap() - 0.1).abs() < 1e-12);
        assert!(rel_l2(&r, &Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn barron_scaling_and_identity() {
        let dims = [12, 10];
        let r = field(&dims, |j, i| ((j * 7 + i * 3) % 5) as f64 - 1.7);
        assert_eq!(barron_rel(&r, &r, &dims).unwrap(), 0.0);
        for c in [0.3, 1.0, 2.5] {
            let v = barron_rel(&r.map(|x| c * x), &r, &dims).unwrap();
            assert!((v - (c - 1.0f64).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn high_frequency_perturbation_weighs_more() {
        let dims = [16, 16];
        let r = field(&dims, |j, i| (PI * i as f64 / 15.0).sin() * (PI * j as f64 / 15.0).sin());
        let eps = 1e-2;
        // lowest nonzero x-mode vs the Nyquist x-mode, same amplitude
        let low = field(&dims, |j, i| r.data()[j * 16 + i] + eps * (2.0 * PI * i as f64 / 16.0).cos());
        let high = field(&dims, |j, i| r.data()[j * 16 + i] + eps * if i % 2 == 0 { 1.0 } else { -1.0 });
        let (bl, bh) = (barron_rel(&low, &r, &dims).unwrap(), barron_rel(&high, &r, &dims).unwrap());
        assert!(bh > bl, "{bh} vs {bl}");
    }

    #[test]
    fn barron_matches_direct_sum() {
        let dims = [5, 6];
        let g: Vec<f64> = (0..30).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let mut direct = 0.0;
        for ky in 0..5 {
            for kx in 0..6 {
                let (mut re, mut im) = (0.0, 0.0);
                for y in 0..5 {
                    for x in 0..6 {
                        let a = -2.0 * PI * (ky as f64 * y as f64 / 5.0 + kx as f64 * x as f64 / 6.0);
                        re += g[y * 6 + x] * a.cos();
                        im += g[y * 6 + x] * a.sin();
                    }
                }
                let sy = if ky <= 2 { ky as f64 } else { ky as f64 - 5.0 };
                let sx = if kx <= 3 { kx as f64 } else { kx as f64 - 6.0 };
                direct += (1.0 + (sx * sx + sy * sy).sqrt()) * (re * re + im * im).sqrt();
            }
        }
        assert!((barron_norm(&g, &dims).unwrap() - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn transposing_fields_and_dims_together() {
        let dims = [7, 9];
        let r = field(&dims, |j, i| (i as f64 * 0.3).sin() + j as f64 * 0.1);
        let p = field(&dims, |j, i| r.data()[j * 9 + i] + 0.05 * ((i * j) % 3) as f64);
        let tr = |t: &Tensor| Tensor::new(vec![63], (0..9).flat_map(|i| (0..7).map(move |j| t.data()[j * 9 + i])).collect()).unwrap();
        let a = barron_rel(&p, &r, &dims).unwrap();
        let b = barron_rel(&tr(&p), &tr(&r), &[9, 7]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rel_l2_matches_scalar_loop(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..60)) {
            let (p, r): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assume!(r.iter().any(|x| x.abs() > 1e-3));
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..p.len() {
                num += (p[i] - r[i]) * (p[i] - r[i]);
                den += r[i] * r[i];
            }
            let want = (num / den).sqrt();
            let got = rel_l2(&Tensor::vector(p), &Tensor::vector(r)).unwrap();
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        }

        #[test]
        fn barron_triangle(a in prop::collection::vec(-1.0f64..1.0, 24), b in prop::collection::vec(-1.0f64..1.0, 24)) {
            let dims = [4, 6];
            let s: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let (na, nb, ns) = (barron_norm(&a, &dims).unwrap(), barron_norm(&b, &dims).unwrap(), barron_norm(&s, &dims).unwrap());
            prop_assert!(ns <= na + nb + 1e-9);
        }
    }
}
