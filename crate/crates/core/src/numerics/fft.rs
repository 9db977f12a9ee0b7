//! Discrete Fourier transforms of arbitrary length.
//!
//! Powers of two go through an iterative radix-2 kernel; every other length
//! is reduced to a power-of-two circular convolution with Bluestein's
//! chirp-z identity `2kn = k² + n² − (k−n)²`, so nothing is ever zero-padded
//! from the caller's point of view.
//!
//! All transforms here are unnormalized: the forward transform computes
//! `X[k] = Σ x[n]·exp(−2πi·kn/N)` and the "inverse" direction flips the sign of
//! the exponent without dividing by `N`. [`fft_inverse`] applies the `1/N`.

use crate::error::{Error, Result};
use crate::tensor::{ComplexPair, Tensor};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

/// Spectrum of a length-`N` signal, bins `0..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub coeffs: ComplexPair,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.coeffs.re.numel()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputed tables for one transform length.
#[derive(Debug)]
pub struct FftPlan {
    n: usize,
    kind: PlanKind,
}

#[derive(Debug)]
enum PlanKind {
    Identity,
    Radix2(Radix2),
    Bluestein(Bluestein),
}

#[derive(Debug)]
struct Radix2 {
    n: usize,
    // exp(-2πik/n) for k < n/2
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
    rev: Vec<usize>,
}

#[derive(Debug)]
struct Bluestein {
    inner: Radix2,
    // exp(-πi n²/N), n < N
    chirp_re: Vec<f64>,
    chirp_im: Vec<f64>,
    // forward transform of the conjugate chirp filter, length M
    filt_re: Vec<f64>,
    filt_im: Vec<f64>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let half = n / 2;
        let (tw_re, tw_im) = (0..half)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                (a.cos(), a.sin())
            })
            .unzip();
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Self { n, tw_re, tw_im, rev }
    }

    fn process(&self, re: &mut [f64], im: &mut [f64], inverse: bool) {
        let n = self.n;
        for i in 0..n {
            let j = self.rev[i];
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let sign = if inverse { -1.0 } else { 1.0 };
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for j in 0..half {
                    let wr = self.tw_re[j * step];
                    let wi = sign * self.tw_im[j * step];
                    let (a, b) = (start + j, start + j + half);
                    let xr = re[b] * wr - im[b] * wi;
                    let xi = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - xr;
                    im[b] = im[a] - xi;
                    re[a] += xr;
                    im[a] += xi;
                }
            }
            len <<= 1;
        }
    }
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // n² mod 2N keeps the angle argument small and exact.
        let two_n = 2 * n as u128;
        let (chirp_re, chirp_im): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|i| {
                let q = (i as u128 * i as u128) % two_n;
                let a = -PI * q as f64 / n as f64;
                (a.cos(), a.sin())
            })
            .unzip();
        let mut filt_re = vec![0.0; m];
        let mut filt_im = vec![0.0; m];
        for i in 0..n {
            filt_re[i] = chirp_re[i];
            filt_im[i] = -chirp_im[i];
            if i > 0 {
                filt_re[m - i] = chirp_re[i];
                filt_im[m - i] = -chirp_im[i];
            }
        }
        inner.process(&mut filt_re, &mut filt_im, false);
        Self {
            inner,
            chirp_re,
            chirp_im,
            filt_re,
            filt_im,
        }
    }

    fn process(&self, re: &mut [f64], im: &mut [f64], inverse: bool) {
        let n = self.chirp_re.len();
        let m = self.inner.n;
        // The inverse direction is the forward transform of the conjugate.
        let s = if inverse { -1.0 } else { 1.0 };
        let mut ar = vec![0.0; m];
        let mut ai = vec![0.0; m];
        for i in 0..n {
            let (xr, xi) = (re[i], s * im[i]);
            let (cr, ci) = (self.chirp_re[i], self.chirp_im[i]);
            ar[i] = xr * cr - xi * ci;
            ai[i] = xr * ci + xi * cr;
        }
        self.inner.process(&mut ar, &mut ai, false);
        for i in 0..m {
            let (xr, xi) = (ar[i], ai[i]);
            let (fr, fi) = (self.filt_re[i], self.filt_im[i]);
            ar[i] = xr * fr - xi * fi;
            ai[i] = xr * fi + xi * fr;
        }
        self.inner.process(&mut ar, &mut ai, true);
        let scale = 1.0 / m as f64;
        for k in 0..n {
            let (xr, xi) = (ar[k] * scale, ai[k] * scale);
            let (cr, ci) = (self.chirp_re[k], self.chirp_im[k]);
            re[k] = xr * cr - xi * ci;
            im[k] = s * (xr * ci + xi * cr);
        }
    }
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self> {
        let kind = match n {
            0 => return Err(Error::contract("FftPlan::new", "transform length must be >= 1")),
            1 => PlanKind::Identity,
            n if n.is_power_of_two() => PlanKind::Radix2(Radix2::new(n)),
            n => PlanKind::Bluestein(Bluestein::new(n)),
        };
        Ok(Self { n, kind })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place unnormalized transform; `inverse` selects the `+i` exponent.
    pub fn process(&self, re: &mut [f64], im: &mut [f64], inverse: bool) {
        assert_eq!(re.len(), self.n);
        assert_eq!(im.len(), self.n);
        match &self.kind {
            PlanKind::Identity => {}
            PlanKind::Radix2(p) => p.process(re, im, inverse),
            PlanKind::Bluestein(p) => p.process(re, im, inverse),
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<FftPlan>>> = RefCell::new(HashMap::new());
}

/// Returns a cached plan for length `n` (per thread).
pub fn plan(n: usize) -> Result<Rc<FftPlan>> {
    if let Some(p) = PLANS.with(|c| c.borrow().get(&n).cloned()) {
        return Ok(p);
    }
    let p = Rc::new(FftPlan::new(n)?);
    PLANS.with(|c| c.borrow_mut().insert(n, p.clone()));
    Ok(p)
}

/// Transforms every column of a row-major `rows × cols` complex array along
/// the row axis, in place.
pub fn fft_columns(re: &mut [f64], im: &mut [f64], rows: usize, cols: usize, inverse: bool) -> Result<()> {
    if re.len() != rows * cols || im.len() != rows * cols {
        return Err(Error::dim("fft_columns", "buffer length is not rows*cols"));
    }
    let p = plan(rows)?;
    if cols == 1 {
        p.process(re, im, inverse);
        return Ok(());
    }
    let mut br = vec![0.0; rows];
    let mut bi = vec![0.0; rows];
    for c in 0..cols {
        for r in 0..rows {
            br[r] = re[r * cols + c];
            bi[r] = im[r * cols + c];
        }
        p.process(&mut br, &mut bi, inverse);
        for r in 0..rows {
            re[r * cols + c] = br[r];
            im[r * cols + c] = bi[r];
        }
    }
    Ok(())
}

/// Unnormalized multi-dimensional transform over a row-major grid of shape `dims`.
pub fn fft_nd(re: &mut [f64], im: &mut [f64], dims: &[usize], inverse: bool) -> Result<()> {
    let total: usize = dims.iter().product();
    if re.len() != total || im.len() != total || dims.is_empty() {
        return Err(Error::dim("fft_nd", format!("grid {dims:?} vs buffer {}", re.len())));
    }
    for (axis, &n) in dims.iter().enumerate() {
        let inner: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let p = plan(n)?;
        let mut br = vec![0.0; n];
        let mut bi = vec![0.0; n];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * n * inner + i;
                for k in 0..n {
                    br[k] = re[base + k * inner];
                    bi[k] = im[base + k * inner];
                }
                p.process(&mut br, &mut bi, inverse);
                for k in 0..n {
                    re[base + k * inner] = br[k];
                    im[base + k * inner] = bi[k];
                }
            }
        }
    }
    Ok(())
}

fn signal_len(signal: &ComplexPair, op: &'static str) -> Result<usize> {
    if signal.shape().len() != 1 {
        return Err(Error::dim(op, format!("expected a 1-D signal, got {:?}", signal.shape())));
    }
    Ok(signal.shape()[0])
}

/// Forward DFT of a 1-D complex signal.
pub fn fft_forward(signal: &ComplexPair) -> Result<Spectrum> {
    let n = signal_len(signal, "fft_forward")?;
    let mut re = signal.re.data().to_vec();
    let mut im = signal.im.data().to_vec();
    plan(n)?.process(&mut re, &mut im, false);
    Ok(Spectrum {
        coeffs: ComplexPair {
            re: Tensor::vector(re),
            im: Tensor::vector(im),
        },
    })
}

/// Inverse of [`fft_forward`], including the `1/N` factor.
pub fn fft_inverse(spec: &Spectrum) -> Result<ComplexPair> {
    let n = signal_len(&spec.coeffs, "fft_inverse")?;
    let mut re = spec.coeffs.re.data().to_vec();
    let mut im = spec.coeffs.im.data().to_vec();
    plan(n)?.process(&mut re, &mut im, true);
    let s = 1.0 / n as f64;
    re.iter_mut().chain(im.iter_mut()).for_each(|v| *v *= s);
    Ok(ComplexPair {
        re: Tensor::vector(re),
        im: Tensor::vector(im),
    })
}

#[cfg(test)]
pub(crate) mod oracle {
    use std::f64::consts::PI;

    /// O(N²) reference DFT, forward sign.
    pub fn dft(re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = re.len();
        let mut out_re = vec![0.0; n];
        let mut out_im = vec![0.0; n];
        for k in 0..n {
            for j in 0..n {
                let a = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                let (c, s) = (a.cos(), a.sin());
                out_re[k] += re[j] * c - im[j] * s;
                out_im[k] += re[j] * s + im[j] * c;
            }
        }
        (out_re, out_im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> ComplexPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let re = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let im = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        ComplexPair::new(Tensor::vector(re), Tensor::vector(im)).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_length_is_rejected() {
        assert!(FftPlan::new(0).is_err());
    }

    #[test]
    fn constant_signal_is_dc_only() {
        let c = 2.5;
        let s = fft_forward(&ComplexPair::from_real(Tensor::vector(vec![c; 4]))).unwrap();
        assert_eq!(s.coeffs.re.data()[0], 4.0 * c);
        for k in 1..4 {
            assert!(s.coeffs.re.data()[k].abs() < 1e-15);
            assert!(s.coeffs.im.data()[k].abs() < 1e-15);
        }
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let s = fft_forward(&ComplexPair::from_real(Tensor::vector(vec![1.0, 0.0, 0.0, 0.0]))).unwrap();
        assert_eq!(s.coeffs.re.data(), &[1.0; 4]);
        assert_eq!(s.coeffs.im.data(), &[0.0; 4]);
    }

    #[test]
    fn inverse_of_scaled_dc_is_ones() {
        let n = 6;
        let mut re = vec![0.0; n];
        re[0] = n as f64;
        let spec = Spectrum {
            coeffs: ComplexPair::from_real(Tensor::vector(re)),
        };
        let x = fft_inverse(&spec).unwrap();
        assert!(max_diff(x.re.data(), &[1.0; 6]) < 1e-15);
        assert!(x.im.max_abs() < 1e-15);
    }

    #[test]
    fn matches_direct_dft() {
        for n in [1, 2, 3, 5, 7, 8, 12, 17, 64, 100] {
            let x = random_signal(n, n as u64);
            let s = fft_forward(&x).unwrap();
            let (dr, di) = oracle::dft(x.re.data(), x.im.data());
            assert!(max_diff(s.coeffs.re.data(), &dr) < 1e-11, "n={n}");
            assert!(max_diff(s.coeffs.im.data(), &di) < 1e-11, "n={n}");
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for n in [2, 7, 100, 2500] {
            let x = random_signal(n, 11);
            let s = fft_forward(&x).unwrap();
            let y = fft_inverse(&s).unwrap();
            assert!(max_diff(x.re.data(), y.re.data()) < 1e-12, "n={n}");
            assert!(max_diff(x.im.data(), y.im.data()) < 1e-12, "n={n}");
            let e_time: f64 = x.re.data().iter().chain(x.im.data()).map(|v| v * v).sum();
            let e_freq: f64 = s.coeffs.re.data().iter().chain(s.coeffs.im.data()).map(|v| v * v).sum();
            assert!((e_time - e_freq / n as f64).abs() < 1e-10 * e_time.max(1.0), "n={n}");
        }
    }

    #[test]
    fn real_input_is_hermitian() {
        let n = 9;
        let x = ComplexPair::from_real(random_signal(n, 3).re);
        let s = fft_forward(&x).unwrap();
        let (re, im) = (s.coeffs.re.data(), s.coeffs.im.data());
        for k in 1..n {
            assert!((re[k] - re[n - k]).abs() < 1e-12);
            assert!((im[k] + im[n - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn nd_transform_matches_separable_direct_dft() {
        let dims = [3, 5];
        let x = random_signal(15, 5);
        let (mut re, mut im) = (x.re.data().to_vec(), x.im.data().to_vec());
        fft_nd(&mut re, &mut im, &dims, false).unwrap();
        // rows, then columns, by the direct oracle
        let (mut er, mut ei) = (x.re.data().to_vec(), x.im.data().to_vec());
        for r in 0..3 {
            let (a, b) = oracle::dft(&er[r * 5..r * 5 + 5], &ei[r * 5..r * 5 + 5]);
            er[r * 5..r * 5 + 5].copy_from_slice(&a);
            ei[r * 5..r * 5 + 5].copy_from_slice(&b);
        }
        for c in 0..5 {
            let col_r: Vec<f64> = (0..3).map(|r| er[r * 5 + c]).collect();
            let col_i: Vec<f64> = (0..3).map(|r| ei[r * 5 + c]).collect();
            let (a, b) = oracle::dft(&col_r, &col_i);
            for r in 0..3 {
                er[r * 5 + c] = a[r];
                ei[r * 5 + c] = b[r];
            }
        }
        assert!(max_diff(&re, &er) < 1e-12);
        assert!(max_diff(&im, &ei) < 1e-12);
    }

    proptest! {
        #[test]
        fn linearity(n in 1usize..40, seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let x = random_signal(n, seed);
            let y = random_signal(n, seed + 7919);
            let comb = ComplexPair::new(
                Tensor::vector(x.re.data().iter().zip(y.re.data()).map(|(p, q)| a * p + b * q).collect()),
                Tensor::vector(x.im.data().iter().zip(y.im.data()).map(|(p, q)| a * p + b * q).collect()),
            ).unwrap();
            let (fx, fy, fc) = (fft_forward(&x).unwrap(), fft_forward(&y).unwrap(), fft_forward(&comb).unwrap());
            for k in 0..n {
                let er = a * fx.coeffs.re.data()[k] + b * fy.coeffs.re.data()[k];
                let ei = a * fx.coeffs.im.data()[k] + b * fy.coeffs.im.data()[k];
                prop_assert!((fc.coeffs.re.data()[k] - er).abs() < 1e-10);
                prop_assert!((fc.coeffs.im.data()[k] - ei).abs() < 1e-10);
            }
        }

        // <F x, y> == <x, F^H y>: the adjoint used as the backward rule.
        #[test]
        fn adjoint_identity(n in 1usize..40, seed in 0u64..1000) {
            let x = random_signal(n, seed);
            let y = random_signal(n, seed + 1);
            let fx = fft_forward(&x).unwrap();
            let (mut ar, mut ai) = (y.re.data().to_vec(), y.im.data().to_vec());
            plan(n).unwrap().process(&mut ar, &mut ai, true);
            // Re<u, v> = Σ ur·vr + ui·vi
            let lhs: f64 = (0..n).map(|k| fx.coeffs.re.data()[k] * y.re.data()[k] + fx.coeffs.im.data()[k] * y.im.data()[k]).sum();
            let rhs: f64 = (0..n).map(|k| x.re.data()[k] * ar[k] + x.im.data()[k] * ai[k]).sum();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        }
    }
}
