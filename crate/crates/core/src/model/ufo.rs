//! The UFO operator.
//!
//! An input function observed at points `x'_i` is lifted channel-wise,
//! Fourier transformed along the observation axis, modulated by a learned
//! function of the observation coordinates and averaged into a complex
//! feature `z̄`. Two networks map its real and imaginary parts to `a` and
//! `b`. A coordinate network produces the basis `Φ(x)` at each query point,
//! and a phase network `γ` turns `[Φ(x), a, b]` into angles `α(x)` that mix
//! the two halves:
//!
//! ```text
//! u(x) = Σ_c Φ_c(x) (cos α_c(x) a_c + sin α_c(x) b_c)
//! ```
//!
//! The ablated variant drops `γ` and reads out `⟨Φ(x), a + b⟩`.
//!
//! Two evaluation routes exist. The literal route follows the definition
//! step by step on a single sample. The batched route used for training
//! exploits linearity of the lift and the transform (the spectrum of the raw
//! values is precomputed) and splits the first layer of `γ` so the query
//! half is shared across the batch. Tests check that both agree.

use super::{query_chunks, InputFunction};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::nn::{Activation, Binder, BoundLinear, BoundMlp, Linear, Mlp, Parameterized};
use crate::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UfoVariant {
    /// Phase-modulated coupling.
    Full,
    /// Fixed separable readout `⟨Φ, a + b⟩`.
    Ablated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UfoConfig {
    /// Dimension of the input function's values.
    pub d_f: usize,
    /// Dimension of input observation coordinates.
    pub d_coord_in: usize,
    /// Dimension of query coordinates.
    pub d_coord_out: usize,
    /// Lifting width.
    pub d_lift: usize,
    pub channels: usize,
    pub omega_hidden: Vec<usize>,
    pub rho_hidden: Vec<usize>,
    pub phi_hidden: Vec<usize>,
    pub gamma_hidden: Vec<usize>,
    pub activation: Activation,
    pub variant: UfoVariant,
}

impl UfoConfig {
    /// Default widths for the given input and coordinate dimensions.
    pub fn new(d_f: usize, d_coord_in: usize, d_coord_out: usize) -> Self {
        Self {
            d_f,
            d_coord_in,
            d_coord_out,
            d_lift: 32,
            channels: 64,
            omega_hidden: vec![64, 64],
            rho_hidden: vec![64, 64],
            phi_hidden: vec![64, 64, 64],
            gamma_hidden: vec![128],
            activation: Activation::Gelu,
            variant: UfoVariant::Full,
        }
    }

    pub fn ablated(mut self) -> Self {
        self.variant = UfoVariant::Ablated;
        self
    }

    /// Trainable parameter count implied by the layer shapes.
    pub fn param_count(&self) -> usize {
        let c = self.channels;
        let base = self.d_f * self.d_lift
            + self.d_lift
            + Mlp::count_for(self.d_coord_in, &self.omega_hidden, self.d_lift)
            + 2 * Mlp::count_for(self.d_lift, &self.rho_hidden, c)
            + Mlp::count_for(self.d_coord_out, &self.phi_hidden, c);
        match self.variant {
            UfoVariant::Full => base + self.gamma_param_count(),
            UfoVariant::Ablated => base,
        }
    }

    pub fn gamma_param_count(&self) -> usize {
        Mlp::count_for(3 * self.channels, &self.gamma_hidden, self.channels)
    }

    fn validate(&self) -> Result<()> {
        let dims = [self.d_f, self.d_coord_in, self.d_coord_out, self.d_lift, self.channels];
        if dims.contains(&0) {
            return Err(Error::contract("UfoConfig", "all widths must be at least 1"));
        }
        if self.variant == UfoVariant::Full && self.gamma_hidden.is_empty() {
            return Err(Error::contract("UfoConfig", "the phase network needs a hidden layer"));
        }
        Ok(())
    }
}

/// `Ψ(f) = a + i·b`, one entry per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralRep {
    pub a: Tensor,
    pub b: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ufo {
    pub config: UfoConfig,
    pub lift: Linear,
    pub omega: Mlp,
    pub rho_r: Mlp,
    pub rho_i: Mlp,
    pub phi: Mlp,
    /// Absent in the ablated variant.
    pub gamma: Option<Mlp>,
}

impl Ufo {
    pub fn new(config: UfoConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let act = config.activation;
        let c = config.channels;
        let lift = Linear::new(config.d_f, config.d_lift, &mut rng);
        let omega = Mlp::new(config.d_coord_in, &config.omega_hidden, config.d_lift, act, &mut rng)?;
        let rho_r = Mlp::new(config.d_lift, &config.rho_hidden, c, act, &mut rng)?;
        let rho_i = Mlp::new(config.d_lift, &config.rho_hidden, c, act, &mut rng)?;
        let phi = Mlp::new(config.d_coord_out, &config.phi_hidden, c, act, &mut rng)?;
        let gamma = match config.variant {
            UfoVariant::Full => Some(Mlp::new(3 * c, &config.gamma_hidden, c, act, &mut rng)?),
            UfoVariant::Ablated => None,
        };
        Ok(Self {
            config,
            lift,
            omega,
            rho_r,
            rho_i,
            phi,
            gamma,
        })
    }

    pub fn bind<'t>(&self, binder: &mut Binder<'t>) -> UfoVars<'t> {
        UfoVars {
            tape: binder.tape(),
            channels: self.config.channels,
            lift: self.lift.bind(binder),
            omega: self.omega.bind(binder),
            rho_r: self.rho_r.bind(binder),
            rho_i: self.rho_i.bind(binder),
            phi: self.phi.bind(binder),
            gamma: self.gamma.as_ref().map(|g| g.bind(binder)),
        }
    }

    fn frozen<'t>(&self, tape: &'t Tape) -> UfoVars<'t> {
        self.bind(&mut Binder::new(tape, false))
    }

    /// Spectral encoding of one input function, computed literally.
    pub fn spectral_encode(&self, coords: &Tensor, values: &Tensor) -> Result<SpectralRep> {
        if coords.ndim() != 2 || coords.rows() == 0 {
            return Err(Error::contract("spectral_encode", "need at least one observation"));
        }
        if !values.is_finite() {
            return Err(Error::contract("spectral_encode", "input values must be finite"));
        }
        let tape = Tape::new();
        let v = self.frozen(&tape);
        let (a, b) = v.encode_literal(tape.constant(coords.clone()), tape.constant(values.clone()))?;
        Ok(SpectralRep {
            a: (*a.value()).clone(),
            b: (*b.value()).clone(),
        })
    }

    /// `Φ(x)` for every query row, `[M, C]`.
    pub fn spatial_basis(&self, queries: &Tensor) -> Result<Tensor> {
        let tape = Tape::new();
        let v = self.frozen(&tape);
        Ok((*v.basis(tape.constant(queries.clone()))?.value()).clone())
    }

    /// Readout from basis rows `[M, C]` and a spectral representation, `[M]`.
    pub fn couple(&self, basis: &Tensor, rep: &SpectralRep) -> Result<Tensor> {
        let tape = Tape::new();
        let v = self.frozen(&tape);
        let out = v.couple_literal(
            tape.constant(basis.clone()),
            tape.constant(rep.a.clone()),
            tape.constant(rep.b.clone()),
        )?;
        Ok((*out.value()).clone())
    }

    /// Full literal forward pass for a single input function, `[M]`.
    pub fn forward(&self, coords: &Tensor, values: &Tensor, queries: &Tensor) -> Result<Tensor> {
        let rep = self.spectral_encode(coords, values)?;
        let basis = self.spatial_basis(queries)?;
        self.couple(&basis, &rep)
    }

    /// Batched-route prediction for one input, chunked over queries.
    pub fn predict(&self, input: &InputFunction, queries: &Tensor, chunk: usize) -> Result<Tensor> {
        let enc_tape = Tape::new();
        let v = self.frozen(&enc_tape);
        let (a, b) = v.encode_batch(&[input])?;
        let (a, b) = (a.value(), b.value());
        let mut out = Vec::with_capacity(queries.rows());
        for q in query_chunks(queries, chunk)? {
            let tape = Tape::new();
            let v = self.frozen(&tape);
            let phi = v.basis(tape.constant(q))?;
            let y = v.couple_batch(phi, tape.constant_shared(a.clone()), tape.constant_shared(b.clone()))?;
            out.extend_from_slice(y.value().data());
        }
        Tensor::new(vec![out.len()], out)
    }
}

impl Parameterized for Ufo {
    fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        out.push(("lift.weight".to_string(), &self.lift.weight));
        out.push(("lift.bias".to_string(), &self.lift.bias));
        self.omega.collect("omega", &mut out);
        self.rho_r.collect("rho_r", &mut out);
        self.rho_i.collect("rho_i", &mut out);
        self.phi.collect("phi", &mut out);
        if let Some(g) = &self.gamma {
            g.collect("gamma", &mut out);
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = vec![&mut self.lift.weight, &mut self.lift.bias];
        self.omega.collect_mut(&mut out);
        self.rho_r.collect_mut(&mut out);
        self.rho_i.collect_mut(&mut out);
        self.phi.collect_mut(&mut out);
        if let Some(g) = &mut self.gamma {
            g.collect_mut(&mut out);
        }
        out
    }
}

/// UFO parameters placed on a tape.
pub struct UfoVars<'t> {
    tape: &'t Tape,
    channels: usize,
    pub lift: BoundLinear<'t>,
    pub omega: BoundMlp<'t>,
    pub rho_r: BoundMlp<'t>,
    pub rho_i: BoundMlp<'t>,
    pub phi: BoundMlp<'t>,
    pub gamma: Option<BoundMlp<'t>>,
}

impl<'t> UfoVars<'t> {
    /// Literal encoder: `coords [N, d_in]`, `values [N, d_f]` → `(a, b)`, each `[C]`.
    pub fn encode_literal(&self, coords: Var<'t>, values: Var<'t>) -> Result<(Var<'t>, Var<'t>)> {
        let lifted = self.lift.forward(values)?;
        let zeros = self.tape.constant(Tensor::zeros(&lifted.shape()));
        let (fr, fi) = self.tape.dft_rows(lifted, zeros, false)?;
        let w = self.omega.forward(coords)?;
        let zr = w.mul(fr)?.mean(0)?;
        let zi = w.mul(fi)?.mean(0)?;
        let d = zr.shape()[0];
        let a = self.rho_r.forward(zr.reshape(&[1, d])?)?;
        let b = self.rho_i.forward(zi.reshape(&[1, d])?)?;
        Ok((a.reshape(&[self.channels])?, b.reshape(&[self.channels])?))
    }

    /// Batched encoder, `(a, b)` each `[B, C]`.
    ///
    /// Inputs sharing the same coordinate allocation share one evaluation of
    /// the modulation network.
    pub fn encode_batch(&self, inputs: &[&InputFunction]) -> Result<(Var<'t>, Var<'t>)> {
        let first = inputs
            .first()
            .ok_or_else(|| Error::contract("encode_batch", "empty batch"))?;
        let shared = inputs.iter().all(|i| Arc::ptr_eq(i.coords(), first.coords()));
        let (zr, zi) = if shared {
            self.modulated_mean(inputs)?
        } else {
            let mut rs = Vec::with_capacity(inputs.len());
            let mut is = Vec::with_capacity(inputs.len());
            for input in inputs {
                let (r, i) = self.modulated_mean(&[input])?;
                rs.push(r);
                is.push(i);
            }
            (self.tape.concat_rows(&rs)?, self.tape.concat_rows(&is)?)
        };
        Ok((self.rho_r.forward(zr)?, self.rho_i.forward(zi)?))
    }

    /// `z̄` for inputs with identical coordinates, via
    /// `DFT(V·W + 1·bᵀ) = DFT(V)·W + N·e₀·bᵀ`.
    fn modulated_mean(&self, inputs: &[&InputFunction]) -> Result<(Var<'t>, Var<'t>)> {
        let coords = inputs[0].coords();
        let n = coords.rows();
        let d_f = inputs[0].values().row_len();
        for i in inputs {
            if i.len() != n || i.values().row_len() != d_f {
                return Err(Error::dim("encode_batch", "inputs sharing coordinates differ in size"));
            }
        }
        let w = self.omega.forward(self.tape.constant_shared(coords.clone()))?;
        let bsz = inputs.len();
        let d = self.lift.bias.shape()[0];
        let mut zr: Option<Var<'t>> = None;
        let mut zi: Option<Var<'t>> = None;
        for k in 0..d_f {
            let column = |part: fn(&InputFunction) -> &Tensor| {
                let mut d = Vec::with_capacity(bsz * n);
                for i in inputs {
                    let t = part(i);
                    d.extend((0..n).map(|r| t.data()[r * d_f + k]));
                }
                Tensor::from_parts(vec![bsz, n], d)
            };
            let sr = self.tape.constant(column(|i| &i.spectrum().re));
            let si = self.tape.constant(column(|i| &i.spectrum().im));
            let wk = self.lift.weight.slice_rows(k, k + 1)?.reshape(&[d])?;
            let tr = sr.matmul(w)?.mul(wk)?;
            let ti = si.matmul(w)?.mul(wk)?;
            zr = Some(match zr {
                Some(z) => z.add(tr)?,
                None => tr,
            });
            zi = Some(match zi {
                Some(z) => z.add(ti)?,
                None => ti,
            });
        }
        let inv_n = 1.0 / n as f64;
        let dc = w.slice_rows(0, 1)?.reshape(&[d])?.mul(self.lift.bias)?;
        let zr = zr.expect("d_f >= 1").scale(inv_n).add(dc)?;
        let zi = zi.expect("d_f >= 1").scale(inv_n);
        Ok((zr, zi))
    }

    /// `Φ` at query rows `[M, d_out]` → `[M, C]`.
    pub fn basis(&self, queries: Var<'t>) -> Result<Var<'t>> {
        self.phi.forward(queries)
    }

    /// Literal readout for one sample: `phi [M, C]`, `a`, `b` each `[C]` → `[M]`.
    pub fn couple_literal(&self, phi: Var<'t>, a: Var<'t>, b: Var<'t>) -> Result<Var<'t>> {
        let c = self.channels;
        let shape = phi.shape();
        if shape.len() != 2 || shape[1] != c || a.shape() != [c] || b.shape() != [c] {
            return Err(Error::dim(
                "couple",
                format!("basis {:?}, a {:?}, b {:?} for C={c}", shape, a.shape(), b.shape()),
            ));
        }
        let m = shape[0];
        match &self.gamma {
            Some(gamma) => {
                let a_rows = a.expand(0, m)?;
                let b_rows = b.expand(0, m)?;
                let eta_t = self
                    .tape
                    .concat_rows(&[phi.transpose()?, a_rows.transpose()?, b_rows.transpose()?])?;
                let alpha = gamma.forward(eta_t.transpose()?)?;
                let ur = alpha.cos().mul(a)?.mul(phi)?;
                let ui = alpha.sin().mul(b)?.mul(phi)?;
                ur.add(ui)?.sum(1)
            }
            None => phi.mul(a.add(b)?)?.sum(1),
        }
    }

    /// Batched readout: `phi [M, C]` shared, `a`, `b` each `[B, C]` → `[B, M]`.
    pub fn couple_batch(&self, phi: Var<'t>, a: Var<'t>, b: Var<'t>) -> Result<Var<'t>> {
        let c = self.channels;
        let shape = phi.shape();
        let bsz = a.shape()[0];
        if shape.len() != 2 || shape[1] != c || a.shape() != [bsz, c] || b.shape() != [bsz, c] {
            return Err(Error::dim(
                "couple",
                format!("basis {:?}, a {:?}, b {:?} for C={c}", shape, a.shape(), b.shape()),
            ));
        }
        let m = shape[0];
        match &self.gamma {
            Some(gamma) => {
                let first = &gamma.layers[0];
                let w_phi = first.weight.slice_rows(0, c)?;
                let w_a = first.weight.slice_rows(c, 2 * c)?;
                let w_b = first.weight.slice_rows(2 * c, 3 * c)?;
                let p = phi.matmul(w_phi)?;
                let q = a.matmul(w_a)?.add(b.matmul(w_b)?)?.add(first.bias)?;
                let hidden = q.shape()[1];
                let pre = q.expand(1, m)?.add(p)?.reshape(&[bsz * m, hidden])?;
                let alpha = gamma.forward_from_first(pre)?.reshape(&[bsz, m, c])?;
                let ae = a.expand(1, m)?;
                let be = b.expand(1, m)?;
                let mixed = alpha.cos().mul(ae)?.add(alpha.sin().mul(be)?)?;
                mixed.mul(phi)?.sum(2)
            }
            None => a.add(b)?.matmul(phi.transpose()?),
        }
    }

    /// Batched forward pass, `[B, M]`.
    pub fn forward_batch(&self, inputs: &[&InputFunction], queries: &Tensor) -> Result<Var<'t>> {
        let (a, b) = self.encode_batch(inputs)?;
        let phi = self.basis(self.tape.constant(queries.clone()))?;
        self.couple_batch(phi, a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check, GradCheckOptions};
    use crate::numerics::fft::oracle::dft;
    use rand::{Rng, SeedableRng};

    fn toy_config() -> UfoConfig {
        UfoConfig {
            d_lift: 4,
            channels: 4,
            omega_hidden: vec![6],
            rho_hidden: vec![5],
            phi_hidden: vec![6],
            gamma_hidden: vec![7],
            ..UfoConfig::new(1, 2, 2)
        }
    }

    fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn default_parameter_counts() {
        let burgers = UfoConfig::new(1, 2, 2);
        assert_eq!(burgers.param_count(), 72_992);
        let ufo = Ufo::new(burgers.clone(), 0).unwrap();
        assert_eq!(ufo.param_count(), burgers.param_count());
        let abl = Ufo::new(burgers.clone().ablated(), 0).unwrap();
        assert_eq!(ufo.param_count() - abl.param_count(), burgers.gamma_param_count());
        assert_eq!(UfoConfig::new(1, 1, 2).param_count(), 72_928);
    }

    #[test]
    fn single_observation_gives_constant_imaginary_branch() {
        let ufo = Ufo::new(toy_config(), 3).unwrap();
        let c1 = Tensor::new(vec![1, 2], vec![0.2, 0.7]).unwrap();
        let c2 = Tensor::new(vec![1, 2], vec![0.9, 0.1]).unwrap();
        let r1 = ufo.spectral_encode(&c1, &Tensor::new(vec![1, 1], vec![3.0]).unwrap()).unwrap();
        let r2 = ufo.spectral_encode(&c2, &Tensor::new(vec![1, 1], vec![-1.0]).unwrap()).unwrap();
        assert_eq!(r1.b, r2.b);
        assert_ne!(r1.a, r2.a);
    }

    #[test]
    fn encoder_matches_direct_dft_oracle() {
        let ufo = Ufo::new(toy_config(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let coords = rand_tensor(&[n, 2], &mut rng);
        let values = rand_tensor(&[n, 1], &mut rng);
        let got = ufo.spectral_encode(&coords, &values).unwrap();

        // scalar re-implementation with an O(N²) DFT
        let d = 4;
        let lifted: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..d)
                    .map(|c| values.data()[i] * ufo.lift.weight.data()[c] + ufo.lift.bias.data()[c])
                    .collect()
            })
            .collect();
        let w = ufo.spatial_basis_with(&ufo.omega, &coords);
        let mut zr = vec![0.0; d];
        let mut zi = vec![0.0; d];
        for c in 0..d {
            let col: Vec<f64> = (0..n).map(|i| lifted[i][c]).collect();
            let (re, im) = dft(&col, &vec![0.0; n]);
            for i in 0..n {
                zr[c] += w.data()[i * d + c] * re[i] / n as f64;
                zi[c] += w.data()[i * d + c] * im[i] / n as f64;
            }
        }
        let a = ufo.spatial_basis_with(&ufo.rho_r, &Tensor::new(vec![1, d], zr).unwrap());
        let b = ufo.spatial_basis_with(&ufo.rho_i, &Tensor::new(vec![1, d], zi).unwrap());
        for (x, y) in got.a.data().iter().zip(a.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in got.b.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    impl Ufo {
        fn spatial_basis_with(&self, mlp: &Mlp, x: &Tensor) -> Tensor {
            let tape = Tape::new();
            let m = mlp.bind(&mut Binder::new(&tape, false));
            (*m.forward(tape.constant(x.clone())).unwrap().value()).clone()
        }
    }

    #[test]
    fn batched_route_matches_literal_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for variant in [UfoVariant::Full, UfoVariant::Ablated] {
            let cfg = UfoConfig { variant, ..toy_config() };
            let ufo = Ufo::new(cfg, 7).unwrap();
            let shared = Arc::new(rand_tensor(&[9, 2], &mut rng));
            let own = Arc::new(rand_tensor(&[5, 2], &mut rng));
            let inputs = [
                InputFunction::new(shared.clone(), rand_tensor(&[9, 1], &mut rng)).unwrap(),
                InputFunction::new(shared.clone(), rand_tensor(&[9, 1], &mut rng)).unwrap(),
                InputFunction::new(own, rand_tensor(&[5, 1], &mut rng)).unwrap(),
            ];
            let queries = rand_tensor(&[4, 2], &mut rng);
            let refs: Vec<&InputFunction> = inputs.iter().collect();
            for group in [&refs[..2], &refs[..]] {
                let tape = Tape::new();
                let v = ufo.frozen(&tape);
                let out = v.forward_batch(group, &queries).unwrap().value();
                for (bi, input) in group.iter().enumerate() {
                    let lit = ufo.forward(input.coords(), input.values(), &queries).unwrap();
                    for (j, y) in lit.data().iter().enumerate() {
                        let z = out.data()[bi * 4 + j];
                        assert!((y - z).abs() < 1e-12 * (1.0 + y.abs()), "{variant:?} {y} vs {z}");
                    }
                }
            }
        }
    }

    #[test]
    fn query_equivariance_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ufo = Ufo::new(toy_config(), 9).unwrap();
        let coords = rand_tensor(&[7, 2], &mut rng);
        let values = rand_tensor(&[7, 1], &mut rng);
        let queries = rand_tensor(&[5, 2], &mut rng);
        let all = ufo.forward(&coords, &values, &queries).unwrap();
        for m in 0..5 {
            let q = queries.select_rows(&[m]).unwrap();
            let one = ufo.forward(&coords, &values, &q).unwrap();
            assert_eq!(one.data()[0].to_bits(), all.data()[m].to_bits());
        }
    }

    #[test]
    fn chunked_prediction_matches_single_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ufo = Ufo::new(toy_config(), 11).unwrap();
        let input = InputFunction::new(Arc::new(rand_tensor(&[8, 2], &mut rng)), rand_tensor(&[8, 1], &mut rng)).unwrap();
        let queries = rand_tensor(&[23, 2], &mut rng);
        let whole = ufo.predict(&input, &queries, 1000).unwrap();
        let chunked = ufo.predict(&input, &queries, 5).unwrap();
        assert_eq!(whole, chunked);
    }

    #[test]
    fn full_pipeline_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ufo = Ufo::new(toy_config(), 13).unwrap();
        let coords = rand_tensor(&[5, 2], &mut rng);
        let values = rand_tensor(&[5, 1], &mut rng);
        let queries = rand_tensor(&[3, 2], &mut rng);
        let params: Vec<Tensor> = ufo.named_params().into_iter().map(|(_, t)| t.clone()).collect();
        let names = ufo.named_params().into_iter().map(|(n, _)| n).collect();
        let report = grad_check(
            |tape, p| {
                let v = ufo.bind(&mut Binder::replay(tape, p));
                let (a, b) = v.encode_literal(tape.constant(coords.clone()), tape.constant(values.clone()))?;
                let phi = v.basis(tape.constant(queries.clone()))?;
                Ok(v.couple_literal(phi, a, b)?.square().sum_all())
            },
            &params,
            GradCheckOptions {
                names: Some(names),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-5, "{report:?}");
    }
}
