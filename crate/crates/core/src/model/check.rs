//! Gradient checks on small instances of each model.

use super::{DeepOnet, DeepOnetConfig, ModelKind, Ufo, UfoConfig};
use crate::autodiff::{grad_check, GradCheckOptions, GradCheckReport, Tape, Var};
use crate::error::{Error, Result};
use crate::nn::{Binder, Parameterized};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToyShape {
    /// Observation points (DeepONet sensors).
    pub n_input: usize,
    pub n_query: usize,
    /// Hidden and channel width of every sub-network.
    pub width: usize,
}

impl Default for ToyShape {
    fn default() -> Self {
        Self {
            n_input: 5,
            n_query: 3,
            width: 4,
        }
    }
}

fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_parts(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect())
}

/// `Σ out²`, or with `corrupt` a version whose backward pass sees only one
/// of the two factors.
fn square_loss<'t>(tape: &'t Tape, out: Var<'t>, corrupt: bool) -> Result<Var<'t>> {
    if corrupt {
        let frozen = tape.constant_shared(out.value());
        Ok(out.mul(frozen)?.sum_all())
    } else {
        Ok(out.square().sum_all())
    }
}

/// Finite-difference check of every parameter of a freshly initialized toy
/// model of `kind`, going through the single-sample (literal) forward path.
///
/// `corrupt` swaps in a loss with a wrong backward rule; the check must then
/// report a large error.
pub fn toy_grad_check(kind: ModelKind, shape: ToyShape, seed: u64, corrupt: bool) -> Result<GradCheckReport> {
    if shape.n_input == 0 || shape.n_query == 0 || shape.width == 0 {
        return Err(Error::contract("toy_grad_check", "toy sizes must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = shape.width;
    match kind {
        ModelKind::Ufo | ModelKind::UfoAblated => {
            let mut cfg = UfoConfig {
                d_lift: w,
                channels: w,
                omega_hidden: vec![w + 2],
                rho_hidden: vec![w + 1],
                phi_hidden: vec![w + 2],
                gamma_hidden: vec![w + 3],
                ..UfoConfig::new(1, 2, 2)
            };
            if kind == ModelKind::UfoAblated {
                cfg = cfg.ablated();
            }
            let ufo = Ufo::new(cfg, seed)?;
            let coords = uniform(&[shape.n_input, 2], 0.0, 1.0, &mut rng);
            let values = uniform(&[shape.n_input, 1], -1.0, 1.0, &mut rng);
            let queries = uniform(&[shape.n_query, 2], 0.0, 1.0, &mut rng);
            let (names, params) = unzip(&ufo);
            grad_check(
                |tape, p| {
                    let v = ufo.bind(&mut Binder::replay(tape, p));
                    let (a, b) = v.encode_literal(tape.constant(coords.clone()), tape.constant(values.clone()))?;
                    let phi = v.basis(tape.constant(queries.clone()))?;
                    square_loss(tape, v.couple_literal(phi, a, b)?, corrupt)
                },
                &params,
                GradCheckOptions {
                    names: Some(names),
                    ..Default::default()
                },
            )
        }
        ModelKind::Deeponet => {
            let cfg = DeepOnetConfig {
                branch_hidden: vec![w + 1],
                trunk_hidden: vec![w + 2],
                p: w,
                ..DeepOnetConfig::new(shape.n_input, 1, 2)
            };
            let net = DeepOnet::new(cfg, seed)?;
            let sensors = uniform(&[2, shape.n_input], -1.0, 1.0, &mut rng);
            let queries = uniform(&[shape.n_query, 2], 0.0, 1.0, &mut rng);
            let (names, params) = unzip(&net);
            grad_check(
                |tape, p| {
                    let v = net.bind(&mut Binder::replay(tape, p));
                    square_loss(tape, v.forward_sensors(tape.constant(sensors.clone()), &queries)?, corrupt)
                },
                &params,
                GradCheckOptions {
                    names: Some(names),
                    ..Default::default()
                },
            )
        }
    }
}

fn unzip(net: &impl Parameterized) -> (Vec<String>, Vec<Tensor>) {
    net.named_params().into_iter().map(|(n, t)| (n, t.clone())).unzip()
}
