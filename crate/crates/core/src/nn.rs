//! Dense layers and multilayer perceptrons, stored as plain tensors and
//! bound to a [`Tape`] for each forward pass.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// GELU, tanh approximation.
    Gelu,
    Tanh,
}

impl Activation {
    fn apply<'t>(self, x: Var<'t>) -> Var<'t> {
        match self {
            Activation::Gelu => x.gelu(),
            Activation::Tanh => x.tanh(),
        }
    }
}

/// Affine map `x·W + b` with `W` stored as `[in, out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    /// Fan-in scaled uniform weights on `(−1/√fan_in, 1/√fan_in)` and zero bias.
    pub fn new<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w = (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect();
        Self {
            weight: Tensor::from_parts(vec![fan_in, fan_out], w),
            bias: Tensor::zeros(&[fan_out]),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn fan_out(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn param_count(&self) -> usize {
        self.weight.numel() + self.bias.numel()
    }

    pub fn bind<'t>(&self, binder: &mut Binder<'t>) -> BoundLinear<'t> {
        BoundLinear {
            weight: binder.bind(&self.weight),
            bias: binder.bind(&self.bias),
        }
    }

    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        out.push((format!("{prefix}.weight"), &self.weight));
        out.push((format!("{prefix}.bias"), &self.bias));
    }

    fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        out.push(&mut self.weight);
        out.push(&mut self.bias);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundLinear<'t> {
    pub weight: Var<'t>,
    pub bias: Var<'t>,
}

impl<'t> BoundLinear<'t> {
    /// Applies the layer to the rows of `x` (`[rows, in]`).
    pub fn forward(&self, x: Var<'t>) -> Result<Var<'t>> {
        x.matmul(self.weight)?.add(self.bias)
    }
}

/// Stack of [`Linear`] layers with an activation between consecutive layers
/// (none after the last).
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activation: Activation,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(
        d_in: usize,
        hidden: &[usize],
        d_out: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if d_in == 0 || d_out == 0 || hidden.contains(&0) {
            return Err(Error::contract("Mlp::new", "all widths must be at least 1"));
        }
        let mut widths = vec![d_in];
        widths.extend_from_slice(hidden);
        widths.push(d_out);
        let layers = widths.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Ok(Self { layers, activation })
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn d_out(&self) -> usize {
        self.layers.last().expect("an mlp has at least one layer").fan_out()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }

    /// Analytic count for an MLP with the given widths.
    pub fn count_for(d_in: usize, hidden: &[usize], d_out: usize) -> usize {
        let mut widths = vec![d_in];
        widths.extend_from_slice(hidden);
        widths.push(d_out);
        widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn bind<'t>(&self, binder: &mut Binder<'t>) -> BoundMlp<'t> {
        BoundMlp {
            layers: self.layers.iter().map(|l| l.bind(binder)).collect(),
            activation: self.activation,
        }
    }

    pub fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        for (i, l) in self.layers.iter().enumerate() {
            l.collect(&format!("{prefix}.{i}"), out);
        }
    }

    pub fn collect_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        for l in &mut self.layers {
            l.collect_mut(out);
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundMlp<'t> {
    pub layers: Vec<BoundLinear<'t>>,
    pub activation: Activation,
}

impl<'t> BoundMlp<'t> {
    pub fn forward(&self, x: Var<'t>) -> Result<Var<'t>> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(h)?;
            if i + 1 < self.layers.len() {
                h = self.activation.apply(h);
            }
        }
        Ok(h)
    }

    /// Runs every layer after the first on an already computed first-layer
    /// pre-activation.
    pub fn forward_from_first(&self, pre: Var<'t>) -> Result<Var<'t>> {
        let mut h = pre;
        for layer in &self.layers[1..] {
            h = layer.forward(self.activation.apply(h))?;
        }
        Ok(h)
    }
}

/// Puts parameter tensors on a tape, either trainable or frozen, and
/// remembers the resulting variables in binding order.
pub struct Binder<'t> {
    tape: &'t Tape,
    trainable: bool,
    vars: Vec<Var<'t>>,
    replay: Option<std::vec::IntoIter<Var<'t>>>,
}

impl<'t> Binder<'t> {
    pub fn new(tape: &'t Tape, trainable: bool) -> Self {
        Self {
            tape,
            trainable,
            vars: Vec::new(),
            replay: None,
        }
    }

    /// Hands out the given variables, in order, instead of creating new
    /// ones. Used to evaluate a model at externally supplied parameters.
    pub fn replay(tape: &'t Tape, vars: &[Var<'t>]) -> Self {
        Self {
            tape,
            trainable: false,
            vars: Vec::new(),
            replay: Some(vars.to_vec().into_iter()),
        }
    }

    pub fn bind(&mut self, t: &Tensor) -> Var<'t> {
        if let Some(src) = &mut self.replay {
            let v = src.next().expect("replayed variables cover every parameter");
            debug_assert_eq!(v.shape(), t.shape());
            self.vars.push(v);
            return v;
        }
        let v = if self.trainable {
            self.tape.param(t.clone())
        } else {
            self.tape.constant(t.clone())
        };
        self.vars.push(v);
        v
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    /// Variables in the order they were bound.
    pub fn into_vars(self) -> Vec<Var<'t>> {
        self.vars
    }
}

/// A model whose trainable state is an ordered list of named tensors.
///
/// The order of [`Parameterized::named_params`], [`Parameterized::params_mut`]
/// and the variables produced when binding to a tape must agree.
pub trait Parameterized {
    fn named_params(&self) -> Vec<(String, &Tensor)>;

    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, t)| t.numel()).sum()
    }

    /// Replaces every parameter from `(name, tensor)` pairs in canonical order.
    fn load_params(&mut self, named: &[(String, Tensor)]) -> Result<()> {
        let expected: Vec<(String, Vec<usize>)> = self
            .named_params()
            .into_iter()
            .map(|(n, t)| (n, t.shape().to_vec()))
            .collect();
        if expected.len() != named.len() {
            return Err(Error::Format(format!(
                "expected {} parameter tensors, found {}",
                expected.len(),
                named.len()
            )));
        }
        for ((en, es), (n, t)) in expected.iter().zip(named) {
            if en != n || es.as_slice() != t.shape() {
                return Err(Error::Format(format!(
                    "parameter {n} {:?} does not match expected {en} {es:?}",
                    t.shape()
                )));
            }
        }
        for (dst, (_, src)) in self.params_mut().into_iter().zip(named) {
            *dst = src.clone();
        }
        Ok(())
    }
}
