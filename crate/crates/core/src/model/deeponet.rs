//! Unstacked DeepONet: a branch network reads the input function at a fixed
//! sensor set, a trunk network reads the query coordinate, and the output is
//! their inner product plus a scalar bias.

use super::{query_chunks, InputFunction};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::nn::{Activation, Binder, BoundMlp, Mlp, Parameterized};
use crate::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepOnetConfig {
    /// Number of sensor locations; frozen at construction.
    pub sensors: usize,
    pub d_f: usize,
    pub d_coord_out: usize,
    pub branch_hidden: Vec<usize>,
    pub trunk_hidden: Vec<usize>,
    /// Width of the branch/trunk inner product.
    pub p: usize,
    pub activation: Activation,
}

impl DeepOnetConfig {
    pub fn new(sensors: usize, d_f: usize, d_coord_out: usize) -> Self {
        Self {
            sensors,
            d_f,
            d_coord_out,
            branch_hidden: vec![64, 64, 64],
            trunk_hidden: vec![64, 64],
            p: 64,
            activation: Activation::Gelu,
        }
    }

    pub fn param_count(&self) -> usize {
        Mlp::count_for(self.sensors * self.d_f, &self.branch_hidden, self.p)
            + Mlp::count_for(self.d_coord_out, &self.trunk_hidden, self.p)
            + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeepOnet {
    pub config: DeepOnetConfig,
    pub branch: Mlp,
    pub trunk: Mlp,
    /// Scalar output bias, shape `[]`.
    pub bias: Tensor,
}

impl DeepOnet {
    pub fn new(config: DeepOnetConfig, seed: u64) -> Result<Self> {
        if config.sensors == 0 || config.p == 0 {
            return Err(Error::contract("DeepOnet::new", "need at least one sensor and p >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let branch = Mlp::new(
            config.sensors * config.d_f,
            &config.branch_hidden,
            config.p,
            config.activation,
            &mut rng,
        )?;
        let trunk = Mlp::new(config.d_coord_out, &config.trunk_hidden, config.p, config.activation, &mut rng)?;
        Ok(Self {
            config,
            branch,
            trunk,
            bias: Tensor::scalar(0.0),
        })
    }

    pub fn bind<'t>(&self, binder: &mut Binder<'t>) -> DeepOnetVars<'t> {
        DeepOnetVars {
            tape: binder.tape(),
            width: self.config.sensors * self.config.d_f,
            branch: self.branch.bind(binder),
            trunk: self.trunk.bind(binder),
            bias: binder.bind(&self.bias),
        }
    }

    /// `⟨branch(sensors), trunk(x_m)⟩ + bias` for every query row.
    pub fn forward(&self, sensor_values: &Tensor, queries: &Tensor) -> Result<Tensor> {
        let tape = Tape::new();
        let v = self.bind(&mut Binder::new(&tape, false));
        let s = sensor_values.clone().reshape(vec![1, sensor_values.numel()])?;
        let out = v.forward_sensors(tape.constant(s), queries)?;
        let m = out.shape()[1];
        (*out.value()).clone().reshape(vec![m])
    }

    pub fn predict(&self, input: &InputFunction, queries: &Tensor, chunk: usize) -> Result<Tensor> {
        let mut out = Vec::with_capacity(queries.rows());
        for q in query_chunks(queries, chunk)? {
            let tape = Tape::new();
            let v = self.bind(&mut Binder::new(&tape, false));
            out.extend_from_slice(v.forward_batch(&[input], &q)?.value().data());
        }
        Tensor::new(vec![out.len()], out)
    }
}

impl Parameterized for DeepOnet {
    fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        self.branch.collect("branch", &mut out);
        self.trunk.collect("trunk", &mut out);
        out.push(("bias".to_string(), &self.bias));
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        self.branch.collect_mut(&mut out);
        self.trunk.collect_mut(&mut out);
        out.push(&mut self.bias);
        out
    }
}

pub struct DeepOnetVars<'t> {
    tape: &'t Tape,
    width: usize,
    pub branch: BoundMlp<'t>,
    pub trunk: BoundMlp<'t>,
    pub bias: Var<'t>,
}

impl<'t> DeepOnetVars<'t> {
    /// `sensors [B, N·d_f]` → `[B, M]`.
    pub fn forward_sensors(&self, sensors: Var<'t>, queries: &Tensor) -> Result<Var<'t>> {
        let s = sensors.shape();
        if s.len() != 2 || s[1] != self.width {
            return Err(Error::dim(
                "deeponet",
                format!(
                    "branch expects {} sensor values per sample, got {:?}; the sensor set is fixed at construction",
                    self.width, s
                ),
            ));
        }
        let beta = self.branch.forward(sensors)?;
        let tau = self.trunk.forward(self.tape.constant(queries.clone()))?;
        beta.matmul(tau.transpose()?)?.add(self.bias)
    }

    pub fn forward_batch(&self, inputs: &[&InputFunction], queries: &Tensor) -> Result<Var<'t>> {
        let mut data = Vec::with_capacity(inputs.len() * self.width);
        for i in inputs {
            if i.values().numel() != self.width {
                return Err(Error::dim(
                    "deeponet",
                    format!(
                        "branch expects {} sensor values, input has {}; the sensor set is fixed at construction",
                        self.width,
                        i.values().numel()
                    ),
                ));
            }
            data.extend_from_slice(i.values().data());
        }
        let sensors = self.tape.constant(Tensor::new(vec![inputs.len(), self.width], data)?);
        self.forward_sensors(sensors, queries)
    }
}
