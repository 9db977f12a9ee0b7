//! Neural operators: UFO (full and ablated) and the DeepONet baseline.

pub mod check;
pub mod deeponet;
pub mod ufo;

pub use check::{toy_grad_check, ToyShape};
pub use deeponet::{DeepOnet, DeepOnetConfig};
pub use ufo::{SpectralRep, Ufo, UfoConfig, UfoVariant};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::nn::{Binder, Parameterized};
use crate::numerics::fft;
use crate::tensor::{ComplexPair, Tensor};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// One observed input function: values `f(x'_i)` at locations `x'_i`, in
/// the order the observations were made.
///
/// The spectrum of the raw values along the observation axis is computed
/// once here; it does not depend on any trainable parameter.
#[derive(Clone, Debug)]
pub struct InputFunction {
    coords: Arc<Tensor>,
    values: Arc<Tensor>,
    spectrum: Arc<ComplexPair>,
}

impl InputFunction {
    /// `coords` is `[N, d_in]` and `values` is `[N, d_f]`.
    pub fn new(coords: Arc<Tensor>, values: Tensor) -> Result<Self> {
        if coords.ndim() != 2 || values.ndim() != 2 || coords.rows() != values.rows() {
            return Err(Error::dim(
                "InputFunction::new",
                format!("coords {:?} vs values {:?}", coords.shape(), values.shape()),
            ));
        }
        if !coords.is_finite() || !values.is_finite() {
            return Err(Error::contract("InputFunction::new", "input observations must be finite"));
        }
        let (n, d_f) = (values.rows(), values.row_len());
        let mut re = values.data().to_vec();
        let mut im = vec![0.0; re.len()];
        fft::fft_columns(&mut re, &mut im, n, d_f, false)?;
        let spectrum = ComplexPair {
            re: Tensor::from_parts(vec![n, d_f], re),
            im: Tensor::from_parts(vec![n, d_f], im),
        };
        Ok(Self {
            coords,
            values: Arc::new(values),
            spectrum: Arc::new(spectrum),
        })
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self) -> &Arc<Tensor> {
        &self.coords
    }

    pub fn values(&self) -> &Arc<Tensor> {
        &self.values
    }

    /// DFT of the values along the observation axis, `[N, d_f]`.
    pub fn spectrum(&self) -> &ComplexPair {
        &self.spectrum
    }
}

/// Scalar affine normalization of input values and targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub input_mean: f64,
    pub input_std: f64,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self {
            input_mean: 0.0,
            input_std: 1.0,
            target_mean: 0.0,
            target_std: 1.0,
        }
    }
}

impl Normalizer {
    /// Mean and standard deviation over every input value and every target.
    pub fn fit<'a>(inputs: impl Iterator<Item = &'a Tensor>, targets: impl Iterator<Item = &'a Tensor>) -> Self {
        fn stats<'a>(it: impl Iterator<Item = &'a Tensor>) -> (f64, f64) {
            let (mut n, mut s, mut s2) = (0usize, 0.0, 0.0);
            for t in it {
                for &v in t.data() {
                    n += 1;
                    s += v;
                    s2 += v * v;
                }
            }
            if n == 0 {
                return (0.0, 1.0);
            }
            let mean = s / n as f64;
            let var = (s2 / n as f64 - mean * mean).max(0.0);
            let std = var.sqrt();
            (mean, if std > 1e-12 { std } else { 1.0 })
        }
        let (input_mean, input_std) = stats(inputs);
        let (target_mean, target_std) = stats(targets);
        Self {
            input_mean,
            input_std,
            target_mean,
            target_std,
        }
    }

    pub fn normalize_input(&self, t: &Tensor) -> Tensor {
        t.map(|v| (v - self.input_mean) / self.input_std)
    }

    pub fn normalize_target(&self, t: &Tensor) -> Tensor {
        t.map(|v| (v - self.target_mean) / self.target_std)
    }

    pub fn denormalize_target(&self, t: &Tensor) -> Tensor {
        t.map(|v| v * self.target_std + self.target_mean)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ufo,
    UfoAblated,
    Deeponet,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ufo => "ufo",
            ModelKind::UfoAblated => "ufo_ablated",
            ModelKind::Deeponet => "deeponet",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            ModelKind::Ufo => 0,
            ModelKind::UfoAblated => 1,
            ModelKind::Deeponet => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(ModelKind::Ufo),
            1 => Ok(ModelKind::UfoAblated),
            2 => Ok(ModelKind::Deeponet),
            _ => Err(Error::Format(format!("unknown model kind code {c}"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ufo" => Ok(ModelKind::Ufo),
            "ufo_ablated" => Ok(ModelKind::UfoAblated),
            "deeponet" => Ok(ModelKind::Deeponet),
            _ => Err(Error::contract("ModelKind", format!("unknown model kind '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Network {
    Ufo(Ufo),
    DeepOnet(DeepOnet),
}

/// A network together with the normalization it was trained under.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub network: Network,
    pub normalizer: Normalizer,
}

impl Model {
    pub fn new(network: Network) -> Self {
        Self {
            network,
            normalizer: Normalizer::default(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match &self.network {
            Network::Ufo(u) => match u.config.variant {
                UfoVariant::Full => ModelKind::Ufo,
                UfoVariant::Ablated => ModelKind::UfoAblated,
            },
            Network::DeepOnet(_) => ModelKind::Deeponet,
        }
    }

    /// Wraps raw observations, applying input normalization.
    pub fn prepare_input(&self, coords: Arc<Tensor>, values: &Tensor) -> Result<InputFunction> {
        InputFunction::new(coords, self.normalizer.normalize_input(values))
    }

    /// Batched forward pass in normalized target units, `[B, M]`.
    ///
    /// Returns the output together with the parameter variables in
    /// [`Parameterized::named_params`] order.
    pub fn forward_batch<'t>(
        &self,
        tape: &'t Tape,
        trainable: bool,
        inputs: &[&InputFunction],
        queries: &Tensor,
    ) -> Result<(Var<'t>, Vec<Var<'t>>)> {
        let mut binder = Binder::new(tape, trainable);
        let out = match &self.network {
            Network::Ufo(u) => {
                let vars = u.bind(&mut binder);
                vars.forward_batch(inputs, queries)?
            }
            Network::DeepOnet(d) => {
                let vars = d.bind(&mut binder);
                vars.forward_batch(inputs, queries)?
            }
        };
        Ok((out, binder.into_vars()))
    }

    /// Prediction in physical units at `queries` (`[M, d]`), evaluated in
    /// chunks of at most `chunk` query points.
    pub fn predict(&self, input: &InputFunction, queries: &Tensor, chunk: usize) -> Result<Tensor> {
        let out = match &self.network {
            Network::Ufo(u) => u.predict(input, queries, chunk)?,
            Network::DeepOnet(d) => d.predict(input, queries, chunk)?,
        };
        out.ensure_finite("model prediction")?;
        Ok(self.normalizer.denormalize_target(&out))
    }
}

impl Parameterized for Model {
    fn named_params(&self) -> Vec<(String, &Tensor)> {
        match &self.network {
            Network::Ufo(u) => u.named_params(),
            Network::DeepOnet(d) => d.named_params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match &mut self.network {
            Network::Ufo(u) => u.params_mut(),
            Network::DeepOnet(d) => d.params_mut(),
        }
    }
}

/// Splits `queries` into row chunks of at most `chunk` rows.
pub(crate) fn query_chunks(queries: &Tensor, chunk: usize) -> Result<Vec<Tensor>> {
    if queries.ndim() != 2 {
        return Err(Error::dim("predict", format!("queries must be [M, d], got {:?}", queries.shape())));
    }
    let m = queries.rows();
    let chunk = chunk.max(1);
    if m <= chunk {
        return Ok(vec![queries.clone()]);
    }
    let w = queries.row_len();
    Ok((0..m)
        .step_by(chunk)
        .map(|s| {
            let e = (s + chunk).min(m);
            Tensor::from_parts(vec![e - s, w], queries.data()[s * w..e * w].to_vec())
        })
        .collect())
}
