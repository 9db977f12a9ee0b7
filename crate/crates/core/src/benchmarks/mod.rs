//! Dataset generators for the four benchmark families.
//!
//! Every generator emits [`FunctionSample`]s whose coordinates live in the
//! unit box. Gridded arrays use raster order: x varies fastest, then y (or t).

pub mod burgers;
pub mod dataset;
pub mod delta_helmholtz;
pub mod grf;
pub mod stepheat;

pub use burgers::BurgersConfig;
pub use dataset::{read_dataset, write_dataset, write_manifest, Dataset};
pub use delta_helmholtz::{DeltaHelmholtzConfig, InputLayout};
pub use grf::GrfConfig;
pub use stepheat::StepHeatConfig;

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkId {
    StepHeat,
    DeltaHelmholtz,
    Burgers,
    GrfHelmholtz,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 4] = [
        BenchmarkId::StepHeat,
        BenchmarkId::DeltaHelmholtz,
        BenchmarkId::Burgers,
        BenchmarkId::GrfHelmholtz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkId::StepHeat => "stepheat",
            BenchmarkId::DeltaHelmholtz => "delta_helmholtz",
            BenchmarkId::Burgers => "burgers",
            BenchmarkId::GrfHelmholtz => "grf_helmholtz",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BenchmarkId::StepHeat => 0,
            BenchmarkId::DeltaHelmholtz => 1,
            BenchmarkId::Burgers => 2,
            BenchmarkId::GrfHelmholtz => 3,
        }
    }

    pub(crate) fn from_code(c: u8) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.code() == c)
            .ok_or_else(|| Error::Format(format!("unknown benchmark code {c}")))
    }

    /// `(d_f, d_coord_in, d_coord_out)`.
    pub fn dims(self) -> (usize, usize, usize) {
        match self {
            BenchmarkId::StepHeat => (1, 1, 2),
            _ => (1, 2, 2),
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::contract("BenchmarkId", format!("unknown benchmark '{s}'")))
    }
}

/// The parameter that identifies one sample within its family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scenario {
    StepHeat { s: f64 },
    DeltaHelmholtz { delta: f64 },
    Burgers { lambda: f64 },
    GrfHelmholtz { ell: f64, k: f64, seed: u64 },
}

impl Scenario {
    pub fn benchmark(&self) -> BenchmarkId {
        match self {
            Scenario::StepHeat { .. } => BenchmarkId::StepHeat,
            Scenario::DeltaHelmholtz { .. } => BenchmarkId::DeltaHelmholtz,
            Scenario::Burgers { .. } => BenchmarkId::Burgers,
            Scenario::GrfHelmholtz { .. } => BenchmarkId::GrfHelmholtz,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::StepHeat { s } => write!(f, "s={s}"),
            Scenario::DeltaHelmholtz { delta } => write!(f, "delta={delta}"),
            Scenario::Burgers { lambda } => write!(f, "lambda={lambda}"),
            Scenario::GrfHelmholtz { ell, k, seed } => write!(f, "ell={ell};k={k};seed={seed}"),
        }
    }
}

/// One supervised pair: an input function observed at `input_coords` and
/// the solution at `query_coords`.
#[derive(Clone, Debug)]
pub struct FunctionSample {
    pub input_coords: Arc<Tensor>,
    pub input_values: Tensor,
    pub query_coords: Arc<Tensor>,
    pub targets: Tensor,
    pub scenario: Scenario,
    /// Grid shape of the inputs (slowest axis first), empty when scattered.
    pub input_dims: Vec<usize>,
    /// Grid shape of the queries (slowest axis first).
    pub query_dims: Vec<usize>,
}

impl FunctionSample {
    pub fn validate(&self) -> Result<()> {
        let n = self.input_coords.rows();
        let m = self.query_coords.rows();
        if n == 0 || m == 0 || self.input_values.rows() != n || self.targets.numel() != m {
            return Err(Error::dim("FunctionSample", "inconsistent sample sizes"));
        }
        if !self.input_dims.is_empty() && self.input_dims.iter().product::<usize>() != n {
            return Err(Error::dim("FunctionSample", "input grid dims do not match"));
        }
        if self.query_dims.iter().product::<usize>() != m {
            return Err(Error::dim("FunctionSample", "query grid dims do not match"));
        }
        for t in [&*self.input_coords, &self.input_values, &*self.query_coords, &self.targets] {
            t.ensure_finite("generated sample")?;
        }
        let inside = |t: &Tensor| t.data().iter().all(|&v| (0.0..=1.0).contains(&v));
        if !inside(&self.input_coords) || !inside(&self.query_coords) {
            return Err(Error::contract("FunctionSample", "coordinates must lie in the unit box"));
        }
        Ok(())
    }
}

/// Scenario parameter values of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamSet {
    /// `n` values drawn uniformly from `[lo, hi]`.
    Uniform { n: usize, lo: f64, hi: f64 },
    /// Exactly these values, in order.
    List(Vec<f64>),
}

impl ParamSet {
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Self {
        ParamSet::Uniform { n, lo, hi }
    }

    pub fn len(&self) -> usize {
        match self {
            ParamSet::Uniform { n, .. } => *n,
            ParamSet::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value(&self, i: usize, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ParamSet::Uniform { lo, hi, .. } if hi > lo => rng.random_range(*lo..=*hi),
            ParamSet::Uniform { lo, .. } => *lo,
            ParamSet::List(v) => v[i],
        }
    }

    fn describe(&self) -> String {
        match self {
            ParamSet::Uniform { n, lo, hi } => format!("{n} uniform in [{lo}, {hi}]"),
            ParamSet::List(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

/// What to generate for a dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    StepHeat {
        config: StepHeatConfig,
        s: ParamSet,
    },
    DeltaHelmholtz {
        config: DeltaHelmholtzConfig,
        delta: ParamSet,
    },
    Burgers {
        config: BurgersConfig,
        lambda: ParamSet,
    },
    GrfHelmholtz {
        config: GrfConfig,
        per_ell: usize,
        ells: Vec<f64>,
        k: f64,
    },
}

impl DatasetSpec {
    /// The standard training set for `id`.
    pub fn default_for(id: BenchmarkId) -> Self {
        match id {
            BenchmarkId::StepHeat => DatasetSpec::StepHeat {
                config: StepHeatConfig::default(),
                s: ParamSet::uniform(128, 0.3, 0.7),
            },
            BenchmarkId::DeltaHelmholtz => DatasetSpec::DeltaHelmholtz {
                config: DeltaHelmholtzConfig::default(),
                delta: ParamSet::uniform(256, -5.0, 5.0),
            },
            BenchmarkId::Burgers => DatasetSpec::Burgers {
                config: BurgersConfig::default(),
                lambda: ParamSet::uniform(128, 3.0, 6.0),
            },
            BenchmarkId::GrfHelmholtz => DatasetSpec::GrfHelmholtz {
                config: GrfConfig::default(),
                per_ell: 150,
                ells: vec![0.1, 0.2, 0.3],
                k: 60.0,
            },
        }
    }

    /// The standard evaluation scenarios for `id`.
    pub fn test_for(id: BenchmarkId) -> Self {
        match id {
            BenchmarkId::StepHeat => DatasetSpec::StepHeat {
                config: StepHeatConfig::default(),
                s: ParamSet::List(vec![0.32, 0.39, 0.41, 0.48, 0.52, 0.66]),
            },
            BenchmarkId::DeltaHelmholtz => DatasetSpec::DeltaHelmholtz {
                config: DeltaHelmholtzConfig::default(),
                delta: ParamSet::List(vec![4.3, -30.8, 30.8]),
            },
            BenchmarkId::Burgers => DatasetSpec::Burgers {
                config: BurgersConfig::default(),
                lambda: ParamSet::List(vec![1.5, 2.0, 3.2, 3.8, 4.2, 4.5, 5.8, 6.6, 7.2, 7.5]),
            },
            BenchmarkId::GrfHelmholtz => DatasetSpec::GrfHelmholtz {
                config: GrfConfig {
                    keep_fine: true,
                    ..GrfConfig::default()
                },
                per_ell: 5,
                ells: vec![0.1, 0.2, 0.3],
                k: 60.0,
            },
        }
    }

    pub fn benchmark(&self) -> BenchmarkId {
        match self {
            DatasetSpec::StepHeat { .. } => BenchmarkId::StepHeat,
            DatasetSpec::DeltaHelmholtz { .. } => BenchmarkId::DeltaHelmholtz,
            DatasetSpec::Burgers { .. } => BenchmarkId::Burgers,
            DatasetSpec::GrfHelmholtz { .. } => BenchmarkId::GrfHelmholtz,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DatasetSpec::StepHeat { s: p, .. }
            | DatasetSpec::DeltaHelmholtz { delta: p, .. }
            | DatasetSpec::Burgers { lambda: p, .. } => p.len(),
            DatasetSpec::GrfHelmholtz { per_ell, ells, .. } => per_ell * ells.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `key: value` pairs describing the spec.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![("benchmark".to_string(), self.benchmark().to_string())];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("samples", self.len().to_string());
        match self {
            DatasetSpec::StepHeat { config, s } => {
                push("s", s.describe());
                push("kappa", config.kappa.to_string());
                push("beta", config.beta.to_string());
                push("n_terms", config.n_terms.to_string());
                push("input_points", config.n_input.to_string());
                push("query_grid", format!("{}x{}", config.n_x, config.n_t));
            }
            DatasetSpec::DeltaHelmholtz { config, delta } => {
                push("delta", delta.describe());
                push("input_layout", config.layout.as_str().to_string());
                push("input_points", config.n_input.to_string());
                push("query_grid", format!("{0}x{0}", config.n_query_side));
            }
            DatasetSpec::Burgers { config, lambda } => {
                push("lambda", lambda.describe());
                push("nu", config.nu.to_string());
                push("grid", format!("{0}x{0}", config.n_side));
            }
            DatasetSpec::GrfHelmholtz { config, per_ell, ells, k } => {
                push("per_ell", per_ell.to_string());
                let e: Vec<String> = ells.iter().map(f64::to_string).collect();
                push("ells", e.join(","));
                push("k", k.to_string());
                push("sigma", config.sigma.to_string());
                push("fine_grid", format!("{0}x{0}", config.fine));
                let grid = if config.keep_fine { config.fine } else { config.coarse };
                push("sample_grid", format!("{grid}x{grid}"));
            }
        }
        out
    }
}

/// Independent RNG stream for sample `index` of a dataset seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Generates every sample of `spec` deterministically from `seed`.
pub fn make_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    let draw = |i: usize, p: &ParamSet| -> (f64, ChaCha8Rng) {
        let mut rng = sample_rng(seed, i as u64);
        let v = p.value(i, &mut rng);
        (v, rng)
    };
    let mut samples = Vec::with_capacity(spec.len());
    match spec {
        DatasetSpec::StepHeat { config, s } => {
            let grids = stepheat::Grids::new(config);
            for i in 0..s.len() {
                let (v, _) = draw(i, s);
                samples.push(stepheat::sample_on(v, config, &grids)?);
            }
        }
        DatasetSpec::DeltaHelmholtz { config, delta } => {
            let query = Arc::new(grid_2d(config.n_query_side, config.n_query_side));
            let regular = Arc::new(grid_2d(config.regular_side(), config.regular_side()));
            for i in 0..delta.len() {
                let (v, mut rng) = draw(i, delta);
                samples.push(delta_helmholtz::sample_with(v, config, &mut rng, &query, &regular)?);
            }
        }
        DatasetSpec::Burgers { config, lambda } => {
            let grid = Arc::new(grid_2d(config.n_side, config.n_side));
            for i in 0..lambda.len() {
                let (v, _) = draw(i, lambda);
                samples.push(burgers::sample_on(v, config, &grid, &grid)?);
            }
        }
        DatasetSpec::GrfHelmholtz {
            config,
            per_ell,
            ells,
            k,
        } => {
            let solver = grf::Generator::new(config, *k)?;
            for (j, &ell) in ells.iter().enumerate() {
                let field = solver.field(ell)?;
                for i in 0..*per_ell {
                    let index = (j * per_ell + i) as u64;
                    let sample_seed = sample_rng(seed, index).random::<u64>();
                    samples.push(solver.sample(&field, sample_seed)?);
                }
            }
        }
    }
    Ok(Dataset {
        benchmark: spec.benchmark(),
        samples,
    })
}

/// `n` evenly spaced points on `[0, 1]`, endpoints included.
pub fn linspace(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// `nx × ny` grid of `(x, y)` rows on the unit square, x fastest.
pub fn grid_2d(nx: usize, ny: usize) -> Tensor {
    let (xs, ys) = (linspace(nx), linspace(ny));
    let mut d = Vec::with_capacity(2 * nx * ny);
    for y in &ys {
        for x in &xs {
            d.push(*x);
            d.push(*y);
        }
    }
    Tensor::from_parts(vec![nx * ny, 2], d)
}

/// Indices of the points of a `fine`-point axis nearest to a uniform
/// `coarse`-point axis.
pub fn nearest_indices(fine: usize, coarse: usize) -> Vec<usize> {
    if coarse == 1 {
        return vec![0];
    }
    (0..coarse)
        .map(|j| ((j * (fine - 1)) as f64 / (coarse - 1) as f64).round() as usize)
        .collect()
}

/// Selects the sub-grid `rows × cols` (nearest indices) of a raster-ordered
/// `[ny·nx, w]` tensor.
pub fn decimate_grid(t: &Tensor, ny: usize, nx: usize, new_ny: usize, new_nx: usize) -> Result<Tensor> {
    if t.rows() != ny * nx {
        return Err(Error::dim("decimate_grid", format!("{} rows for a {ny}x{nx} grid", t.rows())));
    }
    let (iy, ix) = (nearest_indices(ny, new_ny), nearest_indices(nx, new_nx));
    let mut idx = Vec::with_capacity(new_ny * new_nx);
    for &j in &iy {
        for &i in &ix {
            idx.push(j * nx + i);
        }
    }
    t.select_rows(&idx)
}
