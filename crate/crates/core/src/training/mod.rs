//! Supervised training and evaluation.

mod adam;
pub mod checkpoint;

pub use adam::{adam_step, AdamConfig, AdamState, StepOutcome};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};

use crate::autodiff::{Tape, Var};
use crate::benchmarks::{BenchmarkId, Dataset, FunctionSample};
use crate::error::{Error, Result};
use crate::metrics::{barron_rel, rel_l2, MetricReport};
use crate::model::{DeepOnet, DeepOnetConfig, InputFunction, Model, ModelKind, Network, Normalizer, Ufo, UfoConfig};
use crate::nn::Parameterized;
use crate::tensor::Tensor;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

/// Training seeds of the multi-seed protocol.
pub const PROTOCOL_SEEDS: [u64; 5] = [42, 200, 500, 2010, 2026];

/// Query points evaluated per forward pass in [`evaluate`].
pub const EVAL_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from `lr` to `lr_min` over all optimizer steps.
    Cosine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub benchmark: BenchmarkId,
    pub epochs: usize,
    /// Samples per minibatch.
    pub batch_size: usize,
    pub lr: f64,
    pub lr_min: f64,
    pub schedule: LrSchedule,
    /// Seeds both initialization and data order.
    pub seed: u64,
    /// Query points drawn per minibatch; `None` uses every point.
    pub query_subset: Option<usize>,
    pub adam: AdamConfig,
}

impl TrainConfig {
    pub fn new(benchmark: BenchmarkId, model: ModelKind) -> Self {
        Self {
            model,
            benchmark,
            epochs: 3000,
            batch_size: 16,
            lr: 1e-3,
            lr_min: 1e-5,
            schedule: LrSchedule::Cosine,
            seed: 42,
            query_subset: Some(2048),
            adam: AdamConfig::default(),
        }
    }

    /// Budget used by the command line tools and the acceptance runs for
    /// `benchmark`; sized for a single CPU core.
    pub fn recipe(benchmark: BenchmarkId, model: ModelKind) -> Self {
        let base = Self {
            batch_size: 4,
            query_subset: Some(512),
            ..Self::new(benchmark, model)
        };
        match benchmark {
            BenchmarkId::StepHeat => Self {
                epochs: 300,
                batch_size: 2,
                lr: 3e-3,
                ..base
            },
            BenchmarkId::DeltaHelmholtz => Self { epochs: 200, ..base },
            BenchmarkId::Burgers => Self { epochs: 550, ..base },
            BenchmarkId::GrfHelmholtz => Self { epochs: 60, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::contract("TrainConfig", "epochs and batch size must be positive"));
        }
        if !(self.lr > 0.0) || !(self.lr_min >= 0.0) || self.lr_min > self.lr {
            return Err(Error::contract("TrainConfig", "need 0 <= lr_min <= lr and lr > 0"));
        }
        if self.query_subset == Some(0) {
            return Err(Error::contract("TrainConfig", "query subset must be positive"));
        }
        Ok(())
    }

    /// Learning rate for optimizer step `step` of `total`.
    pub fn lr_at(&self, step: usize, total: usize) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.lr,
            LrSchedule::Cosine => {
                let frac = if total <= 1 { 0.0 } else { step as f64 / (total - 1) as f64 };
                self.lr_min + 0.5 * (self.lr - self.lr_min) * (1.0 + (PI * frac).cos())
            }
        }
    }
}

/// Mean squared error between two tensors of equal shape.
pub fn mse_loss<'t>(pred: Var<'t>, target: Var<'t>) -> Result<Var<'t>> {
    if pred.shape() != target.shape() {
        return Err(Error::dim(
            "mse_loss",
            format!("prediction {:?} vs target {:?}", pred.shape(), target.shape()),
        ));
    }
    Ok(pred.sub(target)?.square().mean_all())
}

/// Freshly initialized network of `kind` sized for `dataset`.
pub fn build_model(kind: ModelKind, dataset: &Dataset, seed: u64) -> Result<Model> {
    let (d_f, d_in, d_out) = dataset.benchmark.dims();
    let network = match kind {
        ModelKind::Ufo => Network::Ufo(Ufo::new(UfoConfig::new(d_f, d_in, d_out), seed)?),
        ModelKind::UfoAblated => Network::Ufo(Ufo::new(UfoConfig::new(d_f, d_in, d_out).ablated(), seed)?),
        ModelKind::Deeponet => {
            let first = dataset
                .samples
                .first()
                .ok_or_else(|| Error::contract("build_model", "empty dataset"))?;
            let fixed = dataset.samples.iter().all(|s| {
                Arc::ptr_eq(&s.input_coords, &first.input_coords) || s.input_coords == first.input_coords
            });
            if !fixed {
                return Err(Error::contract(
                    "build_model",
                    "deeponet needs every sample observed at the same sensor locations",
                ));
            }
            Network::DeepOnet(DeepOnet::new(DeepOnetConfig::new(first.input_coords.rows(), d_f, d_out), seed)?)
        }
    };
    Ok(Model::new(network))
}

/// Loss and parameter gradients for one minibatch. `targets` is `[B, M]`
/// in normalized units.
pub fn batch_gradients(
    model: &Model,
    inputs: &[&InputFunction],
    queries: &Tensor,
    targets: &Tensor,
) -> Result<(f64, Vec<Tensor>)> {
    let tape = Tape::new();
    let (out, vars) = model.forward_batch(&tape, true, inputs, queries)?;
    let loss = mse_loss(out, tape.constant(targets.clone()))?;
    let value = loss.value().item()?;
    if !value.is_finite() {
        return Ok((value, Vec::new()));
    }
    let grads = tape.backward(loss)?;
    Ok((value, vars.iter().map(|v| grads.wrt(*v)).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean minibatch loss in normalized units.
    pub loss: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub optimizer: AdamState,
    pub history: Vec<EpochRecord>,
    /// Why training stopped early, if it did. The model is then the last one
    /// that completed an epoch with finite loss.
    pub aborted: Option<String>,
}

impl TrainOutcome {
    pub fn epochs_completed(&self) -> usize {
        self.history.len()
    }

    pub fn final_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.loss)
    }

    pub fn into_checkpoint(self, config: &TrainConfig) -> Checkpoint {
        let epoch = self.epochs_completed();
        let final_loss = self.final_loss();
        Checkpoint {
            benchmark: config.benchmark,
            model: self.model,
            train_config: Some(config.clone()),
            epoch,
            final_loss,
            optimizer: Some(self.optimizer),
        }
    }
}

/// Normalized inputs, targets and the shared query grid of a dataset.
struct Prepared {
    inputs: Vec<InputFunction>,
    targets: Vec<Tensor>,
    queries: Arc<Tensor>,
}

fn prepare(model: &Model, samples: &[FunctionSample]) -> Result<Prepared> {
    let first = samples
        .first()
        .ok_or_else(|| Error::contract("train", "empty dataset"))?;
    if !samples
        .iter()
        .all(|s| Arc::ptr_eq(&s.query_coords, &first.query_coords) || s.query_coords == first.query_coords)
    {
        return Err(Error::contract("train", "every training sample must share one query grid"));
    }
    let inputs = samples
        .iter()
        .map(|s| model.prepare_input(s.input_coords.clone(), &s.input_values))
        .collect::<Result<Vec<_>>>()?;
    let targets = samples.iter().map(|s| model.normalizer.normalize_target(&s.targets)).collect();
    Ok(Prepared {
        inputs,
        targets,
        queries: first.query_coords.clone(),
    })
}

/// Trains a fresh model on `dataset`. Deterministic for a given seed.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.benchmark != config.benchmark {
        return Err(Error::contract(
            "train",
            format!("dataset is {} but the run is configured for {}", dataset.benchmark, config.benchmark),
        ));
    }
    let mut model = build_model(config.model, dataset, config.seed)?;
    model.normalizer = Normalizer::fit(
        dataset.samples.iter().map(|s| &s.input_values),
        dataset.samples.iter().map(|s| &s.targets),
    );
    let data = prepare(&model, &dataset.samples)?;
    let names: Vec<String> = model.named_params().into_iter().map(|(n, _)| n).collect();
    let mut optimizer = AdamState::new(model.named_params().into_iter().map(|(_, t)| t));

    let n = data.inputs.len();
    let m = data.queries.rows();
    let subset = config.query_subset.filter(|&q| q < m);
    let per_epoch = n.div_ceil(config.batch_size);
    let total = per_epoch * config.epochs;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut history = Vec::with_capacity(config.epochs);
    let mut last_good = (model.clone(), optimizer.clone());
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0;
    let mut aborted = None;
    'epochs: for epoch in 0..config.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let lr = config.lr_at(step, total);
            step += 1;
            let (queries, cols) = match subset {
                Some(q) => {
                    let mut idx = rand::seq::index::sample(&mut rng, m, q).into_vec();
                    idx.sort_unstable();
                    (data.queries.select_rows(&idx)?, Some(idx))
                }
                None => ((*data.queries).clone(), None),
            };
            let width = queries.rows();
            let mut tgt = Vec::with_capacity(batch.len() * width);
            for &i in batch {
                let t = data.targets[i].data();
                match &cols {
                    Some(idx) => tgt.extend(idx.iter().map(|&j| t[j])),
                    None => tgt.extend_from_slice(t),
                }
            }
            let targets = Tensor::new(vec![batch.len(), width], tgt)?;
            let inputs: Vec<&InputFunction> = batch.iter().map(|&i| &data.inputs[i]).collect();
            let (loss, grads) = batch_gradients(&model, &inputs, &queries, &targets)?;
            if !loss.is_finite() {
                let msg = format!("non-finite loss in epoch {epoch}; keeping the model from epoch {}", history.len());
                log::error!("{msg}");
                aborted = Some(msg);
                break 'epochs;
            }
            let mut params = model.params_mut();
            adam_step(&mut params, &grads, &names, &mut optimizer, lr, &config.adam)?;
            sum += loss * batch.len() as f64;
        }
        let rec = EpochRecord {
            epoch,
            loss: sum / n as f64,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        if epoch % 25 == 0 || epoch + 1 == config.epochs {
            log::info!("epoch {epoch}: loss {:.3e} ({:.0} ms)", rec.loss, rec.wall_ms);
        }
        history.push(rec);
        last_good = (model.clone(), optimizer.clone());
    }
    if aborted.is_some() {
        (model, optimizer) = last_good;
    }
    Ok(TrainOutcome {
        model,
        optimizer,
        history,
        aborted,
    })
}

/// Labels attached to every report of one evaluation.
#[derive(Clone, Debug)]
pub struct EvalContext {
    pub model: String,
    pub seed: u64,
}

/// Per-sample metrics. A DeepONet asked to read an input at a different
/// sensor set yields a report with NaN metrics and `failure` set rather
/// than an error.
pub fn evaluate(model: &Model, samples: &[FunctionSample], ctx: &EvalContext) -> Result<Vec<MetricReport>> {
    samples.iter().map(|s| evaluate_one(model, s, ctx)).collect()
}

pub fn evaluate_one(model: &Model, sample: &FunctionSample, ctx: &EvalContext) -> Result<MetricReport> {
    let start = Instant::now();
    let mut report = MetricReport {
        benchmark: sample.scenario.benchmark().to_string(),
        scenario: sample.scenario.to_string(),
        model: ctx.model.clone(),
        seed: ctx.seed,
        rel_l2: f64::NAN,
        barron_rel: f64::NAN,
        n_input: sample.input_coords.rows(),
        n_query: sample.query_coords.rows(),
        wall_ms: 0.0,
        failure: None,
    };
    let pred = match predict_sample(model, sample) {
        Ok(p) => p,
        Err(e @ Error::Dimension { .. }) if model.kind() == ModelKind::Deeponet => {
            report.failure = Some(e.to_string());
            report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.rel_l2 = rel_l2(&pred, &sample.targets)?;
    report.barron_rel = barron_rel(&pred, &sample.targets, &sample.query_dims)?;
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Prediction at the sample's query points, in physical units.
pub fn predict_sample(model: &Model, sample: &FunctionSample) -> Result<Tensor> {
    let input = model.prepare_input(sample.input_coords.clone(), &sample.input_values)?;
    model.predict(&input, &sample.query_coords, EVAL_CHUNK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{make_dataset, DatasetSpec, ParamSet, StepHeatConfig};

    fn tiny() -> Dataset {
        let spec = DatasetSpec::StepHeat {
            config: StepHeatConfig {
                n_x: 30,
                n_t: 6,
                n_input: 32,
                ..Default::default()
            },
            s: ParamSet::uniform(4, 0.3, 0.7),
        };
        make_dataset(&spec, 3).unwrap()
    }

    fn quick(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 2,
            seed,
            query_subset: Some(64),
            ..TrainConfig::new(BenchmarkId::StepHeat, ModelKind::Ufo)
        }
    }

    #[test]
    fn mse_values_and_gradient() {
        let tape = Tape::new();
        let p = tape.param(Tensor::vector(vec![3.0, 1.0, -1.0, 0.5]));
        let t = tape.constant(Tensor::vector(vec![1.0, -1.0, -3.0, -1.5]));
        let loss = mse_loss(p, t).unwrap();
        assert_eq!(loss.value().item().unwrap(), 4.0);
        let g = tape.backward(loss).unwrap().wrt(p);
        // 2(p − t)/M
        for v in g.data() {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let same = mse_loss(t, t).unwrap();
        assert_eq!(same.value().item().unwrap(), 0.0);
        assert!(mse_loss(p, tape.constant(Tensor::zeros(&[3]))).is_err());
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let c = TrainConfig::new(BenchmarkId::Burgers, ModelKind::Ufo);
        assert_eq!(c.lr_at(0, 100), 1e-3);
        assert!((c.lr_at(99, 100) - 1e-5).abs() < 1e-18);
        assert!(c.lr_at(50, 100) < 1e-3 && c.lr_at(50, 100) > 1e-5);
    }

    #[test]
    fn smoke_run_is_finite_and_deterministic() {
        let ds = tiny();
        let a = train(&ds, &quick(42)).unwrap();
        assert_eq!(a.epochs_completed(), 2);
        assert!(a.final_loss().is_finite());
        assert!(a.aborted.is_none());
        let b = train(&ds, &quick(42)).unwrap();
        assert_eq!(a.model, b.model);
        let c = train(&ds, &quick(200)).unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn wrong_benchmark_is_rejected() {
        let cfg = TrainConfig::new(BenchmarkId::Burgers, ModelKind::Ufo);
        assert!(matches!(train(&tiny(), &cfg), Err(Error::Contract { .. })));
    }

    #[test]
    fn every_parameter_receives_gradient() {
        let ds = tiny();
        for kind in [ModelKind::Ufo, ModelKind::UfoAblated, ModelKind::Deeponet] {
            let model = build_model(kind, &ds, 5).unwrap();
            let data = prepare(&model, &ds.samples).unwrap();
            let names: Vec<String> = model.named_params().into_iter().map(|(n, _)| n).collect();
            let mut model = model.clone();
            let mut opt = AdamState::new(model.named_params().into_iter().map(|(_, t)| t));
            let mut touched = vec![false; names.len()];
            for k in 0..10 {
                let inputs = [&data.inputs[k % 4], &data.inputs[(k + 1) % 4]];
                let t: Vec<f64> = [k % 4, (k + 1) % 4]
                    .iter()
                    .flat_map(|&i| data.targets[i].data().to_vec())
                    .collect();
                let targets = Tensor::new(vec![2, data.queries.rows()], t).unwrap();
                let (_, grads) = batch_gradients(&model, &inputs, &data.queries, &targets).unwrap();
                for (flag, g) in touched.iter_mut().zip(&grads) {
                    *flag |= g.data().iter().any(|&v| v != 0.0);
                }
                adam_step(&mut model.params_mut(), &grads, &names, &mut opt, 1e-3, &AdamConfig::default()).unwrap();
            }
            for (name, ok) in names.iter().zip(&touched) {
                assert!(ok, "{kind}: {name} never received a gradient");
            }
        }
    }

    #[test]
    fn evaluation_is_repeatable_and_untrained_error_is_order_one() {
        let ds = tiny();
        let model = build_model(ModelKind::Ufo, &ds, 1).unwrap();
        let ctx = EvalContext {
            model: "ufo".into(),
            seed: 1,
        };
        let a = evaluate(&model, &ds.samples, &ctx).unwrap();
        let b = evaluate(&model, &ds.samples, &ctx).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.rel_l2, x.barron_rel), (y.rel_l2, y.barron_rel));
            assert!(x.rel_l2 > 0.1 && x.rel_l2 < 100.0, "{}", x.rel_l2);
        }
    }
}
