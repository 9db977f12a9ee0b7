use proptest::prelude::*;
use std::sync::Arc;
use ufo_core::benchmarks::{
    make_dataset, read_dataset, write_dataset, BenchmarkId, DatasetSpec, DeltaHelmholtzConfig, GrfConfig, ParamSet,
    StepHeatConfig,
};
use ufo_core::model::{ModelKind, Network};
use ufo_core::training::{
    build_model, load_checkpoint, predict_sample, save_checkpoint, train, TrainConfig, EVAL_CHUNK,
};
use ufo_core::Tensor;

fn small(id: BenchmarkId) -> DatasetSpec {
    match DatasetSpec::default_for(id) {
        DatasetSpec::StepHeat { config, .. } => DatasetSpec::StepHeat {
            config,
            s: ParamSet::uniform(3, 0.3, 0.7),
        },
        DatasetSpec::DeltaHelmholtz { config, .. } => DatasetSpec::DeltaHelmholtz {
            config,
            delta: ParamSet::uniform(3, -5.0, 5.0),
        },
        DatasetSpec::Burgers { config, .. } => DatasetSpec::Burgers {
            config,
            lambda: ParamSet::List(vec![3.0, 4.5]),
        },
        DatasetSpec::GrfHelmholtz { .. } => DatasetSpec::GrfHelmholtz {
            config: GrfConfig {
                fine: 40,
                coarse: 20,
                ..GrfConfig::default()
            },
            per_ell: 1,
            ells: vec![0.2, 0.3],
            k: 10.0,
        },
    }
}

#[test]
fn datasets_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for id in BenchmarkId::ALL {
        let ds = make_dataset(&small(id), 5).unwrap();
        let path = dir.path().join(format!("{id}.ufod"));
        write_dataset(&path, &ds).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.benchmark, id);
        assert_eq!(back.len(), ds.len());
        for (a, b) in ds.samples.iter().zip(&back.samples) {
            assert_eq!(a.scenario, b.scenario);
            assert_eq!(a.input_coords, b.input_coords);
            assert_eq!(a.input_values, b.input_values);
            assert_eq!(a.query_coords, b.query_coords);
            assert_eq!(a.targets, b.targets);
            assert_eq!(a.query_dims, b.query_dims);
        }
    }
}

#[test]
fn literal_and_batched_routes_agree_on_benchmark_inputs() {
    for id in [BenchmarkId::StepHeat, BenchmarkId::DeltaHelmholtz] {
        let ds = make_dataset(&small(id), 1).unwrap();
        for kind in [ModelKind::Ufo, ModelKind::UfoAblated] {
            let model = build_model(kind, &ds, 3).unwrap();
            let Network::Ufo(ufo) = &model.network else { unreachable!() };
            let s = &ds.samples[0];
            let literal = ufo.forward(&s.input_coords, &s.input_values, &s.query_coords).unwrap();
            let batched = predict_sample(&model, s).unwrap();
            let diff = literal
                .data()
                .iter()
                .zip(batched.data())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff < 1e-11, "{id} {kind}: routes differ by {diff:e}");
        }
    }
}

#[test]
fn checkpoint_reload_predicts_identically() {
    let ds = make_dataset(&small(BenchmarkId::StepHeat), 2).unwrap();
    for kind in [ModelKind::Ufo, ModelKind::Deeponet] {
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 2,
            query_subset: Some(128),
            ..TrainConfig::new(ds.benchmark, kind)
        };
        let out = train(&ds, &cfg).unwrap();
        let before = predict_sample(&out.model, &ds.samples[1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ufoc");
        save_checkpoint(&path, &out.into_checkpoint(&cfg)).unwrap();
        let ckpt = load_checkpoint(&path).unwrap();
        assert_eq!(ckpt.train_config.as_ref(), Some(&cfg));
        assert_eq!(predict_sample(&ckpt.model, &ds.samples[1]).unwrap(), before);
    }
}

#[test]
fn delta_inputs_may_be_scattered_or_regular() {
    let regular = DatasetSpec::DeltaHelmholtz {
        config: DeltaHelmholtzConfig {
            layout: ufo_core::benchmarks::InputLayout::Regular,
            ..DeltaHelmholtzConfig::default()
        },
        delta: ParamSet::List(vec![1.0]),
    };
    let scattered = small(BenchmarkId::DeltaHelmholtz);
    let a = make_dataset(&regular, 0).unwrap();
    let b = make_dataset(&scattered, 0).unwrap();
    let model = build_model(ModelKind::Ufo, &b, 0).unwrap();
    // one model reads either layout
    for s in a.samples.iter().chain(&b.samples) {
        let u = predict_sample(&model, s).unwrap();
        assert_eq!(u.numel(), s.query_coords.rows());
        assert!(u.is_finite());
    }
    // deeponet cannot be built on scattered per-sample locations
    assert!(build_model(ModelKind::Deeponet, &b, 0).is_err());
}

fn stepheat_model() -> (ufo_core::model::Model, ufo_core::benchmarks::FunctionSample) {
    let spec = DatasetSpec::StepHeat {
        config: StepHeatConfig {
            n_x: 12,
            n_t: 6,
            ..StepHeatConfig::default()
        },
        s: ParamSet::List(vec![0.45]),
    };
    let ds = make_dataset(&spec, 0).unwrap();
    let model = build_model(ModelKind::Ufo, &ds, 9).unwrap();
    (model, ds.samples[0].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // The output at a query point depends on that point and the input only,
    // so any subset of queries, in any order, reproduces the matching rows.
    #[test]
    fn queries_are_answered_independently(picks in prop::collection::vec(0usize..72, 1..20), chunk in 1usize..9) {
        let (model, s) = stepheat_model();
        let input = model.prepare_input(s.input_coords.clone(), &s.input_values).unwrap();
        let full = model.predict(&input, &s.query_coords, EVAL_CHUNK).unwrap();
        let sub = s.query_coords.select_rows(&picks).unwrap();
        let part = model.predict(&input, &sub, chunk).unwrap();
        for (k, &i) in picks.iter().enumerate() {
            prop_assert!((part.data()[k] - full.data()[i]).abs() < 1e-12);
        }
    }

    // Any number of observations, at any locations, gives a full prediction.
    #[test]
    fn any_observation_count_is_accepted(n in 1usize..60, seed in 0u64..1000) {
        let (model, s) = stepheat_model();
        let xs: Vec<f64> = (0..n).map(|i| ((i as u64 * 7919 + seed) % 1000) as f64 / 999.0).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| if x > 0.45 { 1.0 } else { 0.0 }).collect();
        let coords = Arc::new(Tensor::new(vec![n, 1], xs).unwrap());
        let input = model.prepare_input(coords, &Tensor::new(vec![n, 1], vals).unwrap()).unwrap();
        let u = model.predict(&input, &s.query_coords, EVAL_CHUNK).unwrap();
        prop_assert_eq!(u.numel(), s.query_coords.rows());
        prop_assert!(u.is_finite());
    }
}
