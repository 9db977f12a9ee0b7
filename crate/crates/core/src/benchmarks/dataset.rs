//! Binary dataset files.
//!
//! Layout (little endian): `b"UFOD"`, `u16` version, `u8` benchmark code,
//! `u32` sample count, then per sample a scenario record, the input and query
//! grid dims (`u32` count + `u32`s), and four arrays (input coords, input
//! values, query coords, targets), each stored as `u8` ndim, `u32` dims and
//! `f64` data. Identical coordinate arrays are shared again on read.

use super::{BenchmarkId, FunctionSample, Scenario};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

const MAGIC: &[u8; 4] = b"UFOD";
const VERSION: u16 = 1;

#[derive(Clone, Debug)]
pub struct Dataset {
    pub benchmark: BenchmarkId,
    pub samples: Vec<FunctionSample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode(&mut w, dataset)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut r = BufReader::new(File::open(path)?);
    decode(&mut r)
}

/// Plain-text sidecar: the given `key: value` entries, then one line per
/// sample with its scenario parameters.
pub fn write_manifest(path: &Path, entries: &[(String, String)], dataset: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in entries {
        writeln!(w, "{k}: {v}")?;
    }
    writeln!(w, "written_samples: {}", dataset.len())?;
    for (i, s) in dataset.samples.iter().enumerate() {
        writeln!(w, "sample_{i}: {}", s.scenario)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn encode<W: Write>(w: &mut W, dataset: &Dataset) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[dataset.benchmark.code()])?;
    put_u32(w, dataset.samples.len(), "sample count")?;
    for s in &dataset.samples {
        if s.scenario.benchmark() != dataset.benchmark {
            return Err(Error::contract("write_dataset", "sample from a different benchmark"));
        }
        put_scenario(w, &s.scenario)?;
        put_dims(w, &s.input_dims)?;
        put_dims(w, &s.query_dims)?;
        for t in [&*s.input_coords, &s.input_values, &*s.query_coords, &s.targets] {
            put_tensor(w, t)?;
        }
    }
    Ok(())
}

pub(crate) fn decode<R: Read>(r: &mut R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a dataset file (bad magic)".into()));
    }
    let version = u16::from_le_bytes(take(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let benchmark = BenchmarkId::from_code(take::<1, _>(r)?[0])?;
    let count = get_u32(r)? as usize;
    let mut pool: Vec<Arc<Tensor>> = Vec::new();
    let mut samples = Vec::with_capacity(count.min(1 << 16));
    for i in 0..count {
        let scenario = get_scenario(r)?;
        if scenario.benchmark() != benchmark {
            return Err(Error::Format(format!("sample {i} belongs to {}", scenario.benchmark())));
        }
        let input_dims = get_dims(r)?;
        let query_dims = get_dims(r)?;
        let input_coords = intern(&mut pool, get_tensor(r)?);
        let input_values = get_tensor(r)?;
        let query_coords = intern(&mut pool, get_tensor(r)?);
        let targets = get_tensor(r)?;
        let sample = FunctionSample {
            input_coords,
            input_values,
            query_coords,
            targets,
            scenario,
            input_dims,
            query_dims,
        };
        sample
            .validate()
            .map_err(|e| Error::Format(format!("sample {i} is invalid: {e}")))?;
        samples.push(sample);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after the last sample".into()));
    }
    Ok(Dataset { benchmark, samples })
}

fn intern(pool: &mut Vec<Arc<Tensor>>, t: Tensor) -> Arc<Tensor> {
    if let Some(p) = pool.iter().find(|p| ***p == t) {
        return p.clone();
    }
    let a = Arc::new(t);
    pool.push(a.clone());
    a
}

fn put_u32<W: Write>(w: &mut W, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_dims<W: Write>(w: &mut W, dims: &[usize]) -> Result<()> {
    put_u32(w, dims.len(), "dim count")?;
    for &d in dims {
        put_u32(w, d, "grid dim")?;
    }
    Ok(())
}

fn put_scenario<W: Write>(w: &mut W, s: &Scenario) -> Result<()> {
    let (tag, vals): (u8, Vec<f64>) = match *s {
        Scenario::StepHeat { s } => (0, vec![s]),
        Scenario::DeltaHelmholtz { delta } => (1, vec![delta]),
        Scenario::Burgers { lambda } => (2, vec![lambda]),
        Scenario::GrfHelmholtz { ell, k, .. } => (3, vec![ell, k]),
    };
    w.write_all(&[tag])?;
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Scenario::GrfHelmholtz { seed, .. } = s {
        w.write_all(&seed.to_le_bytes())?;
    }
    Ok(())
}

fn put_tensor<W: Write>(w: &mut W, t: &Tensor) -> Result<()> {
    let ndim = u8::try_from(t.ndim()).map_err(|_| Error::Format("tensor rank above 255".into()))?;
    w.write_all(&[ndim])?;
    for &d in t.shape() {
        put_u32(w, d, "tensor dim")?;
    }
    let mut buf = Vec::with_capacity(8 * t.numel());
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("dataset file is truncated".into()),
        _ => Error::Io(e),
    })
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    read_exact(r, &mut b)?;
    Ok(b)
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(take(r)?))
}

fn get_dims<R: Read>(r: &mut R) -> Result<Vec<usize>> {
    let n = get_u32(r)? as usize;
    if n > 8 {
        return Err(Error::Format(format!("implausible grid rank {n}")));
    }
    (0..n).map(|_| get_u32(r).map(|v| v as usize)).collect()
}

fn get_scenario<R: Read>(r: &mut R) -> Result<Scenario> {
    Ok(match take::<1, _>(r)?[0] {
        0 => Scenario::StepHeat { s: get_f64(r)? },
        1 => Scenario::DeltaHelmholtz { delta: get_f64(r)? },
        2 => Scenario::Burgers { lambda: get_f64(r)? },
        3 => Scenario::GrfHelmholtz {
            ell: get_f64(r)?,
            k: get_f64(r)?,
            seed: u64::from_le_bytes(take(r)?),
        },
        t => return Err(Error::Format(format!("unknown scenario tag {t}"))),
    })
}

fn get_tensor<R: Read>(r: &mut R) -> Result<Tensor> {
    let ndim = take::<1, _>(r)?[0] as usize;
    let shape = (0..ndim)
        .map(|_| get_u32(r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let n: usize = shape.iter().product();
    if n > 1 << 28 {
        return Err(Error::Format(format!("implausible tensor shape {shape:?}")));
    }
    let mut bytes = vec![0u8; 8 * n];
    read_exact(r, &mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Tensor::new(shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{make_dataset, DatasetSpec, ParamSet, StepHeatConfig};

    fn small() -> Dataset {
        let spec = DatasetSpec::StepHeat {
            config: StepHeatConfig {
                n_x: 20,
                n_t: 5,
                ..Default::default()
            },
            s: ParamSet::uniform(4, 0.3, 0.7),
        };
        make_dataset(&spec, 7).unwrap()
    }

    #[test]
    fn round_trip_shares_coordinates() {
        let ds = small();
        let mut buf = Vec::new();
        encode(&mut buf, &ds).unwrap();
        let back = decode(&mut buf.as_slice()).unwrap();
        assert_eq!(back.benchmark, ds.benchmark);
        for (a, b) in ds.samples.iter().zip(&back.samples) {
            assert_eq!(a.scenario, b.scenario);
            assert_eq!(a.targets, b.targets);
            assert_eq!(a.input_values, b.input_values);
            assert_eq!(a.query_dims, b.query_dims);
        }
        assert!(Arc::ptr_eq(&back.samples[0].query_coords, &back.samples[3].query_coords));
    }

    #[test]
    fn same_seed_same_bytes() {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        encode(&mut a, &small()).unwrap();
        encode(&mut b, &small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        encode(&mut buf, &small()).unwrap();
        assert!(matches!(decode(&mut &buf[..buf.len() - 3]), Err(Error::Format(_))));
        buf[0] = b'X';
        assert!(matches!(decode(&mut buf.as_slice()), Err(Error::Format(_))));
    }
}
