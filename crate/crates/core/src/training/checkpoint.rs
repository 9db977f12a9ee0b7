//! Checkpoint files.
//!
//! Layout (little endian): `b"UFOC"`, `u16` version, `u8` model kind,
//! `u8` benchmark, `u32` length + JSON header (network config and training
//! config echo), the normalizer as four `f64`, `u32` epoch, `f64` final loss,
//! `u32` parameter count and per parameter `u16` name length, name, `u8`
//! ndim, `u32` dims, `f64` data. A trailing `u8` flag announces optimizer
//! moments: `u64` step, then `m` and `v` data for each parameter in order.

use super::{AdamState, TrainConfig};
use crate::benchmarks::BenchmarkId;
use crate::error::{Error, Result};
use crate::model::{DeepOnet, DeepOnetConfig, Model, ModelKind, Network, Normalizer, Ufo, UfoConfig};
use crate::nn::Parameterized;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"UFOC";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub benchmark: BenchmarkId,
    pub model: Model,
    pub train_config: Option<TrainConfig>,
    pub epoch: usize,
    pub final_loss: f64,
    pub optimizer: Option<AdamState>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NetworkConfig {
    Ufo(UfoConfig),
    Deeponet(DeepOnetConfig),
}

#[derive(Serialize, Deserialize)]
struct Header {
    network: NetworkConfig,
    train: Option<TrainConfig>,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode(&mut w, ckpt)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    decode(&mut r)
}

fn len_u32(v: usize, what: &str) -> Result<[u8; 4]> {
    u32::try_from(v)
        .map(u32::to_le_bytes)
        .map_err(|_| Error::Format(format!("{what} {v} does not fit in u32")))
}

fn put_f64s<W: Write>(w: &mut W, data: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * data.len());
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn encode<W: Write>(w: &mut W, ckpt: &Checkpoint) -> Result<()> {
    let network = match &ckpt.model.network {
        Network::Ufo(u) => NetworkConfig::Ufo(u.config.clone()),
        Network::DeepOnet(d) => NetworkConfig::Deeponet(d.config.clone()),
    };
    let header = serde_json::to_vec(&Header {
        network,
        train: ckpt.train_config.clone(),
    })?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[ckpt.model.kind().code(), ckpt.benchmark.code()])?;
    w.write_all(&len_u32(header.len(), "header length")?)?;
    w.write_all(&header)?;
    let n = &ckpt.model.normalizer;
    put_f64s(w, &[n.input_mean, n.input_std, n.target_mean, n.target_std])?;
    w.write_all(&len_u32(ckpt.epoch, "epoch")?)?;
    w.write_all(&ckpt.final_loss.to_le_bytes())?;
    let params = ckpt.model.named_params();
    w.write_all(&len_u32(params.len(), "parameter count")?)?;
    for (name, t) in &params {
        let nb = name.as_bytes();
        let nl = u16::try_from(nb.len()).map_err(|_| Error::Format(format!("parameter name too long: {name}")))?;
        w.write_all(&nl.to_le_bytes())?;
        w.write_all(nb)?;
        w.write_all(&[t.ndim() as u8])?;
        for &d in t.shape() {
            w.write_all(&len_u32(d, "tensor dim")?)?;
        }
        put_f64s(w, t.data())?;
    }
    match &ckpt.optimizer {
        None => w.write_all(&[0])?,
        Some(st) => {
            if st.m.len() != params.len() || st.v.len() != params.len() {
                return Err(Error::contract("save_checkpoint", "optimizer state does not match the parameters"));
            }
            w.write_all(&[1])?;
            w.write_all(&st.step.to_le_bytes())?;
            for ((m, v), (_, p)) in st.m.iter().zip(&st.v).zip(&params) {
                if m.shape() != p.shape() || v.shape() != p.shape() {
                    return Err(Error::contract("save_checkpoint", "optimizer moment shape mismatch"));
                }
                put_f64s(w, m.data())?;
                put_f64s(w, v.data())?;
            }
        }
    }
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("checkpoint file is truncated".into()),
        _ => Error::Io(e),
    })
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    read_exact(r, &mut b)?;
    Ok(b)
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; 8 * n];
    read_exact(r, &mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    Ok(u32::from_le_bytes(take(r)?) as usize)
}

pub(crate) fn decode<R: Read>(r: &mut R) -> Result<Checkpoint> {
    if &take::<4, _>(r)? != MAGIC {
        return Err(Error::Format("not a checkpoint file (bad magic)".into()));
    }
    let version = u16::from_le_bytes(take(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let [kind, bench] = take::<2, _>(r)?;
    let kind = ModelKind::from_code(kind)?;
    let benchmark = BenchmarkId::from_code(bench)?;
    let hlen = get_u32(r)?;
    if hlen > 1 << 20 {
        return Err(Error::Format(format!("implausible header length {hlen}")));
    }
    let mut hbytes = vec![0u8; hlen];
    read_exact(r, &mut hbytes)?;
    let header: Header = serde_json::from_slice(&hbytes)?;
    let network = match (header.network, kind) {
        (NetworkConfig::Ufo(cfg), ModelKind::Ufo | ModelKind::UfoAblated) => Network::Ufo(Ufo::new(cfg, 0)?),
        (NetworkConfig::Deeponet(cfg), ModelKind::Deeponet) => Network::DeepOnet(DeepOnet::new(cfg, 0)?),
        _ => return Err(Error::Format("header network does not match the model kind".into())),
    };
    let nz = get_f64s(r, 4)?;
    let normalizer = Normalizer {
        input_mean: nz[0],
        input_std: nz[1],
        target_mean: nz[2],
        target_std: nz[3],
    };
    let mut model = Model { network, normalizer };
    if model.kind() != kind {
        return Err(Error::Format("header network does not match the model kind".into()));
    }
    let epoch = get_u32(r)?;
    let final_loss = f64::from_le_bytes(take(r)?);
    let count = get_u32(r)?;
    if count > 4096 {
        return Err(Error::Format(format!("implausible parameter count {count}")));
    }
    let mut named = Vec::with_capacity(count);
    for _ in 0..count {
        let nl = u16::from_le_bytes(take(r)?) as usize;
        let mut nb = vec![0u8; nl];
        read_exact(r, &mut nb)?;
        let name = String::from_utf8(nb).map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
        let ndim = take::<1, _>(r)?[0] as usize;
        let shape = (0..ndim).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?;
        let numel: usize = shape.iter().product();
        if numel > 1 << 26 {
            return Err(Error::Format(format!("implausible shape {shape:?} for {name}")));
        }
        let data = get_f64s(r, numel)?;
        named.push((name, Tensor::new(shape, data)?));
    }
    model.load_params(&named)?;
    let optimizer = match take::<1, _>(r)?[0] {
        0 => None,
        1 => {
            let step = u64::from_le_bytes(take(r)?);
            let mut m = Vec::with_capacity(count);
            let mut v = Vec::with_capacity(count);
            for (_, p) in &named {
                m.push(Tensor::new(p.shape().to_vec(), get_f64s(r, p.numel())?)?);
                v.push(Tensor::new(p.shape().to_vec(), get_f64s(r, p.numel())?)?);
            }
            Some(AdamState { m, v, step })
        }
        f => return Err(Error::Format(format!("bad optimizer flag {f}"))),
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    Ok(Checkpoint {
        benchmark,
        model,
        train_config: header.train,
        epoch,
        final_loss,
        optimizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{make_dataset, DatasetSpec, ParamSet, StepHeatConfig};
    use crate::training::{predict_sample, train, TrainConfig};

    #[test]
    fn round_trip_is_bit_exact() {
        let spec = DatasetSpec::StepHeat {
            config: StepHeatConfig {
                n_x: 20,
                n_t: 4,
                n_input: 16,
                ..Default::default()
            },
            s: ParamSet::uniform(2, 0.3, 0.7),
        };
        let ds = make_dataset(&spec, 1).unwrap();
        for kind in [ModelKind::Ufo, ModelKind::UfoAblated, ModelKind::Deeponet] {
            let cfg = TrainConfig {
                epochs: 1,
                batch_size: 2,
                ..TrainConfig::new(ds.benchmark, kind)
            };
            let ckpt = train(&ds, &cfg).unwrap().into_checkpoint(&cfg);
            let mut buf = Vec::new();
            encode(&mut buf, &ckpt).unwrap();
            let back = decode(&mut buf.as_slice()).unwrap();
            assert_eq!(back, ckpt);
            let (a, b) = (
                predict_sample(&ckpt.model, &ds.samples[0]).unwrap(),
                predict_sample(&back.model, &ds.samples[0]).unwrap(),
            );
            assert_eq!(a, b);
            assert!(decode(&mut &buf[..buf.len() - 1]).is_err());
        }
    }
}
