//! Flat binary instance container plus a JSON metadata sidecar.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "SRPR1"            5 bytes magic
//! p, n               u64, u64
//! tag                u8   0 = dense Gaussian, 1 = randomized Hadamard
//! payload            dense: n·p f64 row-major | hadamard: k u64, k·p i8 signs
//! b                  n f64
//! has_x_star         u8, then p f64 when 1
//! has_mask           u8, then n u8 (1 = inlier) when 1
//! ```
//!
//! The sidecar (`<file>.json`) carries the corruption spec and seed, which the
//! binary does not encode.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CorruptionSpec, Instance, SensingEnsemble};
use crate::error::{Result, SrprError};

const MAGIC: &[u8; 5] = b"SRPR1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub format: String,
    pub p: usize,
    pub n: usize,
    pub ensemble: String,
    pub blocks: Option<usize>,
    pub corruption: CorruptionSpec,
    pub seed: u64,
    pub has_ground_truth: bool,
    pub outliers: Option<usize>,
}

impl InstanceMetadata {
    pub fn of(inst: &Instance) -> Self {
        let (ensemble, blocks) = match &inst.ensemble {
            SensingEnsemble::DenseGaussian { .. } => ("gaussian", None),
            SensingEnsemble::RandomizedHadamard { k, .. } => ("hadamard", Some(*k)),
        };
        InstanceMetadata {
            format: "SRPR1".into(),
            p: inst.p(),
            n: inst.n(),
            ensemble: ensemble.into(),
            blocks,
            corruption: inst.corruption,
            seed: inst.seed,
            has_ground_truth: inst.x_star.is_some(),
            outliers: inst
                .inlier_mask
                .as_ref()
                .map(|m| m.iter().filter(|&&v| !v).count()),
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_instance<W: Write>(mut w: W, inst: &Instance) -> Result<()> {
    inst.validate()?;
    w.write_all(MAGIC)?;
    w.write_all(&(inst.p() as u64).to_le_bytes())?;
    w.write_all(&(inst.n() as u64).to_le_bytes())?;
    match &inst.ensemble {
        SensingEnsemble::DenseGaussian { rows, .. } => {
            w.write_all(&[0])?;
            write_f64s(&mut w, rows)?;
        }
        SensingEnsemble::RandomizedHadamard { k, signs, .. } => {
            w.write_all(&[1])?;
            w.write_all(&(*k as u64).to_le_bytes())?;
            let bytes: Vec<u8> = signs.iter().map(|&s| s as u8).collect();
            w.write_all(&bytes)?;
        }
    }
    write_f64s(&mut w, &inst.b)?;
    match &inst.x_star {
        Some(x) => {
            w.write_all(&[1])?;
            write_f64s(&mut w, x)?;
        }
        None => w.write_all(&[0])?,
    }
    match &inst.inlier_mask {
        Some(m) => {
            w.write_all(&[1])?;
            let bytes: Vec<u8> = m.iter().map(|&v| u8::from(v)).collect();
            w.write_all(&bytes)?;
        }
        None => w.write_all(&[0])?,
    }
    w.flush()?;
    Ok(())
}

/// Reads the binary part; corruption spec and seed are left at defaults.
pub fn read_instance<R: Read>(mut r: R) -> Result<Instance> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SrprError::Format("bad magic bytes".into()));
    }
    let p = read_len(&mut r)?;
    let n = read_len(&mut r)?;
    let tag = read_u8(&mut r)?;
    let ensemble = match tag {
        0 => {
            let count = p
                .checked_mul(n)
                .ok_or_else(|| SrprError::Format("dimensions overflow".into()))?;
            SensingEnsemble::from_rows(p, n, read_f64s(&mut r, count)?)?
        }
        1 => {
            let k = read_len(&mut r)?;
            if k.checked_mul(p) != Some(n) {
                return Err(SrprError::Format(format!("n = {n} is not k·p = {k}·{p}")));
            }
            let mut bytes = vec![0u8; n];
            r.read_exact(&mut bytes)?;
            let signs = bytes.into_iter().map(|b| b as i8).collect();
            SensingEnsemble::hadamard_from_signs(p, k, signs)?
        }
        t => return Err(SrprError::Format(format!("unknown ensemble tag {t}"))),
    };
    let b = read_f64s(&mut r, n)?;
    let x_star = match read_u8(&mut r)? {
        0 => None,
        1 => Some(read_f64s(&mut r, p)?),
        f => return Err(SrprError::Format(format!("bad ground-truth flag {f}"))),
    };
    let inlier_mask = match read_u8(&mut r)? {
        0 => None,
        1 => {
            let mut bytes = vec![0u8; n];
            r.read_exact(&mut bytes)?;
            Some(bytes.into_iter().map(|v| v != 0).collect())
        }
        f => return Err(SrprError::Format(format!("bad mask flag {f}"))),
    };
    Ok(Instance {
        ensemble,
        b,
        x_star,
        inlier_mask,
        corruption: CorruptionSpec::none(),
        seed: 0,
    })
}

/// Writes `path` and its JSON sidecar.
pub fn save_instance(path: &Path, inst: &Instance) -> Result<()> {
    write_instance(BufWriter::new(File::create(path)?), inst)?;
    let meta = InstanceMetadata::of(inst);
    let side = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(side, &meta)?;
    Ok(())
}

/// Reads `path`, restoring corruption spec and seed from the sidecar when present.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let mut inst = read_instance(BufReader::new(File::open(path)?))?;
    let side = sidecar_path(path);
    if side.exists() {
        let meta: InstanceMetadata = serde_json::from_reader(BufReader::new(File::open(side)?))?;
        if meta.p != inst.p() || meta.n != inst.n() {
            return Err(SrprError::Format("sidecar dimensions disagree with binary".into()));
        }
        inst.corruption = meta.corruption;
        inst.seed = meta.seed;
    }
    Ok(inst)
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| SrprError::Format("length overflow".into()))
}
