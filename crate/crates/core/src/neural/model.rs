use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use super::mlp::{MlpWeights, F0_INPUTS, F0_OUTPUTS, F1_INPUTS, F1_OUTPUTS};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LMLVAMP\0";
const VERSION: u32 = 1;
const FLAG_FIX_BETA: u32 = 1;
const FLAG_SHARED: u32 = 2;

/// Networks for `T` unrolled iterations.
///
/// With `shared` set, every iteration uses the networks stored at index 0;
/// the remaining entries are kept as copies so the lists always have length
/// `T`. With `fix_beta` set, f0 is bypassed and `(beta0, beta1) = (1, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnrolledModel {
    pub f1_weights: Vec<MlpWeights>,
    pub f0_weights: Vec<MlpWeights>,
    pub p_sat: f64,
    pub t_max: usize,
    pub fix_beta: bool,
    pub shared: bool,
}

impl UnrolledModel {
    pub fn init<R: Rng + ?Sized>(t_max: usize, p_sat: f64, fix_beta: bool, shared: bool, rng: &mut R) -> Result<Self> {
        if t_max == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if !(p_sat > 0.0 && p_sat.is_finite()) {
            return Err(Error::InvalidParameter(format!("P_sat = {p_sat}")));
        }
        let mut f1_weights = Vec::with_capacity(t_max);
        let mut f0_weights = Vec::with_capacity(t_max);
        for _ in 0..t_max {
            f1_weights.push(MlpWeights::init_f1(rng));
            f0_weights.push(MlpWeights::init_f0(rng));
        }
        let mut m = Self { f1_weights, f0_weights, p_sat, t_max, fix_beta, shared };
        m.sync_shared();
        Ok(m)
    }

    /// Index of the networks used at iteration `t`.
    pub fn net_index(&self, t: usize) -> usize {
        if self.shared {
            0
        } else {
            t
        }
    }

    pub fn f1(&self, t: usize) -> &MlpWeights {
        &self.f1_weights[self.net_index(t)]
    }

    pub fn f0(&self, t: usize) -> &MlpWeights {
        &self.f0_weights[self.net_index(t)]
    }

    /// Number of distinct network sets.
    pub fn distinct_nets(&self) -> usize {
        if self.shared {
            1
        } else {
            self.t_max
        }
    }

    fn sync_shared(&mut self) {
        if self.shared {
            for t in 1..self.t_max {
                self.f1_weights[t] = self.f1_weights[0].clone();
                self.f0_weights[t] = self.f0_weights[0].clone();
            }
        }
    }

    /// Trainable parameters: for each distinct iteration, f1 then f0 (f0
    /// omitted under `fix_beta`).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        for t in 0..self.distinct_nets() {
            p.extend(self.f1_weights[t].flat());
            if !self.fix_beta {
                p.extend(self.f0_weights[t].flat());
            }
        }
        p
    }

    pub fn num_params(&self) -> usize {
        (0..self.distinct_nets())
            .map(|t| self.f1_weights[t].num_params() + if self.fix_beta { 0 } else { self.f0_weights[t].num_params() })
            .sum()
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::LengthMismatch { expected: self.num_params(), got: p.len() });
        }
        let mut rest = p;
        for t in 0..self.distinct_nets() {
            let k = self.f1_weights[t].num_params();
            self.f1_weights[t].set_flat(&rest[..k])?;
            rest = &rest[k..];
            if !self.fix_beta {
                let k = self.f0_weights[t].num_params();
                self.f0_weights[t].set_flat(&rest[..k])?;
                rest = &rest[k..];
            }
        }
        self.sync_shared();
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.f1_weights.iter().chain(&self.f0_weights).all(MlpWeights::is_finite)
    }

    fn validate(&self) -> Result<()> {
        if self.t_max == 0 || self.f1_weights.len() != self.t_max || self.f0_weights.len() != self.t_max {
            return Err(Error::ModelFormat("network lists must have length T >= 1".into()));
        }
        for w in &self.f1_weights {
            if (w.d_in, w.d_out) != (F1_INPUTS, F1_OUTPUTS) {
                return Err(Error::ModelFormat(format!("f1 has shape {}->{}", w.d_in, w.d_out)));
            }
        }
        for w in &self.f0_weights {
            if (w.d_in, w.d_out) != (F0_INPUTS, F0_OUTPUTS) {
                return Err(Error::ModelFormat(format!("f0 has shape {}->{}", w.d_in, w.d_out)));
            }
        }
        Ok(())
    }

    /// Little-endian binary encoding.
    ///
    /// Layout: magic `LMLVAMP\0`, `u32` version, `u32` T, `u32` flags
    /// (bit 0 fix_beta, bit 1 shared), `f64` P_sat, then for each iteration
    /// the f1 and f0 networks, each as `u32` (d_in, hidden, d_out) followed by
    /// `w1, b1, w2, b2` as `f64`.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.t_max as u32).to_le_bytes());
        let flags = if self.fix_beta { FLAG_FIX_BETA } else { 0 } | if self.shared { FLAG_SHARED } else { 0 };
        out.extend_from_slice(&flags.to_le_bytes());
        out.extend_from_slice(&self.p_sat.to_le_bytes());
        for t in 0..self.t_max {
            for w in [&self.f1_weights[t], &self.f0_weights[t]] {
                for d in [w.d_in, w.hidden, w.d_out] {
                    out.extend_from_slice(&(d as u32).to_le_bytes());
                }
                for v in w.flat() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let t_max = r.u32()? as usize;
        let flags = r.u32()?;
        let p_sat = r.f64()?;
        let mut f1_weights = Vec::with_capacity(t_max);
        let mut f0_weights = Vec::with_capacity(t_max);
        for _ in 0..t_max {
            f1_weights.push(r.mlp()?);
            f0_weights.push(r.mlp()?);
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let m = Self {
            f1_weights,
            f0_weights,
            p_sat,
            t_max,
            fix_beta: flags & FLAG_FIX_BETA != 0,
            shared: flags & FLAG_SHARED != 0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut bytes = Vec::new();
        f.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::ModelFormat("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn mlp(&mut self) -> Result<MlpWeights> {
        let d_in = self.u32()? as usize;
        let hidden = self.u32()? as usize;
        let d_out = self.u32()? as usize;
        if d_in > 64 || hidden > 4096 || d_out > 64 {
            return Err(Error::ModelFormat(format!("implausible layer shape {d_in}x{hidden}x{d_out}")));
        }
        let mut w = MlpWeights::zeros(d_in, hidden, d_out);
        let p: Vec<f64> = (0..w.num_params()).map(|_| self.f64()).collect::<Result<_>>()?;
        w.set_flat(&p)?;
        Ok(w)
    }
}
