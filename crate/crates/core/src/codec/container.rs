//! Binary container for a truncated Tucker operator and its transforms.
//!
//! All fields are little-endian. The 36-byte header is
//!
//! | bytes | field |
//! |-------|-------|
//! | 0..4  | magic `HSVZ` |
//! | 4..6  | version (u16, 1) |
//! | 6..8  | flags (u16, reserved, 0) |
//! | 8..32 | `K, J, F, v, r2, f` (u32 each) |
//! | 32    | value width in bytes, 4 or 8 |
//! | 33    | strategy tag |
//! | 34    | metric tag |
//! | 35    | reserved |
//!
//! followed by `U1` (`K x v`), `U2` (`3 x 3`), `U3` (`F x f`) in column-major
//! order, the `v x 3 x f` core in tensor order and `F` row-major 3x4
//! transforms.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::decomposition::TruncatedTucker;
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::rigid::TransformSequence;
use crate::search::{Strategy, TRANSFORM_VALUES_PER_FRAME};
use crate::tensor::{Mode, Tensor3};

pub const MAGIC: [u8; 4] = *b"HSVZ";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 36;

/// Width of every stored value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Single,
    Double,
}

impl Precision {
    pub fn bytes(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    pub fn from_bytes(n: usize) -> Option<Self> {
        match n {
            4 => Some(Precision::Single),
            8 => Some(Precision::Double),
            _ => None,
        }
    }

    /// Rounds `x` to the stored width.
    pub fn quantize(self, x: f64) -> f64 {
        match self {
            Precision::Single => x as f32 as f64,
            Precision::Double => x,
        }
    }
}

/// Decoded container. Values are already rounded to `precision`, so
/// serialising and parsing again reproduces every bit.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedAnimation {
    pub vertices: usize,
    pub frames: usize,
    pub precision: Precision,
    pub strategy: Strategy,
    pub metric: Metric,
    pub operator: TruncatedTucker,
    pub transforms: TransformSequence,
}

/// Number of stored values for ranks `(v, 3, f)` including transforms.
pub fn payload_values(k: usize, frames: usize, v: usize, f: usize) -> usize {
    v * k + 9 + f * frames + 3 * v * f + TRANSFORM_VALUES_PER_FRAME * frames
}

impl CompressedAnimation {
    pub fn ranks(&self) -> (usize, usize) {
        let r = self.operator.ranks();
        (r[0], r[2])
    }

    pub fn payload_len(&self) -> usize {
        let (v, f) = self.ranks();
        payload_values(self.vertices, self.frames, v, f) * self.precision.bytes()
    }

    pub fn byte_len(&self) -> usize {
        HEADER_LEN + self.payload_len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (v, f) = self.ranks();
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        for n in [self.vertices, 3, self.frames, v, 3, f] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        out.push(self.precision.bytes() as u8);
        out.push(self.strategy.tag());
        out.push(self.metric.tag());
        out.push(0);

        let precision = self.precision;
        let mut put = |x: f64| match precision {
            Precision::Single => out.extend_from_slice(&(x as f32).to_le_bytes()),
            Precision::Double => out.extend_from_slice(&x.to_le_bytes()),
        };
        for mode in Mode::ALL {
            self.operator.factor(mode).iter().for_each(|&x| put(x));
        }
        self.operator.core().data().iter().for_each(|&x| put(x));
        for t in self.transforms.iter() {
            t.to_row_major().into_iter().for_each(&mut put);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "container is {} bytes, shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let version = u16_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        if u16_at(6) != 0 {
            return Err(Error::Format(format!("unsupported flags {:#x}", u16_at(6))));
        }
        let [k, j, frames, v, r2, f] = [8, 12, 16, 20, 24, 28].map(u32_at);
        if j != 3 || r2 != 3 {
            return Err(Error::Format(format!(
                "spatial dimension and rank must be 3, got {j} and {r2}"
            )));
        }
        if k == 0 || frames == 0 || v == 0 || f == 0 || v > k || f > frames {
            return Err(Error::Format(format!(
                "invalid dimensions K={k} F={frames} with ranks v={v} f={f}"
            )));
        }
        let precision = Precision::from_bytes(bytes[32] as usize)
            .ok_or_else(|| Error::Format(format!("unsupported value width {}", bytes[32])))?;
        let strategy = Strategy::from_tag(bytes[33])
            .ok_or_else(|| Error::Format(format!("unknown strategy tag {}", bytes[33])))?;
        let metric = Metric::from_tag(bytes[34])
            .ok_or_else(|| Error::Format(format!("unknown metric tag {}", bytes[34])))?;

        let expected = payload_values(k, frames, v, f)
            .checked_mul(precision.bytes())
            .ok_or_else(|| Error::Format("payload size overflows".into()))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != expected {
            return Err(Error::Format(format!(
                "payload is {} bytes, header requires {expected}",
                payload.len()
            )));
        }
        let values: Vec<f64> = match precision {
            Precision::Single => payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            Precision::Double => payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        };
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite value at payload index {i}"
            )));
        }

        let mut rest = values.as_slice();
        let mut take = |n: usize| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head.to_vec()
        };
        let u1 = DMatrix::from_vec(k, v, take(k * v));
        let u2 = DMatrix::from_vec(3, 3, take(9));
        let u3 = DMatrix::from_vec(frames, f, take(frames * f));
        let core = Tensor3::from_vec([v, 3, f], take(v * 3 * f))?;
        let rows: Vec<[f64; 12]> = take(TRANSFORM_VALUES_PER_FRAME * frames)
            .chunks_exact(12)
            .map(|c| c.try_into().unwrap())
            .collect();
        Ok(Self {
            vertices: k,
            frames,
            precision,
            strategy,
            metric,
            operator: TruncatedTucker::new(core, [u1, u2, u3])?,
            transforms: TransformSequence::from_row_major(&rows)?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
