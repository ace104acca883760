//! Binary model format.
//!
//! ```text
//! magic        4 bytes   "NCSE"
//! version      u16 LE    1
//! layer count  u32 LE
//! per layer    rows u32 LE, cols u32 LE, activation tag u8
//! parameters   f64 LE, layer by layer: weights row-major (rows × cols), then bias (rows)
//! ```
//!
//! `rows` is the layer's output width and `cols` its input width.
//! Activation tags: 0 identity, 1 relu, 2 tanh, 3 sigmoid, 4 l2_normalize.

use super::matrix::Matrix;
use super::net::{Activation, DenseNet, Layer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NCSE";
pub const VERSION: u16 = 1;

pub fn encode(net: &DenseNet) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + net.layers().len() * 9 + net.param_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for l in net.layers() {
        out.extend_from_slice(&(l.output_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(l.input_dim() as u32).to_le_bytes());
        out.push(l.activation.tag());
    }
    for l in net.layers() {
        for v in l.weights.as_slice().iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::BadModelFile(format!(
                "truncated at byte {} (needed {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<DenseNet> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::BadModelFile("missing NCSE magic".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::BadModelFile(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    if count == 0 || count > 1024 {
        return Err(Error::BadModelFile(format!("implausible layer count {count}")));
    }
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let tag = r.take(1)?[0];
        let act = Activation::from_tag(tag)
            .ok_or_else(|| Error::BadModelFile(format!("unknown activation tag {tag}")))?;
        shapes.push((rows, cols, act));
    }
    let mut layers = Vec::with_capacity(count);
    for (rows, cols, activation) in shapes {
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::BadModelFile("layer too large".into()))?;
        if expected > bytes.len() {
            return Err(Error::BadModelFile("layer larger than file".into()));
        }
        let w = (0..rows * cols).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let bias = (0..rows).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        layers.push(Layer {
            weights: Matrix::from_vec(rows, cols, w)?,
            bias,
            activation,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::BadModelFile(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    DenseNet::new(layers).map_err(|e| Error::BadModelFile(e.to_string()))
}
