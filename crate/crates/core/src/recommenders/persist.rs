//! Versioned binary container for trained models.
//!
//! All integers are little-endian `u64` unless noted, all reals little-endian
//! IEEE-754 doubles. Layout:
//!
//! ```text
//! magic        8 bytes  "CRSLMODL"
//! version      u32      currently 1
//! algorithm    string   (u32 byte length + UTF-8), e.g. "itemknn-cf"
//! params       u32 count, then count × (string name, f64 value)
//! kind         u8       1 popularity | 2 similarity | 3 factors | 4 dense weights
//! payload      kind-specific, see below
//!
//! popularity   vector<u64> counts
//! similarity   u8 orientation (0 item-based, 1 user-based), csr
//! factors      dense user_factors, dense item_factors, vector<f64> singular values
//! dense        dense weights
//!
//! vector<T>    u64 len, len × T
//! dense        u64 rows, u64 cols, rows × cols f64 in row-major order
//! csr          u64 rows, u64 cols, u64 nnz, (rows + 1) × u64 indptr,
//!              nnz × u64 column indices, nnz × f64 values
//! ```
//!
//! Trailing bytes after the payload are rejected.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{
    Algorithm, DenseWeightModel, FactorModel, HyperParams, Model, Orientation, PopularityModel,
    SimilarityModel, TrainedModel,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub const MAGIC: &[u8; 8] = b"CRSLMODL";
pub const VERSION: u32 = 1;

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn dense(&mut self, m: &DMatrix<f64>) {
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)]);
            }
        }
    }
    fn csr(&mut self, m: &CsrMatrix) {
        let (indptr, indices, values) = m.raw_parts();
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        self.u64(values.len() as u64);
        indptr.iter().for_each(|&v| self.u64(v as u64));
        indices.iter().for_each(|&v| self.u64(v as u64));
        values.iter().for_each(|&v| self.f64(v));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| format!("truncated container at byte {}", self.pos))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize, String> {
        usize::try_from(self.u64()?).map_err(|_| "length does not fit in memory".to_string())
    }
    fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String, String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| "invalid UTF-8 string".to_string())
    }
    /// Length prefix checked against the remaining bytes before allocating.
    fn count(&mut self, elem_size: usize) -> Result<usize, String> {
        let n = self.usize()?;
        self.check_fits(n, elem_size)?;
        Ok(n)
    }
    fn check_fits(&self, n: usize, elem_size: usize) -> Result<(), String> {
        match n.checked_mul(elem_size) {
            Some(bytes) if bytes <= self.buf.len() - self.pos => Ok(()),
            _ => Err(format!("declared length {n} exceeds the container size")),
        }
    }
    fn dense(&mut self) -> Result<DMatrix<f64>, String> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        self.check_fits(rows.checked_mul(cols).ok_or("matrix too large")?, 8)?;
        let mut m = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = self.f64()?;
            }
        }
        Ok(m)
    }
    fn csr(&mut self) -> Result<CsrMatrix, String> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let nnz = self.usize()?;
        self.check_fits(rows.saturating_add(1), 8)?;
        let indptr = (0..=rows).map(|_| self.usize()).collect::<Result<Vec<_>, _>>()?;
        self.check_fits(nnz, 16)?;
        let indices = (0..nnz).map(|_| self.usize()).collect::<Result<Vec<_>, _>>()?;
        let values = (0..nnz).map(|_| self.f64()).collect::<Result<Vec<_>, _>>()?;
        CsrMatrix::from_raw_parts(rows, cols, indptr, indices, values).map_err(|e| e.to_string())
    }
}

/// Serializes a trained model into the container format.
pub fn encode(model: &TrainedModel) -> Vec<u8> {
    let mut w = Writer::default();
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.str(model.algorithm.id());
    w.u32(HyperParams::NAMES.len() as u32);
    for name in HyperParams::NAMES {
        w.str(name);
        w.f64(model.params.get(name).expect("known name"));
    }
    match &model.model {
        Model::Popularity(m) => {
            w.u8(1);
            w.u64(m.counts().len() as u64);
            m.counts().iter().for_each(|&c| w.u64(c as u64));
        }
        Model::Similarity(m) => {
            w.u8(2);
            w.u8(match m.orientation() {
                Orientation::ItemBased => 0,
                Orientation::UserBased => 1,
            });
            w.csr(m.similarity());
        }
        Model::Factors(m) => {
            w.u8(3);
            w.dense(m.user_factors());
            w.dense(m.item_factors());
            w.u64(m.singular_values().len() as u64);
            m.singular_values().iter().for_each(|&s| w.f64(s));
        }
        Model::DenseWeights(m) => {
            w.u8(4);
            w.dense(m.weights());
        }
    }
    w.buf
}

/// Parses a container produced by [`encode`].
pub fn decode(bytes: &[u8]) -> Result<TrainedModel, String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a model container (bad magic bytes)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported container version {version}"));
    }
    let algorithm: Algorithm = r.str()?.parse().map_err(|e: Error| e.to_string())?;
    let mut params = HyperParams::default();
    let count = r.u32()? as usize;
    for _ in 0..count {
        let name = r.str()?;
        let value = r.f64()?;
        params.set(&name, value).map_err(|e| e.to_string())?;
    }
    let model = match r.u8()? {
        1 => {
            let n = r.count(8)?;
            let counts = (0..n).map(|_| r.usize()).collect::<Result<Vec<_>, _>>()?;
            Model::Popularity(PopularityModel::from_counts(counts))
        }
        2 => {
            let orientation = match r.u8()? {
                0 => Orientation::ItemBased,
                1 => Orientation::UserBased,
                o => return Err(format!("unknown similarity orientation {o}")),
            };
            Model::Similarity(SimilarityModel::new(r.csr()?, orientation))
        }
        3 => {
            let users = r.dense()?;
            let items = r.dense()?;
            let n = r.count(8)?;
            let s = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            Model::Factors(
                FactorModel::new(users, items, DVector::from_vec(s)).map_err(|e| e.to_string())?,
            )
        }
        4 => Model::DenseWeights(DenseWeightModel::new(r.dense()?).map_err(|e| e.to_string())?),
        k => return Err(format!("unknown model kind {k}")),
    };
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes after payload", bytes.len() - r.pos));
    }
    Ok(TrainedModel {
        algorithm,
        params,
        model,
    })
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|m| Error::format(path, m))
}
