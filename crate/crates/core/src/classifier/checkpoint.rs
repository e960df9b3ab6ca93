//! Binary model checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic     8 bytes  "EPDACKPT"
//! version   u32      1
//! hdr_len   u32      length of the JSON header
//! header    JSON     {"featurizer": {...}, "labels": [...]}
//! weights   f64 × dim·C
//! bias      f64 × C
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::FeaturizerConfig;
use super::model::Model;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"EPDACKPT";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    featurizer: FeaturizerConfig,
    labels: Vec<String>,
}

pub fn write_checkpoint<W: Write>(model: &Model, mut out: W) -> Result<()> {
    let header = serde_json::to_vec(&Header {
        featurizer: model.featurizer.clone(),
        labels: model.labels.clone(),
    })
    .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut buf = Vec::with_capacity(16 + header.len() + 8 * (model.weights.len() + model.bias.len()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    for w in model.weights.iter().chain(&model.bias) {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    out.write_all(&buf).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Model> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut cursor = bytes.as_slice();
    let mut take = |n: usize| -> Result<&[u8]> {
        if cursor.len() < n {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let (head, rest) = cursor.split_at(n);
        cursor = rest;
        Ok(head)
    };
    if take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let hdr_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let header: Header =
        serde_json::from_slice(take(hdr_len)?).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut model = Model::new(header.featurizer, header.labels)?;
    let n_params = model.weights.len() + model.bias.len();
    let body = take(8 * n_params)?;
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for w in model.weights.iter_mut().chain(model.bias.iter_mut()) {
        *w = values.next().expect("length checked");
    }
    if !cursor.is_empty() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    Ok(model)
}

impl Model {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_checkpoint(self, std::io::BufWriter::new(file)).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        read_checkpoint(std::io::BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
    }
}
