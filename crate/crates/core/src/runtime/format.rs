//! The `SIDUTXT1` bundle file.
//!
//! Layout: 8-byte ASCII magic, a little-endian `u32` header length `L`,
//! `L` bytes of UTF-8 JSON metadata, then raw little-endian `f32` tensors,
//! row-major. Tensor offsets in the metadata are relative to the first byte
//! after the header.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Architecture, ModelBundle, ModelWeights};
use super::vocab::{TokenizerSpec, Vocabulary};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SIDUTXT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub length: usize,
}

/// JSON metadata block of a bundle file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleHeader {
    pub format_version: u32,
    pub architecture: Architecture,
    pub tokenizer: TokenizerSpec,
    pub max_sequence_length: usize,
    pub vocabulary: Vec<String>,
    pub tensors: Vec<TensorEntry>,
}

/// Reads and validates a bundle file.
pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let bytes = fs::read(path)?;
    decode_bundle(&bytes)
}

/// Parses only the metadata block.
pub fn read_header(bytes: &[u8]) -> Result<(BundleHeader, usize)> {
    if bytes.len() < MAGIC.len() {
        return Err(Error::MalformedHeader(format!(
            "file is {} bytes, shorter than the magic",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::MalformedHeader("unknown magic".into()));
    }
    let len_bytes: [u8; 4] = bytes
        .get(8..12)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::MalformedHeader("missing header length".into()))?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let data_start = 12 + header_len;
    if data_start > bytes.len() {
        return Err(Error::MalformedHeader(format!(
            "header length {header_len} exceeds file size {}",
            bytes.len()
        )));
    }
    let header: BundleHeader = serde_json::from_slice(&bytes[12..data_start])
        .map_err(|e| Error::MalformedHeader(format!("metadata: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported format_version {}",
            header.format_version
        )));
    }
    Ok((header, data_start))
}

pub fn decode_bundle(bytes: &[u8]) -> Result<ModelBundle> {
    let (header, data_start) = read_header(bytes)?;
    let data = &bytes[data_start..];
    let vocab = Vocabulary::new(
        header.vocabulary,
        header.max_sequence_length,
        header.tokenizer,
    )?;
    let arch = header.architecture;
    let mut tensors: Vec<Vec<f32>> = Vec::with_capacity(7);
    for (name, shape) in ModelBundle::tensor_layout(&vocab, &arch) {
        let entry = header
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::MalformedHeader(format!("missing tensor `{name}`")))?;
        if entry.shape != shape {
            return Err(Error::ShapeMismatch {
                field: name.into(),
                expected: shape,
                found: entry.shape.clone(),
            });
        }
        let want = shape.iter().product::<usize>() * 4;
        if entry.length != want {
            return Err(Error::ShapeMismatch {
                field: name.into(),
                expected: vec![want],
                found: vec![entry.length],
            });
        }
        let end = entry
            .offset
            .checked_add(entry.length)
            .filter(|&end| end <= data.len())
            .ok_or_else(|| Error::TruncatedTensor {
                field: name.into(),
                start: entry.offset,
                end: entry.offset.saturating_add(entry.length),
                available: data.len(),
            })?;
        tensors.push(
            data[entry.offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        );
    }
    let mut it = tensors.into_iter();
    let mut next = || it.next().expect("seven tensors");
    let weights = ModelWeights {
        embedding: next(),
        conv_filters: next(),
        conv_bias: next(),
        dense1_weights: next(),
        dense1_bias: next(),
        output_weights: next(),
        output_bias: next(),
    };
    ModelBundle::new(vocab, arch, weights)
}

/// Serialises a bundle; tensors are written in canonical order.
pub fn encode_bundle(model: &ModelBundle) -> Vec<u8> {
    let vocab = model.vocabulary();
    let mut offset = 0;
    let mut entries = Vec::new();
    let mut data = Vec::new();
    for ((name, shape), (_, tensor)) in ModelBundle::tensor_layout(vocab, model.architecture())
        .into_iter()
        .zip(model.weights().tensors())
    {
        let length = tensor.len() * 4;
        entries.push(TensorEntry {
            name: name.into(),
            shape,
            offset,
            length,
        });
        offset += length;
        for x in tensor {
            data.extend_from_slice(&x.to_le_bytes());
        }
    }
    let header = BundleHeader {
        format_version: FORMAT_VERSION,
        architecture: *model.architecture(),
        tokenizer: vocab.tokenizer(),
        max_sequence_length: vocab.max_sequence_length(),
        vocabulary: vocab.tokens().to_vec(),
        tensors: entries,
    };
    let json = serde_json::to_vec(&header).expect("header serialises");
    let mut out = Vec::with_capacity(12 + json.len() + data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&data);
    out
}

pub fn save_bundle(model: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_bundle(model))?;
    Ok(())
}
