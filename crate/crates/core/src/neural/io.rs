//! Self-describing weights file.
//!
//! Layout: 8-byte magic, `u32` version, `u64` header length, JSON header
//! (architecture, standardizer, tensor names and lengths, batch-norm step
//! counts), the tensors as little-endian `f64` in header order, and a
//! trailing SHA-256 of everything before it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::input::Standardizer;
use super::model::ReceiverModel;
use super::Architecture;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SCMACNN\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    architecture: Architecture,
    standardizer: Option<Standardizer>,
    tensors: Vec<(String, usize)>,
    norm_updates: Vec<u64>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

fn tensors(model: &ReceiverModel) -> Vec<(String, &[f64])> {
    let mut out: Vec<(String, &[f64])> = model
        .param_names()
        .into_iter()
        .zip(model.params())
        .map(|(n, p)| (n, p.as_slice()))
        .collect();
    for (name, bn) in model.norm_names().into_iter().zip(model.norms()) {
        out.push((format!("{name}.running_mean"), &bn.running_mean));
        out.push((format!("{name}.running_var"), &bn.running_var));
    }
    out
}

pub fn to_bytes(model: &ReceiverModel) -> Result<Vec<u8>> {
    let list = tensors(model);
    let header = Header {
        architecture: *model.architecture(),
        standardizer: model.standardizer().cloned(),
        tensors: list.iter().map(|(n, t)| (n.clone(), t.len())).collect(),
        norm_updates: model.norms().iter().map(|bn| bn.updates).collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in &list {
        for v in t.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

/// Parses a weights file. With `expected` set, the stored architecture
/// must match it.
pub fn from_bytes(bytes: &[u8], expected: Option<&Architecture>) -> Result<ReceiverModel> {
    let corrupt = |what: &str| Error::Corrupt(what.to_string());
    if bytes.len() < MAGIC.len() + 12 + 32 || &bytes[..8] != MAGIC {
        return Err(corrupt("not a weights file"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch"));
    }
    let version = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Version(version));
    }
    let header_len = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
    let json = body.get(20..20 + header_len).ok_or_else(|| corrupt("truncated header"))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| Error::Corrupt(e.to_string()))?;
    if let Some(arch) = expected {
        if *arch != header.architecture {
            return Err(Error::ArchitectureMismatch(format!(
                "file holds {:?}, expected {:?}",
                header.architecture, arch
            )));
        }
    }

    let mut model = ReceiverModel::new(header.architecture, 0)?;
    let names: Vec<(String, usize)> = tensors(&model).into_iter().map(|(n, t)| (n, t.len())).collect();
    if names != header.tensors || header.norm_updates.len() != model.norms().len() {
        return Err(Error::ArchitectureMismatch("tensor list does not match the architecture".into()));
    }
    let mut values = body[20 + header_len..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let expected_values: usize = names.iter().map(|(_, n)| n).sum();
    if body.len() - 20 - header_len != expected_values * 8 {
        return Err(corrupt("tensor payload has the wrong size"));
    }
    for p in model.params_mut() {
        p.iter_mut().for_each(|x| *x = values.next().expect("sized"));
    }
    for (bn, updates) in model.norms_mut().into_iter().zip(&header.norm_updates) {
        bn.running_mean.iter_mut().for_each(|x| *x = values.next().expect("sized"));
        bn.running_var.iter_mut().for_each(|x| *x = values.next().expect("sized"));
        bn.updates = *updates;
    }
    if let Some(s) = header.standardizer {
        model.set_standardizer(s)?;
    }
    Ok(model)
}

pub fn save_weights(model: &ReceiverModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>, expected: Option<&Architecture>) -> Result<ReceiverModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes, expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_tamper_detection() {
        let arch = Architecture::small(4, 6, 2);
        let mut model = ReceiverModel::new(arch, 9).unwrap();
        model.norms_mut()[0].running_mean[3] = 0.125;
        model.norms_mut()[0].updates = 7;
        let bytes = to_bytes(&model).unwrap();
        let back = from_bytes(&bytes, Some(&arch)).unwrap();
        assert_eq!(back, model);

        let mut bad = bytes.clone();
        bad[bytes.len() / 2] ^= 1;
        assert!(matches!(from_bytes(&bad, None), Err(Error::Corrupt(_))));

        let other = Architecture::full(4, 6, 2);
        assert!(matches!(from_bytes(&bytes, Some(&other)), Err(Error::ArchitectureMismatch(_))));
    }
}
