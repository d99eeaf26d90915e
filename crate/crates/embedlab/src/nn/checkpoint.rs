//! Parameter checkpoints: one JSON header line describing named tensor
//! shapes, followed by the concatenated little-endian `f64` data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Serialize, Deserialize)]
struct Header {
    tensors: Vec<TensorMeta>,
}

#[derive(Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    shape: Vec<usize>,
}

pub fn save_tensors(path: &Path, tensors: &[(&str, &Tensor)]) -> Result<()> {
    let header = Header {
        tensors: tensors
            .iter()
            .map(|(name, t)| TensorMeta {
                name: name.to_string(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header_json = serde_json::to_string(&header).expect("header serializes");
    writeln!(w, "{header_json}").map_err(|e| Error::io(path, e))?;
    for (_, t) in tensors {
        for v in t.data() {
            w.write_all(&v.to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_tensors(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header_line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match r.read(&mut byte) {
            Ok(0) => return Err(Error::format(path, "missing header line")),
            Ok(_) if byte[0] == b'\n' => break,
            Ok(_) => header_line.push(byte[0]),
            Err(e) => return Err(Error::io(path, e)),
        }
    }
    let header: Header = serde_json::from_slice(&header_line)
        .map_err(|e| Error::format(path, format!("bad header: {e}")))?;

    let mut out = Vec::with_capacity(header.tensors.len());
    for meta in header.tensors {
        let len: usize = meta.shape.iter().product();
        let mut raw = vec![0u8; len * 8];
        r.read_exact(&mut raw).map_err(|_| {
            Error::format(path, format!("truncated data for tensor {:?}", meta.name))
        })?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        out.push((meta.name, Tensor::from_vec(&meta.shape, data)?));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format(path, "trailing bytes after tensor data"));
    }
    Ok(out)
}
