//! Per-party model checkpoints: one JSON header line followed by the raw
//! little-endian (piece, prime) pairs of W0 then W1.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LearningRate, SecureModel};
use crate::error::{Error, Result};
use crate::ring::Z64;
use crate::sharing::RepShare;
use crate::tensor::SecureTensor;
use crate::transport::PartyId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub party: u8,
    pub epoch: u64,
    pub frac_bits: u32,
    pub lr: f64,
    /// (rows, cols) of W0 and W1.
    pub shapes: [(usize, usize); 2],
}

pub fn save_checkpoint(path: &Path, party: PartyId, model: &SecureModel) -> Result<()> {
    let header = CheckpointHeader {
        party: party.index() as u8,
        epoch: model.epoch,
        frac_bits: model.w0.frac_bits,
        lr: model.lr.get(),
        shapes: [model.w0.shape(), model.w1.shape()],
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut f, &header)?;
    f.write_all(b"\n")?;
    for s in model.w0.data.iter().chain(&model.w1.data) {
        f.write_all(&s.piece.to_le_bytes())?;
        f.write_all(&s.prime.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, SecureModel)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: CheckpointHeader = serde_json::from_str(line.trim_end())?;
    if header.party > 3 {
        return Err(Error::Integrity(format!("checkpoint names party {}", header.party)));
    }
    let mut read_tensor = |(rows, cols): (usize, usize)| -> Result<SecureTensor> {
        let mut buf = vec![0u8; rows * cols * 16];
        r.read_exact(&mut buf).map_err(|e| Error::Integrity(format!("truncated checkpoint payload: {e}")))?;
        let data = buf
            .chunks_exact(16)
            .map(|c| {
                let word = |o: usize| Z64::from_le_bytes(c[o..o + 8].try_into().expect("8 bytes"));
                RepShare::new(word(0), word(8))
            })
            .collect();
        SecureTensor::new(rows, cols, header.frac_bits, data)
    };
    let w0 = read_tensor(header.shapes[0])?;
    let w1 = read_tensor(header.shapes[1])?;
    if r.read(&mut [0u8])? != 0 {
        return Err(Error::Integrity("trailing bytes after checkpoint payload".into()));
    }
    let model = SecureModel { w0, w1, lr: LearningRate::new(header.lr)?, epoch: header.epoch };
    Ok((header, model))
}
