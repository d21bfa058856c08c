//! Row-major matrices of replicated shares held by one party.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{decode_fixed, encode_fixed, Z64};
use crate::sharing::{reconstruct_all, share_rep, RepShare};
use crate::transport::PartyId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecureTensor {
    pub rows: usize,
    pub cols: usize,
    pub frac_bits: u32,
    pub data: Vec<RepShare>,
}

impl SecureTensor {
    pub fn new(rows: usize, cols: usize, frac_bits: u32, data: Vec<RepShare>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} shares for a {rows}×{cols} tensor", data.len())));
        }
        Ok(SecureTensor { rows, cols, frac_bits, data })
    }

    pub fn zeros(rows: usize, cols: usize, frac_bits: u32) -> Self {
        SecureTensor { rows, cols, frac_bits, data: vec![RepShare::ZERO; rows * cols] }
    }

    /// Column vector from shares.
    pub fn column(data: Vec<RepShare>, frac_bits: u32) -> Self {
        SecureTensor { rows: data.len(), cols: 1, frac_bits, data }
    }

    /// Sharing of a public matrix of raw values, as held by `party`.
    pub fn public(party: PartyId, rows: usize, cols: usize, frac_bits: u32, raw: &[Z64]) -> Result<Self> {
        SecureTensor::new(rows, cols, frac_bits, raw.iter().map(|&c| RepShare::public(party, c)).collect())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn at(&self, r: usize, c: usize) -> RepShare {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[RepShare] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> SecureTensor {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.at(r, c));
            }
        }
        SecureTensor { rows: self.cols, cols: self.rows, frac_bits: self.frac_bits, data }
    }

    fn check_same(&self, o: &SecureTensor) -> Result<()> {
        if self.shape() != o.shape() {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.shape(), o.shape())));
        }
        Ok(())
    }

    pub fn add(&self, o: &SecureTensor) -> Result<SecureTensor> {
        self.check_same(o)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| *a + *b).collect();
        Ok(SecureTensor { data, ..*self })
    }

    pub fn sub(&self, o: &SecureTensor) -> Result<SecureTensor> {
        self.check_same(o)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| *a - *b).collect();
        Ok(SecureTensor { data, ..*self })
    }

    /// Multiplies every entry by a public integer.
    pub fn scale(&self, c: i64) -> SecureTensor {
        SecureTensor { data: self.data.iter().map(|s| s.scale(c)).collect(), ..*self }
    }

    /// Adds the same public raw constant to every entry.
    pub fn add_public(&self, party: PartyId, c: Z64) -> SecureTensor {
        SecureTensor { data: self.data.iter().map(|s| s.add_public(party, c)).collect(), ..*self }
    }

    /// Entry-wise multiplication by public integers (e.g. a 0/1 mask).
    pub fn mask_rows(&self, keep: &[bool]) -> Result<SecureTensor> {
        if keep.len() != self.rows {
            return Err(Error::Shape(format!("mask of {} rows for {} rows", keep.len(), self.rows)));
        }
        let mut out = self.clone();
        for (r, k) in keep.iter().enumerate() {
            if !k {
                out.data[r * self.cols..(r + 1) * self.cols].fill(RepShare::ZERO);
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for SecureTensor {
    type Output = RepShare;
    fn index(&self, (r, c): (usize, usize)) -> &RepShare {
        &self.data[r * self.cols + c]
    }
}

/// Deals a matrix of raw values into four per-party tensors.
pub fn deal_tensor<R: Rng + ?Sized>(
    raw: &[Z64],
    rows: usize,
    cols: usize,
    frac_bits: u32,
    rng: &mut R,
) -> Result<[SecureTensor; 4]> {
    if raw.len() != rows * cols {
        return Err(Error::Shape(format!("{} values for a {rows}×{cols} tensor", raw.len())));
    }
    let mut parts: [SecureTensor; 4] = std::array::from_fn(|_| SecureTensor::zeros(rows, cols, frac_bits));
    for (i, &x) in raw.iter().enumerate() {
        let s = share_rep(x, rng);
        for p in 0..4 {
            parts[p].data[i] = s[p];
        }
    }
    Ok(parts)
}

/// Encodes reals and deals them.
pub fn deal_fixed<R: Rng + ?Sized>(
    vals: &[f64],
    rows: usize,
    cols: usize,
    frac_bits: u32,
    rng: &mut R,
) -> Result<[SecureTensor; 4]> {
    let raw: Vec<Z64> = vals.iter().map(|&v| encode_fixed(v, frac_bits).map(|f| f.raw)).collect::<Result<_>>()?;
    deal_tensor(&raw, rows, cols, frac_bits, rng)
}

/// Reconstructs raw values, checking the replicated layout of every entry.
pub fn open_tensor(parts: &[SecureTensor]) -> Result<Vec<Z64>> {
    if parts.len() != 4 || parts.iter().any(|p| p.shape() != parts[0].shape()) {
        return Err(Error::Shape("need four tensors of equal shape".into()));
    }
    (0..parts[0].len())
        .map(|i| reconstruct_all(&[parts[0].data[i], parts[1].data[i], parts[2].data[i], parts[3].data[i]]))
        .collect()
}

pub fn open_fixed(parts: &[SecureTensor]) -> Result<Vec<f64>> {
    let fb = parts.first().map_or(0, |p| p.frac_bits);
    Ok(open_tensor(parts)?.into_iter().map(|z| decode_fixed(z, fb)).collect())
}
