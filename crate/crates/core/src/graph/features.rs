use serde::{Deserialize, Serialize};

/// Rows that could not be normalized.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeReport {
    pub zero_rows: Vec<usize>,
}

impl NormalizeReport {
    pub fn is_clean(&self) -> bool {
        self.zero_rows.is_empty()
    }
}

/// Divides each row by its sum. Rows whose sum is not positive are passed
/// through unchanged and listed in the report.
pub fn normalize_features(x: &[f64], dim: usize) -> (Vec<f64>, NormalizeReport) {
    let mut out = x.to_vec();
    let mut report = NormalizeReport::default();
    if dim == 0 {
        return (out, report);
    }
    for (v, row) in out.chunks_mut(dim).enumerate() {
        let s: f64 = row.iter().sum();
        if s > 0.0 && s.is_finite() {
            row.iter_mut().for_each(|e| *e /= s);
        } else {
            report.zero_rows.push(v);
        }
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let (y, r) = normalize_features(&[1.0, 3.0], 2);
        assert_eq!(y, vec![0.25, 0.75]);
        assert!(r.is_clean());
        let (y, r) = normalize_features(&[0.0, 0.0, 0.0, 2.0, 2.0, 4.0], 3);
        assert_eq!(y[..3], [0.0, 0.0, 0.0]);
        assert_eq!(y[3..], [0.25, 0.25, 0.5]);
        assert_eq!(r.zero_rows, vec![0]);
    }
}
