//! Plain-text interchange formats.
//!
//! Complex matrices and states are JSON objects `{"dim": n, "entries": [[re, im], ...]}`
//! with entries in row-major order (`n` entries for a vector, `n²` for a matrix).
//! Frequency tables are CSV with header `test,frequency,sample_size`, where the
//! sample size is a count or `exact`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::linalg::{c, CMat, CVec};
use crate::qcore::DensityOperator;
use crate::tomography::{FrequencyTable, SampleSize};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexArray {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl ComplexArray {
    pub fn from_matrix(m: &CMat) -> Self {
        let n = m.nrows();
        let mut entries = Vec::with_capacity(n * m.ncols());
        for i in 0..n {
            for j in 0..m.ncols() {
                entries.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self { dim: n, entries }
    }

    pub fn from_vector(v: &CVec) -> Self {
        Self { dim: v.len(), entries: v.iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.dim;
        if self.entries.len() != n * n {
            return Err(Error::Parse(format!("matrix of dim {n} needs {} entries, found {}", n * n, self.entries.len())));
        }
        Ok(CMat::from_row_iterator(n, n, self.entries.iter().map(|&[re, im]| c(re, im))))
    }

    pub fn to_vector(&self) -> Result<CVec> {
        if self.entries.len() != self.dim {
            return Err(Error::Parse(format!(
                "vector of dim {} needs as many entries, found {}",
                self.dim,
                self.entries.len()
            )));
        }
        Ok(CVec::from_iterator(self.dim, self.entries.iter().map(|&[re, im]| c(re, im))))
    }
}

pub fn matrix_to_json(m: &CMat) -> String {
    serde_json::to_string(&ComplexArray::from_matrix(m)).expect("serializable")
}

pub fn matrix_from_json(s: &str) -> Result<CMat> {
    parse_array(s)?.to_matrix()
}

pub fn vector_to_json(v: &CVec) -> String {
    serde_json::to_string(&ComplexArray::from_vector(v)).expect("serializable")
}

pub fn vector_from_json(s: &str) -> Result<CVec> {
    parse_array(s)?.to_vector()
}

/// Parses and validates a density operator.
pub fn density_from_json(s: &str) -> Result<DensityOperator> {
    DensityOperator::new(matrix_from_json(s)?)
}

fn parse_array(s: &str) -> Result<ComplexArray> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

pub fn frequencies_to_csv(table: &FrequencyTable) -> String {
    let mut out = String::from("test,frequency,sample_size\n");
    for (i, (f, n)) in table.values.iter().zip(&table.sample_sizes).enumerate() {
        let size = match n {
            SampleSize::Exact => "exact".to_string(),
            SampleSize::Count(k) => k.to_string(),
        };
        writeln!(out, "{i},{f:?},{size}").expect("writing to a String");
    }
    out
}

pub fn frequencies_from_csv(s: &str) -> Result<FrequencyTable> {
    let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "test,frequency,sample_size" => {}
        _ => return Err(Error::Parse("line 1: expected header test,frequency,sample_size".into())),
    }
    let mut values = Vec::new();
    let mut sizes = Vec::new();
    for (ln, line) in lines {
        let err = |msg: &str| Error::Parse(format!("line {}: {msg}", ln + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err("expected three fields"));
        }
        let index: usize = fields[0].parse().map_err(|_| err("bad test index"))?;
        if index != values.len() {
            return Err(err("test indices must be consecutive from 0"));
        }
        values.push(fields[1].parse::<f64>().map_err(|_| err("bad frequency"))?);
        sizes.push(match fields[2] {
            "exact" => SampleSize::Exact,
            k => SampleSize::Count(k.parse().map_err(|_| err("bad sample size"))?),
        });
    }
    FrequencyTable::new(values, sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random;
    use crate::rng;

    #[test]
    fn matrix_round_trip_is_exact() {
        let rho = random::density(3, &mut rng::seeded(2));
        let text = matrix_to_json(rho.matrix());
        assert_eq!(&matrix_from_json(&text).unwrap(), rho.matrix());
        assert_eq!(density_from_json(&text).unwrap(), rho);
    }

    #[test]
    fn layout_is_row_major() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.5), c(3.0, 0.0), c(4.0, -1.0)]);
        assert_eq!(
            matrix_to_json(&m),
            r#"{"dim":2,"entries":[[1.0,0.0],[2.0,0.5],[3.0,0.0],[4.0,-1.0]]}"#
        );
    }

    #[test]
    fn vector_round_trip() {
        let v = random::unit_vector(4, &mut rng::seeded(5));
        assert_eq!(vector_from_json(&vector_to_json(&v)).unwrap(), v);
        assert!(vector_from_json(r#"{"dim":3,"entries":[[1,0]]}"#).is_err());
    }

    #[test]
    fn frequency_csv_round_trip() {
        let t = FrequencyTable::new(vec![0.25, 1.0 / 3.0], vec![SampleSize::Count(100), SampleSize::Exact]).unwrap();
        let text = frequencies_to_csv(&t);
        assert_eq!(frequencies_from_csv(&text).unwrap(), t);
        assert!(frequencies_from_csv("test,frequency,sample_size\n0,1.5,exact\n").is_err());
        assert!(frequencies_from_csv("0,0.5,exact\n").is_err());
    }
}
