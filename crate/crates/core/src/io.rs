//! Matrix file format: `{"d": int, "re": [[...]], "im": [[...]]}`, row-major
//! `d² × d²`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BipartiteGate, ComplexMatrix, C64, UNITARY_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub d: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_gate(gate: &BipartiteGate) -> Self {
        let m = gate.matrix();
        let rows = |f: fn(&C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            d: gate.d(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.d * self.d;
        if self.d < 2 {
            return Err(Error::Shape(format!("local dimension {} < 2", self.d)));
        }
        let check = |part: &[Vec<f64>], name: &str| -> Result<()> {
            if part.len() != n || part.iter().any(|r| r.len() != n) {
                return Err(Error::Shape(format!("\"{name}\" must be a {n}x{n} array")));
            }
            if part.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
            Ok(())
        };
        check(&self.re, "re")?;
        check(&self.im, "im")?;
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], self.im[i][j])
        }))
    }

    pub fn to_gate(&self) -> Result<BipartiteGate> {
        BipartiteGate::with_tolerance(self.to_matrix()?, UNITARY_TOL)
    }
}

pub fn read_gate(path: &Path) -> Result<BipartiteGate> {
    let text = fs::read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text)?;
    file.to_gate()
}

pub fn write_gate(path: &Path, gate: &BipartiteGate) -> Result<()> {
    let text = serde_json::to_string(&MatrixFile::from_gate(gate))?;
    fs::write(path, text)?;
    Ok(())
}
