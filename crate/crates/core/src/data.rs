//! Boundary transfer data `{F^i, DF^i}` sampled at spectral points `b_i`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Result, RomError};

/// Checks that spectral points are positive, pairwise distinct and increasing.
pub fn validate_spectral_points(b: &[f64]) -> Result<()> {
    if b.is_empty() {
        return Err(RomError::SpectralPoints("no spectral points given".into()));
    }
    if let Some(i) = b.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(RomError::SpectralPoints(format!("b[{i}] = {} is not a positive number", b[i])));
    }
    for i in 0..b.len() {
        for j in (i + 1)..b.len() {
            if b[i] == b[j] {
                return Err(RomError::CoincidentPoints { i, j, value: b[i] });
            }
        }
    }
    if b.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RomError::SpectralPoints("spectral points must be strictly increasing".into()));
    }
    Ok(())
}

/// Transfer matrices `F^i` (K x K) and their lambda-derivatives `DF^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferDataSet {
    pub b: Vec<f64>,
    pub f: Vec<DMatrix<f64>>,
    pub df: Vec<DMatrix<f64>>,
}

impl TransferDataSet {
    pub fn new(b: Vec<f64>, f: Vec<DMatrix<f64>>, df: Vec<DMatrix<f64>>) -> Result<Self> {
        validate_spectral_points(&b)?;
        if f.len() != b.len() || df.len() != b.len() {
            return Err(RomError::Input(format!(
                "{} spectral points but {} F and {} DF matrices",
                b.len(),
                f.len(),
                df.len()
            )));
        }
        let k = f[0].nrows();
        if k == 0 {
            return Err(RomError::Input("transfer matrices are empty".into()));
        }
        for (i, (a, d)) in f.iter().zip(&df).enumerate() {
            if a.shape() != (k, k) || d.shape() != (k, k) {
                return Err(RomError::Input(format!("sample {i} is not {k} x {k}")));
            }
            if a.iter().chain(d.iter()).any(|v| !v.is_finite()) {
                return Err(RomError::Input(format!("sample {i} has non-finite entries")));
            }
        }
        Ok(Self { b, f, df })
    }

    /// Single-source data.
    pub fn scalar(b: Vec<f64>, f: Vec<f64>, df: Vec<f64>) -> Result<Self> {
        let f = f.into_iter().map(|v| DMatrix::from_element(1, 1, v)).collect();
        let df = df.into_iter().map(|v| DMatrix::from_element(1, 1, v)).collect();
        Self::new(b, f, df)
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn k(&self) -> usize {
        self.f[0].nrows()
    }

    /// Largest relative asymmetry `||F - F^T|| / ||F||` over all samples.
    pub fn max_asymmetry(&self) -> f64 {
        self.f
            .iter()
            .chain(&self.df)
            .map(|a| (a - a.transpose()).norm() / a.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of `-DF^i` relative to its largest, over all samples.
    pub fn min_relative_gram_eigenvalue(&self) -> f64 {
        self.df
            .iter()
            .map(|d| {
                let g = -(d + d.transpose()) * 0.5;
                let ev = SymmetricEigen::new(g).eigenvalues;
                let max = ev.max().abs().max(f64::MIN_POSITIVE);
                ev.min() / max
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes `i,b,r,l,F,DF` rows (1-based indices).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "b", "r", "l", "F", "DF"])?;
        for (i, b) in self.b.iter().enumerate() {
            for r in 0..self.k() {
                for l in 0..self.k() {
                    w.write_record([
                        (i + 1).to_string(),
                        b.to_string(),
                        (r + 1).to_string(),
                        (l + 1).to_string(),
                        self.f[i][(r, l)].to_string(),
                        self.df[i][(r, l)].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| RomError::Input(format!("data file lacks column `{name}`")))
        };
        let (ci, cb, cr, cl, cf, cd) = (col("i")?, col("b")?, col("r")?, col("l")?, col("F")?, col("DF")?);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |c: usize| -> Result<f64> {
                rec[c].trim().parse::<f64>().map_err(|e| RomError::Input(format!("bad number `{}`: {e}", &rec[c])))
            };
            let idx = |c: usize| -> Result<usize> {
                rec[c]
                    .trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|v| *v >= 1)
                    .ok_or_else(|| RomError::Input(format!("bad index `{}`", &rec[c])))
            };
            rows.push((idx(ci)?, num(cb)?, idx(cr)?, idx(cl)?, num(cf)?, num(cd)?));
        }
        let m = rows.iter().map(|r| r.0).max().unwrap_or(0);
        let k = rows.iter().map(|r| r.2.max(r.3)).max().unwrap_or(0);
        if m == 0 || rows.len() != m * k * k {
            return Err(RomError::Input(format!(
                "expected {} rows for m = {m}, K = {k}, found {}",
                m * k * k,
                rows.len()
            )));
        }
        let mut b = vec![f64::NAN; m];
        let mut f = vec![DMatrix::from_element(k, k, f64::NAN); m];
        let mut df = f.clone();
        for (i, bi, r, l, fv, dv) in rows {
            if !b[i - 1].is_nan() && b[i - 1] != bi {
                return Err(RomError::Input(format!("sample {i} lists two different b values")));
            }
            b[i - 1] = bi;
            f[i - 1][(r - 1, l - 1)] = fv;
            df[i - 1][(r - 1, l - 1)] = dv;
        }
        Self::new(b, f, df)
    }
}
