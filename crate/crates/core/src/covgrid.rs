//! Exact covariance and correlation of the increments `ΔX_{j/n} = X_{(j+1)/n} - X_{j/n}`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::models::ModelSpec;

/// Largest number of increments assembled by default.
pub const DEFAULT_MAX_INCREMENTS: usize = 8192;

const FLUSH: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct IncrementCovariance {
    pub model: ModelSpec,
    pub n: usize,
    /// `cov[j][k] = E[ΔX_{j/n} ΔX_{k/n}]`.
    pub cov: SymMatrix,
    /// `ξ_{j,n} = ‖ΔX_{j/n}‖`.
    pub xi: Vec<f64>,
    /// `ρ_{jk} = cov_{jk} / (ξ_j ξ_k)`.
    pub corr: SymMatrix,
}

impl IncrementCovariance {
    pub fn new(model: &ModelSpec, n: usize, increments: usize) -> Result<Self> {
        Self::with_cap(model, n, increments, DEFAULT_MAX_INCREMENTS)
    }

    pub fn with_cap(model: &ModelSpec, n: usize, increments: usize, cap: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("grid resolution n = {n} must be >= 2")));
        }
        if increments == 0 {
            return Err(Error::InvalidParameter("at least one increment is required".into()));
        }
        if increments > cap {
            return Err(Error::InvalidParameter(format!(
                "{increments} increments exceed the dense-matrix cap of {cap}"
            )));
        }
        let scale = (n as f64).powf(-2.0 * model.beta);
        let rows: Vec<Vec<f64>> = (0..increments)
            .into_par_iter()
            .map(|j| covariance_row(model, j, scale))
            .collect();
        let cov = SymMatrix::from_rows(rows);
        let diag = cov.diagonal();
        if let Some((j, v)) = diag.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::Factorization(format!(
                "increment variance cov[{j}][{j}] = {v:e} is not positive for {}",
                model.name
            )));
        }
        let xi: Vec<f64> = diag.iter().map(|v| v.sqrt()).collect();
        let corr = SymMatrix::from_fn(increments, |j, k| {
            if j == k {
                1.0
            } else {
                (cov.get(j, k) / (xi[j] * xi[k])).clamp(-1.0, 1.0)
            }
        });
        Ok(Self {
            model: model.clone(),
            n,
            cov,
            xi,
            corr,
        })
    }

    /// Number of increments `N`.
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn normalized_corr(&self) -> &SymMatrix {
        &self.corr
    }

    /// Writes the full matrix as `j,k,value` lines, row-major.
    pub fn write_csv(matrix: &SymMatrix, mut out: impl Write) -> Result<()> {
        writeln!(out, "j,k,value")?;
        for j in 0..matrix.dim() {
            for k in 0..matrix.dim() {
                writeln!(out, "{j},{k},{:e}", matrix.get(j, k))?;
            }
        }
        Ok(())
    }
}

/// Lower-triangle row `j` of the increment covariance, in units where the
/// grid spacing is one, times `scale = n^{-2β}`.
fn covariance_row(model: &ModelSpec, j: usize, scale: f64) -> Vec<f64> {
    let r = |a: usize, b: usize| model.kernel_unchecked(a as f64, b as f64);
    let lo: Vec<f64> = (0..=j + 1).map(|b| r(j, b)).collect();
    let hi: Vec<f64> = (0..=j + 1).map(|b| r(j + 1, b)).collect();
    (0..=j)
        .map(|k| {
            let v = scale * ((hi[k + 1] - hi[k]) - (lo[k + 1] - lo[k]));
            if v.abs() < FLUSH {
                0.0
            } else {
                v
            }
        })
        .collect()
}

/// Single entry `E[ΔX_{j/n} ΔX_{k/n}]` without assembling a matrix.
pub fn increment_cov_entry(model: &ModelSpec, n: usize, j: usize, k: usize) -> f64 {
    let r = |a: usize, b: usize| model.kernel_unchecked(a as f64, b as f64);
    let raw = (r(j + 1, k + 1) - r(j + 1, k)) - (r(j, k + 1) - r(j, k));
    (n as f64).powf(-2.0 * model.beta) * raw
}
