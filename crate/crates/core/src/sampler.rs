//! Exact Gaussian sampling of increment vectors through a Cholesky factor of
//! the increment covariance.
//!
//! Randomness is keyed by `(seed, replica)`: replica `r` reads stream `r` of
//! a ChaCha12 generator seeded from `seed`, so every row can be regenerated
//! on its own and parallel generation matches serial generation bit for bit.
//! A 64-bit output `x` becomes `k = x >> 12` and the uniform
//! `u = (k + 1/2) 2^{-52}`, which is exact together with `1 - u`; normals are
//! `-sqrt(2) erfc^{-1}(2u)`, evaluated on the nearer tail.

use std::io::{Read, Write};

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::covgrid::IncrementCovariance;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::models::ModelSpec;

/// Jitter multipliers of `trace / N`, tried in order.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// Packed lower-triangular factor `L` with `L Lᵀ = A + jitter · I`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub factor: SymMatrix,
    pub jitter: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    /// Entry `L[i][j]` for `j <= i`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.factor.get(i, j)
    }

    /// `L z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.factor
                    .row(i)
                    .iter()
                    .zip(z)
                    .map(|(l, z)| l * z)
                    .sum()
            })
            .collect()
    }
}

/// Factorizes `a`, escalating the diagonal jitter along [`JITTER_LADDER`].
pub fn cholesky(a: &SymMatrix) -> Result<CholeskyFactor> {
    let n = a.dim();
    let unit = a.trace() / n.max(1) as f64;
    for mult in JITTER_LADDER {
        let jitter = mult * unit;
        if let Some(factor) = try_cholesky(a, jitter) {
            return Ok(CholeskyFactor { factor, jitter });
        }
    }
    Err(Error::Factorization(format!(
        "covariance of dimension {n} is not positive definite even with jitter {:e}",
        JITTER_LADDER[JITTER_LADDER.len() - 1] * unit
    )))
}

fn try_cholesky(a: &SymMatrix, jitter: f64) -> Option<SymMatrix> {
    let n = a.dim();
    let mut l: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let src = a.row(i);
        let mut row = vec![0.0; i + 1];
        for j in 0..i {
            let lj = &l[j];
            let dot: f64 = row[..j].iter().zip(&lj[..j]).map(|(x, y)| x * y).sum();
            row[j] = (src[j] - dot) / lj[j];
        }
        let dot: f64 = row[..i].iter().map(|x| x * x).sum();
        let pivot = src[i] + jitter - dot;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return None;
        }
        row[i] = pivot.sqrt();
        l.push(row);
    }
    Some(SymMatrix::from_rows(l))
}

/// `Φ^{-1}(u)` for `u ∈ (0, 1)`.
pub fn inverse_normal_cdf(u: f64) -> f64 {
    use statrs::function::erf::erfc_inv;
    if u <= 0.5 {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    } else {
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * (1.0 - u))
    }
}

const BITS: u32 = 52;

/// Normal deviate from one 64-bit word.
fn normal_from_bits(x: u64) -> f64 {
    let k = (x >> (64 - BITS)) as f64;
    let u = (k + 0.5) / (1u64 << BITS) as f64;
    inverse_normal_cdf(u)
}

/// `len` standard normals from stream `replica` of the generator seeded by `seed`.
pub fn standard_normals(seed: u64, replica: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    (0..len)
        .map(|_| normal_from_bits(rng.next_u64()))
        .collect()
}

/// One increment row `L z`, `z` keyed by `(seed, replica)`.
pub fn draw(factor: &CholeskyFactor, seed: u64, replica: u64) -> Vec<f64> {
    factor.apply(&standard_normals(seed, replica, factor.dim()))
}

/// Covariance, its factor and the normalizers for one `(model, n, N)` grid.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub ic: IncrementCovariance,
    pub factor: CholeskyFactor,
}

impl Sampler {
    pub fn new(model: &ModelSpec, n: usize, increments: usize) -> Result<Self> {
        let ic = IncrementCovariance::new(model, n, increments)?;
        Self::from_covariance(ic)
    }

    pub fn from_covariance(ic: IncrementCovariance) -> Result<Self> {
        let factor = cholesky(&ic.cov)?;
        Ok(Self { ic, factor })
    }

    pub fn draw(&self, seed: u64, replica: u64) -> Vec<f64> {
        draw(&self.factor, seed, replica)
    }

    /// `Y_{j,n} = ΔX_{j/n} / ξ_{j,n}` for one replica.
    pub fn draw_normalized(&self, seed: u64, replica: u64) -> Vec<f64> {
        let mut row = self.draw(seed, replica);
        for (y, xi) in row.iter_mut().zip(&self.ic.xi) {
            *y /= xi;
        }
        row
    }

    /// Replicas `first..first + rows`, generated in parallel.
    pub fn batch(&self, seed: u64, first: u64, rows: usize) -> SampleBatch {
        let n_incr = self.ic.len();
        let drawn: Vec<Vec<f64>> = (0..rows as u64)
            .into_par_iter()
            .map(|r| self.draw(seed, first + r))
            .collect();
        let mut increments = Vec::with_capacity(rows * n_incr);
        let mut normalized = Vec::with_capacity(rows * n_incr);
        for row in drawn {
            normalized.extend(row.iter().zip(&self.ic.xi).map(|(x, xi)| x / xi));
            increments.extend(row);
        }
        SampleBatch {
            seed,
            replica_range: (first, first + rows as u64),
            n: self.ic.n,
            increments_per_row: n_incr,
            increments,
            normalized,
        }
    }
}

/// `M` replicas of the increment vector, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub seed: u64,
    pub replica_range: (u64, u64),
    pub n: usize,
    pub increments_per_row: usize,
    /// `M × N` draws of `ΔX_{j/n}`.
    pub increments: Vec<f64>,
    /// `M × N` draws of `Y_{j,n}`.
    pub normalized: Vec<f64>,
}

impl SampleBatch {
    pub fn rows(&self) -> usize {
        (self.replica_range.1 - self.replica_range.0) as usize
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.increments_per_row;
        &self.increments[i * w..(i + 1) * w]
    }

    pub fn normalized_row(&self, i: usize) -> &[f64] {
        let w = self.increments_per_row;
        &self.normalized[i * w..(i + 1) * w]
    }

    /// Little-endian dump: `u64` header `n, N, M, seed`, then the `M × N`
    /// increments as `f64`, row-major.
    pub fn write_binary(&self, mut out: impl Write) -> Result<()> {
        for v in [
            self.n as u64,
            self.increments_per_row as u64,
            self.rows() as u64,
            self.seed,
        ] {
            out.write_all(&v.to_le_bytes())?;
        }
        for x in &self.increments {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the header and increments written by [`SampleBatch::write_binary`].
    pub fn read_binary(mut input: impl Read) -> Result<(u64, u64, u64, u64, Vec<f64>)> {
        let mut word = [0u8; 8];
        let mut header = [0u64; 4];
        for h in header.iter_mut() {
            input.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let count = (header[1] * header[2]) as usize;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        Ok((header[0], header[1], header[2], header[3], data))
    }
}

/// Convenience wrapper: covariance, factor and `rows` replicas starting at 0.
pub fn sample_batch(
    model: &ModelSpec,
    n: usize,
    increments: usize,
    rows: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if rows == 0 {
        return Err(Error::InvalidParameter("a batch needs at least one row".into()));
    }
    Ok(Sampler::new(model, n, increments)?.batch(seed, 0, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    #[test]
    fn brownian_factor_is_half_identity() {
        let m = ModelSpec::new(ModelKind::Fbm { h: 0.5 }).unwrap();
        let s = Sampler::new(&m, 4, 4).unwrap();
        assert_eq!(s.factor.jitter, 0.0);
        for i in 0..4 {
            for j in 0..=i {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((s.factor.get(i, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn diagonal_factor() {
        let a = SymMatrix::from_rows(vec![vec![4.0], vec![0.0, 1.0]]);
        let l = cholesky(&a).unwrap();
        assert_eq!((l.get(0, 0), l.get(1, 0), l.get(1, 1)), (2.0, 0.0, 1.0));
    }

    #[test]
    fn jitter_rescues_semidefinite_input() {
        let a = SymMatrix::from_rows(vec![vec![1.0], vec![1.0, 1.0]]);
        let l = cholesky(&a).unwrap();
        assert!(l.jitter > 0.0);
        let b = SymMatrix::from_rows(vec![vec![1.0], vec![2.0, 1.0]]);
        assert!(matches!(cholesky(&b), Err(Error::Factorization(_))));
    }

    #[test]
    fn factor_reproduces_matrix() {
        let m = ModelSpec::new(ModelKind::Subfbm { h: 0.35 }).unwrap();
        let s = Sampler::new(&m, 20, 20).unwrap();
        let n = s.factor.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| s.factor.get(i, k) * s.factor.get(j, k)).sum();
                worst = worst.max((v - s.ic.cov.get(i, j)).abs());
            }
        }
        assert!(worst < 1e-14);
    }

    #[test]
    fn inverse_cdf_accuracy() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            let z = inverse_normal_cdf(u);
            assert!(z > prev);
            assert!((z + inverse_normal_cdf(1.0 - u)).abs() < 1e-12, "u={u}");
            prev = z;
        }
        // reference quantiles from an independent double-precision implementation
        let reference = [
            (1e-10, -6.361340902404056),
            (0.023, -1.9953933101678247),
            (0.3, -0.5244005127080409),
            (0.5, 0.0),
            (0.9, 1.2815515655446004),
            (0.999999, 4.753424308817087),
        ];
        for (u, z) in reference {
            assert!((inverse_normal_cdf(u) - z).abs() < 1e-9, "u={u}");
        }
        let (lo, hi) = (normal_from_bits(0), normal_from_bits(u64::MAX));
        assert!(lo.is_finite() && hi.is_finite());
        assert_eq!(lo, -hi);
    }

    #[test]
    fn identity_draw_statistics() {
        // with L = I a row is the normal vector itself
        let id = CholeskyFactor {
            factor: SymMatrix::from_fn(50, |i, j| if i == j { 1.0 } else { 0.0 }),
            jitter: 0.0,
        };
        assert_eq!(draw(&id, 42, 0), standard_normals(42, 0, 50));
        let row = standard_normals(42, 0, 10_000);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        assert!(mean.abs() <= 0.05);
        assert_eq!(row, standard_normals(42, 0, 10_000));

        let a = standard_normals(42, 7, 1000);
        let b = standard_normals(42, 8, 1000);
        let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
            / (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|x| x * x).sum::<f64>()).sqrt();
        assert!(corr.abs() < 0.1);
    }

    #[test]
    fn single_row_batch_and_binary_round_trip() {
        let m = ModelSpec::new(ModelKind::Swanson).unwrap();
        let batch = sample_batch(&m, 16, 8, 1, 3).unwrap();
        assert_eq!(batch.rows(), 1);
        assert_eq!(batch.row(0).len(), 8);
        let mut buf = Vec::new();
        batch.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * 8);
        let (n, nn, mm, seed, data) = SampleBatch::read_binary(&buf[..]).unwrap();
        assert_eq!((n, nn, mm, seed), (16, 8, 1, 3));
        assert_eq!(data, batch.increments);
    }
}
