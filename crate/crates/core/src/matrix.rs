use serde::{Deserialize, Serialize};

/// Symmetric matrix stored as its lower triangle, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn offset(i: usize) -> usize {
    i * (i + 1) / 2
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; offset(dim)],
        }
    }

    /// Builds from lower-triangle rows; row `i` must have `i + 1` entries.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(offset(dim));
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), i + 1, "row {i} has wrong length");
            data.extend(row);
        }
        Self { dim, data }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(offset(dim));
        for i in 0..dim {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[offset(i) + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[offset(i) + j] = v;
    }

    /// Lower-triangle row `i`: entries `(i, 0..=i)`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[offset(i)..offset(i) + i + 1]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Leading `k x k` block.
    pub fn leading(&self, k: usize) -> SymMatrix {
        assert!(k <= self.dim);
        Self {
            dim: k,
            data: self.data[..offset(k)].to_vec(),
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for (j, &v) in self.row(i).iter().enumerate() {
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_indexing_is_symmetric() {
        let m = SymMatrix::from_fn(4, |i, j| (10 * i + j) as f64);
        assert_eq!(m.get(3, 1), 31.0);
        assert_eq!(m.get(1, 3), 31.0);
        assert_eq!(m.row(2), &[20.0, 21.0, 22.0]);
        assert_eq!(m.trace(), 0.0 + 11.0 + 22.0 + 33.0);
        let d = m.to_dense();
        assert_eq!(d[1 * 4 + 3], 31.0);
        assert_eq!(m.leading(2).row(1), &[10.0, 11.0]);
    }
}
