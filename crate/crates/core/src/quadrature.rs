//! Gauss rules for expectations against the standard normal law.
//!
//! All rules come from the Golub-Welsch construction: the nodes are the
//! eigenvalues of the Jacobi matrix of the weight and the weights are the
//! squared first components of its eigenvectors. The half-line rule for
//! `e^{-x^2/2}` on `[0, inf)` has no closed-form recurrence; its Jacobi
//! matrix is obtained with the discretized Stieltjes procedure.

use crate::error::{Error, Result};

/// Nodes and weights of a rule for `E[g(Z)]`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point Gauss-Hermite rule for the probabilists' weight
    /// `e^{-x^2/2} / sqrt(2 pi)`; exact for polynomials of degree `2n - 1`.
    pub fn hermite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        let diag = vec![0.0; n];
        let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
        let (nodes, first) = jacobi_eigen(diag, off)?;
        let weights = first.iter().map(|z| z * z).collect();
        Ok(Self { nodes, weights }.sorted())
    }

    /// `n`-point Gauss-Legendre rule on `[-1, 1]`.
    pub fn legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        let diag = vec![0.0; n];
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            })
            .collect();
        let (nodes, first) = jacobi_eigen(diag, off)?;
        let weights = first.iter().map(|z| 2.0 * z * z).collect();
        Ok(Self { nodes, weights }.sorted())
    }

    /// `n`-point Gauss rule for `e^{-x^2/2} / sqrt(2 pi)` restricted to
    /// `[0, inf)` (total mass 1/2).
    pub fn half_normal(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        let (xs, ws) = discretized_half_normal(n)?;
        let (diag, off) = stieltjes(&xs, &ws, n)?;
        let (nodes, first) = jacobi_eigen(diag, off)?;
        let weights = first.iter().map(|z| 0.5 * z * z).collect();
        Ok(Self { nodes, weights }.sorted())
    }

    /// Half-line rule on each side of the origin, `ceil(n / 2)` nodes per side.
    ///
    /// Exact for functions that are polynomial on each half-line, such as
    /// `|x|^{2p+1}`, for which the full-line rule converges only
    /// algebraically.
    pub fn split_hermite(n: usize) -> Result<Self> {
        let half = Self::half_normal(n.div_ceil(2))?;
        let mut nodes: Vec<f64> = half.nodes.iter().rev().map(|x| -x).collect();
        let mut weights: Vec<f64> = half.weights.iter().rev().copied().collect();
        nodes.extend_from_slice(&half.nodes);
        weights.extend_from_slice(&half.weights);
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = crate::numeric::KahanSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            if w > 0.0 {
                acc.add(w * f(x));
            }
        }
        acc.value()
    }

    fn sorted(self) -> Self {
        let mut pairs: Vec<(f64, f64)> = self.nodes.into_iter().zip(self.weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self { nodes, weights }
    }
}

/// Composite Gauss-Legendre discretization of the half-normal weight.
fn discretized_half_normal(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    // the largest node of an n-point rule sits near sqrt(4n)
    let upper = (4.0 * n as f64).sqrt() + 12.0;
    let width = 0.2;
    let panels = (upper / width).ceil() as usize;
    let base = GaussRule::legendre(24)?;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut xs = Vec::with_capacity(panels * base.len());
    let mut ws = Vec::with_capacity(panels * base.len());
    for p in 0..panels {
        let a = p as f64 * width;
        for (&u, &w) in base.nodes.iter().zip(&base.weights) {
            let x = a + 0.5 * width * (u + 1.0);
            let wx = 0.5 * width * w * norm * (-0.5 * x * x).exp();
            if wx > 0.0 {
                xs.push(x);
                ws.push(wx);
            }
        }
    }
    Ok((xs, ws))
}

/// Recurrence coefficients of the discrete measure `sum ws[i] delta(xs[i])`,
/// normalized to unit mass. Returns the Jacobi diagonal and off-diagonal.
fn stieltjes(xs: &[f64], ws: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n >= xs.len() {
        return Err(Error::InvalidParameter(format!(
            "{n} recurrence coefficients need a finer discretization than {} points",
            xs.len()
        )));
    }
    let mass: f64 = ws.iter().sum();
    let mut prev = vec![0.0; xs.len()];
    let mut cur = vec![1.0 / mass.sqrt(); xs.len()];
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut beta_prev = 0.0;
    for k in 0..n {
        let a: f64 = xs
            .iter()
            .zip(ws)
            .zip(&cur)
            .map(|((x, w), p)| w * x * p * p)
            .sum();
        diag.push(a);
        if k + 1 == n {
            break;
        }
        let next: Vec<f64> = xs
            .iter()
            .zip(&cur)
            .zip(&prev)
            .map(|((x, p), q)| (x - a) * p - beta_prev * q)
            .collect();
        let norm = next
            .iter()
            .zip(ws)
            .map(|(p, w)| w * p * p)
            .sum::<f64>()
            .sqrt();
        if !(norm > 0.0) {
            return Err(Error::Factorization("Stieltjes recurrence broke down".into()));
        }
        off.push(norm);
        beta_prev = norm;
        prev = cur;
        cur = next.into_iter().map(|p| p / norm).collect();
    }
    Ok((diag, off))
}

/// Eigenvalues and first eigenvector components of the symmetric
/// tridiagonal matrix (`diag`, `off`) by implicit QL with Wilkinson shifts.
fn jacobi_eigen(mut d: Vec<f64>, off: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut e = off;
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Factorization("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}
