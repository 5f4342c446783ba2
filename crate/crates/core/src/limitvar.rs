//! Limiting variance `σ² = Σ_q c_q² σ_q²` with
//! `σ_q² = 2^{-q} q! Σ_{m∈ℤ} A(m; α)^q` and
//! `A(m; α) = |m+1|^α + |m-1|^α - 2|m|^α`.
//!
//! The series is summed exactly up to `|m| <= M`. Beyond `M` the kernel is
//! written `A(m) = α(α-1) m^{α-2} (1 + r_m)` with `|r_m| <= 1/(m²-1)`
//! (every even binomial coefficient of order ≥ 4 is dominated by `C(α, 2)`),
//! which brackets the tail between two multiples of a Hurwitz zeta value.
//! The reported value uses the midpoint and `tail_bound` is the half-width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::HermiteFunction;
use crate::numeric::{factorial, hurwitz_zeta, second_diff_pow, KahanSum};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const MAX_TERMS: usize = 10_000_000;
const FIRST_M: usize = 1024;

/// `A(m; α)`, symmetric in `m`.
pub fn second_difference(m: i64, alpha: f64) -> f64 {
    let m = m.unsigned_abs();
    if m == 0 {
        return 2.0;
    }
    second_diff_pow(m as f64, alpha)
}

/// Theorem gate for chaos order `q`: `q(α - 2) + 1 < 0`.
pub fn gate_holds(alpha: f64, q: usize) -> bool {
    q as f64 * (alpha - 2.0) + 1.0 < 0.0
}

fn check_gate(alpha: f64, q: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("increment exponent α = {alpha} outside (0, 2)")));
    }
    if !gate_holds(alpha, q) {
        return Err(Error::Gate(format!(
            "α = {alpha} and chaos order {q} violate α < 2 - 1/{q} = {}; the variance series diverges",
            2.0 - 1.0 / q as f64
        )));
    }
    Ok(())
}

/// One certified series value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub q: usize,
    pub value: f64,
    pub tail_bound: f64,
    pub m_used: usize,
}

/// Running state of `Σ_{|m|<=M} A(m)^q` (or `|A(m)|^q`).
struct Series {
    alpha: f64,
    q: usize,
    absolute: bool,
    m: usize,
    sum: KahanSum,
}

impl Series {
    fn new(alpha: f64, q: usize, absolute: bool) -> Self {
        let mut sum = KahanSum::new();
        sum.add(2f64.powi(q as i32));
        Self {
            alpha,
            q,
            absolute,
            m: 0,
            sum,
        }
    }

    fn extend_to(&mut self, m_max: usize) {
        for m in self.m + 1..=m_max {
            let a = second_difference(m as i64, self.alpha);
            let a = if self.absolute { a.abs() } else { a };
            self.sum.add(2.0 * a.powi(self.q as i32));
        }
        self.m = self.m.max(m_max);
    }

    /// Midpoint and half-width of the bracket for the two-sided tail.
    fn tail(&self) -> (f64, f64) {
        let c = self.alpha * (self.alpha - 1.0);
        if c == 0.0 {
            return (0.0, 0.0);
        }
        let q = self.q as i32;
        let s = -(self.q as f64) * (self.alpha - 2.0);
        let m1 = (self.m + 1) as f64;
        let eps = 1.0 / (m1 * m1 - 1.0);
        let base = 2.0 * c.abs().powi(q) * hurwitz_zeta(s, m1);
        let sign = if !self.absolute && c < 0.0 && self.q % 2 == 1 { -1.0 } else { 1.0 };
        let mid = 0.5 * ((1.0 + eps).powi(q) + (1.0 - eps).powi(q));
        let half = 0.5 * ((1.0 + eps).powi(q) - (1.0 - eps).powi(q));
        (sign * base * mid, base * half)
    }

    fn value(&self) -> SeriesValue {
        let scale = factorial(self.q) / 2f64.powi(self.q as i32);
        let (mid, half) = self.tail();
        SeriesValue {
            q: self.q,
            value: scale * (self.sum.value() + mid),
            tail_bound: scale * half,
            m_used: self.m,
        }
    }
}

fn certified(alpha: f64, q: usize, rel_tol: f64, absolute: bool) -> Result<SeriesValue> {
    let mut series = Series::new(alpha, q, absolute);
    if alpha == 1.0 {
        // A(m; 1) vanishes for m != 0
        return Ok(series.value());
    }
    let mut m = FIRST_M;
    loop {
        series.extend_to(m);
        let v = series.value();
        if v.tail_bound <= rel_tol * v.value.abs() {
            return Ok(v);
        }
        if m >= MAX_TERMS {
            return Err(Error::Certificate(format!(
                "σ_{q}² at α = {alpha}: tail bound {:e} exceeds {rel_tol:e} relative after {m} terms",
                v.tail_bound
            )));
        }
        m = (m * 4).min(MAX_TERMS);
    }
}

/// `σ_q²` with a certified tail: `tail_bound <= rel_tol · |value|`.
pub fn sigma_q_sq(alpha: f64, q: usize, rel_tol: f64) -> Result<SeriesValue> {
    if q < 1 {
        return Err(Error::InvalidParameter("chaos order must be at least 1".into()));
    }
    check_gate(alpha, q)?;
    certified(alpha, q, rel_tol, false)
}

/// `σ_q²` from the partial sum `|m| <= m_max` plus the tail bracket midpoint.
pub fn sigma_q_sq_truncated(alpha: f64, q: usize, m_max: usize) -> Result<SeriesValue> {
    check_gate(alpha, q)?;
    if m_max < 2 {
        return Err(Error::InvalidParameter("truncation point must be at least 2".into()));
    }
    let mut series = Series::new(alpha, q, false);
    series.extend_to(m_max);
    Ok(series.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosTerm {
    pub q: usize,
    pub coeff: f64,
    pub sigma_q_sq: f64,
    pub tail_bound: f64,
    pub m_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitVariance {
    pub alpha: f64,
    pub per_chaos: Vec<ChaosTerm>,
    /// `Σ c_q² σ_q²` over the retained coefficients.
    pub sigma_sq: f64,
    /// `Σ c_q² · tail_bound_q`.
    pub tail_bound: f64,
    pub truncation_m: usize,
    /// Upper bound on the contribution of chaoses beyond the expansion order.
    pub chaos_truncation_bound: f64,
    pub warnings: Vec<String>,
}

/// Aggregated limit variance of `f` at increment exponent `alpha`.
pub fn sigma_sq(f: &HermiteFunction, alpha: f64, rel_tol: f64) -> Result<LimitVariance> {
    let d = f.rank;
    if d < 2 {
        return Err(Error::Gate(format!(
            "Hermite rank d = {d}; the central limit theorem needs d >= 2"
        )));
    }
    check_gate(alpha, d)?;
    let mut per_chaos = Vec::new();
    let mut warnings = Vec::new();
    let (mut total, mut tail) = (KahanSum::new(), 0.0);
    let mut truncation_m = 0;
    for (q, c) in f.terms() {
        let s = sigma_q_sq(alpha, q, rel_tol)?;
        if s.value < -s.tail_bound {
            warnings.push(format!(
                "σ_{q}² = {:e} is negative beyond its tail bound {:e}",
                s.value, s.tail_bound
            ));
        }
        total.add(c * c * s.value);
        tail += c * c * s.tail_bound;
        truncation_m = truncation_m.max(s.m_used);
        per_chaos.push(ChaosTerm {
            q,
            coeff: c,
            sigma_q_sq: s.value,
            tail_bound: s.tail_bound,
            m_used: s.m_used,
        });
    }
    // σ_q²/q! <= 2^{-d} Σ |A|^d for q >= d because |A(m)| <= 2
    let chaos_truncation_bound = if f.chaos_tail > 0.0 {
        let abs = certified(alpha, d, rel_tol, true)?;
        f.chaos_tail * (abs.value + abs.tail_bound) / factorial(d)
    } else {
        0.0
    };
    Ok(LimitVariance {
        alpha,
        per_chaos,
        sigma_sq: total.value(),
        tail_bound: tail,
        truncation_m,
        chaos_truncation_bound,
        warnings,
    })
}
