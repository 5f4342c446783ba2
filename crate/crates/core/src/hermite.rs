//! Probabilists' Hermite polynomials and Hermite expansions of test functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::factorial;
use crate::quadrature::GaussRule;

/// Default truncation order of expansions.
pub const DEFAULT_Q_MAX: usize = 12;

/// Coefficients with `|c_q| sqrt(q!)` below this fraction of `‖f‖` are zero.
pub const RANK_TOL: f64 = 1e-9;

/// `H_q(x)` by the three-term recurrence.
pub fn hermite_eval(q: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..q {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[H_0(x), ..., H_{q_max}(x)]`.
pub fn hermite_all(q_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(q_max + 1);
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..=q_max {
        out.push(cur);
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    out
}

/// A centered function through its truncated Hermite coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteFunction {
    pub label: String,
    /// `coeffs[q] = c_q` for `q = 0..=q_max`; `coeffs[0]` is always zero.
    pub coeffs: Vec<f64>,
    /// Smallest `q >= 1` with a nonzero coefficient.
    pub rank: usize,
    /// `Σ q! c_q²` over the retained coefficients.
    pub l2_norm_sq: f64,
    /// `E[f(Z)²] - Σ q! c_q²`: mass beyond `q_max`.
    pub chaos_tail: f64,
}

impl HermiteFunction {
    /// Builds from explicit coefficients (index = chaos order).
    pub fn from_coeffs(label: impl Into<String>, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.first().is_some_and(|c| *c != 0.0) {
            return Err(Error::NonCentered { mean: coeffs[0] });
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        let rank = coeffs
            .iter()
            .position(|c| *c != 0.0)
            .ok_or_else(|| Error::InvalidParameter("function has no nonzero coefficient".into()))?;
        let l2_norm_sq = coeffs
            .iter()
            .enumerate()
            .map(|(q, c)| factorial(q) * c * c)
            .sum();
        Ok(Self {
            label: label.into(),
            coeffs,
            rank,
            l2_norm_sq,
            chaos_tail: 0.0,
        })
    }

    pub fn q_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, q: usize) -> f64 {
        self.coeffs.get(q).copied().unwrap_or(0.0)
    }

    /// `(q, c_q)` for the nonzero coefficients.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(q, c)| (q, *c))
    }

    /// `Some(q)` when the function is exactly `H_q`.
    pub fn single_hermite(&self) -> Option<usize> {
        let mut terms = self.terms();
        match (terms.next(), terms.next()) {
            (Some((q, c)), None) if c == 1.0 => Some(q),
            _ => None,
        }
    }

    /// Value of the truncated expansion at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let (mut prev, mut cur) = (0.0, 1.0);
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            acc += c * cur;
            let next = x * cur - k as f64 * prev;
            prev = cur;
            cur = next;
        }
        acc
    }
}

/// Hermite coefficients `c_q = E[f(Z) H_q(Z)] / q!` by quadrature.
///
/// Uses the split half-line Gauss rule so that functions with a kink at the
/// origin (such as `|x|^3`) are integrated exactly on each side.
pub fn expand(
    label: impl Into<String>,
    f: impl Fn(f64) -> f64,
    q_max: usize,
    quad_points: usize,
) -> Result<HermiteFunction> {
    if q_max < 1 {
        return Err(Error::InvalidParameter("q_max must be at least 1".into()));
    }
    if quad_points < 2 * q_max + 1 {
        return Err(Error::InvalidParameter(format!(
            "{quad_points} quadrature points cannot resolve chaos order {q_max}; need at least {}",
            2 * q_max + 1
        )));
    }
    let rule = GaussRule::split_hermite(quad_points)?;
    let mut moments = vec![0.0; q_max + 1];
    let mut second = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(x);
        second += w * fx * fx;
        for (m, h) in moments.iter_mut().zip(hermite_all(q_max, x)) {
            *m += w * fx * h;
        }
    }
    let norm = second.sqrt();
    if !norm.is_finite() {
        return Err(Error::Domain("function is not square integrable".into()));
    }
    if moments[0].abs() > RANK_TOL * norm {
        return Err(Error::NonCentered { mean: moments[0] });
    }
    let mut coeffs = vec![0.0; q_max + 1];
    for q in 1..=q_max {
        let c = moments[q] / factorial(q);
        if c.abs() * factorial(q).sqrt() >= RANK_TOL * norm {
            coeffs[q] = c;
        }
    }
    let mut out = HermiteFunction::from_coeffs(label, coeffs)?;
    out.chaos_tail = (second - out.l2_norm_sq).max(0.0);
    Ok(out)
}

/// Test functions addressable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "f")]
pub enum FunctionSpec {
    /// `H_q`.
    #[serde(rename = "hermite")]
    Hermite { q: usize },
    /// `x^{2p} - E[Z^{2p}]`.
    #[serde(rename = "even_power")]
    EvenPower { p: usize },
    /// `|x|^{2p+1} - E[|Z|^{2p+1}]`.
    #[serde(rename = "odd_abs_power")]
    OddAbsPower { p: usize },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<HermiteFunction> {
        match *self {
            FunctionSpec::Hermite { q } => {
                if q == 0 {
                    return Err(Error::NonCentered { mean: 1.0 });
                }
                let mut coeffs = vec![0.0; q + 1];
                coeffs[q] = 1.0;
                HermiteFunction::from_coeffs(self.to_string(), coeffs)
            }
            FunctionSpec::EvenPower { p } => {
                if p == 0 {
                    return Err(Error::InvalidParameter("even_power needs p >= 1".into()));
                }
                let q_max = DEFAULT_Q_MAX.max(2 * p);
                let mean = double_factorial(2 * p as i64 - 1);
                let k = 2 * p as i32;
                expand(self.to_string(), |x| x.powi(k) - mean, q_max, 4 * q_max + 1)
            }
            FunctionSpec::OddAbsPower { p } => {
                let q_max = DEFAULT_Q_MAX.max(2 * p);
                let mean = odd_abs_moment(p);
                let k = 2 * p as i32 + 1;
                expand(self.to_string(), |x| x.abs().powi(k) - mean, q_max, 4 * q_max + 1)
            }
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Hermite { q } => write!(f, "hermite:{q}"),
            FunctionSpec::EvenPower { p } => write!(f, "even_power:{p}"),
            FunctionSpec::OddAbsPower { p } => write!(f, "odd_abs_power:{p}"),
        }
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Usage(format!("function spec `{s}` is not of the form kind:k")))?;
        let k: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("`{arg}` is not a nonnegative integer")))?;
        match kind.trim() {
            "hermite" => Ok(FunctionSpec::Hermite { q: k }),
            "even_power" => Ok(FunctionSpec::EvenPower { p: k }),
            "odd_abs_power" => Ok(FunctionSpec::OddAbsPower { p: k }),
            other => Err(Error::Usage(format!(
                "unknown function family `{other}` (hermite, even_power, odd_abs_power)"
            ))),
        }
    }
}

/// `m!!` for odd or even `m`, with `(-1)!! = 1`.
pub fn double_factorial(m: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = m;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `E|Z|^{2p+1} = sqrt(2/π) 2^p p!`.
pub fn odd_abs_moment(p: usize) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * 2f64.powi(p as i32) * factorial(p)
}

/// The closed form `(2p)! (2p-q-1)!! / (q! (2p-q-1)!)` for the
/// coefficients of `x^{2p}`; undefined at `q = 2p`. Kept for comparison with
/// the projected coefficients, which it does not reproduce.
pub fn printed_even_power_coefficient(p: usize, q: usize) -> Option<f64> {
    if q >= 2 * p {
        return None;
    }
    let m = (2 * p - q - 1) as i64;
    Some(factorial(2 * p) * double_factorial(m) / (factorial(q) * factorial(m as usize)))
}
