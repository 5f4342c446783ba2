//! Self-similar Gaussian covariance models in the φ-representation
//! `R(s, t) = min(s,t)^{2β} φ(max(s,t) / min(s,t))`, with the decomposition
//! `φ(x) = -λ (x-1)^α + ψ(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{pow_step, second_diff_pow};

/// Model identifier and parameters, as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum ModelKind {
    #[serde(rename = "fbm")]
    Fbm {
        #[serde(rename = "H")]
        h: f64,
    },
    #[serde(rename = "bifbm")]
    Bifbm {
        #[serde(rename = "H")]
        h: f64,
        #[serde(rename = "K")]
        k: f64,
    },
    #[serde(rename = "subfbm")]
    Subfbm {
        #[serde(rename = "H")]
        h: f64,
    },
    #[serde(rename = "swanson")]
    Swanson,
    #[serde(rename = "dw-z1")]
    DwZ1 { alpha: f64 },
    #[serde(rename = "dw-z2")]
    DwZ2 { alpha: f64 },
}

impl ModelKind {
    pub fn id(&self) -> &'static str {
        match self {
            ModelKind::Fbm { .. } => "fbm",
            ModelKind::Bifbm { .. } => "bifbm",
            ModelKind::Subfbm { .. } => "subfbm",
            ModelKind::Swanson => "swanson",
            ModelKind::DwZ1 { .. } => "dw-z1",
            ModelKind::DwZ2 { .. } => "dw-z2",
        }
    }
}

/// A validated model with its exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecWire")]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub name: String,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Decay exponent of φ', only meaningful when `alpha < 1`.
    pub nu: Option<f64>,
    #[serde(skip)]
    gamma: f64,
}

// Derived fields are recomputed on load rather than trusted.
#[derive(Deserialize)]
struct ModelSpecWire {
    #[serde(flatten)]
    kind: ModelKind,
}

impl TryFrom<ModelSpecWire> for ModelSpec {
    type Error = Error;

    fn try_from(w: ModelSpecWire) -> Result<Self> {
        ModelSpec::new(w.kind)
    }
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1)")))
    }
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Result<Self> {
        let (name, alpha, beta, lambda, nu, gamma) = match kind {
            ModelKind::Fbm { h } => {
                check_open_unit("H", h)?;
                let a = 2.0 * h;
                let nu = (a < 1.0).then_some(2.0 - a);
                (format!("fbm(H={h})"), a, h, 0.5, nu, 0.0)
            }
            ModelKind::Bifbm { h, k } => {
                check_open_unit("H", h)?;
                if !(k > 0.0 && k <= 1.0) {
                    return Err(Error::InvalidParameter(format!("K = {k} must lie in (0, 1]")));
                }
                let a = 2.0 * h * k;
                let nu = if a >= 1.0 {
                    None
                } else if k == 1.0 {
                    Some(2.0 - a)
                } else {
                    Some((1.0 + 2.0 * h - a).min(2.0 - a))
                };
                (format!("bifbm(H={h},K={k})"), a, h * k, 2f64.powf(-k), nu, 0.0)
            }
            ModelKind::Subfbm { h } => {
                check_open_unit("H", h)?;
                let a = 2.0 * h;
                let nu = (a < 1.0).then_some(2.0 - a);
                (format!("subfbm(H={h})"), a, h, 0.5, nu, 0.0)
            }
            ModelKind::Swanson => ("swanson".to_string(), 0.5, 0.5, 1.0, Some(2.0), 0.0),
            ModelKind::DwZ1 { alpha } | ModelKind::DwZ2 { alpha } => {
                check_open_unit("alpha", alpha)?;
                let g = statrs::function::gamma::gamma(1.0 - alpha);
                let name = format!("{}(alpha={alpha})", kind.id());
                (name, alpha, alpha / 2.0, g, Some(2.0 - alpha), g)
            }
        };
        let spec = Self {
            kind,
            name,
            alpha,
            beta,
            lambda,
            nu,
            gamma,
        };
        spec.self_check()?;
        Ok(spec)
    }

    /// Stored exponents against the closed forms: ψ - φ = λ (x-1)^α and
    /// R(t,t) = t^{2β} φ(1) > 0.
    fn self_check(&self) -> Result<()> {
        let phi1 = self.phi0(1.0);
        if !(phi1 > 0.0 && phi1.is_finite()) {
            return Err(Error::InvalidParameter(format!("{}: φ(1) = {phi1}", self.name)));
        }
        for &x in &[1.0, 1.5, 3.0, 40.0] {
            let lhs = self.psi0(x) - self.phi0(x);
            let rhs = self.lambda * (x - 1.0).powf(self.alpha);
            if (lhs - rhs).abs() > 1e-10 * (1.0 + self.phi0(x).abs() + rhs) {
                return Err(Error::InvalidParameter(format!(
                    "{}: stored λ, α inconsistent with ψ at x = {x}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// `φ(x)`, `φ'(x)` or `φ''(x)` for `x >= 1`.
    pub fn phi(&self, x: f64, order: u8) -> Result<f64> {
        check_x(x)?;
        let v = match order {
            0 => self.phi0(x),
            1 => self.phi1(x),
            2 => self.phi2(x),
            _ => return Err(Error::Domain(format!("derivative order {order} not available"))),
        };
        finite_or_singular(v, x, order)
    }

    /// `ψ(x)`, `ψ'(x)` or `ψ''(x)` for `x >= 1`.
    pub fn psi(&self, x: f64, order: u8) -> Result<f64> {
        check_x(x)?;
        let v = match order {
            0 => self.psi0(x),
            1 => self.psi1(x),
            2 => self.psi2(x),
            _ => return Err(Error::Domain(format!("derivative order {order} not available"))),
        };
        finite_or_singular(v, x, order)
    }

    /// Covariance `R(s, t) = E[X_s X_t]`.
    pub fn kernel(&self, s: f64, t: f64) -> Result<f64> {
        if s < 0.0 || t < 0.0 || s.is_nan() || t.is_nan() {
            return Err(Error::Domain(format!("negative time in R({s}, {t})")));
        }
        Ok(self.kernel_unchecked(s, t))
    }

    pub(crate) fn kernel_unchecked(&self, s: f64, t: f64) -> f64 {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        if lo == 0.0 {
            return 0.0;
        }
        lo.powf(2.0 * self.beta) * self.phi0(hi / lo)
    }

    pub(crate) fn phi0(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Fbm { h } => 0.5 * (1.0 + pow_step(x - 1.0, 1.0, 2.0 * h)),
            ModelKind::Bifbm { h, k } => {
                let y = x.powf(-2.0 * h);
                let head = x.powf(2.0 * h * k) * (k * y.ln_1p()).exp_m1();
                2f64.powf(-k) * (head + pow_step(x - 1.0, 1.0, 2.0 * h * k))
            }
            ModelKind::Subfbm { h } => 1.0 - 0.5 * second_diff_pow(x, 2.0 * h),
            ModelKind::Swanson => x.sqrt() * swanson_angle(x),
            ModelKind::DwZ1 { alpha } => self.gamma * pow_step(x, 1.0, alpha),
            ModelKind::DwZ2 { alpha } => self.gamma * (1.0 - pow_step(x, 1.0, alpha)),
        }
    }

    fn phi1(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Fbm { h } => scaled(h, pow_step(x - 1.0, 1.0, 2.0 * h - 1.0)),
            ModelKind::Bifbm { h, k } => {
                let y = x.powf(-2.0 * h);
                let a = 2.0 * h * k;
                let head = x.powf(a - 1.0) * ((k - 1.0) * y.ln_1p()).exp_m1();
                2f64.powf(1.0 - k) * h * k * (head + pow_step(x - 1.0, 1.0, a - 1.0))
            }
            ModelKind::Subfbm { h } => -h * second_diff_pow(x, 2.0 * h - 1.0),
            ModelKind::Swanson => swanson_d(x) / (2.0 * x.sqrt()),
            ModelKind::DwZ1 { alpha } => self.gamma * alpha * pow_step(x, 1.0, alpha - 1.0),
            ModelKind::DwZ2 { alpha } => -self.gamma * alpha * pow_step(x, 1.0, alpha - 1.0),
        }
    }

    fn phi2(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Fbm { h } => {
                scaled(h * (2.0 * h - 1.0), pow_step(x - 1.0, 1.0, 2.0 * h - 2.0))
            }
            ModelKind::Bifbm { h, k } => {
                let a = 2.0 * h * k;
                let ly = x.powf(-2.0 * h).ln_1p();
                // (1 + x^{2H})^c - x^{2Hc}
                let excess = |c: f64| x.powf(2.0 * h * c) * (c * ly).exp_m1();
                let t1 = scaled(a - 1.0, pow_step(x - 1.0, 1.0, a - 2.0));
                let t2 = scaled(2.0 * h - 1.0, x.powf(2.0 * h - 2.0) * excess(k - 1.0));
                let t3 = scaled(2.0 * h * (k - 1.0), x.powf(4.0 * h - 2.0) * excess(k - 2.0));
                2f64.powf(1.0 - k) * h * k * (t1 + t2 + t3)
            }
            ModelKind::Subfbm { h } => {
                scaled(-h * (2.0 * h - 1.0), second_diff_pow(x, 2.0 * h - 2.0))
            }
            ModelKind::Swanson => {
                let x32 = x.powf(1.5);
                -swanson_d(x) / (4.0 * x32) + 1.0 / (4.0 * x32 * (x - 1.0).powf(1.5))
            }
            ModelKind::DwZ1 { alpha } => {
                self.gamma * alpha * (alpha - 1.0) * pow_step(x, 1.0, alpha - 2.0)
            }
            ModelKind::DwZ2 { alpha } => {
                -self.gamma * alpha * (alpha - 1.0) * pow_step(x, 1.0, alpha - 2.0)
            }
        }
    }

    pub(crate) fn psi0(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Fbm { h } => 0.5 * (1.0 + x.powf(2.0 * h)),
            ModelKind::Bifbm { h, k } => 2f64.powf(-k) * (1.0 + x.powf(2.0 * h)).powf(k),
            ModelKind::Subfbm { h } => {
                let p = 2.0 * h;
                1.0 + x.powf(p) - 0.5 * (x + 1.0).powf(p)
            }
            ModelKind::Swanson => x.sqrt() * swanson_angle(x) + (x - 1.0).sqrt(),
            ModelKind::DwZ1 { .. } | ModelKind::DwZ2 { .. } => {
                self.phi0(x) + self.lambda * (x - 1.0).powf(self.alpha)
            }
        }
    }

    fn psi1(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Fbm { h } => h * x.powf(2.0 * h - 1.0),
            ModelKind::Bifbm { h, k } => {
                let p = 2.0 * h;
                2f64.powf(-k) * k * p * x.powf(p - 1.0) * (1.0 + x.powf(p)).powf(k - 1.0)
            }
            ModelKind::Subfbm { h } => {
                let p = 2.0 * h;
                p * x.powf(p - 1.0) - h * (x + 1.0).powf(p - 1.0)
            }
            ModelKind::Swanson => {
                let r = x.sqrt();
                (swanson_angle(x) + (x - 1.0).sqrt() / (r + 1.0)) / (2.0 * r)
            }
            ModelKind::DwZ1 { .. } | ModelKind::DwZ2 { .. } => {
                let a = self.alpha;
                self.phi1(x) + self.lambda * a * (x - 1.0).powf(a - 1.0)
            }
        }
    }

    fn psi2(&self, x: f64) -> f64 {
        match self.kind {
            ModelKind::Fbm { h } => scaled(h * (2.0 * h - 1.0), x.powf(2.0 * h - 2.0)),
            ModelKind::Bifbm { h, k } => {
                let p = 2.0 * h;
                let u = 1.0 + x.powf(p);
                let t1 = scaled((k - 1.0) * p, x.powf(2.0 * p - 2.0) * u.powf(k - 2.0));
                let t2 = scaled(p - 1.0, x.powf(p - 2.0) * u.powf(k - 1.0));
                2f64.powf(-k) * k * p * (t1 + t2)
            }
            ModelKind::Subfbm { h } => {
                let p = 2.0 * h;
                scaled(p - 1.0, p * x.powf(p - 2.0) - h * (x + 1.0).powf(p - 2.0))
            }
            ModelKind::Swanson => {
                let r = x.sqrt();
                let x32 = x * r;
                let g = swanson_angle(x) + (x - 1.0).sqrt() / (r + 1.0);
                -g / (4.0 * x32) - 1.0 / (4.0 * x32 * (r + 1.0) * (x - 1.0).sqrt())
            }
            ModelKind::DwZ1 { .. } | ModelKind::DwZ2 { .. } => {
                let a = self.alpha;
                self.phi2(x) + self.lambda * a * (a - 1.0) * (x - 1.0).powf(a - 2.0)
            }
        }
    }
}

/// `c * v`, with an exactly vanishing coefficient absorbing an infinite `v`.
fn scaled(c: f64, v: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * v
    }
}

fn check_x(x: f64) -> Result<()> {
    if x >= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("φ and ψ are defined for x >= 1, got {x}")))
    }
}

fn finite_or_singular(v: f64, x: f64, order: u8) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Singularity { x, order })
    }
}

/// `asin(1/√x)`, written as an arctangent to stay accurate near `x = 1`.
fn swanson_angle(x: f64) -> f64 {
    1f64.atan2((x - 1.0).sqrt())
}

/// `asin(1/√x) - 1/√(x-1)`; for `x >= 4` the cancelling leading terms are
/// removed analytically: `-Σ_{k≥1} d_k (2k/(2k+1)) x^{-(2k+1)/2}` with
/// `d_k = (2k)! / (4^k (k!)^2)`.
fn swanson_d(x: f64) -> f64 {
    if x < 4.0 {
        return swanson_angle(x) - 1.0 / (x - 1.0).sqrt();
    }
    let u = 1.0 / x.sqrt();
    let u2 = u * u;
    let mut d = 1.0;
    let mut pow = u;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        d *= (2.0 * kf - 1.0) / (2.0 * kf);
        pow *= u2;
        let term = d * (2.0 * kf / (2.0 * kf + 1.0)) * pow;
        sum += term;
        if term <= 1e-18 * sum {
            break;
        }
    }
    -sum
}

/// One catalog row: identifier, parameter ranges, exponent formulas and a
/// representative instance.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub params: &'static str,
    pub alpha: &'static str,
    pub beta: &'static str,
    pub lambda: &'static str,
    pub nu: &'static str,
    pub example: ModelSpec,
}

pub fn list_models() -> Vec<CatalogEntry> {
    let entry = |id, params, alpha, beta, lambda, nu, kind| CatalogEntry {
        id,
        params,
        alpha,
        beta,
        lambda,
        nu,
        example: ModelSpec::new(kind).expect("catalog defaults are valid"),
    };
    vec![
        entry("fbm", "H in (0,1)", "2H", "H", "1/2", "2-2H (alpha<1)", ModelKind::Fbm { h: 0.3 }),
        entry(
            "bifbm",
            "H in (0,1), K in (0,1]",
            "2HK",
            "HK",
            "2^-K",
            "min(1+2H-2HK, 2-2HK) (alpha<1)",
            ModelKind::Bifbm { h: 0.6, k: 0.5 },
        ),
        entry("subfbm", "H in (0,1)", "2H", "H", "1/2", "2-2H (alpha<1)", ModelKind::Subfbm { h: 0.35 }),
        entry("swanson", "none", "1/2", "1/2", "1", "2", ModelKind::Swanson),
        entry(
            "dw-z1",
            "alpha in (0,1)",
            "alpha",
            "alpha/2",
            "Gamma(1-alpha)",
            "2-alpha",
            ModelKind::DwZ1 { alpha: 0.5 },
        ),
        entry(
            "dw-z2",
            "alpha in (0,1)",
            "alpha",
            "alpha/2",
            "Gamma(1-alpha)",
            "2-alpha",
            ModelKind::DwZ2 { alpha: 0.5 },
        ),
    ]
}

/// Looks up a catalog entry by identifier.
pub fn find_model(id: &str) -> Option<CatalogEntry> {
    list_models().into_iter().find(|e| e.id == id)
}
