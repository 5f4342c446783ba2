//! Small cancellation-free kernels shared by the models, the variance series
//! and the audits.

/// `(b + d)^p - b^p` for `b >= 0`, `d > 0`, without cancellation.
pub fn pow_step(b: f64, d: f64, p: f64) -> f64 {
    if b == 0.0 {
        return d.powf(p) - 0.0f64.powf(p);
    }
    b.powf(p) * (p * (d / b).ln_1p()).exp_m1()
}

/// Centered second difference `(x+1)^p - 2 x^p + (x-1)^p` for `x >= 1`.
///
/// For `x >= 8` the binomial series `2 x^p sum_k C(p, 2k) x^{-2k}` is used;
/// the direct form loses about `2 log10(x)` digits.
pub fn second_diff_pow(x: f64, p: f64) -> f64 {
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    if x >= 8.0 {
        let inv2 = 1.0 / (x * x);
        let mut binom = 1.0; // C(p, j)
        let mut j = 0.0;
        let mut sum = 0.0;
        let mut scale = 1.0;
        for _ in 0..80 {
            binom *= (p - j) / (j + 1.0);
            binom *= (p - j - 1.0) / (j + 2.0);
            j += 2.0;
            scale *= inv2;
            let term = binom * scale;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() || binom == 0.0 {
                break;
            }
        }
        2.0 * x.powf(p) * sum
    } else {
        pow_step(x, 1.0, p) - pow_step(x - 1.0, 1.0, p)
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Hurwitz zeta `sum_{k >= 0} (k + a)^{-s}` for `s > 1`, `a > 0`.
///
/// Direct summation until the shifted argument reaches 32, then
/// Euler-Maclaurin with four Bernoulli corrections (relative remainder
/// below 1e-16 at that shift).
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0);
    let mut acc = KahanSum::new();
    let mut a = a;
    while a < 32.0 {
        acc.add(a.powf(-s));
        a += 1.0;
    }
    let f = a.powf(-s);
    let mut em = a.powf(1.0 - s) / (s - 1.0) + 0.5 * f;
    // B2/2!, B4/4!, B6/6!, B8/8!
    const B: [f64; 4] = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0];
    let mut rising = s; // s (s+1) ... (s + 2j - 2)
    let mut pow = f / a; // a^{-s-1}
    for (j, b) in B.iter().enumerate() {
        em += b * rising * pow;
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        pow /= a * a;
    }
    acc.add(em);
    acc.value()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn factorial(q: usize) -> f64 {
    (1..=q).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `floor(n t)` with a relative guard against products such as
/// `0.29 * 100 = 28.999999999999996`.
pub fn floor_nt(n: usize, t: f64) -> usize {
    let x = n as f64 * t;
    if x <= 0.0 {
        return 0;
    }
    (x * (1.0 + 4.0 * f64::EPSILON)).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_difference_matches_direct_form_in_overlap() {
        for &p in &[0.5, 1.4, -0.6, 0.2, 1.9] {
            for &x in &[8.0, 9.5, 12.0, 20.0] {
                let direct: f64 = (x + 1.0f64).powf(p) - 2.0 * x.powf(p) + (x - 1.0f64).powf(p);
                let series = second_diff_pow(x, p);
                assert!(
                    (direct - series).abs() <= 1e-11 * series.abs(),
                    "p={p} x={x}: {direct} vs {series}"
                );
            }
        }
        assert_eq!(second_diff_pow(5.0, 1.0), 0.0);
    }

    #[test]
    fn hurwitz_zeta_reduces_to_riemann() {
        // zeta(2) = pi^2 / 6, zeta(4) = pi^4 / 90
        let pi = std::f64::consts::PI;
        assert!((hurwitz_zeta(2.0, 1.0) - pi * pi / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(4.0, 1.0) - pi.powi(4) / 90.0).abs() < 1e-14);
        // shift identity zeta(s, a) = a^{-s} + zeta(s, a + 1)
        let (s, a) = (1.3, 7.25);
        let lhs = hurwitz_zeta(s, a);
        let rhs = a.powf(-s) + hurwitz_zeta(s, a + 1.0);
        assert!((lhs - rhs).abs() < 1e-13 * lhs);
    }

    #[test]
    fn floor_nt_is_exact_on_decimal_grids() {
        assert_eq!(floor_nt(100, 0.29), 29);
        assert_eq!(floor_nt(512, 0.25), 128);
        assert_eq!(floor_nt(10, 0.05), 0);
        assert_eq!(floor_nt(7, 1.0), 7);
    }

    #[test]
    fn pow_step_handles_zero_base() {
        assert_eq!(pow_step(0.0, 1.0, 0.5), 1.0);
        assert!(pow_step(0.0, 1.0, -0.5).is_infinite());
        let v = pow_step(1e6, 1.0, 0.5);
        assert!((v - 0.5e-3).abs() < 1e-9);
    }
}
