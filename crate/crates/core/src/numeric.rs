//! Log-domain summation helpers and the few special functions the kernels need.

use statrs::function::factorial;
use statrs::function::gamma;

/// Kahan-Babuska compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `ln Σ exp(x_i)` with max shift and compensated accumulation.
/// Returns `-inf` for an empty slice or all `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s = compensated_sum(xs.iter().map(|&x| (x - max).exp()));
    max + s.ln()
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[inline]
pub fn ln_factorial(k: u64) -> f64 {
    factorial::ln_factorial(k)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

// B_{2j} / (2j)! for j = 1..=6
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
];

/// `ln Σ_{x ≥ start} x^{-s}` for `s > 1`, `start ≥ 1`, via direct summation up to a
/// switch point and an Euler-Maclaurin remainder beyond it.
///
/// Returns `None` when `s ≤ 1` (the sum diverges).
pub fn ln_power_law_tail(s: f64, start: u64) -> Option<f64> {
    if s.is_nan() || s <= 1.0 || start == 0 {
        return None;
    }
    const SWITCH: u64 = 32;
    let m = start.max(SWITCH);
    let direct: Vec<f64> = (start..m).map(|x| -s * (x as f64).ln()).collect();

    let mf = m as f64;
    // M^{1-s} [ 1/(s-1) + 1/(2M) + Σ B_{2j}/(2j)! (s)_{2j-1} M^{-2j} ]
    let mut bracket = CompensatedSum::new();
    bracket.add(1.0 / (s - 1.0));
    bracket.add(0.5 / mf);
    let mut mpow = mf * mf;
    for (j, &coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        bracket.add(coef * rising_factorial(s, 2 * j + 1) / mpow);
        mpow *= mf * mf;
    }
    let em = (1.0 - s) * mf.ln() + bracket.value().ln();
    let direct_ln = log_sum_exp(&direct);
    Some(log_add_exp(direct_ln, em))
}

/// `s (s+1) ... (s+n-1)`.
fn rising_factorial(s: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (s + i as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(xs.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_handles_large_offsets() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn zeta_two_and_three() {
        let z2 = ln_power_law_tail(2.0, 1).unwrap().exp();
        assert!((z2 - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        let z4 = ln_power_law_tail(4.0, 1).unwrap().exp();
        assert!((z4 - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-14);
        // ζ(3) (Apéry's constant)
        let z3 = ln_power_law_tail(3.0, 1).unwrap().exp();
        assert!((z3 - 1.202_056_903_159_594_2).abs() < 1e-14);
    }

    #[test]
    fn power_law_tail_matches_brute_force_shifted_start() {
        // Σ_{x≥5} x^{-2.5} vs a long direct sum plus integral tail
        let s = 2.5;
        let n = 2_000_000u64;
        let direct = compensated_sum((5..n).map(|x| (x as f64).powf(-s)));
        let rest = (n as f64).powf(1.0 - s) / (s - 1.0) + 0.5 * (n as f64).powf(-s);
        let got = ln_power_law_tail(s, 5).unwrap().exp();
        assert!(((direct + rest) - got).abs() < 1e-13);
    }

    #[test]
    fn divergent_power_law_is_rejected() {
        assert!(ln_power_law_tail(1.0, 1).is_none());
        assert!(ln_power_law_tail(0.5, 3).is_none());
    }

    #[test]
    fn ln_binomial_small_values() {
        assert!((ln_binomial(5, 2).exp() - 10.0).abs() < 1e-12);
        assert_eq!(ln_binomial(2, 3), f64::NEG_INFINITY);
    }
}
