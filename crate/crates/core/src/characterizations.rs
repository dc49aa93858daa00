//! Convolution, conditioning on a sum, the closure sequence `a_n`, the Rao-Rubin damage
//! gap, the Stein residual and the binomial / negative-binomial limit curves.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::kernels::{cmb_pmf, cmnb_pmf, cmp_pmf, CmbParams, CmnbParams, CmpParams, DEFAULT_TOL};
use crate::numeric::{compensated_sum, ln_binomial, log_sum_exp};
use crate::pmf::{PmfMeta, TruncatedPmf};

/// Distribution of `X + Y` for independent `X`, `Y` on the combined window.
pub fn convolve(x: &TruncatedPmf, y: &TruncatedPmf) -> TruncatedPmf {
    let (a, b) = (x.probs(), y.probs());
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &pa) in a.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (j, &pb) in b.iter().enumerate() {
            out[i + j] += pa * pb;
        }
    }
    let meta = PmfMeta::new(
        "convolution",
        json!({
            "x": { "family": x.meta().family, "params": x.meta().params },
            "y": { "family": y.meta().family, "params": y.meta().params },
        }),
        x.meta().tol.max(y.meta().tol),
    );
    TruncatedPmf {
        support_start: x.support_start() + y.support_start(),
        probs: out,
        tail_bound: x.tail_bound() + y.tail_bound(),
        meta,
        tail_model: None,
    }
}

/// `P(X = k | X + Y = s)` for `k = 0..=s`.
pub fn conditional_given_sum(x: &TruncatedPmf, y: &TruncatedPmf, s: u64) -> Result<Vec<f64>> {
    let joint: Vec<f64> = (0..=s).map(|k| x.prob(k) * y.prob(s - k)).collect();
    let total = compensated_sum(joint.iter().copied());
    if total <= 0.0 {
        return Err(Error::ZeroProbability(format!(
            "P(X + Y = {s}) is zero on the windows"
        )));
    }
    Ok(joint.into_iter().map(|j| j / total).collect())
}

/// `a_n = Σ_k (C(n,k) p^k q^{n-k})^ν` with `p = λ_x / (λ_x + λ_y)`, for `n = 0..=n_max`.
pub fn a_sequence(lambda_x: f64, lambda_y: f64, nu: f64, n_max: u64) -> Vec<f64> {
    let p = lambda_x / (lambda_x + lambda_y);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    (0..=n_max)
        .map(|n| {
            let terms: Vec<f64> = (0..=n)
                .map(|k| nu * (ln_binomial(n, k) + k as f64 * lp + (n - k) as f64 * lq))
                .collect();
            log_sum_exp(&terms).exp()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub nu: f64,
    /// `λ₁^{1/ν}`.
    pub lambda_x: f64,
    /// `λ₂^{1/ν}`.
    pub lambda_y: f64,
    pub a_seq: Vec<f64>,
    /// `λ̂`, the first consecutive ratio of the sum.
    pub fitted_lambda: f64,
    /// First `n` where the ratio `P_n / P_{n-1}` departs from `λ̂ / n^ν` by more than `tol`.
    pub first_violation_n: Option<u64>,
    pub max_ratio_deviation: f64,
    /// Same comparison against the fixed candidate `CMP(λ₁ + λ₂, ν)`, from `n = 1`.
    pub candidate_first_violation_n: Option<u64>,
    pub candidate_max_deviation: f64,
    /// Largest relative error of `P_n / P_{n-1} = ((λ_x + λ_y)/n)^ν a_n / a_{n-1}`.
    pub a_ratio_identity_error: f64,
}

fn cmp_window_to(lambda: f64, nu: f64, n_max: u64) -> Result<TruncatedPmf> {
    let params = CmpParams::new(lambda, nu)?;
    let p = cmp_pmf(&params, None, DEFAULT_TOL)?;
    if p.support_end() >= n_max {
        Ok(p)
    } else {
        cmp_pmf(&params, Some(n_max), DEFAULT_TOL)
    }
}

pub fn closure_test(
    lambda1: f64,
    lambda2: f64,
    nu: f64,
    n_max: u64,
    tol: f64,
) -> Result<ClosureReport> {
    if n_max < 2 {
        return Err(Error::Precondition(format!(
            "n_max >= 2 required (got {n_max})"
        )));
    }
    let sum = convolve(
        &cmp_window_to(lambda1, nu, n_max)?,
        &cmp_window_to(lambda2, nu, n_max)?,
    );
    let ratio = |n: u64| sum.prob(n) / sum.prob(n - 1);
    let fitted = ratio(1);
    let candidate = lambda1 + lambda2;

    let (lx, ly) = (lambda1.powf(1.0 / nu), lambda2.powf(1.0 / nu));
    let a_seq = a_sequence(lx, ly, nu, n_max);

    let mut first = None;
    let mut max_dev: f64 = 0.0;
    let mut cand_first = None;
    let mut cand_max: f64 = 0.0;
    let mut identity_err: f64 = 0.0;
    for n in 1..=n_max {
        let r = ratio(n);
        let n_nu = (n as f64).powf(nu);
        if n >= 2 {
            let dev = (r / (fitted / n_nu) - 1.0).abs();
            max_dev = max_dev.max(dev);
            if dev > tol && first.is_none() {
                first = Some(n);
            }
        }
        let cdev = (r / (candidate / n_nu) - 1.0).abs();
        cand_max = cand_max.max(cdev);
        if cdev > tol && cand_first.is_none() {
            cand_first = Some(n);
        }
        let predicted = ((lx + ly) / n as f64).powf(nu) * a_seq[n as usize] / a_seq[n as usize - 1];
        identity_err = identity_err.max((r / predicted - 1.0).abs());
    }
    Ok(ClosureReport {
        nu,
        lambda_x: lx,
        lambda_y: ly,
        a_seq,
        fitted_lambda: fitted,
        first_violation_n: first,
        max_ratio_deviation: max_dev,
        candidate_first_violation_n: cand_first,
        candidate_max_deviation: cand_max,
        a_ratio_identity_error: identity_err,
    })
}

/// `max_j |λ P(W = j-1) - j^ν P(W = j)|` over `j ≥ 1` in the window, and its location.
pub fn stein_residual(w: &TruncatedPmf, lambda: f64, nu: f64) -> (f64, u64) {
    let mut best = (0.0, w.support_start().max(1));
    for j in w.support_start().max(1)..=w.support_end() {
        let r = (lambda * w.prob(j - 1) - (j as f64).powf(nu) * w.prob(j)).abs();
        if r > best.0 {
            best = (r, j);
        }
    }
    best
}

/// `(λ̂, ν̂)` matching the first two consecutive ratios of a pmf supported from 0:
/// `P₁/P₀ = λ`, `P₂/P₁ = λ / 2^ν`.
pub fn fit_cmp_from_ratios(w: &TruncatedPmf) -> Option<(f64, f64)> {
    let (p0, p1, p2) = (w.prob(0), w.prob(1), w.prob(2));
    if p0 <= 0.0 || p1 <= 0.0 || p2 <= 0.0 {
        return None;
    }
    let lambda = p1 / p0;
    let nu = (lambda * p1 / p2).log2();
    Some((lambda, nu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaoRubinGap {
    pub max_gap: f64,
    pub argmax_r: u64,
}

/// Distance between the damaged law `P(Y = r)` and `P(Y = r | X = Y)` under the COM-binomial
/// damage kernel `P(Y = r | X = z) = CMB(z, p, ν)(r)`.
pub fn rao_rubin_gap(x: &TruncatedPmf, p: f64, nu: f64) -> Result<RaoRubinGap> {
    let mass = x.window_mass();
    if mass < 1.0 - 1e-9 {
        return Err(Error::WindowMass(mass));
    }
    let end = x.support_end() as usize;
    let mut marginal: Vec<Vec<f64>> = vec![Vec::new(); end + 1];
    let mut undamaged = vec![0.0; end + 1];
    for (z, pz) in x.iter() {
        if pz == 0.0 {
            continue;
        }
        let kernel = cmb_pmf(&CmbParams::new(z, p, nu)?);
        for (r, kr) in kernel.probs().iter().enumerate() {
            marginal[r].push(pz * kr);
        }
        undamaged[z as usize] = pz * kernel.probs()[z as usize];
    }
    let marginal: Vec<f64> = marginal.into_iter().map(compensated_sum).collect();
    let total = compensated_sum(undamaged.iter().copied());
    let mut out = RaoRubinGap {
        max_gap: 0.0,
        argmax_r: 0,
    };
    for (r, (m, u)) in marginal.iter().zip(&undamaged).enumerate() {
        let d = (m - u / total).abs();
        if d > out.max_gap {
            out = RaoRubinGap {
                max_gap: d,
                argmax_r: r as u64,
            };
        }
    }
    Ok(out)
}

/// Total variation distance bracketed by the two windows' tail bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvInterval {
    pub lower: f64,
    pub upper: f64,
}

pub fn tv_distance(a: &TruncatedPmf, b: &TruncatedPmf) -> TvInterval {
    let lo = a.support_start().min(b.support_start());
    let hi = a.support_end().max(b.support_end());
    let lower = (0.5 * compensated_sum((lo..=hi).map(|k| (a.prob(k) - b.prob(k)).abs()))).min(1.0);
    let upper = (lower + 0.5 * (a.tail_bound() + b.tail_bound())).min(1.0);
    TvInterval { lower, upper }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCurve {
    pub grid: Vec<f64>,
    /// Window TV to `CMP(λ, ν)` at each grid point.
    pub tv: Vec<f64>,
    /// Same, plus the tail correction.
    pub tv_upper: Vec<f64>,
    pub lambda: f64,
    pub nu: f64,
}

impl LimitCurve {
    pub fn strictly_decreasing(&self) -> bool {
        self.tv.windows(2).all(|w| w[1] < w[0])
    }
}

fn curve<F>(lambda: f64, nu: f64, grid: Vec<f64>, build: F) -> Result<LimitCurve>
where
    F: Fn(f64) -> Result<TruncatedPmf>,
{
    let target = cmp_pmf(&CmpParams::new(lambda, nu)?, None, DEFAULT_TOL)?;
    let mut tv = Vec::with_capacity(grid.len());
    let mut tv_upper = Vec::with_capacity(grid.len());
    for &g in &grid {
        let d = tv_distance(&build(g)?, &target);
        tv.push(d.lower);
        tv_upper.push(d.upper);
    }
    Ok(LimitCurve {
        grid,
        tv,
        tv_upper,
        lambda,
        nu,
    })
}

/// `CMB(m, λ/m^ν, ν)` against `CMP(λ, ν)` along `m_grid`.
pub fn limit_cmb_to_cmp(lambda: f64, nu: f64, m_grid: &[u64]) -> Result<LimitCurve> {
    if let Some(m) = m_grid.iter().find(|&&m| (m as f64).powf(nu) <= lambda) {
        return Err(Error::Precondition(format!(
            "m^nu > lambda required (m = {m})"
        )));
    }
    let grid = m_grid.iter().map(|&m| m as f64).collect();
    curve(lambda, nu, grid, |m| {
        Ok(cmb_pmf(&CmbParams::new(m as u64, lambda / m.powf(nu), nu)?))
    })
}

/// `CMNB(r, ν, λ/(r^ν + λ))` against `CMP(λ, ν)` along `r_grid`.
pub fn limit_cmnb_to_cmp(lambda: f64, nu: f64, r_grid: &[f64]) -> Result<LimitCurve> {
    if !r_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Precondition("r_grid must be increasing".into()));
    }
    curve(lambda, nu, r_grid.to_vec(), |r| {
        let p = lambda / (r.powf(nu) + lambda);
        cmnb_pmf(&CmnbParams::new(r, nu, p)?, DEFAULT_TOL)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{geometric_pmf, poisson_pmf};

    #[test]
    fn point_masses_add() {
        let c = convolve(&TruncatedPmf::point_mass(2), &TruncatedPmf::point_mass(5));
        assert_eq!(c.support_start(), 7);
        assert_eq!(c.probs(), &[1.0]);
    }

    #[test]
    fn cmp_pair_ratios() {
        let x = cmp_pmf(&CmpParams::new(1.0, 2.0).unwrap(), None, 1e-12).unwrap();
        let c = convolve(&x, &x);
        assert!((c.prob(1) / c.prob(0) - 2.0).abs() < 1e-13);
        assert!((c.prob(2) / c.prob(1) - 0.75).abs() < 1e-13);
    }

    #[test]
    fn a_sequence_hand_values() {
        let a = a_sequence(1.0, 1.0, 2.0, 2);
        assert_eq!(a[0], 1.0);
        assert!((a[1] - 0.5).abs() < 1e-15);
        assert!((a[2] - 0.375).abs() < 1e-15);
        assert!((a_sequence(1.0, 1.0, 0.5, 1)[1] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn closure_violations() {
        assert_eq!(
            closure_test(1.0, 1.0, 1.0, 20, 1e-9)
                .unwrap()
                .first_violation_n,
            None
        );
        assert_eq!(
            closure_test(1.0, 1.0, 2.0, 20, 1e-9)
                .unwrap()
                .first_violation_n,
            Some(2)
        );
        assert_eq!(
            closure_test(2.0, 3.0, 0.5, 20, 1e-9)
                .unwrap()
                .first_violation_n,
            Some(2)
        );
    }

    #[test]
    fn stein_on_geometric() {
        let g = geometric_pmf(0.5, 1e-12).unwrap();
        assert!(stein_residual(&g, 1.0, 1.0).0 >= 0.05);
        let p = poisson_pmf(2.0, 1e-12).unwrap();
        assert!(stein_residual(&p, 2.0, 1.0).0 < 1e-13);
    }

    #[test]
    fn tv_extremes() {
        let a = TruncatedPmf::point_mass(0);
        assert_eq!(tv_distance(&a, &a).upper, 0.0);
        assert_eq!(tv_distance(&a, &TruncatedPmf::point_mass(3)).lower, 1.0);
    }

    #[test]
    fn rao_rubin_window_mass() {
        let meta = PmfMeta::new("t", serde_json::Value::Null, 0.0);
        let p = TruncatedPmf::new(0, vec![0.5, 0.4], 0.1, meta).unwrap();
        assert!(matches!(
            rao_rubin_gap(&p, 0.5, 1.0),
            Err(Error::WindowMass(_))
        ));
    }

    #[test]
    fn cmb_limit_precondition() {
        assert!(matches!(
            limit_cmb_to_cmp(4.0, 1.0, &[2, 10]),
            Err(Error::Precondition(_))
        ));
    }
}
