//! Rényi and Tsallis entropies, Kagan's discrete score and Fisher information, the COM-type
//! Fisher information and the Stam gap.

use serde::Serialize;
use serde_json::json;

use crate::characterizations::convolve;
use crate::error::{Error, Result};
use crate::kernels::DEFAULT_TOL;
use crate::numeric::{compensated_sum, log_add_exp};
use crate::pmf::TruncatedPmf;
use crate::transform::{com_type, power_sums, PowerTail};

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() && alpha != 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "entropy order alpha > 0, alpha != 1 required (got {alpha})"
        )))
    }
}

/// `Σ P^α` split into the window part and a certified tail (added when exact, required to
/// be below `max(tol, tail_bound)` relative to the window when only bounded).
fn power_total(pmf: &TruncatedPmf, alpha: f64) -> Result<(f64, f64)> {
    let (ln_window, tail) = power_sums(pmf, alpha)?;
    match tail {
        PowerTail::Exact(ln_t) => Ok((ln_window, ln_t)),
        PowerTail::Bound(ln_b) => {
            let rel = (ln_b - ln_window).exp();
            let allowed = DEFAULT_TOL.max(pmf.tail_bound());
            if rel > allowed {
                Err(Error::Divergence(format!(
                    "sum of P^{alpha} cannot be certified: omitted part may reach {rel:e}"
                )))
            } else {
                Ok((ln_window, f64::NEG_INFINITY))
            }
        }
    }
}

/// `H^R_α = ln(Σ P^α) / (1 - α)`.
pub fn renyi_entropy(pmf: &TruncatedPmf, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    let (ln_window, ln_tail) = power_total(pmf, alpha)?;
    Ok(log_add_exp(ln_window, ln_tail) / (1.0 - alpha))
}

/// `H^T_α = (Σ P^α - 1) / (1 - α)`, summed in the linear domain.
pub fn tsallis_entropy(pmf: &TruncatedPmf, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    let (_, ln_tail) = power_total(pmf, alpha)?;
    let window = compensated_sum(pmf.probs().iter().map(|p| p.powf(alpha)));
    Ok((window + ln_tail.exp() - 1.0) / (1.0 - alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherReport {
    /// `J(x)` for each window point.
    pub score: Vec<f64>,
    pub fisher_info: f64,
    pub rsp: bool,
    pub nu: f64,
    pub com_fisher_info: Option<f64>,
    pub neglected_mass: f64,
}

impl FisherReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "fisher_info": self.fisher_info,
            "com_fisher_info": self.com_fisher_info,
            "rsp": self.rsp,
            "nu": self.nu,
            "neglected_mass": self.neglected_mass,
        })
    }
}

/// Kagan score `J(x) = 1 - P(x-1)/P(x)` (0 where `P(x) = 0`), with `P(start - 1) = 0`.
pub fn kagan_score(pmf: &TruncatedPmf) -> Vec<f64> {
    let probs = pmf.probs();
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if p > 0.0 {
                let prev = if i == 0 { 0.0 } else { probs[i - 1] };
                1.0 - prev / p
            } else {
                0.0
            }
        })
        .collect()
}

/// Right-side positivity on the stored window. Trailing underflowed zeros of an infinite
/// support are treated as lying past the window; a pmf with no tail mass ends its support
/// at the last positive point and is therefore not RSP.
pub fn is_rsp(pmf: &TruncatedPmf) -> bool {
    let probs = pmf.probs();
    let Some(last) = probs.iter().rposition(|&p| p > 0.0) else {
        return false;
    };
    let infinite_support = pmf.tail_bound() > 0.0 || pmf.tail_model().is_some();
    if !infinite_support {
        return false;
    }
    probs[..last]
        .iter()
        .zip(&probs[1..=last])
        .all(|(&a, &b)| a <= 0.0 || b > 0.0)
}

pub fn score_and_fisher(pmf: &TruncatedPmf) -> FisherReport {
    let score = kagan_score(pmf);
    let fisher_info = compensated_sum(score.iter().zip(pmf.probs()).map(|(j, p)| j * j * p));
    FisherReport {
        score,
        fisher_info,
        rsp: is_rsp(pmf),
        nu: 1.0,
        com_fisher_info: None,
        neglected_mass: pmf.tail_bound(),
    }
}

/// `C_ν I_X = E[J²_{X_{1/ν}}]`: Kagan's information of the order-`1/ν` transform.
pub fn com_fisher_info(pmf: &TruncatedPmf, nu: f64) -> Result<FisherReport> {
    let transformed = com_type(pmf, 1.0 / nu, DEFAULT_TOL)?;
    let inner = score_and_fisher(&transformed.pmf);
    let plain = score_and_fisher(pmf);
    Ok(FisherReport {
        score: inner.score,
        fisher_info: plain.fisher_info,
        rsp: inner.rsp,
        nu,
        com_fisher_info: Some(inner.fisher_info),
        neglected_mass: transformed.pmf.tail_bound(),
    })
}

/// `E_{1/ν}[K_X²]` with `K_X(x) = 1 - (P(x-1)/P(x))^{1/ν}`; the same quantity as
/// [`com_fisher_info`] reached without forming transformed score ratios.
pub fn com_fisher_info_via_k(pmf: &TruncatedPmf, nu: f64) -> Result<f64> {
    let transformed = com_type(pmf, 1.0 / nu, DEFAULT_TOL)?;
    let probs = pmf.probs();
    let k: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if p > 0.0 {
                let prev = if i == 0 { 0.0 } else { probs[i - 1] };
                1.0 - (prev / p).powf(1.0 / nu)
            } else {
                0.0
            }
        })
        .collect();
    Ok(compensated_sum(
        k.iter()
            .zip(transformed.pmf.probs())
            .map(|(k, q)| k * k * q),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StamGap {
    /// `lhs - rhs`; non-negative, zero exactly on (shifted) CMP pairs of order ν.
    pub gap: f64,
    /// `1 / I(X_{1/ν} + Y_{1/ν})`.
    pub lhs: f64,
    /// `1 / C_ν I_X + 1 / C_ν I_Y`.
    pub rhs: f64,
    /// `1 / C_ν I_{X+Y}`, the transform taken after convolving. Coincides with `lhs` at
    /// `ν = 1`; for other orders it is reported, not compared.
    pub lhs_transform_of_sum: f64,
}

fn information_of(pmf: &TruncatedPmf, what: &str) -> Result<f64> {
    if !is_rsp(pmf) {
        return Err(Error::RspViolation(format!(
            "{what} is not right-side positive on its window"
        )));
    }
    let info = score_and_fisher(pmf).fisher_info;
    if !info.is_finite() || info <= 0.0 {
        return Err(Error::InfiniteInformation(format!(
            "{what}: information {info}"
        )));
    }
    Ok(info)
}

/// Stam-type gap for the COM-type Fisher information of order ν.
///
/// Kagan's inequality `1/I_{U+V} ≥ 1/I_U + 1/I_V` is applied to `U = X_{1/ν}`,
/// `V = Y_{1/ν}`, whose informations are `C_ν I_X` and `C_ν I_Y`.
pub fn stam_gap(pmf_x: &TruncatedPmf, pmf_y: &TruncatedPmf, nu: f64) -> Result<StamGap> {
    let tx = com_type(pmf_x, 1.0 / nu, DEFAULT_TOL)?.pmf;
    let ty = com_type(pmf_y, 1.0 / nu, DEFAULT_TOL)?.pmf;
    let ix = information_of(&tx, "X_{1/nu}")?;
    let iy = information_of(&ty, "Y_{1/nu}")?;
    let sum = exact_part(&convolve(&tx, &ty), &tx, &ty);
    let isum = information_of(&sum, "X_{1/nu} + Y_{1/nu}")?;

    let raw_sum = exact_part(&convolve(pmf_x, pmf_y), pmf_x, pmf_y);
    let transformed_sum = com_type(&raw_sum, 1.0 / nu, DEFAULT_TOL)?.pmf;
    let literal = information_of(&transformed_sum, "(X + Y)_{1/nu}")?;

    let lhs = 1.0 / isum;
    let rhs = 1.0 / ix + 1.0 / iy;
    Ok(StamGap {
        gap: lhs - rhs,
        lhs,
        rhs,
        lhs_transform_of_sum: 1.0 / literal,
    })
}

/// Convolution cut to the indices where every contributing pair lies inside both windows.
fn exact_part(sum: &TruncatedPmf, a: &TruncatedPmf, b: &TruncatedPmf) -> TruncatedPmf {
    let end = (a.support_end() + b.support_start()).min(a.support_start() + b.support_end());
    sum.truncated_to(end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{cmp_pmf, geometric_pmf, poisson_pmf, CmpParams};
    use crate::pmf::PmfMeta;

    fn uniform2() -> TruncatedPmf {
        TruncatedPmf::from_weights(
            0,
            &[1.0, 1.0],
            PmfMeta::new("u", serde_json::Value::Null, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn uniform_entropies() {
        for a in [0.5, 2.0, 3.0] {
            assert!((renyi_entropy(&uniform2(), a).unwrap() - 2f64.ln()).abs() < 1e-15);
        }
        assert!((tsallis_entropy(&uniform2(), 2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_entropies_vanish() {
        let p = TruncatedPmf::point_mass(4);
        assert_eq!(renyi_entropy(&p, 2.0).unwrap(), 0.0);
        assert_eq!(tsallis_entropy(&p, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn order_one_is_rejected() {
        assert!(renyi_entropy(&uniform2(), 1.0).is_err());
    }

    #[test]
    fn point_mass_information() {
        let r = score_and_fisher(&TruncatedPmf::point_mass(0));
        assert_eq!(r.score, vec![1.0]);
        assert_eq!(r.fisher_info, 1.0);
        assert!(!r.rsp);
    }

    #[test]
    fn poisson_information_is_inverse_rate() {
        let r = score_and_fisher(&poisson_pmf(2.0, 1e-12).unwrap());
        assert!((r.fisher_info - 0.5).abs() < 1e-12);
        assert!(r.rsp);
    }

    #[test]
    fn com_information_at_nu_one_is_plain() {
        let p = cmp_pmf(&CmpParams::new(1.7, 1.0).unwrap(), None, 1e-12).unwrap();
        let r = com_fisher_info(&p, 1.0).unwrap();
        assert!((r.com_fisher_info.unwrap() - r.fisher_info).abs() < 1e-14);
    }

    #[test]
    fn finite_support_pair_is_not_rsp() {
        let e = stam_gap(&uniform2(), &uniform2(), 1.0).unwrap_err();
        assert!(matches!(e, Error::RspViolation(_)));
    }

    #[test]
    fn geometric_pair_has_positive_gap() {
        let g = geometric_pmf(0.5, 1e-12).unwrap();
        let s = stam_gap(&g, &g, 1.0).unwrap();
        assert!(s.gap > 1e-4);
        assert!((s.lhs - s.lhs_transform_of_sum).abs() < 1e-12);
    }
}
