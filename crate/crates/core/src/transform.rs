//! COM-type (ν-power) transform: `P_ν(x) = P(x)^ν / Σ_j P(j)^ν`.
//!
//! The transform is computed in the log domain on the input window. Mass past the window
//! is accounted for in one of three ways:
//! * exactly, when the pmf carries a closed-form [`TailModel`](crate::pmf::TailModel);
//! * by `T^ν` for `ν ≥ 1`, since `Σ a_i^ν ≤ (Σ a_i)^ν`;
//! * by a geometric majorant from the last term ratios for `ν < 1`.
//!
//! Anything else is reported as non-existence rather than silently truncated.

use serde_json::json;

use crate::error::{Error, Result};
use crate::kernels::series::RATIO_RUN;
use crate::numeric::{compensated_sum, log_add_exp, log_sum_exp};
use crate::pmf::{PmfMeta, TruncatedPmf};

#[derive(Debug, Clone, PartialEq)]
pub struct ComTypeResult {
    pub pmf: TruncatedPmf,
    /// `ln C_{X_ν} = -ln Σ P(x)^ν`.
    pub log_norm_const: f64,
    pub nu: f64,
}

/// Certified `Σ_{x past window} P(x)^nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PowerTail {
    /// The omitted sum is known (zero for finite supports).
    Exact(f64),
    /// Only an upper bound is known; `ln` of the bound.
    Bound(f64),
}

/// `ln Σ_{x ∈ window} P(x)^nu` and the certified tail of the same sum.
pub(crate) fn power_sums(pmf: &TruncatedPmf, nu: f64) -> Result<(f64, PowerTail)> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("nu > 0 required (got {nu})")));
    }
    let ln_window = log_sum_exp(&pmf.probs().iter().map(|&p| nu * p.ln()).collect::<Vec<_>>());
    if !ln_window.is_finite() {
        return Err(Error::Existence("window carries no mass".into()));
    }
    let tail = power_tail(pmf, nu)?;
    Ok((ln_window, tail))
}

fn power_tail(pmf: &TruncatedPmf, nu: f64) -> Result<PowerTail> {
    if pmf.tail_bound() == 0.0 {
        return Ok(PowerTail::Exact(f64::NEG_INFINITY));
    }
    if let Some(model) = pmf.ln_model_power_tail(nu) {
        return model.map(PowerTail::Exact).ok_or_else(|| {
            Error::Existence(format!(
                "sum of P(x)^{nu} diverges for the attached power-law tail"
            ))
        });
    }
    if nu >= 1.0 {
        return Ok(PowerTail::Bound(nu * pmf.tail_bound().ln()));
    }
    ratio_certificate(pmf, nu).map(PowerTail::Bound)
}

/// `ln` of `P_K^ν ρ^ν / (1 - ρ^ν)` where `K` is the last positive mass and `ρ` the last term
/// ratio. The window must end in a run of non-increasing sub-unit ratios covering
/// `min(RATIO_RUN, K/2)` steps; later ratios are assumed to continue that run.
fn ratio_certificate(pmf: &TruncatedPmf, nu: f64) -> Result<f64> {
    let probs = pmf.probs();
    let last = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .ok_or_else(|| Error::Existence("window carries no mass".into()))?;
    let needed = RATIO_RUN.min(last / 2).max(1);
    if last < 2 {
        return Err(Error::Existence(format!(
            "cannot certify sum of P(x)^{nu}: window too short for a ratio test"
        )));
    }
    let ratio = |i: usize| probs[i] / probs[i - 1];
    let mut run = 0;
    let mut i = last;
    while i >= 1 && run < needed {
        let r = ratio(i);
        let ok = r.is_finite() && r < 1.0 - 1e-6 && (i == last || ratio(i + 1) <= r * (1.0 + 1e-9));
        if !ok {
            break;
        }
        run += 1;
        i -= 1;
    }
    if run < needed {
        return Err(Error::Existence(format!(
            "cannot certify sum of P(x)^{nu}: the window does not end in {needed} \
             non-increasing term ratios below one"
        )));
    }
    let rho_nu = ratio(last).powf(nu);
    Ok(nu * probs[last].ln() + (rho_nu / (1.0 - rho_nu)).ln())
}

pub fn com_type(pmf: &TruncatedPmf, nu: f64, tol: f64) -> Result<ComTypeResult> {
    let (ln_window, tail) = power_sums(pmf, nu)?;
    let (ln_norm_sum, tail_out) = match tail {
        PowerTail::Exact(ln_t) => {
            let ln_total = log_add_exp(ln_window, ln_t);
            (ln_total, (ln_t - ln_total).exp())
        }
        PowerTail::Bound(ln_b) => {
            // Share of the full sum that may lie past the window.
            let rel = (ln_b - log_add_exp(ln_window, ln_b)).exp();
            // A geometric tail of mass T leaves exactly T^ν after powering.
            let allowed = tol.max(pmf.tail_bound().powf(nu.min(1.0)));
            if rel > allowed {
                return Err(Error::Existence(format!(
                    "omitted mass of P(x)^{nu} may reach {rel:e} of the window sum, above {allowed:e}"
                )));
            }
            (ln_window, rel)
        }
    };
    let log_norm_const = -ln_norm_sum;
    let probs: Vec<f64> = pmf
        .probs()
        .iter()
        .map(|&p| (nu * p.ln() + log_norm_const).exp())
        .collect();

    let mut meta = PmfMeta::new(
        "com-type",
        json!({ "nu": nu, "base": { "family": pmf.meta().family, "params": pmf.meta().params } }),
        tol,
    );
    meta.seed = pmf.meta().seed;
    meta.extra.insert("transform".into(), json!("com-type"));
    meta.extra.insert("nu".into(), json!(nu));
    meta.extra
        .insert("log_norm_const".into(), json!(log_norm_const));

    let model = pmf.tail_model().map(|m| m.powered(nu, log_norm_const));
    let out = TruncatedPmf::new(pmf.support_start(), probs, tail_out, meta)?.with_tail_model(model);
    Ok(ComTypeResult {
        pmf: out,
        log_norm_const,
        nu,
    })
}

/// `E_ν f(X) = Σ f(x) P_{X_ν}(x)`.
pub fn com_expectation<F: Fn(u64) -> f64>(pmf: &TruncatedPmf, nu: f64, f: F) -> Result<f64> {
    let t = com_type(pmf, nu, crate::kernels::DEFAULT_TOL)?;
    Ok(compensated_sum(t.pmf.iter().map(|(x, p)| f(x) * p)))
}
