//! Weight series for every infinite-support family, plus the finite COM-binomial.

use serde_json::{json, Value};

use super::params::{CmbParams, CmnbParams, CmpParams, EcompParams};
use super::series::WeightSeries;
use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, ln_factorial, ln_gamma, ln_power_law_tail, log_sum_exp};
use crate::pmf::{PmfMeta, TailModel, TruncatedPmf};

/// `λ^k / (k!)^ν`.
#[derive(Debug, Clone, Copy)]
pub struct CmpSeries(pub CmpParams);

impl WeightSeries for CmpSeries {
    fn family(&self) -> &'static str {
        "cmp"
    }

    fn params(&self) -> Value {
        self.0.to_json()
    }

    fn log_weight(&self, k: u64) -> f64 {
        k as f64 * self.0.lambda().ln() - self.0.nu() * ln_factorial(k)
    }

    fn log_ratio(&self, k: u64) -> f64 {
        self.0.lambda().ln() - self.0.nu() * (k as f64).ln()
    }

    fn ratio_limit(&self) -> f64 {
        0.0
    }

    // λ/(k+1)^ν decreases in k, so one sub-unit ratio past the mode already gives a
    // rigorous geometric majorant.
    fn ratio_run(&self) -> usize {
        1
    }
}

/// `(Γ(r+k) / (k! Γ(r)))^ν p^k`.
#[derive(Debug, Clone, Copy)]
pub struct CmnbSeries(pub CmnbParams);

impl WeightSeries for CmnbSeries {
    fn family(&self) -> &'static str {
        "cmnb"
    }

    fn params(&self) -> Value {
        self.0.to_json()
    }

    fn log_weight(&self, k: u64) -> f64 {
        let p = &self.0;
        let ln_coef = ln_gamma(p.r() + k as f64) - ln_factorial(k) - ln_gamma(p.r());
        p.nu() * ln_coef + k as f64 * p.p().ln()
    }

    fn log_ratio(&self, k: u64) -> f64 {
        let p = &self.0;
        p.nu() * ((p.r() + k as f64 - 1.0) / k as f64).ln() + p.p().ln()
    }

    fn ratio_limit(&self) -> f64 {
        self.0.p()
    }
}

/// `Γ(r+k)^β θ^k / (k!)^α`, indexed from `k = 0`.
#[derive(Debug, Clone, Copy)]
pub struct EcompSeries(pub EcompParams);

impl WeightSeries for EcompSeries {
    fn family(&self) -> &'static str {
        "ecomp"
    }

    fn params(&self) -> Value {
        self.0.to_json()
    }

    fn log_weight(&self, k: u64) -> f64 {
        let p = &self.0;
        let gamma_term = if p.beta() == 0.0 {
            0.0
        } else {
            p.beta() * ln_gamma(p.r() + k as f64)
        };
        gamma_term + k as f64 * p.theta().ln() - p.alpha() * ln_factorial(k)
    }

    fn log_ratio(&self, k: u64) -> f64 {
        let p = &self.0;
        let gamma_term = if p.beta() == 0.0 {
            0.0
        } else {
            p.beta() * (p.r() + k as f64 - 1.0).ln()
        };
        gamma_term + p.theta().ln() - p.alpha() * (k as f64).ln()
    }

    fn ratio_limit(&self) -> f64 {
        let p = &self.0;
        if p.alpha() > p.beta() {
            0.0
        } else {
            p.theta()
        }
    }
}

/// Riemann zeta weights `x^{-σ}`, `x ≥ 1`.
#[derive(Debug, Clone, Copy)]
pub struct ZetaSeries {
    sigma: f64,
}

impl ZetaSeries {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 1.0 && sigma.is_finite()) {
            return Err(Error::Divergence(format!(
                "zeta weights need sigma > 1 (got {sigma})"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl WeightSeries for ZetaSeries {
    fn family(&self) -> &'static str {
        "zeta"
    }

    fn params(&self) -> Value {
        json!({ "sigma": self.sigma })
    }

    fn support_start(&self) -> u64 {
        1
    }

    fn log_weight(&self, k: u64) -> f64 {
        -self.sigma * (k as f64).ln()
    }

    fn ratio_limit(&self) -> f64 {
        1.0
    }

    fn ln_closed_tail(&self, from: u64) -> Option<f64> {
        ln_power_law_tail(self.sigma, from)
    }

    fn tail_model(&self, ln_total: f64) -> Option<TailModel> {
        Some(TailModel::PowerLaw {
            exponent: self.sigma,
            ln_scale: -ln_total,
        })
    }
}

/// Lerch-type weights `ρ^i / (c+i)^ν`; `ν = 1` is the Lerch distribution, general `ν` its
/// COM-type.
#[derive(Debug, Clone, Copy)]
pub struct LerchSeries {
    rho: f64,
    c: f64,
    nu: f64,
}

impl LerchSeries {
    pub fn new(rho: f64, c: f64, nu: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Divergence(format!(
                "Lerch weights need 0 < rho < 1 (got {rho})"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("c > 0 required (got {c})")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!("nu > 0 required (got {nu})")));
        }
        Ok(Self { rho, c, nu })
    }
}

impl WeightSeries for LerchSeries {
    fn family(&self) -> &'static str {
        "lerch"
    }

    fn params(&self) -> Value {
        json!({ "rho": self.rho, "c": self.c, "nu": self.nu })
    }

    fn log_weight(&self, k: u64) -> f64 {
        k as f64 * self.rho.ln() - self.nu * (self.c + k as f64).ln()
    }

    fn ratio_limit(&self) -> f64 {
        self.rho
    }
}

/// COM-hyper-Poisson (shifted COM-Poisson) weights `(λ^x / Γ(a+x+1))^ν`.
#[derive(Debug, Clone, Copy)]
pub struct HyperPoissonSeries {
    a: f64,
    lambda: f64,
    nu: f64,
}

impl HyperPoissonSeries {
    pub fn new(a: f64, lambda: f64, nu: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("a >= 0 required (got {a})")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda > 0 required (got {lambda})")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!("nu > 0 required (got {nu})")));
        }
        Ok(Self { a, lambda, nu })
    }
}

impl WeightSeries for HyperPoissonSeries {
    fn family(&self) -> &'static str {
        "hyper-poisson"
    }

    fn params(&self) -> Value {
        json!({ "a": self.a, "lambda": self.lambda, "nu": self.nu })
    }

    fn log_weight(&self, k: u64) -> f64 {
        self.nu * (k as f64 * self.lambda.ln() - ln_gamma(self.a + k as f64 + 1.0))
    }

    fn ratio_limit(&self) -> f64 {
        0.0
    }
}

/// Geometric `p (1-p)^x`, `x ≥ 0`; used as the standard non-CMP test law.
#[derive(Debug, Clone, Copy)]
pub struct GeometricSeries {
    p: f64,
}

impl GeometricSeries {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("0 < p < 1 required (got {p})")));
        }
        Ok(Self { p })
    }
}

impl WeightSeries for GeometricSeries {
    fn family(&self) -> &'static str {
        "geometric"
    }

    fn params(&self) -> Value {
        json!({ "p": self.p })
    }

    fn log_weight(&self, k: u64) -> f64 {
        k as f64 * (1.0 - self.p).ln()
    }

    fn log_ratio(&self, _k: u64) -> f64 {
        (1.0 - self.p).ln()
    }

    fn ratio_limit(&self) -> f64 {
        1.0 - self.p
    }

    fn ratio_run(&self) -> usize {
        1
    }
}

/// COM-binomial pmf on `0..=m`, normalizer `N(m, p, ν)` taken in the log domain.
pub fn cmb_pmf(params: &CmbParams) -> TruncatedPmf {
    let (m, p, nu) = (params.m(), params.p(), params.nu());
    let lws: Vec<f64> = (0..=m)
        .map(|k| nu * ln_binomial(m, k) + k as f64 * p.ln() + (m - k) as f64 * (1.0 - p).ln())
        .collect();
    let ln_n = log_sum_exp(&lws);
    let probs = lws.iter().map(|lw| (lw - ln_n).exp()).collect();
    let mut meta = PmfMeta::new("cmb", params.to_json(), 0.0);
    meta.extra.insert("ln_normalizer".into(), ln_n.into());
    TruncatedPmf {
        support_start: 0,
        probs,
        tail_bound: 0.0,
        meta,
        tail_model: None,
    }
}
