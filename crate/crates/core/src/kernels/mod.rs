//! Log-domain pmfs, normalizing constants, moments and inversion sampling.

pub mod families;
pub mod params;
pub mod sampling;
pub mod series;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::pmf::{PmfMeta, TruncatedPmf};

pub use families::{
    cmb_pmf, CmnbSeries, CmpSeries, EcompSeries, GeometricSeries, HyperPoissonSeries, LerchSeries,
    ZetaSeries,
};
pub use params::{CmbParams, CmnbParams, CmpParams, EcompParams};
pub use sampling::sample;
pub use series::{sum_series, SeriesSum, WeightSeries};

pub const DEFAULT_TOL: f64 = 1e-12;

/// `Z(λ, ν) = Σ λ^k / (k!)^ν`, kept in log form so extreme parameters stay representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub ln_value: f64,
    /// Certified upper bound on the omitted tail, relative to the value.
    pub rel_tail_bound: f64,
    pub terms_used: usize,
}

impl Normalizer {
    /// `Z`; overflows to `inf` for very large `λ^{1/ν}`, use `ln_value` there.
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    /// Absolute tail bound.
    pub fn tail_bound(&self) -> f64 {
        self.rel_tail_bound * self.value()
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol <= 1e-3 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "tol must lie in (0, 1e-3] (got {tol})"
        )))
    }
}

pub fn normalizer_series(params: &CmpParams, tol: f64) -> Result<Normalizer> {
    check_tol(tol)?;
    let series = CmpSeries(*params);
    let s = sum_series(&series, tol)?;
    Ok(Normalizer {
        ln_value: s.ln_total,
        rel_tail_bound: s.tail_rel,
        terms_used: s.terms(),
    })
}

/// `ln` of the leading large-λ term
/// `exp(ν λ^{1/ν}) / (λ^{(ν-1)/(2ν)} (2π)^{(ν-1)/2} √ν)`.
pub fn ln_normalizer_asymptotic(params: &CmpParams) -> f64 {
    let (lambda, nu) = (params.lambda(), params.nu());
    nu * params.mu()
        - (nu - 1.0) / (2.0 * nu) * lambda.ln()
        - (nu - 1.0) / 2.0 * (2.0 * PI).ln()
        - 0.5 * nu.ln()
}

pub fn normalizer_asymptotic(params: &CmpParams) -> Result<f64> {
    let ln = ln_normalizer_asymptotic(params);
    let v = ln.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!(
            "asymptotic normalizer exp({ln}) is not representable; use the log form"
        )))
    }
}

/// `|Z_asym / Z_series - 1|`, evaluated through logs.
pub fn asymptotic_relative_error(params: &CmpParams, tol: f64) -> Result<f64> {
    let series = normalizer_series(params, tol)?;
    Ok((ln_normalizer_asymptotic(params) - series.ln_value)
        .exp_m1()
        .abs())
}

fn series_pmf(series: &dyn WeightSeries, k_max: Option<u64>, tol: f64) -> Result<TruncatedPmf> {
    check_tol(tol)?;
    let s = sum_series(series, tol)?;
    s.to_pmf(
        series,
        k_max,
        PmfMeta::new(series.family(), series.params(), tol),
    )
}

/// CMP pmf on `0..=k_max`; the certified truncation window when `k_max` is `None`.
pub fn cmp_pmf(params: &CmpParams, k_max: Option<u64>, tol: f64) -> Result<TruncatedPmf> {
    series_pmf(&CmpSeries(*params), k_max, tol)
}

pub fn cmnb_pmf(params: &CmnbParams, tol: f64) -> Result<TruncatedPmf> {
    series_pmf(&CmnbSeries(*params), None, tol)
}

pub fn ecomp_pmf(params: &EcompParams, tol: f64) -> Result<TruncatedPmf> {
    series_pmf(&EcompSeries(*params), None, tol)
}

/// The generating series behind [`power_series_pmf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeriesSpec {
    /// `x^{-σ}`, `x ≥ 1`.
    Zeta { sigma: f64 },
    /// `ρ^i / (c+i)^ν`.
    Lerch { rho: f64, c: f64, nu: f64 },
    /// `(λ^x / (a+x)!)^ν`.
    HyperPoisson { a: f64, lambda: f64, nu: f64 },
}

impl SeriesSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SeriesSpec::Zeta { .. } => "zeta",
            SeriesSpec::Lerch { .. } => "lerch",
            SeriesSpec::HyperPoisson { .. } => "hyper-poisson",
        }
    }

    pub fn series(&self) -> Result<Box<dyn WeightSeries>> {
        Ok(match *self {
            SeriesSpec::Zeta { sigma } => Box::new(ZetaSeries::new(sigma)?),
            SeriesSpec::Lerch { rho, c, nu } => Box::new(LerchSeries::new(rho, c, nu)?),
            SeriesSpec::HyperPoisson { a, lambda, nu } => {
                Box::new(HyperPoissonSeries::new(a, lambda, nu)?)
            }
        })
    }
}

pub fn power_series_pmf(spec: &SeriesSpec, tol: f64) -> Result<TruncatedPmf> {
    let series = spec.series()?;
    series_pmf(series.as_ref(), None, tol)
}

/// Reference laws used throughout the checks.
pub fn poisson_pmf(lambda: f64, tol: f64) -> Result<TruncatedPmf> {
    let mut p = cmp_pmf(&CmpParams::new(lambda, 1.0)?, None, tol)?;
    p.meta.family = "poisson".into();
    p.meta.params = json!({ "lambda": lambda });
    Ok(p)
}

pub fn geometric_pmf(p: f64, tol: f64) -> Result<TruncatedPmf> {
    series_pmf(&GeometricSeries::new(p)?, None, tol)
}

/// `(mean, variance, mean_approx)` with `mean_approx = λ^{1/ν} - (ν-1)/(2ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmpMoments {
    pub mean: f64,
    pub variance: f64,
    pub mean_approx: f64,
}

pub fn cmp_moments(params: &CmpParams, tol: f64) -> Result<CmpMoments> {
    let pmf = cmp_pmf(params, None, tol)?;
    let nu = params.nu();
    Ok(CmpMoments {
        mean: pmf.mean(),
        variance: pmf.variance(),
        mean_approx: params.mu() - (nu - 1.0) / (2.0 * nu),
    })
}
