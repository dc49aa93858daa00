//! Parameter records with their domain invariants checked at construction.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} > 0 required (got {v})")))
    }
}

fn unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("0 < {name} < 1 required (got {v})")))
    }
}

/// `CMP(λ, ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmpParams {
    lambda: f64,
    nu: f64,
}

impl CmpParams {
    pub fn new(lambda: f64, nu: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        positive("nu", nu)?;
        Ok(Self { lambda, nu })
    }

    /// `CMP(μ^ν, ν)`, the ν-power transform of `Poisson(μ)`.
    pub fn from_mu(mu: f64, nu: f64) -> Result<Self> {
        positive("mu", mu)?;
        Self::new(mu.powf(nu), nu)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `μ = λ^{1/ν}`; the mode sits near this value.
    pub fn mu(&self) -> f64 {
        self.lambda.powf(1.0 / self.nu)
    }

    pub fn to_json(&self) -> Value {
        json!({ "lambda": self.lambda, "nu": self.nu })
    }
}

/// `CMB(m, p, ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmbParams {
    m: u64,
    p: f64,
    nu: f64,
}

impl CmbParams {
    pub fn new(m: u64, p: f64, nu: f64) -> Result<Self> {
        unit_open("p", p)?;
        positive("nu", nu)?;
        Ok(Self { m, p, nu })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn to_json(&self) -> Value {
        json!({ "m": self.m, "p": self.p, "nu": self.nu })
    }
}

/// `CMNB(r, ν, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmnbParams {
    r: f64,
    nu: f64,
    p: f64,
}

impl CmnbParams {
    /// The series `C(r, ν, p)` has term ratio `((r+k)/(k+1))^ν p → p < 1`, so `0 < p < 1`
    /// is exactly the convergence condition.
    pub fn new(r: f64, nu: f64, p: f64) -> Result<Self> {
        positive("r", r)?;
        positive("nu", nu)?;
        unit_open("p", p)?;
        Ok(Self { r, nu, p })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn to_json(&self) -> Value {
        json!({ "r": self.r, "nu": self.nu, "p": self.p })
    }
}

/// Extended COM-Poisson `ECOMP(r, θ, α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcompParams {
    r: f64,
    theta: f64,
    alpha: f64,
    beta: f64,
}

impl EcompParams {
    /// Parameter space `(r ≥ 0, θ > 0, α > β) ∪ (r > 0, 0 < θ < 1, α = β)`.
    ///
    /// With the series indexed from `k = 0`, `r = 0` is only meaningful when `β = 0`
    /// (`Γ(0)^β` is otherwise undefined), so that case is rejected as well.
    pub fn new(r: f64, theta: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(r.is_finite() && theta.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Domain("ECOMP parameters must be finite".into()));
        }
        let first = r >= 0.0 && theta > 0.0 && alpha > beta;
        let second = r > 0.0 && theta > 0.0 && theta < 1.0 && alpha == beta;
        if !(first || second) {
            return Err(Error::Divergence(format!(
                "ECOMP series diverges outside (r >= 0, theta > 0, alpha > beta) or \
                 (r > 0, 0 < theta < 1, alpha = beta); got r={r}, theta={theta}, alpha={alpha}, beta={beta}"
            )));
        }
        if r == 0.0 && beta != 0.0 {
            return Err(Error::Domain(
                "r = 0 requires beta = 0 (Gamma(0)^beta is undefined at k = 0)".into(),
            ));
        }
        Ok(Self {
            r,
            theta,
            alpha,
            beta,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn to_json(&self) -> Value {
        json!({ "r": self.r, "theta": self.theta, "alpha": self.alpha, "beta": self.beta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cmp_rejects_non_positive() {
        let e = CmpParams::new(-1.0, 2.0).unwrap_err();
        assert!(e.to_string().contains("lambda > 0"));
        assert!(CmpParams::new(1.0, 0.0).is_err());
        assert!(CmpParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn cmb_requires_open_unit_p() {
        assert!(CmbParams::new(3, 0.0, 1.0).is_err());
        assert!(CmbParams::new(3, 1.0, 1.0).is_err());
        assert!(CmbParams::new(0, 0.5, 1.0).is_ok());
    }

    #[test]
    fn ecomp_parameter_space() {
        assert!(EcompParams::new(2.0, 0.3, 1.0, 1.0).is_ok());
        assert!(EcompParams::new(2.0, 1.5, 1.0, 1.0).is_err());
        assert!(EcompParams::new(0.0, 1.5, 1.0, 1.0).is_err());
        assert!(EcompParams::new(1.0, 5.0, 2.0, 1.0).is_ok());
        assert!(EcompParams::new(0.0, 0.5, 1.0, 0.0).is_ok());
        assert!(matches!(
            EcompParams::new(0.0, 0.5, 2.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EcompParams::new(1.0, 0.5, 1.0, 2.0),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn mu_parameterization() {
        let p = CmpParams::from_mu(2.0, 3.0).unwrap();
        assert!((p.lambda() - 8.0).abs() < 1e-14);
        assert!((p.mu() - 2.0).abs() < 1e-14);
    }
}
