//! Named pmf families, looked up at runtime from string parameters (CLI, pmf files).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kernels::{
    cmb_pmf, cmnb_pmf, cmp_pmf, ecomp_pmf, geometric_pmf, poisson_pmf, power_series_pmf, CmbParams,
    CmnbParams, CmpParams, EcompParams, SeriesSpec, DEFAULT_TOL,
};
use crate::pmf::TruncatedPmf;

/// Numeric arguments for a family, keyed by parameter name.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyArgs {
    pub values: BTreeMap<String, f64>,
    pub k_max: Option<u64>,
    pub tol: f64,
}

impl Default for FamilyArgs {
    fn default() -> Self {
        Self {
            values: BTreeMap::new(),
            k_max: None,
            tol: DEFAULT_TOL,
        }
    }
}

impl FamilyArgs {
    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| Error::Parse(format!("missing parameter --{name}")))
    }

    fn count(&self, name: &str) -> Result<u64> {
        let v = self.get(name)?;
        if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
            Ok(v as u64)
        } else {
            Err(Error::Domain(format!(
                "{name} must be a non-negative integer (got {v})"
            )))
        }
    }
}

pub trait Family: Send + Sync {
    fn name(&self) -> &'static str;
    fn params(&self) -> &'static [&'static str];
    fn build(&self, args: &FamilyArgs) -> Result<TruncatedPmf>;
}

struct Cmp;
struct Cmb;
struct Cmnb;
struct Ecomp;
struct Zeta;
struct Lerch;
struct HyperPoisson;
struct Poisson;
struct Geometric;

impl Family for Cmp {
    fn name(&self) -> &'static str {
        "cmp"
    }
    fn params(&self) -> &'static [&'static str] {
        &["lambda", "nu"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        cmp_pmf(
            &CmpParams::new(a.get("lambda")?, a.get("nu")?)?,
            a.k_max,
            a.tol,
        )
    }
}

impl Family for Cmb {
    fn name(&self) -> &'static str {
        "cmb"
    }
    fn params(&self) -> &'static [&'static str] {
        &["m", "p", "nu"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        Ok(cmb_pmf(&CmbParams::new(
            a.count("m")?,
            a.get("p")?,
            a.get("nu")?,
        )?))
    }
}

impl Family for Cmnb {
    fn name(&self) -> &'static str {
        "cmnb"
    }
    fn params(&self) -> &'static [&'static str] {
        &["r", "nu", "p"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        cmnb_pmf(
            &CmnbParams::new(a.get("r")?, a.get("nu")?, a.get("p")?)?,
            a.tol,
        )
    }
}

impl Family for Ecomp {
    fn name(&self) -> &'static str {
        "ecomp"
    }
    fn params(&self) -> &'static [&'static str] {
        &["r", "theta", "alpha", "beta"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        let p = EcompParams::new(
            a.get("r")?,
            a.get("theta")?,
            a.get("alpha")?,
            a.get("beta")?,
        )?;
        ecomp_pmf(&p, a.tol)
    }
}

impl Family for Zeta {
    fn name(&self) -> &'static str {
        "zeta"
    }
    fn params(&self) -> &'static [&'static str] {
        &["sigma"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        power_series_pmf(
            &SeriesSpec::Zeta {
                sigma: a.get("sigma")?,
            },
            a.tol,
        )
    }
}

impl Family for Lerch {
    fn name(&self) -> &'static str {
        "lerch"
    }
    fn params(&self) -> &'static [&'static str] {
        &["rho", "c", "nu"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        let spec = SeriesSpec::Lerch {
            rho: a.get("rho")?,
            c: a.get("c")?,
            nu: a.get("nu")?,
        };
        power_series_pmf(&spec, a.tol)
    }
}

impl Family for HyperPoisson {
    fn name(&self) -> &'static str {
        "hyper-poisson"
    }
    fn params(&self) -> &'static [&'static str] {
        &["a", "lambda", "nu"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        let spec = SeriesSpec::HyperPoisson {
            a: a.get("a")?,
            lambda: a.get("lambda")?,
            nu: a.get("nu")?,
        };
        power_series_pmf(&spec, a.tol)
    }
}

impl Family for Poisson {
    fn name(&self) -> &'static str {
        "poisson"
    }
    fn params(&self) -> &'static [&'static str] {
        &["lambda"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        poisson_pmf(a.get("lambda")?, a.tol)
    }
}

impl Family for Geometric {
    fn name(&self) -> &'static str {
        "geometric"
    }
    fn params(&self) -> &'static [&'static str] {
        &["p"]
    }
    fn build(&self, a: &FamilyArgs) -> Result<TruncatedPmf> {
        geometric_pmf(a.get("p")?, a.tol)
    }
}

pub struct FamilyRegistry {
    families: BTreeMap<&'static str, Box<dyn Family>>,
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self {
            families: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Cmp));
        r.register(Box::new(Cmb));
        r.register(Box::new(Cmnb));
        r.register(Box::new(Ecomp));
        r.register(Box::new(Zeta));
        r.register(Box::new(Lerch));
        r.register(Box::new(HyperPoisson));
        r.register(Box::new(Poisson));
        r.register(Box::new(Geometric));
        r
    }

    /// Adds or replaces a family under its own name.
    pub fn register(&mut self, family: Box<dyn Family>) {
        self.families.insert(family.name(), family);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Family> {
        self.families.get(name).map(|f| f.as_ref()).ok_or_else(|| {
            Error::Parse(format!(
                "unknown family '{name}' (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }

    pub fn build(&self, name: &str, args: &FamilyArgs) -> Result<TruncatedPmf> {
        self.get(name)?.build(args)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_by_name() {
        let r = FamilyRegistry::builtin();
        let p = r
            .build(
                "cmp",
                &FamilyArgs::default().with("lambda", 1.0).with("nu", 2.0),
            )
            .unwrap();
        assert!((p.probs()[0] - 0.438_676_279_837_048_8).abs() < 1e-12);
    }

    #[test]
    fn unknown_and_missing() {
        let r = FamilyRegistry::builtin();
        assert!(matches!(
            r.build("nope", &FamilyArgs::default()),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            r.build("cmp", &FamilyArgs::default()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn non_integer_trials_rejected() {
        let args = FamilyArgs::default()
            .with("m", 2.5)
            .with("p", 0.5)
            .with("nu", 1.0);
        assert!(matches!(
            FamilyRegistry::builtin().build("cmb", &args),
            Err(Error::Domain(_))
        ));
    }
}
