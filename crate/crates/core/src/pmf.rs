//! `TruncatedPmf`: a finite probability window with a certified bound on the mass it omits.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, ln_power_law_tail};

/// Where a pmf came from. Serialized into the pmf document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfMeta {
    pub family: String,
    pub params: Value,
    pub tol: f64,
    pub seed: Option<u64>,
    /// Free-form provenance (transform records, fitted values, ...).
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

impl PmfMeta {
    pub fn new(family: impl Into<String>, params: Value, tol: f64) -> Self {
        Self {
            family: family.into(),
            params,
            tol,
            seed: None,
            extra: Map::new(),
        }
    }
}

/// Closed-form description of the masses beyond the stored window, for families whose
/// tails decay too slowly for a geometric certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `P(x) = exp(ln_scale - exponent * ln x)` for every `x` past the window.
    PowerLaw { exponent: f64, ln_scale: f64 },
}

impl TailModel {
    /// `ln Σ_{x ≥ start} P(x)^nu`, or `None` if that sum diverges.
    pub fn ln_power_tail(&self, nu: f64, start: u64) -> Option<f64> {
        match *self {
            TailModel::PowerLaw { exponent, ln_scale } => {
                ln_power_law_tail(nu * exponent, start.max(1)).map(|t| nu * ln_scale + t)
            }
        }
    }

    /// The model of `C · P(x)^nu`.
    pub fn powered(&self, nu: f64, ln_c: f64) -> TailModel {
        match *self {
            TailModel::PowerLaw { exponent, ln_scale } => TailModel::PowerLaw {
                exponent: nu * exponent,
                ln_scale: nu * ln_scale + ln_c,
            },
        }
    }
}

/// Normalized finite probability vector on `support_start ..= support_start + probs.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedPmf {
    pub(crate) support_start: u64,
    pub(crate) probs: Vec<f64>,
    pub(crate) tail_bound: f64,
    pub(crate) meta: PmfMeta,
    pub(crate) tail_model: Option<TailModel>,
}

impl TruncatedPmf {
    /// Builds a pmf, rejecting negative or non-finite masses.
    pub fn new(
        support_start: u64,
        probs: Vec<f64>,
        tail_bound: f64,
        meta: PmfMeta,
    ) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("pmf window is empty".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::Domain(format!(
                "mass at {} is {p}; masses must be finite and non-negative",
                support_start + i as u64
            )));
        }
        if !(tail_bound.is_finite() && tail_bound >= 0.0) {
            return Err(Error::Domain(format!(
                "tail bound {tail_bound} must be finite and >= 0"
            )));
        }
        Ok(Self {
            support_start,
            probs,
            tail_bound,
            meta,
            tail_model: None,
        })
    }

    pub fn point_mass(at: u64) -> Self {
        Self {
            support_start: at,
            probs: vec![1.0],
            tail_bound: 0.0,
            meta: PmfMeta::new("point-mass", json!({ "at": at }), 0.0),
            tail_model: None,
        }
    }

    /// Normalizes non-negative weights on a finite support; the result has no tail.
    pub fn from_weights(support_start: u64, weights: &[f64], meta: PmfMeta) -> Result<Self> {
        let total = compensated_sum(weights.iter().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Domain(
                "weights must have a positive finite sum".into(),
            ));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        Self::new(support_start, probs, 0.0, meta)
    }

    pub(crate) fn with_tail_model(mut self, model: Option<TailModel>) -> Self {
        self.tail_model = model;
        self
    }

    pub fn support_start(&self) -> u64 {
        self.support_start
    }

    /// Last index stored in the window.
    pub fn support_end(&self) -> u64 {
        self.support_start + self.probs.len() as u64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn meta(&self) -> &PmfMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut PmfMeta {
        &mut self.meta
    }

    pub fn tail_model(&self) -> Option<&TailModel> {
        self.tail_model.as_ref()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `P(X = k)`, zero outside the window.
    pub fn prob(&self, k: u64) -> f64 {
        if k < self.support_start {
            return 0.0;
        }
        self.probs
            .get((k - self.support_start) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// `(k, P(X = k))` over the window.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let start = self.support_start;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (start + i as u64, p))
    }

    pub fn window_mass(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }

    /// `|window mass + tail bound - 1|`.
    pub fn normalization_error(&self) -> f64 {
        (self.window_mass() + self.tail_bound - 1.0).abs()
    }

    pub fn expectation<F: Fn(u64) -> f64>(&self, f: F) -> f64 {
        compensated_sum(self.iter().map(|(k, p)| f(k) * p))
    }

    pub fn mean(&self) -> f64 {
        self.expectation(|k| k as f64)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expectation(|k| (k as f64 - m).powi(2))
    }

    /// Same masses moved right by `by`.
    pub fn shifted(&self, by: u64) -> Self {
        let mut out = self.clone();
        out.support_start += by;
        out.tail_model = None;
        out.meta.extra.insert("shift".into(), json!(by));
        out
    }

    /// Window cut at the first index where cumulative mass reaches `1 - tol`; the dropped
    /// mass moves into the tail bound.
    pub fn trimmed(&self, tol: f64) -> Self {
        let mut cum = 0.0;
        let mut end = self.probs.len();
        for (i, p) in self.probs.iter().enumerate() {
            cum += p;
            if cum >= 1.0 - tol {
                end = i + 1;
                break;
            }
        }
        let dropped = compensated_sum(self.probs[end..].iter().copied());
        let mut out = self.clone();
        out.probs.truncate(end);
        out.tail_bound += dropped;
        out.tail_model = None;
        out
    }

    /// Window cut after index `end` (no-op if the window already ends there); the dropped
    /// mass moves into the tail bound.
    pub fn truncated_to(&self, end: u64) -> Self {
        if end >= self.support_end() || end < self.support_start {
            return self.clone();
        }
        let keep = (end - self.support_start + 1) as usize;
        let dropped = compensated_sum(self.probs[keep..].iter().copied());
        let mut out = self.clone();
        out.probs.truncate(keep);
        out.tail_bound += dropped;
        out.tail_model = None;
        out
    }

    /// `ln Σ_{x > window} P(x)^nu` from the tail model, if one is attached.
    pub(crate) fn ln_model_power_tail(&self, nu: f64) -> Option<Option<f64>> {
        self.tail_model
            .map(|m| m.ln_power_tail(nu, self.support_end() + 1))
    }

    /// pmf document in the interchange schema.
    pub fn to_json(&self) -> Value {
        let mut doc = json!({
            "family": self.meta.family,
            "params": self.meta.params,
            "support_start": self.support_start,
            "probs": self.probs,
            "tail_bound": self.tail_bound,
            "tol": self.meta.tol,
            "seed": self.meta.seed,
        });
        if !self.meta.extra.is_empty() {
            doc["meta"] = Value::Object(self.meta.extra.clone());
        }
        doc
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let d: PmfDocument =
            serde_json::from_value(doc.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let meta = PmfMeta {
            family: d.family,
            params: d.params,
            tol: d.tol,
            seed: d.seed,
            extra: d.meta.unwrap_or_default(),
        };
        Self::new(d.support_start, d.probs, d.tail_bound, meta)
    }

    /// `k,prob` rows preceded by a `#` comment line carrying the family and params.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# family={} params={} tail_bound={:e} tol={:e}\nk,prob\n",
            self.meta.family, self.meta.params, self.tail_bound, self.meta.tol
        );
        for (k, p) in self.iter() {
            out.push_str(&format!("{k},{p:e}\n"));
        }
        out
    }
}

#[derive(Debug, Deserialize)]
struct PmfDocument {
    #[serde(default = "unknown_family")]
    family: String,
    #[serde(default)]
    params: Value,
    support_start: u64,
    probs: Vec<f64>,
    #[serde(default)]
    tail_bound: f64,
    #[serde(default)]
    tol: f64,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    meta: Option<Map<String, Value>>,
}

fn unknown_family() -> String {
    "unknown".into()
}
