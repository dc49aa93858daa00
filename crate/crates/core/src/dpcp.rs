//! Pseudo compound Poisson representation `G(z) = exp(Σ λ̃ α_k (z^k - 1))`: pgf evaluation
//! and zero screening, Panjer-type recovery and reconstruction, and compound sampling.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::kernels::sampling::{split_rng, InverseCdf};
use crate::kernels::{poisson_pmf, DEFAULT_TOL};
use crate::numeric::compensated_sum;
use crate::pmf::{PmfMeta, TruncatedPmf};

/// `Σ P_n z^n` over the window (Horner).
pub fn pgf_eval(pmf: &TruncatedPmf, z: Complex64) -> Result<Complex64> {
    if z.norm() > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!(
            "|z| <= 1 required (got {})",
            z.norm()
        )));
    }
    let poly = pmf
        .probs()
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &p| acc * z + p);
    Ok(poly * z.powu(pmf.support_start() as u32))
}

/// Minimum of `|G|` over the polar grid `r_i = i / radial`, `θ_j = 2πj / angular`.
/// A screening statistic only: a small value flags a possible zero, a large one is not a proof.
pub fn pgf_min_modulus(
    pmf: &TruncatedPmf,
    radial: usize,
    angular: usize,
) -> Result<(f64, Complex64)> {
    if radial < 64 || angular < 64 {
        return Err(Error::Precondition(format!(
            "at least 64 radial and angular steps required (got {radial} x {angular})"
        )));
    }
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
    for i in 0..=radial {
        let r = i as f64 / radial as f64;
        for j in 0..angular {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / angular as f64);
            let m = pgf_eval(pmf, z)?.norm();
            if m < best.0 {
                best = (m, z);
            }
            if i == 0 {
                break;
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpcpParams {
    pub lambda_tilde: f64,
    /// `α_1 ..= α_N`.
    pub alphas: Vec<f64>,
    pub source: String,
}

impl DpcpParams {
    pub fn alpha_sum(&self) -> f64 {
        compensated_sum(self.alphas.iter().copied())
    }

    pub fn negative_count(&self) -> usize {
        self.alphas.iter().filter(|&&a| a < 0.0).count()
    }

    /// 1-based index `k` of the first negative `α_k`.
    pub fn first_negative_index(&self) -> Option<usize> {
        self.alphas.iter().position(|&a| a < 0.0).map(|i| i + 1)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "lambda_tilde": self.lambda_tilde,
            "alphas": self.alphas,
            "alpha_sum": self.alpha_sum(),
            "sign_summary": {
                "negative_count": self.negative_count(),
                "first_negative_index": self.first_negative_index(),
            },
            "source": self.source,
        })
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<Self> {
        let lambda_tilde = doc["lambda_tilde"]
            .as_f64()
            .ok_or_else(|| Error::Parse("lambda_tilde missing".into()))?;
        let alphas = doc["alphas"]
            .as_array()
            .ok_or_else(|| Error::Parse("alphas missing".into()))?
            .iter()
            .map(|a| {
                a.as_f64()
                    .ok_or_else(|| Error::Parse("alphas must be numbers".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let source = doc["source"].as_str().unwrap_or("input").to_string();
        Self::new(lambda_tilde, alphas, source)
    }

    pub fn new(lambda_tilde: f64, alphas: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if !(lambda_tilde > 0.0 && lambda_tilde.is_finite()) {
            return Err(Error::Domain(format!(
                "lambda_tilde > 0 required (got {lambda_tilde})"
            )));
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("alphas must be finite".into()));
        }
        Ok(Self {
            lambda_tilde,
            alphas,
            source: source.into(),
        })
    }

    /// `exp(Σ λ̃ α_k (z^k - 1))` with the stored (finite) weight vector.
    pub fn pgf(&self, z: Complex64) -> Complex64 {
        let mut zk = Complex64::new(1.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        for a in &self.alphas {
            zk *= z;
            s += self.lambda_tilde * a * (zk - 1.0);
        }
        s.exp()
    }
}

/// Solves `P_{n+1} = λ̃/(n+1) Σ_{j=1}^{n+1} j α_j P_{n+1-j}` for `α_1 ..= α_{n_terms}`,
/// with `λ̃ = -ln P_0`.
pub fn dpcp_recover(pmf: &TruncatedPmf, n_terms: usize) -> Result<DpcpParams> {
    let p0 = pmf.prob(0);
    if p0 <= 0.0 {
        return Err(Error::ZeroMassAtOrigin);
    }
    let lambda_tilde = -p0.ln();
    if lambda_tilde <= 0.0 {
        return Err(Error::Domain(
            "P(X=0) = 1: degenerate law has no compound representation".into(),
        ));
    }
    let mut alphas: Vec<f64> = Vec::with_capacity(n_terms);
    for m in 1..=n_terms {
        let known =
            compensated_sum((1..m).map(|j| j as f64 * alphas[j - 1] * pmf.prob((m - j) as u64)));
        let alpha = (m as f64 * pmf.prob(m as u64) / lambda_tilde - known) / (m as f64 * p0);
        alphas.push(alpha);
    }
    DpcpParams::new(
        lambda_tilde,
        alphas,
        format!("recovered from {} ({} terms)", pmf.meta().family, n_terms),
    )
}

/// Forward recursion from `P_0 = e^{-λ̃}` to `P_{n_max}`. Truncated pseudo parameters can
/// produce small negative masses; they are kept as computed, and `|1 - Σ P|` is the tail bound.
pub fn dpcp_reconstruct(params: &DpcpParams, n_max: usize) -> TruncatedPmf {
    let lt = params.lambda_tilde;
    let alpha = |j: usize| params.alphas.get(j - 1).copied().unwrap_or(0.0);
    let mut probs = Vec::with_capacity(n_max + 1);
    probs.push((-lt).exp());
    for m in 1..=n_max {
        let s = compensated_sum((1..=m).map(|j| j as f64 * alpha(j) * probs[m - j]));
        probs.push(lt / m as f64 * s);
    }
    let total = compensated_sum(probs.iter().copied());
    let meta = PmfMeta::new(
        "dpcp",
        json!({ "lambda_tilde": lt, "alphas": params.alphas }),
        0.0,
    );
    TruncatedPmf {
        support_start: 0,
        probs,
        tail_bound: (1.0 - total).abs(),
        meta,
        tail_model: None,
    }
}

/// `X = Y_1 + … + Y_N`, `N ~ Poisson(λ̃)`, `P(Y = k) = α_k`. Only for genuine (non-negative)
/// weights.
pub fn dcp_sample(params: &DpcpParams, n: usize, seed: u64) -> Result<Vec<u64>> {
    if let Some(k) = params.first_negative_index() {
        return Err(Error::PseudoParameters(format!(
            "alpha_{k} = {} is negative",
            params.alphas[k - 1]
        )));
    }
    let sum = params.alpha_sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "alphas must sum to 1 within 1e-9 (got {sum})"
        )));
    }
    let counts = InverseCdf::new(&poisson_pmf(params.lambda_tilde, DEFAULT_TOL)?)?;
    let jumps = InverseCdf::new(&TruncatedPmf::from_weights(
        1,
        &params.alphas,
        PmfMeta::new("jump", serde_json::Value::Null, 0.0),
    )?)?;
    let mut count_rng = split_rng(seed, 0);
    let mut jump_rng = split_rng(seed, 1);
    Ok((0..n)
        .map(|_| {
            let k = counts.draw(&mut count_rng);
            (0..k).map(|_| jumps.draw(&mut jump_rng)).sum()
        })
        .collect())
}
