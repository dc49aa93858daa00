//! Self-checks of every characterization, registered by name and run by `verify`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::characterizations::{
    a_sequence, closure_test, conditional_given_sum, limit_cmb_to_cmp, limit_cmnb_to_cmp,
    rao_rubin_gap, stein_residual, LimitCurve,
};
use crate::dpcp::{dpcp_reconstruct, dpcp_recover, pgf_min_modulus};
use crate::error::Result;
use crate::information::{renyi_entropy, score_and_fisher, stam_gap, tsallis_entropy};
use crate::kernels::sampling::rng_for;
use crate::kernels::{
    cmb_pmf, cmp_moments, cmp_pmf, geometric_pmf, normalizer_series, poisson_pmf, power_series_pmf,
    CmbParams, CmpParams, SeriesSpec, DEFAULT_TOL,
};
use crate::pmf::{PmfMeta, TruncatedPmf};
use crate::queue::{queue_exact_steady_state, queue_simulate, QueueConfig};
use crate::transform::com_type;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub pass: bool,
    pub statistic: f64,
    pub tolerance: f64,
    pub params: Value,
}

impl CheckOutcome {
    /// Passes when `statistic < tolerance`.
    pub fn below(check: &str, statistic: f64, tolerance: f64, params: Value) -> Self {
        Self {
            check: check.into(),
            pass: statistic < tolerance,
            statistic,
            tolerance,
            params: tag(params, "<"),
        }
    }

    /// Passes when `statistic > tolerance`.
    pub fn above(check: &str, statistic: f64, tolerance: f64, params: Value) -> Self {
        Self {
            check: check.into(),
            pass: statistic > tolerance,
            statistic,
            tolerance,
            params: tag(params, ">"),
        }
    }

    fn failed(check: &str, err: &crate::Error) -> Self {
        Self {
            check: check.into(),
            pass: false,
            statistic: f64::NAN,
            tolerance: f64::NAN,
            params: json!({ "error": err.name(), "message": err.to_string() }),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "check": self.check,
            "pass": self.pass,
            "statistic": self.statistic,
            "tolerance": self.tolerance,
            "params": self.params,
        })
    }
}

fn tag(mut params: Value, relation: &str) -> Value {
    if let Value::Object(m) = &mut params {
        m.insert("relation".into(), json!(relation));
    }
    params
}

pub struct CheckContext {
    pub seed: u64,
}

pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckOutcome>>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub overall: bool,
    pub version: String,
    pub seed: u64,
}

impl VerifyReport {
    pub fn to_json(&self) -> Value {
        json!({
            "checks": self.checks.iter().map(CheckOutcome::to_json).collect::<Vec<_>>(),
            "overall": self.overall,
            "version": self.version,
            "seed": self.seed,
        })
    }
}

pub struct CheckRegistry {
    checks: BTreeMap<&'static str, Box<dyn Check>>,
    order: Vec<&'static str>,
}

impl CheckRegistry {
    pub fn empty() -> Self {
        Self {
            checks: BTreeMap::new(),
            order: Vec::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(NormalizerCheck));
        r.register(Box::new(RecurrenceCheck));
        r.register(Box::new(ConditionalCheck));
        r.register(Box::new(RaoRubinCheck));
        r.register(Box::new(StamCheck));
        r.register(Box::new(ClosureCheck));
        r.register(Box::new(SteinCheck));
        r.register(Box::new(DpcpCheck));
        r.register(Box::new(LimitCheck));
        r.register(Box::new(QueueCheck));
        r.register(Box::new(EntropyCheck));
        r.register(Box::new(MeanApproxCheck));
        r
    }

    pub fn register(&mut self, check: Box<dyn Check>) {
        let name = check.name();
        if self.checks.insert(name, check).is_none() {
            self.order.push(name);
        }
    }

    pub fn names(&self) -> &[&'static str] {
        &self.order
    }

    pub fn contains(&self, name: &str) -> bool {
        self.checks.contains_key(name)
    }

    /// Runs the named checks (all when `names` is empty) in registration order.
    pub fn run(&self, names: &[&str], seed: u64) -> VerifyReport {
        let ctx = CheckContext { seed };
        let mut checks = Vec::new();
        for name in &self.order {
            if !names.is_empty() && !names.contains(name) {
                continue;
            }
            match self.checks[name].run(&ctx) {
                Ok(out) => checks.extend(out),
                Err(e) => checks.push(CheckOutcome::failed(name, &e)),
            }
        }
        VerifyReport {
            overall: !checks.is_empty() && checks.iter().all(|c| c.pass),
            checks,
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
        }
    }
}

fn cmp(lambda: f64, nu: f64) -> Result<TruncatedPmf> {
    cmp_pmf(&CmpParams::new(lambda, nu)?, None, DEFAULT_TOL)
}

fn max_abs_diff(a: &TruncatedPmf, b: &TruncatedPmf, upto: u64) -> f64 {
    (0..=upto)
        .map(|k| (a.prob(k) - b.prob(k)).abs())
        .fold(0.0, f64::max)
}

struct NormalizerCheck;

impl Check for NormalizerCheck {
    fn name(&self) -> &'static str {
        "normalizer"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        // Σ_{i ≤ 200} 1/(i!)² by running products.
        let mut term = 1.0;
        let mut brute = 1.0;
        for i in 1..=200 {
            term /= (i * i) as f64;
            brute += term;
        }
        let z = normalizer_series(&CmpParams::new(1.0, 2.0)?, DEFAULT_TOL)?.value();
        let mut out = vec![CheckOutcome::below(
            "normalizer",
            (z - brute).abs(),
            1e-10,
            json!({ "lambda": 1.0, "nu": 2.0 }),
        )];
        let mut worst: f64 = 0.0;
        for lambda in [0.5, 2.0, 10.0] {
            let z = normalizer_series(&CmpParams::new(lambda, 1.0)?, DEFAULT_TOL)?;
            worst = worst.max((z.value() / f64::exp(lambda) - 1.0).abs());
        }
        out.push(CheckOutcome::below(
            "normalizer",
            worst,
            1e-12,
            json!({ "lambda": [0.5, 2.0, 10.0], "nu": 1.0, "error": "relative" }),
        ));
        Ok(out)
    }
}

struct RecurrenceCheck;

impl Check for RecurrenceCheck {
    fn name(&self) -> &'static str {
        "recurrence"
    }

    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut rng = rng_for(ctx.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let lambda = rng.random_range(0.1..10.0);
            let nu = rng.random_range(0.2..5.0);
            let p = cmp(lambda, nu)?;
            for k in 1..=p.support_end() {
                let prev = p.prob(k - 1);
                if prev > 1e-280 {
                    let r = (p.prob(k) * (k as f64).powf(nu) - lambda * prev).abs() / prev;
                    worst = worst.max(r);
                }
            }
        }
        Ok(vec![CheckOutcome::below(
            "recurrence",
            worst,
            1e-12,
            json!({ "pairs": 20, "lambda_range": [0.1, 10.0], "nu_range": [0.2, 5.0] }),
        )])
    }
}

const GRID: [f64; 3] = [0.5, 1.0, 3.0];

struct ConditionalCheck;

impl Check for ConditionalCheck {
    fn name(&self) -> &'static str {
        "conditional"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut worst: f64 = 0.0;
        for l1 in GRID {
            for l2 in GRID {
                for nu in [0.5, 1.0, 2.0] {
                    let (x, y) = (cmp(l1, nu)?, cmp(l2, nu)?);
                    for s in 0..=15u64 {
                        let c = conditional_given_sum(&x, &y, s)?;
                        let b = cmb_pmf(&CmbParams::new(s, l1 / (l1 + l2), nu)?);
                        for (u, v) in c.iter().zip(b.probs()) {
                            worst = worst.max((u - v).abs());
                        }
                    }
                }
            }
        }
        Ok(vec![CheckOutcome::below(
            "conditional",
            worst,
            1e-12,
            json!({ "lambdas": GRID, "nu": [0.5, 1.0, 2.0], "s_max": 15 }),
        )])
    }
}

struct RaoRubinCheck;

impl Check for RaoRubinCheck {
    fn name(&self) -> &'static str {
        "rao-rubin"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut out = Vec::new();
        for nu in [0.5, 1.0, 2.0] {
            let mut worst: f64 = 0.0;
            for theta in GRID {
                let x = cmp(theta, nu)?;
                for p in [0.25, 0.5, 0.75] {
                    worst = worst.max(rao_rubin_gap(&x, p, nu)?.max_gap);
                }
            }
            out.push(CheckOutcome::below(
                "rao-rubin",
                worst,
                1e-10,
                json!({ "input": "cmp", "theta": GRID, "nu": nu, "p": [0.25, 0.5, 0.75] }),
            ));
        }
        let g = rao_rubin_gap(&geometric_pmf(0.5, DEFAULT_TOL)?, 0.5, 1.0)?;
        out.push(CheckOutcome::above(
            "rao-rubin",
            g.max_gap,
            1e-3,
            json!({ "input": "geometric", "q": 0.5, "nu": 1.0, "p": 0.5 }),
        ));
        Ok(out)
    }
}

struct StamCheck;

impl Check for StamCheck {
    fn name(&self) -> &'static str {
        "stam"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut out = Vec::new();
        let pg = stam_gap(
            &poisson_pmf(1.0, DEFAULT_TOL)?,
            &poisson_pmf(2.0, DEFAULT_TOL)?,
            1.0,
        )?;
        out.push(CheckOutcome::below(
            "stam",
            pg.gap.abs(),
            1e-8,
            json!({ "x": "poisson(1)", "y": "poisson(2)", "nu": 1.0 }),
        ));
        for nu in [0.5, 2.0] {
            let x = cmp_pmf(&CmpParams::from_mu(1.0, nu)?, None, DEFAULT_TOL)?;
            let y = cmp_pmf(&CmpParams::from_mu(2.0, nu)?, None, DEFAULT_TOL)?;
            out.push(CheckOutcome::below(
                "stam",
                stam_gap(&x, &y, nu)?.gap.abs(),
                1e-8,
                json!({ "x": "cmp(mu=1)", "y": "cmp(mu=2)", "nu": nu }),
            ));
        }
        let g = geometric_pmf(0.5, DEFAULT_TOL)?;
        out.push(CheckOutcome::above(
            "stam",
            stam_gap(&g, &g, 1.0)?.gap,
            1e-4,
            json!({ "x": "geometric(0.5)", "y": "geometric(0.5)", "nu": 1.0 }),
        ));
        let mut worst: f64 = 0.0;
        for lambda in [0.5, 2.0, 7.0] {
            let i = score_and_fisher(&poisson_pmf(lambda, DEFAULT_TOL)?).fisher_info;
            worst = worst.max((i - 1.0 / lambda).abs());
        }
        out.push(CheckOutcome::below(
            "stam",
            worst,
            1e-10,
            json!({ "quantity": "poisson fisher information vs 1/lambda", "lambda": [0.5, 2.0, 7.0] }),
        ));
        Ok(out)
    }
}

struct ClosureCheck;

impl Check for ClosureCheck {
    fn name(&self) -> &'static str {
        "closure"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut mismatches = 0.0;
        let mut found = Vec::new();
        for nu in [0.5, 0.9, 1.0, 1.1, 2.0] {
            let r = closure_test(1.0, 1.0, nu, 20, 1e-9)?;
            if r.first_violation_n.is_none() != (nu == 1.0) {
                mismatches += 1.0;
            }
            found.push(json!({ "nu": nu, "first_violation_n": r.first_violation_n }));
        }
        let a = a_sequence(1.0, 1.0, 2.0, 2);
        let hand = (a[1] - 0.5).abs().max((a[2] - 0.375).abs());
        Ok(vec![
            CheckOutcome::below("closure", mismatches, 0.5, json!({ "results": found })),
            CheckOutcome::below("closure", hand, 1e-12, json!({ "a_seq": a, "nu": 2.0 })),
        ])
    }
}

struct SteinCheck;

impl Check for SteinCheck {
    fn name(&self) -> &'static str {
        "stein"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut worst: f64 = 0.0;
        for (lambda, nu) in [(0.5, 0.5), (2.0, 1.0), (1.0, 2.0), (3.0, 5.0)] {
            worst = worst.max(stein_residual(&cmp(lambda, nu)?, lambda, nu).0);
        }
        let (g, at) = stein_residual(&geometric_pmf(0.5, DEFAULT_TOL)?, 1.0, 1.0);
        Ok(vec![
            CheckOutcome::below("stein", worst, 1e-13, json!({ "input": "cmp" })),
            CheckOutcome::above(
                "stein",
                g,
                0.05,
                json!({ "input": "geometric(0.5)", "lambda": 1.0, "nu": 1.0, "argmax_j": at }),
            ),
        ])
    }
}

struct DpcpCheck;

impl Check for DpcpCheck {
    fn name(&self) -> &'static str {
        "dpcp"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut worst: f64 = 0.0;
        for lambda in [0.3, 0.8, 1.0] {
            for nu in [0.5, 1.0, 2.0] {
                let p = cmp(lambda, nu)?;
                let back = dpcp_reconstruct(&dpcp_recover(&p, 25)?, 24);
                worst = worst.max(max_abs_diff(&p, &back, 24));
            }
        }
        let sum50 = dpcp_recover(&cmp(0.8, 2.0)?, 50)?.alpha_sum();
        let pois = dpcp_recover(&poisson_pmf(2.0, DEFAULT_TOL)?, 10)?;
        let pois_err = pois.alphas[1..].iter().fold(
            (pois.lambda_tilde - 2.0)
                .abs()
                .max((pois.alphas[0] - 1.0).abs()),
            |m, a| m.max(a.abs()),
        );
        let bern = TruncatedPmf::from_weights(
            0,
            &[1.0, 2.0],
            PmfMeta::new("bernoulli-limit", json!({ "lambda": 2.0 }), 0.0),
        )?;
        let (min_mod, at) = pgf_min_modulus(&bern, 256, 256)?;
        Ok(vec![
            CheckOutcome::below(
                "dpcp",
                worst,
                1e-10,
                json!({ "quantity": "roundtrip", "masses": 25 }),
            ),
            CheckOutcome::below(
                "dpcp",
                (sum50 - 1.0).abs(),
                1e-6,
                json!({ "quantity": "alpha sum", "lambda": 0.8, "nu": 2.0, "n_terms": 50 }),
            ),
            CheckOutcome::below(
                "dpcp",
                pois_err,
                1e-12,
                json!({ "quantity": "poisson recovery" }),
            ),
            CheckOutcome::below(
                "dpcp",
                min_mod,
                0.01,
                json!({ "quantity": "bernoulli-limit min modulus", "argmin": [at.re, at.im] }),
            ),
        ])
    }
}

struct LimitCheck;

fn curve_outcomes(out: &mut Vec<CheckOutcome>, kind: &str, c: &LimitCurve) {
    let worst_step = c.tv.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let params =
        json!({ "curve": kind, "lambda": c.lambda, "nu": c.nu, "grid": c.grid, "tv": c.tv });
    out.push(CheckOutcome::below(
        "limits",
        worst_step,
        1.0,
        params.clone(),
    ));
    if c.nu == 1.0 {
        out.push(CheckOutcome::below(
            "limits",
            *c.tv_upper.last().unwrap_or(&1.0),
            0.01,
            params,
        ));
    }
}

impl Check for LimitCheck {
    fn name(&self) -> &'static str {
        "limits"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut out = Vec::new();
        for (lambda, nu) in [(2.0, 1.0), (1.0, 2.0)] {
            curve_outcomes(
                &mut out,
                "cmb",
                &limit_cmb_to_cmp(lambda, nu, &[10, 100, 1000])?,
            );
            curve_outcomes(
                &mut out,
                "cmnb",
                &limit_cmnb_to_cmp(lambda, nu, &[5.0, 50.0, 500.0])?,
            );
        }
        Ok(out)
    }
}

struct QueueCheck;

impl Check for QueueCheck {
    fn name(&self) -> &'static str {
        "queue"
    }

    fn run(&self, ctx: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let mut worst: f64 = 0.0;
        let mut triples = Vec::new();
        for arrival in [0.5, 2.0] {
            for service in [1.0, 2.0] {
                for nu in [0.5, 1.0, 2.0] {
                    triples.push((arrival, service, nu));
                }
            }
        }
        triples.truncate(9);
        for &(a, s, nu) in &triples {
            let q = queue_exact_steady_state(a, s, nu, DEFAULT_TOL)?;
            let c = cmp(a / s, nu)?;
            worst = worst.max(max_abs_diff(&q, &c, q.support_end().max(c.support_end())));
        }
        let mut out = vec![CheckOutcome::below(
            "queue",
            worst,
            1e-12,
            json!({ "quantity": "exact equilibrium vs cmp", "triples": triples }),
        )];
        for nu in [1.0, 2.0] {
            let cfg = QueueConfig::new(2.0, 1.0, nu, 1e5, ctx.seed)?;
            let est = queue_simulate(&cfg)?;
            out.push(CheckOutcome::below(
                "queue",
                est.tv_to_cmp.upper,
                0.02,
                json!({
                    "quantity": "simulated occupancy tv",
                    "arrival": 2.0, "service": 1.0, "nu": nu, "horizon": 1e5,
                    "seed": ctx.seed, "cap_hits": est.cap_hits,
                }),
            ));
        }
        Ok(out)
    }
}

struct EntropyCheck;

impl Check for EntropyCheck {
    fn name(&self) -> &'static str {
        "entropy"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let pmfs = [
            cmp(1.5, 0.7)?,
            cmp(3.0, 2.0)?,
            geometric_pmf(0.3, DEFAULT_TOL)?,
            power_series_pmf(&SeriesSpec::Zeta { sigma: 3.0 }, DEFAULT_TOL)?,
        ];
        let (mut renyi, mut tsallis): (f64, f64) = (0.0, 0.0);
        for p in &pmfs {
            for alpha in [0.5, 2.0, 3.0] {
                let ln_c = com_type(p, alpha, DEFAULT_TOL)?.log_norm_const;
                renyi = renyi.max((ln_c - (alpha - 1.0) * renyi_entropy(p, alpha)?).abs());
                let t = tsallis_entropy(p, alpha)?;
                tsallis = tsallis.max((ln_c.exp() - 1.0 / (1.0 + (1.0 - alpha) * t)).abs());
            }
        }
        let params = |identity: &str| {
            json!({
                "identity": identity,
                "pmfs": ["cmp(1.5,0.7)", "cmp(3,2)", "geometric(0.3)", "zeta(3)"],
                "alpha": [0.5, 2.0, 3.0],
            })
        };
        Ok(vec![
            CheckOutcome::below("entropy", renyi, 1e-10, params("renyi")),
            CheckOutcome::below("entropy", tsallis, 1e-10, params("tsallis")),
        ])
    }
}

struct MeanApproxCheck;

impl Check for MeanApproxCheck {
    fn name(&self) -> &'static str {
        "mean-approx"
    }

    fn run(&self, _: &CheckContext) -> Result<Vec<CheckOutcome>> {
        let (mut worst, mut poisson): (f64, f64) = (0.0, 0.0);
        for lambda in [4.0, 10.0, 50.0] {
            for nu in [1.0, 2.0] {
                let m = cmp_moments(&CmpParams::new(lambda, nu)?, DEFAULT_TOL)?;
                let d = (m.mean - m.mean_approx).abs();
                worst = worst.max(d);
                if nu == 1.0 {
                    poisson = poisson.max(d);
                }
            }
        }
        Ok(vec![
            CheckOutcome::below(
                "mean-approx",
                worst,
                0.1,
                json!({ "lambda": [4.0, 10.0, 50.0], "nu": [1.0, 2.0] }),
            ),
            CheckOutcome::below(
                "mean-approx",
                poisson,
                1e-10,
                json!({ "lambda": [4.0, 10.0, 50.0], "nu": 1.0 }),
            ),
        ])
    }
}
