//! Birth-death queue with arrival rate `λ₀` and state-dependent service rate `μ n^ν`.
//!
//! The equilibrium is solved from the balance equations and checked against an
//! event-driven simulation of the same chain.

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::characterizations::{tv_distance, TvInterval};
use crate::error::{Error, Result};
use crate::kernels::sampling::rng_for;
use crate::kernels::series::{MAX_TERMS, WINDOW_FLOOR};
use crate::numeric::log_sum_exp;
use crate::pmf::{PmfMeta, TruncatedPmf};

fn check_rates(arrival: f64, service: f64, nu: f64) -> Result<()> {
    for (name, v) in [("arrival", arrival), ("service", service), ("nu", nu)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} > 0 required (got {v})")));
        }
    }
    Ok(())
}

/// Equilibrium law from `P_{n+1} = P_n λ₀ / (μ (n+1)^ν)`, normalized.
pub fn queue_exact_steady_state(
    arrival: f64,
    service: f64,
    nu: f64,
    tol: f64,
) -> Result<TruncatedPmf> {
    check_rates(arrival, service, nu)?;
    let step = arrival.ln() - service.ln();
    let ln_floor = WINDOW_FLOOR.ln();
    let mut logs = vec![0.0];
    let mut peak = 0.0f64;
    loop {
        let n = logs.len();
        if n > MAX_TERMS {
            return Err(Error::Overflow(format!(
                "balance recursion needs more than {MAX_TERMS} states"
            )));
        }
        let last = logs[n - 1];
        peak = peak.max(last);
        // Ratios λ₀/(μ(n+1)^ν) decrease in n, so once below one they bound the rest.
        let rho = (step - nu * ((n + 1) as f64).ln()).exp();
        let next = last + step - nu * (n as f64).ln();
        if rho < 1.0 && next < last {
            let ln_tail = next - (1.0 - rho).ln();
            if ln_tail - peak < tol.ln() && next - peak < ln_floor {
                let ln_total = log_sum_exp(&logs);
                let tail = (ln_tail - ln_total).exp();
                let probs = logs.iter().map(|l| (l - ln_total).exp()).collect();
                let mut meta = PmfMeta::new(
                    "queue-equilibrium",
                    json!({ "arrival": arrival, "service": service, "nu": nu }),
                    tol,
                );
                meta.extra.insert("ln_normalizer".into(), json!(ln_total));
                return TruncatedPmf::new(0, probs, tail, meta);
            }
        }
        logs.push(next);
    }
}

/// Largest `|λ₀ P_{n-1} + μ(n+1)^ν P_{n+1} - (λ₀ + μ n^ν) P_n|` relative to `(λ₀ + μ n^ν) P_n`
/// over interior window states.
pub fn balance_residual(pmf: &TruncatedPmf, arrival: f64, service: f64, nu: f64) -> f64 {
    let down = |n: u64| service * (n as f64).powf(nu);
    let mut worst: f64 = 0.0;
    for n in 0..pmf.support_end() {
        let out = (arrival + down(n)) * pmf.prob(n);
        if out <= 0.0 {
            continue;
        }
        let inflow = if n > 0 {
            arrival * pmf.prob(n - 1)
        } else {
            0.0
        } + down(n + 1) * pmf.prob(n + 1);
        worst = worst.max((inflow - out).abs() / out);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueConfig {
    pub arrival: f64,
    pub service: f64,
    pub nu: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub state_cap: u64,
}

impl QueueConfig {
    /// Defaults: `burn_in = horizon / 100`; `state_cap` four times the first state whose
    /// exact equilibrium tail is below 1e-12.
    pub fn new(arrival: f64, service: f64, nu: f64, horizon: f64, seed: u64) -> Result<Self> {
        let exact = queue_exact_steady_state(arrival, service, nu, 1e-12)?;
        let mut remaining = 1.0;
        let mut n0 = exact.support_end();
        for (k, p) in exact.iter() {
            remaining -= p;
            if remaining < 1e-12 {
                n0 = k;
                break;
            }
        }
        let cfg = Self {
            arrival,
            service,
            nu,
            horizon,
            burn_in: horizon / 100.0,
            seed,
            state_cap: (4 * n0).max(10),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Result<Self> {
        self.burn_in = burn_in;
        self.validate()?;
        Ok(self)
    }

    pub fn with_state_cap(mut self, cap: u64) -> Result<Self> {
        self.state_cap = cap;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.arrival, self.service, self.nu)?;
        if !(self.horizon.is_finite() && self.horizon > self.burn_in && self.burn_in >= 0.0) {
            return Err(Error::Domain(format!(
                "horizon > burn_in >= 0 required (got horizon {}, burn_in {})",
                self.horizon, self.burn_in
            )));
        }
        if self.state_cap < 10 {
            return Err(Error::Domain(format!(
                "state_cap >= 10 required (got {})",
                self.state_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateEstimate {
    /// Time-weighted occupancy over `[burn_in, horizon]`.
    #[serde(skip)]
    pub occupancy: TruncatedPmf,
    pub transitions: u64,
    pub tv_to_cmp: TvInterval,
    /// Arrivals rejected at `state_cap`.
    pub cap_hits: u64,
    pub seed: u64,
    /// More than 0.1% of transitions hit the cap.
    pub saturated: bool,
    /// Per state `n`: `|λ₀ π̂(n) - μ(n+1)^ν π̂(n+1)| / (λ₀ π̂(n))`.
    pub balance_residual: Vec<f64>,
}

impl SteadyStateEstimate {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "occupancy": self.occupancy.to_json(),
            "tv_to_cmp": [self.tv_to_cmp.lower, self.tv_to_cmp.upper],
            "transitions": self.transitions,
            "cap_hits": self.cap_hits,
            "seed": self.seed,
            "saturated": self.saturated,
            "balance_residual": self.balance_residual,
        })
    }
}

pub fn queue_simulate(cfg: &QueueConfig) -> Result<SteadyStateEstimate> {
    cfg.validate()?;
    let exact = queue_exact_steady_state(cfg.arrival, cfg.service, cfg.nu, 1e-12)?;
    let cap = cfg.state_cap as usize;
    let down = |n: usize| cfg.service * (n as f64).powf(cfg.nu);

    let mut rng = rng_for(cfg.seed);
    let mut occupancy = vec![0.0; cap + 1];
    let (mut n, mut t) = (0usize, 0.0f64);
    let (mut transitions, mut cap_hits) = (0u64, 0u64);
    while t < cfg.horizon {
        let total = cfg.arrival + down(n);
        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / total;
        let (a, b) = (t.max(cfg.burn_in), (t + dt).min(cfg.horizon));
        if b > a {
            occupancy[n] += b - a;
        }
        t += dt;
        if t >= cfg.horizon {
            break;
        }
        transitions += 1;
        let up: f64 = rng.random();
        if up * total < cfg.arrival {
            if n == cap {
                cap_hits += 1;
            } else {
                n += 1;
            }
        } else {
            n -= 1;
        }
    }

    let used = occupancy.iter().rposition(|&o| o > 0.0).unwrap_or(0);
    occupancy.truncate(used + 1);
    let mut meta = PmfMeta::new(
        "queue-occupancy",
        serde_json::to_value(cfg).unwrap_or_default(),
        0.0,
    );
    meta.seed = Some(cfg.seed);
    let occ = TruncatedPmf::from_weights(0, &occupancy, meta)?;

    let balance_residual = (0..occ.len().saturating_sub(1))
        .map(|k| {
            let flux = cfg.arrival * occ.probs()[k];
            if flux > 0.0 {
                (flux - down(k + 1) * occ.probs()[k + 1]).abs() / flux
            } else {
                0.0
            }
        })
        .collect();
    Ok(SteadyStateEstimate {
        tv_to_cmp: tv_distance(&occ, &exact),
        occupancy: occ,
        transitions,
        cap_hits,
        seed: cfg.seed,
        saturated: cap_hits as f64 > 1e-3 * transitions.max(1) as f64,
        balance_residual,
    })
}
