//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! PASS/FAIL table is always printed; exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cmp_core::characterizations::{
    a_sequence, closure_test, conditional_given_sum, limit_cmb_to_cmp, limit_cmnb_to_cmp,
    rao_rubin_gap, stein_residual,
};
use cmp_core::dpcp::{dpcp_reconstruct, dpcp_recover, pgf_min_modulus};
use cmp_core::information::{renyi_entropy, score_and_fisher, stam_gap, tsallis_entropy};
use cmp_core::kernels::sampling::rng_for;
use cmp_core::kernels::{
    cmb_pmf, cmp_moments, cmp_pmf, geometric_pmf, normalizer_series, poisson_pmf, power_series_pmf,
    CmbParams, CmpParams, SeriesSpec,
};
use cmp_core::queue::{queue_exact_steady_state, queue_simulate, QueueConfig};
use cmp_core::transform::com_type;
use cmp_core::{PmfMeta, Result, TruncatedPmf};
use rand::Rng;
use serde_json::json;

const TOL: f64 = 1e-12;

struct Line {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Result<Line>;

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line {
        pass,
        detail: detail.into(),
    }
}

fn cmp(lambda: f64, nu: f64) -> Result<TruncatedPmf> {
    cmp_pmf(&CmpParams::new(lambda, nu)?, None, TOL)
}

// Oracle: CMP masses by running products, summed over a generous fixed range.
fn cmp_oracle(lambda: f64, nu: f64, n: usize) -> Vec<f64> {
    let mut w = vec![1.0f64];
    for k in 1..n {
        let prev = w[k - 1];
        w.push(prev * lambda / (k as f64).powf(nu));
    }
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

fn binom_f(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn criterion_1() -> Result<Line> {
    let mut term = 1.0;
    let mut brute = 1.0;
    for i in 1..=200u32 {
        term /= f64::from(i * i);
        brute += term;
    }
    let d1 = (normalizer_series(&CmpParams::new(1.0, 2.0)?, TOL)?.value() - brute).abs();
    let mut d2: f64 = 0.0;
    for lambda in [0.5, 2.0, 10.0] {
        let z = normalizer_series(&CmpParams::new(lambda, 1.0)?, TOL)?.value();
        d2 = d2.max((z / lambda.exp() - 1.0).abs());
    }
    Ok(line(
        d1 < 1e-10 && d2 < 1e-12,
        format!("normalizer: |Z(1,2)-brute| = {d1:.2e} (<1e-10), max rel |Z(l,1)/e^l-1| = {d2:.2e} (<1e-12)"),
    ))
}

fn criterion_2() -> Result<Line> {
    let mut rng = rng_for(20_240_601);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let lambda = rng.random_range(0.1..10.0);
        let nu = rng.random_range(0.2..5.0);
        let p = cmp(lambda, nu)?;
        for k in 1..=p.support_end() {
            let prev = p.prob(k - 1);
            if prev > 1e-280 {
                worst = worst.max((p.prob(k) * (k as f64).powf(nu) - lambda * prev).abs() / prev);
            }
        }
    }
    Ok(line(
        worst < 1e-12,
        format!("recurrence: max |P_k k^nu - l P_(k-1)|/P_(k-1) = {worst:.2e} (<1e-12)"),
    ))
}

fn criterion_3() -> Result<Line> {
    let grid = [0.5, 1.0, 3.0];
    let (mut vs_lib, mut vs_oracle): (f64, f64) = (0.0, 0.0);
    for l1 in grid {
        for l2 in grid {
            for nu in [0.5, 1.0, 2.0] {
                let (x, y) = (cmp(l1, nu)?, cmp(l2, nu)?);
                let p = l1 / (l1 + l2);
                for s in 0..=15u64 {
                    let c = conditional_given_sum(&x, &y, s)?;
                    let b = cmb_pmf(&CmbParams::new(s, p, nu)?);
                    let w: Vec<f64> = (0..=s)
                        .map(|k| {
                            binom_f(s, k).powf(nu)
                                * p.powi(k as i32)
                                * (1.0 - p).powi((s - k) as i32)
                        })
                        .collect();
                    let z: f64 = w.iter().sum();
                    for k in 0..=s as usize {
                        vs_lib = vs_lib.max((c[k] - b.probs()[k]).abs());
                        vs_oracle = vs_oracle.max((c[k] - w[k] / z).abs());
                    }
                }
            }
        }
    }
    Ok(line(
        vs_lib < 1e-12 && vs_oracle < 1e-12,
        format!("conditional: vs cmb_pmf {vs_lib:.2e}, vs direct CMB {vs_oracle:.2e} (<1e-12)"),
    ))
}

fn criterion_4() -> Result<Line> {
    let mut parts = Vec::new();
    let mut pass = true;
    for nu in [0.5, 1.0, 2.0] {
        let mut worst: f64 = 0.0;
        for theta in [0.5, 1.0, 3.0] {
            let x = cmp(theta, nu)?;
            for p in [0.25, 0.5, 0.75] {
                worst = worst.max(rao_rubin_gap(&x, p, nu)?.max_gap);
            }
        }
        pass &= worst < 1e-10;
        parts.push(format!("nu={nu}: {worst:.2e}"));
    }
    let g = rao_rubin_gap(&geometric_pmf(0.5, TOL)?, 0.5, 1.0)?.max_gap;
    pass &= g > 1e-3;
    Ok(line(
        pass,
        format!(
            "rao-rubin: cmp max_gap {} (<1e-10), geometric(0.5) {g:.2e} (>1e-3)",
            parts.join(", ")
        ),
    ))
}

// Oracle: information of NB(2, 1/2), the sum of two geometric(1/2) variables.
fn nb2_half_information() -> f64 {
    (0..400u32)
        .map(|s| {
            let s = f64::from(s);
            (1.0 - s).powi(2) / (4.0 * (s + 1.0) * 2f64.powf(s))
        })
        .sum()
}

fn criterion_5() -> Result<Line> {
    let pois = stam_gap(&poisson_pmf(1.0, TOL)?, &poisson_pmf(2.0, TOL)?, 1.0)?
        .gap
        .abs();
    let mut cmp_gap: f64 = 0.0;
    for nu in [0.5, 2.0] {
        let x = cmp_pmf(&CmpParams::from_mu(1.0, nu)?, None, TOL)?;
        let y = cmp_pmf(&CmpParams::from_mu(2.0, nu)?, None, TOL)?;
        cmp_gap = cmp_gap.max(stam_gap(&x, &y, nu)?.gap.abs());
    }
    let g = geometric_pmf(0.5, TOL)?;
    let geo = stam_gap(&g, &g, 1.0)?.gap;
    // geometric(1/2) has information 1, so the gap is 1/I_(X+Y) - 2.
    let geo_oracle = 1.0 / nb2_half_information() - 2.0;
    let mut fisher: f64 = 0.0;
    for lambda in [0.5, 2.0, 7.0] {
        let i = score_and_fisher(&poisson_pmf(lambda, TOL)?).fisher_info;
        fisher = fisher.max((i - 1.0 / lambda).abs());
    }
    let pass = pois < 1e-8
        && cmp_gap < 1e-8
        && geo > 1e-4
        && (geo - geo_oracle).abs() < 1e-9
        && fisher < 1e-10;
    Ok(line(
        pass,
        format!(
            "stam: poisson gap {pois:.2e}, cmp gap {cmp_gap:.2e} (<1e-8); geometric gap {geo:.4e} (>1e-4, oracle {geo_oracle:.4e}); |I-1/l| {fisher:.2e} (<1e-10)"
        ),
    ))
}

fn criterion_6() -> Result<Line> {
    let mut pass = true;
    let mut found = Vec::new();
    for nu in [0.5, 0.9, 1.0, 1.1, 2.0] {
        let r = closure_test(1.0, 1.0, nu, 20, 1e-9)?;
        pass &= r.first_violation_n.is_none() == (nu == 1.0);
        found.push(format!("{nu}:{:?}", r.first_violation_n));
    }
    let a = a_sequence(1.0, 1.0, 2.0, 2);
    let hand = (a[1] - 0.5).abs().max((a[2] - 0.375).abs());
    pass &= hand < 1e-12;
    Ok(line(
        pass,
        format!(
            "closure: first violations {}; |a - (0.5, 0.375)| = {hand:.2e}",
            found.join(" ")
        ),
    ))
}

fn criterion_7() -> Result<Line> {
    let mut worst: f64 = 0.0;
    for (lambda, nu) in [(0.5, 0.5), (2.0, 1.0), (1.0, 2.0), (3.0, 5.0)] {
        worst = worst.max(stein_residual(&cmp(lambda, nu)?, lambda, nu).0);
    }
    let (g, _) = stein_residual(&geometric_pmf(0.5, TOL)?, 1.0, 1.0);
    // At j = 1: |1/2 - 1/4| = 1/4 is the largest term.
    let pass = worst < 1e-13 && g > 0.05 && (g - 0.25).abs() < 1e-12;
    Ok(line(
        pass,
        format!("stein: cmp residual {worst:.2e} (<1e-13), geometric {g:.4} (>0.05, oracle 0.25)"),
    ))
}

fn criterion_8() -> Result<Line> {
    let mut worst: f64 = 0.0;
    for lambda in [0.3, 0.8, 1.0] {
        for nu in [0.5, 1.0, 2.0] {
            let p = cmp(lambda, nu)?;
            let back = dpcp_reconstruct(&dpcp_recover(&p, 25)?, 24);
            for k in 0..25 {
                worst = worst.max((p.prob(k) - back.prob(k)).abs());
            }
        }
    }
    let sum50 = (dpcp_recover(&cmp(0.8, 2.0)?, 50)?.alpha_sum() - 1.0).abs();
    let pois = dpcp_recover(&poisson_pmf(2.0, TOL)?, 10)?;
    let pois_err = pois.alphas[1..].iter().fold(
        (pois.lambda_tilde - 2.0)
            .abs()
            .max((pois.alphas[0] - 1.0).abs()),
        |m, a| m.max(a.abs()),
    );
    let bern = TruncatedPmf::from_weights(
        0,
        &[1.0, 2.0],
        PmfMeta::new("bernoulli-limit", json!({}), 0.0),
    )?;
    let (min_mod, at) = pgf_min_modulus(&bern, 256, 256)?;
    // The pgf (1 + 2z)/3 vanishes at z = -1/2.
    let near = (at.re + 0.5).abs() < 0.02 && at.im.abs() < 0.02;
    let pass = worst < 1e-10 && sum50 < 1e-6 && pois_err < 1e-12 && min_mod < 0.01 && near;
    Ok(line(
        pass,
        format!(
            "dpcp: roundtrip {worst:.2e} (<1e-10), |sum a - 1| {sum50:.2e} (<1e-6), poisson {pois_err:.2e} (<1e-12), min |G| {min_mod:.2e} at ({:.3},{:.3})",
            at.re, at.im
        ),
    ))
}

fn criterion_9() -> Result<Line> {
    let mut pass = true;
    let mut finals = Vec::new();
    for (lambda, nu) in [(2.0, 1.0), (1.0, 2.0)] {
        let target = cmp_oracle(lambda, nu, 200);
        for c in [
            limit_cmb_to_cmp(lambda, nu, &[10, 100, 1000])?,
            limit_cmnb_to_cmp(lambda, nu, &[5.0, 50.0, 500.0])?,
        ] {
            pass &= c.strictly_decreasing();
            if nu == 1.0 {
                let last = *c.tv_upper.last().unwrap_or(&1.0);
                pass &= last < 0.01;
                finals.push(format!("{last:.2e}"));
            }
        }
        // Oracle for the m = 1000 binomial endpoint: TV against direct binomial masses.
        if nu == 1.0 {
            let m = 1000u64;
            let p = lambda / m as f64;
            let tv: f64 = 0.5
                * (0..200u64)
                    .map(|k| {
                        let b = binom_f(m, k) * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32);
                        (b - target[k as usize]).abs()
                    })
                    .sum::<f64>();
            let lib = limit_cmb_to_cmp(lambda, nu, &[m])?.tv[0];
            pass &= (tv - lib).abs() < 1e-10;
        }
    }
    Ok(line(
        pass,
        format!(
            "limits: curves strictly decreasing; final TV at nu=1 {} (<0.01)",
            finals.join(", ")
        ),
    ))
}

fn criterion_10() -> Result<Line> {
    let mut worst: f64 = 0.0;
    let mut oracle: f64 = 0.0;
    let mut n = 0;
    'outer: for arrival in [0.5, 2.0] {
        for service in [1.0, 2.0] {
            for nu in [0.5, 1.0, 2.0] {
                if n == 9 {
                    break 'outer;
                }
                n += 1;
                let q = queue_exact_steady_state(arrival, service, nu, TOL)?;
                let c = cmp(arrival / service, nu)?;
                let o = cmp_oracle(arrival / service, nu, 400);
                for k in 0..=q.support_end().max(c.support_end()) {
                    worst = worst.max((q.prob(k) - c.prob(k)).abs());
                    oracle =
                        oracle.max((q.prob(k) - o.get(k as usize).copied().unwrap_or(0.0)).abs());
                }
            }
        }
    }
    let mut sims = Vec::new();
    let mut pass = worst < 1e-12 && oracle < 1e-12;
    for nu in [1.0, 2.0] {
        let est = queue_simulate(&QueueConfig::new(2.0, 1.0, nu, 1e5, 7)?)?;
        pass &= est.tv_to_cmp.upper < 0.02;
        sims.push(format!("{:.4}", est.tv_to_cmp.upper));
    }
    Ok(line(
        pass,
        format!(
            "queue: exact vs cmp {worst:.2e}, vs direct {oracle:.2e} (<1e-12); simulated TV upper {} (<0.02)",
            sims.join(", ")
        ),
    ))
}

fn criterion_11() -> Result<Line> {
    let pmfs = [
        ("cmp(1.5,0.7)", cmp(1.5, 0.7)?),
        ("cmp(3,2)", cmp(3.0, 2.0)?),
        ("geometric(0.3)", geometric_pmf(0.3, TOL)?),
        (
            "zeta(3)",
            power_series_pmf(&SeriesSpec::Zeta { sigma: 3.0 }, TOL)?,
        ),
    ];
    let (mut renyi, mut tsallis, mut closed): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (name, p) in &pmfs {
        for alpha in [0.5, 2.0, 3.0] {
            let ln_c = com_type(p, alpha, TOL)?.log_norm_const;
            renyi = renyi.max((ln_c - (alpha - 1.0) * renyi_entropy(p, alpha)?).abs());
            let t = tsallis_entropy(p, alpha)?;
            tsallis = tsallis.max((ln_c.exp() - 1.0 / (1.0 + (1.0 - alpha) * t)).abs());
            if *name == "geometric(0.3)" {
                // Σ (p q^x)^α = p^α / (1 - q^α).
                let q: f64 = 0.7;
                let want = -(0.3f64.powf(alpha) / (1.0 - q.powf(alpha))).ln();
                closed = closed.max((ln_c - want).abs());
            }
        }
    }
    Ok(line(
        renyi < 1e-10 && tsallis < 1e-10 && closed < 1e-10,
        format!("entropy: renyi identity {renyi:.2e}, tsallis identity {tsallis:.2e}, geometric closed form {closed:.2e} (<1e-10)"),
    ))
}

fn criterion_12() -> Result<Line> {
    let (mut worst, mut poisson, mut vs_oracle): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for lambda in [4.0f64, 10.0, 50.0] {
        for nu in [1.0f64, 2.0] {
            let m = cmp_moments(&CmpParams::new(lambda, nu)?, TOL)?.mean;
            let o = cmp_oracle(lambda, nu, 400);
            let exact: f64 = o.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
            let approx = lambda.powf(1.0 / nu) - (nu - 1.0) / (2.0 * nu);
            worst = worst.max((m - approx).abs());
            vs_oracle = vs_oracle.max((m - exact).abs() / exact);
            if nu == 1.0 {
                poisson = poisson.max((m - lambda).abs());
            }
        }
    }
    Ok(line(
        worst < 0.1 && poisson < 1e-10 && vs_oracle < 1e-10,
        format!(
            "mean-approx: max |mean - approx| {worst:.4} (<0.1), poisson |mean - l| {poisson:.2e} (<1e-10), rel vs direct {vs_oracle:.2e}"
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, Criterion); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let start = Instant::now();
        let out = f().unwrap_or_else(|e| line(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} criterion {n:>2}: {} [{secs:.2}s]",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        if !out.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
