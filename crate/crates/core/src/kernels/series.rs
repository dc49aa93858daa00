//! Weight series `Σ w_k` summed in the log domain with a certified tail.
//!
//! Every infinite-support family in the crate is a [`WeightSeries`]. The summation engine
//! stops once the remaining mass is provably below the tolerance, either by a geometric
//! majorant built from the term ratio, or by a closed-form tail when the family has one
//! (power-law tails never admit a geometric certificate).

use std::fmt::Debug;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, log_add_exp, log_sum_exp};
use crate::pmf::{PmfMeta, TailModel, TruncatedPmf};

/// Windows keep summing until the certified tail is below this fraction of the partial
/// sum, regardless of the caller's tolerance. Deep windows keep ν-power transforms with
/// ν < 1 certifiable.
pub const WINDOW_FLOOR: f64 = 1e-40;

/// Upper limit on terms for series certified by a term-ratio majorant.
pub const MAX_TERMS: usize = 50_000_000;

/// Window cap for series whose tail is summed in closed form.
pub const MAX_CLOSED_TAIL_WINDOW: usize = 100_000;

/// Number of consecutive ratios below `1 - 1e-6` required by the generic certificate.
pub const RATIO_RUN: usize = 50;

/// A non-negative weight sequence `w_k`, `k ≥ support_start`.
///
/// Implementations must have eventually monotone term ratios; the tail certificate uses
/// `max(w_{k+1}/w_k, ratio_limit)` as the supremum of all later ratios.
pub trait WeightSeries: Debug + Send + Sync {
    fn family(&self) -> &'static str;

    fn params(&self) -> Value;

    fn support_start(&self) -> u64 {
        0
    }

    /// `ln w_k`; `-inf` for a zero weight.
    fn log_weight(&self, k: u64) -> f64;

    /// `ln(w_k / w_{k-1})`. Families override this with a form that avoids differencing
    /// two large log weights; the pmf is built from these ratios.
    fn log_ratio(&self, k: u64) -> f64 {
        self.log_weight(k) - self.log_weight(k - 1)
    }

    /// `lim_{k→∞} w_{k+1} / w_k`.
    fn ratio_limit(&self) -> f64;

    /// Consecutive sub-unit ratios needed before the geometric bound is trusted.
    fn ratio_run(&self) -> usize {
        RATIO_RUN
    }

    /// `ln Σ_{j ≥ from} w_j` in closed form, for families with slowly decaying tails.
    fn ln_closed_tail(&self, _from: u64) -> Option<f64> {
        None
    }

    /// Model for masses past the window, given `ln Σ w`.
    fn tail_model(&self, _ln_total: f64) -> Option<TailModel> {
        None
    }
}

/// Result of summing a [`WeightSeries`].
#[derive(Debug, Clone)]
pub struct SeriesSum {
    pub support_start: u64,
    /// `ln w_k` for the summed window.
    pub log_weights: Vec<f64>,
    /// `ln` of the normalizing total used for the pmf (window sum, plus the closed-form
    /// tail when there is one).
    pub ln_total: f64,
    /// Mass beyond the window relative to the total: a certified bound for ratio-certified
    /// series, the closed-form value otherwise.
    pub tail_rel: f64,
    /// `ln_total` includes a closed-form tail.
    pub closed_tail: bool,
}

impl SeriesSum {
    pub fn terms(&self) -> usize {
        self.log_weights.len()
    }
}

/// Sums a series until the tail is below `tol · partial`.
pub fn sum_series(series: &dyn WeightSeries, tol: f64) -> Result<SeriesSum> {
    if series.ln_closed_tail(series.support_start() + 1).is_some() {
        return sum_with_closed_tail(series, tol);
    }
    let limit = series.ratio_limit();
    if limit.is_nan() || limit >= 1.0 - 1e-6 {
        return Err(Error::Divergence(format!(
            "{}: term ratio tends to {limit}, no convergent tail",
            series.family()
        )));
    }
    let ln_tol = tol.min(WINDOW_FLOOR).ln();
    let start = series.support_start();
    let run_needed = series.ratio_run();

    let mut lws: Vec<f64> = Vec::new();
    let mut ln_partial = f64::NEG_INFINITY;
    let mut run = 0usize;
    let mut k = start;
    loop {
        let lw = series.log_weight(k);
        check_weight(series, k, lw)?;
        lws.push(lw);
        ln_partial = log_add_exp(ln_partial, lw);

        if lw == f64::NEG_INFINITY && ln_partial > f64::NEG_INFINITY {
            // monotone ratios: once a weight past a positive one vanishes, so do the rest
            if let Some(prev) = lws.iter().rev().nth(1) {
                if prev.is_finite() {
                    return Ok(finish(start, lws, ln_partial, 0.0));
                }
            }
        }

        if lws.len() >= 2 {
            let prev = lws[lws.len() - 2];
            let ratio = if prev.is_finite() {
                (lw - prev).exp()
            } else {
                f64::INFINITY
            };
            if ratio < 1.0 - 1e-6 {
                run += 1;
            } else {
                run = 0;
            }
        }

        if run >= run_needed && lw.is_finite() {
            let next = series.log_weight(k + 1);
            check_weight(series, k + 1, next)?;
            let rho = (next - lw).exp().max(limit);
            if rho < 1.0 {
                let ln_tail = lw + (rho / (1.0 - rho)).ln();
                if ln_tail < ln_tol + ln_partial {
                    let tail_rel = (ln_tail - ln_partial).exp();
                    return Ok(finish(start, lws, ln_partial, tail_rel));
                }
            }
        }

        if lws.len() >= MAX_TERMS {
            return Err(Error::Overflow(format!(
                "{}: more than {MAX_TERMS} terms needed; parameters too extreme for this tolerance",
                series.family()
            )));
        }
        k += 1;
    }
}

fn check_weight(series: &dyn WeightSeries, k: u64, lw: f64) -> Result<()> {
    if lw.is_nan() || lw == f64::INFINITY {
        return Err(Error::Overflow(format!(
            "{}: log weight at k={k} is {lw}",
            series.family()
        )));
    }
    Ok(())
}

fn finish(start: u64, lws: Vec<f64>, ln_partial: f64, tail_rel: f64) -> SeriesSum {
    // recompute the total with max shift and compensation
    let ln_total = log_sum_exp(&lws);
    debug_assert!((ln_total - ln_partial).abs() < 1e-9 * ln_partial.abs().max(1.0));
    SeriesSum {
        support_start: start,
        log_weights: lws,
        ln_total,
        tail_rel,
        closed_tail: false,
    }
}

fn sum_with_closed_tail(series: &dyn WeightSeries, tol: f64) -> Result<SeriesSum> {
    let start = series.support_start();
    let mut lws = Vec::new();
    let mut k = start;
    loop {
        let lw = series.log_weight(k);
        check_weight(series, k, lw)?;
        lws.push(lw);
        k += 1;
        let ln_tail = series
            .ln_closed_tail(k)
            .ok_or_else(|| Error::Divergence(format!("{}: tail sum diverges", series.family())))?;
        // the partial sum only grows, so checking against the running log-sum-exp every
        // few hundred steps is enough
        if lws.len() % 256 == 0 || lws.len() >= MAX_CLOSED_TAIL_WINDOW || lws.len() < 64 {
            let ln_partial = log_sum_exp(&lws);
            let ln_total = log_add_exp(ln_partial, ln_tail);
            let tail_rel = (ln_tail - ln_total).exp();
            if tail_rel < tol || lws.len() >= MAX_CLOSED_TAIL_WINDOW {
                return Ok(SeriesSum {
                    support_start: start,
                    log_weights: lws,
                    ln_total,
                    tail_rel,
                    closed_tail: true,
                });
            }
        }
    }
}

impl SeriesSum {
    /// Masses relative to the mode, stepped outwards with `log_ratio` so that consecutive
    /// ratios carry only a few roundings, then normalized by the window sum.
    fn probs_from_ratios(&self, series: &dyn WeightSeries, lws: &[f64]) -> Vec<f64> {
        let start = self.support_start;
        let mode = lws
            .iter()
            .enumerate()
            .fold(0, |m, (i, &lw)| if lw > lws[m] { i } else { m });
        let mut q = vec![0.0; lws.len()];
        q[mode] = 1.0;
        for i in mode + 1..lws.len() {
            q[i] = q[i - 1] * series.log_ratio(start + i as u64).exp();
        }
        for i in (0..mode).rev() {
            q[i] = q[i + 1] * (-series.log_ratio(start + i as u64 + 1)).exp();
        }
        let window = compensated_sum(q[..self.log_weights.len()].iter().copied());
        let total = if self.closed_tail {
            window / (1.0 - self.tail_rel)
        } else {
            window
        };
        q.iter().map(|x| x / total).collect()
    }

    /// Normalized pmf on `support_start ..= support_start + k_max` (the summed window when
    /// `k_max` is `None`).
    pub fn to_pmf(
        &self,
        series: &dyn WeightSeries,
        k_max: Option<u64>,
        meta: PmfMeta,
    ) -> Result<TruncatedPmf> {
        let n_window = self.log_weights.len();
        let wanted = match k_max {
            Some(k) => (k + 1) as usize,
            None => n_window,
        };
        let span = wanted.max(n_window);
        let mut lws = self.log_weights.clone();
        for i in n_window..span {
            let k = self.support_start + i as u64;
            let lw = series.log_weight(k);
            check_weight(series, k, lw)?;
            lws.push(lw);
        }
        let mut probs = if lws.iter().all(|lw| lw.is_finite()) {
            self.probs_from_ratios(series, &lws)
        } else {
            lws.iter().map(|lw| (lw - self.ln_total).exp()).collect()
        };
        probs.truncate(wanted);
        let tail = if wanted < n_window {
            let dropped = log_sum_exp(&self.log_weights[wanted..]);
            (dropped - self.ln_total).exp() + self.tail_rel
        } else {
            // extending past the summed window only removes mass from the tail
            self.tail_rel
        };
        let model = series
            .tail_model(self.ln_total)
            .filter(|_| wanted >= n_window);
        let mut meta = meta;
        meta.extra
            .insert("ln_normalizer".into(), self.ln_total.into());
        meta.extra
            .insert("terms_used".into(), (n_window as u64).into());
        Ok(TruncatedPmf::new(self.support_start, probs, tail, meta)?.with_tail_model(model))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Geometric(f64);

    impl WeightSeries for Geometric {
        fn family(&self) -> &'static str {
            "test-geometric"
        }
        fn params(&self) -> Value {
            Value::Null
        }
        fn log_weight(&self, k: u64) -> f64 {
            k as f64 * self.0.ln()
        }
        fn ratio_limit(&self) -> f64 {
            self.0
        }
    }

    #[test]
    fn geometric_sum_is_certified() {
        let s = sum_series(&Geometric(0.5), 1e-12).unwrap();
        assert!((s.ln_total.exp() - 2.0).abs() < 1e-15);
        // exact tail relative to partial: 0.5^K / (2 - 0.5^(K-1))
        let k = s.terms() as i32;
        let exact_tail = 0.5f64.powi(k) / s.ln_total.exp();
        assert!(s.tail_rel >= exact_tail * (1.0 - 1e-9));
        assert!(s.tail_rel < WINDOW_FLOOR);
    }

    #[test]
    fn ratio_at_one_diverges() {
        assert!(matches!(
            sum_series(&Geometric(1.0), 1e-12),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn window_extension_keeps_tail_bound() {
        let g = Geometric(0.25);
        let s = sum_series(&g, 1e-12).unwrap();
        let meta = PmfMeta::new("g", Value::Null, 1e-12);
        let short = s.to_pmf(&g, Some(3), meta.clone()).unwrap();
        assert!((short.window_mass() + short.tail_bound() - 1.0).abs() < 1e-14);
        let long = s.to_pmf(&g, Some(s.terms() as u64 + 10), meta).unwrap();
        assert_eq!(long.len(), s.terms() + 11);
    }
}
