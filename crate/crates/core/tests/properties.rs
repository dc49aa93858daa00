use cmp_core::characterizations::{conditional_given_sum, convolve, stein_residual, tv_distance};
use cmp_core::dpcp::{dpcp_reconstruct, dpcp_recover};
use cmp_core::information::score_and_fisher;
use cmp_core::kernels::{cmb_pmf, cmnb_pmf, cmp_pmf, CmbParams, CmnbParams, CmpParams};
use cmp_core::transform::com_type;
use cmp_core::TruncatedPmf;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn cmp(lambda: f64, nu: f64) -> TruncatedPmf {
    cmp_pmf(&CmpParams::new(lambda, nu).unwrap(), None, TOL).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_cmp_normalized(lambda in 0.05f64..20.0, nu in 0.3f64..6.0) {
        let p = cmp(lambda, nu);
        prop_assert!((p.window_mass() + p.tail_bound() - 1.0).abs() < 1e-10);
        prop_assert!(p.tail_bound() <= 1e-12);
        prop_assert!(p.probs().iter().all(|&q| q >= 0.0));
    }

    #[test]
    fn prop_cmp_recurrence(lambda in 0.05f64..10.0, nu in 0.2f64..5.0) {
        let p = cmp(lambda, nu);
        prop_assert!(stein_residual(&p, lambda, nu).0 < 1e-13);
        for k in 1..=p.support_end() {
            let prev = p.prob(k - 1);
            if prev > 1e-280 {
                let r = (p.prob(k) * (k as f64).powf(nu) - lambda * prev).abs() / prev;
                prop_assert!(r < 1e-12, "k={} r={}", k, r);
            }
        }
    }

    #[test]
    fn prop_conditional_is_cmb(l1 in 0.1f64..4.0, l2 in 0.1f64..4.0, nu in 0.3f64..3.0, s in 0u64..15) {
        let c = conditional_given_sum(&cmp(l1, nu), &cmp(l2, nu), s).unwrap();
        let b = cmb_pmf(&CmbParams::new(s, l1 / (l1 + l2), nu).unwrap());
        for (u, v) in c.iter().zip(b.probs()) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn prop_cmb_normalized(m in 0u64..60, p in 0.01f64..0.99, nu in 0.2f64..4.0) {
        let b = cmb_pmf(&CmbParams::new(m, p, nu).unwrap());
        prop_assert_eq!(b.len() as u64, m + 1);
        prop_assert!((b.window_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prop_cmnb_ratio(r in 0.5f64..6.0, nu in 0.3f64..3.0, p in 0.05f64..0.9) {
        let w = cmnb_pmf(&CmnbParams::new(r, nu, p).unwrap(), TOL).unwrap();
        for k in 1..20u64.min(w.support_end()) {
            let want = ((r + k as f64 - 1.0) / k as f64).powf(nu) * p;
            prop_assert!((w.prob(k) / w.prob(k - 1) - want).abs() < 1e-10 * want.max(1.0));
        }
    }

    #[test]
    fn prop_transform_inverts(lambda in 0.2f64..5.0, nu in 0.5f64..3.0, order in 0.5f64..3.0) {
        let p = cmp(lambda, nu);
        let t = com_type(&p, order, TOL).unwrap().pmf;
        let back = com_type(&t, 1.0 / order, TOL).unwrap().pmf;
        for (k, q) in p.iter() {
            prop_assert!((back.prob(k) - q).abs() < 1e-11);
        }
    }

    #[test]
    fn prop_transform_of_cmp_is_cmp(lambda in 0.2f64..5.0, nu in 0.5f64..3.0, order in 0.5f64..3.0) {
        let t = com_type(&cmp(lambda, nu), order, TOL).unwrap().pmf;
        let c = cmp(lambda.powf(order), nu * order);
        for k in 0..=c.support_end().min(t.support_end()) {
            prop_assert!((t.prob(k) - c.prob(k)).abs() < 1e-11);
        }
    }

    #[test]
    fn prop_fisher_of_cmp(lambda in 0.2f64..8.0, nu in 0.3f64..3.0) {
        let p = cmp(lambda, nu);
        let want: f64 = p.iter().map(|(x, q)| q * (1.0 - (x as f64).powf(nu) / lambda).powi(2)).sum();
        let got = score_and_fisher(&p).fisher_info;
        prop_assert!((got - want).abs() < 1e-10 * want.max(1.0));
    }

    #[test]
    fn prop_convolution_mass(l1 in 0.1f64..5.0, l2 in 0.1f64..5.0, nu in 0.4f64..3.0) {
        let c = convolve(&cmp(l1, nu), &cmp(l2, nu));
        prop_assert!((c.window_mass() + c.tail_bound() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn prop_tv_symmetric_bounded(l1 in 0.1f64..5.0, l2 in 0.1f64..5.0, nu in 0.4f64..3.0) {
        let (a, b) = (cmp(l1, nu), cmp(l2, nu));
        let (ab, ba) = (tv_distance(&a, &b), tv_distance(&b, &a));
        prop_assert!((ab.lower - ba.lower).abs() < 1e-15);
        prop_assert!(ab.lower >= 0.0 && ab.upper <= 1.0 && ab.lower <= ab.upper);
    }

    #[test]
    fn prop_dpcp_roundtrip(lambda in 0.1f64..1.0, nu in 0.5f64..2.5) {
        let p = cmp(lambda, nu);
        let back = dpcp_reconstruct(&dpcp_recover(&p, 20).unwrap(), 19);
        for k in 0..20 {
            prop_assert!((p.prob(k) - back.prob(k)).abs() < 1e-10);
        }
    }
}
