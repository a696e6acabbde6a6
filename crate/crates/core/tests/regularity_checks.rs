use std::sync::Arc;

use nonlocal_pq::domain::{build_grid, GridDomain, GridFunction};
use nonlocal_pq::growth::GrowthFunction;
use nonlocal_pq::regularity::{
    estimate_alpha, gagliardo_sum, holder_seminorm, isoperimetric_check, regularity_report, sobolev_embedding_check,
    verify_holder_bound, IsoperimetricOutcome, IsoperimetricParams,
};
use proptest::prelude::*;

fn line(h: f64) -> Arc<GridDomain> {
    Arc::new(build_grid(1, h, 1.0, 4.0).unwrap())
}

fn pairwise_max(u: &GridFunction, alpha: f64, region: &[usize]) -> f64 {
    let dom = u.domain();
    let mut m: f64 = 0.0;
    for &i in region {
        for &j in region {
            if i != j {
                let r = (dom.coord(i)[0] - dom.coord(j)[0]).abs();
                m = m.max((u.value(i) - u.value(j)).abs() / r.powf(alpha));
            }
        }
    }
    m
}

#[test]
fn seminorm_matches_pairwise_oracle() {
    let dom = line(1.0 / 64.0);
    let u = GridFunction::from_fn(dom.clone(), |x| (5.0 * x[0]).sin() * x[0].abs().sqrt()).unwrap();
    let region = dom.closed_ball([0.1, 0.0], 0.4);
    for alpha in [0.2, 0.5, 1.0] {
        assert_eq!(holder_seminorm(&u, alpha, &region).unwrap(), pairwise_max(&u, alpha, &region));
    }
}

#[test]
fn scaling_leaves_alpha_and_constant_unchanged() {
    let dom = line(1.0 / 128.0);
    let gf = GrowthFunction::power(2.0).unwrap();
    let u = GridFunction::from_fn(dom.clone(), |x| (4.0 * x[0]).sin() + 0.2 * x[0]).unwrap();
    let a = verify_holder_bound(&gf, &u, 0.95, [0.0, 0.0], 0.125).unwrap();
    let b = verify_holder_bound(&gf, &u.scaled(3.0).unwrap(), 0.95, [0.0, 0.0], 0.125).unwrap();
    assert_eq!(a.alpha.alpha_hat, b.alpha.alpha_hat);
    assert!(a.c_fit > 0.0);
    assert!((a.c_fit - b.c_fit).abs() <= 1e-10 * a.c_fit);
}

#[test]
fn tent_ratio_is_stable_and_bump_ratio_is_smaller() {
    let tent = |x: [f64; 2]| (1.0 - 2.0 * x[0].abs()).max(0.0);
    let bump = |x: [f64; 2]| if x[0].abs() < 0.1 { 1.0 } else { 0.0 };
    let mut tents = Vec::new();
    for h in [1.0 / 64.0, 1.0 / 128.0] {
        let dom = line(h);
        let t = sobolev_embedding_check(&GridFunction::from_fn(dom.clone(), tent).unwrap(), 0.4, 2.0, [0.0, 0.0], 1.0)
            .unwrap();
        let b = sobolev_embedding_check(&GridFunction::from_fn(dom, bump).unwrap(), 0.4, 2.0, [0.0, 0.0], 1.0).unwrap();
        assert!(t.ratio.is_finite() && b.ratio.is_finite());
        // the jump makes the Gagliardo term dominate the right-hand side
        assert!(b.ratio < t.ratio, "{} >= {}", b.ratio, t.ratio);
        tents.push(t.ratio);
    }
    assert!((tents[0] / tents[1] - 1.0).abs() < 0.05, "{tents:?}");
}

#[test]
fn isoperimetric_constant_grows_as_the_band_empties() {
    let dom = line(1.0 / 128.0);
    let params = IsoperimetricParams { h_level: -0.5, k_level: 0.5, gamma: 0.2, gamma0: 0.2, c0: 1e3 };
    let mut last = 0.0;
    for eps in [0.2, 0.05, 0.01] {
        let u = GridFunction::from_fn(dom.clone(), |x| (x[0] / eps).tanh()).unwrap();
        match isoperimetric_check(&u, 0.5, 2.0, [0.0, 0.0], 1.0, &params).unwrap() {
            IsoperimetricOutcome::Evaluated { c_min, empty_band, .. } => {
                assert!(!empty_band && c_min > last, "eps={eps}: {c_min} <= {last}");
                last = c_min;
            }
            other => panic!("{other:?}"),
        }
    }
    let step = GridFunction::from_fn(dom, |x| x[0].signum()).unwrap();
    match isoperimetric_check(&step, 0.5, 2.0, [0.0, 0.0], 1.0, &params).unwrap() {
        IsoperimetricOutcome::Evaluated { c_min, empty_band, .. } => assert!(empty_band && c_min.is_infinite()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn report_skips_the_sup_bound_when_q_exceeds_p_star() {
    let dom = line(1.0 / 128.0);
    let gf = GrowthFunction::power(2.0).unwrap();
    let u = GridFunction::from_fn(dom, |x| x[0]).unwrap();
    let rep = regularity_report(&gf, &u, 0.7, [0.0, 0.0], 0.125, &[0.5]).unwrap();
    assert!(rep.p_star.is_none() && rep.local_bound.is_none());
    let rep = regularity_report(&gf, &u, 0.3, [0.0, 0.0], 0.125, &[0.5, 0.25]).unwrap();
    assert_eq!(rep.p_star, Some(5.0));
    assert_eq!(rep.sup_bound_checks.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn alpha_recovers_power_exponent(gamma in 0.3f64..0.7) {
        let dom = line(1.0 / 128.0);
        let u = GridFunction::from_fn(dom, |x| x[0].abs().powf(gamma)).unwrap();
        let est = estimate_alpha(&u, [0.0, 0.0], &[0.5, 0.25, 0.125, 0.0625]).unwrap();
        prop_assert!((est.alpha_hat - gamma).abs() <= 0.05);
    }

    #[test]
    fn seminorm_grows_with_alpha_on_small_balls(a1 in 0.05f64..1.0, da in 0.0f64..1.0) {
        let dom = line(1.0 / 64.0);
        let u = GridFunction::from_fn(dom.clone(), |x| (7.0 * x[0]).cos()).unwrap();
        let region = dom.closed_ball([0.2, 0.0], 0.5);
        let a2 = (a1 + da).min(1.0);
        prop_assert!(holder_seminorm(&u, a1, &region).unwrap() <= holder_seminorm(&u, a2, &region).unwrap());
    }

    /// Discrete interpolation between fractional seminorms:
    /// `[u]_{σ̃,p̃; Ω'×Ω} <= C |Ω'|^{(p−p̃)/(pp̃)} diam(Ω)^{σ−σ̃} [u]_{σ,p; Ω'×Ω}` with
    /// `C = (d(p−p̃)/((σ−σ̃)pp̃) |B_1|)^{(p−p̃)/(pp̃)}`.
    #[test]
    fn interpolation_between_seminorms(
        sigma in 0.2f64..0.95,
        dsigma in 0.01f64..0.9,
        p in 1.2f64..4.0,
        dp in 0.0f64..1.0,
        freq in 0.5f64..8.0,
    ) {
        let sigma_t = (sigma - dsigma).max(0.01);
        let p_t = (p - dp).max(1.0);
        prop_assume!(sigma_t < sigma);
        let dom = line(1.0 / 32.0);
        let u = GridFunction::from_fn(dom.clone(), |x| (freq * x[0]).sin() + 0.3 * x[0] * x[0]).unwrap();
        let omega = dom.interior().to_vec();
        let inner = dom.closed_ball([0.1, 0.0], 0.5);
        let inner: Vec<usize> = inner.into_iter().filter(|&i| dom.is_interior(i)).collect();
        let h = dom.h();
        let diam = 2.0 * dom.omega_radius();
        let inner_measure = inner.len() as f64 * h;
        let lhs = gagliardo_sum(&u, &inner, &omega, sigma_t, p_t).powf(1.0 / p_t);
        let e = (p - p_t) / (p * p_t);
        let c = if p == p_t { 1.0 } else { (1.0 * (p - p_t) / ((sigma - sigma_t) * p * p_t) * 2.0).powf(e) };
        let rhs = c * inner_measure.powf(e) * diam.powf(sigma - sigma_t)
            * gagliardo_sum(&u, &inner, &omega, sigma, p).powf(1.0 / p);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }
}
