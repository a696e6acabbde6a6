//! Grid-based verification of the structural inequalities satisfied by
//! convex functions with `(p, q)` growth.
//!
//! Every check samples a log-spaced grid (or a thinned copy of it for the
//! two-variable inequalities) and records the worst relative excess
//! `(lhs − rhs)/scale`, so a failed check also tells how badly it failed.

use serde::{Deserialize, Serialize};

use super::{log_grid, GrowthFunction, APPROX_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    /// Largest observed `(lhs − rhs)/scale`; nonpositive means every sample had slack.
    #[serde(with = "crate::serde_float")]
    pub worst_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub p_est: f64,
    pub q_est: f64,
    pub checks: Vec<CheckOutcome>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// 200 log-spaced points covering `[1e-4, 1e4]`.
pub fn standard_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 200)
}

const LAMBDAS: [f64; 7] = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];
const THETAS: [f64; 3] = [0.0, 0.5, 1.0];
const MUS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const INVERSE_CS: [f64; 3] = [1.5, 2.0, 10.0];

struct Acc {
    name: &'static str,
    tol: f64,
    samples: usize,
    worst: f64,
}

impl Acc {
    fn new(name: &'static str, tol: f64) -> Self {
        Self { name, tol, samples: 0, worst: f64::NEG_INFINITY }
    }

    /// Records `lhs <= rhs` relative to `max(|lhs|, |rhs|, floor)`.
    fn le(&mut self, lhs: f64, rhs: f64, floor: f64) {
        let scale = lhs.abs().max(rhs.abs()).max(floor).max(f64::MIN_POSITIVE);
        let excess = if lhs.is_nan() || rhs.is_nan() { f64::INFINITY } else { (lhs - rhs) / scale };
        self.samples += 1;
        self.worst = self.worst.max(excess);
    }

    fn finish(self) -> CheckOutcome {
        let worst = if self.samples == 0 { 0.0 } else { self.worst };
        CheckOutcome { name: self.name.to_string(), passed: worst <= self.tol, samples: self.samples, worst_excess: worst }
    }
}

/// Runs every structural check on `grid`. Violations are reported in the
/// outcome list; only malformed input is an error.
pub fn run_lemma_suite(gf: &GrowthFunction, grid: &[f64]) -> Result<LemmaReport> {
    if grid.len() < 2 {
        return Err(Error::Precondition("the lemma suite needs at least two grid points".into()));
    }
    let mut ts = grid.to_vec();
    ts.sort_by(f64::total_cmp);
    if !(ts[0] > 0.0) || !ts[ts.len() - 1].is_finite() {
        return Err(Error::Domain("lemma grid must be positive and finite".into()));
    }
    let tol = gf.tolerance();
    let (p, q) = (gf.p_lower(), gf.q_upper());
    let fs: Vec<f64> = ts.iter().map(|&t| gf.f(t)).collect();
    let ds: Vec<f64> = ts.iter().map(|&t| gf.fprime(t)).collect();
    if let Some(i) = fs.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate(format!("f({}) = {}", ts[i], fs[i])));
    }
    let f1 = gf.f(1.0);

    let mut p_est = f64::INFINITY;
    let mut q_est = f64::NEG_INFINITY;
    let mut pq = Acc::new("pq_growth", tol);
    let mut envelope = Acc::new("growth_envelope", tol);
    let mut lower_power = Acc::new("lower_power_bound", tol);
    for i in 0..ts.len() {
        let (t, v, d) = (ts[i], fs[i], ds[i]);
        let ratio = t * d / v;
        p_est = p_est.min(ratio);
        q_est = q_est.max(ratio);
        pq.le(p * v, t * d, 0.0);
        pq.le(t * d, q * v, 0.0);
        envelope.le(f1 * (t.powf(p) - 1.0), v, f1);
        envelope.le(v, f1 * (t.powf(q) + 1.0), 0.0);
        if let Some(c0) = gf.c0() {
            lower_power.le(c0 * t.powf(p), v, 0.0);
        }
    }

    let mut upper_quot = Acc::new("upper_quotient_decreasing", tol);
    let mut lower_quot = Acc::new("lower_quotient_increasing", tol);
    let mut slope = Acc::new("convex_slope", tol);
    let mut derivative = Acc::new("derivative_monotone", tol);
    let mut midpoint = Acc::new("midpoint_convexity", tol);
    for i in 0..ts.len() - 1 {
        let (a, b) = (ts[i], ts[i + 1]);
        upper_quot.le(fs[i + 1] / b.powf(q), fs[i] / a.powf(q), 0.0);
        lower_quot.le(fs[i] / a.powf(p), fs[i + 1] / b.powf(p), 0.0);
        slope.le(fs[i] / a, fs[i + 1] / b, 0.0);
        derivative.le(ds[i], ds[i + 1], 0.0);
        for j in [i + 1, (i + 17).min(ts.len() - 1)] {
            let m = 0.5 * (ts[i] + ts[j]);
            midpoint.le(gf.f(m), 0.5 * (fs[i] + fs[j]), 0.0);
        }
    }

    // Thinned grid for the two-variable inequalities.
    let thin: Vec<f64> = ts.iter().copied().step_by((ts.len() / 25).max(1)).collect();

    let mut scaling_upper = Acc::new("upper_scaling", tol);
    let mut scaling_lower = Acc::new("lower_scaling", tol);
    let mut doubling = Acc::new("derivative_doubling", 0.0);
    for &t in &thin {
        let ft = gf.f(t);
        for &lambda in &LAMBDAS {
            let flt = gf.f(lambda * t);
            if lambda >= 1.0 {
                scaling_upper.le(flt, lambda.powf(q) * ft, 0.0);
                scaling_lower.le(lambda.powf(p) * ft, flt, 0.0);
            } else {
                scaling_upper.le(lambda.powf(q) * ft, flt, 0.0);
                scaling_lower.le(flt, lambda.powf(p) * ft, 0.0);
            }
            let report = gf.doubling_check(lambda, t)?;
            doubling.le(if report.all() { 0.0 } else { 1.0 }, 0.0, 1.0);
        }
    }

    let mut inverse = Acc::new("inverse_bound", tol);
    let mut split = Acc::new("convex_split", tol);
    let mut truncation = Acc::new("truncation_difference", tol);
    for &t in &thin {
        let ft = gf.f(t);
        for &s in &thin {
            let fs_ = gf.f(s);
            for &c in &INVERSE_CS {
                if ft <= c * fs_ {
                    inverse.le(t, c * s, 0.0);
                }
            }
            let (a, b) = (t, s);
            let fab = gf.f(a + b);
            let (fa, dfa, fb) = (ft, gf.fprime(a), fs_);
            for &theta in &THETAS {
                split.le(theta * dfa * b + (1.0 - theta) * fb, fab - fa, fab);
            }
            let dfb = gf.fprime(b);
            let fdiff = gf.f((a - b).abs());
            for &mu in &MUS {
                let fmu = gf.f((mu * a - b).abs());
                truncation.le(fmu - fdiff, dfb * a, fmu.max(fdiff));
            }
        }
    }

    let mut legendre_identity = Acc::new("legendre_identity", tol);
    let mut fenchel = Acc::new("fenchel", tol);
    let mut composition = Acc::new("inverse_composition", 1e-12);
    let mut conj = Vec::with_capacity(thin.len());
    for &t in &thin {
        let y = gf.fprime(t);
        let fstar = gf.legendre(y)?;
        let ft = gf.f(t);
        let expected = y * t - ft;
        legendre_identity.le((fstar - expected).abs(), 0.0, 1.0 + ft);
        conj.push((y, fstar));
        let inv = gf.gen_inverse_fprime(y)?;
        composition.le(inv, t, 0.0);
        let inv_y = gf.gen_inverse_fprime(t)?;
        composition.le(t, gf.fprime(inv_y), 0.0);
    }
    for &t in &thin {
        let ft = gf.f(t);
        for &(y, fstar) in &conj {
            fenchel.le(y * t, ft + fstar, 0.0);
        }
    }

    let mut aux = Acc::new("auxiliary_sandwich", APPROX_TOL);
    let mut aux_d = Acc::new("auxiliary_derivative_sandwich", APPROX_TOL);
    let mut aux_f = Acc::new("auxiliary_growth", APPROX_TOL);
    if gf.f(0.0) == 0.0 {
        for i in 0..ts.len() {
            let (t, v, d) = (ts[i], fs[i], ds[i]);
            let g = gf.auxiliary_g(t)?;
            aux.le(v / q, g, 0.0);
            aux.le(g, v / p, 0.0);
            let dg = gf.auxiliary_g_prime(t);
            aux_d.le(d / q, dg, 0.0);
            aux_d.le(dg, d / p, 0.0);
        }
        for &t in &thin {
            let big_f = gf.auxiliary_f(t)?;
            let tfp = t * gf.auxiliary_f_prime(t);
            aux_f.le(big_f, tfp, 0.0);
            aux_f.le(tfp, q / p * big_f, 0.0);
        }
    }

    let mut checks: Vec<CheckOutcome> = [
        pq,
        envelope,
        upper_quot,
        lower_quot,
        scaling_upper,
        scaling_lower,
        slope,
        derivative,
        midpoint,
        doubling,
        inverse,
        split,
        truncation,
        legendre_identity,
        fenchel,
        composition,
        aux,
        aux_d,
        aux_f,
    ]
    .into_iter()
    .map(Acc::finish)
    .collect();
    if gf.c0().is_some() {
        checks.push(lower_power.finish());
    }
    Ok(LemmaReport { p_est, q_est, checks })
}
