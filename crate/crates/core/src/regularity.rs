//! Empirical Hölder exponents, the Hölder and sup bounds for minimizers, and
//! checkers for the fractional Sobolev and isoperimetric inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::GridFunction;
use crate::energy::{tail_fprime, Tail};
use crate::error::{Error, Result};
use crate::growth::GrowthFunction;

/// Balls with fewer resolved radii than this many grid spacings are rejected.
pub const RESOLUTION_FLOOR: f64 = 3.0;

/// `max |u_i − u_j| / |x_i − x_j|^α` over pairs of nodes in `region`.
pub fn holder_seminorm(u: &GridFunction, alpha: f64, region: &[usize]) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("Hölder exponent must lie in (0, 1], got {alpha}")));
    }
    if region.len() < 2 {
        return Err(Error::Resolution(format!("region has {} nodes, need at least 2", region.len())));
    }
    let dom = u.domain();
    let vals = u.values();
    let rows: Vec<f64> = region
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            let xi = dom.coord(i);
            let mut m: f64 = 0.0;
            for &j in &region[a + 1..] {
                let r = dom.distance(j, xi);
                m = m.max((vals[i] - vals[j]).abs() / r.powf(alpha));
            }
            m
        })
        .collect();
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// Oscillation of `u` over the closed ball `B_r(x0)`.
pub fn oscillation(u: &GridFunction, x0: [f64; 2], r: f64) -> f64 {
    let nodes = u.domain().closed_ball(x0, r);
    let (lo, hi) = nodes
        .iter()
        .map(|&i| u.value(i))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if nodes.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha_hat: f64,
    pub fit_residual: f64,
    /// Set when `u` does not oscillate on the largest ball.
    pub constant: bool,
    /// `(radius, oscillation)` for every admissible radius, largest first.
    pub osc_decay: Vec<(f64, f64)>,
}

/// Number of radii used in the regression by default.
pub const DEFAULT_FIT_RADII: usize = 4;

pub fn estimate_alpha(u: &GridFunction, x0: [f64; 2], radii: &[f64]) -> Result<AlphaEstimate> {
    estimate_alpha_with(u, x0, radii, DEFAULT_FIT_RADII)
}

/// Least-squares slope of `log osc(B_r)` against `log r` over the `n_fit`
/// largest radii that are at least `3h`, clipped to `(0, 1]`.
pub fn estimate_alpha_with(u: &GridFunction, x0: [f64; 2], radii: &[f64], n_fit: usize) -> Result<AlphaEstimate> {
    let h = u.domain().h();
    let mut rs: Vec<f64> = radii.iter().copied().filter(|&r| r >= RESOLUTION_FLOOR * h * (1.0 - 1e-12)).collect();
    rs.sort_by(|a, b| b.total_cmp(a));
    rs.dedup();
    if rs.len() < n_fit.max(2) {
        return Err(Error::Resolution(format!(
            "{} radii are at least {RESOLUTION_FLOOR}h = {}, need {}",
            rs.len(),
            RESOLUTION_FLOOR * h,
            n_fit.max(2)
        )));
    }
    let osc_decay: Vec<(f64, f64)> = rs.iter().map(|&r| (r, oscillation(u, x0, r))).collect();
    if osc_decay[0].1 == 0.0 {
        return Ok(AlphaEstimate { alpha_hat: 1.0, fit_residual: 0.0, constant: true, osc_decay });
    }
    let pts: Vec<(f64, f64)> =
        osc_decay.iter().take(n_fit).filter(|p| p.1 > 0.0).map(|&(r, o)| (r.ln(), o.ln())).collect();
    if pts.len() < 2 {
        // oscillation vanishes on every smaller ball
        return Ok(AlphaEstimate { alpha_hat: 1.0, fit_residual: 0.0, constant: false, osc_decay });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let fit_residual = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    let alpha_hat = slope.clamp(f64::EPSILON, 1.0);
    Ok(AlphaEstimate { alpha_hat, fit_residual, constant: false, osc_decay })
}

/// Radii `R, R/√2, R/2, ...` down to the resolution floor.
pub fn dyadic_radii(big_r: f64, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let r = big_r * 2f64.powf(-(k as f64) / 2.0);
        if r < RESOLUTION_FLOOR * h * (1.0 - 1e-12) {
            break;
        }
        out.push(r);
        k += 1;
    }
    out
}

/// Inputs and outcome of `R^α [u]_{C^α(B_R)} <= C ‖u‖_{L^∞(B_{4R})} + Tail(u; x0, 4R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub x0: [f64; 2],
    #[serde(rename = "R")]
    pub big_r: f64,
    pub s: f64,
    pub alpha: AlphaEstimate,
    pub seminorm: f64,
    pub lhs: f64,
    pub sup_norm: f64,
    pub tail: Tail,
    /// `(lhs − tail)/sup_norm`, or zero when the tail alone dominates.
    #[serde(with = "crate::serde_float")]
    pub c_fit: f64,
    pub holds: bool,
}

impl HolderCheck {
    pub fn rhs(&self) -> f64 {
        self.c_fit * self.sup_norm + self.tail.value
    }
}

pub fn verify_holder_bound(gf: &GrowthFunction, u: &GridFunction, s: f64, x0: [f64; 2], big_r: f64) -> Result<HolderCheck> {
    let dom = u.domain();
    let h = dom.h();
    if !(big_r > 0.0) || 8.0 * big_r > dom.dist_to_boundary(x0) + 1e-9 * h {
        return Err(Error::Precondition(format!(
            "B_{}({x0:?}) must lie inside Ω (distance to the boundary {})",
            8.0 * big_r,
            dom.dist_to_boundary(x0)
        )));
    }
    let alpha = estimate_alpha(u, x0, &dyadic_radii(big_r, h))?;
    let region = dom.closed_ball(x0, big_r);
    let seminorm = holder_seminorm(u, alpha.alpha_hat, &region)?;
    let lhs = big_r.powf(alpha.alpha_hat) * seminorm;
    let sup_norm = u.sup_abs(&dom.closed_ball(x0, 4.0 * big_r));
    let tail = tail_fprime(gf, u, x0, 4.0 * big_r, s)?;
    let excess = lhs - tail.value;
    let (c_fit, holds) = if excess <= 0.0 {
        (0.0, true)
    } else if sup_norm > 0.0 {
        (excess / sup_norm, true)
    } else {
        (f64::INFINITY, false)
    };
    Ok(HolderCheck { x0, big_r, s, alpha, seminorm, lhs, sup_norm, tail, c_fit, holds })
}

/// `dp/(d − sp)`, defined when `sp < d`.
pub fn sobolev_exponent(d: usize, s: f64, p: f64) -> Option<f64> {
    let d = d as f64;
    (s * p < d).then(|| d * p / (d - s * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalBoundRow {
    pub delta: f64,
    /// `sup_{B_R} |u|`
    pub lhs: f64,
    pub tail: f64,
    /// `δ^{-a} (⨍_{B_R} |u|^q)^b`, the factor multiplying `C`.
    pub mean_term: f64,
    /// Smallest `C >= 0` for which the bound holds at this `δ`.
    #[serde(with = "crate::serde_float")]
    pub c_needed: f64,
    /// Right-hand side evaluated with the fitted `C`.
    #[serde(with = "crate::serde_float")]
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBoundCheck {
    pub x0: [f64; 2],
    #[serde(rename = "R")]
    pub big_r: f64,
    pub s: f64,
    pub p_star: f64,
    /// Exponent `a = (q−1)(p*/p)/(p*−q)` on `δ^{-1}`.
    pub delta_exponent: f64,
    /// Exponent `b = (p*−p)/(p(p*−q))` on the mean of `|u|^q`.
    pub mean_exponent: f64,
    pub rows: Vec<LocalBoundRow>,
    #[serde(with = "crate::serde_float")]
    pub c_fit: f64,
    pub holds: bool,
}

/// `sup_{B_R}|u| <= δ Tail(u; x0, R) + C δ^{-a} (⨍_{B_R}|u|^q)^b + δ^{(q−1)/q}`
/// with a single `C` fitted over all `δ`.
pub fn verify_local_bound(
    gf: &GrowthFunction,
    u: &GridFunction,
    s: f64,
    x0: [f64; 2],
    big_r: f64,
    deltas: &[f64],
) -> Result<LocalBoundCheck> {
    let dom = u.domain();
    let (p, q) = (gf.p_lower(), gf.q_upper());
    let p_star = sobolev_exponent(dom.dim(), s, p)
        .ok_or_else(|| Error::Unsupported(format!("local bound needs sp < d, got s = {s}, p = {p}")))?;
    if q >= p_star {
        return Err(Error::Unsupported(format!("local bound needs q < p* = {p_star}, got q = {q}")));
    }
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::Config(format!("deltas must be a nonempty list of positive numbers, got {deltas:?}")));
    }
    if !(big_r > 0.0) || 2.0 * big_r > dom.dist_to_boundary(x0) + 1e-9 * dom.h() {
        return Err(Error::Precondition(format!(
            "B_{}({x0:?}) must lie inside Ω (distance to the boundary {})",
            2.0 * big_r,
            dom.dist_to_boundary(x0)
        )));
    }
    let ball = dom.ball(x0, big_r);
    if ball.is_empty() {
        return Err(Error::Resolution(format!("B_{big_r}({x0:?}) contains no grid nodes")));
    }
    let lhs = u.sup_abs(&ball);
    let mean = ball.iter().map(|&i| u.value(i).abs().powf(q)).sum::<f64>() / ball.len() as f64;
    let tail = tail_fprime(gf, u, x0, big_r, s)?.value;
    let a = (q - 1.0) * (p_star / p) / (p_star - q);
    let b = (p_star - p) / (p * (p_star - q));
    let mut rows: Vec<LocalBoundRow> = deltas
        .iter()
        .map(|&delta| {
            let mean_term = delta.powf(-a) * mean.powf(b);
            let slack = lhs - delta * tail - delta.powf((q - 1.0) / q);
            let c_needed = if slack <= 0.0 {
                0.0
            } else if mean_term > 0.0 {
                slack / mean_term
            } else {
                f64::INFINITY
            };
            LocalBoundRow { delta, lhs, tail, mean_term, c_needed, rhs: 0.0 }
        })
        .collect();
    let c_fit = rows.iter().map(|r| r.c_needed).fold(0.0, f64::max);
    for r in &mut rows {
        r.rhs = r.delta * r.tail + c_fit * r.mean_term + r.delta.powf((q - 1.0) / q);
    }
    Ok(LocalBoundCheck {
        x0,
        big_r,
        s,
        p_star,
        delta_exponent: a,
        mean_exponent: b,
        rows,
        holds: c_fit.is_finite(),
        c_fit,
    })
}

/// `Σ_{i ∈ inner} Σ_{j ∈ outer, j ≠ i} h^{2d} |u_i − u_j|^p / |x_i − x_j|^{d+sp}`,
/// the discrete `[u]^p_{W^{s,p}}` over `inner × outer`.
pub fn gagliardo_sum(u: &GridFunction, inner: &[usize], outer: &[usize], s: f64, p: f64) -> f64 {
    let dom = u.domain();
    let d = dom.dim() as f64;
    let h2d = dom.cell_volume().powi(2);
    let vals = u.values();
    let rows: Vec<f64> = inner
        .par_iter()
        .map(|&i| {
            let xi = dom.coord(i);
            let mut acc = 0.0;
            for &j in outer {
                if j == i {
                    continue;
                }
                let diff = (vals[i] - vals[j]).abs();
                if diff > 0.0 {
                    acc += h2d * diff.powf(p) / dom.distance(j, xi).powf(d + s * p);
                }
            }
            acc
        })
        .collect();
    rows.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevCheck {
    /// `‖u‖^p_{L^{p*}(B_R)}`
    pub lhs: f64,
    /// `(1−s)/(d−sp)^{p−1} [u]^p_{W^{s,p}(B_R)}`
    pub energy_term: f64,
    /// `R^{-sp} ‖u‖^p_{L^p(B_R)}`
    pub lp_term: f64,
    pub rhs_without_c: f64,
    #[serde(with = "crate::serde_float")]
    pub ratio: f64,
    pub p_star: f64,
}

/// Both sides of the fractional Sobolev embedding on `B_R(x0)`, with the
/// constant left out of the right-hand side.
pub fn sobolev_embedding_check(u: &GridFunction, s: f64, p: f64, x0: [f64; 2], big_r: f64) -> Result<SobolevCheck> {
    let dom = u.domain();
    let d = dom.dim() as f64;
    let p_star = sobolev_exponent(dom.dim(), s, p)
        .ok_or_else(|| Error::Unsupported(format!("embedding needs sp < d, got s = {s}, p = {p}")))?;
    if !(p >= 1.0 && s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("need p >= 1 and s in (0, 1), got p = {p}, s = {s}")));
    }
    let ball = dom.ball(x0, big_r);
    if ball.len() < 2 {
        return Err(Error::Resolution(format!("B_{big_r}({x0:?}) has fewer than 2 nodes")));
    }
    let hd = dom.cell_volume();
    let lpstar: f64 = ball.iter().map(|&i| hd * u.value(i).abs().powf(p_star)).sum();
    let lhs = lpstar.powf(p / p_star);
    let energy_term = (1.0 - s) / (d - s * p).powf(p - 1.0) * gagliardo_sum(u, &ball, &ball, s, p);
    let lp_term = big_r.powf(-s * p) * ball.iter().map(|&i| hd * u.value(i).abs().powf(p)).sum::<f64>();
    let rhs_without_c = energy_term + lp_term;
    let ratio = if rhs_without_c > 0.0 { lhs / rhs_without_c } else { 0.0 };
    Ok(SobolevCheck { lhs, energy_term, lp_term, rhs_without_c, ratio, p_star })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricParams {
    pub h_level: f64,
    pub k_level: f64,
    pub gamma: f64,
    pub gamma0: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum IsoperimetricOutcome {
    HypothesesNotMet {
        reasons: Vec<String>,
    },
    Evaluated {
        /// `(k−h) (|{u<=h}| |{u>=k}|)^{(d−1)/d}`
        lhs: f64,
        /// `R^{d−2+s} (1−s)^{1/p} [u]_{W^{s,p}(B_R)} |{h<u<k}|^{(p−1)/p}`
        rhs_without_c: f64,
        #[serde(with = "crate::serde_float")]
        c_min: f64,
        band_measure: f64,
        /// Set when the band `{h < u < k}` holds no nodes.
        empty_band: bool,
    },
}

/// The degenerate-case isoperimetric inequality on `B_R(x0)`, evaluated
/// only after its three hypotheses are confirmed on the grid.
pub fn isoperimetric_check(
    u: &GridFunction,
    s: f64,
    p: f64,
    x0: [f64; 2],
    big_r: f64,
    params: &IsoperimetricParams,
) -> Result<IsoperimetricOutcome> {
    let IsoperimetricParams { h_level, k_level, gamma, gamma0, c0 } = *params;
    if !(k_level > h_level) {
        return Err(Error::Domain(format!("need k > h, got h = {h_level}, k = {k_level}")));
    }
    if !(p >= 1.0 && s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("need p >= 1 and s in (0, 1), got p = {p}, s = {s}")));
    }
    let dom = u.domain();
    let d = dom.dim() as f64;
    let hd = dom.cell_volume();
    let ball = dom.ball(x0, big_r);
    if ball.len() < 2 {
        return Err(Error::Resolution(format!("B_{big_r}({x0:?}) has fewer than 2 nodes")));
    }
    let measure = |pred: &dyn Fn(f64) -> bool| ball.iter().filter(|&&i| pred(u.value(i))).count() as f64 * hd;
    let ball_measure = ball.len() as f64 * hd;
    let below = measure(&|v| v <= h_level);
    let above = measure(&|v| v >= k_level);
    let band = measure(&|v| v > h_level && v < k_level);
    let lp: f64 = ball.iter().map(|&i| hd * u.value(i).abs().powf(p)).sum();
    let semi_p = gagliardo_sum(u, &ball, &ball, s, p);

    let mut reasons = Vec::new();
    if below < gamma * ball_measure {
        reasons.push(format!("|{{u <= h}}| = {below} is below γ|B_R| = {}", gamma * ball_measure));
    }
    if above < gamma0 * ball_measure {
        reasons.push(format!("|{{u >= k}}| = {above} is below γ0|B_R| = {}", gamma0 * ball_measure));
    }
    let energy = lp + (1.0 - s) * big_r.powf(s * p) * semi_p;
    let budget = c0 * big_r.powf(d) * (k_level - h_level).powf(p);
    if energy > budget {
        reasons.push(format!("‖u‖_p^p + (1−s)R^(sp)[u]^p = {energy} exceeds C0 R^d (k−h)^p = {budget}"));
    }
    if !reasons.is_empty() {
        return Ok(IsoperimetricOutcome::HypothesesNotMet { reasons });
    }
    let lhs = (k_level - h_level) * (below * above).powf((d - 1.0) / d);
    let rhs_without_c =
        big_r.powf(d - 2.0 + s) * (1.0 - s).powf(1.0 / p) * semi_p.powf(1.0 / p) * band.powf((p - 1.0) / p);
    let c_min = if rhs_without_c > 0.0 {
        lhs / rhs_without_c
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(IsoperimetricOutcome::Evaluated { lhs, rhs_without_c, c_min, band_measure: band, empty_band: band == 0.0 })
}

/// Hölder exponent, oscillation decay, and fitted constants for both
/// regularity estimates at one centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub alpha_hat: f64,
    #[serde(with = "crate::serde_float")]
    pub holder_constant: f64,
    pub osc_decay: Vec<(f64, f64)>,
    /// `(δ, lhs, rhs)` for the sup bound.
    pub sup_bound_checks: Vec<(f64, f64, f64)>,
    pub p_star: Option<f64>,
    pub holder: HolderCheck,
    pub local_bound: Option<LocalBoundCheck>,
}

/// Runs the Hölder check at `(x0, R)` and, when `q < p*`, the sup bound at
/// the same centre and radius.
pub fn regularity_report(
    gf: &GrowthFunction,
    u: &GridFunction,
    s: f64,
    x0: [f64; 2],
    big_r: f64,
    deltas: &[f64],
) -> Result<RegularityReport> {
    let holder = verify_holder_bound(gf, u, s, x0, big_r)?;
    let p_star = sobolev_exponent(u.domain().dim(), s, gf.p_lower());
    let local_bound = match p_star {
        Some(ps) if gf.q_upper() < ps && !deltas.is_empty() => Some(verify_local_bound(gf, u, s, x0, big_r, deltas)?),
        _ => None,
    };
    let sup_bound_checks = local_bound
        .as_ref()
        .map(|lb| lb.rows.iter().map(|r| (r.delta, r.lhs, r.rhs)).collect())
        .unwrap_or_default();
    Ok(RegularityReport {
        alpha_hat: holder.alpha.alpha_hat,
        holder_constant: holder.c_fit,
        osc_decay: holder.alpha.osc_decay.clone(),
        sup_bound_checks,
        p_star,
        holder,
        local_bound,
    })
}
