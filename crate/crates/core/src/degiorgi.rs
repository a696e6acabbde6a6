//! Both sides of the Caccioppoli-type inequality defining the fractional De
//! Giorgi classes, sampled membership constants, the transfer from `f` to the
//! auxiliary `g`, and the fast-geometric-convergence recursion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, GridFunction};
use crate::energy::{tail_far_field, tail_sum};
use crate::error::{Error, Result};
use crate::growth::{GrowthFunction, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliReport {
    pub x0: [f64; 2],
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub k_level: f64,
    pub sign: Sign,
    pub s: f64,
    /// `Φ_{W^{s,f}(B_r)}(w_+)`
    pub lhs_seminorm: f64,
    /// `Σ_{x ∈ B_r, y ∈ A_k^-} w_xy f'(w_-(y)/|x−y|^s) w_+(x)/|x−y|^s`
    pub lhs_cross: f64,
    /// `(R/(R−r))^q Φ_{L^f(B_R)}(w_+/R^s)`
    pub rhs_local: f64,
    /// `(1−s)(R/(R−r))^{d+sq} ‖w_+‖_{L¹(B_R)} Σ_{|y−x0| >= r} h^d f'(w_+(y)/|y−x0|^s)|y−x0|^{-d-s}`
    pub rhs_tail: f64,
    /// Bound on what the truncated tail sum in `rhs_tail` leaves out.
    pub rhs_tail_far_field: f64,
    /// Smallest constant for which the inequality holds on this sample.
    #[serde(with = "crate::serde_float")]
    pub c_min: f64,
    /// Set when the right-hand side vanishes while the left does not.
    pub infinite: bool,
}

impl CaccioppoliReport {
    pub fn lhs(&self) -> f64 {
        self.lhs_seminorm + self.lhs_cross
    }
    pub fn rhs_without_c(&self) -> f64 {
        self.rhs_local + self.rhs_tail
    }
}

/// One `(x0, r, R, k, sign)` tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x0: [f64; 2],
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub k: f64,
    pub sign: Sign,
}

fn min_ratio(num: f64, den: f64) -> (f64, bool) {
    if den > 0.0 {
        (num / den, false)
    } else if num > 0.0 {
        (f64::INFINITY, true)
    } else {
        (0.0, false)
    }
}

/// Evaluates every term of the class inequality for a general profile `f`
/// with class exponent `q`.
pub fn caccioppoli_gap_with<P: Profile + ?Sized>(
    f: &P,
    q: f64,
    u: &GridFunction,
    s: f64,
    sample: &Sample,
) -> Result<CaccioppoliReport> {
    let dom = u.domain();
    let Sample { x0, r, big_r, k, sign } = *sample;
    if !(r > 0.0 && r < big_r) {
        return Err(Error::Precondition(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    if big_r > dom.dist_to_boundary(x0) + 1e-9 * dom.h() {
        return Err(Error::Precondition(format!(
            "B_{big_r}({x0:?}) is not contained in Ω (distance to the boundary {})",
            dom.dist_to_boundary(x0)
        )));
    }
    let table = dom.pair_weights(s)?;
    // The minus class is the plus class of −u at level −k.
    let (vals, level): (Vec<f64>, f64) = match sign {
        Sign::Plus => (u.values().to_vec(), k),
        Sign::Minus => (u.values().iter().map(|v| -v).collect(), -k),
    };
    let wp: Vec<f64> = vals.iter().map(|v| (v - level).max(0.0)).collect();
    let wm: Vec<f64> = vals.iter().map(|v| (level - v).max(0.0)).collect();
    let small = dom.ball(x0, r);
    if small.is_empty() {
        return Err(Error::Resolution(format!("B_{r}({x0:?}) contains no grid nodes")));
    }
    let large = dom.ball(x0, big_r);
    let below: Vec<usize> = (0..dom.len()).filter(|&j| vals[j] < level).collect();

    let rows: Vec<(f64, f64)> = small
        .par_iter()
        .map(|&i| {
            let mut semi = 0.0;
            for &j in &small {
                if let Some((w, rs)) = table.pair(dom, i, j) {
                    semi += w * f.value((wp[i] - wp[j]).abs() / rs);
                }
            }
            let mut cross = 0.0;
            if wp[i] > 0.0 {
                for &j in &below {
                    if let Some((w, rs)) = table.pair(dom, i, j) {
                        cross += w * f.derivative(wm[j] / rs) * wp[i] / rs;
                    }
                }
            }
            (semi, cross)
        })
        .collect();
    let lhs_seminorm: f64 = rows.iter().map(|r| r.0).sum();
    let lhs_cross: f64 = rows.iter().map(|r| r.1).sum();

    let d = dom.dim() as f64;
    let hd = dom.cell_volume();
    let ratio = big_r / (big_r - r);
    let rs_big = big_r.powf(s);
    let local: f64 = large.iter().map(|&i| hd * f.value(wp[i] / rs_big)).sum();
    let l1: f64 = large.iter().map(|&i| hd * wp[i]).sum();
    let wp_fn = GridFunction::new(dom.clone(), wp)?;
    let tail = tail_sum(f, &wp_fn, x0, r, s);
    let far = tail_far_field(f, &wp_fn, x0, r, s);
    let tail_factor = (1.0 - s) * ratio.powf(d + s * q) * l1;

    let rhs_local = ratio.powf(q) * local;
    let rhs_tail = tail_factor * tail;
    let rhs_tail_far_field = if l1 > 0.0 { tail_factor * far } else { 0.0 };
    let (c_min, infinite) = min_ratio(lhs_seminorm + lhs_cross, rhs_local + rhs_tail);
    for v in [lhs_seminorm, lhs_cross, rhs_local, rhs_tail] {
        if !v.is_finite() {
            return Err(Error::Numeric(format!("non-finite term in the class inequality at {sample:?}")));
        }
    }
    Ok(CaccioppoliReport {
        x0,
        r,
        big_r,
        k_level: k,
        sign,
        s,
        lhs_seminorm,
        lhs_cross,
        rhs_local,
        rhs_tail,
        rhs_tail_far_field,
        c_min,
        infinite,
    })
}

pub fn caccioppoli_gap(gf: &GrowthFunction, u: &GridFunction, s: f64, sample: &Sample) -> Result<CaccioppoliReport> {
    caccioppoli_gap_with(gf, gf.q_upper(), u, s, sample)
}

/// How to choose `(x0, r, R, k)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_ratio")]
    pub ratio: (f64, f64),
    /// Smallest admissible `R` in units of `h`.
    #[serde(default = "default_min_radius")]
    pub min_radius_h: f64,
}

fn default_ratio() -> (f64, f64) {
    (0.3, 0.8)
}

fn default_min_radius() -> f64 {
    4.0
}

impl SampleSpec {
    pub fn new(count: usize, seed: u64) -> Self {
        Self { count, seed, ratio: default_ratio(), min_radius_h: default_min_radius() }
    }
}

const QUANTILES: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

fn snap_half(x: f64, h: f64) -> f64 {
    ((x / h - 0.5).floor() + 0.5) * h
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Draws admissible samples from a ChaCha8 stream seeded with `spec.seed`.
///
/// Centres are interior nodes at distance at least `R` from `∂Ω`; `R` and
/// `r` are snapped to half-integer multiples of `h`; levels cycle through
/// the 20/40/60/80% quantiles of `u` over `B_R(x0)` and signs alternate.
pub fn generate_samples(u: &GridFunction, spec: &SampleSpec) -> Result<Vec<Sample>> {
    let dom: &GridDomain = u.domain();
    let h = dom.h();
    let r_min = spec.min_radius_h * h;
    let (lo, hi) = spec.ratio;
    if !(0.0 < lo && lo <= hi && hi < 1.0) {
        return Err(Error::Config(format!("radius ratio range ({lo}, {hi}) must lie in (0, 1)")));
    }
    let centres: Vec<usize> = dom
        .interior()
        .iter()
        .copied()
        .filter(|&i| snap_half(dom.dist_to_boundary(dom.coord(i)), h) >= r_min)
        .collect();
    if centres.is_empty() {
        return Err(Error::Resolution(format!("no interior node has distance {r_min} to the boundary")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for n in 0..spec.count {
        let c = centres[rng.gen_range(0..centres.len())];
        let x0 = dom.coord(c);
        let r_max = snap_half(dom.dist_to_boundary(x0), h);
        let big_r = if r_max > r_min { snap_half(rng.gen_range(r_min..=r_max), h).max(snap_half(r_min, h)) } else { r_max };
        let ratio = rng.gen_range(lo..=hi);
        let r = snap_half(ratio * big_r, h).max(0.5 * h).min(big_r - h);
        let mut ball: Vec<f64> = dom.ball(x0, big_r).iter().map(|&i| u.value(i)).collect();
        ball.sort_by(f64::total_cmp);
        let k = quantile(&ball, QUANTILES[n % QUANTILES.len()]);
        let sign = if n % 2 == 0 { Sign::Plus } else { Sign::Minus };
        out.push(Sample { x0, r, big_r, k, sign });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    /// Largest `c_min` over the samples; a sample-based lower bound for the class constant.
    #[serde(with = "crate::serde_float")]
    pub c_empirical: f64,
    pub worst_sample: CaccioppoliReport,
    pub samples: Vec<CaccioppoliReport>,
    pub infinite_samples: usize,
}

pub fn dg_membership_on(gf: &GrowthFunction, u: &GridFunction, s: f64, samples: &[Sample]) -> Result<MembershipReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("no De Giorgi samples".into()));
    }
    let reports: Vec<CaccioppoliReport> =
        samples.par_iter().map(|smp| caccioppoli_gap(gf, u, s, smp)).collect::<Result<_>>()?;
    let mut worst = 0;
    for (i, rep) in reports.iter().enumerate() {
        if rep.c_min > reports[worst].c_min {
            worst = i;
        }
    }
    Ok(MembershipReport {
        c_empirical: reports[worst].c_min,
        worst_sample: reports[worst].clone(),
        infinite_samples: reports.iter().filter(|r| r.infinite).count(),
        samples: reports,
    })
}

pub fn dg_membership(gf: &GrowthFunction, u: &GridFunction, s: f64, spec: &SampleSpec) -> Result<MembershipReport> {
    let samples = generate_samples(u, spec)?;
    dg_membership_on(gf, u, s, &samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub f_report: CaccioppoliReport,
    pub g_report: CaccioppoliReport,
    /// `(q/p) · c_min(f)`
    #[serde(with = "crate::serde_float")]
    pub bound: f64,
    pub holds: bool,
}

/// Recomputes a report with the auxiliary `g(t) = F(t^p)` in place of `f`.
pub fn transfer_to_g(report: &CaccioppoliReport, gf: &GrowthFunction, u: &GridFunction) -> Result<TransferReport> {
    let sample = Sample { x0: report.x0, r: report.r, big_r: report.big_r, k: report.k_level, sign: report.sign };
    let g_report = caccioppoli_gap_with(&gf.auxiliary(), gf.q_upper(), u, report.s, &sample)?;
    let bound = gf.q_upper() / gf.p_lower() * report.c_min;
    let holds = g_report.c_min <= bound * (1.0 + crate::growth::APPROX_TOL) || (g_report.c_min == 0.0);
    Ok(TransferReport { f_report: report.clone(), g_report, bound, holds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastConvergence {
    #[serde(with = "crate::serde_float::vec")]
    pub sequence: Vec<f64>,
    pub converges: bool,
    pub diverged: bool,
    /// Whether `y0 <= C^{-1/β} b^{-1/β²}`.
    pub below_threshold: bool,
    /// `y_j <= y0 b^{-j/β}` for every computed `j`; vacuously true above the threshold.
    pub bound_ok: bool,
}

/// Iterates `y_{j+1} = C b^j y_j^{1+β}` for `n_steps` steps.
pub fn fast_convergence(y0: f64, c: f64, b: f64, beta: f64, n_steps: usize) -> Result<FastConvergence> {
    if !(c > 0.0 && b > 0.0 && beta > 0.0 && y0 >= 0.0) || ![y0, c, b, beta].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain(format!("need C, b, β > 0 and y0 >= 0, got ({c}, {b}, {beta}, {y0})")));
    }
    let threshold = c.powf(-1.0 / beta) * b.powf(-1.0 / (beta * beta));
    let below_threshold = y0 <= threshold;
    let mut seq = Vec::with_capacity(n_steps + 1);
    seq.push(y0);
    let mut diverged = false;
    let mut y = y0;
    for j in 0..n_steps {
        y = c * b.powi(j as i32) * y.powf(1.0 + beta);
        if !y.is_finite() || y > 1e300 {
            diverged = true;
            seq.push(f64::INFINITY);
            break;
        }
        seq.push(y);
    }
    let mut bound_ok = true;
    if below_threshold {
        for (j, &yj) in seq.iter().enumerate() {
            let bound = y0 * b.powf(-(j as f64) / beta);
            if yj > bound * (1.0 + 1e-12) {
                bound_ok = false;
            }
        }
    }
    let last = *seq.last().unwrap();
    let converges = !diverged && (last < 1e-12 || (last < y0 && below_threshold && bound_ok)) || y0 == 0.0;
    Ok(FastConvergence { sequence: seq, converges, diverged, below_threshold, bound_ok })
}
