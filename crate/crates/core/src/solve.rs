//! Minimization of the discrete energy over interior values, and weak-form
//! residuals of the associated nonlocal operator.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, GridFunction, QuadratureTable};
use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::growth::GrowthFunction;
use crate::kernel::KernelCoefficient;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// `max_i |∂I/∂u_i| / h^d` over interior nodes at the returned iterate.
    pub gradient_norm: f64,
    /// Not serialized, so that reports stay reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 50_000 }
    }
}

const ARMIJO_C1: f64 = 1e-4;

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `I_f` over the interior values of `u0`, keeping its exterior
/// values fixed.
///
/// Preconditioned gradient descent: the search direction is `−D^{-1}∇I`
/// with `D` from [`Energy::preconditioner`], the trial step is the
/// Barzilai–Borwein step in the `D` metric, and it is accepted by Armijo
/// backtracking. Once energy differences drop to rounding level the
/// approximate Wolfe test on the directional derivative takes over.
/// Stops when `max_i |∂I/∂u_i| / h^d <= tol`.
pub fn minimize(
    gf: &GrowthFunction,
    k: &KernelCoefficient,
    u0: &GridFunction,
    s: f64,
    opts: SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    let start = Instant::now();
    if gf.p_lower() <= 1.0 {
        return Err(Error::Unsupported("minimization needs p_lower > 1 for a differentiable objective".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let dom = u0.domain().clone();
    let energy = Energy::new(gf, k, &dom, s)?;
    let hd = dom.cell_volume();
    let diag = energy.preconditioner(&dom);

    let mut u = u0.clone();
    let (mut e, mut g) = energy.value_and_gradient(&u);
    let initial_energy = e;
    let mut res = sup_norm(&g) / hd;
    let mut alpha = 1.0;
    let mut iterations = 0;
    let mut x = u.interior_values();

    while res > opts.tol {
        if iterations >= opts.max_iterations {
            let report = SolveReport {
                iterations,
                initial_energy,
                final_energy: e,
                gradient_norm: res,
                wall_time: start.elapsed().as_secs_f64(),
            };
            return Err(Error::NotConverged(Box::new(report)));
        }
        iterations += 1;
        let dir: Vec<f64> = g.iter().zip(&diag).map(|(gi, di)| -gi / di).collect();
        let slope = dot(&g, &dir);
        if !(slope < 0.0) {
            break;
        }
        let mut step = alpha;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let cand = u.with_interior(&trial)?;
            let (e_new, g_new) = energy.value_and_gradient(&cand);
            let armijo = e_new <= e + ARMIJO_C1 * step * slope;
            let flat = (e_new - e).abs() <= 1e-13 * e.abs().max(f64::MIN_POSITIVE);
            let wolfe = {
                let d_new = dot(&g_new, &dir);
                flat && d_new >= 0.9 * slope && d_new <= -0.8 * slope
            };
            if e_new.is_finite() && (armijo || wolfe) {
                break Some((trial, cand, e_new, g_new));
            }
            step *= 0.5;
            if step < 1e-30 {
                break None;
            }
        };
        let Some((trial, cand, e_new, g_new)) = accepted else {
            break;
        };
        let sv: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        let sds: f64 = sv.iter().zip(&diag).map(|(si, di)| si * si * di).sum();
        alpha = if sy > 0.0 { (sds / sy).clamp(1e-12, 1e12) } else { (2.0 * step).min(1e12) };
        x = trial;
        u = cand;
        e = e_new;
        g = g_new;
        res = sup_norm(&g) / hd;
    }

    let report = SolveReport {
        iterations,
        initial_energy,
        final_energy: e,
        gradient_norm: res,
        wall_time: start.elapsed().as_secs_f64(),
    };
    if res > opts.tol {
        return Err(Error::NotConverged(Box::new(report)));
    }
    Ok((u, report))
}

type StructureFn = dyn Fn([f64; 2], [f64; 2], f64) -> f64 + Send + Sync;

/// A structure function `h(x, y, t)` comparable to `sign(t) f'(|t|)`.
#[derive(Clone)]
pub struct StructureFunction {
    growth: GrowthFunction,
    lambda: f64,
    eval: Arc<StructureFn>,
}

impl fmt::Debug for StructureFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructureFunction").field("growth", &self.growth).field("lambda", &self.lambda).finish()
    }
}

fn odd_fprime(gf: &GrowthFunction, t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * gf.fprime(t.abs())
    }
}

impl StructureFunction {
    /// `h(x, y, t) = sign(t) f'(|t|) k(x, y)`, the operator whose weak
    /// solutions are the critical points of `I_f`.
    pub fn euler_lagrange(gf: &GrowthFunction, k: &KernelCoefficient) -> Self {
        let (g, kk) = (gf.clone(), k.clone());
        Self {
            growth: gf.clone(),
            lambda: k.lambda(),
            eval: Arc::new(move |x, y, t| odd_fprime(&g, t) * kk.eval(x, y)),
        }
    }

    /// `h(x, y, t) = c · sign(t) f'(|t|)`.
    pub fn scaled(gf: &GrowthFunction, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("structure scale must be positive, got {c}")));
        }
        let g = gf.clone();
        Ok(Self { growth: gf.clone(), lambda: c.max(1.0 / c), eval: Arc::new(move |_, _, t| c * odd_fprime(&g, t)) })
    }

    pub fn custom(
        gf: &GrowthFunction,
        lambda: f64,
        eval: impl Fn([f64; 2], [f64; 2], f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("structure bound Λ must be >= 1, got {lambda}")));
        }
        Ok(Self { growth: gf.clone(), lambda, eval: Arc::new(eval) })
    }

    pub fn growth(&self) -> &GrowthFunction {
        &self.growth
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2], y: [f64; 2], t: f64) -> f64 {
        (self.eval)(x, y, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub samples: usize,
    /// Smallest `Λ` consistent with every sample.
    pub tightest_lambda: f64,
}

/// Checks symmetry in `(x, y)` and `Λ^{-1} f'(|t|) <= sign(t) h(x, y, t) <= Λ f'(|t|)`
/// at every sample; negative `t` is read through oddness of the envelope.
pub fn check_structure(hs: &StructureFunction, samples: &[([f64; 2], [f64; 2], f64)]) -> Result<StructureReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("no structure samples".into()));
    }
    let lam = hs.lambda();
    let slack = 1.0 + 1e-12;
    let mut tightest: f64 = 1.0;
    for &(x, y, t) in samples {
        let v = hs.eval(x, y, t);
        let w = hs.eval(y, x, t);
        if (v - w).abs() > 1e-12 * v.abs().max(w.abs()) {
            return Err(Error::Structure(format!("h is not symmetric at x={x:?}, y={y:?}, t={t}: {v} vs {w}")));
        }
        let env = hs.growth.fprime(t.abs());
        if t == 0.0 || env == 0.0 {
            if v != 0.0 {
                return Err(Error::Structure(format!(
                    "h(x={x:?}, y={y:?}, t={t}) = {v} but the envelope f'(|t|) vanishes"
                )));
            }
            continue;
        }
        let ratio = t.signum() * v / env;
        if !(ratio > 0.0) || ratio > lam * slack || ratio * lam * slack < 1.0 {
            return Err(Error::Structure(format!(
                "h(x={x:?}, y={y:?}, t={t}) = {v} leaves the envelope [f'(|t|)/Λ, Λ f'(|t|)] with f'(|t|) = {env}, Λ = {lam}"
            )));
        }
        tightest = tightest.max(ratio).max(1.0 / ratio);
    }
    Ok(StructureReport { samples: samples.len(), tightest_lambda: tightest })
}

#[inline]
fn pair_term(hs: &StructureFunction, dom: &GridDomain, table: &QuadratureTable, vals: &[f64], a: usize, b: usize) -> f64 {
    match table.pair(dom, a, b) {
        Some((w, rs)) => w * hs.eval(dom.coord(a), dom.coord(b), (vals[a] - vals[b]) / rs) / rs,
        None => 0.0,
    }
}

/// `Σ_{(Ω^c×Ω^c)^c} w_ij h(x_i, x_j, (u_i−u_j)/|x_i−x_j|^s) (φ_i − φ_j)/|x_i−x_j|^s`.
pub fn weak_residual(hs: &StructureFunction, u: &GridFunction, phi: &GridFunction, s: f64) -> Result<f64> {
    if !u.same_domain(phi) {
        return Err(Error::Domain("u and φ live on different grids".into()));
    }
    let dom = u.domain();
    if let Some(&i) = dom.exterior().iter().find(|&&i| phi.value(i) != 0.0) {
        return Err(Error::Precondition(format!("test function is nonzero outside Ω at node {i}")));
    }
    let table = dom.pair_weights(s)?;
    let vals = u.values();
    let pv = phi.values();
    let support: Vec<usize> = dom.interior().iter().copied().filter(|&i| pv[i] != 0.0).collect();
    let total = crate::energy::ordered_sum(&support, |a| {
        let mut acc = 0.0;
        for b in 0..dom.len() {
            if b == a {
                continue;
            }
            acc += pair_term(hs, dom, &table, vals, a, b) * (pv[a] - pv[b]);
            if pv[b] == 0.0 {
                // the mirrored pair (b, a) is not visited from the support
                acc -= pair_term(hs, dom, &table, vals, b, a) * pv[a];
            }
        }
        acc
    });
    Ok(total)
}

/// Residual against the nodal basis function at interior node `i`.
fn nodal_residual(hs: &StructureFunction, dom: &GridDomain, table: &QuadratureTable, vals: &[f64], i: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..dom.len() {
        if j != i {
            acc += pair_term(hs, dom, table, vals, i, j) - pair_term(hs, dom, table, vals, j, i);
        }
    }
    acc
}

/// `max_i |weak_residual(hs, u, φ_i)| / h^d` over interior nodal indicators `φ_i`.
pub fn residual_norm(hs: &StructureFunction, u: &GridFunction, s: f64) -> Result<f64> {
    let dom = u.domain();
    let table = dom.pair_weights(s)?;
    let vals = u.values();
    let rows: Vec<f64> = dom.interior().par_iter().map(|&i| nodal_residual(hs, dom, &table, vals, i).abs()).collect();
    Ok(rows.into_iter().fold(0.0, f64::max) / dom.cell_volume())
}
