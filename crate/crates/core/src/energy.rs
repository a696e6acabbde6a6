//! Discrete Orlicz modulars, Luxemburg norms, the energy `I_f` and the
//! nonlocal `f'`-tail.
//!
//! Pair sums run over ordered pairs. Rows are assembled in parallel and then
//! added in node order, so every result is independent of the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, GridFunction, QuadratureTable};
use crate::error::{Error, Result};
use crate::growth::{GrowthFunction, Profile};
use crate::kernel::KernelCoefficient;

#[derive(Debug, Clone, PartialEq)]
pub enum ModularKind {
    /// `Σ_{i ∈ region} h^d f(|u_i|)`
    Lf(Vec<usize>),
    /// Ordered pairs inside `region × region`.
    Wsf(Vec<usize>, f64),
    /// Ordered pairs in `(Ω^c × Ω^c)^c`.
    Vsf(f64),
}

impl ModularKind {
    pub fn lf_omega(dom: &GridDomain) -> Self {
        ModularKind::Lf(dom.interior().to_vec())
    }

    pub fn wsf_omega(dom: &GridDomain, s: f64) -> Self {
        ModularKind::Wsf(dom.interior().to_vec(), s)
    }
}

/// Sums `row(i)` over `rows` in parallel, adding the row totals in order.
pub(crate) fn ordered_sum<F>(rows: &[usize], row: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let parts: Vec<f64> = rows.par_iter().map(|&i| row(i)).collect();
    parts.iter().sum()
}

fn check_region(dom: &GridDomain, region: &[usize]) -> Result<()> {
    if let Some(&i) = region.iter().find(|&&i| i >= dom.len()) {
        return Err(Error::Domain(format!("region node {i} is outside the grid ({} nodes)", dom.len())));
    }
    Ok(())
}

/// Pair terms `(weight, argument)` of a modular, in deterministic order:
/// the modular is `Σ weight · f(argument)`.
fn modular_terms(kind: &ModularKind, u: &GridFunction) -> Result<Vec<(f64, f64)>> {
    let dom = u.domain();
    let vals = u.values();
    match kind {
        ModularKind::Lf(region) => {
            check_region(dom, region)?;
            let hd = dom.cell_volume();
            Ok(region.iter().map(|&i| (hd, vals[i].abs())).collect())
        }
        ModularKind::Wsf(region, s) => {
            check_region(dom, region)?;
            let table = dom.pair_weights(*s)?;
            let rows: Vec<Vec<(f64, f64)>> = region
                .par_iter()
                .map(|&i| {
                    region
                        .iter()
                        .filter_map(|&j| {
                            table.pair(dom, i, j).map(|(w, rs)| (w, (vals[i] - vals[j]).abs() / rs))
                        })
                        .collect()
                })
                .collect();
            Ok(rows.into_iter().flatten().collect())
        }
        ModularKind::Vsf(s) => {
            let table = dom.pair_weights(*s)?;
            let rows: Vec<Vec<(f64, f64)>> = dom
                .interior()
                .par_iter()
                .map(|&i| {
                    (0..dom.len())
                        .filter_map(|j| {
                            table.pair(dom, i, j).map(|(w, rs)| {
                                let mult = if dom.is_interior(j) { 1.0 } else { 2.0 };
                                (mult * w, (vals[i] - vals[j]).abs() / rs)
                            })
                        })
                        .collect()
                })
                .collect();
            Ok(rows.into_iter().flatten().collect())
        }
    }
}

pub fn modular<P: Profile + ?Sized>(kind: &ModularKind, f: &P, u: &GridFunction) -> Result<f64> {
    let terms = modular_terms(kind, u)?;
    let total: f64 = terms.iter().map(|&(w, a)| w * f.value(a)).sum();
    if !total.is_finite() {
        return Err(Error::Numeric(format!("modular evaluated to {total}")));
    }
    Ok(total)
}

/// `inf { λ > 0 : Φ(u/λ) <= 1 }` by bisection.
pub fn luxemburg_norm(kind: &ModularKind, gf: &GrowthFunction, u: &GridFunction) -> Result<f64> {
    if gf.f(0.0) != 0.0 {
        return Err(Error::Precondition("the Luxemburg functional needs f(0) = 0".into()));
    }
    let terms = modular_terms(kind, u)?;
    let amax = terms.iter().map(|t| t.1).fold(0.0, f64::max);
    if amax == 0.0 {
        return Ok(0.0);
    }
    let phi = |lam: f64| terms.iter().map(|&(w, a)| w * gf.f(a / lam)).sum::<f64>();
    let measure: f64 = terms.iter().map(|t| t.0).sum();
    let mut hi = amax * measure.max(1.0).powf(1.0 / gf.p_lower());
    let mut guard = 0;
    while phi(hi) > 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(Error::Numeric("Luxemburg bracket: modular stays above 1".into()));
        }
    }
    let mut lo = hi;
    guard = 0;
    while phi(lo) <= 1.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 || lo == 0.0 {
            return Err(Error::Numeric("Luxemburg bracket: modular stays below 1".into()));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if phi(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Energy functional `I_f` on a fixed grid with cached pair weights.
#[derive(Debug, Clone)]
pub struct Energy {
    gf: GrowthFunction,
    kernel: KernelCoefficient,
    table: QuadratureTable,
    s: f64,
}

impl Energy {
    /// Validates the kernel on every pair the energy touches.
    pub fn new(gf: &GrowthFunction, kernel: &KernelCoefficient, dom: &GridDomain, s: f64) -> Result<Self> {
        let table = dom.pair_weights(s)?;
        if !matches!(kernel, KernelCoefficient::One | KernelCoefficient::Constant(_)) {
            let bad: Vec<Error> = dom
                .interior()
                .par_iter()
                .filter_map(|&i| {
                    (0..dom.len())
                        .filter(|&j| j != i)
                        .find_map(|j| kernel.checked(dom.coord(i), dom.coord(j)).err())
                })
                .collect();
            if let Some(e) = bad.into_iter().next() {
                return Err(e);
            }
        } else if let KernelCoefficient::Constant(v) = kernel {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::Structure(format!("constant kernel {v} is not positive")));
            }
        }
        Ok(Self { gf: gf.clone(), kernel: kernel.clone(), table, s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn growth(&self) -> &GrowthFunction {
        &self.gf
    }
    pub fn kernel(&self) -> &KernelCoefficient {
        &self.kernel
    }
    pub fn table(&self) -> &QuadratureTable {
        &self.table
    }

    pub fn value(&self, u: &GridFunction) -> f64 {
        let dom = u.domain();
        let vals = u.values();
        ordered_sum(dom.interior(), |i| {
            let xi = dom.coord(i);
            let mut acc = 0.0;
            for j in 0..dom.len() {
                if let Some((w, rs)) = self.table.pair(dom, i, j) {
                    let mult = if dom.is_interior(j) { 1.0 } else { 2.0 };
                    let k = self.kernel.eval(xi, dom.coord(j));
                    acc += mult * w * k * self.gf.f((vals[i] - vals[j]).abs() / rs);
                }
            }
            acc
        })
    }

    /// `∂I/∂u_i` for every interior node, in [`GridDomain::interior`] order.
    pub fn gradient(&self, u: &GridFunction) -> Vec<f64> {
        let dom = u.domain();
        let vals = u.values();
        dom.interior().par_iter().map(|&i| self.gradient_row(dom, vals, i)).collect()
    }

    fn gradient_row(&self, dom: &GridDomain, vals: &[f64], i: usize) -> f64 {
        let xi = dom.coord(i);
        let mut acc = 0.0;
        for j in 0..dom.len() {
            if let Some((w, rs)) = self.table.pair(dom, i, j) {
                let d = vals[i] - vals[j];
                if d == 0.0 {
                    continue;
                }
                let k = self.kernel.eval(xi, dom.coord(j));
                acc += 2.0 * w * k * self.gf.fprime(d.abs() / rs) * d.signum() / rs;
            }
        }
        acc
    }

    /// Energy and interior gradient in one pass over the pairs.
    pub fn value_and_gradient(&self, u: &GridFunction) -> (f64, Vec<f64>) {
        let dom = u.domain();
        let vals = u.values();
        let rows: Vec<(f64, f64)> = dom
            .interior()
            .par_iter()
            .map(|&i| {
                let xi = dom.coord(i);
                let (mut e, mut g) = (0.0, 0.0);
                for j in 0..dom.len() {
                    if let Some((w, rs)) = self.table.pair(dom, i, j) {
                        let d = vals[i] - vals[j];
                        if d == 0.0 && self.gf.f(0.0) == 0.0 {
                            continue;
                        }
                        let mult = if dom.is_interior(j) { 1.0 } else { 2.0 };
                        let k = self.kernel.eval(xi, dom.coord(j));
                        let (fv, fd) = self.gf.f_and_fprime(d.abs() / rs);
                        e += mult * w * k * fv;
                        g += 2.0 * w * k * fd * d.signum() / rs;
                    }
                }
                (e, g)
            })
            .collect();
        let energy = rows.iter().map(|r| r.0).sum();
        (energy, rows.into_iter().map(|r| r.1).collect())
    }

    /// Diagonal scaling `D_i = Σ_j 2 w_ij k_ij |x_i − x_j|^{-2s}`.
    pub fn preconditioner(&self, dom: &GridDomain) -> Vec<f64> {
        dom.interior()
            .par_iter()
            .map(|&i| {
                let xi = dom.coord(i);
                let mut acc = 0.0;
                for j in 0..dom.len() {
                    if let Some((w, rs)) = self.table.pair(dom, i, j) {
                        acc += 2.0 * w * self.kernel.eval(xi, dom.coord(j)) / (rs * rs);
                    }
                }
                acc
            })
            .collect()
    }
}

/// `I_f(u) = Σ_{(Ω^c×Ω^c)^c} w_ij k(x_i, x_j) f(|u_i − u_j|/|x_i − x_j|^s)`.
pub fn energy_if(gf: &GrowthFunction, k: &KernelCoefficient, u: &GridFunction, s: f64) -> Result<f64> {
    let e = Energy::new(gf, k, u.domain(), s)?.value(u);
    if !e.is_finite() {
        return Err(Error::Numeric(format!("energy evaluated to {e}")));
    }
    Ok(e)
}

pub fn energy_gradient(gf: &GrowthFunction, k: &KernelCoefficient, u: &GridFunction, s: f64) -> Result<Vec<f64>> {
    Ok(Energy::new(gf, k, u.domain(), s)?.gradient(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    /// `R^s (f')^{-1}(I)` with the sum truncated at the grid edge.
    pub value: f64,
    /// The same with the far-field bound added to `I`.
    #[serde(with = "crate::serde_float")]
    pub upper_bound: f64,
    /// The inner quantity `I = (1−s) R^s Σ h^d f'(|u(y)|/|y−x0|^s) |y−x0|^{-d-s}`.
    pub integral: f64,
}

/// `Σ_{|y − x0| >= r} h^d f'(|u(y)|/|y−x0|^s) |y−x0|^{-d-s}`.
pub(crate) fn tail_sum<P: Profile + ?Sized>(f: &P, u: &GridFunction, x0: [f64; 2], r: f64, s: f64) -> f64 {
    let dom = u.domain();
    let d = dom.dim() as f64;
    let hd = dom.cell_volume();
    let eps = 1e-9 * dom.h();
    let vals = u.values();
    let nodes: Vec<usize> = (0..dom.len()).collect();
    let chunks: Vec<f64> = nodes
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = 0.0;
            for &j in chunk {
                let rho = dom.distance(j, x0);
                if rho < r - eps || vals[j] == 0.0 {
                    continue;
                }
                acc += hd * f.derivative(vals[j].abs() / rho.powf(s)) * rho.powf(-d - s);
            }
            acc
        })
        .collect();
    chunks.iter().sum()
}

/// Far-field bound for the part of the tail integral beyond the grid edge:
/// `f'(M/ρ^s) · |S^{d−1}| ρ^{-s}/s`, where `ρ` is the distance from `x0` to
/// the edge and `M` bounds `|u|` on the represented part of `{|y − x0| >= r}`.
pub(crate) fn tail_far_field<P: Profile + ?Sized>(f: &P, u: &GridFunction, x0: [f64; 2], r: f64, s: f64) -> f64 {
    let dom = u.domain();
    let rho = dom.dist_to_truncation(x0);
    if rho <= 0.0 {
        return f64::INFINITY;
    }
    let eps = 1e-9 * dom.h();
    let outside: Vec<usize> = (0..dom.len()).filter(|&j| dom.distance(j, x0) >= r - eps).collect();
    let sup = u.sup_abs(&outside);
    let sphere = if dom.dim() == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
    f.derivative(sup / rho.powf(s)) * sphere * rho.powf(-s) / s
}

/// Nonlocal tail `Tail_{f'}(u; x0, R)`.
pub fn tail_fprime(gf: &GrowthFunction, u: &GridFunction, x0: [f64; 2], r: f64, s: f64) -> Result<Tail> {
    let dom = u.domain();
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Config(format!("s must lie in (0, 1), got {s}")));
    }
    if !(r > 0.0 && r <= dom.r_infinity() / 4.0 + 1e-12 * dom.r_infinity()) {
        return Err(Error::Precondition(format!(
            "tail radius {r} must be positive and at most R_infinity/4 = {}",
            dom.r_infinity() / 4.0
        )));
    }
    if r >= dom.dist_to_truncation(x0) {
        return Err(Error::Precondition(format!("B_{r}({x0:?}) is not inside the represented region")));
    }
    let scale = (1.0 - s) * r.powf(s);
    let integral = scale * tail_sum(gf, u, x0, r, s);
    let extra = scale * tail_far_field(gf, u, x0, r, s);
    let value = r.powf(s) * gf.gen_inverse_fprime(integral)?;
    let upper_bound = r.powf(s) * gf.gen_inverse_fprime(integral + extra)?;
    Ok(Tail { value, upper_bound, integral })
}
