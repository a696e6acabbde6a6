//! Convex growth functions with `(p, q)` bounds.
//!
//! A [`GrowthFunction`] is a convex increasing `f: [0, ∞) → [0, ∞)` together
//! with exponents `1 <= p <= q` such that `p f(t) <= t f'(t) <= q f(t)`.
//! Besides point evaluation this module provides the derived objects used by
//! the energy and regularity code: the convex conjugate `f*`, the generalized
//! inverse of `f'`, and the auxiliary pair `F(t) = ∫_0^{t^{1/p}} f(s)/s ds`,
//! `g(t) = F(t^p)`.

pub mod lemmas;
mod quadrature;
mod spline;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use quadrature::{adaptive_simpson, gauss_legendre};
pub use spline::ConvexSpline;

/// Relative tolerance for identities that hold exactly for closed-form families.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Relative tolerance for quadrature- or spline-backed checks.
pub const APPROX_TOL: f64 = 1e-4;

/// Lower cut-off of the integral defining `F`; the neglected piece is at most
/// `f(ε)/p` and is folded into the quadrature error budget.
const AUX_EPSILON: f64 = 1e-8;

/// Anything that can play the role of `f` in a modular: a value and a
/// derivative on `[0, ∞)`.
pub trait Profile: Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `t^p`
    Power { p: f64 },
    /// `a t^p + b t^q`
    Sum { p: f64, q: f64, a: f64, b: f64 },
    /// `t^p ln(1 + t)`
    PowerLog { p: f64 },
    /// Convex interpolant of samples on log-spaced nodes.
    Sampled(ConvexSpline),
}

impl Family {
    fn base(&self, t: f64) -> (f64, f64) {
        match self {
            Family::Power { p } => (pow(t, *p), dpow(t, *p)),
            Family::Sum { p, q, a, b } => (a * pow(t, *p) + b * pow(t, *q), a * dpow(t, *p) + b * dpow(t, *q)),
            Family::PowerLog { p } => {
                let l = t.ln_1p();
                (pow(t, *p) * l, dpow(t, *p) * l + pow(t, *p) / (1.0 + t))
            }
            Family::Sampled(sp) => sp.eval(t),
        }
    }

    fn name(&self) -> FamilyName {
        match self {
            Family::Power { .. } => FamilyName::Power,
            Family::Sum { .. } => FamilyName::Sum,
            Family::PowerLog { .. } => FamilyName::PowerLog,
            Family::Sampled(_) => FamilyName::Sampled,
        }
    }
}

fn pow(t: f64, p: f64) -> f64 {
    if p == p.trunc() && p.abs() < 64.0 {
        t.powi(p as i32)
    } else {
        t.powf(p)
    }
}

fn dpow(t: f64, p: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else if t == 0.0 {
        0.0
    } else {
        p * pow(t, p - 1.0)
    }
}

/// `f(t) = scale · base(t) + offset`, with cached growth exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFunction {
    family: Family,
    scale: f64,
    offset: f64,
    p_lower: f64,
    q_upper: f64,
    c0: Option<f64>,
}

/// Range of `t f'(t) / f(t)` observed on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub p_est: f64,
    pub q_est: f64,
}

/// Outcome of the three derivative-doubling inequalities at one `(λ, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub lambda: f64,
    pub t: f64,
    /// `(p/q) λ^{p−1} f'(t) <= f'(λt) <= (q/p) λ^{q−1} f'(t)`; vacuous for `λ < 1`.
    pub expanding: bool,
    /// `(p/q) λ^{q−1} f'(t) <= f'(λt) <= (q/p) λ^{p−1} f'(t)`; vacuous for `λ > 1`.
    pub contracting: bool,
    /// `½f'(t) + ½f'(s) <= f'(t+s) <= (q/p) 2^{q−1} (f'(t) + f'(s))` at `s = λt`.
    pub subadditive: bool,
}

impl DoublingReport {
    pub fn all(&self) -> bool {
        self.expanding && self.contracting && self.subadditive
    }
}

pub(crate) fn approx_le(lhs: f64, rhs: f64, rtol: f64) -> bool {
    lhs <= rhs + rtol * lhs.abs().max(rhs.abs())
}

impl GrowthFunction {
    /// `t^p`, normalized.
    pub fn power(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Self::raw(Family::Power { p }, 1.0, 0.0)
    }

    /// `(t^p + t^q)/2`.
    pub fn sum(p: f64, q: f64) -> Result<Self> {
        Self::raw(Family::Sum { p, q, a: 1.0, b: 1.0 }, 1.0, 0.0)?.normalize()
    }

    /// `t^p ln(1 + t) / ln 2`.
    pub fn power_log(p: f64) -> Result<Self> {
        Self::raw(Family::PowerLog { p }, 1.0, 0.0)?.normalize()
    }

    /// Convex interpolant through `(nodes[i], values[i])`, normalized so that `f(1) = 1`.
    pub fn sampled(nodes: Vec<f64>, values: Vec<f64>, p_lower: f64, q_upper: f64) -> Result<Self> {
        let spline = ConvexSpline::new(nodes, values, p_lower, q_upper)?;
        Self::raw(Family::Sampled(spline), 1.0, 0.0)?.normalize()
    }

    /// An unnormalized member of `family`, `scale · base + offset`, with the
    /// family's natural exponents.
    pub fn raw(family: Family, scale: f64, offset: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && offset.is_finite()) {
            return Err(Error::Config(format!("scale must be positive and finite, got {scale}")));
        }
        let (p_lower, q_upper, c0) = match &family {
            Family::Power { p } => {
                check_exponent(*p)?;
                (*p, *p, Some(scale))
            }
            Family::Sum { p, q, a, b } => {
                check_exponent(*p)?;
                if !(q >= p) {
                    return Err(Error::Config(format!("sum family needs p <= q, got ({p}, {q})")));
                }
                if !(*a >= 0.0 && *b >= 0.0 && a + b > 0.0) {
                    return Err(Error::Config("sum family needs nonnegative weights, not both zero".into()));
                }
                (*p, *q, (*a > 0.0).then_some(scale * a))
            }
            Family::PowerLog { p } => {
                check_exponent(*p)?;
                (*p, p + 1.0, None)
            }
            Family::Sampled(sp) => {
                let (p, q) = sp.exponents();
                (p, q, None)
            }
        };
        let c0 = if offset >= 0.0 { c0 } else { None };
        Ok(Self { family, scale, offset, p_lower, q_upper, c0 })
    }

    /// Overrides the cached exponents. Only the ordering `1 <= p <= q` is
    /// validated here; use [`Self::check_growth_bounds`] to test them.
    pub fn with_exponents(mut self, p_lower: f64, q_upper: f64) -> Result<Self> {
        check_exponent(p_lower)?;
        if !(q_upper >= p_lower && q_upper.is_finite()) {
            return Err(Error::Config(format!("need p_lower <= q_upper, got ({p_lower}, {q_upper})")));
        }
        if let Family::Sampled(sp) = &self.family {
            if sp.exponents() != (p_lower, q_upper) {
                let rebuilt = ConvexSpline::new(sp.nodes().to_vec(), sp.values().to_vec(), p_lower, q_upper)?;
                self.family = Family::Sampled(rebuilt);
            }
        }
        self.p_lower = p_lower;
        self.q_upper = q_upper;
        Ok(self)
    }

    pub fn with_c0(mut self, c0: Option<f64>) -> Result<Self> {
        if let Some(c) = c0 {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("c0 must be positive, got {c}")));
            }
        }
        self.c0 = c0;
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }
    pub fn p_lower(&self) -> f64 {
        self.p_lower
    }
    pub fn q_upper(&self) -> f64 {
        self.q_upper
    }
    pub fn c0(&self) -> Option<f64> {
        self.c0
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self.family, Family::Sampled(_))
    }

    /// Relative tolerance appropriate for identities involving this function.
    pub fn tolerance(&self) -> f64 {
        if self.is_closed_form() {
            CLOSED_FORM_TOL
        } else {
            APPROX_TOL
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.f(0.0) == 0.0 && (self.f(1.0) - 1.0).abs() <= 1e-12
    }

    /// `f(t)` without the domain check. Callers guarantee `t >= 0`.
    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.scale * self.family.base(t).0 + self.offset
    }

    /// `f'(t)` without the domain check.
    #[inline]
    pub fn fprime(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.scale * self.family.base(t).1
    }

    /// `(f(t), f'(t))` in one evaluation.
    #[inline]
    pub fn f_and_fprime(&self, t: f64) -> (f64, f64) {
        let (v, d) = self.family.base(t);
        (self.scale * v + self.offset, self.scale * d)
    }

    pub fn eval_f(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.f(t))
    }

    pub fn eval_fprime(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.fprime(t))
    }

    /// `(f − f(0)) / (f(1) − f(0))`. Idempotent.
    pub fn normalize(&self) -> Result<Self> {
        let f0 = self.f(0.0);
        let f1 = self.f(1.0);
        let span = f1 - f0;
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::Degenerate(format!("f(1) - f(0) = {span} is not positive")));
        }
        let c0 = if f0 == 0.0 { self.c0.map(|c| c / span) } else { None };
        let mut out = self.clone();
        out.scale = self.scale / span;
        out.offset = 0.0;
        out.c0 = c0;
        // Normalized families keep their exact closed-form values at t = 1.
        if (out.f(1.0) - 1.0).abs() > 1e-12 {
            return Err(Error::Numeric(format!("normalization left f(1) = {}", out.f(1.0))));
        }
        Ok(out)
    }

    /// Range of `t f'(t)/f(t)` over `grid`, checked against the cached
    /// exponents together with the monotonicity of `t^{-q} f` (nonincreasing)
    /// and `t^{-p} f` (nondecreasing) along the sorted grid.
    pub fn check_growth_bounds(&self, grid: &[f64], tol: f64) -> Result<GrowthEstimate> {
        if grid.is_empty() {
            return Err(Error::Precondition("empty t grid".into()));
        }
        let mut sorted = grid.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (p, q) = (self.p_lower, self.q_upper);
        let mut p_est = f64::INFINITY;
        let mut q_est = f64::NEG_INFINITY;
        let mut prev: Option<(f64, f64)> = None;
        for &t in &sorted {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("grid point {t} is not positive")));
            }
            let (v, d) = self.f_and_fprime(t);
            if !(v > 0.0) {
                return Err(Error::Degenerate(format!("f({t}) = {v}")));
            }
            let ratio = t * d / v;
            p_est = p_est.min(ratio);
            q_est = q_est.max(ratio);
            let upper_quot = v / t.powf(q);
            let lower_quot = v / t.powf(p);
            if let Some((pu, pl)) = prev {
                if !approx_le(upper_quot, pu, tol) {
                    return Err(Error::GrowthViolation(format!("t^-q f(t) increases at t = {t}")));
                }
                if !approx_le(pl, lower_quot, tol) {
                    return Err(Error::GrowthViolation(format!("t^-p f(t) decreases at t = {t}")));
                }
            }
            prev = Some((upper_quot, lower_quot));
        }
        if p_est < p - tol * p || q_est > q + tol * q {
            return Err(Error::GrowthViolation(format!(
                "observed t f'/f in [{p_est}, {q_est}], declared exponents ({p}, {q})"
            )));
        }
        Ok(GrowthEstimate { p_est, q_est })
    }

    pub fn doubling_check(&self, lambda: f64, t: f64) -> Result<DoublingReport> {
        check_arg(t)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        let tol = self.tolerance();
        let (p, q) = (self.p_lower, self.q_upper);
        let d_t = self.fprime(t);
        let d_lt = self.fprime(lambda * t);
        let expanding = lambda < 1.0
            || (approx_le(p / q * lambda.powf(p - 1.0) * d_t, d_lt, tol)
                && approx_le(d_lt, q / p * lambda.powf(q - 1.0) * d_t, tol));
        let contracting = lambda > 1.0
            || (approx_le(p / q * lambda.powf(q - 1.0) * d_t, d_lt, tol)
                && approx_le(d_lt, q / p * lambda.powf(p - 1.0) * d_t, tol));
        let s = lambda * t;
        let d_sum = self.fprime(t + s);
        let subadditive = approx_le(0.5 * d_t + 0.5 * d_lt, d_sum, tol)
            && approx_le(d_sum, q / p * 2f64.powf(q - 1.0) * (d_t + d_lt), tol);
        Ok(DoublingReport { lambda, t, expanding, contracting, subadditive })
    }

    /// Convex conjugate `f*(y) = sup_{t >= 0} (y t − f(t))`.
    ///
    /// Closed form for the power family; otherwise golden-section search on
    /// the concave map `t ↦ y t − f(t)` over a bracket found from `f'`.
    pub fn legendre(&self, y: f64) -> Result<f64> {
        check_arg(y)?;
        if y == 0.0 {
            return Ok(-self.f(0.0));
        }
        if let Family::Power { p } = self.family {
            let c = self.scale;
            if p == 1.0 {
                return Ok(if y <= c { -self.offset } else { f64::INFINITY });
            }
            return Ok((p - 1.0) * c * (y / (p * c)).powf(p / (p - 1.0)) - self.offset);
        }
        let phi = |t: f64| y * t - self.f(t);
        // Bracket the maximizer: f'(lo) <= y < f'(hi).
        let (mut lo, mut hi) = (0.0, 1.0);
        if self.fprime(hi) <= y {
            let mut steps = 0;
            while self.fprime(hi) <= y {
                lo = hi;
                hi *= 2.0;
                steps += 1;
                if steps > 1100 || !hi.is_finite() {
                    return Err(Error::Numeric(format!(
                        "conjugate search: f' stays below y = {y} up to t = {lo:e}"
                    )));
                }
            }
        } else {
            let mut cand = 0.5;
            while cand > 1e-300 && self.fprime(cand) > y {
                hi = cand;
                cand *= 0.5;
            }
            lo = if cand > 1e-300 { cand } else { 0.0 };
        }
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let (mut fc, mut fd) = (phi(c), phi(d));
        let mut iters = 0;
        while b - a > 1e-15 * b.abs().max(1e-300) {
            iters += 1;
            if iters > 400 {
                return Err(Error::Numeric(format!(
                    "golden-section search for f*({y}) stalled on [{a:e}, {b:e}]"
                )));
            }
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = phi(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = phi(d);
            }
        }
        let best = [phi(a), phi(b), fc, fd, phi(0.0)].into_iter().fold(f64::NEG_INFINITY, f64::max);
        if !best.is_finite() {
            return Err(Error::Numeric(format!("conjugate value at y = {y} is not finite")));
        }
        Ok(best)
    }

    /// `(f')^{-1}(y) = inf { t >= 0 : f'(t) >= y }` by bisection down to
    /// adjacent floating-point numbers. The returned `t` always satisfies
    /// `f'(t) >= y`.
    pub fn gen_inverse_fprime(&self, y: f64) -> Result<f64> {
        check_arg(y)?;
        if self.fprime(0.0) >= y {
            return Ok(0.0);
        }
        let mut hi = 1.0f64;
        let mut lo = 0.0f64;
        if self.fprime(hi) < y {
            let mut steps = 0;
            while self.fprime(hi) < y {
                lo = hi;
                hi *= 2.0;
                steps += 1;
                if steps > 1020 || !hi.is_finite() {
                    return Err(Error::BracketExhausted(format!(
                        "f' stays below {y} up to t = {lo:e}"
                    )));
                }
            }
        } else {
            let mut cand = 0.5;
            while cand > 1e-300 && self.fprime(cand) >= y {
                hi = cand;
                cand *= 0.5;
            }
            lo = if cand > 1e-300 { cand } else { 0.0 };
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(hi);
            }
            if self.fprime(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    fn integral_f_over_s(&self, upper: f64) -> Result<f64> {
        if self.f(0.0) != 0.0 {
            return Err(Error::Degenerate("the auxiliary function requires f(0) = 0".into()));
        }
        if upper <= 0.0 {
            return Ok(0.0);
        }
        let lower = AUX_EPSILON * upper.min(1.0);
        let scale = (self.f(upper) / self.q_upper).max(1e-300);
        // ds/s = dx with s = e^x.
        let integrand = |x: f64| self.f(x.exp());
        let (value, _err) = adaptive_simpson(&integrand, lower.ln(), upper.ln(), 1e-12 * scale, 60)?;
        Ok(value)
    }

    /// `F(t) = ∫_0^{t^{1/p}} f(s)/s ds` with `p = p_lower`.
    pub fn auxiliary_f(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        self.integral_f_over_s(t.powf(1.0 / self.p_lower))
    }

    /// `F'(t) = f(t^{1/p}) / (p t)`.
    pub fn auxiliary_f_prime(&self, t: f64) -> f64 {
        let t = t.max(1e-300);
        let p = self.p_lower;
        self.f(t.powf(1.0 / p)) / (p * t)
    }

    /// `g(t) = F(t^p) = ∫_0^t f(s)/s ds`.
    pub fn auxiliary_g(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        self.integral_f_over_s(t)
    }

    /// `g'(t) = f(t)/t`, extended by `f'(0)` at zero.
    pub fn auxiliary_g_prime(&self, t: f64) -> f64 {
        if t == 0.0 {
            self.fprime(0.0)
        } else {
            self.f(t) / t
        }
    }

    /// `g` packaged as a [`Profile`]; quadrature failures surface as NaN.
    pub fn auxiliary(&self) -> AuxiliaryG<'_> {
        AuxiliaryG { gf: self }
    }

    pub fn to_spec(&self) -> GrowthSpec {
        let mut params = GrowthParams { scale: Some(self.scale), ..Default::default() };
        if self.offset != 0.0 {
            params.offset = Some(self.offset);
        }
        match &self.family {
            Family::Power { p } | Family::PowerLog { p } => params.p = Some(*p),
            Family::Sum { p, q, a, b } => {
                params.p = Some(*p);
                params.q = Some(*q);
                params.a = Some(*a);
                params.b = Some(*b);
            }
            Family::Sampled(sp) => {
                params.nodes = Some(sp.nodes().to_vec());
                params.values = Some(sp.values().to_vec());
            }
        }
        GrowthSpec {
            family: self.family.name(),
            params,
            p_lower: Some(self.p_lower),
            q_upper: Some(self.q_upper),
            c0: self.c0,
        }
    }

    pub fn from_spec(spec: &GrowthSpec) -> Result<Self> {
        let pr = &spec.params;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("growth family {:?} needs parameter `{name}`", spec.family)))
        };
        let family = match spec.family {
            FamilyName::Power => Family::Power { p: need(pr.p, "p")? },
            FamilyName::Sum => Family::Sum {
                p: need(pr.p, "p")?,
                q: need(pr.q, "q")?,
                a: pr.a.unwrap_or(1.0),
                b: pr.b.unwrap_or(1.0),
            },
            FamilyName::PowerLog => Family::PowerLog { p: need(pr.p, "p")? },
            FamilyName::Sampled => {
                let nodes = pr.nodes.clone().ok_or_else(|| Error::Config("sampled growth needs `nodes`".into()))?;
                let values = pr.values.clone().ok_or_else(|| Error::Config("sampled growth needs `values`".into()))?;
                let p = spec.p_lower.ok_or_else(|| Error::Config("sampled growth needs `p_lower`".into()))?;
                let q = spec.q_upper.ok_or_else(|| Error::Config("sampled growth needs `q_upper`".into()))?;
                Family::Sampled(ConvexSpline::new(nodes, values, p, q)?)
            }
        };
        let explicit = pr.scale.is_some() || pr.offset.is_some();
        let mut gf = Self::raw(family, pr.scale.unwrap_or(1.0), pr.offset.unwrap_or(0.0))?;
        if !explicit {
            gf = gf.normalize()?;
        }
        if spec.p_lower.is_some() || spec.q_upper.is_some() {
            let p = spec.p_lower.unwrap_or(gf.p_lower);
            let q = spec.q_upper.unwrap_or(gf.q_upper);
            gf = gf.with_exponents(p, q)?;
        }
        if spec.c0.is_some() {
            gf = gf.with_c0(spec.c0)?;
        }
        Ok(gf)
    }
}

impl Profile for GrowthFunction {
    fn value(&self, t: f64) -> f64 {
        self.f(t)
    }
    fn derivative(&self, t: f64) -> f64 {
        self.fprime(t)
    }
}

/// The auxiliary function `g(t) = F(t^p)` viewed as a growth profile.
#[derive(Debug, Clone, Copy)]
pub struct AuxiliaryG<'a> {
    gf: &'a GrowthFunction,
}

impl Profile for AuxiliaryG<'_> {
    fn value(&self, t: f64) -> f64 {
        self.gf.auxiliary_g(t).unwrap_or(f64::NAN)
    }
    fn derivative(&self, t: f64) -> f64 {
        self.gf.auxiliary_g_prime(t)
    }
}

fn check_arg(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("argument must be a finite nonnegative number, got {t}")))
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("growth exponents must be >= 1, got {p}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Power,
    Sum,
    PowerLog,
    Sampled,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
}

/// JSON form of a growth function: `{family, params, p_lower, q_upper, c0}`.
///
/// Without an explicit `scale`/`offset` the family is normalized to
/// `f(0) = 0`, `f(1) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub family: FamilyName,
    #[serde(default)]
    pub params: GrowthParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
}

impl Serialize for GrowthFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GrowthFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = GrowthSpec::deserialize(d)?;
        GrowthFunction::from_spec(&spec).map_err(serde::de::Error::custom)
    }
}

/// `n` log-spaced points covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
