use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

type PairFn = dyn Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync;

/// A symmetric measurable coefficient with `Λ^{-1} <= k(x, y) <= Λ`.
#[derive(Clone)]
pub enum KernelCoefficient {
    One,
    Constant(f64),
    /// `v` when both points lie in cells of the same colour of a checkerboard
    /// with cell size 1/4, `1/v` otherwise.
    Checker(f64),
    Custom { eval: Arc<PairFn>, lambda: f64 },
}

impl fmt::Debug for KernelCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelCoefficient::One => write!(f, "One"),
            KernelCoefficient::Constant(v) => write!(f, "Constant({v})"),
            KernelCoefficient::Checker(v) => write!(f, "Checker({v})"),
            KernelCoefficient::Custom { lambda, .. } => write!(f, "Custom {{ lambda: {lambda} }}"),
        }
    }
}

fn colour(x: [f64; 2]) -> i64 {
    ((4.0 * x[0]).floor() as i64 + (4.0 * x[1]).floor() as i64).rem_euclid(2)
}

impl KernelCoefficient {
    pub fn custom(lambda: f64, eval: impl Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("kernel bound Λ must be >= 1, got {lambda}")));
        }
        Ok(KernelCoefficient::Custom { eval: Arc::new(eval), lambda })
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        match self {
            KernelCoefficient::One => 1.0,
            KernelCoefficient::Constant(v) => *v,
            KernelCoefficient::Checker(v) => {
                if colour(x) == colour(y) {
                    *v
                } else {
                    1.0 / v
                }
            }
            KernelCoefficient::Custom { eval, .. } => eval(x, y),
        }
    }

    /// The ellipticity bound `Λ`.
    pub fn lambda(&self) -> f64 {
        match self {
            KernelCoefficient::One => 1.0,
            KernelCoefficient::Constant(v) | KernelCoefficient::Checker(v) => v.max(1.0 / v),
            KernelCoefficient::Custom { lambda, .. } => *lambda,
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, KernelCoefficient::One)
    }

    /// Evaluates `k` at `(x, y)` and `(y, x)`, checking symmetry and the
    /// two-sided bound.
    pub fn checked(&self, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
        let a = self.eval(x, y);
        if matches!(self, KernelCoefficient::One | KernelCoefficient::Constant(_)) {
            return Ok(a);
        }
        let b = self.eval(y, x);
        let lam = self.lambda();
        let slack = 1.0 + 1e-12;
        if !(a.is_finite() && a * lam * slack >= 1.0 && a <= lam * slack) {
            return Err(Error::Structure(format!(
                "k({x:?}, {y:?}) = {a} lies outside [1/{lam}, {lam}]"
            )));
        }
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
            return Err(Error::Structure(format!("k is not symmetric at ({x:?}, {y:?}): {a} vs {b}")));
        }
        Ok(a)
    }

    fn validate(self) -> Result<Self> {
        if let KernelCoefficient::Constant(v) | KernelCoefficient::Checker(v) = self {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("kernel value must be positive, got {v}")));
            }
        }
        Ok(self)
    }
}

/// Parses `one`, `lambda:<v>` (constant `v`) or `checker:<v>`.
impl FromStr for KernelCoefficient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "one" {
            return Ok(KernelCoefficient::One);
        }
        let (tag, val) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("unknown kernel `{s}`; expected one, lambda:<v> or checker:<v>")))?;
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("kernel value `{val}` is not a number")))?;
        match tag {
            "lambda" => KernelCoefficient::Constant(v).validate(),
            "checker" => KernelCoefficient::Checker(v).validate(),
            _ => Err(Error::Config(format!("unknown kernel kind `{tag}`"))),
        }
    }
}

impl fmt::Display for KernelCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelCoefficient::One => write!(f, "one"),
            KernelCoefficient::Constant(v) => write!(f, "lambda:{v}"),
            KernelCoefficient::Checker(v) => write!(f, "checker:{v}"),
            KernelCoefficient::Custom { lambda, .. } => write!(f, "custom(lambda={lambda})"),
        }
    }
}
