//! Shape-preserving interpolation of convex increasing samples.
//!
//! On every cell `[a, b]` the derivative is piecewise linear with one
//! interior knot `ξ`: it runs from the node slope `sa` up to the secant
//! slope `Δ` at `ξ` and then on to `sb`. Choosing `ξ = a + (1 − A)(b − a)`
//! with `A = (Δ − sa)/(sb − sa)` makes the cell integral match the data, so
//! the interpolant reproduces every sample, is C¹ wherever the node slopes
//! are strictly inside the neighbouring secants, and has a nondecreasing
//! derivative. Quadratic data is reproduced exactly.
//!
//! Outside the node range the interpolant follows power laws matched to the
//! boundary values: `t^p` below the first node and `t^q` above the last one.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSpline {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    p_low: f64,
    q_high: f64,
}

impl ConvexSpline {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, p_low: f64, q_high: f64) -> Result<Self> {
        let n = nodes.len();
        if n < 2 || values.len() != n {
            return Err(Error::Config(format!(
                "sampled growth needs at least two (node, value) pairs of equal length, got {} nodes and {} values",
                n,
                values.len()
            )));
        }
        if !(p_low >= 1.0 && q_high >= p_low) {
            return Err(Error::Config(format!(
                "sampled growth needs 1 <= p_lower <= q_upper, got ({p_low}, {q_high})"
            )));
        }
        for w in nodes.windows(2) {
            if !(w[0] > 0.0 && w[1] > w[0]) {
                return Err(Error::Config("sample nodes must be positive and strictly increasing".into()));
            }
        }
        for w in values.windows(2) {
            if !(w[0] > 0.0 && w[1] >= w[0]) {
                return Err(Error::Config("sample values must be positive and nondecreasing".into()));
            }
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (values[k + 1] - values[k]) / (nodes[k + 1] - nodes[k]))
            .collect();
        for (k, w) in secants.windows(2).enumerate() {
            if w[1] < w[0] - 1e-12 * w[0].abs().max(w[1].abs()) {
                return Err(Error::Config(format!(
                    "sample values are not convex around node {} (secants {} > {})",
                    k + 1,
                    w[0],
                    w[1]
                )));
            }
        }

        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            let hl = nodes[k] - nodes[k - 1];
            let hr = nodes[k + 1] - nodes[k];
            slopes[k] = (hr * secants[k - 1] + hl * secants[k]) / (hl + hr);
        }
        let low_slope = p_low * values[0] / nodes[0];
        if low_slope > secants[0] * (1.0 + 1e-9) {
            return Err(Error::GrowthViolation(format!(
                "first samples grow slower than t^{p_low}: slope {low_slope} exceeds secant {}",
                secants[0]
            )));
        }
        slopes[0] = low_slope;
        let high_slope = q_high * values[n - 1] / nodes[n - 1];
        if high_slope < secants[n - 2] * (1.0 - 1e-9) {
            return Err(Error::GrowthViolation(format!(
                "last samples grow faster than t^{q_high}: secant {} exceeds slope {high_slope}",
                secants[n - 2]
            )));
        }
        slopes[n - 1] = high_slope;

        Ok(Self { nodes, values, slopes, p_low, q_high })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.p_low, self.q_high)
    }

    /// Returns `(f(t), f'(t))` for `t >= 0`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.nodes.len();
        let (t0, f0) = (self.nodes[0], self.values[0]);
        if t <= t0 {
            if t <= 0.0 {
                let d0 = if self.p_low == 1.0 { f0 / t0 } else { 0.0 };
                return (0.0, d0);
            }
            let r = t / t0;
            return (f0 * r.powf(self.p_low), self.p_low * f0 / t0 * r.powf(self.p_low - 1.0));
        }
        let (tn, fn_) = (self.nodes[n - 1], self.values[n - 1]);
        if t >= tn {
            let r = t / tn;
            return (fn_ * r.powf(self.q_high), self.q_high * fn_ / tn * r.powf(self.q_high - 1.0));
        }
        // nodes[k] <= t < nodes[k + 1]
        let k = self.nodes.partition_point(|&x| x <= t) - 1;
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        let (fa, fb) = (self.values[k], self.values[k + 1]);
        let (sa, sb) = (self.slopes[k], self.slopes[k + 1]);
        cell_eval(a, b, fa, fb, sa, sb, t)
    }
}

fn cell_eval(a: f64, b: f64, fa: f64, fb: f64, sa: f64, sb: f64, t: f64) -> (f64, f64) {
    let len = b - a;
    let delta = (fb - fa) / len;
    let spread = sb - sa;
    if spread <= 1e-14 * delta.abs().max(1e-300) {
        return (fa + delta * (t - a), delta);
    }
    let share = ((delta - sa) / spread).clamp(0.0, 1.0);
    let xi = a + (1.0 - share) * len;
    if t < xi && xi > a {
        let u = t - a;
        let curv = (delta - sa) / (xi - a);
        (fa + sa * u + 0.5 * curv * u * u, sa + curv * u)
    } else {
        let f_xi = fa + 0.5 * (sa + delta) * (xi - a);
        let u = t - xi;
        let curv = if b > xi { (sb - delta) / (b - xi) } else { 0.0 };
        (f_xi + delta * u + 0.5 * curv * u * u, delta + curv * u)
    }
}
