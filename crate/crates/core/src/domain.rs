//! Uniform grids on boxes in one or two dimensions, grid functions carrying
//! exterior data, and the pair weights discretizing `(1−s)|x−y|^{-d} dy dx`.

use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid description as stored in configs: `Ω` is the open box of half-width
/// `omega_radius` around `omega_center` (the origin by default), and the
/// grid keeps every node within Euclidean distance `R_infinity` of that centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub h: f64,
    pub omega_radius: f64,
    #[serde(rename = "R_infinity")]
    pub r_infinity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_center: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn build(&self) -> Result<GridDomain> {
        GridDomain::new(self.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    spec: GridSpec,
    center: [f64; 2],
    coords: Vec<[f64; 2]>,
    index: Vec<[i64; 2]>,
    interior: Vec<usize>,
    exterior: Vec<usize>,
    is_interior: Vec<bool>,
    /// Node id by position in the bounding box of integer indices.
    lookup: Vec<Option<usize>>,
    origin: [i64; 2],
    width: i64,
}

/// Centered grid: `Ω = (−omega_radius, omega_radius)^dim`.
pub fn build_grid(dim: usize, h: f64, omega_radius: f64, r_infinity: f64) -> Result<GridDomain> {
    GridDomain::new(GridSpec { dim, h, omega_radius, r_infinity, omega_center: None })
}

impl GridDomain {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let GridSpec { dim, h, omega_radius, r_infinity, .. } = spec;
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
        }
        if !(omega_radius >= 2.0 * h) {
            return Err(Error::Config(format!("omega_radius {omega_radius} must be at least 2h = {}", 2.0 * h)));
        }
        if !(r_infinity >= 4.0 * omega_radius) || !r_infinity.is_finite() {
            return Err(Error::Config(format!(
                "R_infinity {r_infinity} must be at least 4 * omega_radius = {}",
                4.0 * omega_radius
            )));
        }
        let mut center = [0.0; 2];
        if let Some(c) = &spec.omega_center {
            if c.len() != dim || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("omega_center must have {dim} finite coordinates")));
            }
            center[..dim].copy_from_slice(c);
        }
        let eps = 1e-9 * h;
        let span = |c: f64| -> (i64, i64) {
            (((c - r_infinity) / h).floor() as i64 - 1, ((c + r_infinity) / h).ceil() as i64 + 1)
        };
        let (x_lo, x_hi) = span(center[0]);
        let (y_lo, y_hi) = if dim == 2 { span(center[1]) } else { (0, 0) };
        let count = ((x_hi - x_lo + 1) * (y_hi - y_lo + 1)) as f64;
        if count > 5e7 {
            return Err(Error::Config(format!("grid would hold about {count:e} nodes")));
        }

        let mut coords = Vec::new();
        let mut index = Vec::new();
        let mut interior = Vec::new();
        let mut exterior = Vec::new();
        let mut is_interior = Vec::new();
        let width = x_hi - x_lo + 1;
        let mut lookup = vec![None; (width * (y_hi - y_lo + 1)) as usize];
        for iy in y_lo..=y_hi {
            for ix in x_lo..=x_hi {
                let x = [ix as f64 * h, iy as f64 * h];
                let dx = x[0] - center[0];
                let dy = if dim == 2 { x[1] - center[1] } else { 0.0 };
                if (dx * dx + dy * dy).sqrt() > r_infinity + eps {
                    continue;
                }
                let inside = dx.abs() < omega_radius - eps && dy.abs() < omega_radius - eps;
                let id = coords.len();
                coords.push(x);
                index.push([ix, iy]);
                is_interior.push(inside);
                if inside {
                    interior.push(id);
                } else {
                    exterior.push(id);
                }
                lookup[((iy - y_lo) * width + ix - x_lo) as usize] = Some(id);
            }
        }
        if interior.is_empty() {
            return Err(Error::Config("grid has no interior nodes".into()));
        }
        Ok(Self { spec, center, coords, index, interior, exterior, is_interior, lookup, origin: [x_lo, y_lo], width })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn dim(&self) -> usize {
        self.spec.dim
    }
    pub fn h(&self) -> f64 {
        self.spec.h
    }
    pub fn omega_radius(&self) -> f64 {
        self.spec.omega_radius
    }
    pub fn r_infinity(&self) -> f64 {
        self.spec.r_infinity
    }
    pub fn center(&self) -> [f64; 2] {
        self.center
    }
    pub fn len(&self) -> usize {
        self.coords.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
    /// Volume `h^d` attached to each node.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim() as i32)
    }
    pub fn coord(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }
    pub fn int_index(&self, i: usize) -> [i64; 2] {
        self.index[i]
    }
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }
    pub fn exterior(&self) -> &[usize] {
        &self.exterior
    }
    pub fn is_interior(&self, i: usize) -> bool {
        self.is_interior[i]
    }

    /// Node with the given integer coordinates, if present.
    pub fn node_at_index(&self, ix: i64, iy: i64) -> Option<usize> {
        let (cx, cy) = (ix - self.origin[0], iy - self.origin[1]);
        if cx < 0 || cy < 0 || cx >= self.width {
            return None;
        }
        self.lookup.get((cy * self.width + cx) as usize).copied().flatten()
    }

    /// Node nearest to `x` (rounded to the lattice), if it lies on the grid.
    pub fn nearest_node(&self, x: [f64; 2]) -> Option<usize> {
        let h = self.h();
        let ix = (x[0] / h).round() as i64;
        let iy = if self.dim() == 2 { (x[1] / h).round() as i64 } else { 0 };
        self.node_at_index(ix, iy)
    }

    pub fn distance(&self, i: usize, x0: [f64; 2]) -> f64 {
        let a = self.coords[i];
        let dx = a[0] - x0[0];
        let dy = a[1] - x0[1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Nodes of the open ball `B_r(x0)`, by centre-in-ball membership.
    pub fn ball(&self, x0: [f64; 2], r: f64) -> Vec<usize> {
        let eps = 1e-9 * self.h();
        (0..self.len()).filter(|&i| self.distance(i, x0) < r - eps).collect()
    }

    /// Nodes of the closed ball `{|x − x0| <= r}`.
    pub fn closed_ball(&self, x0: [f64; 2], r: f64) -> Vec<usize> {
        let eps = 1e-9 * self.h();
        (0..self.len()).filter(|&i| self.distance(i, x0) <= r + eps).collect()
    }

    /// Distance from `x` to the complement of the box `Ω` (zero outside it).
    pub fn dist_to_boundary(&self, x: [f64; 2]) -> f64 {
        let rho = self.omega_radius();
        let mut d = rho - (x[0] - self.center[0]).abs();
        if self.dim() == 2 {
            d = d.min(rho - (x[1] - self.center[1]).abs());
        }
        d.max(0.0)
    }

    /// Distance from `x` to the edge of the represented region `B_{R∞}`.
    pub fn dist_to_truncation(&self, x: [f64; 2]) -> f64 {
        let dx = x[0] - self.center[0];
        let dy = if self.dim() == 2 { x[1] - self.center[1] } else { 0.0 };
        (self.r_infinity() - (dx * dx + dy * dy).sqrt()).max(0.0)
    }

    /// `|B_1|` in this dimension.
    pub fn unit_ball_volume(&self) -> f64 {
        if self.dim() == 1 {
            2.0
        } else {
            std::f64::consts::PI
        }
    }

    /// Lebesgue measure of `Ω`.
    pub fn omega_measure(&self) -> f64 {
        (2.0 * self.omega_radius()).powi(self.dim() as i32)
    }

    pub fn pair_weights(&self, s: f64) -> Result<QuadratureTable> {
        QuadratureTable::new(self, s)
    }
}

impl Serialize for GridDomain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridDomain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        GridDomain::new(GridSpec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Pair weights `w_ij = (1−s) h^{2d} |x_i − x_j|^{-d}` together with
/// `|x_i − x_j|^s`, tabulated by integer offset so that `w_ij = w_ji` holds
/// bit for bit.
#[derive(Debug, Clone)]
pub struct QuadratureTable {
    s: f64,
    dim: usize,
    reach: i64,
    weights: Vec<f64>,
    dist_pow_s: Vec<f64>,
}

impl QuadratureTable {
    pub fn new(dom: &GridDomain, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!("s must lie in (0, 1), got {s}")));
        }
        let dim = dom.dim();
        let h = dom.h();
        let reach = {
            let (mut lo, mut hi) = ([i64::MAX; 2], [i64::MIN; 2]);
            for idx in &dom.index {
                for a in 0..2 {
                    lo[a] = lo[a].min(idx[a]);
                    hi[a] = hi[a].max(idx[a]);
                }
            }
            (hi[0] - lo[0]).max(hi[1] - lo[1])
        };
        let side = (2 * reach + 1) as usize;
        let len = if dim == 1 { side } else { side * side };
        let hd2 = h.powi(2 * dim as i32);
        let mut weights = vec![0.0; len];
        let mut dist_pow_s = vec![0.0; len];
        for slot in 0..len {
            let (dx, dy) = if dim == 1 {
                (slot as i64 - reach, 0)
            } else {
                ((slot % side) as i64 - reach, (slot / side) as i64 - reach)
            };
            if dx == 0 && dy == 0 {
                continue;
            }
            let r = h * ((dx * dx + dy * dy) as f64).sqrt();
            weights[slot] = (1.0 - s) * hd2 / r.powi(dim as i32);
            dist_pow_s[slot] = r.powf(s);
        }
        Ok(Self { s, dim, reach, weights, dist_pow_s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    #[inline]
    fn slot(&self, a: [i64; 2], b: [i64; 2]) -> usize {
        let side = 2 * self.reach + 1;
        let dx = a[0] - b[0] + self.reach;
        if self.dim == 1 {
            dx as usize
        } else {
            ((a[1] - b[1] + self.reach) * side + dx) as usize
        }
    }

    /// `(w_ij, |x_i − x_j|^s)` for `i != j`; `None` on the diagonal.
    #[inline]
    pub fn pair(&self, dom: &GridDomain, i: usize, j: usize) -> Option<(f64, f64)> {
        if i == j {
            return None;
        }
        let k = self.slot(dom.index[i], dom.index[j]);
        Some((self.weights[k], self.dist_pow_s[k]))
    }

    pub fn weight(&self, dom: &GridDomain, i: usize, j: usize) -> Option<f64> {
        self.pair(dom, i, j).map(|(w, _)| w)
    }
}

/// Real values on every node of a [`GridDomain`]; cloning is cheap and
/// mutation copies on write.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Arc<GridDomain>,
    values: Arc<Vec<f64>>,
}

impl GridFunction {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Domain(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at node {i}")));
        }
        Ok(Self { domain, values: Arc::new(values) })
    }

    pub fn from_fn(domain: Arc<GridDomain>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = domain.coords.iter().map(|&x| f(x)).collect();
        Self::new(domain, values)
    }

    pub fn constant(domain: Arc<GridDomain>, c: f64) -> Result<Self> {
        let n = domain.len();
        Self::new(domain, vec![c; n])
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }
    pub fn values_mut(&mut self) -> &mut Vec<f64> {
        Arc::make_mut(&mut self.values)
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.domain.interior.iter().map(|&i| self.values[i]).collect()
    }

    /// Copy with the interior replaced by `vals` (in [`GridDomain::interior`] order).
    pub fn with_interior(&self, vals: &[f64]) -> Result<Self> {
        if vals.len() != self.domain.interior.len() {
            return Err(Error::Domain("interior vector has the wrong length".into()));
        }
        let mut out = self.clone();
        let v = out.values_mut();
        for (&i, &x) in self.domain.interior.iter().zip(vals) {
            v[i] = x;
        }
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite interior value".into()));
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.domain.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn same_domain(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || self.domain == other.domain
    }

    pub fn sup_abs(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&i| self.values[i].abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `x[,y],value`; floats use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.domain.dim();
        writeln!(w, "{}", if dim == 1 { "x,value" } else { "x,y,value" })?;
        for (i, x) in self.domain.coords.iter().enumerate() {
            if dim == 1 {
                writeln!(w, "{},{}", x[0], self.values[i])?;
            } else {
                writeln!(w, "{},{},{}", x[0], x[1], self.values[i])?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(domain: Arc<GridDomain>, r: R) -> Result<Self> {
        let dim = domain.dim();
        let mut values = vec![f64::NAN; domain.len()];
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != dim + 1 {
                return Err(Error::Domain(format!("line {}: expected {} columns", lineno + 1, dim + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Domain(format!("line {}: {e}", lineno + 1)))
            };
            let x = [parse(cols[0])?, if dim == 2 { parse(cols[1])? } else { 0.0 }];
            let i = domain
                .nearest_node(x)
                .ok_or_else(|| Error::Domain(format!("line {}: ({}, {}) is not a grid node", lineno + 1, x[0], x[1])))?;
            values[i] = parse(cols[dim])?;
        }
        Self::new(domain, values)
    }

    /// Compact binary form: magic `NLGF`, `u32` version, `u32` dim, `u64`
    /// count, then the values as little-endian `f64` in node order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"NLGF")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.domain.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in self.values.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(domain: Arc<GridDomain>, mut r: R) -> Result<Self> {
        let mut head = [0u8; 20];
        r.read_exact(&mut head)?;
        if &head[..4] != b"NLGF" {
            return Err(Error::Domain("not a grid function file".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        let dim = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(head[12..20].try_into().unwrap()) as usize;
        if version != 1 || dim != domain.dim() || count != domain.len() {
            return Err(Error::Domain(format!(
                "binary header (version {version}, dim {dim}, {count} values) does not match the grid"
            )));
        }
        let mut values = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        Self::new(domain, values)
    }
}

/// `A_k^+ = {u > k}` and `A_k^- = {u < k}` as node lists.
pub fn level_sets(u: &GridFunction, k: f64) -> (Vec<usize>, Vec<usize>) {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (i, &v) in u.values().iter().enumerate() {
        if v > k {
            plus.push(i);
        } else if v < k {
            minus.push(i);
        }
    }
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_counts() {
        let dom = build_grid(1, 0.25, 1.0, 8.0).unwrap();
        assert_eq!(dom.interior().len(), 7);
        assert_eq!(dom.len(), 65);
        assert_eq!(dom.exterior().len(), 58);
        assert!(dom.interior().iter().all(|&i| dom.coord(i)[0].abs() < 1.0));
    }

    #[test]
    fn two_dimensional_interior_is_a_box() {
        let dom = build_grid(2, 0.5, 1.0, 4.0).unwrap();
        for i in 0..dom.len() {
            let x = dom.coord(i);
            assert_eq!(dom.is_interior(i), x[0].abs() < 1.0 && x[1].abs() < 1.0);
        }
        assert_eq!(dom.interior().len(), 9);
    }

    #[test]
    fn truncation_radius_is_validated() {
        assert!(matches!(build_grid(1, 0.25, 1.0, 2.0), Err(Error::Config(_))));
        assert!(matches!(build_grid(1, 0.6, 1.0, 8.0), Err(Error::Config(_))));
    }

    #[test]
    fn offset_box_holds_expected_nodes() {
        let spec = GridSpec { dim: 1, h: 0.2, omega_radius: 0.5, r_infinity: 2.0, omega_center: Some(vec![0.5]) };
        let dom = spec.build().unwrap();
        let xs: Vec<f64> = dom.interior().iter().map(|&i| dom.coord(i)[0]).collect();
        assert_eq!(xs.len(), 4);
        assert!((xs[0] - 0.2).abs() < 1e-15 && (xs[3] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn weights_formula_and_symmetry() {
        let dom = build_grid(1, 1.0, 2.5, 10.0).unwrap();
        let table = dom.pair_weights(0.5).unwrap();
        let a = dom.nearest_node([0.0, 0.0]).unwrap();
        let b = dom.nearest_node([2.0, 0.0]).unwrap();
        assert_eq!(table.weight(&dom, a, b), Some(0.25));
        assert_eq!(table.weight(&dom, a, a), None);
        let dom2 = build_grid(2, 0.5, 1.0, 4.0).unwrap();
        let t2 = dom2.pair_weights(0.3).unwrap();
        for i in 0..dom2.len() {
            for j in 0..dom2.len() {
                assert_eq!(t2.pair(&dom2, i, j), t2.pair(&dom2, j, i));
            }
        }
    }

    #[test]
    fn level_sets_are_strict() {
        let dom = Arc::new(build_grid(1, 0.25, 1.0, 4.0).unwrap());
        let zero = GridFunction::constant(dom.clone(), 0.0).unwrap();
        assert_eq!(level_sets(&zero, 1.0), (vec![], (0..dom.len()).collect()));
        assert_eq!(level_sets(&zero, 0.0), (vec![], vec![]));
        let id = GridFunction::from_fn(dom.clone(), |x| x[0]).unwrap();
        let (plus, minus) = level_sets(&id, 0.0);
        assert!(plus.iter().all(|&i| dom.coord(i)[0] > 0.0));
        assert!(minus.iter().all(|&i| dom.coord(i)[0] < 0.0));
        assert_eq!(plus.len() + minus.len() + 1, dom.len());
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let dom = Arc::new(build_grid(2, 0.5, 1.0, 4.0).unwrap());
        let u = GridFunction::from_fn(dom.clone(), |x| (x[0] * 1.7).sin() + x[1] / 3.0).unwrap();
        let mut csv = Vec::new();
        u.write_csv(&mut csv).unwrap();
        assert_eq!(GridFunction::read_csv(dom.clone(), csv.as_slice()).unwrap(), u);
        let mut bin = Vec::new();
        u.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 20 + 8 * dom.len());
        assert_eq!(GridFunction::read_binary(dom, bin.as_slice()).unwrap(), u);
    }

    #[test]
    fn grid_spec_json() {
        let dom = build_grid(1, 0.25, 1.0, 8.0).unwrap();
        let json = serde_json::to_string(&dom).unwrap();
        assert_eq!(json, r#"{"dim":1,"h":0.25,"omega_radius":1.0,"R_infinity":8.0}"#);
        let back: GridDomain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, dom);
    }
}
