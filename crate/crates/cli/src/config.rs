//! Experiment configuration: the JSON schema and its validation.

use std::path::PathBuf;
use std::sync::Arc;

use nonlocal_pq::domain::{GridDomain, GridFunction, GridSpec};
use nonlocal_pq::growth::{GrowthFunction, GrowthSpec};
use nonlocal_pq::kernel::KernelCoefficient;
use nonlocal_pq::regularity::IsoperimetricParams;
use nonlocal_pq::solve::{SolveOptions, StructureFunction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    GrowthCheck,
    Minimize,
    DgCheck,
    Holder,
    Bound,
    Inequalities,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::GrowthCheck => "growth-check",
            Task::Minimize => "minimize",
            Task::DgCheck => "dg-check",
            Task::Holder => "holder",
            Task::Bound => "bound",
            Task::Inequalities => "inequalities",
        }
    }
}

/// A single fractional order or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SValues {
    One(f64),
    Many(Vec<f64>),
}

impl SValues {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            SValues::One(s) => vec![*s],
            SValues::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureSpec {
    /// `h(x, y, t) = sign(t) f'(|t|) k(x, y)`
    EulerLagrange,
    /// `h(x, y, t) = c sign(t) f'(|t|)`
    Scaled { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_tol() -> f64 {
    SolveOptions::default().tol
}

fn default_max_iterations() -> usize {
    SolveOptions::default().max_iterations
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tol: default_tol(), max_iterations: default_max_iterations() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalitySpec {
    /// Exponent of the Sobolev and isoperimetric checks; `p_lower` of the growth by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Evaluate the checks on this expression instead of a computed minimizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    pub h_level: f64,
    pub k_level: f64,
    pub gamma: f64,
    pub gamma0: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional in the file when the task comes from the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub growth: GrowthSpec,
    #[serde(default = "default_kernel")]
    pub kernel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<SValues>,
    /// Lower end of the admissible range `(s_min, 1)`.
    #[serde(default = "default_s_min")]
    pub s_min: f64,
    /// Exterior data; also the initial guess inside `Ω` unless `initial` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exterior: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub big_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// Number of De Giorgi samples.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<InequalitySpec>,
}

fn default_kernel() -> String {
    "one".into()
}

fn default_s_min() -> f64 {
    0.01
}

fn default_samples() -> usize {
    50
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// A configuration with every object built and every task requirement checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub task: Task,
    pub growth: GrowthFunction,
    pub kernel: KernelCoefficient,
    pub structure: Option<StructureFunction>,
    pub domain: Option<Arc<GridDomain>>,
    pub s_values: Vec<f64>,
    pub exterior: Option<Expr>,
    pub initial: Option<Expr>,
    pub solver: SolveOptions,
    pub x0: [f64; 2],
    pub big_r: Option<f64>,
    pub deltas: Vec<f64>,
    pub inequality: Option<(IsoperimetricParams, Option<f64>, Option<Expr>)>,
}

fn schema<T>(r: nonlocal_pq::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Schema(e.to_string()))
}

fn need<T: Clone>(v: &Option<T>, field: &str, task: Task) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Schema(format!("task {} needs `{field}`", task.name())))
}

impl Experiment {
    pub fn validate(config: ExperimentConfig) -> Result<Self, CliError> {
        let task = config.task.ok_or_else(|| CliError::Schema("no task given in the config or on the command line".into()))?;
        let growth = schema(GrowthFunction::from_spec(&config.growth))?;
        let kernel: KernelCoefficient = schema(config.kernel.parse())?;
        let structure = match &config.structure {
            None => None,
            Some(StructureSpec::EulerLagrange) => Some(StructureFunction::euler_lagrange(&growth, &kernel)),
            Some(StructureSpec::Scaled { c }) => Some(schema(StructureFunction::scaled(&growth, *c))?),
        };
        if !(config.s_min > 0.0 && config.s_min < 1.0) {
            return Err(CliError::Schema(format!("s_min must lie in (0, 1), got {}", config.s_min)));
        }
        if !(config.solver.tol > 0.0) || config.solver.max_iterations == 0 {
            return Err(CliError::Schema("solver tolerance and iteration cap must be positive".into()));
        }
        let solver = SolveOptions { tol: config.solver.tol, max_iterations: config.solver.max_iterations };

        let mut exp = Experiment {
            task,
            growth,
            kernel,
            structure,
            domain: None,
            s_values: Vec::new(),
            exterior: None,
            initial: None,
            solver,
            x0: [0.0; 2],
            big_r: config.big_r,
            deltas: Vec::new(),
            inequality: None,
            config: config.clone(),
        };
        if task == Task::GrowthCheck {
            return Ok(exp);
        }

        let grid = need(&config.grid, "grid", task)?;
        let domain = Arc::new(schema(grid.build())?);
        let s_values = need(&config.s, "s", task)?.to_vec();
        if s_values.is_empty() {
            return Err(CliError::Schema("`s` must not be an empty list".into()));
        }
        for &s in &s_values {
            if !(s > config.s_min && s < 1.0) {
                return Err(CliError::Schema(format!("s = {s} lies outside ({}, 1)", config.s_min)));
            }
        }
        exp.x0 = match &config.x0 {
            None => domain.center(),
            Some(v) if v.len() == domain.dim() && v.iter().all(|c| c.is_finite()) => {
                let mut x = [0.0; 2];
                x[..v.len()].copy_from_slice(v);
                x
            }
            Some(v) => return Err(CliError::Schema(format!("x0 must have {} finite coordinates, got {v:?}", domain.dim()))),
        };
        if let Some(r) = config.big_r {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::Schema(format!("R must be positive, got {r}")));
            }
        }
        exp.initial = config.initial.as_deref().map(Expr::parse).transpose()?;
        exp.exterior = config.exterior.as_deref().map(Expr::parse).transpose()?;

        match task {
            Task::GrowthCheck | Task::Minimize => {}
            Task::DgCheck => {
                if config.samples == 0 {
                    return Err(CliError::Schema("`samples` must be positive".into()));
                }
            }
            Task::Holder => {
                need(&config.big_r, "R", task)?;
            }
            Task::Bound => {
                need(&config.big_r, "R", task)?;
                let deltas = need(&config.deltas, "deltas", task)?;
                if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                    return Err(CliError::Schema(format!("`deltas` must be a nonempty list of positive numbers, got {deltas:?}")));
                }
                exp.deltas = deltas;
            }
            Task::Inequalities => {
                need(&config.big_r, "R", task)?;
                let spec = need(&config.inequalities, "inequalities", task)?;
                let params = IsoperimetricParams {
                    h_level: spec.h_level,
                    k_level: spec.k_level,
                    gamma: spec.gamma,
                    gamma0: spec.gamma0,
                    c0: spec.c0,
                };
                if !(params.k_level > params.h_level) {
                    return Err(CliError::Schema("inequalities: need k_level > h_level".into()));
                }
                let function = spec.function.as_deref().map(Expr::parse).transpose()?;
                exp.inequality = Some((params, spec.p, function));
            }
        }
        let solves = !matches!(&exp.inequality, Some((_, _, Some(_))));
        if solves && exp.exterior.is_none() {
            return Err(CliError::Schema(format!("task {} needs `exterior`", task.name())));
        }
        exp.domain = Some(domain);
        exp.s_values = s_values;
        Ok(exp)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        self.domain.as_ref().expect("validated grid")
    }

    /// Initial guess: `initial` inside `Ω` (or the exterior data when absent)
    /// and the exterior data outside.
    pub fn initial_guess(&self) -> Result<GridFunction, CliError> {
        let dom = self.domain();
        let ext = self.exterior.as_ref().expect("validated exterior data");
        let init = self.initial.as_ref().unwrap_or(ext);
        let vals: Vec<f64> = (0..dom.len())
            .map(|i| {
                let x = dom.coord(i);
                if dom.is_interior(i) {
                    init.eval(x)
                } else {
                    ext.eval(x)
                }
            })
            .collect();
        GridFunction::new(dom.clone(), vals).map_err(|e| CliError::Schema(format!("initial data: {e}")))
    }

    pub fn structure_or_default(&self) -> StructureFunction {
        self.structure.clone().unwrap_or_else(|| StructureFunction::euler_lagrange(&self.growth, &self.kernel))
    }
}
