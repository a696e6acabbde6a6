//! Task pipelines and the report/CSV artifacts they produce.

use std::fmt::Write as _;
use std::path::Path;

use nonlocal_pq::degiorgi::{dg_membership, CaccioppoliReport, MembershipReport, SampleSpec, Sign};
use nonlocal_pq::domain::GridFunction;
use nonlocal_pq::energy::{energy_if, luxemburg_norm, modular, tail_fprime, ModularKind};
use nonlocal_pq::growth::lemmas::{run_lemma_suite, standard_grid, LemmaReport};
use nonlocal_pq::regularity::{
    isoperimetric_check, sobolev_embedding_check, sobolev_exponent, verify_holder_bound, verify_local_bound,
    HolderCheck, IsoperimetricOutcome, LocalBoundCheck, SobolevCheck,
};
use nonlocal_pq::solve::{minimize, residual_norm, SolveReport};
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig, Task};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

/// Top-level `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub task: Task,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_check: Option<LemmaReport>,
    #[serde(default)]
    pub runs: Vec<RunReport>,
}

/// Summary of a De Giorgi membership run; the per-sample rows go to `samples.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipSummary {
    pub samples: usize,
    pub seed: u64,
    #[serde(with = "nonlocal_pq::serde_float")]
    pub c_empirical: f64,
    pub infinite_samples: usize,
    pub worst_sample: CaccioppoliReport,
}

/// Everything computed for one value of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveReport>,
    /// `max_i |⟨E, φ_i⟩| / h^d` for the configured structure function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// `Φ_{L^f(Ω)}(u)`
    pub modular: f64,
    /// Luxemburg norm `‖u‖_{L^f(Ω)}`
    pub norm: f64,
    pub energy: f64,
    pub tail_x0: [f64; 2],
    #[serde(rename = "tail_R")]
    pub tail_r: f64,
    pub tail: f64,
    #[serde(with = "nonlocal_pq::serde_float")]
    pub tail_upper_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership: Option<MembershipSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_bound: Option<LocalBoundCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<SobolevCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isoperimetric: Option<IsoperimetricOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A CSV file assembled in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub body: String,
}

impl Table {
    fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Self { name, header, body: String::new() }
    }

    fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn contents(&self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }
}

pub const SOLUTION_COLUMNS: &[&str] = &["s", "x", "y", "u"];
pub const SAMPLES_COLUMNS: &[&str] =
    &["s", "x0", "y0", "r", "R", "k", "sign", "lhs_seminorm", "lhs_cross", "rhs_local", "rhs_tail", "c_min"];
pub const OSC_COLUMNS: &[&str] = &["s", "radius", "oscillation"];
pub const BOUND_COLUMNS: &[&str] = &["s", "delta", "lhs", "tail", "mean_term", "c_needed", "rhs"];

/// Result of executing a task: the report, the CSV tables, and the error
/// that stopped the run early, if any.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
    pub failure: Option<CliError>,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

struct Tables {
    solution: Table,
    samples: Table,
    osc: Table,
    bound: Table,
}

impl Tables {
    fn new() -> Self {
        Self {
            solution: Table::new("solution.csv", SOLUTION_COLUMNS),
            samples: Table::new("samples.csv", SAMPLES_COLUMNS),
            osc: Table::new("osc_decay.csv", OSC_COLUMNS),
            bound: Table::new("bound.csv", BOUND_COLUMNS),
        }
    }

    fn for_task(self, task: Task) -> Vec<Table> {
        let Tables { solution, samples, osc, bound } = self;
        match task {
            Task::GrowthCheck => vec![],
            Task::Minimize | Task::Inequalities => vec![solution],
            Task::DgCheck => vec![solution, samples],
            Task::Holder => vec![solution, samples, osc],
            Task::Bound => vec![solution, bound],
        }
    }

    fn solution(&mut self, s: f64, u: &GridFunction) {
        let dom = u.domain();
        for i in 0..dom.len() {
            let x = dom.coord(i);
            self.solution.row(&[num(s), num(x[0]), num(x[1]), num(u.value(i))]);
        }
    }

    fn samples(&mut self, s: f64, m: &MembershipReport) {
        for r in &m.samples {
            self.samples.row(&[
                num(s),
                num(r.x0[0]),
                num(r.x0[1]),
                num(r.r),
                num(r.big_r),
                num(r.k_level),
                sign_name(r.sign).into(),
                num(r.lhs_seminorm),
                num(r.lhs_cross),
                num(r.rhs_local),
                num(r.rhs_tail),
                num(r.c_min),
            ]);
        }
    }
}

/// Executes the validated experiment; never writes to disk.
pub fn execute(exp: &Experiment) -> Outcome {
    let mut report = Report {
        task: exp.task,
        status: Status::Ok,
        error: None,
        config: exp.config.clone(),
        growth_check: None,
        runs: Vec::new(),
    };
    let mut tables = Tables::new();
    let failure = if exp.task == Task::GrowthCheck {
        match run_lemma_suite(&exp.growth, &standard_grid()) {
            Ok(r) => {
                report.growth_check = Some(r);
                None
            }
            Err(e) => Some(CliError::from(e)),
        }
    } else {
        exp.s_values.iter().find_map(|&s| match run_one(exp, s, &mut tables) {
            Ok(r) => {
                report.runs.push(r);
                None
            }
            Err(e) => Some(e),
        })
    };
    if let Some(e) = &failure {
        report.status = Status::Error;
        report.error = Some(e.to_string());
    }
    Outcome { report, tables: tables.for_task(exp.task), failure }
}

fn run_one(exp: &Experiment, s: f64, tables: &mut Tables) -> Result<RunReport, CliError> {
    let gf = &exp.growth;
    let dom = exp.domain();
    let fixed = exp.inequality.as_ref().and_then(|(_, _, f)| f.as_ref());
    let (u, solve, residual) = match fixed {
        Some(expr) => (GridFunction::from_fn(dom.clone(), |x| expr.eval(x))?, None, None),
        None => {
            let u0 = exp.initial_guess()?;
            let (u, rep) = minimize(gf, &exp.kernel, &u0, s, exp.solver)?;
            let res = residual_norm(&exp.structure_or_default(), &u, s)?;
            (u, Some(rep), Some(res))
        }
    };
    tables.solution(s, &u);

    let tail_r = exp.big_r.unwrap_or_else(|| dom.dist_to_boundary(exp.x0));
    let tail = tail_fprime(gf, &u, exp.x0, tail_r, s)?;
    let lf = ModularKind::lf_omega(dom);
    let mut run = RunReport {
        s,
        solve,
        residual,
        modular: modular(&lf, gf, &u)?,
        norm: luxemburg_norm(&lf, gf, &u)?,
        energy: energy_if(gf, &exp.kernel, &u, s)?,
        tail_x0: exp.x0,
        tail_r,
        tail: tail.value,
        tail_upper_bound: tail.upper_bound,
        membership: None,
        holder: None,
        local_bound: None,
        sobolev: None,
        isoperimetric: None,
        notes: Vec::new(),
    };

    if matches!(exp.task, Task::DgCheck | Task::Holder) {
        let seed = exp.config.seed;
        let m = dg_membership(gf, &u, s, &SampleSpec::new(exp.config.samples, seed))?;
        tables.samples(s, &m);
        run.membership = Some(MembershipSummary {
            samples: m.samples.len(),
            seed,
            c_empirical: m.c_empirical,
            infinite_samples: m.infinite_samples,
            worst_sample: m.worst_sample.clone(),
        });
    }
    let big_r = exp.big_r.unwrap_or(tail_r);
    match exp.task {
        Task::Holder => {
            let h = verify_holder_bound(gf, &u, s, exp.x0, big_r)?;
            for &(rad, osc) in &h.alpha.osc_decay {
                tables.osc.row(&[num(s), num(rad), num(osc)]);
            }
            run.holder = Some(h);
        }
        Task::Bound => {
            let b = verify_local_bound(gf, &u, s, exp.x0, big_r, &exp.deltas)?;
            for r in &b.rows {
                tables.bound.row(&[num(s), num(r.delta), num(r.lhs), num(r.tail), num(r.mean_term), num(r.c_needed), num(r.rhs)]);
            }
            run.local_bound = Some(b);
        }
        Task::Inequalities => {
            let (params, p, _) = exp.inequality.as_ref().expect("validated inequalities block");
            let p = p.unwrap_or(gf.p_lower());
            if sobolev_exponent(dom.dim(), s, p).is_some() {
                run.sobolev = Some(sobolev_embedding_check(&u, s, p, exp.x0, big_r)?);
            } else {
                run.notes.push(format!("Sobolev embedding skipped: s·p = {} is not below d = {}", s * p, dom.dim()));
            }
            run.isoperimetric = Some(isoperimetric_check(&u, s, p, exp.x0, big_r, params)?);
        }
        _ => {}
    }
    Ok(run)
}

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes `report.json` and the task's CSV files into `dir`.
pub fn write_outcome(dir: &Path, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report_json(&outcome.report))?;
    for t in &outcome.tables {
        std::fs::write(dir.join(t.name), t.contents())?;
    }
    Ok(())
}

/// Validates, executes and writes; the returned error carries the exit status.
pub fn run(config: ExperimentConfig, dir: &Path) -> Result<Report, CliError> {
    let exp = Experiment::validate(config)?;
    let outcome = execute(&exp);
    write_outcome(dir, &outcome)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(outcome.report),
    }
}

/// One-line human summary of a finished report.
pub fn summary(report: &Report) -> String {
    let mut out = format!("{}: {}", report.task.name(), if report.status == Status::Ok { "ok" } else { "error" });
    if let Some(g) = &report.growth_check {
        let _ = write!(out, " p_est={} q_est={} all_passed={}", g.p_est, g.q_est, g.all_passed());
    }
    for r in &report.runs {
        let _ = write!(out, "\n  s={} energy={}", r.s, r.energy);
        if let Some(m) = &r.membership {
            let _ = write!(out, " c_empirical={}", m.c_empirical);
        }
        if let Some(h) = &r.holder {
            let _ = write!(out, " alpha_hat={} c_fit={}", h.alpha.alpha_hat, h.c_fit);
        }
        if let Some(b) = &r.local_bound {
            let _ = write!(out, " bound_c_fit={}", b.c_fit);
        }
    }
    out
}
