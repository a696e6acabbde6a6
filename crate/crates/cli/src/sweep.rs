//! Parameter sweeps: one run per value, merged into `sweep.csv` and `sweep.json`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig, SValues, Task};
use crate::error::CliError;
use crate::run::{execute, Report, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    S,
    Delta,
    H,
    P,
    Q,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::S => "s",
            SweepParam::Delta => "delta",
            SweepParam::H => "h",
            SweepParam::P => "p",
            SweepParam::Q => "q",
        }
    }

    /// Returns `config` with the parameter set to `v`.
    pub fn apply(self, config: &ExperimentConfig, v: f64) -> Result<ExperimentConfig, CliError> {
        let mut c = config.clone();
        match self {
            SweepParam::S => c.s = Some(SValues::One(v)),
            SweepParam::Delta => c.deltas = Some(vec![v]),
            SweepParam::H => match &mut c.grid {
                Some(g) => g.h = v,
                None => return Err(CliError::Schema("an h sweep needs a `grid`".into())),
            },
            SweepParam::P => c.growth.params.p = Some(v),
            SweepParam::Q => c.growth.params.q = Some(v),
        }
        Ok(c)
    }
}

impl FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "s" => Ok(SweepParam::S),
            "delta" => Ok(SweepParam::Delta),
            "h" => Ok(SweepParam::H),
            "p" => Ok(SweepParam::P),
            "q" => Ok(SweepParam::Q),
            _ => Err(CliError::Schema(format!("unknown sweep parameter `{s}`; expected s, delta, h, p or q"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One swept value. `report` is absent when the modified config did not validate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub value: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Report>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepReport {
    pub task: Task,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    pub fn failed(&self) -> usize {
        self.entries.iter().filter(|e| e.status == Status::Error).count()
    }
}

/// Task-specific metric columns of `sweep.csv`.
pub fn metric_columns(task: Task) -> &'static [&'static str] {
    match task {
        Task::GrowthCheck => &["p_est", "q_est", "all_passed"],
        Task::Minimize => &["energy", "iterations", "residual"],
        Task::DgCheck => &["c_empirical", "infinite_samples"],
        Task::Holder => &["alpha_hat", "c_fit", "c_empirical"],
        Task::Bound => &["c_fit", "p_star"],
        Task::Inequalities => &["sobolev_ratio", "isoperimetric_c_min"],
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn metric_rows(task: Task, report: &Report) -> Vec<(String, Vec<String>)> {
    if task == Task::GrowthCheck {
        let g = report.growth_check.as_ref();
        return vec![(
            String::new(),
            vec![opt(g.map(|g| g.p_est)), opt(g.map(|g| g.q_est)), opt(g.map(|g| g.all_passed()))],
        )];
    }
    report
        .runs
        .iter()
        .map(|r| {
            let cells = match task {
                Task::GrowthCheck => unreachable!(),
                Task::Minimize => vec![
                    r.energy.to_string(),
                    opt(r.solve.as_ref().map(|s| s.iterations)),
                    opt(r.residual),
                ],
                Task::DgCheck => vec![
                    opt(r.membership.as_ref().map(|m| m.c_empirical)),
                    opt(r.membership.as_ref().map(|m| m.infinite_samples)),
                ],
                Task::Holder => vec![
                    opt(r.holder.as_ref().map(|h| h.alpha.alpha_hat)),
                    opt(r.holder.as_ref().map(|h| h.c_fit)),
                    opt(r.membership.as_ref().map(|m| m.c_empirical)),
                ],
                Task::Bound => vec![
                    opt(r.local_bound.as_ref().map(|b| b.c_fit)),
                    opt(r.local_bound.as_ref().map(|b| b.p_star)),
                ],
                Task::Inequalities => vec![
                    opt(r.sobolev.as_ref().map(|s| s.ratio)),
                    opt(r.isoperimetric.as_ref().and_then(|o| match o {
                        nonlocal_pq::regularity::IsoperimetricOutcome::Evaluated { c_min, .. } => Some(*c_min),
                        _ => None,
                    })),
                ],
            };
            (r.s.to_string(), cells)
        })
        .collect()
}

/// `sweep.csv`: one row per run (one per `s` in each sub-report), or one
/// row for a sub-run that failed before producing any run. Columns are
/// `<param>,s,status,<metrics>,error`, without the `s` column in an `s` sweep.
pub fn sweep_csv(rep: &SweepReport) -> String {
    let metrics = metric_columns(rep.task);
    let with_s = rep.param != SweepParam::S;
    let s_col = if with_s { "s," } else { "" };
    let mut out = format!("{},{s_col}status,{},error\n", rep.param.name(), metrics.join(","));
    for e in &rep.entries {
        let status = if e.status == Status::Ok { "ok" } else { "error" };
        let err = csv_escape(e.error.as_deref().unwrap_or(""));
        let rows = e.report.as_ref().map(|r| metric_rows(rep.task, r)).unwrap_or_default();
        if rows.is_empty() {
            let blanks = vec![String::new(); metrics.len()];
            let s = if with_s { "," } else { "" };
            out.push_str(&format!("{},{s}{status},{},{err}\n", e.value, blanks.join(",")));
        }
        for (s, cells) in rows {
            let s = if with_s { format!("{s},") } else { String::new() };
            out.push_str(&format!("{},{s}{status},{},{err}\n", e.value, cells.join(",")));
        }
    }
    out
}

fn run_value(config: &ExperimentConfig, param: SweepParam, v: f64) -> SweepEntry {
    let exp = match param.apply(config, v).and_then(Experiment::validate) {
        Ok(exp) => exp,
        Err(e) => return SweepEntry { value: v, status: Status::Error, error: Some(e.to_string()), report: None },
    };
    let outcome = execute(&exp);
    SweepEntry {
        value: v,
        status: outcome.report.status,
        error: outcome.report.error.clone(),
        report: Some(outcome.report),
    }
}

/// Runs every value in parallel and merges the results in the order given.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<SweepReport, CliError> {
    let task = config.task.ok_or_else(|| CliError::Schema("a sweep needs `task` in the config".into()))?;
    if values.is_empty() {
        return Err(CliError::Schema("the sweep values list is empty".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Schema(format!("sweep value {v} is not finite")));
    }
    let entries = values.par_iter().map(|&v| run_value(config, param, v)).collect();
    Ok(SweepReport { task, param, values: values.to_vec(), entries })
}

pub fn write_sweep(dir: &Path, rep: &SweepReport) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(rep).expect("sweep reports serialize");
    json.push('\n');
    std::fs::write(dir.join("sweep.json"), json)?;
    std::fs::write(dir.join("sweep.csv"), sweep_csv(rep))?;
    Ok(())
}

/// Parses a comma-separated list of numbers.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::Schema(format!("sweep value `{t}` is not a number"))))
        .collect()
}
