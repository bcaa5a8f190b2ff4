//! Outer block-coordinate loop and the benchmark schemes.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::LosModel;
use crate::error::{Error, Result};
use crate::model::{feasibility_audit, init_solution_under, objective_under, AuditReport, DecisionVariables, Scenario};
use crate::subproblems::{
    restoration_options, solve_horizontal, solve_horizontal_with, solve_power, solve_scheduling, solve_vertical,
    solve_vertical_with, BlockOutcome, AUDIT_TOL,
};

/// Allowed drop of the exact objective between iterations before the run
/// is aborted.
pub const MONOTONE_TOL: f64 = 1e-7;

/// Cap on repeated trajectory steps inside one restoring iteration.
pub const RESTORATION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Scheme {
    #[serde(rename = "proposed")]
    Proposed,
    #[serde(rename = "npc")]
    Npc,
    #[serde(rename = "2d-los")]
    TwoDLos,
    #[serde(rename = "2d-plos")]
    TwoDPlos,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::Npc, Scheme::TwoDLos, Scheme::TwoDPlos];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Npc => "npc",
            Scheme::TwoDLos => "2d-los",
            Scheme::TwoDPlos => "2d-plos",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == key)
            .ok_or_else(|| {
                let names: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
                Error::Domain(format!("unknown scheme '{s}', expected one of: {}", names.join(", ")))
            })
    }
}

/// Which blocks a scheme optimizes and which link model it assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub optimize_power: bool,
    pub optimize_vertical: bool,
    pub force_los: bool,
}

impl From<Scheme> for SchemeConfig {
    fn from(scheme: Scheme) -> Self {
        SchemeConfig {
            scheme,
            optimize_power: scheme != Scheme::Npc,
            optimize_vertical: matches!(scheme, Scheme::Proposed | Scheme::Npc),
            force_los: scheme == Scheme::TwoDLos,
        }
    }
}

impl SchemeConfig {
    pub fn model(&self) -> LosModel {
        if self.force_los {
            LosModel::AlwaysLos
        } else {
            LosModel::Probabilistic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverOptions {
    /// Overrides the scenario's stopping threshold.
    pub epsilon: Option<f64>,
    /// Overrides the scenario's iteration cap.
    pub max_outer_iters: Option<usize>,
    /// SCA steps per block and outer iteration.
    pub inner_iters: usize,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions {
            epsilon: None,
            max_outer_iters: None,
            inner_iters: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Block {
    Scheduling,
    Power,
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based outer iteration.
    pub index: usize,
    /// Exact objective at the end of the iteration.
    pub objective: f64,
    /// Exact objective after each block that ran.
    pub after_block: Vec<(Block, f64)>,
    pub max_residual: f64,
    /// The iteration started from an infeasible iterate.
    pub restoring: bool,
    pub wall_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scheme: Scheme,
    pub scenario_digest: String,
    pub initial_objective: f64,
    pub records: Vec<IterationRecord>,
    pub solution: DecisionVariables,
    pub termination: Termination,
    /// Explanation when the run did not converge.
    pub diagnostic: Option<String>,
    pub audit: AuditReport,
    pub wall_s: f64,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn objective(&self) -> f64 {
        self.records.last().map_or(self.initial_objective, |r| r.objective)
    }

    /// Objective values of the iterations that started feasible.
    pub fn monotone_sequence(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            if !r.restoring {
                if out.is_empty() {
                    out.push(if i == 0 { self.initial_objective } else { self.records[i - 1].objective });
                }
                out.push(r.objective);
            }
        }
        out
    }
}

/// Starting iterate of a scheme.
pub fn initial_iterate(sc: &Scenario, cfg: &SchemeConfig) -> Result<DecisionVariables> {
    let mut dv = init_solution_under(sc, cfg.model())?;
    if !cfg.optimize_power {
        dv.p = vec![sc.p_ave; sc.n_slots];
    }
    Ok(dv)
}

pub fn optimize(sc: &Scenario, cfg: SchemeConfig) -> Result<RunReport> {
    optimize_with(sc, cfg, &DriverOptions::default())
}

/// Runs the block loop scheduling, power, horizontal, vertical until the
/// exact objective gains at most `epsilon` in one iteration.
///
/// An iteration that starts infeasible (a fixed-power scheme whose initial
/// orbit breaks the interference threshold) is a restoration step: after
/// the regular blocks it repeats the trajectory blocks until the iterate is
/// feasible, and it may lower the objective. From the first feasible
/// iterate on the objective never decreases.
pub fn optimize_with(sc: &Scenario, cfg: SchemeConfig, opts: &DriverOptions) -> Result<RunReport> {
    let started = Instant::now();
    let model = cfg.model();
    let eps = opts.epsilon.unwrap_or(sc.epsilon);
    let max_iters = opts.max_outer_iters.unwrap_or(sc.max_outer_iters);
    let inner = opts.inner_iters.max(1);

    let mut dv = initial_iterate(sc, &cfg)?;
    let initial_objective = objective_under(&dv, sc, model)?;
    let mut prev = initial_objective;
    let mut feasible = feasibility_audit(&dv, sc, model, AUDIT_TOL).feasible();
    let mut records = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut diagnostic = None;

    for index in 1..=max_iters {
        let t0 = Instant::now();
        let restoring = !feasible;
        let mut after_block = Vec::with_capacity(4);
        let mut any_accepted = false;
        let mut blocks = vec![Block::Scheduling];
        if cfg.optimize_power {
            blocks.push(Block::Power);
        }
        blocks.push(Block::Horizontal);
        if cfg.optimize_vertical {
            blocks.push(Block::Vertical);
        }
        for &block in &blocks {
            for _ in 0..inner {
                let out: BlockOutcome = match block {
                    Block::Scheduling => solve_scheduling(&dv, sc, model)?,
                    Block::Power => solve_power(&dv, sc, model)?,
                    Block::Horizontal => solve_horizontal(&dv, sc, model)?,
                    Block::Vertical => solve_vertical(&dv, sc, model)?,
                };
                if out.stalled {
                    log::debug!("{block:?} block solve ended with {:?}", out.status.status);
                }
                any_accepted |= out.accepted;
                dv = out.dv;
            }
            after_block.push((block, objective_under(&dv, sc, model)?));
        }
        if restoring {
            let trajectory: Vec<Block> = blocks
                .iter()
                .copied()
                .filter(|b| matches!(b, Block::Horizontal | Block::Vertical))
                .collect();
            let loose = restoration_options();
            for _ in 0..RESTORATION_STEPS {
                if feasibility_audit(&dv, sc, model, AUDIT_TOL).feasible() {
                    break;
                }
                let mut moved = false;
                for &block in &trajectory {
                    let out = match block {
                        Block::Horizontal => solve_horizontal_with(&dv, sc, model, &loose)?,
                        _ => solve_vertical_with(&dv, sc, model, &loose)?,
                    };
                    moved |= out.accepted;
                    any_accepted |= out.accepted;
                    dv = out.dv;
                }
                if !moved {
                    break;
                }
            }
        }
        let obj = objective_under(&dv, sc, model)?;
        let audit = feasibility_audit(&dv, sc, model, AUDIT_TOL);
        feasible = audit.feasible();
        records.push(IterationRecord {
            index,
            objective: obj,
            after_block,
            max_residual: audit.max_residual(),
            restoring,
            wall_s: t0.elapsed().as_secs_f64(),
        });
        log::info!("{} iteration {index}: objective {obj:.9}, feasible {feasible}", cfg.scheme);

        if !restoring && obj < prev - MONOTONE_TOL {
            termination = Termination::Stalled;
            diagnostic = Some(format!(
                "objective dropped from {prev} to {obj} at iteration {index}; a surrogate is not a lower bound"
            ));
            break;
        }
        if feasible && !restoring && obj - prev <= eps {
            termination = Termination::Converged;
            break;
        }
        if !feasible && !any_accepted {
            termination = Termination::Stalled;
            let worst: Vec<String> = audit
                .violations()
                .map(|r| format!("{:?} {:.3e}", r.family, r.value))
                .collect();
            diagnostic = Some(format!("no block improved an infeasible iterate: {}", worst.join(", ")));
            break;
        }
        prev = obj;
    }
    if termination == Termination::MaxIterations {
        diagnostic = Some(format!("no convergence within {max_iters} iterations"));
    }
    let audit = feasibility_audit(&dv, sc, model, AUDIT_TOL);
    Ok(RunReport {
        scheme: cfg.scheme,
        scenario_digest: sc.digest(),
        initial_objective,
        records,
        solution: dv,
        termination,
        diagnostic,
        audit,
        wall_s: started.elapsed().as_secs_f64(),
    })
}

/// One independent run per scheme from the same scenario, in parallel.
pub fn compare_schemes(sc: &Scenario, schemes: &[Scheme], opts: &DriverOptions) -> Result<Vec<RunReport>> {
    if schemes.len() < 2 {
        return Err(Error::Domain("comparison needs at least two schemes".into()));
    }
    schemes
        .par_iter()
        .map(|&s| optimize_with(sc, s.into(), opts))
        .collect()
}
