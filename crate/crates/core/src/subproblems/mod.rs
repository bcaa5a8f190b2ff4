//! The four BCD blocks. Each one freezes every variable outside its block,
//! builds a [`SmoothProgram`](crate::solver::SmoothProgram) around the
//! current iterate, solves it and decodes the result.
//!
//! A block only hands back a new iterate when it is at least as good as the
//! old one: feasible with an objective that did not drop, or, from an
//! infeasible iterate, strictly less infeasible. Otherwise the old iterate is
//! returned with `accepted == false`.

mod horizontal;
mod power;
mod scheduling;
pub(crate) mod terms;
mod vertical;

pub use horizontal::{solve_horizontal, solve_horizontal_with};
pub use power::{solve_power, solve_power_instance, PowerInstance};
pub use scheduling::{schedule_lp, solve_scheduling};
pub use vertical::{solve_vertical, solve_vertical_with};

use serde::Serialize;

use crate::channel::LosModel;
use crate::error::Result;
use crate::model::{feasibility_audit, objective_under, DecisionVariables, Scenario};
use crate::solver::{SolveStatus, SolverOptions, Status};

/// Inner tolerance of every block solve.
pub const SUBPROBLEM_TOL: f64 = 1e-8;
/// Price of the shared elastic slack in the trajectory blocks.
pub const ELASTIC_WEIGHT: f64 = 1e4;

fn elastic_options() -> SolverOptions {
    SolverOptions {
        tol: SUBPROBLEM_TOL,
        elastic: Some(ELASTIC_WEIGHT),
        ..SolverOptions::default()
    }
}

/// Looser settings for the trajectory steps of a restoring iteration.
pub fn restoration_options() -> SolverOptions {
    SolverOptions {
        tol: 1e-5,
        max_iterations: 150,
        ..elastic_options()
    }
}
/// Audit tolerance used to call an iterate feasible.
pub const AUDIT_TOL: f64 = 1e-6;

/// Slack values at a block solution. Fields a block does not use stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SlackBlock {
    /// Per-slot rate epigraph.
    pub eta: Vec<f64>,
    /// Induced-power ratio per slot.
    pub lambda: Vec<f64>,
    /// `1 / P_L` surrogate towards each user, `[r][n]`.
    pub x_los: Vec<Vec<f64>>,
    /// `d^alpha_L` towards each user, `[r][n]`.
    pub t_los: Vec<Vec<f64>>,
    /// Lower bounds on `1 / P_L` and `1 / P_N` of the interference link.
    pub p_los: Vec<f64>,
    pub p_nlos: Vec<f64>,
    /// Lower bounds on `d^alpha_L` and `d^alpha_N` towards the primary user.
    pub t_primary_los: Vec<f64>,
    pub t_primary_nlos: Vec<f64>,
    pub p_hor: Vec<f64>,
    pub p_ver: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BlockOutcome {
    pub dv: DecisionVariables,
    pub slacks: SlackBlock,
    pub status: SolveStatus,
    /// Objective of the convex surrogate at its solution.
    pub surrogate_objective: f64,
    /// Whether the block's solution replaced the incoming iterate.
    pub accepted: bool,
    /// The solve did not finish cleanly.
    pub stalled: bool,
}

fn trivial_status(objective: f64) -> SolveStatus {
    SolveStatus {
        elastic_slack: 0.0,
        status: Status::Optimal,
        kkt_residual: 0.0,
        iterations: 0,
        objective,
        trace: Vec::new(),
    }
}

fn unchanged(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<BlockOutcome> {
    let obj = objective_under(dv, sc, model)?;
    Ok(BlockOutcome {
        dv: dv.clone(),
        slacks: SlackBlock::default(),
        status: trivial_status(obj),
        surrogate_objective: obj,
        accepted: false,
        stalled: false,
    })
}

/// Merges duplicate variables of a linear row and drops zero coefficients.
pub(crate) fn merged(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for &(i, c) in terms {
        match out.iter_mut().find(|t| t.0 == i) {
            Some(t) => t.1 += c,
            None => out.push((i, c)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

/// Applies the acceptance rule to a decoded candidate.
fn settle(
    old: &DecisionVariables,
    candidate: DecisionVariables,
    sc: &Scenario,
    model: LosModel,
    slacks: SlackBlock,
    status: SolveStatus,
    surrogate_objective: f64,
) -> Result<BlockOutcome> {
    let stalled = status.status != Status::Optimal;
    let finite = candidate.p.iter().chain(&candidate.z).all(|v| v.is_finite())
        && candidate.q.iter().flatten().all(|v| v.is_finite());
    let accepted = finite && {
        let old_viol = feasibility_audit(old, sc, model, AUDIT_TOL).max_residual();
        let new_viol = feasibility_audit(&candidate, sc, model, AUDIT_TOL).max_residual();
        if new_viol <= AUDIT_TOL {
            old_viol > AUDIT_TOL || objective_under(&candidate, sc, model)? >= objective_under(old, sc, model)?
        } else {
            old_viol > AUDIT_TOL && new_viol < old_viol
        }
    };
    if !stalled || !accepted {
        log::debug!("block status {:?}, accepted {accepted}", status.status);
    }
    Ok(BlockOutcome {
        dv: if accepted { candidate } else { old.clone() },
        slacks,
        status,
        surrogate_objective,
        accepted,
        stalled,
    })
}
