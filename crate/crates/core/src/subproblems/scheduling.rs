use super::{settle, SlackBlock, BlockOutcome, SUBPROBLEM_TOL};
use crate::channel::LosModel;
use crate::error::{Error, Result};
use crate::model::{rate_matrix, DecisionVariables, Scenario};
use crate::solver::{solve, SmoothProgram, SolveStatus};

/// Solves the relaxed scheduling LP for a rate table `rates[r][n]` and
/// returns a vertex of its optimal face: the best user of every slot, ties to
/// the lowest index. Also returns the LP objective found by the solver.
pub fn schedule_lp(rates: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64, SolveStatus)> {
    let r_count = rates.len();
    if r_count == 0 {
        return Err(Error::Domain("no users to schedule".into()));
    }
    let n = rates[0].len();
    for row in rates {
        crate::error::check_len("rate columns", n, row.len())?;
    }
    let idx = |r: usize, s: usize| r * n + s;
    let mut c = vec![0.0; r_count * n];
    for r in 0..r_count {
        for s in 0..n {
            c[idx(r, s)] = rates[r][s] / n as f64;
        }
    }
    let start = vec![1.0 / (r_count + 1) as f64; r_count * n];
    let mut prog = SmoothProgram::new(r_count * n).maximize(c).start_at(start);
    for s in 0..n {
        let row: Vec<(usize, f64)> = (0..r_count).map(|r| (idx(r, s), 1.0)).collect();
        prog.add_linear(&row, 1.0);
    }
    for i in 0..r_count * n {
        prog.bound(i, 0.0, 1.0);
    }
    let (_, status) = solve(&prog, SUBPROBLEM_TOL);

    let mut a = vec![vec![0.0; n]; r_count];
    for s in 0..n {
        let mut best = 0;
        for r in 1..r_count {
            if rates[r][s] > rates[best][s] {
                best = r;
            }
        }
        a[best][s] = 1.0;
    }
    let lp = status.objective;
    Ok((a, lp, status))
}

/// Scheduling block: rates are frozen at the current powers and positions.
pub fn solve_scheduling(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<BlockOutcome> {
    let rates = rate_matrix(dv, sc, model)?;
    let (a, lp, status) = schedule_lp(&rates)?;
    let n = dv.n_slots();
    let eta = (0..n).map(|s| (0..rates.len()).map(|r| a[r][s] * rates[r][s]).sum()).collect();
    let mut candidate = dv.clone();
    candidate.a = a;
    let slacks = SlackBlock {
        eta,
        ..SlackBlock::default()
    };
    settle(dv, candidate, sc, model, slacks, status, lp)
}
