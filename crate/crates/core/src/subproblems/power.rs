use std::f64::consts::LN_2;

use super::{settle, BlockOutcome, SlackBlock, SUBPROBLEM_TOL};
use crate::channel::{horizontal_distance, interference_per_watt, los_probability_under, LosModel};
use crate::error::Result;
use crate::model::{DecisionVariables, Scenario};
use crate::solver::{solve, Constraint, LocalEval, SmoothProgram, SolveStatus, Status};

/// Fixed-geometry power allocation. Slot `n` earns
/// `sum_k w_k log2(1 + g_k p_n)` over its `terms[n] = [(w_k, g_k)]` and puts
/// `interference[n] * p_n` watts on the primary user.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerInstance {
    pub terms: Vec<Vec<(f64, f64)>>,
    pub interference: Vec<f64>,
    pub p_max: f64,
    pub p_ave: f64,
    pub gamma: f64,
}

impl PowerInstance {
    pub fn value(&self, p: &[f64]) -> f64 {
        let n = p.len() as f64;
        self.terms
            .iter()
            .zip(p)
            .map(|(t, &pn)| t.iter().map(|(w, g)| w * (g * pn).ln_1p() / LN_2).sum::<f64>())
            .sum::<f64>()
            / n
    }
}

struct SlotRate {
    support: [usize; 2],
    terms: Vec<(f64, f64)>,
}

impl Constraint for SlotRate {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let p = x[0];
        let (mut v, mut g, mut h) = (0.0, 0.0, 0.0);
        for &(w, gain) in &self.terms {
            let u = 1.0 + gain * p;
            if !(u > 0.0) {
                return false;
            }
            v += w * u.ln() / LN_2;
            g += w * gain / (u * LN_2);
            h -= w * gain * gain / (u * u * LN_2);
        }
        out.value = x[1] - v;
        out.grad[0] = -g;
        out.grad[1] = 1.0;
        if want_hess {
            *out.h(0, 0) = -h;
        }
        true
    }
}

/// Maximizes the average rate over the powers. Returns the powers, the
/// per-slot rate epigraph and the solver status. A zero threshold or budget
/// forces silence.
pub fn solve_power_instance(inst: &PowerInstance) -> Result<(Vec<f64>, Vec<f64>, SolveStatus)> {
    let n = inst.terms.len();
    crate::error::check_len("interference coefficients", n, inst.interference.len())?;
    let caps: Vec<f64> = inst
        .interference
        .iter()
        .map(|&c| if c > 0.0 { inst.p_max.min(inst.gamma / c) } else { inst.p_max })
        .collect();
    if inst.p_ave <= 0.0 || caps.iter().any(|&c| c <= 0.0) {
        log::warn!("power forced to zero by the budget or the interference threshold");
        let status = SolveStatus {
            elastic_slack: 0.0,
            status: Status::Infeasible,
            kkt_residual: 0.0,
            iterations: 0,
            objective: 0.0,
            trace: Vec::new(),
        };
        return Ok((vec![0.0; n], vec![0.0; n], status));
    }
    let p_idx = |s: usize| s;
    let e_idx = |s: usize| n + s;
    let mut c = vec![0.0; 2 * n];
    let mut start = vec![0.0; 2 * n];
    for s in 0..n {
        c[e_idx(s)] = 1.0;
        let p0 = 0.5 * inst.p_ave.min(caps[s]);
        start[p_idx(s)] = p0;
        let r0: f64 = inst.terms[s].iter().map(|(w, g)| w * (g * p0).ln_1p() / LN_2).sum();
        start[e_idx(s)] = r0 - 1.0;
    }
    let mut prog = SmoothProgram::new(2 * n).maximize(c).start_at(start);
    for s in 0..n {
        prog.bound(p_idx(s), 0.0, caps[s]);
        prog.add(SlotRate {
            support: [p_idx(s), e_idx(s)],
            terms: inst.terms[s].clone(),
        });
    }
    let avg: Vec<(usize, f64)> = (0..n).map(|s| (p_idx(s), 1.0 / n as f64)).collect();
    prog.add_linear(&avg, inst.p_ave);
    let (x, status) = solve(&prog, SUBPROBLEM_TOL);
    let p = x[..n].iter().zip(&caps).map(|(v, cap)| v.clamp(0.0, *cap)).collect();
    Ok((p, x[n..].to_vec(), status))
}

/// Power block: schedule and trajectory frozen.
pub fn solve_power(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<BlockOutcome> {
    let cp = &sc.channel;
    let n = dv.n_slots();
    let mut terms = Vec::with_capacity(n);
    let mut interference = Vec::with_capacity(n);
    for s in 0..n {
        let pos = dv.position(s);
        let mut slot = Vec::new();
        for (r, u) in sc.users.iter().enumerate() {
            let a = dv.a[r][s];
            if a <= 0.0 {
                continue;
            }
            let h = horizontal_distance(pos.q, u.w);
            let d2 = h * h + pos.z * pos.z;
            let pl = los_probability_under(model, dv.angles.users[r][s], cp);
            slot.push((a * pl, cp.gamma() / d2.powf(cp.alpha_los / 2.0)));
        }
        terms.push(slot);
        interference.push(interference_per_watt(model, &pos, &sc.primary, cp)?);
    }
    let inst = PowerInstance {
        terms,
        interference,
        p_max: sc.p_max,
        p_ave: sc.p_ave,
        gamma: sc.gamma_w,
    };
    let (p, eta, status) = solve_power_instance(&inst)?;
    let surrogate = eta.iter().sum::<f64>() / n as f64;
    let mut candidate = dv.clone();
    candidate.p = p;
    let slacks = SlackBlock {
        eta,
        ..SlackBlock::default()
    };
    settle(dv, candidate, sc, model, slacks, status, surrogate)
}
