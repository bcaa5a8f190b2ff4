use super::terms::{smooth_distance, VerticalInterference, VerticalRate, VerticalRateTerm};
use super::{elastic_options, merged, settle, unchanged, BlockOutcome, SlackBlock};
use crate::channel::{horizontal_distance, LosModel};
use crate::error::{Error, Result};
use crate::model::{DecisionVariables, Scenario};
use crate::sca::{los_odds_constant, nlos_odds_constant, RateTaylor, DEG};
use crate::solver::{solve_with, SmoothProgram, SolverOptions};

/// One SCA step on the altitude profile with schedule, powers and the
/// horizontal trajectory frozen.
///
/// Variables: `m = N - 1` free altitudes, `m` climb-power epigraphs, then
/// `N` rate epigraphs.
pub fn solve_vertical(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<BlockOutcome> {
    solve_vertical_with(dv, sc, model, &elastic_options())
}

/// [`solve_vertical`] with explicit solver settings.
pub fn solve_vertical_with(
    dv: &DecisionVariables,
    sc: &Scenario,
    model: LosModel,
    opts: &SolverOptions,
) -> Result<BlockOutcome> {
    let n = dv.n_slots();
    if n < 2 || sc.h_max - sc.h_min <= 1e-9 * sc.h_max.max(1.0) {
        return unchanged(dv, sc, model);
    }
    if !(sc.gamma_w > 0.0) {
        return Err(Error::Infeasible("zero interference threshold".into()));
    }
    let m = n - 1;
    let pos = |s: usize| if s == n - 1 { 0 } else { s };
    let e_idx = |s: usize| m + s;
    let eta_idx = |s: usize| 2 * m + s;
    let len = 2 * m + n;
    let dt = sc.slot_s;
    let cp = &sc.channel;
    let weight = sc.rotor.weight;
    let probabilistic = model == LosModel::Probabilistic;
    let k_los = los_odds_constant(cp);

    let mut start = vec![0.0; len];
    let mut c = vec![0.0; len];
    for j in 0..m {
        start[j] = dv.z[j];
        start[e_idx(j)] = (weight * dv.vz[j]).max(0.0) + 1e-6;
    }

    let mut rates = Vec::with_capacity(n);
    for s in 0..n {
        c[eta_idx(s)] = 1.0;
        let zk = dv.z[s];
        let mut terms = Vec::new();
        for (r, u) in sc.users.iter().enumerate() {
            let a = dv.a[r][s];
            if a <= 0.0 || dv.p[s] <= 0.0 {
                continue;
            }
            let mut term = VerticalRateTerm {
                weight: a,
                s: horizontal_distance(dv.q[s], u.w),
                s_smooth: smooth_distance(dv.q[s], u.w).0,
                alpha: cp.alpha_los,
                odds_k: if probabilistic { k_los } else { 0.0 },
                kappa: cp.b * DEG,
                taylor: RateTaylor::new(0.0, 1.0, 1.0)?,
            };
            term.taylor = RateTaylor::new(dv.p[s] * cp.gamma(), term.x_of(zk), term.t_of(zk))?;
            terms.push(term);
        }
        let rate = VerticalRate {
            support: [pos(s), eta_idx(s)],
            terms,
        };
        let v0 = rate.surrogate(zk);
        start[eta_idx(s)] = v0 - 1e-3 * (1.0 + v0.abs());
        rates.push(rate);
    }

    let mut prog = SmoothProgram::new(len).maximize(c).start_at(start);
    for j in 0..m {
        prog.bound(j, sc.h_min, sc.h_max);
        prog.bound(e_idx(j), 0.0, f64::INFINITY);
    }
    for s in 0..m {
        let climb = merged(&[(pos(s + 1), 1.0 / dt), (pos(s), -1.0 / dt)]);
        if climb.is_empty() {
            continue;
        }
        prog.add_linear(&climb, sc.vz_max);
        let descent: Vec<(usize, f64)> = climb.iter().map(|&(i, v)| (i, -v)).collect();
        prog.add_linear(&descent, sc.vz_max);
        let mut epi: Vec<(usize, f64)> = climb.iter().map(|&(i, v)| (i, weight * v)).collect();
        epi.push((e_idx(s), -1.0));
        prog.add_linear(&epi, 0.0);
    }
    let avg: Vec<(usize, f64)> = (0..m).map(|s| (e_idx(s), 1.0 / n as f64)).collect();
    prog.add_linear(&avg, sc.p_ver_ave);
    if let Some(az) = sc.az_max {
        for s in 0..n.saturating_sub(2) {
            let k = 1.0 / (dt * dt);
            let row = merged(&[(pos(s + 2), k), (pos(s + 1), -2.0 * k), (pos(s), k)]);
            if row.is_empty() {
                continue;
            }
            prog.add_linear(&row, az);
            let neg: Vec<(usize, f64)> = row.iter().map(|&(i, v)| (i, -v)).collect();
            prog.add_linear(&neg, az);
        }
    }
    for s in 0..n {
        if dv.p[s] <= 0.0 {
            continue;
        }
        prog.add_soft(VerticalInterference {
            support: [pos(s)],
            scale: dv.p[s] * cp.rho0 / sc.gamma_w,
            mu: if probabilistic { cp.mu } else { 0.0 },
            s: horizontal_distance(dv.q[s], sc.primary.w),
            z_k: dv.z[s],
            alpha_los: cp.alpha_los,
            alpha_nlos: cp.alpha_nlos,
            los_coef: if probabilistic { k_los } else { 0.0 },
            nlos_coef: nlos_odds_constant(cp),
            b: cp.b,
        });
    }
    for r in rates {
        prog.add(r);
    }

    let (x, status) = solve_with(&prog, opts);
    let mut z: Vec<f64> = x[..m].iter().map(|v| v.clamp(sc.h_min, sc.h_max)).collect();
    z.push(z[0]);
    let candidate = DecisionVariables::from_positions(dv.a.clone(), dv.p.clone(), dv.q.clone(), z, sc)?;
    let eta: Vec<f64> = (0..n).map(|s| x[eta_idx(s)]).collect();
    let p_ver = (0..m).map(|s| x[e_idx(s)]).chain(std::iter::once(0.0)).collect();
    let surrogate = eta.iter().sum::<f64>() / n as f64;
    let slacks = SlackBlock {
        eta,
        p_ver,
        ..SlackBlock::default()
    };
    settle(dv, candidate, sc, model, slacks, status, surrogate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{feasibility_audit, init_solution, objective};
    use crate::subproblems::{solve_power, solve_scheduling, AUDIT_TOL};

    #[test]
    fn fixed_altitude_box_is_a_no_op() {
        let sc = Scenario::table2().modified(|f| f.h_max_m = f.h_min_m).unwrap();
        let dv = init_solution(&sc).unwrap();
        let out = solve_vertical(&dv, &sc, LosModel::Probabilistic).unwrap();
        assert_eq!(out.dv, dv);
        assert!(!out.accepted);
    }

    #[test]
    fn one_step_does_not_lose_rate() {
        let sc = Scenario::table2();
        let dv = init_solution(&sc).unwrap();
        let dv = solve_scheduling(&dv, &sc, LosModel::Probabilistic).unwrap().dv;
        let dv = solve_power(&dv, &sc, LosModel::Probabilistic).unwrap().dv;
        let before = objective(&dv, &sc).unwrap();
        let out = solve_vertical(&dv, &sc, LosModel::Probabilistic).unwrap();
        let after = objective(&out.dv, &sc).unwrap();
        assert!(after >= before - 1e-7, "{after} < {before}");
        assert!(out.surrogate_objective <= after + 1e-9);
        assert!(feasibility_audit(&out.dv, &sc, LosModel::Probabilistic, AUDIT_TOL).feasible());
    }
}
