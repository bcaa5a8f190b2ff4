use super::terms::{
    smooth_distance, EnergyBudget, HorizontalInterference, HorizontalOdds, HorizontalRate, HorizontalRateTerm,
    LambdaBound, Lin2, LosFactor, NlosFactor, NormBound, SPEED_SMOOTHING,
};
use super::{elastic_options, settle, unchanged, BlockOutcome, SlackBlock};
use crate::channel::{horizontal_distance, LosModel};
use crate::error::{Error, Result};
use crate::model::{DecisionVariables, Scenario};
use crate::sca::{f3, los_odds_constant, nlos_odds_constant, ExpansionPoint, RateTaylor, DEG};
use crate::solver::{solve_with, SmoothProgram, SolverOptions};

/// Below this horizontal distance to the primary user the interference
/// angle is held at 90 degrees.
const OVERHEAD: f64 = 1e-3;

/// Variable layout: `m = N - 1` free positions, then `m` induced-power
/// slacks, then `N` rate epigraphs. The last slot reuses position 0.
struct Layout {
    n: usize,
    m: usize,
}

impl Layout {
    fn pos(&self, s: usize) -> usize {
        if s == self.n - 1 {
            0
        } else {
            s
        }
    }
    fn qx(&self, s: usize) -> usize {
        2 * self.pos(s)
    }
    fn qy(&self, s: usize) -> usize {
        2 * self.pos(s) + 1
    }
    fn lambda(&self, s: usize) -> usize {
        2 * self.m + s
    }
    fn eta(&self, s: usize) -> usize {
        3 * self.m + s
    }
    fn len(&self) -> usize {
        3 * self.m + self.n
    }
    /// `(q[s+1] - q[s]) / dt`.
    fn velocity(&self, s: usize, dt: f64) -> Lin2 {
        Lin2::new(&[
            (self.qx(s + 1), self.qy(s + 1), 1.0 / dt),
            (self.qx(s), self.qy(s), -1.0 / dt),
        ])
    }
    /// `(q[s+2] - 2 q[s+1] + q[s]) / dt^2`.
    fn acceleration(&self, s: usize, dt: f64) -> Lin2 {
        let k = 1.0 / (dt * dt);
        Lin2::new(&[
            (self.qx(s + 2), self.qy(s + 2), k),
            (self.qx(s + 1), self.qy(s + 1), -2.0 * k),
            (self.qx(s), self.qy(s), k),
        ])
    }
}

/// One SCA step on the horizontal trajectory with schedule, powers and
/// altitudes frozen.
pub fn solve_horizontal(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<BlockOutcome> {
    solve_horizontal_with(dv, sc, model, &elastic_options())
}

/// [`solve_horizontal`] with explicit solver settings.
pub fn solve_horizontal_with(
    dv: &DecisionVariables,
    sc: &Scenario,
    model: LosModel,
    opts: &SolverOptions,
) -> Result<BlockOutcome> {
    let n = dv.n_slots();
    if n < 2 {
        return unchanged(dv, sc, model);
    }
    if !(sc.gamma_w > 0.0) {
        return Err(Error::Infeasible("zero interference threshold".into()));
    }
    let lay = Layout { n, m: n - 1 };
    let m = lay.m;
    let dt = sc.slot_s;
    let cp = &sc.channel;
    let rp = &sc.rotor;
    let ep = ExpansionPoint::from_iterate(dv, sc);
    let probabilistic = model == LosModel::Probabilistic;
    let k_los = los_odds_constant(cp);
    let k_nlos = nlos_odds_constant(cp);

    let mut start = vec![0.0; lay.len()];
    for j in 0..m {
        start[2 * j] = dv.q[j][0];
        start[2 * j + 1] = dv.q[j][1];
        start[lay.lambda(j)] = ep.lambda[j] + 1e-9;
    }

    let mut c = vec![0.0; lay.len()];
    let mut prog_rates = Vec::with_capacity(n);
    for s in 0..n {
        c[lay.eta(s)] = 1.0;
        let z = dv.z[s];
        let mut terms = Vec::new();
        for (r, u) in sc.users.iter().enumerate() {
            let a = dv.a[r][s];
            if a <= 0.0 || dv.p[s] <= 0.0 {
                continue;
            }
            let odds = probabilistic.then(|| HorizontalOdds::new(k_los, cp.b, z, smooth_distance(dv.q[s], u.w).0));
            let x_k = odds.map_or(1.0, |o| o.at_expansion());
            terms.push(HorizontalRateTerm {
                user: r,
                weight: a,
                w: u.w,
                z,
                alpha: cp.alpha_los,
                taylor: RateTaylor::new(dv.p[s] * cp.gamma(), x_k, ep.t_los[r][s])?,
                odds,
            });
        }
        let rate = HorizontalRate {
            support: [lay.qx(s), lay.qy(s), lay.eta(s)],
            terms,
        };
        let v0 = rate.surrogate(dv.q[s]);
        start[lay.eta(s)] = v0 - 1e-3 * (1.0 + v0.abs());
        prog_rates.push(rate);
    }
    let mut prog = SmoothProgram::new(lay.len()).maximize(c).start_at(start);

    let vels: Vec<Lin2> = (0..m).map(|s| lay.velocity(s, dt)).collect();
    prog.add(EnergyBudget {
        support: (0..3 * m).collect(),
        vels: vels.clone(),
        p0: rp.p0,
        p1: rp.p1,
        u_tip: rp.u_tip,
        parasite: rp.parasite_coefficient(),
        n_slots: n,
        budget: sc.p_hor_ave,
    });
    for (s, vel) in vels.into_iter().enumerate() {
        prog.add(LambdaBound::new(vel.clone(), lay.lambda(s), ep.lambda[s], ep.v[s], rp.v0));
        if !vel.is_zero() {
            prog.add(NormBound {
                map: vel,
                scale: sc.v_max,
            });
        }
    }
    for s in 0..n.saturating_sub(2) {
        let acc = lay.acceleration(s, dt);
        if !acc.is_zero() {
            prog.add(NormBound {
                map: acc,
                scale: sc.a_max,
            });
        }
    }

    let wd = sc.primary.w;
    let mut interference = Vec::with_capacity(n);
    let mut guarded = vec![false; m];
    for s in 0..n {
        if dv.p[s] <= 0.0 {
            interference.push(None);
            continue;
        }
        let qk = dv.q[s];
        let z = dv.z[s];
        let tangent = |alpha: f64| {
            let lin = f3(qk, qk, z, wd, alpha);
            (lin.value, qk, lin.grad)
        };
        let sk = horizontal_distance(qk, wd);
        let u = (sk >= OVERHEAD).then(|| [(qk[0] - wd[0]) / sk, (qk[1] - wd[1]) / sk]);
        let (los, nlos) = if probabilistic {
            let se = smooth_distance(qk, wd).0;
            (
                Some(LosFactor {
                    coef: k_los,
                    b: cp.b,
                    theta_k: DEG * z.atan2(sk),
                    u,
                }),
                Some(NlosFactor {
                    coef: k_nlos,
                    b: cp.b,
                    phi_k: DEG * (z / se).atan(),
                    s_k: se,
                }),
            )
        } else {
            (None, None)
        };
        let term = HorizontalInterference {
            support: [lay.qx(s), lay.qy(s)],
            scale: dv.p[s] * cp.rho0 / sc.gamma_w,
            mu: cp.mu,
            w: wd,
            z,
            tangent_los: tangent(cp.alpha_los),
            tangent_nlos: tangent(cp.alpha_nlos),
            los,
            nlos,
        };
        // keep the projected distance positive, where the angle bound is convex
        if let (true, Some(u)) = (probabilistic, u) {
            let j = lay.pos(s);
            if !guarded[j] {
                guarded[j] = true;
                let floor = (sk / 10.0).min(1.0);
                prog.add_linear(
                    &[(lay.qx(s), -u[0]), (lay.qy(s), -u[1])],
                    -(floor + u[0] * wd[0] + u[1] * wd[1]),
                );
            }
        }
        interference.push(Some(term.clone()));
        prog.add_soft(term);
    }
    let rate_terms: Vec<Vec<HorizontalRateTerm>> = prog_rates.iter().map(|r| r.terms.clone()).collect();
    for r in prog_rates {
        prog.add(r);
    }

    let (x, status) = solve_with(&prog, opts);
    let mut q: Vec<[f64; 2]> = (0..m).map(|j| [x[2 * j], x[2 * j + 1]]).collect();
    q.push(q[0]);
    let candidate = DecisionVariables::from_positions(dv.a.clone(), dv.p.clone(), q.clone(), dv.z.clone(), sc)?;

    let eta: Vec<f64> = (0..n).map(|s| x[lay.eta(s)]).collect();
    let lambda: Vec<f64> = (0..m).map(|s| x[lay.lambda(s)]).chain(std::iter::once(1.0)).collect();
    let quad = 3.0 * rp.p0 / (rp.u_tip * rp.u_tip);
    let p_hor = candidate
        .v
        .iter()
        .zip(&lambda)
        .map(|(v, l)| {
            let v2 = v[0] * v[0] + v[1] * v[1];
            rp.p0 + quad * v2 + rp.parasite_coefficient() * (v2 + SPEED_SMOOTHING * SPEED_SMOOTHING).powf(1.5) + rp.p1 * l
        })
        .collect();
    let r_count = sc.n_users();
    let mut x_los = vec![vec![1.0; n]; r_count];
    let mut t_los = vec![vec![0.0; n]; r_count];
    for (s, terms) in rate_terms.iter().enumerate() {
        for (r, u) in sc.users.iter().enumerate() {
            let d2 = horizontal_distance(q[s], u.w).powi(2) + dv.z[s] * dv.z[s];
            t_los[r][s] = d2.powf(cp.alpha_los / 2.0);
        }
        for term in terms {
            if let Some(o) = &term.odds {
                let se = smooth_distance(q[s], term.w).0;
                x_los[term.user][s] = 1.0 + o.c0 * (o.beta * (se - o.s_k)).exp();
            }
        }
    }
    let mut slacks = SlackBlock {
        eta,
        lambda,
        x_los,
        t_los,
        p_hor,
        ..SlackBlock::default()
    };
    for (s, it) in interference.iter().enumerate() {
        let (pl, pn, tl, tn) = it
            .as_ref()
            .and_then(|t| t.slacks(q[s]))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
        slacks.p_los.push(pl);
        slacks.p_nlos.push(pn);
        slacks.t_primary_los.push(tl);
        slacks.t_primary_nlos.push(tn);
    }
    let surrogate = slacks.eta.iter().sum::<f64>() / n as f64;
    settle(dv, candidate, sc, model, slacks, status, surrogate)
}
