//! Checks shared by the property suites and the acceptance report.
#![allow(dead_code)]

use crn_uav::channel::LosModel;
use crn_uav::energy::{horizontal_power, vertical_power, RotorcraftParams};
use crn_uav::model::{init_solution, rate_matrix, Scenario};
use crn_uav::sca::{
    atan_in_distance, f1, f2, f3, f4, f5, f6, f7, lambda_lower_bound, lemma1_hessian_check, rate_target,
    RateTaylor,
};
use crn_uav::solver::{solve, Constraint, LocalEval, SmoothProgram, Status};
use crn_uav::subproblems::{schedule_lp, solve_power_instance, solve_scheduling, PowerInstance};
use crn_uav_oracle::{
    brute_force_schedule, finite_difference_check, finite_difference_hessian, grid_search_power,
    lp_vertex_enumeration, qp_active_set_enumeration, PowerGridInstance,
};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

pub const TANGENCY_TOL: f64 = 1e-5;
pub const FD_STEP: f64 = 1e-6;
pub const HESSIAN_EIG_TOL: f64 = 1e-9;
pub const HESSIAN_FD_TOL: f64 = 1e-4;
pub const SCHEDULE_TOL: f64 = 1e-9;
pub const POWER_GRID_STEP: f64 = 1e-3;
pub const B: f64 = 0.14;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Check {
            pass,
            detail: detail.into(),
        }
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn log_uniform(g: &mut StdRng, lo: f64, hi: f64) -> f64 {
    g.random_range(lo.ln()..hi.ln()).exp()
}

/// Random expansion and evaluation points for every surrogate.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateCase {
    pub theta_k: f64,
    pub theta: f64,
    pub q_k: [f64; 2],
    pub q: [f64; 2],
    pub w: [f64; 2],
    pub z_k: f64,
    pub z: f64,
    pub alpha: f64,
    pub lambda_k: f64,
    pub lambda: f64,
    pub v_k: [f64; 2],
    pub v: [f64; 2],
    pub v0: f64,
    pub snr: f64,
    pub x_k: f64,
    pub x: f64,
    pub t_k: f64,
    pub t: f64,
}

pub fn surrogate_case(g: &mut StdRng) -> SurrogateCase {
    let mut pt = |lo: f64, hi: f64| [g.random_range(lo..hi), g.random_range(lo..hi)];
    let w = pt(0.0, 400.0);
    let mut q_k = pt(-50.0, 450.0);
    if (q_k[0] - w[0]).hypot(q_k[1] - w[1]) < 1.0 {
        q_k[0] += 5.0;
    }
    let q = pt(-50.0, 450.0);
    SurrogateCase {
        theta_k: g.random_range(0.0..90.0),
        theta: g.random_range(0.0..90.0),
        q_k,
        q,
        w,
        z_k: g.random_range(30.0..100.0),
        z: g.random_range(30.0..100.0),
        alpha: if g.random_bool(0.5) { 2.2 } else { 3.5 },
        lambda_k: g.random_range(0.05..1.0),
        lambda: g.random_range(0.05..1.0),
        v_k: [g.random_range(-25.0..25.0), g.random_range(-25.0..25.0)],
        v: [g.random_range(-25.0..25.0), g.random_range(-25.0..25.0)],
        v0: g.random_range(2.0..10.0),
        snr: log_uniform(g, 1e2, 4e6),
        x_k: g.random_range(1.0..300.0),
        x: g.random_range(1.0..300.0),
        t_k: log_uniform(g, 1e3, 1e6),
        t: log_uniform(g, 1e3, 1e6),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn atan_q(q: &[f64], z: f64, w: [f64; 2]) -> f64 {
    (z / (q[0] - w[0]).hypot(q[1] - w[1])).atan()
}

fn power_q(q: &[f64], z: f64, w: [f64; 2], alpha: f64) -> f64 {
    ((q[0] - w[0]).powi(2) + (q[1] - w[1]).powi(2) + z * z).powf(alpha / 2.0)
}

/// Worst relative value and gradient deviation at the expansion point,
/// per surrogate, in the order F1..F7, lambda, rate.
pub fn tangency(c: &SurrogateCase) -> [(&'static str, f64); 9] {
    let SurrogateCase {
        theta_k,
        q_k,
        w,
        z_k,
        alpha,
        lambda_k,
        v_k,
        v0,
        snr,
        x_k,
        t_k,
        ..
    } = *c;
    let s_k = (q_k[0] - w[0]).hypot(q_k[1] - w[1]);
    let both = |v: f64, target: f64, fd: f64| rel(v, target).max(fd);

    let s1 = f1(theta_k, theta_k, B);
    let e1 = both(
        s1.value,
        (-B * theta_k).exp(),
        finite_difference_check(|x| (-B * x[0]).exp(), &s1.grad, &[theta_k], FD_STEP),
    );
    let s2 = f2(theta_k, theta_k, B);
    let e2 = both(
        s2.value,
        (B * theta_k).exp(),
        finite_difference_check(|x| (B * x[0]).exp(), &s2.grad, &[theta_k], FD_STEP),
    );
    let s3 = f3(q_k, q_k, z_k, w, alpha);
    let e3 = both(
        s3.value,
        power_q(&q_k, z_k, w, alpha),
        finite_difference_check(|q| power_q(q, z_k, w, alpha), &s3.grad, &q_k, FD_STEP),
    );
    let s4 = f4(q_k, q_k, z_k, w).unwrap();
    let e4 = both(
        s4.value,
        atan_q(&q_k, z_k, w),
        finite_difference_check(|q| atan_q(q, z_k, w), &s4.grad, &q_k, FD_STEP),
    );
    let s5 = f5(q_k, q_k, z_k, w).unwrap();
    let e5 = both(
        s5.value,
        atan_q(&q_k, z_k, w),
        finite_difference_check(|q| atan_q(q, z_k, w), &s5.grad, &q_k, FD_STEP),
    );
    let s6 = f6(z_k, z_k, s_k, alpha);
    let e6 = both(
        s6.value,
        (s_k * s_k + z_k * z_k).powf(alpha / 2.0),
        finite_difference_check(|z| (s_k * s_k + z[0] * z[0]).powf(alpha / 2.0), &s6.grad, &[z_k], FD_STEP),
    );
    let s7 = f7(z_k, z_k, s_k).unwrap();
    let e7 = both(
        s7.value,
        (z_k / s_k).atan(),
        finite_difference_check(|z| (z[0] / s_k).atan(), &s7.grad, &[z_k], FD_STEP),
    );
    let lam_target = |x: &[f64]| x[0] * x[0] + (x[1] * x[1] + x[2] * x[2]) / (v0 * v0);
    let sl = lambda_lower_bound(lambda_k, v_k, lambda_k, v_k, v0);
    let pl = [lambda_k, v_k[0], v_k[1]];
    let el = both(sl.value, lam_target(&pl), finite_difference_check(lam_target, &sl.grad, &pl, FD_STEP));
    let rt = RateTaylor::new(snr, x_k, t_k).unwrap();
    let er = both(
        rt.eval(x_k, t_k),
        rate_target(snr, x_k, t_k),
        finite_difference_check(|p| rate_target(snr, p[0], p[1]), &[rt.c, rt.b], &[x_k, t_k], FD_STEP),
    );
    [
        ("F1", e1),
        ("F2", e2),
        ("F3", e3),
        ("F4", e4),
        ("F5", e5),
        ("F6", e6),
        ("F7", e7),
        ("lambda", el),
        ("rate", er),
    ]
}

/// Target minus surrogate away from the expansion point for the global
/// lower bounds F1, F2, F3, F6, lambda and rate (plus the distance form of
/// F4/F5), scaled by the target magnitude. Nonnegative when the bound holds.
pub fn dominance(c: &SurrogateCase) -> [(&'static str, f64); 7] {
    let SurrogateCase {
        theta_k,
        theta,
        q_k,
        q,
        w,
        z_k,
        z,
        alpha,
        lambda_k,
        lambda,
        v_k,
        v,
        v0,
        snr,
        x_k,
        x,
        t_k,
        t,
    } = *c;
    let gap = |target: f64, surrogate: f64| (target - surrogate) / target.abs().max(1.0);
    let s = (q[0] - w[0]).hypot(q[1] - w[1]).max(1e-3);
    let s_k = (q_k[0] - w[0]).hypot(q_k[1] - w[1]);
    let _ = z_k;
    [
        ("F1", gap((-B * theta).exp(), f1(theta, theta_k, B).value)),
        ("F2", gap((B * theta).exp(), f2(theta, theta_k, B).value)),
        ("F3", gap(power_q(&q, z, w, alpha), f3(q, q_k, z, w, alpha).value)),
        ("F4/F5", gap((z / s).atan(), atan_in_distance(s, s_k, z).value)),
        ("F6", gap((s * s + z * z).powf(alpha / 2.0), f6(z, z_k, s, alpha).value)),
        (
            "lambda",
            gap(
                lambda * lambda + (v[0] * v[0] + v[1] * v[1]) / (v0 * v0),
                lambda_lower_bound(lambda, v, lambda_k, v_k, v0).value,
            ),
        ),
        (
            "rate",
            gap(rate_target(snr, x, t), RateTaylor::new(snr, x_k, t_k).unwrap().eval(x, t)),
        ),
    ]
}

/// Tangency at `points` expansion points, then dominance at `samples`
/// evaluation points.
pub fn surrogate_suite(seed: u64, points: usize, samples: usize) -> (Check, Check) {
    let mut g = rng(seed);
    let mut worst_t = ("", 0.0f64);
    for _ in 0..points {
        for (name, e) in tangency(&surrogate_case(&mut g)) {
            if e > worst_t.1 || e.is_nan() {
                worst_t = (name, e);
            }
        }
    }
    let mut worst_d = ("", f64::INFINITY);
    for _ in 0..samples {
        for (name, e) in dominance(&surrogate_case(&mut g)) {
            if e < worst_d.1 || e.is_nan() {
                worst_d = (name, e);
            }
        }
    }
    (
        Check::new(
            worst_t.1 <= TANGENCY_TOL,
            format!("{points} points, worst {} deviation {:.2e}", worst_t.0, worst_t.1),
        ),
        Check::new(
            worst_d.1 >= -1e-12,
            format!("{samples} samples, smallest {} margin {:.2e}", worst_d.0, worst_d.1),
        ),
    )
}

/// Random positive triple for the rate function.
pub fn hessian_triple(g: &mut StdRng) -> (f64, f64, f64) {
    (log_uniform(g, 1e-2, 1e3), log_uniform(g, 1e-2, 1e7), log_uniform(g, 1e-3, 1e7))
}

/// Largest entry deviation between the analytic and central-difference
/// Hessians, relative to `sqrt(|h_ii h_jj|)`, with steps taken in relative
/// coordinates.
pub fn hessian_fd_deviation(x: f64, y: f64, a: f64) -> f64 {
    let h = lemma1_hessian_check(x, y, a).hessian;
    let scaled = finite_difference_hessian(|u| rate_target(a, x * u[0], y * u[1]), &[1.0, 1.0], 1e-4);
    let sc = [x, y];
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let fd = scaled[i][j] / (sc[i] * sc[j]);
            let norm = (h[i][i] * h[j][j]).abs().sqrt().max(1e-300);
            worst = worst.max((fd - h[i][j]).abs() / norm);
        }
    }
    worst
}

pub fn hessian_suite(seed: u64, triples: usize) -> (Check, Check) {
    let mut g = rng(seed);
    let mut min_eig = f64::INFINITY;
    let mut worst_fd = 0.0f64;
    for _ in 0..triples {
        let (x, y, a) = hessian_triple(&mut g);
        min_eig = min_eig.min(lemma1_hessian_check(x, y, a).min_eigenvalue);
        worst_fd = worst_fd.max(hessian_fd_deviation(x, y, a));
    }
    (
        Check::new(
            min_eig >= -HESSIAN_EIG_TOL,
            format!("{triples} triples, min eigenvalue {min_eig:.3e}"),
        ),
        Check::new(
            worst_fd <= HESSIAN_FD_TOL,
            format!("{triples} triples, worst relative FD deviation {worst_fd:.2e}"),
        ),
    )
}

/// Random rate tables with at most three users and slots against
/// exhaustive enumeration.
pub fn scheduling_suite(seed: u64, cases: usize) -> Check {
    let mut g = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let r = g.random_range(1..=3usize);
        let n = g.random_range(1..=3usize);
        let rates: Vec<Vec<f64>> = (0..r)
            .map(|_| (0..n).map(|_| g.random_range(0.0..10.0)).collect())
            .collect();
        let brute = brute_force_schedule(&rates).unwrap();
        let (a, _, _) = schedule_lp(&rates).unwrap();
        let ours: f64 = (0..n).map(|s| (0..r).map(|u| a[u][s] * rates[u][s]).sum::<f64>()).sum::<f64>() / n as f64;
        worst = worst.max((ours - brute.value).abs());
    }
    worst = worst.max(scenario_scheduling_deviation());
    Check::new(
        worst <= SCHEDULE_TOL,
        format!("{cases} tables plus a 3x3 scenario, worst gap {worst:.2e}"),
    )
}

/// The scheduling block on a three-user, three-slot scenario.
pub fn scenario_scheduling_deviation() -> f64 {
    let sc = tiny_scenario();
    let dv = init_solution(&sc).unwrap();
    let rates = rate_matrix(&dv, &sc, LosModel::Probabilistic).unwrap();
    let brute = brute_force_schedule(&rates).unwrap();
    let out = solve_scheduling(&dv, &sc, LosModel::Probabilistic).unwrap();
    let ours = crn_uav::model::objective(&out.dv, &sc).unwrap();
    (ours - brute.value).abs()
}

pub fn tiny_scenario() -> Scenario {
    Scenario::table2()
        .modified(|f| {
            f.users_m.truncate(3);
            f.horizon_s = 3.0;
        })
        .unwrap()
}

/// Random single-term power instances with up to three slots against a
/// 1 mW grid.
pub fn power_suite(seed: u64, cases: usize) -> Check {
    let mut g = rng(seed);
    let mut worst_p = 0.0f64;
    let mut worst_v = f64::INFINITY;
    for _ in 0..cases {
        let n = g.random_range(1..=3usize);
        let w: Vec<f64> = (0..n).map(|_| g.random_range(0.05..1.0)).collect();
        let gain: Vec<f64> = (0..n).map(|_| log_uniform(&mut g, 1.0, 1e4)).collect();
        let gamma = 1e-12;
        let interference: Vec<f64> = (0..n).map(|_| gamma / g.random_range(0.03..0.4)).collect();
        let p_max = 0.2;
        let p_ave = g.random_range(0.03..0.15);
        let inst = PowerInstance {
            terms: (0..n).map(|s| vec![(w[s], gain[s])]).collect(),
            interference: interference.clone(),
            p_max,
            p_ave,
            gamma,
        };
        let (p, _, st) = solve_power_instance(&inst).unwrap();
        assert_eq!(st.status, Status::Optimal);
        let grid = grid_search_power(
            &PowerGridInstance {
                weight: w,
                gain,
                interference,
                p_max,
                p_ave,
                gamma,
            },
            POWER_GRID_STEP,
        )
        .unwrap();
        let dp = p.iter().zip(&grid.powers).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_p = worst_p.max(dp);
        worst_v = worst_v.min(inst.value(&p) - grid.value);
    }
    Check::new(
        worst_p <= POWER_GRID_STEP * (1.0 + 1e-9) && worst_v >= -1e-9,
        format!("{cases} instances, worst power distance {worst_p:.2e} W, worst value margin {worst_v:.2e}"),
    )
}

/// `0.5 x^T q x - t <= 0` over `x` and the epigraph variable `t`.
pub struct QuadEpigraph {
    pub support: Vec<usize>,
    pub q: Vec<Vec<f64>>,
}

impl Constraint for QuadEpigraph {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let n = self.q.len();
        let mut v = 0.0;
        for i in 0..n {
            let qi: f64 = (0..n).map(|j| self.q[i][j] * x[j]).sum();
            v += 0.5 * x[i] * qi;
            out.grad[i] = qi;
            if want_hess {
                for j in 0..n {
                    *out.h(i, j) = self.q[i][j];
                }
            }
        }
        out.value = v - x[n];
        out.grad[n] = -1.0;
        true
    }
}

/// Random bounded LPs and strictly convex QPs solved by the barrier solver
/// and by vertex or active-set enumeration.
pub fn solver_suite(seed: u64, cases: usize) -> Check {
    let mut g = rng(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let n = g.random_range(2..=3usize);
        let m = g.random_range(2..=4usize);
        let x0: Vec<f64> = (0..n).map(|_| g.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| g.random_range(-2.0..2.0)).collect();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs = Vec::new();
        for _ in 0..m {
            let row: Vec<f64> = (0..n).map(|_| g.random_range(-1.0..1.0)).collect();
            let b = row.iter().zip(&x0).map(|(a, x)| a * x).sum::<f64>() + g.random_range(0.1..1.0);
            rows.push(row);
            rhs.push(b);
        }
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            rows.push(e.clone());
            rhs.push(3.0);
            e[i] = -1.0;
            rows.push(e);
            rhs.push(3.0);
        }
        let quadratic = case % 2 == 1;
        let len = if quadratic { n + 1 } else { n };
        let mut obj = c.clone();
        let mut start = x0.clone();
        let q: Vec<Vec<f64>> = if quadratic {
            let l: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).map(|k| l[i][k] * l[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        if quadratic {
            obj.push(-1.0);
            let qx: f64 = (0..n).map(|i| x0[i] * (0..n).map(|j| q[i][j] * x0[j]).sum::<f64>()).sum();
            start.push(0.5 * qx + 1.0);
        }
        let mut prog = SmoothProgram::new(len).maximize(obj).start_at(start);
        for (row, &b) in rows.iter().zip(&rhs) {
            let terms: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
            prog.add_linear(&terms, b);
        }
        if quadratic {
            prog.add(QuadEpigraph {
                support: (0..=n).collect(),
                q: q.clone(),
            });
        }
        let (_, st) = solve(&prog, 1e-9);
        let best = if quadratic {
            qp_active_set_enumeration(&q, &c, &rows, &rhs).unwrap().1
        } else {
            lp_vertex_enumeration(&c, &rows, &rhs).unwrap().1
        };
        let dev = (st.objective - best).abs() / best.abs().max(1.0);
        worst = worst.max(if st.status == Status::Optimal { dev } else { f64::INFINITY });
    }
    Check::new(worst <= 1e-6, format!("{cases} programs, worst relative gap {worst:.2e}"))
}

/// Hover power and free descent, compared bit for bit.
pub fn hover_identities() -> Check {
    let rp = RotorcraftParams::default();
    let hover = horizontal_power([0.0, 0.0], &rp);
    let descents = [-1e-9, -0.5, -10.0, -1e6];
    let free = descents.iter().all(|&v| vertical_power(v, &rp) == 0.0);
    Check::new(
        hover == rp.p0 + rp.p1 && free,
        format!("hover {hover} W vs P0+P1 {} W; descent power zero: {free}", rp.p0 + rp.p1),
    )
}
