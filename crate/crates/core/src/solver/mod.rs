//! Primal log-barrier interior-point method for smooth programs.
//!
//! The solver maximizes a linear objective subject to smooth inequalities
//! `g_i(x) <= 0` and affine equalities. Each barrier stage minimizes
//!
//! ```text
//! phi_t(x) = -t c.x - sum_i ln(-g_i(x))
//! ```
//!
//! by damped Newton steps with a backtracking line search that keeps every
//! iterate strictly inside the domain. `t` grows tenfold per stage until the
//! duality-gap bound `m / t` falls below a tenth of the tolerance. Starts
//! that are not strictly feasible go through a phase-1 program that
//! minimizes the largest constraint value first.
//!
//! The method is deterministic: no randomization and a fixed barrier
//! schedule, so identical programs give bit-identical iterates.

mod kkt;
mod program;

pub use kkt::kkt_residual;
pub use program::{Constraint, EqualityRow, LinearConstraint, LocalEval, SmoothProgram};

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    MaxIterations,
    Infeasible,
    NumericalFailure,
}

/// One row of the diagnostic trace, recorded after each barrier stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Barrier weight `1/t`.
    pub mu: f64,
    pub objective: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStatus {
    pub status: Status,
    /// Stationarity, complementarity and feasibility certificate: the
    /// [`kkt_residual`] for small programs, otherwise built from the barrier
    /// multipliers `1 / (t (-g_i))`.
    pub kkt_residual: f64,
    /// Newton steps taken, phase 1 included.
    pub iterations: usize,
    pub objective: f64,
    /// Largest elastic slack at the solution, zero unless elastic mode was
    /// requested.
    pub elastic_slack: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub t0: f64,
    pub growth: f64,
    pub trace: bool,
    /// Penalty weight of elastic mode. When set, every soft inequality
    /// becomes `g_i(x) <= sigma_i` with its own `sigma_i >= 0` charged at
    /// this weight in the objective. Hard constraints keep a phase 1.
    pub elastic: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iterations: 2000,
            t0: 1.0,
            growth: 10.0,
            trace: false,
            elastic: None,
        }
    }
}

const MAX_CENTERING: usize = 80;
const NNLS_LIMIT: usize = 256;
const ARMIJO: f64 = 0.01;
const PHASE1_MARGIN: f64 = 1e-6;
const PHASE1_BOX: f64 = 1e3;

/// Solves `prog` to tolerance `tol` with default settings.
pub fn solve(prog: &SmoothProgram, tol: f64) -> (Vec<f64>, SolveStatus) {
    solve_with(
        prog,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

/// Writes a trace as CSV with a `# schema=1` header line.
pub fn write_trace_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    writeln!(f, "# schema=1").map_err(io)?;
    let mut w = csv::Writer::from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn solve_with(prog: &SmoothProgram, opts: &SolverOptions) -> (Vec<f64>, SolveStatus) {
    let bounds = prog.bound_constraints();
    let mut cons: Vec<(&dyn Constraint, bool)> = prog.constraints.iter().map(|c| (c.as_ref(), true)).collect();
    cons.extend(bounds.iter().map(|c| (c as &dyn Constraint, true)));
    let (a, b) = equality_block(prog);

    let mut x0 = prog.start.clone();
    project_onto_equalities(&a, &b, &mut x0);

    let mut total = 0usize;
    let mut trace = Vec::new();
    let n = prog.n;

    let plain = Core::new(n, prog.objective.clone(), cons.clone(), None, &a, &b);
    if let Some(weight) = opts.elastic {
        return solve_elastic(prog, &plain, cons, x0, weight, opts, &a, &b);
    }
    let strictly_feasible = match plain.values(&x0) {
        Some(v) => v.iter().all(|g| *g < 0.0),
        None => false,
    };

    if !strictly_feasible {
        match phase_one(&plain, &cons, x0, opts, &a, &b, &mut total, &mut trace) {
            Ok(x) => x0 = x,
            Err((x, t)) => return finish(prog, &plain, x, Status::Infeasible, t, total, trace, opts.tol),
        }
    }

    let out = plain.run(x0, opts, |_| false, &mut total, &mut trace);
    finish(prog, &plain, out.x, out.status, out.t, total, trace, opts.tol)
}

/// `g - by`.
struct Offset<'a> {
    inner: &'a dyn Constraint,
    by: f64,
}

impl Constraint for Offset<'_> {
    fn support(&self) -> &[usize] {
        self.inner.support()
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let ok = self.inner.eval(x, want_hess, out);
        out.value -= self.by;
        ok
    }

    fn is_linear(&self) -> bool {
        self.inner.is_linear()
    }
}

/// Finds a point where every constraint of `core` is strictly satisfied:
/// minimize `s` subject to `g_i(x) <= s`, `s >= -1`, inside a wide box
/// around the start that keeps the barrier bounded below.
#[allow(clippy::too_many_arguments)]
fn phase_one(
    core: &Core<'_>,
    cons: &[(&dyn Constraint, bool)],
    x0: Vec<f64>,
    opts: &SolverOptions,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    total: &mut usize,
    trace: &mut Vec<TraceRow>,
) -> std::result::Result<Vec<f64>, (Vec<f64>, f64)> {
    let n = x0.len();
    let Some(vals) = core.values(&x0) else {
        return Err((x0, 1.0));
    };
    let s0 = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0) + 1.0;
    let floor = LinearConstraint::new(&[(n, -1.0)], 1.0);
    let mut box_rows = Vec::with_capacity(2 * n);
    for (i, &v) in x0.iter().enumerate() {
        let r = PHASE1_BOX * (1.0 + v.abs());
        box_rows.push(LinearConstraint::new(&[(i, 1.0)], v + r));
        box_rows.push(LinearConstraint::new(&[(i, -1.0)], r - v));
    }
    let mut cons1 = cons.to_vec();
    cons1.push((&floor, false));
    cons1.extend(box_rows.iter().map(|c| (c as &dyn Constraint, false)));
    let mut c1 = vec![0.0; n + 1];
    c1[n] = -1.0;
    let a1 = a.clone().insert_column(n, 0.0);
    let core1 = Core::new(n + 1, c1, cons1, Some(n), &a1, b);
    let mut y = x0;
    y.push(s0);
    let out = core1.run(y, opts, |y| y[n] <= -PHASE1_MARGIN, total, trace);
    let mut x = out.x;
    let s = x.pop().unwrap();
    if s > -PHASE1_MARGIN || !core.values(&x).is_some_and(|v| v.iter().all(|g| *g < 0.0)) {
        return Err((x, out.t));
    }
    Ok(x)
}

#[allow(clippy::too_many_arguments)]
fn solve_elastic<'a>(
    prog: &SmoothProgram,
    plain: &Core<'a>,
    cons: Vec<(&'a dyn Constraint, bool)>,
    mut x0: Vec<f64>,
    weight: f64,
    opts: &SolverOptions,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> (Vec<f64>, SolveStatus) {
    let n = prog.n;
    let mut total = 0usize;
    let mut trace = Vec::new();
    let soft = |i: usize| prog.soft.get(i).copied().unwrap_or(false);
    let hard: Vec<(&dyn Constraint, bool)> =
        cons.iter().enumerate().filter(|(i, _)| !soft(*i)).map(|(_, c)| *c).collect();

    // soft constraints stay in phase 1 only to keep iterates in their
    // domains, lowered far enough to hold at the start
    let Some(vals) = plain.values(&x0) else {
        return finish(prog, plain, x0, Status::Infeasible, 1.0, 0, trace, opts.tol);
    };
    let lowered: Vec<Offset<'_>> = cons
        .iter()
        .enumerate()
        .filter(|(i, _)| soft(*i))
        .map(|(i, (c, _))| Offset {
            inner: *c,
            by: vals[i].max(0.0) + 1.0,
        })
        .collect();
    let mut relaxed = hard.clone();
    relaxed.extend(lowered.iter().map(|c| (c as &dyn Constraint, true)));
    let relaxed_core = Core::new(n, prog.objective.clone(), relaxed.clone(), None, a, b);
    let hard_ok = relaxed_core.values(&x0).is_some_and(|v| v.iter().all(|g| *g < 0.0));
    if !hard_ok {
        match phase_one(&relaxed_core, &relaxed, x0, opts, a, b, &mut total, &mut trace) {
            Ok(x) => x0 = x,
            Err((x, t)) => return finish(prog, plain, x, Status::Infeasible, t, total, trace, opts.tol),
        }
    }

    let Some(vals) = plain.values(&x0) else {
        return finish(prog, plain, x0, Status::Infeasible, 1.0, total, trace, opts.tol);
    };
    // one slack per soft constraint, priced in the objective
    let soft_ix: Vec<usize> = (0..prog.constraints.len()).filter(|&i| soft(i)).collect();
    let k = soft_ix.len();
    let wrapped: Vec<Elastic<'_>> = soft_ix
        .iter()
        .enumerate()
        .map(|(j, &i)| Elastic::new(cons[i].0, n + j))
        .collect();
    let floors: Vec<LinearConstraint> = (0..k).map(|j| LinearConstraint::new(&[(n + j, -1.0)], 0.0)).collect();
    let mut cons1: Vec<(&dyn Constraint, bool)> =
        cons.iter().enumerate().filter(|(i, _)| !soft(*i)).map(|(_, c)| *c).collect();
    cons1.extend(wrapped.iter().map(|c| (c as &dyn Constraint, false)));
    cons1.extend(floors.iter().map(|c| (c as &dyn Constraint, false)));
    let mut c1 = prog.objective.clone();
    c1.extend(std::iter::repeat(-weight).take(k));
    let a1 = a.clone().resize_horizontally(n + k, 0.0);
    let core1 = Core::new(n + k, c1, cons1, None, &a1, b);
    let mut y = x0;
    y.extend(soft_ix.iter().map(|&i| vals[i].max(0.0) + 1.0));
    let out = core1.run(y, opts, |_| false, &mut total, &mut trace);
    let mut x = out.x;
    let sigma = x.split_off(n).into_iter().fold(0.0f64, f64::max);
    let status = if out.status == Status::Optimal && sigma > opts.tol {
        Status::Infeasible
    } else {
        out.status
    };
    let (x, mut st) = finish(prog, plain, x, status, out.t, total, trace, opts.tol);
    st.elastic_slack = sigma;
    (x, st)
}

/// `g(x) - sigma` over the support of `g` plus the slack `sigma`.
struct Elastic<'a> {
    inner: &'a dyn Constraint,
    support: Vec<usize>,
}

impl<'a> Elastic<'a> {
    fn new(inner: &'a dyn Constraint, slack: usize) -> Self {
        let mut support = inner.support().to_vec();
        support.push(slack);
        Elastic { inner, support }
    }
}

impl Constraint for Elastic<'_> {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let k = x.len() - 1;
        let mut local = LocalEval::with_size(k);
        if !self.inner.eval(&x[..k], want_hess, &mut local) {
            return false;
        }
        out.value = local.value - x[k];
        out.grad[..k].copy_from_slice(&local.grad);
        out.grad[k] = -1.0;
        if want_hess {
            for i in 0..k {
                for j in 0..k {
                    *out.h(i, j) = local.hess[i * k + j];
                }
            }
        }
        true
    }

    fn is_linear(&self) -> bool {
        self.inner.is_linear()
    }
}

fn finish(
    prog: &SmoothProgram,
    core: &Core<'_>,
    x: Vec<f64>,
    status: Status,
    t: f64,
    iterations: usize,
    trace: Vec<TraceRow>,
    tol: f64,
) -> (Vec<f64>, SolveStatus) {
    // Barrier multipliers lose accuracy as g_i -> 0 through cancellation,
    // so small programs get the least-squares certificate instead.
    let small = prog.n + prog.constraints.len() + 2 * prog.n <= NNLS_LIMIT;
    let cert = if small { kkt_residual(prog, &x) } else { core.certificate(&x, t) };
    let status = match status {
        Status::Optimal if small && cert > tol => Status::NumericalFailure,
        s => s,
    };
    let objective = prog.objective_value(&x);
    (
        x,
        SolveStatus {
            status,
            kkt_residual: cert,
            iterations,
            objective,
            elastic_slack: 0.0,
            trace,
        },
    )
}

fn equality_block(prog: &SmoothProgram) -> (DMatrix<f64>, DVector<f64>) {
    let p = prog.equalities.len();
    let mut a = DMatrix::zeros(p, prog.n);
    let mut b = DVector::zeros(p);
    for (r, row) in prog.equalities.iter().enumerate() {
        for &(j, v) in &row.terms {
            a[(r, j)] += v;
        }
        b[r] = row.rhs;
    }
    (a, b)
}

fn project_onto_equalities(a: &DMatrix<f64>, b: &DVector<f64>, x: &mut [f64]) {
    if a.nrows() == 0 {
        return;
    }
    let xv = DVector::from_column_slice(x);
    let r = b - a * &xv;
    if r.amax() <= 1e-12 * (1.0 + b.amax()) {
        return;
    }
    let gram = a * a.transpose();
    if let Some(w) = gram.lu().solve(&r) {
        let dx = a.transpose() * w;
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi += d;
        }
    }
}

struct RunOutcome {
    x: Vec<f64>,
    status: Status,
    t: f64,
}

struct Core<'a> {
    n: usize,
    c: Vec<f64>,
    cons: Vec<(&'a dyn Constraint, bool)>,
    shift: Option<usize>,
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
}

impl<'a> Core<'a> {
    fn new(
        n: usize,
        c: Vec<f64>,
        cons: Vec<(&'a dyn Constraint, bool)>,
        shift: Option<usize>,
        a: &'a DMatrix<f64>,
        b: &'a DVector<f64>,
    ) -> Self {
        Core { n, c, cons, shift, a, b }
    }

    fn m(&self) -> usize {
        self.cons.len()
    }

    fn shift_of(&self, x: &[f64], shifted: bool) -> f64 {
        match (self.shift, shifted) {
            (Some(s), true) => x[s],
            _ => 0.0,
        }
    }

    /// Constraint values, `None` outside the domain of any constraint.
    fn values(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.m());
        let mut ev = LocalEval::default();
        let mut lx = Vec::new();
        for &(c, shifted) in &self.cons {
            let sup = c.support();
            lx.clear();
            lx.extend(sup.iter().map(|&i| x[i]));
            ev.reset(sup.len());
            if !c.eval(&lx, false, &mut ev) || !ev.value.is_finite() {
                return None;
            }
            out.push(ev.value - self.shift_of(x, shifted));
        }
        Some(out)
    }

    /// `phi_t` at `x`, `None` unless strictly feasible.
    fn barrier(&self, x: &[f64], t: f64) -> Option<f64> {
        let v = self.values(x)?;
        let mut phi = -t * self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>();
        for g in v {
            if !(g < 0.0) {
                return None;
            }
            phi -= (-g).ln();
        }
        Some(phi)
    }

    /// Gradient and Hessian of `phi_t`; `None` outside the strict interior.
    fn derivatives(&self, x: &[f64], t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.n;
        let mut grad = DVector::from_iterator(n, self.c.iter().map(|c| -t * c));
        let mut hess = DMatrix::<f64>::zeros(n, n);
        let mut ev = LocalEval::default();
        let mut lx = Vec::new();
        let mut idx: Vec<usize> = Vec::new();
        let mut gl: Vec<f64> = Vec::new();
        for &(c, shifted) in &self.cons {
            let sup = c.support();
            let k = sup.len();
            lx.clear();
            lx.extend(sup.iter().map(|&i| x[i]));
            ev.reset(k);
            if !c.eval(&lx, !c.is_linear(), &mut ev) {
                return None;
            }
            let g = ev.value - self.shift_of(x, shifted);
            if !(g < 0.0) {
                return None;
            }
            let inv = 1.0 / (-g);
            idx.clear();
            idx.extend_from_slice(sup);
            gl.clear();
            gl.extend_from_slice(&ev.grad);
            if let (Some(s), true) = (self.shift, shifted) {
                idx.push(s);
                gl.push(-1.0);
            }
            for (p, &i) in idx.iter().enumerate() {
                grad[i] += inv * gl[p];
            }
            let inv2 = inv * inv;
            for (p, &i) in idx.iter().enumerate() {
                let gp = inv2 * gl[p];
                if gp == 0.0 {
                    continue;
                }
                for (q, &j) in idx.iter().enumerate() {
                    hess[(i, j)] += gp * gl[q];
                }
            }
            if !c.is_linear() {
                for p in 0..k {
                    for q in 0..k {
                        let h = ev.hess[p * k + q];
                        if h != 0.0 {
                            hess[(sup[p], sup[q])] += inv * h;
                        }
                    }
                }
            }
        }
        Some((grad, hess))
    }

    /// Newton direction for `phi_t` under the equality block.
    fn newton_step(&self, x: &[f64], grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
        let n = self.n;
        let p = self.a.nrows();
        if p == 0 {
            return cholesky_with_ridge(hess, grad);
        }
        let mut k = DMatrix::zeros(n + p, n + p);
        k.view_mut((0, 0), (n, n)).copy_from(&hess);
        k.view_mut((n, 0), (p, n)).copy_from(self.a);
        k.view_mut((0, n), (n, p)).copy_from(&self.a.transpose());
        let xv = DVector::from_column_slice(x);
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&(-grad));
        rhs.rows_mut(n, p).copy_from(&(self.b - self.a * xv));
        let sol = k.lu().solve(&rhs)?;
        let dx = sol.rows(0, n).into_owned();
        dx.iter().all(|v| v.is_finite()).then_some(dx)
    }

    fn run(
        &self,
        mut x: Vec<f64>,
        opts: &SolverOptions,
        stop_early: impl Fn(&[f64]) -> bool,
        total: &mut usize,
        trace: &mut Vec<TraceRow>,
    ) -> RunOutcome {
        let m = self.m().max(1) as f64;
        let mut t = opts.t0;
        let mut stalls = 0usize;
        loop {
            let mut stalled = false;
            // stationarity error is about the Newton decrement divided by t |g|
            let center_tol = 0.5 * (0.01 * opts.tol).powi(2);
            let mut last_dec = f64::INFINITY;
            for _ in 0..MAX_CENTERING {
                let Some((grad, hess)) = self.derivatives(&x, t) else {
                    return RunOutcome {
                        x,
                        status: Status::NumericalFailure,
                        t,
                    };
                };
                let Some(dx) = self.newton_step(&x, &grad, hess) else {
                    stalled = true;
                    break;
                };
                let slope = grad.dot(&dx);
                let dec = -slope / 2.0;
                if dec <= center_tol || (dec < 1e-9 && dec >= 0.5 * last_dec) {
                    break;
                }
                last_dec = dec;
                let Some(phi) = self.barrier(&x, t) else {
                    stalled = true;
                    break;
                };
                let mut step = 1.0;
                let mut accepted = None;
                for _ in 0..60 {
                    let cand: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + step * d).collect();
                    if let Some(pc) = self.barrier(&cand, t) {
                        if pc <= phi + ARMIJO * step * slope + 1e-13 * phi.abs() {
                            accepted = Some(cand);
                            break;
                        }
                    }
                    step *= 0.5;
                }
                let Some(cand) = accepted else {
                    stalled = true;
                    break;
                };
                x = cand;
                *total += 1;
                if stop_early(&x) {
                    return RunOutcome {
                        x,
                        status: Status::Optimal,
                        t,
                    };
                }
                if *total >= opts.max_iterations {
                    return RunOutcome {
                        x,
                        status: Status::MaxIterations,
                        t,
                    };
                }
            }
            if stalled {
                stalls += 1;
            }
            if opts.trace {
                trace.push(TraceRow {
                    iteration: *total,
                    mu: 1.0 / t,
                    objective: self.c.iter().zip(&x).map(|(c, x)| c * x).sum(),
                    residual: self.certificate(&x, t),
                });
            }
            if m / t <= 0.1 * opts.tol {
                let status = if stalls > 0 {
                    Status::NumericalFailure
                } else {
                    Status::Optimal
                };
                return RunOutcome { x, status, t };
            }
            t *= opts.growth;
        }
    }

    /// `max(stationarity, complementarity, infeasibility)` with multipliers
    /// `lambda_i = 1 / (t (-g_i))`; equality multipliers by least squares.
    fn certificate(&self, x: &[f64], t: f64) -> f64 {
        let n = self.n;
        let mut r = DVector::from_column_slice(&self.c);
        let mut ev = LocalEval::default();
        let mut lx = Vec::new();
        let mut comp = 0.0f64;
        let mut infeas = 0.0f64;
        for &(c, shifted) in &self.cons {
            let sup = c.support();
            lx.clear();
            lx.extend(sup.iter().map(|&i| x[i]));
            ev.reset(sup.len());
            if !c.eval(&lx, false, &mut ev) {
                return f64::INFINITY;
            }
            let g = ev.value - self.shift_of(x, shifted);
            infeas = infeas.max(g);
            if g < 0.0 {
                let lam = 1.0 / (t * -g);
                comp = comp.max(lam * -g);
                for (p, &i) in sup.iter().enumerate() {
                    r[i] -= lam * ev.grad[p];
                }
                if let (Some(s), true) = (self.shift, shifted) {
                    r[s] += lam;
                }
            }
        }
        let mut eq = 0.0f64;
        if self.a.nrows() > 0 {
            let xv = DVector::from_column_slice(&x[..n]);
            eq = (self.b - self.a * xv).amax();
            let gram = self.a * self.a.transpose();
            if let Some(nu) = gram.lu().solve(&(self.a * &r)) {
                r -= self.a.transpose() * nu;
            }
        }
        let scale = self.c.iter().fold(1.0f64, |s, c| s.max(c.abs()));
        (r.amax() / scale).max(comp).max(infeas).max(eq)
    }
}

/// Solves `h dx = -grad` by Cholesky, adding a growing ridge if `h` is not
/// numerically positive definite.
fn cholesky_with_ridge(mut h: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let diag_max = (0..n).map(|i| h[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        if let Some(ch) = h.clone().cholesky() {
            let dx = ch.solve(&(-grad));
            if dx.iter().all(|v| v.is_finite()) {
                return Some(dx);
            }
        }
        let next = if ridge == 0.0 { 1e-14 * diag_max } else { ridge * 100.0 };
        for i in 0..n {
            h[(i, i)] += next - ridge;
        }
        ridge = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Log2Gain {
        idx: [usize; 2],
    }

    // eta - log2(1 + 10 p) <= 0 over (p, eta)
    impl Constraint for Log2Gain {
        fn support(&self) -> &[usize] {
            &self.idx
        }
        fn eval(&self, x: &[f64], _h: bool, out: &mut LocalEval) -> bool {
            let arg = 1.0 + 10.0 * x[0];
            if arg <= 0.0 {
                return false;
            }
            let l2 = std::f64::consts::LN_2;
            out.value = x[1] - arg.ln() / l2;
            out.grad[0] = -10.0 / (arg * l2);
            out.grad[1] = 1.0;
            *out.h(0, 0) = 100.0 / (arg * arg * l2);
            true
        }
    }

    #[test]
    fn one_dimensional_bound() {
        let mut p = SmoothProgram::new(1).maximize(vec![1.0]);
        p.add_linear(&[(0, 1.0)], 3.0);
        let (x, st) = solve(&p, 1e-8);
        assert_eq!(st.status, Status::Optimal);
        assert!((x[0] - 3.0).abs() < 1e-8);
        assert!(kkt_residual(&p, &x) <= 1e-8);
    }

    #[test]
    fn concave_log_objective() {
        let mut p = SmoothProgram::new(2).maximize(vec![0.0, 1.0]).start_at(vec![0.05, 0.0]);
        p.bound(0, 0.0, 0.1);
        p.add(Log2Gain { idx: [0, 1] });
        let (x, st) = solve(&p, 1e-8);
        assert_eq!(st.status, Status::Optimal);
        assert!((x[0] - 0.1).abs() < 1e-7, "{x:?}");
        assert!((x[1] - 1.0).abs() < 1e-7);
        assert!(kkt_residual(&p, &x) <= 1e-8);
    }

    fn simplex_lp(c: [f64; 4]) -> SmoothProgram {
        // variables a[r][n] at r * 2 + n
        let mut p = SmoothProgram::new(4).maximize(c.to_vec()).start_at(vec![0.25; 4]);
        for n in 0..2 {
            p.add_linear(&[(n, 1.0), (2 + n, 1.0)], 1.0);
        }
        for i in 0..4 {
            p.bound(i, 0.0, 1.0);
        }
        p
    }

    #[test]
    fn lp_matches_vertex_enumeration() {
        let c = [1.0, 2.0, 3.0, 1.0];
        let p = simplex_lp(c);
        let (x, st) = solve(&p, 1e-8);
        assert_eq!(st.status, Status::Optimal);
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for n in 0..2 {
            let mut r = vec![0.0; 4];
            r[n] = 1.0;
            r[2 + n] = 1.0;
            rows.push(r);
            rhs.push(1.0);
        }
        for i in 0..4 {
            let mut r = vec![0.0; 4];
            r[i] = 1.0;
            rows.push(r.clone());
            rhs.push(1.0);
            r[i] = -1.0;
            rows.push(r);
            rhs.push(0.0);
        }
        let (_, best) = crn_uav_oracle::lp_vertex_enumeration(&c, &rows, &rhs).unwrap();
        assert!((st.objective - best).abs() < 1e-7, "{} vs {best}", st.objective);
        assert!(kkt_residual(&p, &x) <= 1e-8);
        assert!(kkt_residual(&p, &[0.25; 4]) > 0.1);
    }

    #[test]
    fn zero_objective_has_zero_residual() {
        let p = SmoothProgram::new(3);
        assert_eq!(kkt_residual(&p, &[1.0, -2.0, 5.0]), 0.0);
    }

    #[test]
    fn infeasible_start_goes_through_phase_one() {
        let mut p = SmoothProgram::new(2).maximize(vec![1.0, 1.0]).start_at(vec![5.0, -3.0]);
        p.add_linear(&[(0, 1.0), (1, 1.0)], 1.0);
        p.bound(0, 0.0, 1.0);
        p.bound(1, 0.0, 1.0);
        let (x, st) = solve(&p, 1e-8);
        assert_eq!(st.status, Status::Optimal);
        assert!((x[0] + x[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn empty_feasible_set_is_reported() {
        let mut p = SmoothProgram::new(1).maximize(vec![1.0]);
        p.bound(0, 2.0, 1.0);
        let (_, st) = solve(&p, 1e-8);
        assert_eq!(st.status, Status::Infeasible);
    }

    #[test]
    fn equalities_are_respected() {
        // max x + 2y s.t. x + y = 1, 0 <= x, y <= 0.8
        let mut p = SmoothProgram::new(2).maximize(vec![1.0, 2.0]).start_at(vec![0.0, 0.0]);
        p.add_equality(&[(0, 1.0), (1, 1.0)], 1.0);
        p.bound(0, 0.0, 0.8);
        p.bound(1, 0.0, 0.8);
        let (x, st) = solve(&p, 1e-8);
        assert_eq!(st.status, Status::Optimal);
        assert!((x[0] - 0.2).abs() < 1e-7 && (x[1] - 0.8).abs() < 1e-7, "{x:?}");
        assert!(kkt_residual(&p, &x) <= 1e-7);
    }

    #[test]
    fn deterministic_iterates() {
        let p = simplex_lp([0.3, 0.1, 0.2, 0.9]);
        let opts = SolverOptions {
            trace: true,
            ..SolverOptions::default()
        };
        let (x1, s1) = solve_with(&p, &opts);
        let (x2, s2) = solve_with(&p, &opts);
        assert_eq!(x1, x2);
        assert_eq!(s1, s2);
        assert!(!s1.trace.is_empty());
    }

    #[test]
    fn trace_csv_has_schema_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let rows = vec![TraceRow {
            iteration: 3,
            mu: 0.1,
            objective: 2.0,
            residual: 1e-3,
        }];
        write_trace_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# schema=1\niteration,mu,objective,residual\n3,"));
    }
}
