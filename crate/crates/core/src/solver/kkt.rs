use nalgebra::{DMatrix, DVector};

use super::program::{Constraint, LocalEval, SmoothProgram};

/// KKT residual of `point` for `prog`, independent of any solver state.
///
/// Multipliers are fitted by nonnegative least squares on
/// `|c - J^T lambda - A^T nu|^2 + |diag(g) lambda|^2`, and the result is the
/// largest of the stationarity, complementarity, inequality-violation and
/// equality-violation infinity norms. Zero exactly at a KKT point.
pub fn kkt_residual(prog: &SmoothProgram, point: &[f64]) -> f64 {
    let n = prog.n;
    let bounds = prog.bound_constraints();
    let cons: Vec<&dyn Constraint> = prog
        .constraints
        .iter()
        .map(|c| c.as_ref())
        .chain(bounds.iter().map(|c| c as &dyn Constraint))
        .collect();
    let m = cons.len();
    let p = prog.equalities.len();

    let mut jt = DMatrix::<f64>::zeros(n, m);
    let mut g = vec![0.0; m];
    let mut ev = LocalEval::default();
    for (i, c) in cons.iter().enumerate() {
        let sup = c.support();
        let lx: Vec<f64> = sup.iter().map(|&j| point[j]).collect();
        ev.reset(sup.len());
        if !c.eval(&lx, false, &mut ev) {
            return f64::INFINITY;
        }
        g[i] = ev.value;
        for (k, &j) in sup.iter().enumerate() {
            jt[(j, i)] += ev.grad[k];
        }
    }
    let mut at = DMatrix::<f64>::zeros(n, p);
    let mut eq = 0.0f64;
    for (r, row) in prog.equalities.iter().enumerate() {
        let mut v = -row.rhs;
        for &(j, a) in &row.terms {
            at[(j, r)] += a;
            v += a * point[j];
        }
        eq = eq.max(v.abs());
    }

    // unknowns: lambda (m), nu+ (p), nu- (p)
    let k = m + 2 * p;
    let mut design = DMatrix::<f64>::zeros(n + m, k);
    design.view_mut((0, 0), (n, m)).copy_from(&jt);
    design.view_mut((0, m), (n, p)).copy_from(&at);
    design.view_mut((0, m + p), (n, p)).copy_from(&(-&at));
    for i in 0..m {
        design[(n + i, i)] = g[i];
    }
    let mut target = DVector::<f64>::zeros(n + m);
    target.rows_mut(0, n).copy_from_slice(&prog.objective);
    let y = nnls(&design, &target);

    let fit = &design * &y;
    let stat = (0..n).map(|i| (target[i] - fit[i]).abs()).fold(0.0, f64::max);
    let comp = (0..m).map(|i| (g[i] * y[i]).abs()).fold(0.0, f64::max);
    let infeas = g.iter().cloned().fold(0.0, f64::max);
    stat.max(comp).max(infeas).max(eq)
}

/// Lawson-Hanson active-set solver for `min |e y - f|` subject to `y >= 0`.
fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let k = e.ncols();
    let mut y = DVector::<f64>::zeros(k);
    if k == 0 {
        return y;
    }
    let mut passive = vec![false; k];
    let tol = 1e-14 * e.amax().max(1.0) * f.amax().max(1.0) * (k as f64);
    for _ in 0..(3 * k + 30) {
        let w = e.transpose() * (f - e * &y);
        let cand = (0..k)
            .filter(|&j| !passive[j])
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(j) = cand else { break };
        if w[j] <= tol {
            break;
        }
        passive[j] = true;
        // Each pass drops at least one passive column.
        for _ in 0..=k {
            let z = passive_solution(e, f, &passive);
            let bad: Vec<usize> = (0..k).filter(|&i| passive[i] && !(z[i] > 0.0)).collect();
            if bad.is_empty() {
                y = z;
                break;
            }
            let ratio = |i: usize| {
                let d = y[i] - z[i];
                if d > 0.0 && d.is_finite() {
                    (y[i] / d).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            };
            let blocking = bad.iter().copied().min_by(|&a, &b| ratio(a).total_cmp(&ratio(b))).unwrap();
            let alpha = ratio(blocking);
            for i in 0..k {
                if passive[i] {
                    y[i] += alpha * (z[i] - y[i]);
                    if i == blocking || !(y[i] > 1e-300) {
                        y[i] = 0.0;
                        passive[i] = false;
                    }
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    y
}

/// Unconstrained least squares over the passive columns, zero elsewhere.
fn passive_solution(e: &DMatrix<f64>, f: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = e.select_columns(&cols);
    let mut z = DVector::<f64>::zeros(passive.len());
    let svd = sub.svd(true, true);
    if let Ok(sol) = svd.solve(f, 1e-13) {
        for (p, &c) in cols.iter().enumerate() {
            z[c] = sol[p];
        }
    }
    z
}
