//! Tiny dense linear algebra and exhaustive LP/QP oracles.

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` for (numerically) singular systems.
pub fn solve_linear_system(m: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = m.iter().map(|r| r.clone()).collect();
    let mut b = rhs.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn subsets(m: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, size, &mut Vec::new(), &mut out);
    out
}

/// Maximizes `c^T x` subject to `a x <= b` by enumerating every vertex
/// (every choice of `n` active rows). Returns the best feasible vertex and
/// its objective, or `None` when no vertex exists.
pub fn lp_vertex_enumeration(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = c.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for active in subsets(b.len(), n) {
        let rows: Vec<Vec<f64>> = active.iter().map(|&i| a[i].clone()).collect();
        let rhs: Vec<f64> = active.iter().map(|&i| b[i]).collect();
        let Some(x) = solve_linear_system(&rows, &rhs) else {
            continue;
        };
        let feasible = a
            .iter()
            .zip(b)
            .all(|(row, &bi)| dot(row, &x) <= bi + 1e-9 * (1.0 + bi.abs()));
        if !feasible {
            continue;
        }
        let v = dot(c, &x);
        if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((x, v));
        }
    }
    best
}

/// Maximizes `c^T x - 0.5 x^T q x` (with `q` positive definite) subject to
/// `a x <= b` by enumerating every active set and keeping the KKT point.
pub fn qp_active_set_enumeration(
    q: &[Vec<f64>],
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let n = c.len();
    let m = b.len();
    let objective = |x: &[f64]| {
        let quad: f64 = (0..n).map(|i| x[i] * dot(&q[i], x)).sum();
        dot(c, x) - 0.5 * quad
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for size in 0..=n.min(m) {
        for active in subsets(m, size) {
            // [q a_S^T; a_S 0] [x; lambda] = [c; b_S]
            let k = n + size;
            let mut kkt = vec![vec![0.0; k]; k];
            let mut rhs = vec![0.0; k];
            for i in 0..n {
                kkt[i][..n].copy_from_slice(&q[i]);
                rhs[i] = c[i];
            }
            for (s, &row) in active.iter().enumerate() {
                for j in 0..n {
                    kkt[n + s][j] = a[row][j];
                    kkt[j][n + s] = a[row][j];
                }
                rhs[n + s] = b[row];
            }
            let Some(sol) = solve_linear_system(&kkt, &rhs) else {
                continue;
            };
            let x = &sol[..n];
            if sol[n..].iter().any(|&l| l < -1e-10) {
                continue;
            }
            if !a
                .iter()
                .zip(b)
                .all(|(row, &bi)| dot(row, x) <= bi + 1e-9 * (1.0 + bi.abs()))
            {
                continue;
            }
            let v = objective(x);
            if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                best = Some((x.to_vec(), v));
            }
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
