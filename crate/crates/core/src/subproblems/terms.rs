//! Constraint oracles shared by the trajectory blocks.

use crate::sca::{RateTaylor, DEG};
use crate::solver::{Constraint, LocalEval};

/// Smoothing length for horizontal distances, m.
pub const DISTANCE_SMOOTHING: f64 = 1e-3;
/// Smoothing of the speed norm inside the cubic parasite term, m/s.
pub const SPEED_SMOOTHING: f64 = 1e-9;

pub(crate) type V2 = [f64; 2];
pub(crate) type M2 = [[f64; 2]; 2];

fn outer(a: V2, b: V2) -> M2 {
    [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]]
}

fn axpy_m(acc: &mut M2, k: f64, m: &M2) {
    for i in 0..2 {
        for j in 0..2 {
            acc[i][j] += k * m[i][j];
        }
    }
}

const I2: M2 = [[1.0, 0.0], [0.0, 1.0]];

/// Smoothed distance `sqrt(|q - w|^2 + eps^2)` with gradient and Hessian.
pub(crate) fn smooth_distance(q: V2, w: V2) -> (f64, V2, M2) {
    let d = [q[0] - w[0], q[1] - w[1]];
    let s = (d[0] * d[0] + d[1] * d[1] + DISTANCE_SMOOTHING * DISTANCE_SMOOTHING).sqrt();
    let g = [d[0] / s, d[1] / s];
    let mut h = I2;
    axpy_m(&mut h, -1.0, &outer(g, g));
    for row in &mut h {
        row[0] /= s;
        row[1] /= s;
    }
    (s, g, h)
}

/// `h = 1 / (p t)` for positive concave `p` and affine `t`, with
/// `grad h = h G`, `hess h = h (G G^T + hess ln h)`.
pub(crate) fn recip_product(p: f64, dp: V2, d2p: M2, t: f64, dt: V2) -> (f64, V2, M2) {
    let h = 1.0 / (p * t);
    let g = [-(dp[0] / p + dt[0] / t), -(dp[1] / p + dt[1] / t)];
    let mut hess = outer(g, g);
    axpy_m(&mut hess, -1.0 / p, &d2p);
    axpy_m(&mut hess, 1.0 / (p * p), &outer(dp, dp));
    axpy_m(&mut hess, 1.0 / (t * t), &outer(dt, dt));
    for row in &mut hess {
        row[0] *= h;
        row[1] *= h;
    }
    (h, [h * g[0], h * g[1]], hess)
}

/// A 2-vector that is a linear function of a few variables, with
/// duplicated indices merged.
#[derive(Debug, Clone)]
pub(crate) struct Lin2 {
    pub support: Vec<usize>,
    pub rows: [Vec<f64>; 2],
}

impl Lin2 {
    /// `terms`: `(variable of the x component, variable of the y component, coefficient)`.
    pub fn new(terms: &[(usize, usize, f64)]) -> Self {
        let mut support: Vec<usize> = Vec::new();
        let mut rows = [Vec::new(), Vec::new()];
        let put = |var: usize, row: usize, c: f64, support: &mut Vec<usize>, rows: &mut [Vec<f64>; 2]| {
            let k = match support.iter().position(|&s| s == var) {
                Some(k) => k,
                None => {
                    support.push(var);
                    rows[0].push(0.0);
                    rows[1].push(0.0);
                    support.len() - 1
                }
            };
            rows[row][k] += c;
        };
        for &(ix, iy, c) in terms {
            put(ix, 0, c, &mut support, &mut rows);
            put(iy, 1, c, &mut support, &mut rows);
        }
        Lin2 { support, rows }
    }

    pub fn eval(&self, x: &[f64]) -> V2 {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        [dot(&self.rows[0]), dot(&self.rows[1])]
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|c| *c == 0.0)
    }
}

/// `|M x|^2 / scale^2 - 1 <= 0`.
pub(crate) struct NormBound {
    pub map: Lin2,
    pub scale: f64,
}

impl Constraint for NormBound {
    fn support(&self) -> &[usize] {
        &self.map.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let v = self.map.eval(x);
        let s2 = self.scale * self.scale;
        out.value = (v[0] * v[0] + v[1] * v[1]) / s2 - 1.0;
        let k = x.len();
        for i in 0..k {
            out.grad[i] = 2.0 * (v[0] * self.map.rows[0][i] + v[1] * self.map.rows[1][i]) / s2;
        }
        if want_hess {
            for i in 0..k {
                for j in 0..k {
                    *out.h(i, j) = 2.0
                        * (self.map.rows[0][i] * self.map.rows[0][j] + self.map.rows[1][i] * self.map.rows[1][j])
                        / s2;
                }
            }
        }
        true
    }
}

/// `1/lambda^2 - [linearized lambda^2 + |v|^2/v0^2] <= 0`. The support is the
/// velocity map followed by `lambda`.
pub(crate) struct LambdaBound {
    pub vel: Lin2,
    pub support: Vec<usize>,
    pub lambda_k: f64,
    pub v_k: V2,
    pub v0: f64,
}

impl LambdaBound {
    pub fn new(vel: Lin2, lambda_idx: usize, lambda_k: f64, v_k: V2, v0: f64) -> Self {
        let mut support = vel.support.clone();
        support.push(lambda_idx);
        LambdaBound {
            vel,
            support,
            lambda_k,
            v_k,
            v0,
        }
    }
}

impl Constraint for LambdaBound {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let k = x.len();
        let lam = x[k - 1];
        if !(lam > 0.0) {
            return false;
        }
        let v = self.vel.eval(&x[..k - 1]);
        let lb = crate::sca::lambda_lower_bound(lam, v, self.lambda_k, self.v_k, self.v0);
        out.value = 1.0 / (lam * lam) - lb.value;
        for i in 0..k - 1 {
            out.grad[i] = -(lb.grad[1] * self.vel.rows[0][i] + lb.grad[2] * self.vel.rows[1][i]);
        }
        out.grad[k - 1] = -2.0 / lam.powi(3) - lb.grad[0];
        if want_hess {
            *out.h(k - 1, k - 1) = 6.0 / lam.powi(4);
        }
        true
    }
}

/// Average horizontal propulsion power over the horizon, relative to the
/// budget. Variables `0..2m` are the free positions, `2m..3m` the `lambda`
/// slacks; the last slot hovers.
pub(crate) struct EnergyBudget {
    pub support: Vec<usize>,
    pub vels: Vec<Lin2>,
    pub p0: f64,
    pub p1: f64,
    pub u_tip: f64,
    pub parasite: f64,
    pub n_slots: usize,
    pub budget: f64,
}

impl Constraint for EnergyBudget {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let m = self.vels.len();
        let scale = 1.0 / (self.n_slots as f64 * self.budget);
        let quad = 3.0 * self.p0 / (self.u_tip * self.u_tip);
        let mut total = self.p0 + self.p1;
        for (n, vel) in self.vels.iter().enumerate() {
            let lam = x[2 * m + n];
            let v = vel.eval_global(x);
            let v2 = v[0] * v[0] + v[1] * v[1];
            let r = (v2 + SPEED_SMOOTHING * SPEED_SMOOTHING).sqrt();
            total += self.p0 + quad * v2 + self.parasite * r * r * r + self.p1 * lam;
            // d/dv of the speed terms
            let k1 = 2.0 * quad + 3.0 * self.parasite * r;
            let gv = [k1 * v[0], k1 * v[1]];
            for (a, &var) in vel.support.iter().enumerate() {
                out.grad[var] += scale * (gv[0] * vel.rows[0][a] + gv[1] * vel.rows[1][a]);
            }
            out.grad[2 * m + n] = scale * self.p1;
            if want_hess {
                let mut hv = [[k1, 0.0], [0.0, k1]];
                axpy_m(&mut hv, 3.0 * self.parasite / r, &outer(v, v));
                for (a, &va) in vel.support.iter().enumerate() {
                    for (b, &vb) in vel.support.iter().enumerate() {
                        let mut acc = 0.0;
                        for i in 0..2 {
                            for j in 0..2 {
                                acc += vel.rows[i][a] * hv[i][j] * vel.rows[j][b];
                            }
                        }
                        *out.h(va, vb) += scale * acc;
                    }
                }
            }
        }
        out.value = scale * total - 1.0;
        true
    }
}

impl Lin2 {
    /// Evaluates with `support` holding global indices into `x`.
    pub fn eval_global(&self, x: &[f64]) -> V2 {
        let mut v = [0.0; 2];
        for (a, &var) in self.support.iter().enumerate() {
            v[0] += self.rows[0][a] * x[var];
            v[1] += self.rows[1][a] * x[var];
        }
        v
    }
}

/// One user's contribution to a slot rate as a function of the horizontal
/// position: `a (A + B (t(q) - t_k) + C (x(q) - x_k))`.
#[derive(Debug, Clone)]
pub(crate) struct HorizontalRateTerm {
    pub user: usize,
    pub weight: f64,
    pub w: V2,
    pub z: f64,
    pub alpha: f64,
    pub taylor: RateTaylor,
    /// `None` under deterministic LoS, where `x == 1`.
    pub odds: Option<HorizontalOdds>,
}

/// `x(q) = 1 + c0 exp(beta (s(q) - s_k))`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HorizontalOdds {
    pub c0: f64,
    pub beta: f64,
    pub s_k: f64,
}

impl HorizontalOdds {
    /// `k`: LoS odds constant, `b`: per-degree slope, `s_k`: smoothed distance
    /// at the expansion point.
    pub fn new(k: f64, b: f64, z: f64, s_k: f64) -> Self {
        let kappa = b * DEG;
        HorizontalOdds {
            c0: k * (-kappa * (z / s_k).atan()).exp(),
            beta: kappa * z / (s_k * s_k + z * z),
            s_k,
        }
    }

    pub fn at_expansion(&self) -> f64 {
        1.0 + self.c0
    }

    fn eval(&self, s: f64, ds: V2, d2s: &M2) -> (f64, V2, M2) {
        let e = self.c0 * (self.beta * (s - self.s_k)).exp();
        let g = [e * self.beta * ds[0], e * self.beta * ds[1]];
        let mut h = outer(ds, ds);
        for row in &mut h {
            row[0] *= e * self.beta * self.beta;
            row[1] *= e * self.beta * self.beta;
        }
        axpy_m(&mut h, e * self.beta, d2s);
        (1.0 + e, g, h)
    }
}

impl HorizontalRateTerm {
    /// Surrogate rate contribution with gradient and Hessian in `q`.
    pub fn eval(&self, q: V2) -> (f64, V2, M2) {
        let d = [q[0] - self.w[0], q[1] - self.w[1]];
        let dd = d[0] * d[0] + d[1] * d[1] + self.z * self.z;
        let a = self.alpha;
        let t = dd.powf(a / 2.0);
        let k1 = a * dd.powf(a / 2.0 - 1.0);
        let dt = [k1 * d[0], k1 * d[1]];
        let mut d2t = I2;
        for row in &mut d2t {
            row[0] *= k1;
            row[1] *= k1;
        }
        axpy_m(&mut d2t, a * (a - 2.0) * dd.powf(a / 2.0 - 2.0), &outer(d, d));

        let rt = &self.taylor;
        let mut val = rt.a + rt.b * (t - rt.t_k);
        let mut g = [rt.b * dt[0], rt.b * dt[1]];
        let mut h = [[0.0; 2]; 2];
        axpy_m(&mut h, rt.b, &d2t);
        if let Some(odds) = &self.odds {
            let (s, ds, d2s) = smooth_distance(q, self.w);
            let (x, dx, d2x) = odds.eval(s, ds, &d2s);
            val += rt.c * (x - rt.x_k);
            g[0] += rt.c * dx[0];
            g[1] += rt.c * dx[1];
            axpy_m(&mut h, rt.c, &d2x);
        }
        let w = self.weight;
        (w * val, [w * g[0], w * g[1]], [[w * h[0][0], w * h[0][1]], [w * h[1][0], w * h[1][1]]])
    }
}

/// `eta_n - sum_r a_rn Rtilde_rn(q) <= 0`; support `[qx, qy, eta]`.
pub(crate) struct HorizontalRate {
    pub support: [usize; 3],
    pub terms: Vec<HorizontalRateTerm>,
}

impl HorizontalRate {
    pub fn surrogate(&self, q: V2) -> f64 {
        self.terms.iter().map(|t| t.eval(q).0).sum()
    }
}

impl Constraint for HorizontalRate {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let q = [x[0], x[1]];
        let mut val = 0.0;
        for term in &self.terms {
            let (v, g, h) = term.eval(q);
            val += v;
            out.grad[0] -= g[0];
            out.grad[1] -= g[1];
            if want_hess {
                for i in 0..2 {
                    for j in 0..2 {
                        *out.h(i, j) -= h[i][j];
                    }
                }
            }
        }
        out.grad[2] = 1.0;
        out.value = x[2] - val;
        val.is_finite()
    }
}

/// Expected interference at the primary user as a function of the
/// horizontal position, in units of the threshold, minus one.
#[derive(Debug, Clone)]
pub(crate) struct HorizontalInterference {
    pub support: [usize; 2],
    /// `P rho0 / Gamma`.
    pub scale: f64,
    pub mu: f64,
    pub w: V2,
    pub z: f64,
    pub tangent_los: (f64, V2, V2),
    pub tangent_nlos: (f64, V2, V2),
    pub los: Option<LosFactor>,
    pub nlos: Option<NlosFactor>,
}

/// Lower bound on `1 + k e^{-b theta}` from the tangent of its logarithm:
/// `p_L(q) = m_k exp(-sigma_k b (theta_bar(q) - theta_k))` with
/// `m_k = 1 + k e^{-b theta_k}` and `sigma_k = (m_k - 1) / m_k`.
/// `theta_bar` is the angle (deg) computed from the projected distance
/// `L(q) = u . (q - w)`. `u = None` means the expansion sits above the
/// primary user and the angle is held at 90 degrees.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LosFactor {
    pub coef: f64,
    pub b: f64,
    pub theta_k: f64,
    pub u: Option<V2>,
}

/// Lower bound on `1 + k2 e^{b phi}` from the tangent of its logarithm:
/// `p_N(q) = m_k exp(sigma_k b (phi(q) - phi_k))` with `phi` the
/// distance-linearized angle in degrees.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NlosFactor {
    pub coef: f64,
    pub b: f64,
    pub phi_k: f64,
    pub s_k: f64,
}

/// Affine tangent `(value_k, point_k, gradient)` evaluated at `q`.
fn affine(tan: &(f64, V2, V2), q: V2) -> f64 {
    tan.0 + tan.2[0] * (q[0] - tan.1[0]) + tan.2[1] * (q[1] - tan.1[1])
}

/// `m exp(y)` for an exponent with gradient `dy` and Hessian `d2y`.
fn log_linear(m: f64, y: f64, dy: V2, d2y: &M2) -> (f64, V2, M2) {
    let p = m * y.exp();
    let mut h = outer(dy, dy);
    axpy_m(&mut h, 1.0, d2y);
    for row in &mut h {
        row[0] *= p;
        row[1] *= p;
    }
    (p, [p * dy[0], p * dy[1]], h)
}

/// `(m_k, sigma_k)` of `1 + e`.
fn log_tangent(e: f64) -> (f64, f64) {
    let m = 1.0 + e;
    (m, e / m)
}

impl LosFactor {
    fn eval(&self, q: V2, w: V2, z: f64) -> Option<(f64, V2, M2)> {
        let (m, sigma) = log_tangent(self.coef * (-self.b * self.theta_k).exp());
        let k = -sigma * self.b;
        let Some(u) = self.u else {
            return Some(log_linear(m, k * (90.0 - self.theta_k), [0.0; 2], &[[0.0; 2]; 2]));
        };
        let l = u[0] * (q[0] - w[0]) + u[1] * (q[1] - w[1]);
        if !(l > 0.0) {
            return None;
        }
        let r2 = l * l + z * z;
        let th = DEG * z.atan2(l);
        let d1 = -DEG * z / r2;
        let d2 = DEG * 2.0 * z * l / (r2 * r2);
        let mut h = [[0.0; 2]; 2];
        axpy_m(&mut h, k * d2, &outer(u, u));
        Some(log_linear(m, k * (th - self.theta_k), [k * d1 * u[0], k * d1 * u[1]], &h))
    }
}

impl NlosFactor {
    fn eval(&self, q: V2, w: V2, z: f64) -> (f64, V2, M2) {
        let (s, ds, d2s) = smooth_distance(q, w);
        let slope = -DEG * z / (self.s_k * self.s_k + z * z);
        let phi = DEG * (z / self.s_k).atan() + slope * (s - self.s_k);
        let (m, sigma) = log_tangent(self.coef * (self.b * self.phi_k).exp());
        let k = sigma * self.b * slope;
        let mut h = [[0.0; 2]; 2];
        axpy_m(&mut h, k, &d2s);
        log_linear(m, sigma * self.b * (phi - self.phi_k), [k * ds[0], k * ds[1]], &h)
    }
}

impl HorizontalInterference {
    /// `(p_L, p_N, t_L, t_N)` at `q`; `p_L = 1` and `p_N`, `t_N` are NaN
    /// under deterministic LoS.
    pub fn slacks(&self, q: V2) -> Option<(f64, f64, f64, f64)> {
        let tl = affine(&self.tangent_los, q);
        let pl = match &self.los {
            Some(f) => f.eval(q, self.w, self.z)?.0,
            None => 1.0,
        };
        let (pn, tn) = match &self.nlos {
            Some(f) => (f.eval(q, self.w, self.z).0, affine(&self.tangent_nlos, q)),
            None => (f64::NAN, f64::NAN),
        };
        Some((pl, pn, tl, tn))
    }

    /// `(1 / (p_L t_L), 1 / (p_N t_N))` with derivatives, or `None` outside
    /// the domain.
    #[allow(clippy::type_complexity)]
    fn parts(&self, q: V2) -> Option<((f64, V2, M2), Option<(f64, V2, M2)>)> {
        let tl = affine(&self.tangent_los, q);
        if !(tl > 0.0) {
            return None;
        }
        let los = match &self.los {
            Some(f) => {
                let (p, dp, d2p) = f.eval(q, self.w, self.z)?;
                if !(p > 0.0) {
                    return None;
                }
                recip_product(p, dp, d2p, tl, self.tangent_los.2)
            }
            None => {
                let g = self.tangent_los.2;
                recip_product(1.0, [0.0; 2], [[0.0; 2]; 2], tl, g)
            }
        };
        let nlos = match &self.nlos {
            Some(f) => {
                let tn = affine(&self.tangent_nlos, q);
                let (p, dp, d2p) = f.eval(q, self.w, self.z);
                if !(tn > 0.0 && p > 0.0) {
                    return None;
                }
                Some(recip_product(p, dp, d2p, tn, self.tangent_nlos.2))
            }
            None => None,
        };
        Some((los, nlos))
    }
}

impl Constraint for HorizontalInterference {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let Some((los, nlos)) = self.parts([x[0], x[1]]) else {
            return false;
        };
        let mut v = los.0;
        let mut g = los.1;
        let mut h = los.2;
        if let Some((nv, ng, nh)) = nlos {
            v += self.mu * nv;
            g[0] += self.mu * ng[0];
            g[1] += self.mu * ng[1];
            axpy_m(&mut h, self.mu, &nh);
        }
        out.value = self.scale * v - 1.0;
        out.grad[0] = self.scale * g[0];
        out.grad[1] = self.scale * g[1];
        if want_hess {
            for i in 0..2 {
                for j in 0..2 {
                    *out.h(i, j) = self.scale * h[i][j];
                }
            }
        }
        true
    }
}

/// One user's contribution to a slot rate as a function of altitude.
#[derive(Debug, Clone)]
pub(crate) struct VerticalRateTerm {
    pub weight: f64,
    /// Exact and smoothed horizontal distances to the user.
    pub s: f64,
    pub s_smooth: f64,
    pub alpha: f64,
    pub odds_k: f64,
    pub kappa: f64,
    pub taylor: RateTaylor,
}

impl VerticalRateTerm {
    pub fn x_of(&self, z: f64) -> f64 {
        1.0 + self.odds_k * (-self.kappa * (z / self.s_smooth).atan()).exp()
    }

    pub fn t_of(&self, z: f64) -> f64 {
        (self.s * self.s + z * z).powf(self.alpha / 2.0)
    }

    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        let a = self.alpha;
        let dd = self.s * self.s + z * z;
        let t = dd.powf(a / 2.0);
        let dt = a * z * dd.powf(a / 2.0 - 1.0);
        let d2t = a * dd.powf(a / 2.0 - 1.0) + a * (a - 2.0) * z * z * dd.powf(a / 2.0 - 2.0);
        let se = self.s_smooth;
        let r2 = se * se + z * z;
        let th = (z / se).atan();
        let dth = se / r2;
        let d2th = -2.0 * se * z / (r2 * r2);
        let e = self.odds_k * (-self.kappa * th).exp();
        let x = 1.0 + e;
        let dx = -self.kappa * e * dth;
        let d2x = e * (self.kappa * self.kappa * dth * dth - self.kappa * d2th);
        let rt = &self.taylor;
        let val = rt.a + rt.b * (t - rt.t_k) + rt.c * (x - rt.x_k);
        let w = self.weight;
        (w * val, w * (rt.b * dt + rt.c * dx), w * (rt.b * d2t + rt.c * d2x))
    }
}

/// `eta_n - sum_r a_rn Rtilde_rn(z) <= 0`; support `[z, eta]`.
pub(crate) struct VerticalRate {
    pub support: [usize; 2],
    pub terms: Vec<VerticalRateTerm>,
}

impl VerticalRate {
    pub fn surrogate(&self, z: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(z).0).sum()
    }
}

impl Constraint for VerticalRate {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let (mut v, mut g, mut h) = (0.0, 0.0, 0.0);
        for term in &self.terms {
            let (a, b, c) = term.eval(x[0]);
            v += a;
            g += b;
            h += c;
        }
        out.value = x[1] - v;
        out.grad[0] = -g;
        out.grad[1] = 1.0;
        if want_hess {
            *out.h(0, 0) = -h;
        }
        v.is_finite()
    }
}

/// Interference at the primary user as a function of altitude, relative
/// to the threshold.
pub(crate) struct VerticalInterference {
    pub support: [usize; 1],
    pub scale: f64,
    pub mu: f64,
    /// Horizontal distance to the primary user.
    pub s: f64,
    pub z_k: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub los_coef: f64,
    pub nlos_coef: f64,
    pub b: f64,
}

impl VerticalInterference {
    fn tangent(&self, z: f64, alpha: f64) -> (f64, f64) {
        let lin = crate::sca::f6(z, self.z_k, self.s, alpha);
        (lin.value, lin.grad[0])
    }

    fn angle_k(&self) -> f64 {
        DEG * self.z_k.atan2(self.s)
    }
}

impl Constraint for VerticalInterference {
    fn support(&self) -> &[usize] {
        &self.support
    }

    fn eval(&self, x: &[f64], want_hess: bool, out: &mut LocalEval) -> bool {
        let z = x[0];
        if !(z > 0.0) {
            return false;
        }
        let th_k = self.angle_k();
        let (tl, dtl) = self.tangent(z, self.alpha_los);
        let (tn, dtn) = self.tangent(z, self.alpha_nlos);
        // upper bound on the angle: tangent of the concave arctangent
        let (th_bar, dth_bar) = match crate::sca::f7(z, self.z_k, self.s) {
            Ok(lin) => (DEG * lin.value, DEG * lin.grad[0]),
            Err(_) => return false,
        };
        // log-domain tangents of 1 + k e^{-b theta} and 1 + k2 e^{b phi}
        let (ml, sl) = log_tangent(self.los_coef * (-self.b * th_k).exp());
        let kl = -sl * self.b;
        let pl = ml * (kl * (th_bar - th_k)).exp();
        let dpl = pl * kl * dth_bar;
        let d2pl = pl * (kl * dth_bar).powi(2);
        let (phi, dphi, d2phi) = if self.s > 0.0 {
            let r2 = self.s * self.s + z * z;
            (DEG * z.atan2(self.s), DEG * self.s / r2, -DEG * 2.0 * self.s * z / (r2 * r2))
        } else {
            (90.0, 0.0, 0.0)
        };
        let (mn, sn) = log_tangent(self.nlos_coef * (self.b * th_k).exp());
        let kn = sn * self.b;
        let pn = mn * (kn * (phi - th_k)).exp();
        let dpn = pn * kn * dphi;
        let d2pn = pn * (kn * kn * dphi * dphi + kn * d2phi);
        if !(tl > 0.0 && tn > 0.0 && pl > 0.0 && pn > 0.0) {
            return false;
        }
        let (hl, gl, hhl) = recip_product(pl, [dpl, 0.0], [[d2pl, 0.0], [0.0, 0.0]], tl, [dtl, 0.0]);
        let (hn, gn, hhn) = recip_product(pn, [dpn, 0.0], [[d2pn, 0.0], [0.0, 0.0]], tn, [dtn, 0.0]);
        out.value = self.scale * (hl + self.mu * hn) - 1.0;
        out.grad[0] = self.scale * (gl[0] + self.mu * gn[0]);
        if want_hess {
            *out.h(0, 0) = self.scale * (hhl[0][0] + self.mu * hhn[0][0]);
        }
        true
    }
}
