//! First-order surrogates for the nonconvex pieces of the trajectory
//! subproblems.
//!
//! Every surrogate is a Taylor expansion at the previous iterate (the
//! expansion point, marked `k`). Targets and their bounds:
//!
//! | surrogate | target | variable | relation |
//! |---|---|---|---|
//! | [`f1`] | `exp(-b theta)` | theta (deg) | global lower bound |
//! | [`f2`] | `exp(b phi)` | phi (deg) | global lower bound |
//! | [`f3`] | `(|q-w|^2 + z^2)^(alpha/2)` | q | global lower bound |
//! | [`f4`], [`f5`] | `atan(z / |q-w|)` (rad) | q | tangent |
//! | [`f6`] | `(s^2 + z^2)^(alpha/2)` | z | global lower bound |
//! | [`f7`] | `atan(z / s)` (rad) | z | tangent, global upper bound |
//! | [`lambda_lower_bound`] | `lambda^2 + |v|^2/v0^2` | (lambda, v) | global lower bound |
//! | [`RateTaylor`] | `log2(1 + A/t) / x` | (x, t) | global lower bound |
//!
//! [`f4`] and [`f5`] linearize the arctangent in the horizontal distance
//! `s = |q - w|` rather than in `q`. The result has the same value and
//! gradient in `q` at the expansion point, and since `atan(z/s)` is convex
//! in `s` it is also a global lower bound.

use crate::channel::{horizontal_distance, ChannelParams};
use crate::error::{Error, Result};
use crate::model::{DecisionVariables, Scenario};

/// Degrees per radian; surrogates of the elevation angle are taken in
/// radians and scaled once where a degree-valued angle is needed.
pub const DEG: f64 = 180.0 / std::f64::consts::PI;

/// Value and gradient of a surrogate with respect to its decision variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear<const K: usize> {
    pub value: f64,
    pub grad: [f64; K],
}

/// `exp(-b theta_k) - b exp(-b theta_k) (theta - theta_k)`.
pub fn f1(theta: f64, theta_k: f64, b: f64) -> Linear<1> {
    let e = (-b * theta_k).exp();
    Linear {
        value: e - b * e * (theta - theta_k),
        grad: [-b * e],
    }
}

/// `exp(b phi_k) + b exp(b phi_k) (phi - phi_k)`.
pub fn f2(phi: f64, phi_k: f64, b: f64) -> Linear<1> {
    let e = (b * phi_k).exp();
    Linear {
        value: e + b * e * (phi - phi_k),
        grad: [b * e],
    }
}

/// Tangent plane in `q` of `(|q - w|^2 + z^2)^(alpha/2)` at `q_k`.
pub fn f3(q: [f64; 2], q_k: [f64; 2], z: f64, w: [f64; 2], alpha: f64) -> Linear<2> {
    let d2 = (q_k[0] - w[0]).powi(2) + (q_k[1] - w[1]).powi(2) + z * z;
    let base = d2.powf(alpha / 2.0);
    let k = alpha * d2.powf(alpha / 2.0 - 1.0);
    let g = [k * (q_k[0] - w[0]), k * (q_k[1] - w[1])];
    Linear {
        value: base + g[0] * (q[0] - q_k[0]) + g[1] * (q[1] - q_k[1]),
        grad: g,
    }
}

/// `atan(z / s_k) - z / (s_k^2 + z^2) (s - s_k)`: the arctangent linearized
/// in the horizontal distance.
pub fn atan_in_distance(s: f64, s_k: f64, z: f64) -> Linear<1> {
    let slope = -z / (s_k * s_k + z * z);
    Linear {
        value: (z / s_k).atan() + slope * (s - s_k),
        grad: [slope],
    }
}

fn atan_surrogate_in_q(q: [f64; 2], q_k: [f64; 2], z: f64, w: [f64; 2]) -> Result<Linear<2>> {
    let s_k = horizontal_distance(q_k, w);
    if !(s_k > 0.0) {
        return Err(Error::Domain("expansion point directly above the node".into()));
    }
    let s = horizontal_distance(q, w);
    let lin = atan_in_distance(s, s_k, z);
    let (ux, uy) = if s > 0.0 {
        ((q[0] - w[0]) / s, (q[1] - w[1]) / s)
    } else {
        (0.0, 0.0)
    };
    Ok(Linear {
        value: lin.value,
        grad: [lin.grad[0] * ux, lin.grad[0] * uy],
    })
}

/// Surrogate of the elevation angle (rad) towards a cognitive user.
pub fn f4(q: [f64; 2], q_k: [f64; 2], z: f64, w_user: [f64; 2]) -> Result<Linear<2>> {
    atan_surrogate_in_q(q, q_k, z, w_user)
}

/// Surrogate of the elevation angle (rad) towards the primary user.
pub fn f5(q: [f64; 2], q_k: [f64; 2], z: f64, w_primary: [f64; 2]) -> Result<Linear<2>> {
    atan_surrogate_in_q(q, q_k, z, w_primary)
}

/// Tangent line in `z` of `(s^2 + z^2)^(alpha/2)` at `z_k`.
pub fn f6(z: f64, z_k: f64, s: f64, alpha: f64) -> Linear<1> {
    let d2 = s * s + z_k * z_k;
    let slope = alpha * d2.powf(alpha / 2.0 - 1.0) * z_k;
    Linear {
        value: d2.powf(alpha / 2.0) + slope * (z - z_k),
        grad: [slope],
    }
}

/// Tangent line in `z` of `atan(z / s)` at `z_k`; with `s = 0` the angle is
/// a constant right angle.
pub fn f7(z: f64, z_k: f64, s: f64) -> Result<Linear<1>> {
    if s < 0.0 {
        return Err(Error::Domain(format!("negative horizontal distance {s}")));
    }
    if s == 0.0 {
        return Ok(Linear {
            value: std::f64::consts::FRAC_PI_2,
            grad: [0.0],
        });
    }
    let slope = s / (s * s + z_k * z_k);
    Ok(Linear {
        value: (z_k / s).atan() + slope * (z - z_k),
        grad: [slope],
    })
}

/// `lambda_k^2 + 2 lambda_k (lambda - lambda_k) + (|v_k|^2 + 2 v_k.(v - v_k)) / v0^2`;
/// gradient ordered `(lambda, v_x, v_y)`.
pub fn lambda_lower_bound(lambda: f64, v: [f64; 2], lambda_k: f64, v_k: [f64; 2], v0: f64) -> Linear<3> {
    let iv = 1.0 / (v0 * v0);
    let vk2 = v_k[0] * v_k[0] + v_k[1] * v_k[1];
    let dot = v_k[0] * (v[0] - v_k[0]) + v_k[1] * (v[1] - v_k[1]);
    Linear {
        value: lambda_k * lambda_k + 2.0 * lambda_k * (lambda - lambda_k) + (vk2 + 2.0 * dot) * iv,
        grad: [2.0 * lambda_k, 2.0 * v_k[0] * iv, 2.0 * v_k[1] * iv],
    }
}

/// First-order expansion of `log2(1 + A/t) / x` at `(x_k, t_k)`:
/// `a + b (t - t_k) + c (x - x_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTaylor {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x_k: f64,
    pub t_k: f64,
}

impl RateTaylor {
    pub fn new(snr_numerator: f64, x_k: f64, t_k: f64) -> Result<Self> {
        if !(x_k > 0.0 && t_k > 0.0) {
            return Err(Error::Domain(format!("nonpositive expansion slacks x={x_k}, t={t_k}")));
        }
        let a0 = snr_numerator;
        let l = (a0 / t_k).ln_1p() / std::f64::consts::LN_2;
        Ok(RateTaylor {
            a: l / x_k,
            b: -a0 / (std::f64::consts::LN_2 * x_k * t_k * (t_k + a0)),
            c: -l / (x_k * x_k),
            x_k,
            t_k,
        })
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.a + self.b * (t - self.t_k) + self.c * (x - self.x_k)
    }
}

/// `log2(1 + A/t) / x`.
pub fn rate_target(snr_numerator: f64, x: f64, t: f64) -> f64 {
    (snr_numerator / t).ln_1p() / std::f64::consts::LN_2 / x
}

/// Analytic Hessian of `f(x, y) = log2(1 + A/y) / x` and its smallest
/// eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Check {
    pub hessian: [[f64; 2]; 2],
    pub min_eigenvalue: f64,
}

impl Lemma1Check {
    pub fn psd(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol
    }
}

pub fn lemma1_hessian_check(x: f64, y: f64, a: f64) -> Lemma1Check {
    let ln2 = std::f64::consts::LN_2;
    let l = (a / y).ln_1p() / ln2;
    let fxx = 2.0 * l / x.powi(3);
    let fxy = a / (ln2 * x * x * y * (y + a));
    let fyy = a * (2.0 * y + a) / (ln2 * x * y * y * (y + a).powi(2));
    let half = 0.5 * (fxx + fyy);
    let rad = (0.25 * (fxx - fyy).powi(2) + fxy * fxy).sqrt();
    Lemma1Check {
        hessian: [[fxx, fxy], [fxy, fyy]],
        min_eigenvalue: half - rad,
    }
}

/// `K = a exp(a b)` so that `1 / P_L(theta) = 1 + K exp(-b theta)`.
pub fn los_odds_constant(cp: &ChannelParams) -> f64 {
    cp.a * (cp.a * cp.b).exp()
}

/// `1 / K`, so that `1 / P_N(theta) = 1 + exp(b theta) / K`.
pub fn nlos_odds_constant(cp: &ChannelParams) -> f64 {
    1.0 / los_odds_constant(cp)
}

/// Previous-iterate quantities every surrogate is expanded around.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionPoint {
    pub q: Vec<[f64; 2]>,
    pub z: Vec<f64>,
    pub v: Vec<[f64; 2]>,
    pub vz: Vec<f64>,
    /// Elevation angle towards the primary user, degrees.
    pub theta_primary: Vec<f64>,
    pub d_primary: Vec<f64>,
    pub s_primary: Vec<f64>,
    /// `1 / P_L` towards each user, `[r][n]`.
    pub x_los: Vec<Vec<f64>>,
    /// `d^alpha_L` towards each user, `[r][n]`.
    pub t_los: Vec<Vec<f64>>,
    /// Induced-power ratio per slot.
    pub lambda: Vec<f64>,
}

impl ExpansionPoint {
    pub fn from_iterate(dv: &DecisionVariables, sc: &Scenario) -> Self {
        let cp = &sc.channel;
        let n = dv.n_slots();
        let k = los_odds_constant(cp);
        let mut x_los = Vec::with_capacity(sc.n_users());
        let mut t_los = Vec::with_capacity(sc.n_users());
        for (r, u) in sc.users.iter().enumerate() {
            x_los.push((0..n).map(|i| 1.0 + k * (-cp.b * dv.angles.users[r][i]).exp()).collect());
            t_los.push(
                (0..n)
                    .map(|i| {
                        let s = horizontal_distance(dv.q[i], u.w);
                        (s * s + dv.z[i] * dv.z[i]).powf(cp.alpha_los / 2.0)
                    })
                    .collect(),
            );
        }
        let s_primary: Vec<f64> = dv.q.iter().map(|q| horizontal_distance(*q, sc.primary.w)).collect();
        ExpansionPoint {
            q: dv.q.clone(),
            z: dv.z.clone(),
            v: dv.v.clone(),
            vz: dv.vz.clone(),
            theta_primary: dv.angles.primary.clone(),
            d_primary: s_primary.iter().zip(&dv.z).map(|(s, z)| s.hypot(*z)).collect(),
            s_primary,
            x_los,
            t_los,
            lambda: dv
                .v
                .iter()
                .map(|v| crate::energy::induced_velocity_ratio(v[0].hypot(v[1]), sc.rotor.v0))
                .collect(),
        }
    }
}
