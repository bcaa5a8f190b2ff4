//! Rotary-wing propulsion power and energy-budget accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rotorcraft constants. Defaults describe a small quadrotor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorcraftParams {
    /// Blade-profile power in hover, W.
    pub p0: f64,
    /// Induced power in hover, W.
    pub p1: f64,
    /// Rotor blade tip speed, m/s.
    pub u_tip: f64,
    /// Fuselage drag ratio.
    pub d0: f64,
    /// Air density, kg/m^3.
    pub rho: f64,
    /// Rotor solidity.
    pub solidity: f64,
    /// Rotor disc area, m^2.
    pub disc_area: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub v0: f64,
    /// Aircraft weight, N.
    pub weight: f64,
}

impl Default for RotorcraftParams {
    fn default() -> Self {
        RotorcraftParams {
            p0: 79.86,
            p1: 88.63,
            u_tip: 120.0,
            d0: 0.6,
            rho: 1.225,
            solidity: 0.05,
            disc_area: 0.503,
            v0: 4.03,
            weight: 100.0,
        }
    }
}

impl RotorcraftParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p0,
            self.p1,
            self.u_tip,
            self.d0,
            self.rho,
            self.solidity,
            self.disc_area,
            self.v0,
            self.weight,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidScenario("rotor constants must be finite and positive".into()))
        }
    }

    /// `0.5 d0 rho s A`, the coefficient of the cubic parasite term.
    pub fn parasite_coefficient(&self) -> f64 {
        0.5 * self.d0 * self.rho * self.solidity * self.disc_area
    }

    pub fn hover_power(&self) -> f64 {
        self.p0 + self.p1
    }

    pub fn blade_profile_power(&self, speed: f64) -> f64 {
        self.p0 * (1.0 + 3.0 * speed * speed / (self.u_tip * self.u_tip))
    }

    pub fn parasite_power(&self, speed: f64) -> f64 {
        self.parasite_coefficient() * speed.abs().powi(3)
    }

    pub fn induced_power(&self, speed: f64) -> f64 {
        self.p1 * induced_velocity_ratio(speed, self.v0)
    }

    /// Derivative of [`horizontal_power`] with respect to the speed.
    pub fn horizontal_power_slope(&self, speed: f64) -> f64 {
        let s = speed.abs();
        let u = s * s / (self.v0 * self.v0);
        let x = 0.5 * u;
        let root = (1.0 + x * x).sqrt();
        let g = 1.0 / (root + x);
        let lam = g.sqrt();
        // d/du (sqrt(1 + u^2/4) - u/2) = -g / (2 sqrt(1 + u^2/4))
        let dg_du = -0.5 * g / root;
        let dlam_ds = dg_du / (2.0 * lam) * 2.0 * s / (self.v0 * self.v0);
        6.0 * self.p0 * s / (self.u_tip * self.u_tip)
            + 3.0 * self.parasite_coefficient() * s * s
            + self.p1 * dlam_ds
    }
}

/// `lambda = (sqrt(1 + u^2/4) - u/2)^(1/2)` with `u = v^2/v0^2`, the induced
/// power normalized by its hover value. It is the positive root of
/// `1/lambda^2 = lambda^2 + v^2/v0^2`.
pub fn induced_velocity_ratio(speed: f64, v0: f64) -> f64 {
    let x = 0.5 * speed * speed / (v0 * v0);
    // sqrt(1 + x^2) - x without cancellation
    (1.0 / ((1.0 + x * x).sqrt() + x)).sqrt()
}

pub fn horizontal_power(v_xy: [f64; 2], rp: &RotorcraftParams) -> f64 {
    let s = v_xy[0].hypot(v_xy[1]);
    rp.blade_profile_power(s) + rp.parasite_power(s) + rp.induced_power(s)
}

/// Gradient of [`horizontal_power`] with respect to the velocity vector.
/// Zero at hover.
pub fn horizontal_power_gradient(v_xy: [f64; 2], rp: &RotorcraftParams) -> [f64; 2] {
    let s = v_xy[0].hypot(v_xy[1]);
    if s == 0.0 {
        return [0.0, 0.0];
    }
    let k = rp.horizontal_power_slope(s) / s;
    [k * v_xy[0], k * v_xy[1]]
}

/// Climb power; descent is free.
pub fn vertical_power(v_z: f64, rp: &RotorcraftParams) -> f64 {
    if v_z > 0.0 {
        rp.weight * v_z
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub hor_average_w: f64,
    pub ver_average_w: f64,
    /// Budget minus average; negative when violated.
    pub hor_margin_w: f64,
    pub ver_margin_w: f64,
}

impl BudgetReport {
    pub fn ok(&self) -> bool {
        self.hor_margin_w >= 0.0 && self.ver_margin_w >= 0.0
    }
}

/// Averages the per-slot propulsion powers of a velocity profile and compares
/// them with the budgets.
pub fn budget_check(
    v_xy: &[[f64; 2]],
    v_z: &[f64],
    rp: &RotorcraftParams,
    hor_budget_w: f64,
    ver_budget_w: f64,
) -> Result<BudgetReport> {
    if v_xy.is_empty() {
        return Err(Error::Domain("empty horizon".into()));
    }
    crate::error::check_len("vertical speeds", v_xy.len(), v_z.len())?;
    let n = v_xy.len() as f64;
    let hor = v_xy.iter().map(|v| horizontal_power(*v, rp)).sum::<f64>() / n;
    let ver = v_z.iter().map(|v| vertical_power(*v, rp)).sum::<f64>() / n;
    Ok(BudgetReport {
        hor_average_w: hor,
        ver_average_w: ver,
        hor_margin_w: hor_budget_w - hor,
        ver_margin_w: ver_budget_w - ver,
    })
}
