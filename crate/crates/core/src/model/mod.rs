//! Decision variables, the average-rate objective, feasibility audit and
//! the circular initial trajectory.

mod audit;
mod init;
mod scenario;

pub use audit::{feasibility_audit, AuditReport, ConstraintFamily, Residual};
pub use init::{init_radius, init_solution, init_solution_under};
pub use scenario::{ChannelSpec, PowerReference, RotorSpec, Scenario, ScenarioFile, TABLE2_JSON};

use serde::Serialize;

use crate::channel::{
    elevation_angle_deg, lower_bound_rate_under, interference_per_watt, AirPosition, LosModel,
};
use crate::error::{check_len, Result};

/// Elevation angles implied by a trajectory, in degrees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Angles {
    /// `users[r][n]`: angle of the UAV seen from user `r` in slot `n`.
    pub users: Vec<Vec<f64>>,
    /// Angle seen from the primary user; it feeds both the LoS and the NLoS
    /// probability of the interference link.
    pub primary: Vec<f64>,
}

/// One full iterate: schedule, powers, and the 3D trajectory.
///
/// Velocities are forward differences with the cyclic convention
/// `q[N+1] = q[1]`; since the trajectory is closed (`q[N] = q[1]`) the last
/// slot is a hover slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionVariables {
    /// `a[r][n]` in `[0, 1]`.
    pub a: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub q: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    pub z: Vec<f64>,
    pub vz: Vec<f64>,
    pub angles: Angles,
}

impl DecisionVariables {
    /// Assembles an iterate from positions, deriving velocities and angles.
    pub fn from_positions(
        a: Vec<Vec<f64>>,
        p: Vec<f64>,
        q: Vec<[f64; 2]>,
        z: Vec<f64>,
        sc: &Scenario,
    ) -> Result<Self> {
        let n = sc.n_slots;
        check_len("schedule rows", sc.n_users(), a.len())?;
        for row in &a {
            check_len("schedule columns", n, row.len())?;
        }
        check_len("powers", n, p.len())?;
        check_len("horizontal positions", n, q.len())?;
        check_len("altitudes", n, z.len())?;
        let mut dv = DecisionVariables {
            a,
            p,
            q,
            v: Vec::new(),
            z,
            vz: Vec::new(),
            angles: Angles {
                users: Vec::new(),
                primary: Vec::new(),
            },
        };
        dv.refresh(sc)?;
        Ok(dv)
    }

    pub fn n_slots(&self) -> usize {
        self.p.len()
    }

    pub fn position(&self, n: usize) -> AirPosition {
        AirPosition { q: self.q[n], z: self.z[n] }
    }

    /// Recomputes velocities and angles after the positions changed.
    pub fn refresh(&mut self, sc: &Scenario) -> Result<()> {
        let n = self.q.len();
        let dt = sc.slot_s;
        self.v = (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                [(self.q[j][0] - self.q[i][0]) / dt, (self.q[j][1] - self.q[i][1]) / dt]
            })
            .collect();
        self.vz = (0..n).map(|i| (self.z[(i + 1) % n] - self.z[i]) / dt).collect();
        let mut users = Vec::with_capacity(sc.n_users());
        for u in &sc.users {
            users.push((0..n).map(|i| elevation_angle_deg(&self.position(i), u)).collect::<Result<Vec<_>>>()?);
        }
        let primary = (0..n)
            .map(|i| elevation_angle_deg(&self.position(i), &sc.primary))
            .collect::<Result<Vec<_>>>()?;
        self.angles = Angles { users, primary };
        Ok(())
    }

    /// Index of the scheduled user per slot: the largest weight, ties to the
    /// lowest index, `None` when nobody has positive weight.
    pub fn scheduled_users(&self) -> Vec<Option<usize>> {
        (0..self.n_slots())
            .map(|n| {
                let mut best: Option<usize> = None;
                for r in 0..self.a.len() {
                    if self.a[r][n] > 0.0 && best.map_or(true, |b| self.a[r][n] > self.a[b][n]) {
                        best = Some(r);
                    }
                }
                best
            })
            .collect()
    }
}

/// `rates[r][n]`: lower-bound rate of user `r` in slot `n` at the iterate's
/// power and position.
pub fn rate_matrix(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<Vec<Vec<f64>>> {
    sc.users
        .iter()
        .map(|u| {
            (0..dv.n_slots())
                .map(|n| lower_bound_rate_under(model, dv.p[n], &dv.position(n), u, &sc.channel))
                .collect()
        })
        .collect()
}

/// Per-slot rate actually delivered: `sum_r a[r][n] rate[r][n]`.
pub fn slot_rates(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<Vec<f64>> {
    let rates = rate_matrix(dv, sc, model)?;
    Ok((0..dv.n_slots())
        .map(|n| (0..rates.len()).map(|r| dv.a[r][n] * rates[r][n]).sum())
        .collect())
}

/// Average system rate in bits/s/Hz under the probabilistic LoS model.
pub fn objective(dv: &DecisionVariables, sc: &Scenario) -> Result<f64> {
    objective_under(dv, sc, LosModel::Probabilistic)
}

/// Average system rate under a chosen link model.
pub fn objective_under(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<f64> {
    check_len("schedule rows", sc.n_users(), dv.a.len())?;
    check_len("powers", sc.n_slots, dv.p.len())?;
    let s = slot_rates(dv, sc, model)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Interference per watt at the primary user for every slot.
pub fn interference_coefficients(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<Vec<f64>> {
    (0..dv.n_slots())
        .map(|n| interference_per_watt(model, &dv.position(n), &sc.primary, &sc.channel))
        .collect()
}

/// Expected interference power at the primary user per slot, W.
pub fn interference_profile(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<Vec<f64>> {
    Ok(interference_coefficients(dv, sc, model)?
        .into_iter()
        .zip(&dv.p)
        .map(|(c, p)| c * p)
        .collect())
}
