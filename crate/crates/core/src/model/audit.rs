use serde::Serialize;

use super::{interference_profile, DecisionVariables, Scenario};
use crate::channel::LosModel;
use crate::energy::{horizontal_power, vertical_power};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    PowerBox,
    AveragePower,
    HorizontalBudget,
    VerticalBudget,
    Cyclic,
    VelocityConsistency,
    HorizontalSpeed,
    VerticalSpeed,
    HorizontalAcceleration,
    VerticalAcceleration,
    Altitude,
    Scheduling,
    /// Relative to the threshold: `(I - Gamma) / Gamma`.
    Interference,
}

/// Largest signed residual of one family; positive means violated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub family: ConstraintFamily,
    pub value: f64,
    /// Slot (or user-slot pair flattened as `r * N + n`) attaining it.
    pub index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub residuals: Vec<Residual>,
    pub tol: f64,
}

impl AuditReport {
    pub fn feasible(&self) -> bool {
        self.residuals.iter().all(|r| r.value <= self.tol)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn get(&self, family: ConstraintFamily) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.family == family)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(move |r| r.value > self.tol)
    }
}

fn worst(family: ConstraintFamily, values: impl IntoIterator<Item = f64>) -> Residual {
    let mut out = Residual {
        family,
        value: f64::NEG_INFINITY,
        index: None,
    };
    for (i, v) in values.into_iter().enumerate() {
        // NaN counts as a violation
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > out.value {
            out.value = v;
            out.index = Some(i);
        }
    }
    out
}

fn single(family: ConstraintFamily, value: f64) -> Residual {
    worst(family, [value])
}

/// Evaluates every constraint family of the joint problem at `dv`.
///
/// `model` selects the link model used for the interference constraint.
/// Returns one residual per family in a fixed order.
pub fn feasibility_audit(dv: &DecisionVariables, sc: &Scenario, model: LosModel, tol: f64) -> AuditReport {
    use ConstraintFamily::*;
    let n = dv.n_slots();
    let nf = n as f64;
    let dt = sc.slot_s;
    let mut res = Vec::with_capacity(13);

    res.push(worst(PowerBox, dv.p.iter().map(|&p| (-p).max(p - sc.p_max))));
    res.push(single(AveragePower, dv.p.iter().sum::<f64>() / nf - sc.p_ave));
    let hor = dv.v.iter().map(|v| horizontal_power(*v, &sc.rotor)).sum::<f64>() / nf;
    res.push(single(HorizontalBudget, hor - sc.p_hor_ave));
    let ver = dv.vz.iter().map(|v| vertical_power(*v, &sc.rotor)).sum::<f64>() / nf;
    res.push(single(VerticalBudget, ver - sc.p_ver_ave));

    let (first, last) = (dv.position(0), dv.position(n - 1));
    res.push(single(
        Cyclic,
        (first.q[0] - last.q[0]).hypot(first.q[1] - last.q[1]).max((first.z - last.z).abs()),
    ));
    res.push(worst(
        VelocityConsistency,
        (0..n).map(|i| {
            let j = (i + 1) % n;
            let ex = (dv.q[j][0] - dv.q[i][0]) / dt - dv.v[i][0];
            let ey = (dv.q[j][1] - dv.q[i][1]) / dt - dv.v[i][1];
            let ez = (dv.z[j] - dv.z[i]) / dt - dv.vz[i];
            ex.hypot(ey).max(ez.abs())
        }),
    ));
    res.push(worst(HorizontalSpeed, dv.v.iter().map(|v| v[0].hypot(v[1]) - sc.v_max)));
    res.push(worst(VerticalSpeed, dv.vz.iter().map(|v| v.abs() - sc.vz_max)));
    let pairs = n.saturating_sub(2);
    res.push(worst(
        HorizontalAcceleration,
        (0..pairs).map(|i| {
            let d = [dv.v[i + 1][0] - dv.v[i][0], dv.v[i + 1][1] - dv.v[i][1]];
            d[0].hypot(d[1]) / dt - sc.a_max
        }),
    ));
    res.push(match sc.az_max {
        Some(az) => worst(
            VerticalAcceleration,
            (0..pairs).map(|i| (dv.vz[i + 1] - dv.vz[i]).abs() / dt - az),
        ),
        None => worst(VerticalAcceleration, []),
    });
    res.push(worst(Altitude, dv.z.iter().map(|&z| (sc.h_min - z).max(z - sc.h_max))));
    let per_slot = (0..n).map(|i| dv.a.iter().map(|row| row[i]).sum::<f64>() - 1.0);
    let bounds = dv.a.iter().flatten().map(|&x| (-x).max(x - 1.0));
    res.push(worst(Scheduling, per_slot.chain(bounds)));
    res.push(match interference_profile(dv, sc, model) {
        Ok(i) => worst(
            Interference,
            i.into_iter().map(|x| if sc.gamma_w > 0.0 { (x - sc.gamma_w) / sc.gamma_w } else { x }),
        ),
        Err(_) => single(Interference, f64::INFINITY),
    });
    AuditReport { residuals: res, tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_solution;

    #[test]
    fn init_is_feasible() {
        let sc = Scenario::table2();
        let dv = init_solution(&sc).unwrap();
        let rep = feasibility_audit(&dv, &sc, LosModel::Probabilistic, 1e-6);
        assert!(rep.feasible(), "{:?}", rep.violations().collect::<Vec<_>>());
    }

    #[test]
    fn altitude_violation_is_measured() {
        let sc = Scenario::table2();
        let mut dv = init_solution(&sc).unwrap();
        dv.z[4] = 120.0;
        dv.refresh(&sc).unwrap();
        let rep = feasibility_audit(&dv, &sc, LosModel::Probabilistic, 1e-6);
        let alt = rep.get(ConstraintFamily::Altitude).unwrap();
        assert!((alt.value - 20.0).abs() < 1e-12);
        assert_eq!(alt.index, Some(4));
        assert!(!rep.feasible());
    }

    #[test]
    fn average_power_violation_is_measured() {
        let sc = Scenario::table2();
        let mut dv = init_solution(&sc).unwrap();
        dv.p.iter_mut().for_each(|p| *p = 0.4);
        let rep = feasibility_audit(&dv, &sc, LosModel::Probabilistic, 1e-6);
        assert!((rep.get(ConstraintFamily::AveragePower).unwrap().value - 0.3).abs() < 1e-12);
        assert!(rep.get(ConstraintFamily::PowerBox).unwrap().value <= 0.0);
    }

    #[test]
    fn broken_velocity_is_caught() {
        let sc = Scenario::table2();
        let mut dv = init_solution(&sc).unwrap();
        dv.v[10][0] += 1.0;
        let rep = feasibility_audit(&dv, &sc, LosModel::Probabilistic, 1e-6);
        assert!((rep.get(ConstraintFamily::VelocityConsistency).unwrap().value - 1.0).abs() < 1e-9);
    }
}
