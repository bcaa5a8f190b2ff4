use std::f64::consts::PI;

use super::{interference_coefficients, DecisionVariables, Scenario};
use crate::channel::{horizontal_distance, LosModel};
use crate::energy::horizontal_power;
use crate::error::Result;

fn centroid(sc: &Scenario) -> [f64; 2] {
    let r = sc.n_users() as f64;
    let sx: f64 = sc.users.iter().map(|u| u.w[0]).sum();
    let sy: f64 = sc.users.iter().map(|u| u.w[1]).sum();
    [sx / r, sy / r]
}

fn chord_speed(radius: f64, sc: &Scenario) -> f64 {
    2.0 * radius * (PI / (sc.n_slots - 1) as f64).sin() / sc.slot_s
}

fn circle_energy_ok(radius: f64, sc: &Scenario) -> bool {
    let n = sc.n_slots as f64;
    let cruise = horizontal_power([chord_speed(radius, sc), 0.0], &sc.rotor);
    ((n - 1.0) * cruise + sc.rotor.hover_power()) / n <= sc.p_hor_ave
}

/// Radius of the initial circle: the smaller of the full-speed orbit radius
/// and the nearest user distance from the users' centroid, further reduced
/// until the discretized orbit respects the speed, acceleration and
/// horizontal energy limits.
pub fn init_radius(sc: &Scenario) -> f64 {
    let c = centroid(sc);
    let nearest = sc
        .users
        .iter()
        .map(|u| horizontal_distance(c, u.w))
        .fold(f64::INFINITY, f64::min);
    let mut radius = (sc.v_max * sc.horizon_s / (2.0 * PI)).min(nearest);
    if sc.n_slots < 3 {
        return 0.0;
    }
    let k = 2.0 * (PI / (sc.n_slots - 1) as f64).sin();
    radius = radius.min(sc.v_max * sc.slot_s / k);
    // heading turns by 2 pi / (N - 1) per slot
    radius = radius.min(sc.a_max * sc.slot_s * sc.slot_s / (k * k));
    if !circle_energy_ok(radius, sc) {
        let top = radius;
        radius = 0.0;
        for i in 1..=1000 {
            let r = top * (1.0 - i as f64 / 1000.0);
            if circle_energy_ok(r, sc) {
                radius = r;
                break;
            }
        }
    }
    radius
}

/// Circular initial iterate under the probabilistic link model.
pub fn init_solution(sc: &Scenario) -> Result<DecisionVariables> {
    init_solution_under(sc, LosModel::Probabilistic)
}

/// Circular initial iterate: constant speed around the users' centroid at
/// the start altitude, first slot at the orbit point nearest the start,
/// uniform schedule, and the average power clipped per slot so that the
/// interference threshold holds under `model`.
pub fn init_solution_under(sc: &Scenario, model: LosModel) -> Result<DecisionVariables> {
    let n = sc.n_slots;
    let c = centroid(sc);
    let radius = init_radius(sc);
    let (dx, dy) = (sc.start.q[0] - c[0], sc.start.q[1] - c[1]);
    let phase = if dx == 0.0 && dy == 0.0 { 0.0 } else { dy.atan2(dx) };
    let mut q: Vec<[f64; 2]> = (0..n - 1)
        .map(|k| {
            let ang = phase + 2.0 * PI * k as f64 / (n - 1) as f64;
            [c[0] + radius * ang.cos(), c[1] + radius * ang.sin()]
        })
        .collect();
    q.push(q[0]);
    let z = vec![sc.start.z; n];
    let r = sc.n_users();
    let a = vec![vec![1.0 / r as f64; n]; r];
    let mut dv = DecisionVariables::from_positions(a, vec![sc.p_ave; n], q, z, sc)?;
    let coef = interference_coefficients(&dv, sc, model)?;
    for (p, c) in dv.p.iter_mut().zip(coef) {
        if c * *p > sc.gamma_w {
            *p = sc.gamma_w / c * (1.0 - 1e-9);
        }
    }
    Ok(dv)
}
