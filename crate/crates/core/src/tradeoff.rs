//! Altitude tradeoff on a straight pass over one ground user.

use std::path::Path;

use crate::channel::{
    elevation_angle_deg, expected_rate, link_distance, los_probability, lower_bound_rate, rate, AirPosition,
    ChannelParams, GroundNode, LinkState,
};
use crate::error::{Error, Result};
use crate::report::{csv_writer, sig12};

/// A constant-altitude pass from `from` to `to` sampled at `points` evenly
/// spaced positions, both ends included.
#[derive(Debug, Clone, PartialEq)]
pub struct Pass {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub plan: usize,
    pub altitude_m: f64,
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub theta_deg: f64,
    pub p_los: f64,
    /// Rate if the link were LoS.
    pub los_rate: f64,
    /// Mixture of LoS and NLoS rates.
    pub expected_rate: f64,
    /// LoS-weighted rate, the approximation the optimizer maximizes.
    pub approx_rate: f64,
}

/// Parses `X1,Y1:X2,Y2`.
pub fn parse_path(s: &str) -> Result<([f64; 2], [f64; 2])> {
    let bad = || Error::Domain(format!("malformed path '{s}', expected X1,Y1:X2,Y2"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((parse_point(a).map_err(|_| bad())?, parse_point(b).map_err(|_| bad())?))
}

/// Parses `X,Y`.
pub fn parse_point(s: &str) -> Result<[f64; 2]> {
    let v = parse_list(s)?;
    match v[..] {
        [x, y] => Ok([x, y]),
        _ => Err(Error::Domain(format!("expected X,Y, got '{s}'"))),
    }
}

/// Parses a comma separated list of finite numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Domain(format!("'{}' is not a finite number", t.trim())))
        })
        .collect()
}

pub fn tradeoff(
    altitudes: &[f64],
    user: [f64; 2],
    pass: &Pass,
    power_w: f64,
    cp: &ChannelParams,
) -> Result<Vec<TradeoffRow>> {
    if altitudes.len() < 2 {
        return Err(Error::Domain(format!("need at least two altitude plans, got {}", altitudes.len())));
    }
    if let Some(z) = altitudes.iter().find(|z| !(**z > 0.0)) {
        return Err(Error::Domain(format!("altitude must be positive, got {z}")));
    }
    if pass.points < 2 {
        return Err(Error::Domain("a pass needs at least two points".into()));
    }
    let g = GroundNode::user(user[0], user[1]);
    let mut rows = Vec::with_capacity(altitudes.len() * pass.points);
    for (plan, &z) in altitudes.iter().enumerate() {
        for n in 0..pass.points {
            let t = n as f64 / (pass.points - 1) as f64;
            let x = pass.from[0] + t * (pass.to[0] - pass.from[0]);
            let y = pass.from[1] + t * (pass.to[1] - pass.from[1]);
            let p = AirPosition::new(x, y, z);
            let theta = elevation_angle_deg(&p, &g)?;
            rows.push(TradeoffRow {
                plan,
                altitude_m: z,
                n,
                x,
                y,
                theta_deg: theta,
                p_los: los_probability(theta, cp),
                los_rate: rate(power_w, link_distance(&p, &g), LinkState::Los, cp)?,
                expected_rate: expected_rate(power_w, &p, &g, cp)?,
                approx_rate: lower_bound_rate(power_w, &p, &g, cp)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_tradeoff(path: &Path, rows: &[TradeoffRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "plan",
        "altitude_m",
        "n",
        "x",
        "y",
        "theta_deg",
        "p_los",
        "los_rate_bps_hz",
        "expected_rate_bps_hz",
        "approx_rate_bps_hz",
    ])?;
    for r in rows {
        let mut rec = vec![r.plan.to_string(), sig12(r.altitude_m), r.n.to_string()];
        rec.extend([r.x, r.y, r.theta_deg, r.p_los, r.los_rate, r.expected_rate, r.approx_rate].map(sig12));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
