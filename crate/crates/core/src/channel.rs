//! Air-to-ground link geometry and the probabilistic line-of-sight channel.
//!
//! Angles are in degrees, distances in meters, powers in watts. The LoS
//! probability follows the usual logistic law in the elevation angle,
//!
//! ```text
//! P_L(theta) = 1 / (1 + a exp(-b (theta - a)))
//! ```
//!
//! and the NLoS probability is its complement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `10^(x/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Propagation constants in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Logistic shape constant of the LoS probability.
    pub a: f64,
    /// Logistic slope of the LoS probability, per degree.
    pub b: f64,
    /// Channel gain at the 1 m reference distance.
    pub rho0: f64,
    /// Extra NLoS attenuation, `0 < mu <= 1`.
    pub mu: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    /// Receiver noise power in watts.
    pub noise_w: f64,
}

impl ChannelParams {
    /// Builds the parameters from the decibel quantities found in scenario
    /// files: `rho0` and `mu` in dB, noise in dBm.
    pub fn from_db(
        a: f64,
        b: f64,
        rho0_db: f64,
        mu_db: f64,
        alpha_los: f64,
        alpha_nlos: f64,
        noise_dbm: f64,
    ) -> Result<Self> {
        let cp = ChannelParams {
            a,
            b,
            rho0: db_to_linear(rho0_db),
            mu: db_to_linear(mu_db),
            alpha_los,
            alpha_nlos,
            noise_w: dbm_to_watts(noise_dbm),
        };
        cp.validate()?;
        Ok(cp)
    }

    /// Dense-urban defaults: a = 11.95, b = 0.14, rho0 = -60 dB,
    /// mu = -20 dB, exponents 2.2 / 3.5, noise -100 dBm.
    pub fn urban() -> Self {
        ChannelParams::from_db(11.95, 0.14, -60.0, -20.0, 2.2, 3.5, -100.0)
            .expect("built-in channel constants are valid")
    }

    /// Reference SNR gain `rho0 / sigma^2`.
    pub fn gamma(&self) -> f64 {
        self.rho0 / self.noise_w
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(format!("channel: {m}")));
        if !(self.a > 0.0 && self.b > 0.0) {
            return bad("a and b must be positive");
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return bad("mu must lie in (0, 1]");
        }
        if !(self.alpha_los >= 2.0 && self.alpha_los <= self.alpha_nlos) {
            return bad("path-loss exponents must satisfy 2 <= alpha_los <= alpha_nlos");
        }
        if !(self.rho0 > 0.0 && self.noise_w > 0.0) || !self.rho0.is_finite() {
            return bad("rho0 and noise must be positive");
        }
        Ok(())
    }
}

/// UAV position: horizontal coordinates and altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirPosition {
    pub q: [f64; 2],
    pub z: f64,
}

impl AirPosition {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        AirPosition { q: [x, y], z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    CognitiveUser,
    PrimaryUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundNode {
    pub w: [f64; 2],
    pub kind: NodeKind,
}

impl GroundNode {
    pub fn user(x: f64, y: f64) -> Self {
        GroundNode {
            w: [x, y],
            kind: NodeKind::CognitiveUser,
        }
    }

    pub fn primary(x: f64, y: f64) -> Self {
        GroundNode {
            w: [x, y],
            kind: NodeKind::PrimaryUser,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkState {
    Los,
    Nlos,
}

/// How link states are modeled. `AlwaysLos` pins the LoS probability to one
/// for every link (rates and interference alike).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LosModel {
    #[default]
    Probabilistic,
    AlwaysLos,
}

pub fn horizontal_distance(q: [f64; 2], w: [f64; 2]) -> f64 {
    (q[0] - w[0]).hypot(q[1] - w[1])
}

/// Elevation angle of the UAV seen from a ground node, in degrees.
///
/// Directly overhead (zero horizontal offset) the angle is 90 degrees; it is
/// undefined only when the UAV sits on the node at zero altitude.
pub fn elevation_angle_deg(p: &AirPosition, g: &GroundNode) -> Result<f64> {
    if !(p.z >= 0.0) {
        return Err(Error::Domain(format!("negative altitude {}", p.z)));
    }
    let s = horizontal_distance(p.q, g.w);
    if s == 0.0 {
        if p.z == 0.0 {
            return Err(Error::Domain("elevation angle undefined at the node itself".into()));
        }
        return Ok(90.0);
    }
    Ok((p.z / s).atan().to_degrees())
}

pub fn los_probability(theta_deg: f64, cp: &ChannelParams) -> f64 {
    1.0 / (1.0 + cp.a * (-cp.b * (theta_deg - cp.a)).exp())
}

/// LoS probability under a link model.
pub fn los_probability_under(model: LosModel, theta_deg: f64, cp: &ChannelParams) -> f64 {
    match model {
        LosModel::Probabilistic => los_probability(theta_deg, cp),
        LosModel::AlwaysLos => 1.0,
    }
}

pub fn link_distance(p: &AirPosition, g: &GroundNode) -> f64 {
    horizontal_distance(p.q, g.w).hypot(p.z)
}

/// Achievable rate in one link state, bits/s/Hz.
pub fn rate(power_w: f64, d: f64, state: LinkState, cp: &ChannelParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("link distance must be positive, got {d}")));
    }
    if !(power_w >= 0.0) {
        return Err(Error::Domain(format!("negative transmit power {power_w}")));
    }
    let snr = match state {
        LinkState::Los => power_w * cp.gamma() / d.powf(cp.alpha_los),
        LinkState::Nlos => power_w * cp.gamma() * cp.mu / d.powf(cp.alpha_nlos),
    };
    Ok(snr.ln_1p() / std::f64::consts::LN_2)
}

/// Expected rate over the LoS/NLoS mixture.
pub fn expected_rate(power_w: f64, p: &AirPosition, g: &GroundNode, cp: &ChannelParams) -> Result<f64> {
    let pl = los_probability(elevation_angle_deg(p, g)?, cp);
    let d = link_distance(p, g);
    Ok(pl * rate(power_w, d, LinkState::Los, cp)? + (1.0 - pl) * rate(power_w, d, LinkState::Nlos, cp)?)
}

/// LoS-only part of [`expected_rate`]; never larger than it.
pub fn lower_bound_rate(power_w: f64, p: &AirPosition, g: &GroundNode, cp: &ChannelParams) -> Result<f64> {
    lower_bound_rate_under(LosModel::Probabilistic, power_w, p, g, cp)
}

pub fn lower_bound_rate_under(
    model: LosModel,
    power_w: f64,
    p: &AirPosition,
    g: &GroundNode,
    cp: &ChannelParams,
) -> Result<f64> {
    let pl = los_probability_under(model, elevation_angle_deg(p, g)?, cp);
    Ok(pl * rate(power_w, link_distance(p, g), LinkState::Los, cp)?)
}

/// Expected interference power at a node per watt transmitted.
///
/// The received power uses the channel gain `rho0` (watts at the node), not
/// the noise-normalized `gamma`, so it can be compared with a threshold in
/// watts.
pub fn interference_per_watt(model: LosModel, p: &AirPosition, node: &GroundNode, cp: &ChannelParams) -> Result<f64> {
    let theta = elevation_angle_deg(p, node)?;
    let d = link_distance(p, node);
    let pl = los_probability_under(model, theta, cp);
    Ok(cp.rho0 * (pl / d.powf(cp.alpha_los) + (1.0 - pl) * cp.mu / d.powf(cp.alpha_nlos)))
}

/// Expected interference power (watts) received at `node`.
pub fn expected_interference(power_w: f64, p: &AirPosition, node: &GroundNode, cp: &ChannelParams) -> Result<f64> {
    Ok(power_w * interference_per_watt(LosModel::Probabilistic, p, node, cp)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cp() -> ChannelParams {
        ChannelParams::urban()
    }

    #[test]
    fn elevation_examples() {
        let g = GroundNode::user(100.0, 0.0);
        assert!((elevation_angle_deg(&AirPosition::new(0.0, 0.0, 100.0), &g).unwrap() - 45.0).abs() < 1e-12);
        let over = GroundNode::user(200.0, 360.0);
        assert_eq!(elevation_angle_deg(&AirPosition::new(200.0, 360.0, 50.0), &over).unwrap(), 90.0);
        // 40-digit reference value
        let v = elevation_angle_deg(&AirPosition::new(336.0, 187.0, 30.0), &GroundNode::user(332.0, 50.0)).unwrap();
        assert!((v - 12.346_459_246_844_94).abs() < 1e-12, "{v}");
    }

    #[test]
    fn elevation_undefined_on_the_node() {
        let g = GroundNode::user(1.0, 2.0);
        assert!(matches!(
            elevation_angle_deg(&AirPosition::new(1.0, 2.0, 0.0), &g),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn los_probability_examples() {
        let cp = cp();
        assert!((los_probability(11.95, &cp) - 1.0 / 12.95).abs() < 1e-15);
        assert!((los_probability(45.0, &cp) - 0.895_319_587_904_439).abs() < 1e-12);
        assert!((los_probability(45.0, &cp) - 0.8954).abs() < 1e-4);
        assert!((los_probability(90.0, &cp) - 0.999_785_346_057_983_6).abs() < 1e-12);
    }

    #[test]
    fn link_distance_examples() {
        assert_eq!(link_distance(&AirPosition::new(0.0, 0.0, 3.0), &GroundNode::user(4.0, 0.0)), 5.0);
        assert_eq!(link_distance(&AirPosition::new(7.0, 7.0, 30.0), &GroundNode::user(7.0, 7.0)), 30.0);
        let d = link_distance(&AirPosition::new(336.0, 187.0, 30.0), &GroundNode::primary(200.0, 360.0));
        assert!((d - 222.092_323_145_128_1).abs() < 1e-10);
    }

    #[test]
    fn rate_examples() {
        let cp = cp();
        assert_eq!(rate(0.0, 50.0, LinkState::Nlos, &cp).unwrap(), 0.0);
        assert!((cp.gamma() - 1e7).abs() < 1e-6);
        let r = rate(0.1, 2f64.sqrt() * 100.0, LinkState::Los, &cp).unwrap();
        assert!((r - 4.290_745_539_897_92).abs() < 1e-10, "{r}");
        assert!(matches!(rate(0.1, 0.0, LinkState::Los, &cp), Err(Error::Domain(_))));
    }

    #[test]
    fn mixture_degenerates_overhead() {
        // Overhead the LoS probability is as close to one as the model allows,
        // so the expected rate is the LoS rate weighted by it.
        let cp = ChannelParams { a: 1e-9, b: 10.0, ..cp() };
        let p = AirPosition::new(0.0, 0.0, 40.0);
        let g = GroundNode::user(0.0, 0.0);
        let e = expected_rate(0.2, &p, &g, &cp).unwrap();
        let los = rate(0.2, 40.0, LinkState::Los, &cp).unwrap();
        assert!((e - los).abs() < 1e-12);
        assert_eq!(expected_rate(0.0, &p, &g, &cp).unwrap(), 0.0);
        assert_eq!(lower_bound_rate(0.0, &p, &g, &cp).unwrap(), 0.0);
    }

    #[test]
    fn interference_at_table_start() {
        let i = expected_interference(
            0.1,
            &AirPosition::new(336.0, 187.0, 30.0),
            &GroundNode::primary(200.0, 360.0),
            &cp(),
        )
        .unwrap();
        assert!((i / 3.062_042_808_621_373e-14 - 1.0).abs() < 1e-10, "{i}");
        assert!(i < 10f64.powf(-12.1));
        assert_eq!(
            expected_interference(0.0, &AirPosition::new(1.0, 1.0, 30.0), &GroundNode::primary(0.0, 0.0), &cp())
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn always_los_keeps_only_the_los_term() {
        let cp = cp();
        let p = AirPosition::new(10.0, 0.0, 30.0);
        let g = GroundNode::primary(0.0, 0.0);
        let d = link_distance(&p, &g);
        let c = interference_per_watt(LosModel::AlwaysLos, &p, &g, &cp).unwrap();
        assert!((c - cp.rho0 / d.powf(cp.alpha_los)).abs() <= 1e-15 * c);
    }

    #[test]
    fn los_probability_monotone_on_grid() {
        let cp = cp();
        let mut prev = los_probability(0.0, &cp);
        for i in 1..=1000 {
            let v = los_probability(90.0 * i as f64 / 1000.0, &cp);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn nlos_never_beats_los_on_random_inputs() {
        let cp = cp();
        let mut seed = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let p = next() * 0.4;
            let d = 1.0 + next() * 500.0;
            assert!(rate(p, d, LinkState::Nlos, &cp).unwrap() <= rate(p, d, LinkState::Los, &cp).unwrap());
        }
    }

    proptest! {
        #[test]
        fn raising_altitude_raises_angle_and_distance(off in 1.0f64..500.0, z in 1.0f64..200.0, dz in 0.1f64..50.0) {
            let g = GroundNode::user(0.0, 0.0);
            let lo = AirPosition::new(off, 0.0, z);
            let hi = AirPosition::new(off, 0.0, z + dz);
            prop_assert!(elevation_angle_deg(&hi, &g).unwrap() > elevation_angle_deg(&lo, &g).unwrap());
            prop_assert!(link_distance(&hi, &g) > link_distance(&lo, &g));
        }

        #[test]
        fn lower_bound_never_exceeds_expected(x in -300.0f64..300.0, y in -300.0f64..300.0, z in 1.0f64..150.0, p in 0.0f64..0.4) {
            let cp = cp();
            let pos = AirPosition::new(x, y, z);
            let g = GroundNode::user(12.0, -40.0);
            prop_assert!(lower_bound_rate(p, &pos, &g, &cp).unwrap() <= expected_rate(p, &pos, &g, &cp).unwrap());
        }

        #[test]
        fn interference_is_linear_in_power(x in -300.0f64..300.0, z in 1.0f64..150.0, p in 1e-4f64..0.4) {
            let cp = cp();
            let pos = AirPosition::new(x, 3.0, z);
            let d = GroundNode::primary(0.0, 0.0);
            let one = expected_interference(p, &pos, &d, &cp).unwrap();
            let two = expected_interference(2.0 * p, &pos, &d, &cp).unwrap();
            prop_assert!((two - 2.0 * one).abs() <= 1e-12 * two);
        }
    }
}
