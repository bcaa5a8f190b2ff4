//! Problem instances and their JSON representation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{dbm_to_watts, db_to_linear, AirPosition, ChannelParams, GroundNode};
use crate::energy::RotorcraftParams;
use crate::error::{Error, Result};

/// Reference level of the interference threshold given in decibels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PowerReference {
    #[default]
    #[serde(rename = "dBW")]
    DbW,
    #[serde(rename = "dBm")]
    DbM,
}

impl PowerReference {
    pub fn to_watts(self, level: f64) -> f64 {
        match self {
            PowerReference::DbW => db_to_linear(level),
            PowerReference::DbM => dbm_to_watts(level),
        }
    }
}

/// Channel block of a scenario file, in the units of its keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub a: f64,
    pub b: f64,
    pub rho0_db: f64,
    pub mu_db: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub noise_dbm: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            a: 11.95,
            b: 0.14,
            rho0_db: -60.0,
            mu_db: -20.0,
            alpha_los: 2.2,
            alpha_nlos: 3.5,
            noise_dbm: -100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotorSpec {
    pub p0_w: f64,
    pub p1_w: f64,
    pub u_tip_mps: f64,
    pub d0: f64,
    pub rho_kgpm3: f64,
    pub solidity: f64,
    pub disc_area_m2: f64,
    pub v0_mps: f64,
    pub weight_n: f64,
}

impl From<RotorcraftParams> for RotorSpec {
    fn from(r: RotorcraftParams) -> Self {
        RotorSpec {
            p0_w: r.p0,
            p1_w: r.p1,
            u_tip_mps: r.u_tip,
            d0: r.d0,
            rho_kgpm3: r.rho,
            solidity: r.solidity,
            disc_area_m2: r.disc_area,
            v0_mps: r.v0,
            weight_n: r.weight,
        }
    }
}

impl From<&RotorSpec> for RotorcraftParams {
    fn from(r: &RotorSpec) -> Self {
        RotorcraftParams {
            p0: r.p0_w,
            p1: r.p1_w,
            u_tip: r.u_tip_mps,
            d0: r.d0,
            rho: r.rho_kgpm3,
            solidity: r.solidity,
            disc_area: r.disc_area_m2,
            v0: r.v0_mps,
            weight: r.weight_n,
        }
    }
}

/// On-disk scenario. Every key carries its unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub users_m: Vec<[f64; 2]>,
    pub primary_m: [f64; 2],
    pub start_m: [f64; 3],
    pub horizon_s: f64,
    pub slot_s: f64,
    pub h_min_m: f64,
    pub h_max_m: f64,
    pub v_max_mps: f64,
    pub vz_max_mps: f64,
    pub a_max_mps2: f64,
    #[serde(default)]
    pub az_max_mps2: Option<f64>,
    pub p_max_w: f64,
    pub p_ave_w: f64,
    pub gamma_db: f64,
    #[serde(default)]
    pub gamma_reference: PowerReference,
    pub p_hor_ave_w: f64,
    pub p_ver_ave_w: f64,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default = "default_rotor")]
    pub rotor: RotorSpec,
    pub epsilon: f64,
    pub max_outer_iters: usize,
}

fn default_rotor() -> RotorSpec {
    RotorcraftParams::default().into()
}

/// The bundled four-user urban instance.
pub const TABLE2_JSON: &str = include_str!("../../scenarios/table2.json");

/// A validated, immutable problem instance in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: Vec<GroundNode>,
    pub primary: GroundNode,
    pub horizon_s: f64,
    pub n_slots: usize,
    pub slot_s: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub v_max: f64,
    pub vz_max: f64,
    pub a_max: f64,
    pub az_max: Option<f64>,
    pub p_max: f64,
    pub p_ave: f64,
    /// Interference threshold at the primary user, W.
    pub gamma_w: f64,
    pub p_hor_ave: f64,
    pub p_ver_ave: f64,
    pub channel: ChannelParams,
    pub rotor: RotorcraftParams,
    pub start: AirPosition,
    pub epsilon: f64,
    pub max_outer_iters: usize,
    file: ScenarioFile,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        Scenario::from_file(self)
    }
}

impl Scenario {
    pub fn table2() -> Self {
        Scenario::from_json_str(TABLE2_JSON, Path::new("table2.json")).expect("bundled scenario is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Scenario::from_json_str(&text, path)
    }

    /// Parses scenario JSON; `origin` only labels diagnostics.
    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Scenario::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        let c = &file.channel;
        let channel = ChannelParams::from_db(c.a, c.b, c.rho0_db, c.mu_db, c.alpha_los, c.alpha_nlos, c.noise_dbm)?;
        let rotor = RotorcraftParams::from(&file.rotor);
        rotor.validate()?;

        let finite = file.users_m.iter().flatten().chain(&file.primary_m).chain(&file.start_m).all(|v| v.is_finite());
        if !finite {
            return bad("node coordinates must be finite".into());
        }
        if file.users_m.is_empty() {
            return bad("at least one cognitive user is required".into());
        }
        if !(file.slot_s > 0.0 && file.horizon_s > 0.0) {
            return bad("horizon and slot length must be positive".into());
        }
        let ratio = file.horizon_s / file.slot_s;
        let n_slots = ratio.round() as usize;
        if (ratio - n_slots as f64).abs() > 1e-9 * ratio.max(1.0) || n_slots < 2 {
            return bad(format!(
                "horizon {} s is not a whole number (>= 2) of {} s slots",
                file.horizon_s, file.slot_s
            ));
        }
        let z0 = file.start_m[2];
        if !(file.h_min_m > 0.0 && file.h_min_m <= z0 && z0 <= file.h_max_m) {
            return bad(format!(
                "start altitude {z0} m must lie in [{}, {}] with a positive floor",
                file.h_min_m, file.h_max_m
            ));
        }
        let positive = [
            ("v_max_mps", file.v_max_mps),
            ("vz_max_mps", file.vz_max_mps),
            ("a_max_mps2", file.a_max_mps2),
            ("p_max_w", file.p_max_w),
            ("p_ave_w", file.p_ave_w),
            ("p_hor_ave_w", file.p_hor_ave_w),
            ("p_ver_ave_w", file.p_ver_ave_w),
            ("epsilon", file.epsilon),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        if let Some(az) = file.az_max_mps2 {
            if !(az > 0.0) {
                return bad(format!("az_max_mps2 must be positive, got {az}"));
            }
        }
        if file.p_ave_w > file.p_max_w {
            return bad(format!("p_ave_w {} exceeds p_max_w {}", file.p_ave_w, file.p_max_w));
        }
        if file.p_hor_ave_w < rotor.hover_power() {
            return Err(Error::Infeasible(format!(
                "p_hor_ave_w {} is below the hover power {}",
                file.p_hor_ave_w,
                rotor.hover_power()
            )));
        }
        if file.max_outer_iters == 0 {
            return bad("max_outer_iters must be at least 1".into());
        }
        let gamma_w = file.gamma_reference.to_watts(file.gamma_db);
        if !(gamma_w >= 0.0) {
            return bad("interference threshold must be a finite level".into());
        }

        Ok(Scenario {
            users: file.users_m.iter().map(|w| GroundNode::user(w[0], w[1])).collect(),
            primary: GroundNode::primary(file.primary_m[0], file.primary_m[1]),
            horizon_s: file.horizon_s,
            n_slots,
            slot_s: file.slot_s,
            h_min: file.h_min_m,
            h_max: file.h_max_m,
            v_max: file.v_max_mps,
            vz_max: file.vz_max_mps,
            a_max: file.a_max_mps2,
            az_max: file.az_max_mps2,
            p_max: file.p_max_w,
            p_ave: file.p_ave_w,
            gamma_w,
            p_hor_ave: file.p_hor_ave_w,
            p_ver_ave: file.p_ver_ave_w,
            channel,
            rotor,
            start: AirPosition::new(file.start_m[0], file.start_m[1], z0),
            epsilon: file.epsilon,
            max_outer_iters: file.max_outer_iters,
            file,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// The file this scenario was built from.
    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }

    /// Returns a copy with the file edited and revalidated.
    pub fn modified(&self, edit: impl FnOnce(&mut ScenarioFile)) -> Result<Self> {
        let mut f = self.file.clone();
        edit(&mut f);
        Scenario::from_file(f)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(&self.file).expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_instance() {
        let sc = Scenario::table2();
        assert_eq!(sc.n_slots, 70);
        assert_eq!(sc.n_users(), 4);
        assert_eq!(sc.start, AirPosition::new(336.0, 187.0, 30.0));
        assert_eq!(sc.primary.w, [200.0, 360.0]);
        assert!((sc.gamma_w / 10f64.powf(-12.1) - 1.0).abs() < 1e-12);
        assert!((sc.channel.gamma() - 1e7).abs() < 1e-6);
        assert_eq!(sc.rotor, RotorcraftParams::default());
    }

    #[test]
    fn dbm_reference_is_thirty_db_lower() {
        let sc = Scenario::table2();
        let m = sc.modified(|f| f.gamma_reference = PowerReference::DbM).unwrap();
        assert!((sc.gamma_w / m.gamma_w - 1e3).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_instances() {
        let sc = Scenario::table2();
        assert!(sc.modified(|f| f.slot_s = 0.3).is_err());
        assert!(sc.modified(|f| f.p_ave_w = 0.5).is_err());
        assert!(sc.modified(|f| f.start_m[2] = 120.0).is_err());
        assert!(sc.modified(|f| f.users_m.clear()).is_err());
        assert!(sc.modified(|f| f.channel.mu_db = 3.0).is_err());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = Scenario::from_json_str("{\n  \"users_m\": [[1, 2]],\n  \"bogus\": 1\n}", Path::new("x.json"))
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn digest_tracks_content() {
        let sc = Scenario::table2();
        assert_eq!(sc.digest(), Scenario::table2().digest());
        assert_ne!(sc.digest(), sc.modified(|f| f.horizon_s = 60.0).unwrap().digest());
    }
}
