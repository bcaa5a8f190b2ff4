//! Run artifacts: per-slot table, convergence log and summary, written as
//! versioned CSV/JSON.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{los_probability_under, LosModel};
use crate::driver::{Block, RunReport, SchemeConfig};
use crate::energy::{horizontal_power, vertical_power};
use crate::error::{Error, Result};
use crate::model::{interference_profile, objective_under, slot_rates, DecisionVariables, Scenario};

pub const SCHEMA_LINE: &str = "# schema=1";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// Rounds to 12 significant digits and prints in plain decimal.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// One row of the per-slot table.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRow {
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v_xy: f64,
    pub v_z: f64,
    pub p: f64,
    pub user: Option<usize>,
    /// Elevation angle per user, then the primary user last.
    pub theta: Vec<f64>,
    /// LoS probability per user, then the primary user last.
    pub p_los: Vec<f64>,
    pub rate: f64,
    pub interference_w: f64,
}

pub fn slot_table(dv: &DecisionVariables, sc: &Scenario, model: LosModel) -> Result<Vec<SlotRow>> {
    let rates = slot_rates(dv, sc, model)?;
    let interference = interference_profile(dv, sc, model)?;
    let users = dv.scheduled_users();
    Ok((0..dv.n_slots())
        .map(|n| {
            let theta: Vec<f64> = dv
                .angles
                .users
                .iter()
                .map(|row| row[n])
                .chain(std::iter::once(dv.angles.primary[n]))
                .collect();
            let p_los = theta
                .iter()
                .map(|&t| los_probability_under(model, t, &sc.channel))
                .collect();
            SlotRow {
                n: n + 1,
                x: dv.q[n][0],
                y: dv.q[n][1],
                z: dv.z[n],
                v_xy: dv.v[n][0].hypot(dv.v[n][1]),
                v_z: dv.vz[n],
                p: dv.p[n],
                user: users[n],
                theta,
                p_los,
                rate: rates[n],
                interference_w: interference[n],
            }
        })
        .collect())
}

/// Fixed summary keys, plus the scenario geometry under `meta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scheme: String,
    pub avg_rate_bps_hz: f64,
    pub iterations: usize,
    pub converged: bool,
    pub hor_energy_avg_w: f64,
    pub ver_energy_avg_w: f64,
    pub final_interference_max_w: f64,
    pub meta: SummaryMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryMeta {
    pub schema: u32,
    pub termination: String,
    pub diagnostic: Option<String>,
    pub initial_rate_bps_hz: f64,
    pub wall_s: f64,
    pub scenario_digest: String,
    pub users_m: Vec<[f64; 2]>,
    pub primary_m: [f64; 2],
    pub start_m: [f64; 3],
    pub gamma_w: f64,
    pub feasible: bool,
}

pub fn summarize(rep: &RunReport, sc: &Scenario) -> Result<Summary> {
    let model = SchemeConfig::from(rep.scheme).model();
    let dv = &rep.solution;
    let n = dv.n_slots() as f64;
    let hor = dv.v.iter().map(|v| horizontal_power(*v, &sc.rotor)).sum::<f64>() / n;
    let ver = dv.vz.iter().map(|v| vertical_power(*v, &sc.rotor)).sum::<f64>() / n;
    let imax = interference_profile(dv, sc, model)?
        .into_iter()
        .fold(0.0, f64::max);
    let f = sc.file();
    Ok(Summary {
        scheme: rep.scheme.name().to_string(),
        avg_rate_bps_hz: objective_under(dv, sc, model)?,
        iterations: rep.records.len(),
        converged: rep.converged(),
        hor_energy_avg_w: hor,
        ver_energy_avg_w: ver,
        final_interference_max_w: imax,
        meta: SummaryMeta {
            schema: 1,
            termination: format!("{:?}", rep.termination).to_lowercase(),
            diagnostic: rep.diagnostic.clone(),
            initial_rate_bps_hz: rep.initial_objective,
            wall_s: rep.wall_s,
            scenario_digest: rep.scenario_digest.clone(),
            users_m: f.users_m.clone(),
            primary_m: f.primary_m,
            start_m: f.start_m,
            gamma_w: sc.gamma_w,
            feasible: rep.audit.feasible(),
        },
    })
}

fn create(path: &Path) -> Result<fs::File> {
    let mut file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(file, "{SCHEMA_LINE}").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(file)
}

/// Opens a CSV writer whose file starts with the schema line.
pub fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

/// Opens a CSV reader after checking the schema line.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut first = String::new();
    BufReader::new(fs::File::open(path).map_err(io)?)
        .read_line(&mut first)
        .map_err(io)?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            message: format!("expected '{SCHEMA_LINE}', found '{}'", first.trim_end()),
        });
    }
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(fs::File::open(path).map_err(io)?))
}

pub fn trajectory_header(n_users: usize) -> Vec<String> {
    let mut h: Vec<String> = ["n", "x", "y", "z", "v_xy", "v_z", "p_w", "user"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..n_users).map(|r| format!("theta_u{r}")));
    h.push("theta_d".into());
    h.extend((0..n_users).map(|r| format!("pl_u{r}")));
    h.push("pl_d".into());
    h.push("rate_bps_hz".into());
    h.push("interference_w".into());
    h
}

pub fn write_trajectory(path: &Path, rows: &[SlotRow], n_users: usize) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(trajectory_header(n_users))?;
    for r in rows {
        let mut rec = vec![r.n.to_string()];
        rec.extend([r.x, r.y, r.z, r.v_xy, r.v_z, r.p].map(sig12));
        rec.push(r.user.map_or(String::new(), |u| u.to_string()));
        rec.extend(r.theta.iter().chain(&r.p_los).map(|&v| sig12(v)));
        rec.push(sig12(r.rate));
        rec.push(sig12(r.interference_w));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_convergence(path: &Path, rep: &RunReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "iteration",
        "objective",
        "after_scheduling",
        "after_power",
        "after_horizontal",
        "after_vertical",
        "max_residual",
        "restoring",
        "wall_s",
    ])?;
    for r in &rep.records {
        let block = |b: Block| {
            r.after_block
                .iter()
                .find(|(k, _)| *k == b)
                .map_or(String::new(), |(_, v)| sig12(*v))
        };
        w.write_record([
            r.index.to_string(),
            sig12(r.objective),
            block(Block::Scheduling),
            block(Block::Power),
            block(Block::Horizontal),
            block(Block::Vertical),
            sig12(r.max_residual),
            r.restoring.to_string(),
            sig12(r.wall_s),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_summary(path: &Path, s: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(s)?;
    fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the three run files into `dir`, creating it if needed.
pub fn write_run(dir: &Path, rep: &RunReport, sc: &Scenario) -> Result<Summary> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let model = SchemeConfig::from(rep.scheme).model();
    let rows = slot_table(&rep.solution, sc, model)?;
    write_trajectory(&dir.join(TRAJECTORY_CSV), &rows, sc.n_users())?;
    write_convergence(&dir.join(CONVERGENCE_CSV), rep)?;
    let summary = summarize(rep, sc)?;
    write_summary(&dir.join(SUMMARY_JSON), &summary)?;
    Ok(summary)
}

/// Rebuilds schedule, powers and positions from a trajectory file.
pub fn read_trajectory(path: &Path, sc: &Scenario) -> Result<DecisionVariables> {
    let mut rd = csv_reader(path)?;
    let header = rd.headers()?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 2,
            column: 1,
            message: format!("missing column '{name}'"),
        })
    };
    let (cx, cy, cz, cp, cu) = (col("x")?, col("y")?, col("z")?, col("p_w")?, col("user")?);
    let n = sc.n_slots;
    let mut a = vec![vec![0.0; n]; sc.n_users()];
    let (mut p, mut q, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 3, |pos| pos.line() as usize);
        let num = |c: usize| -> Result<f64> {
            rec[c].parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                column: c + 1,
                message: format!("'{}': {e}", &rec[c]),
            })
        };
        q.push([num(cx)?, num(cy)?]);
        z.push(num(cz)?);
        p.push(num(cp)?);
        if !rec[cu].is_empty() {
            let u: usize = rec[cu].parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                column: cu + 1,
                message: format!("user '{}': {e}", &rec[cu]),
            })?;
            if u >= sc.n_users() || i >= n {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: cu + 1,
                    message: format!("user {u} in slot {} is out of range", i + 1),
                });
            }
            a[u][i] = 1.0;
        }
    }
    DecisionVariables::from_positions(a, p, q, z, sc)
}
