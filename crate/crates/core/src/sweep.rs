//! Parameter sweeps: one run per (value, scheme) cell.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::driver::{optimize_with, DriverOptions, Scheme};
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::report::{csv_writer, sig12, write_run};

pub const RATES_CSV: &str = "rates.csv";

/// A scenario key that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Interference threshold, in the scenario's decibel reference.
    Gamma,
    /// Horizon in seconds.
    T,
    PHorAve,
    PVerAve,
}

impl SweepParam {
    pub const ALL: [SweepParam; 4] = [SweepParam::Gamma, SweepParam::T, SweepParam::PHorAve, SweepParam::PVerAve];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma => "Gamma",
            SweepParam::T => "T",
            SweepParam::PHorAve => "P_hor_ave",
            SweepParam::PVerAve => "P_ver_ave",
        }
    }

    /// The scenario with this parameter set to `value`.
    pub fn apply(self, sc: &Scenario, value: f64) -> Result<Scenario> {
        sc.modified(|f| match self {
            SweepParam::Gamma => f.gamma_db = value,
            SweepParam::T => f.horizon_s = value,
            SweepParam::PHorAve => f.p_hor_ave_w = value,
            SweepParam::PVerAve => f.p_ver_ave_w = value,
        })
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = SweepParam::ALL.iter().map(|p| p.name()).collect();
                Error::Domain(format!("unknown sweep parameter '{s}', expected one of: {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub value: f64,
    pub scheme: Scheme,
    pub avg_rate: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

/// Runs every cell on a pool of `workers` threads. A failing cell is
/// recorded and the sweep goes on. With `out` set, each cell writes its run
/// files to `out/<param>=<value>/<scheme>/`.
pub fn sweep(
    sc: &Scenario,
    param: SweepParam,
    values: &[f64],
    schemes: &[Scheme],
    opts: &DriverOptions,
    workers: usize,
    out: Option<&Path>,
) -> Result<Vec<SweepCell>> {
    if values.is_empty() {
        return Err(Error::Domain("empty value list".into()));
    }
    if schemes.is_empty() {
        return Err(Error::Domain("empty scheme list".into()));
    }
    let cells: Vec<(f64, Scheme)> = values
        .iter()
        .flat_map(|&v| schemes.iter().map(move |&s| (v, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
    let run_cell = |&(value, scheme): &(f64, Scheme)| -> SweepCell {
        let result = param.apply(sc, value).and_then(|cell_sc| {
            let rep = optimize_with(&cell_sc, scheme.into(), opts)?;
            match out {
                Some(dir) => {
                    let s = write_run(&cell_dir(dir, param, value, scheme), &rep, &cell_sc)?;
                    Ok((s.avg_rate_bps_hz, s.converged))
                }
                None => Ok((rep.objective(), rep.converged())),
            }
        });
        match result {
            Ok((rate, converged)) => SweepCell {
                value,
                scheme,
                avg_rate: Some(rate),
                converged,
                error: None,
            },
            Err(e) => {
                log::warn!("{param}={value} {scheme}: {e}");
                SweepCell {
                    value,
                    scheme,
                    avg_rate: None,
                    converged: false,
                    error: Some(e.to_string()),
                }
            }
        }
    };
    Ok(pool.install(|| cells.par_iter().map(run_cell).collect()))
}

pub fn cell_dir(out: &Path, param: SweepParam, value: f64, scheme: Scheme) -> PathBuf {
    out.join(format!("{param}={}", sig12(value))).join(scheme.name())
}

pub fn write_rates(path: &Path, param: SweepParam, cells: &[SweepCell]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["param", "value", "scheme", "avg_rate_bps_hz", "converged", "error"])?;
    for c in cells {
        w.write_record([
            param.name().to_string(),
            sig12(c.value),
            c.scheme.name().to_string(),
            c.avg_rate.map_or(String::new(), sig12),
            c.converged.to_string(),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
