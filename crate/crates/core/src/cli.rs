//! Command line front end.
//!
//! Exit codes: 0 converged, 1 malformed input, 2 stalled or out of
//! iterations, 3 infeasible input.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::channel::ChannelParams;
use crate::driver::{optimize_with, DriverOptions, Scheme};
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::report::write_run;
use crate::sweep::{sweep, write_rates, SweepParam, RATES_CSV};
use crate::tradeoff::{parse_list, parse_path, parse_point, tradeoff, write_tradeoff, Pass};

/// Default output directory when `--out` is absent.
pub const OUT_ENV: &str = "CRN_UAV_OUT";
pub const TRADEOFF_CSV: &str = "tradeoff.csv";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MALFORMED: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "crn-uav", version, about = "UAV trajectory, power and scheduling optimizer for underlay cognitive radio")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one scheme and write trajectory.csv, convergence.csv, summary.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// proposed, npc, 2d-los or 2d-plos.
        #[arg(long)]
        scheme: String,
        #[arg(long, env = OUT_ENV)]
        out: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
        #[arg(long = "inner-iters", default_value_t = 1)]
        inner_iters: usize,
    },
    /// Rate and LoS probability along constant-altitude passes over one user.
    TradeoffDemo {
        /// Comma separated altitudes in meters, one plan each.
        #[arg(long)]
        altitudes: String,
        /// Ground user as X,Y.
        #[arg(long)]
        user: String,
        /// Pass as X1,Y1:X2,Y2.
        #[arg(long)]
        path: String,
        #[arg(long, env = OUT_ENV)]
        out: PathBuf,
        /// Samples along the pass, both ends included.
        #[arg(long, default_value_t = 81)]
        points: usize,
        /// Transmit power in watts.
        #[arg(long, default_value_t = 0.1)]
        power: f64,
        /// Scenario whose channel constants to use; urban defaults otherwise.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// One run per (value, scheme); aggregates into rates.csv.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Gamma, T, P_hor_ave or P_ver_ave.
        #[arg(long)]
        param: String,
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "proposed,npc,2d-los,2d-plos")]
        schemes: String,
        #[arg(long, env = OUT_ENV)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
    },
}

/// Exit code for an error that stopped a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_MALFORMED,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_MALFORMED } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run {
            scenario,
            scheme,
            out,
            epsilon,
            max_iters,
            inner_iters,
        } => {
            let scheme: Scheme = scheme.parse()?;
            let sc = Scenario::load(&scenario)?;
            let opts = driver_options(epsilon, max_iters, inner_iters)?;
            cmd_run(&sc, scheme, &opts, &out)
        }
        Command::TradeoffDemo {
            altitudes,
            user,
            path,
            out,
            points,
            power,
            scenario,
        } => {
            let cp = match scenario {
                Some(p) => Scenario::load(&p)?.channel,
                None => ChannelParams::urban(),
            };
            let (from, to) = parse_path(&path)?;
            if !(power >= 0.0) {
                return Err(Error::Domain(format!("power must be nonnegative, got {power}")));
            }
            let rows = tradeoff(&parse_list(&altitudes)?, parse_point(&user)?, &Pass { from, to, points }, power, &cp)?;
            create_dir(&out)?;
            write_tradeoff(&out.join(TRADEOFF_CSV), &rows)?;
            println!("wrote {} rows to {}", rows.len(), out.join(TRADEOFF_CSV).display());
            Ok(EXIT_OK)
        }
        Command::Sweep {
            scenario,
            param,
            values,
            schemes,
            out,
            workers,
            epsilon,
            max_iters,
        } => {
            let param: SweepParam = param.parse()?;
            let values = parse_list(&values)?;
            let schemes = parse_schemes(&schemes)?;
            let sc = Scenario::load(&scenario)?;
            let opts = driver_options(epsilon, max_iters, 1)?;
            create_dir(&out)?;
            let cells = sweep(&sc, param, &values, &schemes, &opts, workers, Some(&out))?;
            write_rates(&out.join(RATES_CSV), param, &cells)?;
            let failed = cells.iter().filter(|c| c.error.is_some()).count();
            let stalled = cells.iter().filter(|c| !c.converged).count();
            println!("{} cells, {failed} failed, {stalled} not converged", cells.len());
            Ok(if stalled == 0 { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
    }
}

/// Runs one scheme and writes its files; the exit code reflects termination.
pub fn cmd_run(sc: &Scenario, scheme: Scheme, opts: &DriverOptions, out: &Path) -> Result<i32> {
    let rep = optimize_with(sc, scheme.into(), opts)?;
    let s = write_run(out, &rep, sc)?;
    println!(
        "{}: average rate {} bps/Hz after {} iterations ({})",
        s.scheme, s.avg_rate_bps_hz, s.iterations, s.meta.termination
    );
    if let Some(d) = &rep.diagnostic {
        eprintln!("{d}");
    }
    Ok(if rep.converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn driver_options(epsilon: Option<f64>, max_iters: Option<usize>, inner: usize) -> Result<DriverOptions> {
    if let Some(e) = epsilon {
        if !(e > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {e}")));
        }
    }
    if max_iters == Some(0) || inner == 0 {
        return Err(Error::Domain("iteration counts must be at least 1".into()));
    }
    Ok(DriverOptions {
        epsilon,
        max_outer_iters: max_iters,
        inner_iters: inner,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}
