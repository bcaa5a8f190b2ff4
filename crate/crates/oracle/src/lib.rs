//! Reference oracles used only by the `crn-uav` test suites.
//!
//! Nothing here depends on `crn-uav`. Answers come from exhaustive
//! enumeration, grids, central differences and dense active-set search.

use std::fmt;
use std::io::{self, Write};

mod dense;
pub mod geometry;

pub use dense::{lp_vertex_enumeration, qp_active_set_enumeration, solve_linear_system};

/// Upper bound on the number of candidate points any exhaustive oracle will
/// visit.
pub const MAX_ENUMERATION: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    TooLarge { candidates: u64 },
    BadInput(String),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { candidates } => write!(
                f,
                "oracle would enumerate {candidates} candidates (limit {MAX_ENUMERATION})"
            ),
            OracleError::BadInput(msg) => write!(f, "bad oracle input: {msg}"),
        }
    }
}

impl std::error::Error for OracleError {}

/// Best binary schedule for a rate table `rates[r][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteSchedule {
    /// Scheduled user per slot, `None` when the slot is left idle.
    pub users: Vec<Option<usize>>,
    /// Average rate `(1/N) sum_n rates[user(n)][n]`.
    pub value: f64,
}

/// Enumerates every schedule that serves at most one user per slot and
/// returns the best one. Ties keep the first schedule in lexicographic order
/// (lowest user indices first, idle last).
pub fn brute_force_schedule(rates: &[Vec<f64>]) -> Result<BruteSchedule, OracleError> {
    let r_count = rates.len();
    if r_count == 0 {
        return Err(OracleError::BadInput("no users".into()));
    }
    let n_count = rates[0].len();
    if rates.iter().any(|row| row.len() != n_count) {
        return Err(OracleError::BadInput("ragged rate table".into()));
    }
    let choices = (r_count + 1) as u64;
    let candidates = choices.checked_pow(n_count as u32).unwrap_or(u64::MAX);
    if candidates > MAX_ENUMERATION {
        return Err(OracleError::TooLarge { candidates });
    }

    let mut best: Option<BruteSchedule> = None;
    let mut digits = vec![0usize; n_count];
    for _ in 0..candidates {
        let mut total = 0.0;
        for (n, &d) in digits.iter().enumerate() {
            if d < r_count {
                total += rates[d][n];
            }
        }
        let value = if n_count == 0 { 0.0 } else { total / n_count as f64 };
        if best.as_ref().map_or(true, |b| value > b.value) {
            best = Some(BruteSchedule {
                users: digits
                    .iter()
                    .map(|&d| if d < r_count { Some(d) } else { None })
                    .collect(),
                value,
            });
        }
        // odometer increment, slot 0 is the most significant digit
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < r_count + 1 {
                break;
            }
            *d = 0;
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Fixed-geometry power allocation instance.
///
/// Slot `n` earns `weight[n] * log2(1 + gain[n] * p)` and causes
/// `interference[n] * p` watts at the protected receiver.
#[derive(Debug, Clone)]
pub struct PowerGridInstance {
    pub weight: Vec<f64>,
    pub gain: Vec<f64>,
    pub interference: Vec<f64>,
    pub p_max: f64,
    pub p_ave: f64,
    pub gamma: f64,
}

impl PowerGridInstance {
    pub fn value(&self, powers: &[f64]) -> f64 {
        let n = powers.len() as f64;
        powers
            .iter()
            .enumerate()
            .map(|(i, &p)| self.weight[i] * (1.0 + self.gain[i] * p).log2())
            .sum::<f64>()
            / n
    }

    pub fn is_feasible(&self, powers: &[f64]) -> bool {
        let n = powers.len() as f64;
        let mean = powers.iter().sum::<f64>() / n;
        powers.iter().all(|&p| p >= 0.0 && p <= self.p_max + 1e-15)
            && mean <= self.p_ave * (1.0 + 1e-12)
            && powers
                .iter()
                .zip(&self.interference)
                .all(|(&p, &c)| c * p <= self.gamma * (1.0 + 1e-12))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPower {
    pub powers: Vec<f64>,
    pub value: f64,
}

/// Exhaustive grid search over `{0, step, 2 step, ..} <= p_max` per slot.
pub fn grid_search_power(inst: &PowerGridInstance, step: f64) -> Result<GridPower, OracleError> {
    let n = inst.weight.len();
    if inst.gain.len() != n || inst.interference.len() != n {
        return Err(OracleError::BadInput("length mismatch".into()));
    }
    if !(step > 0.0) {
        return Err(OracleError::BadInput("grid step must be positive".into()));
    }
    let levels = (inst.p_max / step + 1e-9).floor() as u64 + 1;
    let candidates = levels.checked_pow(n as u32).unwrap_or(u64::MAX);
    if n > 3 || candidates > 100 * MAX_ENUMERATION {
        return Err(OracleError::TooLarge { candidates });
    }
    let budget = inst.p_ave * n as f64;
    let mut best = GridPower {
        powers: vec![0.0; n],
        value: 0.0,
    };
    let mut idx = vec![0u64; n];
    let mut powers = vec![0.0; n];
    'outer: loop {
        for i in 0..n {
            powers[i] = idx[i] as f64 * step;
        }
        let total: f64 = powers.iter().sum();
        if total <= budget * (1.0 + 1e-12) && inst.is_feasible(&powers) {
            let v = inst.value(&powers);
            if v > best.value {
                best = GridPower {
                    powers: powers.clone(),
                    value: v,
                };
            }
        }
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < levels {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    Ok(best)
}

/// Central-difference gradient with a per-coordinate step `h * max(1, |x_i|)`.
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Central-difference Hessian from function values only.
pub fn finite_difference_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut out = vec![vec![0.0; n]; n];
    let mut p = x.to_vec();
    let steps: Vec<f64> = x.iter().map(|v| h * v.abs().max(1.0)).collect();
    for i in 0..n {
        for j in i..n {
            let mut eval = |di: f64, dj: f64| {
                p[i] += di * steps[i];
                p[j] += dj * steps[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let val = if i == j {
                let f0 = f(x);
                (eval(1.0, 0.0) - 2.0 * f0 + eval(-1.0, 0.0)) / (steps[i] * steps[i])
            } else {
                (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                    / (4.0 * steps[i] * steps[j])
            };
            out[i][j] = val;
            out[j][i] = val;
        }
    }
    out
}

/// Relative deviation between an analytic gradient and central differences,
/// `max_i |g_i - fd_i| / max(1e-12, max_i |fd_i|, max_i |g_i|)`.
pub fn finite_difference_check<F: Fn(&[f64]) -> f64>(
    f: F,
    analytic: &[f64],
    x: &[f64],
    h: f64,
) -> f64 {
    let fd = finite_difference_gradient(f, x, h);
    let scale = fd
        .iter()
        .chain(analytic)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    fd.iter()
        .zip(analytic)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

/// One oracle comparison, suitable for CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub case_id: String,
    pub oracle: Vec<f64>,
    pub artifact: Vec<f64>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn compare(case_id: impl Into<String>, oracle: &[f64], artifact: &[f64], tolerance: f64) -> Self {
        let max_deviation = if oracle.len() != artifact.len() {
            f64::INFINITY
        } else {
            oracle
                .iter()
                .zip(artifact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        OracleReport {
            case_id: case_id.into(),
            oracle: oracle.to_vec(),
            artifact: artifact.to_vec(),
            max_deviation,
            tolerance,
            pass: max_deviation <= tolerance,
        }
    }
}

/// Writes reports as `case_id,oracle,artifact,max_deviation,tolerance,pass`;
/// vector fields are `;`-joined.
pub fn write_reports_csv<W: Write>(mut out: W, reports: &[OracleReport]) -> io::Result<()> {
    writeln!(out, "case_id,oracle,artifact,max_deviation,tolerance,pass")?;
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.12e}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    for r in reports {
        writeln!(
            out,
            "{},{},{},{:.6e},{:.6e},{}",
            r.case_id,
            join(&r.oracle),
            join(&r.artifact),
            r.max_deviation,
            r.tolerance,
            r.pass
        )?;
    }
    Ok(())
}
