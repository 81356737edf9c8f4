//! Performance profiles in the style of Dolan and More.
//!
//! Given a metric value per (solver, problem) pair, each solver's curve
//! rho(tau) reports on what fraction of the problems its metric stayed
//! within a factor tau of the best solver's metric for that problem.

use crate::error::{BenchError, Result};

/// Metric matrix: `values[s][p]` is solver `s`'s cost on problem `p`.
/// Failures are encoded as `f64::INFINITY`.
pub struct ProfileTable {
    pub solvers: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub struct ProfileCurves {
    pub solvers: Vec<String>,
    pub tau: Vec<f64>,
    /// `rho[s][t]` is solver `s`'s fraction at `tau[t]`.
    pub rho: Vec<Vec<f64>>,
}

fn validate(table: &ProfileTable) -> Result<usize> {
    if table.solvers.is_empty() || table.values.is_empty() {
        return Err(BenchError::config("profile table has no solvers"));
    }
    if table.solvers.len() != table.values.len() {
        return Err(BenchError::config("profile table rows do not match solver names"));
    }
    let problems = table.values[0].len();
    if problems == 0 {
        return Err(BenchError::config("profile table has no problems"));
    }
    for (name, row) in table.solvers.iter().zip(&table.values) {
        if row.len() != problems {
            return Err(BenchError::config(format!("ragged profile row for solver {name}")));
        }
        for v in row {
            if v.is_nan() || (*v <= 0.0 && v.is_finite()) || *v == f64::NEG_INFINITY {
                return Err(BenchError::config(format!(
                    "profile metric for solver {name} must be positive or +inf, got {v}"
                )));
            }
        }
    }
    Ok(problems)
}

/// Ratio of each entry to its problem's best finite value. Failures stay
/// infinite; problems where every solver failed give everyone an infinite
/// ratio, so they never count as solved.
fn ratios(table: &ProfileTable, problems: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![f64::INFINITY; problems]; table.values.len()];
    for p in 0..problems {
        let best = table
            .values
            .iter()
            .map(|row| row[p])
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            continue;
        }
        for (s, row) in table.values.iter().enumerate() {
            if row[p].is_finite() {
                out[s][p] = row[p] / best;
            }
        }
    }
    out
}

/// Evaluates every solver's curve on the given tau grid.
pub fn performance_profile(table: &ProfileTable, tau_grid: &[f64]) -> Result<ProfileCurves> {
    let problems = validate(table)?;
    if tau_grid.is_empty() {
        return Err(BenchError::config("profile needs a nonempty tau grid"));
    }
    if tau_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::config("tau grid must be strictly increasing"));
    }
    let ratios = ratios(table, problems);
    let rho = ratios
        .iter()
        .map(|row| {
            tau_grid
                .iter()
                .map(|tau| row.iter().filter(|r| **r <= *tau).count() as f64 / problems as f64)
                .collect()
        })
        .collect();
    Ok(ProfileCurves { solvers: table.solvers.clone(), tau: tau_grid.to_vec(), rho })
}

/// Grid built from the ratios the table actually produces: every distinct
/// finite ratio becomes a breakpoint, padded with a final point past the
/// largest so curves visibly flatten.
pub fn default_tau_grid(table: &ProfileTable) -> Result<Vec<f64>> {
    let problems = validate(table)?;
    let mut grid: Vec<f64> = ratios(table, problems)
        .iter()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .collect();
    grid.push(1.0);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let last = *grid.last().expect("grid holds at least 1.0");
    grid.push(last * 1.25);
    Ok(grid)
}
