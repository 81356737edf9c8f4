//! Per-iteration trace plumbing and stopping rules shared by all solvers.

use crate::element::Element;
use crate::error::{Error, Result};
use crate::problems::OpCounts;

/// One iteration's worth of solver progress, lent to the sink.
///
/// `point` is the iterate of record for this row (the best point for solvers
/// that maintain one, the current iterate otherwise); `best_point` always
/// carries the incumbent. `counts` are cumulative since the solve started.
#[derive(Debug)]
pub struct TraceSample<'a> {
    pub iteration: usize,
    pub elapsed_seconds: f64,
    pub objective: f64,
    pub best_objective: f64,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub counts: OpCounts,
    pub point: &'a Element,
    pub best_point: &'a Element,
}

pub trait TraceSink {
    fn record(&mut self, sample: &TraceSample<'_>);
}

/// Discards every sample.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _sample: &TraceSample<'_>) {}
}

/// Owned copy of a sample, without the iterate payloads.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iteration: usize,
    pub elapsed_seconds: f64,
    pub objective: f64,
    pub best_objective: f64,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub counts: OpCounts,
}

/// Collects rows in memory, mostly for tests and summaries.
#[derive(Default)]
pub struct MemorySink {
    pub rows: Vec<TraceRow>,
}

impl TraceSink for MemorySink {
    fn record(&mut self, sample: &TraceSample<'_>) {
        self.rows.push(TraceRow {
            iteration: sample.iteration,
            elapsed_seconds: sample.elapsed_seconds,
            objective: sample.objective,
            best_objective: sample.best_objective,
            eta: sample.eta,
            alpha: sample.alpha,
            counts: sample.counts,
        });
    }
}

/// Why a solve loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    MaxSeconds,
    /// The error certificate fell below the requested tolerance.
    EtaTolerance,
    /// The error certificate reached zero: the incumbent is optimal within
    /// the maintained relaxation.
    EtaZero,
    PsiTarget,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            StopReason::MaxIterations => "max_iterations",
            StopReason::MaxSeconds => "max_seconds",
            StopReason::EtaTolerance => "eta_tolerance",
            StopReason::EtaZero => "eta_zero",
            StopReason::PsiTarget => "psi_target",
        };
        f.write_str(name)
    }
}

/// Stopping criteria; any subset may be active but at least one must be.
#[derive(Clone, Copy, Debug, Default)]
pub struct Termination {
    pub max_iterations: Option<usize>,
    pub max_seconds: Option<f64>,
    pub eta_tolerance: Option<f64>,
    pub psi_target: Option<f64>,
}

impl Termination {
    pub fn max_iterations(n: usize) -> Termination {
        Termination { max_iterations: Some(n), ..Termination::default() }
    }

    pub fn with_max_seconds(mut self, seconds: f64) -> Termination {
        self.max_seconds = Some(seconds);
        self
    }

    pub fn with_eta_tolerance(mut self, tolerance: f64) -> Termination {
        self.eta_tolerance = Some(tolerance);
        self
    }

    pub fn with_psi_target(mut self, target: f64) -> Termination {
        self.psi_target = Some(target);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations.is_none()
            && self.max_seconds.is_none()
            && self.eta_tolerance.is_none()
            && self.psi_target.is_none()
        {
            return Err(Error::NoTermination);
        }
        Ok(())
    }

    /// First criterion satisfied by the current progress, if any. `eta` is
    /// `None` for solvers that do not maintain a certificate, which leaves
    /// `eta_tolerance` inert.
    pub fn check(
        &self,
        iteration: usize,
        elapsed_seconds: f64,
        eta: Option<f64>,
        best_objective: f64,
    ) -> Option<StopReason> {
        if let Some(target) = self.psi_target {
            if best_objective <= target {
                return Some(StopReason::PsiTarget);
            }
        }
        if let (Some(tolerance), Some(eta)) = (self.eta_tolerance, eta) {
            if eta <= tolerance {
                return Some(StopReason::EtaTolerance);
            }
        }
        if let Some(cap) = self.max_iterations {
            if iteration >= cap {
                return Some(StopReason::MaxIterations);
            }
        }
        if let Some(cap) = self.max_seconds {
            if elapsed_seconds >= cap {
                return Some(StopReason::MaxSeconds);
            }
        }
        None
    }
}

/// Final outcome of a solve: the incumbent, its value, and the bookkeeping.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x_best: Element,
    pub psi_best: f64,
    pub iterations: usize,
    pub elapsed_seconds: f64,
    pub counts: OpCounts,
    pub stop: StopReason,
}
