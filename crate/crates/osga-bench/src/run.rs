//! Experiment driver: runs every configured solver on every generated
//! instance, then writes per-run trace files, a summary table, and a
//! performance profile into the output directory.
//!
//! With the default virtual timing mode every `seconds` column is derived
//! from the oracle operation counters (1e-6 seconds per operator
//! application), so repeated runs of the same config produce byte-identical
//! files. Wall timing swaps in the real clock and gives up that guarantee.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use osga::baselines::{fista_solve, nes83_solve, nsdsg_solve, pga_solve};
use osga::{
    osga_solve, Element, NullSink, OpCounts, OsgaParams, QuadraticProx, SolveReport, Termination,
    TraceSample, TraceSink,
};

use crate::config::{ExperimentConfig, SolverKind, TimingMode};
use crate::error::{BenchError, Result};
use crate::generate::{gen_instance, Instance};
use crate::metrics::{metric_isnr, metric_mse, metric_psnr};
use crate::pgm::write_pgm;
use crate::profile::{default_tau_grid, performance_profile, ProfileCurves, ProfileTable};

pub const TRACE_HEADER: &str = "iteration,seconds,objective,rel1,rel2,isnr,psnr,mse,fwd_ops,adj_ops";
pub const SUMMARY_HEADER: &str = "family,instance,solver,status,iterations,seconds,\
final_objective,best_objective,fwd_ops,adj_ops,isnr,psnr,mse,\
ref_solver,ref_iterations,ref_objective";

const VIRTUAL_SECONDS_PER_OP: f64 = 1e-6;

pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub profile_path: PathBuf,
    pub image_paths: Vec<PathBuf>,
    /// True when any solver run ended in an error (recorded in the summary).
    pub any_failure: bool,
}

/// Core trace row plus the iterate itself, kept for the relative-error and
/// image-quality columns.
struct PointRow {
    iteration: usize,
    elapsed_seconds: f64,
    objective: f64,
    best_objective: f64,
    counts: OpCounts,
    point: Element,
}

#[derive(Default)]
struct PointSink {
    rows: Vec<PointRow>,
}

impl TraceSink for PointSink {
    fn record(&mut self, sample: &TraceSample<'_>) {
        self.rows.push(PointRow {
            iteration: sample.iteration,
            elapsed_seconds: sample.elapsed_seconds,
            objective: sample.objective,
            best_objective: sample.best_objective,
            counts: sample.counts,
            point: sample.point.clone(),
        });
    }
}

struct Reference {
    solver: SolverKind,
    iterations: usize,
    psi: f64,
    x: Element,
}

fn termination_for(config: &ExperimentConfig, extension: usize) -> Termination {
    Termination {
        max_iterations: config.max_iters.map(|n| n.saturating_mul(extension)),
        max_seconds: config.max_seconds.map(|s| s * extension as f64),
        eta_tolerance: None,
        psi_target: None,
    }
}

fn dispatch(
    kind: SolverKind,
    instance: &Instance,
    config: &ExperimentConfig,
    termination: &Termination,
    sink: &mut dyn TraceSink,
) -> osga::Result<SolveReport> {
    match kind {
        SolverKind::Osga => {
            let prox = QuadraticProx::default_prox(&instance.x0);
            let params = OsgaParams::default();
            osga_solve(&instance.problem, &prox, &params, &instance.x0, termination, sink)
        }
        SolverKind::Nsdsg => {
            nsdsg_solve(&instance.problem, &instance.x0, instance.alpha0, termination, sink)
        }
        SolverKind::Pga => pga_solve(
            &instance.smooth,
            &instance.prox_reg,
            instance.lipschitz,
            &instance.x0,
            termination,
            sink,
        ),
        SolverKind::Fista => fista_solve(
            &instance.smooth,
            &instance.prox_reg,
            instance.lipschitz,
            &instance.x0,
            termination,
            sink,
        ),
        SolverKind::Nes83 => {
            nes83_solve(&instance.problem, &instance.x0, &instance.nes_z, config.rho, termination, sink)
        }
    }
}

/// 17 significant digits, so a reader recovers the exact f64.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn seconds_for(timing: TimingMode, wall: f64, counts: OpCounts) -> f64 {
    match timing {
        TimingMode::Virtual => counts.total() as f64 * VIRTUAL_SECONDS_PER_OP,
        TimingMode::Wall => wall,
    }
}

fn render_trace(
    rows: &[PointRow],
    f0: f64,
    reference: Option<&Reference>,
    instance: &Instance,
    config: &ExperimentConfig,
) -> String {
    let mut out = String::with_capacity(rows.len() * 200 + 128);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in rows {
        let seconds = seconds_for(config.timing, row.elapsed_seconds, row.counts);
        let rel1 = reference.map_or(f64::NAN, |r| {
            let err = (&row.point - &r.x).norm();
            let scale = r.x.norm();
            if scale > 0.0 { err / scale } else { err }
        });
        let rel2 = reference.map_or(f64::NAN, |r| {
            let denom = f0 - r.psi;
            if denom > 0.0 { ((row.best_objective - r.psi) / denom).max(0.0) } else { 0.0 }
        });
        let isnr = match (&instance.truth, &instance.degraded) {
            (Some(truth), Some(degraded)) => metric_isnr(&row.point, degraded, truth),
            _ => f64::NAN,
        };
        let psnr = match (&instance.truth, &instance.degraded) {
            (Some(truth), Some(_)) => metric_psnr(&row.point, truth, config.psnr_scale),
            _ => f64::NAN,
        };
        let mse = instance.truth.as_ref().map_or(f64::NAN, |t| metric_mse(&row.point, t));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.iteration,
            fmt(seconds),
            fmt(row.best_objective),
            fmt(rel1),
            fmt(rel2),
            fmt(isnr),
            fmt(psnr),
            fmt(mse),
            row.counts.forward,
            row.counts.adjoint,
        )
        .expect("string write");
    }
    out
}

/// Error text embedded in a CSV field: strip the delimiter and line breaks.
fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], ";")
}

fn write_file(path: &Path, content: &[u8]) -> Result<()> {
    fs::write(path, content).map_err(|e| BenchError::io(path.display().to_string(), e))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let out_dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out_dir).map_err(|e| BenchError::io(out_dir.display().to_string(), e))?;
    let termination = termination_for(config, 1);
    termination.validate().map_err(BenchError::Solver)?;

    let family = config.family.name();
    let mut trace_paths = Vec::new();
    let mut image_paths = Vec::new();
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let mut metrics = vec![vec![f64::INFINITY; config.instances]; config.solvers.len()];
    let mut any_failure = false;

    for index in 0..config.instances {
        let instance = gen_instance(config, index)?;
        let (f0_value, _) = instance.problem.nfo_f(&instance.x0).map_err(BenchError::Solver)?;
        let f0 = f0_value.or_inf();

        let mut runs: Vec<(SolverKind, osga::Result<SolveReport>, Vec<PointRow>)> = Vec::new();
        for kind in &config.solvers {
            let mut sink = PointSink::default();
            let outcome = dispatch(*kind, &instance, config, &termination, &mut sink);
            runs.push((*kind, outcome, sink.rows));
        }

        let best_final = runs
            .iter()
            .filter_map(|(kind, outcome, _)| outcome.as_ref().ok().map(|r| (*kind, r)))
            .min_by(|a, b| a.1.psi_best.partial_cmp(&b.1.psi_best).expect("finite objectives"));
        let reference = best_final.map(|(kind, short)| {
            let extended = termination_for(config, config.ref_extension);
            let long = dispatch(kind, &instance, config, &extended, &mut NullSink);
            // The envelope is monotone, so the extended run can only improve
            // on the short one; fall back to the short run if it errors out.
            let (iterations, psi, x) = match long {
                Ok(r) if r.psi_best <= short.psi_best => (r.iterations, r.psi_best, r.x_best),
                _ => (short.iterations, short.psi_best, short.x_best.clone()),
            };
            Reference { solver: kind, iterations, psi, x }
        });

        for (slot, (kind, outcome, rows)) in runs.iter().enumerate() {
            let trace = render_trace(rows, f0, reference.as_ref(), &instance, config);
            let trace_path =
                out_dir.join(format!("trace_{family}_i{index}_{}.csv", kind.name()));
            write_file(&trace_path, trace.as_bytes())?;
            trace_paths.push(trace_path);

            let (ref_solver, ref_iterations, ref_psi) = reference.as_ref().map_or(
                ("none", 0, f64::NAN),
                |r| (r.solver.name(), r.iterations, r.psi),
            );
            match outcome {
                Ok(report) => {
                    metrics[slot][index] = report.psi_best;
                    let final_objective = rows.last().map_or(f64::NAN, |r| r.objective);
                    let (isnr, psnr) = match (&instance.truth, &instance.degraded) {
                        (Some(truth), Some(degraded)) => (
                            metric_isnr(&report.x_best, degraded, truth),
                            metric_psnr(&report.x_best, truth, config.psnr_scale),
                        ),
                        _ => (f64::NAN, f64::NAN),
                    };
                    let mse = instance
                        .truth
                        .as_ref()
                        .map_or(f64::NAN, |t| metric_mse(&report.x_best, t));
                    writeln!(
                        summary,
                        "{family},{index},{},ok,{},{},{},{},{},{},{},{},{},{ref_solver},{ref_iterations},{}",
                        kind.name(),
                        report.iterations,
                        fmt(seconds_for(config.timing, report.elapsed_seconds, report.counts)),
                        fmt(final_objective),
                        fmt(report.psi_best),
                        report.counts.forward,
                        report.counts.adjoint,
                        fmt(isnr),
                        fmt(psnr),
                        fmt(mse),
                        fmt(ref_psi),
                    )
                    .expect("string write");

                    if config.save_images && instance.degraded.is_some() {
                        let path =
                            out_dir.join(format!("image_{family}_i{index}_{}.pgm", kind.name()));
                        write_pgm(&path, &report.x_best, true)?;
                        image_paths.push(path);
                    }
                }
                Err(error) => {
                    any_failure = true;
                    let last = rows.last();
                    let iterations = last.map_or(0, |r| r.iteration);
                    let counts = last.map_or(OpCounts::ZERO, |r| r.counts);
                    let wall = last.map_or(0.0, |r| r.elapsed_seconds);
                    let best = last.map_or(f64::NAN, |r| r.best_objective);
                    writeln!(
                        summary,
                        "{family},{index},{},error: {},{iterations},{},{},{},{},{},{},{},{},{ref_solver},{ref_iterations},{}",
                        kind.name(),
                        sanitize(&error.to_string()),
                        fmt(seconds_for(config.timing, wall, counts)),
                        fmt(f64::NAN),
                        fmt(best),
                        counts.forward,
                        counts.adjoint,
                        fmt(f64::NAN),
                        fmt(f64::NAN),
                        fmt(f64::NAN),
                        fmt(ref_psi),
                    )
                    .expect("string write");
                }
            }
        }

        if config.save_images {
            if let (Some(truth), Some(degraded)) = (&instance.truth, &instance.degraded) {
                let truth_path = out_dir.join(format!("image_{family}_i{index}_truth.pgm"));
                write_pgm(&truth_path, truth, true)?;
                image_paths.push(truth_path);
                let degraded_path =
                    out_dir.join(format!("image_{family}_i{index}_degraded.pgm"));
                write_pgm(&degraded_path, degraded, true)?;
                image_paths.push(degraded_path);
            }
        }
    }

    let summary_path = out_dir.join("summary.csv");
    write_file(&summary_path, summary.as_bytes())?;

    let table = ProfileTable {
        solvers: config.solvers.iter().map(|k| k.name().to_string()).collect(),
        values: metrics,
    };
    let grid = default_tau_grid(&table)?;
    let curves = performance_profile(&table, &grid)?;
    let profile_path = out_dir.join("profile.csv");
    write_file(&profile_path, render_profile(&curves).as_bytes())?;

    Ok(RunArtifacts {
        out_dir,
        trace_paths,
        summary_path,
        profile_path,
        image_paths,
        any_failure,
    })
}

pub fn render_profile(curves: &ProfileCurves) -> String {
    let mut out = String::from("tau");
    for name in &curves.solvers {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (t, tau) in curves.tau.iter().enumerate() {
        out.push_str(&fmt(*tau));
        for row in &curves.rho {
            out.push(',');
            out.push_str(&fmt(row[t]));
        }
        out.push('\n');
    }
    out
}

/// Rebuilds a profile table from a summary file: one problem per
/// (family, instance) pair, best objective as the metric, error rows as
/// failures.
pub fn profile_from_summary(path: &Path) -> Result<ProfileTable> {
    let text =
        fs::read_to_string(path).map_err(|e| BenchError::io(path.display().to_string(), e))?;
    let bad = |msg: String| BenchError::config(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty summary".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| bad(format!("missing column {name}")))
    };
    let (c_family, c_instance, c_solver, c_status, c_best) = (
        col("family")?,
        col("instance")?,
        col("solver")?,
        col("status")?,
        col("best_objective")?,
    );

    let mut solvers: Vec<String> = Vec::new();
    let mut problems: Vec<String> = Vec::new();
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for (number, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(bad(format!("row {} has {} fields", number + 2, fields.len())));
        }
        let solver = fields[c_solver].to_string();
        let problem = format!("{}_i{}", fields[c_family], fields[c_instance]);
        let s = solvers.iter().position(|v| *v == solver).unwrap_or_else(|| {
            solvers.push(solver);
            solvers.len() - 1
        });
        let p = problems.iter().position(|v| *v == problem).unwrap_or_else(|| {
            problems.push(problem);
            problems.len() - 1
        });
        let value = if fields[c_status] == "ok" {
            fields[c_best]
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: bad best_objective", number + 2)))?
        } else {
            f64::INFINITY
        };
        cells.push((s, p, value));
    }
    if cells.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let mut values = vec![vec![f64::INFINITY; problems.len()]; solvers.len()];
    for (s, p, v) in cells {
        values[s][p] = v;
    }
    Ok(ProfileTable { solvers, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small_config(dir: &Path) -> ExperimentConfig {
        let text = format!(
            "family = lasso\nm = 15\nn = 30\nlambda = 0.5\nsolvers = osga,pga,fista\n\
             max_iters = 40\nseed = 12\nout_dir = {}\n",
            dir.display()
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn experiment_writes_the_full_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config(dir.path());
        let artifacts = run_experiment(&config).unwrap();
        assert!(!artifacts.any_failure);
        assert_eq!(artifacts.trace_paths.len(), 3);

        let summary = fs::read_to_string(&artifacts.summary_path).unwrap();
        let lines: Vec<&str> = summary.lines().collect();
        assert_eq!(lines[0], SUMMARY_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("lasso,0,osga,ok,40,"));

        let trace = fs::read_to_string(&artifacts.trace_paths[0]).unwrap();
        let rows: Vec<&str> = trace.lines().collect();
        assert_eq!(rows[0], TRACE_HEADER);
        assert_eq!(rows.len(), 42, "iterations 0..=40 plus header");

        let profile = fs::read_to_string(&artifacts.profile_path).unwrap();
        assert!(profile.starts_with("tau,osga,pga,fista\n"));
    }

    #[test]
    fn traces_have_monotone_envelope_and_unit_interval_rel2() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config(dir.path());
        let artifacts = run_experiment(&config).unwrap();
        for path in &artifacts.trace_paths {
            let text = fs::read_to_string(path).unwrap();
            let mut previous_objective = f64::INFINITY;
            let mut first_rel2 = None;
            for line in text.lines().skip(1) {
                let fields: Vec<f64> =
                    line.split(',').map(|f| f.parse().unwrap()).collect();
                assert_eq!(fields.len(), 10);
                let (objective, rel2) = (fields[2], fields[4]);
                assert!(objective <= previous_objective);
                previous_objective = objective;
                assert!((0.0..=1.0).contains(&rel2), "rel2 {rel2} in {}", path.display());
                first_rel2.get_or_insert(rel2);
            }
            assert_eq!(first_rel2, Some(1.0), "start of {}", path.display());
        }
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = run_experiment(&small_config(dir_a.path())).unwrap();
        let b = run_experiment(&small_config(dir_b.path())).unwrap();
        assert_eq!(
            fs::read(&a.summary_path).unwrap(),
            fs::read(&b.summary_path).unwrap()
        );
        assert_eq!(
            fs::read(&a.profile_path).unwrap(),
            fs::read(&b.profile_path).unwrap()
        );
        for (pa, pb) in a.trace_paths.iter().zip(&b.trace_paths) {
            assert_eq!(pa.file_name(), pb.file_name());
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
        }
    }

    #[test]
    fn summary_best_objective_matches_trace_minimum() {
        let dir = tempfile::tempdir().unwrap();
        let artifacts = run_experiment(&small_config(dir.path())).unwrap();
        let summary = fs::read_to_string(&artifacts.summary_path).unwrap();
        for (row, path) in summary.lines().skip(1).zip(&artifacts.trace_paths) {
            let best: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
            let trace = fs::read_to_string(path).unwrap();
            let minimum = trace
                .lines()
                .skip(1)
                .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(best, minimum);
        }
    }

    #[test]
    fn imaging_run_emits_metrics_and_images() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "family = tv_denoise\nrows = 16\ncols = 16\nlambda = 0.05\nnoise = snr:15\n\
             solvers = osga,fista\nmax_iters = 15\nseed = 4\nsave_images = true\nout_dir = {}\n",
            dir.path().display()
        );
        let config = parse_config(&text).unwrap();
        let artifacts = run_experiment(&config).unwrap();
        assert_eq!(artifacts.image_paths.len(), 4, "two solvers, truth, degraded");
        for path in &artifacts.image_paths {
            assert!(path.exists());
        }
        let summary = fs::read_to_string(&artifacts.summary_path).unwrap();
        for row in summary.lines().skip(1) {
            let fields: Vec<&str> = row.split(',').collect();
            let psnr: f64 = fields[11].parse().unwrap();
            let mse: f64 = fields[12].parse().unwrap();
            assert!(psnr > 0.0 && psnr.is_finite());
            assert!(mse > 0.0 && mse.is_finite());
        }
    }

    #[test]
    fn failed_solver_is_recorded_without_aborting_others() {
        let dir = tempfile::tempdir().unwrap();
        // A tiny lasso with an extreme lip_scale forces NES83's backtracking
        // to stall; the other solver still completes.
        let text = format!(
            "family = lasso\nm = 4\nn = 8\nlambda = 1e30\nsolvers = nes83,pga\n\
             max_iters = 10\nseed = 2\nout_dir = {}\n",
            dir.path().display()
        );
        let config = parse_config(&text).unwrap();
        let artifacts = run_experiment(&config).unwrap();
        assert!(artifacts.any_failure);
        let summary = fs::read_to_string(&artifacts.summary_path).unwrap();
        let lines: Vec<&str> = summary.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("error: "), "{}", lines[1]);
        assert!(lines[2].contains(",ok,"), "{}", lines[2]);
        // The failure shows up as +inf in the profile table.
        let table = profile_from_summary(&artifacts.summary_path).unwrap();
        assert_eq!(table.values[0][0], f64::INFINITY);
        assert!(table.values[1][0].is_finite());
    }

    #[test]
    fn summary_round_trips_into_a_profile_table() {
        let dir = tempfile::tempdir().unwrap();
        let artifacts = run_experiment(&small_config(dir.path())).unwrap();
        let table = profile_from_summary(&artifacts.summary_path).unwrap();
        assert_eq!(table.solvers, vec!["osga", "pga", "fista"]);
        assert_eq!(table.values.len(), 3);
        assert!(table.values.iter().all(|row| row[0].is_finite()));

        let rendered = render_profile(&performance_profile(
            &table,
            &default_tau_grid(&table).unwrap(),
        )
        .unwrap());
        assert_eq!(rendered, fs::read_to_string(&artifacts.profile_path).unwrap());
    }
}
