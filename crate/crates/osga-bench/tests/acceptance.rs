//! Acceptance suite: one test per shipping criterion, each printing a
//! single PASS/FAIL line (run with `--nocapture` to see them).

use std::path::PathBuf;

use osga::baselines::{fista_solve, nes83_solve, nsdsg_solve, pga_solve};
use osga::{
    osga_solve, CompositeProblem, Element, LinearMap, MemorySink, NullSink, OpCounts, OsgaParams,
    QuadraticProx, Regularizer, Shape, SmoothTerm, SolveReport, Termination, TraceSample,
    TraceSink,
};
use osga_bench::config::{load_config, ExperimentConfig, SolverKind};
use osga_bench::generate::{gen_instance, Instance};
use osga_bench::metrics::{metric_mse, metric_psnr};
use osga_bench::run_experiment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;

fn criterion(id: usize, name: &str, body: impl FnOnce() -> Outcome) {
    match body() {
        Ok(()) => println!("acceptance {id} ({name}): PASS"),
        Err(why) => {
            println!("acceptance {id} ({name}): FAIL ({why})");
            panic!("acceptance {id} ({name}) failed: {why}");
        }
    }
}

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

fn load_preset(name: &str) -> Result<ExperimentConfig, String> {
    load_config(&preset(name)).map_err(|e| format!("{name}: {e}"))
}

/// Trace sink that keeps each iterate, for per-iteration reconstruction
/// metrics.
#[derive(Default)]
struct PointTrace {
    points: Vec<Element>,
    best: Vec<f64>,
}

impl TraceSink for PointTrace {
    fn record(&mut self, sample: &TraceSample<'_>) {
        self.points.push(sample.point.clone());
        self.best.push(sample.best_objective);
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

/// Maximizes -(gamma + <h,z>)/Q(z) without the closed form: best of many
/// samples in a ball, then adaptive gradient ascent.
fn brute_force_subproblem(
    prox: &QuadraticProx,
    gamma: f64,
    h: &Element,
    z0: &Element,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Element), String> {
    let n = z0.len();
    let objective = |z: &Element| -> Result<f64, String> {
        let q = prox.value(z).map_err(|e| e.to_string())?;
        Ok(-(gamma + h.dot(z)) / q)
    };
    let radius = 10.0 * z0.norm() + 10.0;
    let mut best = z0.clone();
    let mut best_value = objective(&best)?;
    for _ in 0..4000 {
        let direction = Element::from_vec(random_vec(rng, n, -1.0, 1.0));
        let scale = radius * rng.random::<f64>().powf(1.0 / n as f64) / direction.norm().max(1e-12);
        let z = direction.scaled(scale);
        let value = objective(&z)?;
        if value > best_value {
            best_value = value;
            best = z;
        }
    }
    let mut step = 1.0;
    for _ in 0..20_000 {
        let q = prox.value(&best).map_err(|e| e.to_string())?;
        let grad_q = prox.gradient(&best).map_err(|e| e.to_string())?;
        // d/dz of -(gamma + <h,z>)/Q = (-h - value * grad Q) / Q.
        let mut ascent = h.scaled(-1.0);
        ascent.add_scaled(-best_value, &grad_q);
        let ascent = ascent.scaled(1.0 / q);
        let candidate = {
            let mut c = best.clone();
            c.add_scaled(step, &ascent);
            c
        };
        let value = objective(&candidate)?;
        if value > best_value {
            best_value = value;
            best = candidate;
            step *= 1.5;
        } else {
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
    }
    Ok((best_value, best))
}

#[test]
fn criterion_1_subproblem_matches_brute_force() {
    criterion(1, "subproblem closed form vs brute force", || {
        let start = std::time::Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let n = 5;
        for trial in 0..200 {
            let q0 = uniform(&mut rng, 0.1, 5.0);
            let sigma = uniform(&mut rng, 0.2, 3.0);
            let z0 = Element::from_vec(random_vec(&mut rng, n, -1.0, 1.0));
            let weights = random_vec(&mut rng, n, 0.3, 3.0);
            let gamma = uniform(&mut rng, -2.0, 2.0);
            let h = Element::from_vec(random_vec(&mut rng, n, -1.0, 1.0));
            let prox = QuadraticProx::with_weights(q0, sigma, z0.clone(), weights)
                .map_err(|e| e.to_string())?;
            let solution = prox.solve_subproblem(gamma, &h).map_err(|e| e.to_string())?;
            let (e_bf, u_bf) = brute_force_subproblem(&prox, gamma, &h, &z0, &mut rng)?;
            let e_err = (solution.e - e_bf).abs() / solution.e.abs().max(1e-30);
            if e_err > 1e-5 {
                return Err(format!(
                    "trial {trial}: e {} vs brute force {e_bf} (relative {e_err:.2e})",
                    solution.e
                ));
            }
            let u_err = (&solution.u - &u_bf).norm() / solution.u.norm().max(1.0);
            if u_err > 1e-4 {
                return Err(format!("trial {trial}: maximizer off by {u_err:.2e}"));
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed > 60.0 {
            return Err(format!("took {elapsed:.1} s, budget is 60 s"));
        }
        Ok(())
    });
}

/// Quadratic with a known optimum: 0.5*||Wx - c||^2 with diagonal positive
/// W, minimized exactly at x* = c/w with value 0.
fn scaled_quadratic(n: usize, seed: u64) -> (CompositeProblem, Element, Element) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape::vector(n);
    let weights = random_vec(&mut rng, n, 0.5, 2.0);
    let c = Element::from_vec(random_vec(&mut rng, n, -1.0, 1.0));
    let x_star =
        Element::from_vec(c.data().iter().zip(&weights).map(|(ci, wi)| ci / wi).collect());
    let scale = LinearMap::diagonal(shape, weights).expect("positive weights");
    let problem = CompositeProblem::new(
        shape,
        vec![(SmoothTerm::quadratic_loss(c), scale)],
        vec![],
    )
    .expect("valid problem");
    let x0 = Element::from_vec(random_vec(&mut rng, n, -1.0, 1.0));
    (problem, x_star, x0)
}

#[test]
fn criterion_2_certified_gap_brackets_the_optimum() {
    criterion(2, "certified gap", || {
        for instance in 0..20 {
            let (problem, x_star, x0) = scaled_quadratic(50, 200 + instance);
            let prox = QuadraticProx::default_prox(&x0);
            let q_star = prox.value(&x_star).map_err(|e| e.to_string())?;
            let mut sink = MemorySink::default();
            osga_solve(
                &problem,
                &prox,
                &OsgaParams::default(),
                &x0,
                &Termination::max_iterations(300),
                &mut sink,
            )
            .map_err(|e| e.to_string())?;
            for row in &sink.rows {
                let gap = row.best_objective;
                let eta = row.eta.ok_or("missing certificate")?;
                let bound = eta * q_star + 1e-8;
                if gap < 0.0 || gap > bound {
                    return Err(format!(
                        "instance {instance}, iteration {}: gap {gap:.6e} outside [0, {bound:.6e}]",
                        row.iteration
                    ));
                }
            }
        }
        Ok(())
    });
}

const FAMILY_PRESETS: [&str; 9] = [
    "tikhonov_dense.conf",
    "tikhonov_sparse.conf",
    "lasso_dense.conf",
    "lasso_sparse.conf",
    "elastic_net.conf",
    "spike.conf",
    "tv_denoise.conf",
    "tv_inpaint.conf",
    "tv_deblur.conf",
];

#[test]
fn criterion_3_monotone_envelope_on_every_preset() {
    criterion(3, "monotone envelope and certificate", || {
        for name in FAMILY_PRESETS {
            let config = load_preset(name)?;
            let instance = gen_instance(&config, 0).map_err(|e| format!("{name}: {e}"))?;
            let prox = QuadraticProx::default_prox(&instance.x0);
            let mut sink = MemorySink::default();
            osga_solve(
                &instance.problem,
                &prox,
                &OsgaParams::default(),
                &instance.x0,
                &Termination::max_iterations(1000),
                &mut sink,
            )
            .map_err(|e| format!("{name}: {e}"))?;
            let mut best = f64::INFINITY;
            let mut eta = f64::INFINITY;
            for row in &sink.rows {
                if row.best_objective > best {
                    return Err(format!(
                        "{name}: objective rose at iteration {}",
                        row.iteration
                    ));
                }
                best = row.best_objective;
                let row_eta = row.eta.ok_or("missing certificate")?;
                if row_eta > eta {
                    return Err(format!(
                        "{name}: certificate rose at iteration {}",
                        row.iteration
                    ));
                }
                eta = row_eta;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_4_smooth_rate_scaling() {
    criterion(4, "smooth complexity scaling", || {
        let (problem, _, x0) = scaled_quadratic(50, 400);
        let prox = QuadraticProx::default_prox(&x0);
        let mut sink = MemorySink::default();
        osga_solve(
            &problem,
            &prox,
            &OsgaParams::default(),
            &x0,
            &Termination::max_iterations(20_000),
            &mut sink,
        )
        .map_err(|e| e.to_string())?;
        let first_below = |threshold: f64| {
            sink.rows
                .iter()
                .find(|row| row.best_objective <= threshold)
                .map(|row| row.iteration)
        };
        let coarse = first_below(1e-2).ok_or("never reached gap 1e-2")?;
        let fine = first_below(1e-4).ok_or("never reached gap 1e-4")?;
        let ratio = fine as f64 / coarse.max(1) as f64;
        if !(3.0..=30.0).contains(&ratio) {
            return Err(format!(
                "iterations {fine} vs {coarse} give ratio {ratio:.2}, outside [3, 30]"
            ));
        }
        Ok(())
    });
}

fn run_solver(
    kind: SolverKind,
    instance: &Instance,
    rho: f64,
    iterations: usize,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport, String> {
    let termination = Termination::max_iterations(iterations);
    let report = match kind {
        SolverKind::Osga => {
            let prox = QuadraticProx::default_prox(&instance.x0);
            osga_solve(&instance.problem, &prox, &OsgaParams::default(), &instance.x0, &termination, sink)
        }
        SolverKind::Nsdsg => {
            nsdsg_solve(&instance.problem, &instance.x0, instance.alpha0, &termination, sink)
        }
        SolverKind::Pga => pga_solve(
            &instance.smooth,
            &instance.prox_reg,
            instance.lipschitz,
            &instance.x0,
            &termination,
            sink,
        ),
        SolverKind::Fista => fista_solve(
            &instance.smooth,
            &instance.prox_reg,
            instance.lipschitz,
            &instance.x0,
            &termination,
            sink,
        ),
        SolverKind::Nes83 => {
            nes83_solve(&instance.problem, &instance.x0, &instance.nes_z, rho, &termination, sink)
        }
    };
    report.map_err(|e| format!("{} failed: {e}", kind.name()))
}

#[test]
fn criterion_5_solver_ordering_on_desk_systems() {
    criterion(5, "solver ordering", || {
        let start = std::time::Instant::now();
        for name in
            ["tikhonov_dense.conf", "tikhonov_sparse.conf", "lasso_dense.conf", "lasso_sparse.conf"]
        {
            let config = load_preset(name)?;
            let instance = gen_instance(&config, 0).map_err(|e| format!("{name}: {e}"))?;
            let mut finals = Vec::new();
            for kind in [
                SolverKind::Osga,
                SolverKind::Nsdsg,
                SolverKind::Pga,
                SolverKind::Fista,
                SolverKind::Nes83,
            ] {
                let report = run_solver(kind, &instance, config.rho, 500, &mut NullSink)
                    .map_err(|e| format!("{name}: {e}"))?;
                finals.push((kind, report.psi_best));
            }
            let value = |kind: SolverKind| {
                finals.iter().find(|(k, _)| *k == kind).expect("solver ran").1
            };
            let osga = value(SolverKind::Osga);
            if osga > value(SolverKind::Nsdsg) {
                return Err(format!("{name}: osga {osga} above nsdsg {}", value(SolverKind::Nsdsg)));
            }
            if osga > value(SolverKind::Pga) {
                return Err(format!("{name}: osga {osga} above pga {}", value(SolverKind::Pga)));
            }
            let accelerated = value(SolverKind::Fista).min(value(SolverKind::Nes83));
            if osga > 1.05 * accelerated {
                return Err(format!(
                    "{name}: osga {osga} more than 5% above the accelerated best {accelerated}"
                ));
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed > 300.0 {
            return Err(format!("took {elapsed:.0} s, budget is 300 s"));
        }
        Ok(())
    });
}

#[test]
fn criterion_6_spike_recovery() {
    criterion(6, "spike recovery", || {
        let config = load_preset("spike.conf")?;
        let instance = gen_instance(&config, 0).map_err(|e| e.to_string())?;
        let truth = instance.truth.clone().ok_or("spike instance is missing its truth")?;
        let budget = config.max_iters.ok_or("spike preset does not fix an iteration budget")?;

        let mut fista_trace = PointTrace::default();
        let fista_ref =
            run_solver(SolverKind::Fista, &instance, config.rho, 10 * budget, &mut fista_trace)?;
        let mse_ref = metric_mse(&fista_ref.x_best, &truth);

        let mut osga_trace = PointTrace::default();
        run_solver(SolverKind::Osga, &instance, config.rho, 10 * budget, &mut osga_trace)?;

        let osga_short = run_solver(SolverKind::Osga, &instance, config.rho, budget, &mut NullSink)?;
        let nes_short = run_solver(SolverKind::Nes83, &instance, config.rho, budget, &mut NullSink)?;

        for (name, report) in [("osga", &osga_short), ("nes83", &nes_short)] {
            let mse = metric_mse(&report.x_best, &truth);
            if mse > 2.0 * mse_ref {
                return Err(format!(
                    "{name} MSE {mse:.3e} exceeds twice the extended-budget reference {mse_ref:.3e}"
                ));
            }
            let support: Vec<usize> =
                truth.data().iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
            let recovered = support
                .iter()
                .filter(|i| report.x_best.data()[**i].abs() >= 0.5)
                .count();
            if (recovered as f64) < 0.9 * support.len() as f64 {
                return Err(format!(
                    "{name} recovered {recovered} of {} spikes at the 0.5 threshold",
                    support.len()
                ));
            }
        }

        let first_at_ref = |points: &[Element]| {
            points.iter().position(|p| metric_mse(p, &truth) <= mse_ref)
        };
        let k_fista =
            first_at_ref(&fista_trace.points).ok_or("fista never matched its own reference MSE")?;
        let k_osga = first_at_ref(&osga_trace.points)
            .ok_or("osga never reached the reference MSE")?;
        if k_osga as f64 > 0.5 * k_fista as f64 {
            return Err(format!(
                "osga needed {k_osga} iterations vs fista's {k_fista}; required at most half"
            ));
        }
        Ok(())
    });
}

#[test]
fn criterion_7_tv_denoise_ordering() {
    criterion(7, "tv denoising ordering", || {
        let config = load_preset("tv_denoise.conf")?;
        if config.chit != 5 {
            return Err(format!("preset chit {} is not the required 5", config.chit));
        }
        let instance = gen_instance(&config, 0).map_err(|e| e.to_string())?;
        let truth = instance.truth.clone().ok_or("denoise instance is missing its truth")?;
        let osga = run_solver(SolverKind::Osga, &instance, config.rho, 50, &mut NullSink)?;
        let fista = run_solver(SolverKind::Fista, &instance, config.rho, 50, &mut NullSink)?;
        if osga.psi_best > fista.psi_best {
            return Err(format!(
                "osga objective {:.6} above fista's {:.6}",
                osga.psi_best, fista.psi_best
            ));
        }
        let psnr_osga = metric_psnr(&osga.x_best, &truth, config.psnr_scale);
        let psnr_fista = metric_psnr(&fista.x_best, &truth, config.psnr_scale);
        if (psnr_osga - psnr_fista).abs() > 1.0 {
            return Err(format!(
                "PSNR gap {:.2} dB (osga {psnr_osga:.2}, fista {psnr_fista:.2}) exceeds 1 dB",
                (psnr_osga - psnr_fista).abs()
            ));
        }
        Ok(())
    });
}

#[test]
fn criterion_8_adjoints_and_oracle_counts() {
    criterion(8, "adjoint and oracle bookkeeping", || {
        let mut rng = ChaCha8Rng::seed_from_u64(800);
        let dense_entries = random_vec(&mut rng, 12, -1.0, 1.0);
        let dense = LinearMap::dense(3, 4, dense_entries).expect("entry count");
        let variants: Vec<(&str, LinearMap)> = vec![
            ("identity", LinearMap::identity(Shape::vector(7))),
            ("dense", dense.clone()),
            (
                "diagonal",
                LinearMap::diagonal(Shape::vector(5), random_vec(&mut rng, 5, 0.1, 2.0))
                    .expect("positive weights"),
            ),
            (
                "mask",
                LinearMap::mask(Shape::matrix(4, 4), (0..16).map(|i| i % 3 != 0).collect())
                    .expect("valid mask"),
            ),
            ("blur", LinearMap::blur2d(9, 7, 3).expect("valid blur")),
            (
                "compose",
                LinearMap::compose(
                    dense,
                    LinearMap::diagonal(Shape::vector(4), vec![2.0, 1.0, 0.5, 0.25])
                        .expect("weights"),
                )
                .expect("compatible"),
            ),
            ("scaled", LinearMap::scaled(3.5, LinearMap::blur2d(5, 5, 1).expect("blur"))),
        ];
        for (name, op) in variants {
            let defect = op.adjoint_consistency(25, 9);
            if defect > 1e-10 {
                return Err(format!("{name}: adjoint defect {defect:.2e} exceeds 1e-10"));
            }
        }

        // Oracle budget: one forward and one adjoint application per term.
        let shape = Shape::vector(6);
        let cases: Vec<CompositeProblem> = vec![
            CompositeProblem::new(
                shape,
                vec![(
                    SmoothTerm::quadratic_loss(Element::zeros(shape)),
                    LinearMap::identity(shape),
                )],
                vec![],
            )
            .expect("valid"),
            CompositeProblem::new(
                shape,
                vec![
                    (SmoothTerm::quadratic_loss(Element::zeros(shape)), LinearMap::identity(shape)),
                    (SmoothTerm::scaled_l2sq(0.5), LinearMap::identity(shape)),
                ],
                vec![(Regularizer::l1(1.0), LinearMap::identity(shape))],
            )
            .expect("valid"),
            CompositeProblem::new(
                shape,
                vec![
                    (SmoothTerm::quadratic_loss(Element::zeros(shape)), LinearMap::identity(shape)),
                    (SmoothTerm::scaled_l2sq(0.5), LinearMap::identity(shape)),
                ],
                vec![
                    (Regularizer::l1(1.0), LinearMap::identity(shape)),
                    (Regularizer::l2sq(0.5), LinearMap::identity(shape)),
                ],
            )
            .expect("valid"),
        ];
        let x = Element::from_vec(random_vec(&mut rng, 6, -1.0, 1.0));
        for problem in &cases {
            let (n1, n2) = problem.term_counts();
            let terms = (n1 + n2) as u64;
            let result = problem.nfo_fg(&x).map_err(|e| e.to_string())?;
            if result.counts != (OpCounts { forward: terms, adjoint: terms }) {
                return Err(format!(
                    "{n1}+{n2} terms counted {}F/{}A instead of {terms}F/{terms}A",
                    result.counts.forward, result.counts.adjoint
                ));
            }
        }

        // Infeasible query: all forward applications, no adjoints.
        let boxed = CompositeProblem::new(
            shape,
            vec![(SmoothTerm::quadratic_loss(Element::zeros(shape)), LinearMap::identity(shape))],
            vec![(Regularizer::indicator_box(-1.0, 1.0), LinearMap::identity(shape))],
        )
        .expect("valid");
        let outside = Element::filled(shape, 5.0);
        let result = boxed.nfo_fg(&outside).map_err(|e| e.to_string())?;
        if result.value.finite().is_some() {
            return Err("point outside the box reported a finite value".into());
        }
        if result.counts != (OpCounts { forward: 2, adjoint: 0 }) {
            return Err(format!(
                "infeasible query counted {}F/{}A instead of 2F/0A",
                result.counts.forward, result.counts.adjoint
            ));
        }
        Ok(())
    });
}

#[test]
fn criterion_9_byte_identical_bundles() {
    criterion(9, "deterministic artifact bundles", || {
        let configs = [
            "family = lasso\nm = 60\nn = 120\ndensity = sparse\nlambda = 1\n\
             solvers = osga,nsdsg,pga,fista,nes83\nmax_iters = 80\ninstances = 2\nseed = 900\n",
            "family = tv_denoise\nrows = 16\ncols = 16\nlambda = 0.05\nnoise = snr:15\n\
             solvers = osga,fista\nmax_iters = 25\nseed = 901\nsave_images = true\n",
        ];
        for text in configs {
            let dirs = [tempfile::tempdir(), tempfile::tempdir()];
            let mut bundles: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
            for dir in &dirs {
                let dir = dir.as_ref().map_err(|e| e.to_string())?;
                let mut config =
                    osga_bench::parse_config(text).map_err(|e| e.to_string())?;
                config.out_dir = Some(dir.path().to_path_buf());
                let artifacts = run_experiment(&config).map_err(|e| e.to_string())?;
                if artifacts.any_failure {
                    return Err("a solver failed during the determinism run".into());
                }
                let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
                    .map_err(|e| e.to_string())?
                    .map(|entry| {
                        let entry = entry.map_err(|e| e.to_string())?;
                        let name = entry.file_name().to_string_lossy().into_owned();
                        let bytes = std::fs::read(entry.path()).map_err(|e| e.to_string())?;
                        Ok((name, bytes))
                    })
                    .collect::<Result<_, String>>()?;
                files.sort();
                bundles.push(files);
            }
            let names: Vec<&String> = bundles[0].iter().map(|(n, _)| n).collect();
            if bundles[0] != bundles[1] {
                return Err(format!("bundles differ across reruns (files: {names:?})"));
            }
            if bundles[0].is_empty() {
                return Err("run produced no artifacts".into());
            }
        }
        Ok(())
    });
}
