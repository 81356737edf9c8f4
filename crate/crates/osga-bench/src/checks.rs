//! Built-in invariant checks behind the `check` subcommand: quick,
//! self-contained probes of the load-bearing identities, printing one
//! PASS/FAIL line each.

use osga::baselines::prox_soft_threshold;
use osga::{
    osga_solve, CompositeProblem, Element, LinearMap, MemorySink, OsgaParams, QuadraticProx,
    Regularizer, Shape, SmoothTerm, Termination,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::generate::{add_noise, gen_random_system};
use crate::metrics::{metric_isnr, metric_mse, metric_psnr, PsnrScale};
use crate::pgm::{read_pgm, write_pgm};
use crate::profile::{performance_profile, ProfileTable};

type Check = std::result::Result<(), String>;

fn fail(msg: String) -> Check {
    Err(msg)
}

fn random_element(shape: Shape, rng: &mut ChaCha8Rng) -> Element {
    let data = (0..shape.count()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    Element::from_shape(shape, data)
}

fn operator_adjoints() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let dense_entries: Vec<f64> = (0..12).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let dense = LinearMap::dense(3, 4, dense_entries).expect("entry count");
    let weights = vec![0.5, 1.5, 2.5, 3.5];
    let variants: Vec<(&str, LinearMap)> = vec![
        ("identity", LinearMap::identity(Shape::vector(4))),
        ("dense", dense.clone()),
        ("diagonal", LinearMap::diagonal(Shape::vector(4), weights).expect("positive weights")),
        (
            "mask",
            LinearMap::mask(Shape::vector(4), vec![true, false, true, false]).expect("mask"),
        ),
        ("blur", LinearMap::blur2d(8, 8, 2).expect("blur")),
        (
            "compose",
            LinearMap::compose(
                dense,
                LinearMap::diagonal(Shape::vector(4), vec![1.0, 2.0, 3.0, 4.0]).expect("weights"),
            )
            .expect("compatible shapes"),
        ),
        ("scaled", LinearMap::scaled(-2.5, LinearMap::identity(Shape::vector(4)))),
    ];
    for (name, op) in variants {
        let defect = op.adjoint_consistency(20, 7);
        if defect > 1e-10 {
            return fail(format!("{name} adjoint defect {defect:.2e} exceeds 1e-10"));
        }
    }
    Ok(())
}

fn subproblem_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let shape = Shape::vector(6);
    let prox = QuadraticProx::default_prox(&random_element(shape, &mut rng));
    for trial in 0..50 {
        let gamma = rng.random::<f64>() * 4.0 - 2.0;
        let h = random_element(shape, &mut rng);
        let solution = prox.solve_subproblem(gamma, &h).map_err(|e| e.to_string())?;
        let at = |z: &Element| -> std::result::Result<f64, String> {
            let q = prox.value(z).map_err(|e| e.to_string())?;
            Ok(solution.e * q + gamma + h.dot(z))
        };
        let residual_u = at(&solution.u)?;
        if residual_u.abs() > 1e-8 * solution.e.abs().max(1.0) {
            return fail(format!("trial {trial}: slack {residual_u:.2e} at the maximizer"));
        }
        for _ in 0..20 {
            let z = random_element(shape, &mut rng);
            let residual = at(&z)?;
            if residual < -1e-9 {
                return fail(format!("trial {trial}: bound violated by {residual:.2e}"));
            }
        }
    }
    Ok(())
}

fn certificate_brackets_optimum() -> Check {
    let n = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = Shape::vector(n);
    let center = random_element(shape, &mut rng);
    let problem = CompositeProblem::new(
        shape,
        vec![(SmoothTerm::quadratic_loss(center.clone()), LinearMap::identity(shape))],
        vec![],
    )
    .map_err(|e| e.to_string())?;
    let x0 = random_element(shape, &mut rng);
    let prox = QuadraticProx::default_prox(&x0);
    let q_star = prox.value(&center).map_err(|e| e.to_string())?;
    let mut sink = MemorySink::default();
    osga_solve(
        &problem,
        &prox,
        &OsgaParams::default(),
        &x0,
        &Termination::max_iterations(150),
        &mut sink,
    )
    .map_err(|e| e.to_string())?;
    for row in &sink.rows {
        let gap = row.best_objective;
        let eta = row.eta.ok_or("missing certificate column")?;
        if gap < 0.0 || gap > eta * q_star + 1e-8 {
            return fail(format!(
                "iteration {}: gap {gap:.3e} outside [0, {:.3e}]",
                row.iteration,
                eta * q_star + 1e-8
            ));
        }
    }
    Ok(())
}

fn envelope_and_certificate_monotone() -> Check {
    let sys = gen_random_system(20, 40, crate::config::Density::Dense, 15);
    let shape = Shape::vector(40);
    let problem = CompositeProblem::new(
        shape,
        vec![(SmoothTerm::quadratic_loss(sys.y), sys.a)],
        vec![(Regularizer::l1(0.5), LinearMap::identity(shape))],
    )
    .map_err(|e| e.to_string())?;
    let prox = QuadraticProx::default_prox(&sys.x0);
    let mut sink = MemorySink::default();
    osga_solve(
        &problem,
        &prox,
        &OsgaParams::default(),
        &sys.x0,
        &Termination::max_iterations(200),
        &mut sink,
    )
    .map_err(|e| e.to_string())?;
    let mut best = f64::INFINITY;
    let mut eta = f64::INFINITY;
    for row in &sink.rows {
        if row.best_objective > best {
            return fail(format!("objective rose at iteration {}", row.iteration));
        }
        best = row.best_objective;
        let row_eta = row.eta.ok_or("missing certificate column")?;
        if row_eta > eta {
            return fail(format!("certificate rose at iteration {}", row.iteration));
        }
        eta = row_eta;
    }
    Ok(())
}

fn soft_threshold_identities() -> Check {
    let y = Element::from_vec(vec![3.0, -0.2, 0.7, -5.0]);
    let out = prox_soft_threshold(&y, 1.0);
    if out.data() != [2.0, 0.0, 0.0, -4.0] {
        return fail(format!("soft threshold gave {:?}", out.data()));
    }
    Ok(())
}

fn noise_variance_concentrates() -> Check {
    let zeros = Element::zeros(Shape::vector(1_000_000));
    let noisy = add_noise(&zeros, crate::config::NoiseSpec::Variance(0.25), 7);
    let variance = noisy.dot(&noisy) / 1e6;
    if (variance - 0.25).abs() > 0.05 * 0.25 {
        return fail(format!("empirical variance {variance:.4} vs 0.25"));
    }
    Ok(())
}

fn profile_semantics() -> Check {
    let mut a = vec![1.0; 100];
    let mut b = vec![2.0; 100];
    for p in 84..100 {
        a[p] = 2.0;
        b[p] = 1.0;
    }
    b[0] = f64::INFINITY;
    let table = ProfileTable { solvers: vec!["a".into(), "b".into()], values: vec![a, b] };
    let curves = performance_profile(&table, &[1.0, 2.0, 1e9]).map_err(|e| e.to_string())?;
    if curves.rho[0][0] != 0.84 {
        return fail(format!("win fraction {} for the 84% case", curves.rho[0][0]));
    }
    if curves.rho[1][2] != 0.99 {
        return fail(format!("failure still counted: limit {}", curves.rho[1][2]));
    }
    Ok(())
}

fn metric_hand_values() -> Check {
    let x0 = Element::zeros(Shape::matrix(10, 10));
    let y = Element::filled(Shape::matrix(10, 10), 0.2);
    let x = Element::filled(Shape::matrix(10, 10), 0.1);
    let isnr = metric_isnr(&x, &y, &x0);
    if (isnr - 20.0 * 2f64.log10()).abs() > 1e-9 {
        return fail(format!("halved error gave ISNR {isnr}"));
    }
    let x = Element::filled(Shape::matrix(10, 10), 0.1);
    let psnr = metric_psnr(&x, &x0, PsnrScale::Unit);
    if (psnr - 20.0).abs() > 1e-9 {
        return fail(format!("psnr {psnr} for error norm sqrt(mn)/10"));
    }
    let a = Element::from_vec(vec![1.0, 2.0]);
    let b = Element::from_vec(vec![0.0, 1.0]);
    if metric_mse(&a, &b) != 1.0 {
        return fail(format!("mse {}", metric_mse(&a, &b)));
    }
    Ok(())
}

fn pgm_round_trip() -> Check {
    let path = std::env::temp_dir().join(format!("osga-bench-check-{}.pgm", std::process::id()));
    let data = (0..48).map(|i| i as f64 / 47.0).collect();
    let img = Element::from_matrix(6, 8, data);
    let outcome = (|| -> Check {
        write_pgm(&path, &img, true).map_err(|e| e.to_string())?;
        let back = read_pgm(&path).map_err(|e| e.to_string())?;
        if back.shape() != img.shape() {
            return fail("shape changed in round trip".into());
        }
        for (a, b) in back.data().iter().zip(img.data()) {
            if (a - b).abs() > 0.5 / 255.0 + 1e-12 {
                return fail(format!("quantization error {a} vs {b}"));
            }
        }
        Ok(())
    })();
    let _ = std::fs::remove_file(&path);
    outcome
}

/// Runs every check, printing one line per check; returns whether all passed.
pub fn run_checks() -> bool {
    let checks: [(&str, fn() -> Check); 9] = [
        ("operator adjoints", operator_adjoints),
        ("subproblem bound", subproblem_bound),
        ("certificate brackets optimum", certificate_brackets_optimum),
        ("envelope and certificate monotone", envelope_and_certificate_monotone),
        ("soft threshold identities", soft_threshold_identities),
        ("noise variance concentrates", noise_variance_concentrates),
        ("profile semantics", profile_semantics),
        ("metric hand values", metric_hand_values),
        ("pgm round trip", pgm_round_trip),
    ];
    let mut all = true;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("check {name}: PASS"),
            Err(why) => {
                all = false;
                println!("check {name}: FAIL ({why})");
            }
        }
    }
    all
}
