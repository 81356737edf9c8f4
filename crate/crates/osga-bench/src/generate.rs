//! Instance generation for the experiment families.
//!
//! Everything here is deterministic in the configured seed: per-instance
//! sub-seeds are derived with [`mix_seed`], and every random draw goes
//! through a seeded counter-based generator, so a config reproduces its
//! instances bit for bit on any machine.

use osga::baselines::ProxOperator;
use osga::{CompositeProblem, Element, LinearMap, Regularizer, Shape, SmoothTerm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Density, ExperimentConfig, Family, LambdaRule, NoiseSpec};
use crate::error::{BenchError, Result};

const TAG_SYSTEM: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_SIGNAL: u64 = 3;
const TAG_START: u64 = 4;
const TAG_MASK: u64 = 5;

/// Derives the sub-seed for one purpose (`tag`) of one instance (`index`).
pub fn mix_seed(seed: u64, index: u64, tag: u64) -> u64 {
    seed ^ index
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(tag.wrapping_mul(0xBF58_476D_1CE4_E5B9))
}

/// One standard normal draw (Box-Muller, cosine branch).
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub struct RandomSystem {
    pub a: LinearMap,
    pub y: Element,
    pub x0: Element,
    /// Largest squared column norm of the generated matrix.
    pub lhat: f64,
    /// Number of nonzero matrix entries.
    pub nnz_a: usize,
}

/// Random linear system: dense entries are uniform on [0,1); in sparse mode
/// each entry (and each entry of y and x0) is nonzero with the given
/// probability.
pub fn gen_random_system(m: usize, n: usize, density: Density, seed: u64) -> RandomSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = vec![0.0; m * n];
    let mut nnz_a = 0;
    for e in &mut entries {
        *e = match density {
            Density::Dense => rng.random::<f64>(),
            Density::Sparse(p) => {
                if rng.random::<f64>() < p {
                    rng.random::<f64>()
                } else {
                    0.0
                }
            }
        };
        if *e != 0.0 {
            nnz_a += 1;
        }
    }
    let mut lhat = 0.0_f64;
    for j in 0..n {
        let col: f64 = (0..m).map(|i| entries[i * n + j].powi(2)).sum();
        lhat = lhat.max(col);
    }
    let draw_vec = |rng: &mut ChaCha8Rng, len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| match density {
                Density::Dense => rng.random::<f64>(),
                Density::Sparse(p) => {
                    if rng.random::<f64>() < p {
                        rng.random::<f64>()
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    };
    let y = Element::from_vec(draw_vec(&mut rng, m));
    let x0 = Element::from_vec(draw_vec(&mut rng, n));
    let a = LinearMap::dense(m, n, entries).expect("entry count matches by construction");
    RandomSystem { a, y, x0, lhat, nnz_a }
}

/// Sparse ±1 signal: exactly k entries are ±1 (fair independent signs) at
/// positions drawn uniformly without replacement.
pub fn gen_spike_signal(n: usize, k: usize, seed: u64) -> Result<Element> {
    if k > n {
        return Err(BenchError::config(format!("cannot place {k} spikes in {n} entries")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..n).collect();
    let mut data = vec![0.0; n];
    for i in 0..k {
        let j = rng.random_range(i..n);
        positions.swap(i, j);
        data[positions[i]] = if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 };
    }
    Ok(Element::from_vec(data))
}

/// Gaussian matrix with orthonormalized rows (modified Gram-Schmidt).
/// Returns the operator and its largest squared column norm.
pub fn gen_sensing_matrix(m: usize, n: usize, seed: u64) -> Result<(LinearMap, f64)> {
    if m > n {
        return Err(BenchError::config(format!(
            "row orthonormalization needs m <= n, got {m} > {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| gaussian(&mut rng)).collect())
        .collect();
    for i in 0..m {
        for j in 0..i {
            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            for t in 0..n {
                rows[i][t] -= dot * rows[j][t];
            }
        }
        let norm: f64 = rows[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return Err(BenchError::config("degenerate Gaussian draw during orthonormalization"));
        }
        for t in 0..n {
            rows[i][t] /= norm;
        }
    }
    let mut entries = Vec::with_capacity(m * n);
    for row in &rows {
        entries.extend_from_slice(row);
    }
    let mut lhat = 0.0_f64;
    for j in 0..n {
        let col: f64 = (0..m).map(|i| entries[i * n + j].powi(2)).sum();
        lhat = lhat.max(col);
    }
    let a = LinearMap::dense(m, n, entries).expect("entry count matches by construction");
    Ok((a, lhat))
}

/// Additive white Gaussian noise. SNR mode measures the signal power from
/// the clean input and scales the noise so the requested dB ratio holds in
/// expectation; variance mode draws i.i.d. N(0, sigma^2).
pub fn add_noise(clean: &Element, spec: NoiseSpec, seed: u64) -> Element {
    let sigma = match spec {
        NoiseSpec::None => return clean.clone(),
        NoiseSpec::Variance(var) => {
            if var == 0.0 {
                return clean.clone();
            }
            var.sqrt()
        }
        NoiseSpec::Snr(db) => {
            let signal_power = clean.dot(clean) / clean.len() as f64;
            let noise_power = signal_power / 10f64.powf(db / 10.0);
            if noise_power == 0.0 {
                return clean.clone();
            }
            noise_power.sqrt()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = clean.data().iter().map(|v| v + sigma * gaussian(&mut rng)).collect();
    Element::from_shape(clean.shape(), data)
}

/// Piecewise-constant test image with values in [0,1]: a mosaic of
/// four-pixel tiles cycling through nine gray levels, overlaid with a
/// brighter disk, giving edge content at two scales.
pub fn phantom(rows: usize, cols: usize) -> Element {
    const PALETTE: [f64; 9] = [0.15, 0.55, 0.85, 0.35, 0.95, 0.25, 0.75, 0.45, 0.65];
    const TILE: usize = 4;
    let mut data = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let px = &mut data[i * cols + j];
            *px = PALETTE[((i / TILE) * 3 + (j / TILE) * 5) % PALETTE.len()];
            let di = i as f64 - rows as f64 / 2.0;
            let dj = j as f64 - cols as f64 / 2.0;
            if (di * di + dj * dj).sqrt() < rows.min(cols) as f64 / 6.0 {
                *px = 0.9;
            }
        }
    }
    Element::from_matrix(rows, cols, data)
}

/// A fully assembled problem instance: the composite objective for the
/// subgradient solvers, the smooth part plus prox regularizer for the
/// forward-backward solvers, starting points, step constants, and the ground
/// truth needed by the metrics.
pub struct Instance {
    pub index: usize,
    pub problem: CompositeProblem,
    pub smooth: CompositeProblem,
    pub prox_reg: ProxOperator,
    pub x0: Element,
    pub nes_z: Element,
    pub lipschitz: f64,
    pub alpha0: f64,
    pub lambda: f64,
    /// Clean signal or image, when the family has one.
    pub truth: Option<Element>,
    /// Degraded observation embedded in the solution domain (imaging only).
    pub degraded: Option<Element>,
}

pub fn gen_instance(config: &ExperimentConfig, index: usize) -> Result<Instance> {
    let idx = index as u64;
    let system_seed = mix_seed(config.seed, idx, TAG_SYSTEM);
    let noise_seed = mix_seed(config.seed, idx, TAG_NOISE);
    let signal_seed = mix_seed(config.seed, idx, TAG_SIGNAL);
    let start_seed = mix_seed(config.seed, idx, TAG_START);
    let mask_seed = mix_seed(config.seed, idx, TAG_MASK);

    let sparse = matches!(config.density, Density::Sparse(_));
    match config.family {
        Family::Tikhonov | Family::Lasso | Family::ElasticNet => {
            let sys = gen_random_system(config.m, config.n, config.density, system_seed);
            let y = add_noise(&sys.y, config.noise, noise_seed);
            let domain = Shape::vector(config.n);
            let lambda = resolve_lambda(config, &sys.a, &y)?;

            let mut smooth_terms =
                vec![(SmoothTerm::quadratic_loss(y.clone()), sys.a.clone())];
            let mut nonsmooth = Vec::new();
            let prox_reg = match config.family {
                Family::Tikhonov => {
                    smooth_terms
                        .push((SmoothTerm::scaled_l2sq(lambda), LinearMap::identity(domain)));
                    ProxOperator::L2SqShrink { lambda }
                }
                Family::Lasso => {
                    nonsmooth.push((Regularizer::l1(lambda), LinearMap::identity(domain)));
                    ProxOperator::SoftThreshold { lambda }
                }
                Family::ElasticNet => {
                    nonsmooth.push((Regularizer::l1(lambda), LinearMap::identity(domain)));
                    nonsmooth
                        .push((Regularizer::l2sq(config.lambda2), LinearMap::identity(domain)));
                    ProxOperator::ElasticNet { l1: lambda, l2: config.lambda2 }
                }
                _ => unreachable!(),
            };

            let problem = CompositeProblem::new(domain, smooth_terms, nonsmooth)?;
            let smooth = CompositeProblem::new(
                domain,
                vec![(SmoothTerm::quadratic_loss(y), sys.a)],
                vec![],
            )?;
            Ok(Instance {
                index,
                problem,
                smooth,
                prox_reg,
                x0: sys.x0,
                nes_z: uniform_element(domain, start_seed),
                lipschitz: step_scale(config, sparse) * sys.lhat,
                alpha0: subgradient_step(config, sparse),
                lambda,
                truth: None,
                degraded: None,
            })
        }
        Family::SpikeRecovery => {
            let (a, lhat) = gen_sensing_matrix(config.m, config.n, system_seed)?;
            let x_true = gen_spike_signal(config.n, config.spikes, signal_seed)?;
            let clean = a.apply(&x_true)?;
            let y = add_noise(&clean, config.noise, noise_seed);
            let lambda = resolve_lambda(config, &a, &y)?;
            let domain = Shape::vector(config.n);

            let problem = CompositeProblem::new(
                domain,
                vec![(SmoothTerm::quadratic_loss(y.clone()), a.clone())],
                vec![(Regularizer::l1(lambda), LinearMap::identity(domain))],
            )?;
            let smooth = CompositeProblem::new(
                domain,
                vec![(SmoothTerm::quadratic_loss(y), a)],
                vec![],
            )?;
            Ok(Instance {
                index,
                problem,
                smooth,
                prox_reg: ProxOperator::SoftThreshold { lambda },
                x0: Element::zeros(domain),
                nes_z: uniform_element(domain, start_seed),
                lipschitz: step_scale(config, false) * lhat,
                alpha0: subgradient_step(config, false),
                lambda,
                truth: Some(x_true),
                degraded: None,
            })
        }
        Family::TvDenoise | Family::TvInpaint | Family::TvDeblur => {
            let (rows, cols) = (config.rows, config.cols);
            let domain = Shape::matrix(rows, cols);
            let truth = phantom(rows, cols);
            let lambda = config.lambda;

            let (op, observed, degraded) = match config.family {
                Family::TvDenoise => {
                    let y = add_noise(&truth, config.noise, noise_seed);
                    (LinearMap::identity(domain), y.clone(), y)
                }
                Family::TvInpaint => {
                    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
                    let keep: Vec<bool> =
                        (0..rows * cols).map(|_| rng.random::<f64>() >= config.missing_fraction).collect();
                    let mask = LinearMap::mask(domain, keep)?;
                    let y = add_noise(&mask.apply(&truth)?, config.noise, noise_seed);
                    let embedded = mask.adjoint(&y)?;
                    (mask, y, embedded)
                }
                Family::TvDeblur => {
                    let blur = LinearMap::blur2d(rows, cols, config.blur_half_width)?;
                    let y = add_noise(&blur.apply(&truth)?, config.noise, noise_seed);
                    (blur, y.clone(), y)
                }
                _ => unreachable!(),
            };

            let problem = CompositeProblem::new(
                domain,
                vec![(SmoothTerm::quadratic_loss(observed.clone()), op.clone())],
                vec![(Regularizer::itv(lambda), LinearMap::identity(domain))],
            )?;
            let smooth = CompositeProblem::new(
                domain,
                vec![(SmoothTerm::quadratic_loss(observed), op)],
                vec![],
            )?;
            let x0 = degraded.clone();
            Ok(Instance {
                index,
                problem,
                smooth,
                prox_reg: ProxOperator::TvChambolle { lambda, chit: config.chit },
                x0,
                nes_z: uniform_element(domain, start_seed),
                // The identity, a pixel mask, and a normalized averaging blur
                // all have operator norm at most 1.
                lipschitz: config.lip_scale.unwrap_or(1.0),
                alpha0: config.alpha0.unwrap_or(1e-2),
                lambda,
                truth: Some(truth),
                degraded: Some(degraded),
            })
        }
    }
}

fn resolve_lambda(config: &ExperimentConfig, a: &LinearMap, y: &Element) -> Result<f64> {
    match config.lambda_rule {
        LambdaRule::Fixed => Ok(config.lambda),
        LambdaRule::AdjointInf(c) => {
            let back = a.adjoint(y)?;
            Ok(c * back.inf_norm())
        }
    }
}

/// Step-rule factor applied to the largest squared column norm: 1e4 for
/// dense data, 1e2 for sparse.
fn step_scale(config: &ExperimentConfig, sparse: bool) -> f64 {
    config.lip_scale.unwrap_or(if sparse { 1e2 } else { 1e4 })
}

/// Diminishing-step constant: 1e-7 for dense data, 1e-4 for sparse.
fn subgradient_step(config: &ExperimentConfig, sparse: bool) -> f64 {
    config.alpha0.unwrap_or(if sparse { 1e-4 } else { 1e-7 })
}

fn uniform_element(shape: Shape, seed: u64) -> Element {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..shape.count()).map(|_| rng.random::<f64>()).collect();
    Element::from_shape(shape, data)
}
