//! Comparison solvers: plain subgradient descent with diminishing steps,
//! forward-backward proximal gradient, its accelerated variant, and a
//! momentum subgradient method with backtracking. All of them report traces
//! through the same sink interface as the main solver, so the harness treats
//! every solver uniformly.

use std::time::Instant;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::problems::{itv_value, CompositeProblem, OpCounts};
use crate::trace::{SolveReport, Termination, TraceSample, TraceSink};

/// How a solver picks its step length.
#[derive(Clone, Copy, Debug)]
pub enum StepConfig {
    /// Fixed 1/L steps from a Lipschitz bound L > 0.
    Lipschitz { l: f64 },
    /// Diminishing steps alpha0/sqrt(k), k = 1, 2, ...
    Diminishing { alpha0: f64 },
    /// Backtracking with shrink factor rho in (0,1).
    Backtracking { rho: f64 },
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepConfig::Lipschitz { l } if !(l > 0.0 && l.is_finite()) => {
                Err(Error::invalid("lipschitz constant must be finite and positive"))
            }
            StepConfig::Diminishing { alpha0 } if !(alpha0 > 0.0 && alpha0.is_finite()) => {
                Err(Error::invalid("alpha0 must be finite and positive"))
            }
            StepConfig::Backtracking { rho } if !(rho > 0.0 && rho < 1.0) => {
                Err(Error::invalid("rho must lie in (0,1)"))
            }
            _ => Ok(()),
        }
    }
}

/// Largest squared column norm of an operator, max_i ||A e_i||^2 — an easily
/// computed stand-in for a Lipschitz bound that solvers scale as needed.
/// Costs one forward application per domain dimension.
pub fn lipschitz_column_bound(op: &crate::linop::LinearMap) -> Result<f64> {
    let domain = op.domain();
    let mut basis = Element::zeros(domain);
    let mut best = 0.0_f64;
    for i in 0..domain.count() {
        basis.data_mut()[i] = 1.0;
        let col = op.apply(&basis)?;
        best = best.max(col.dot(&col));
        basis.data_mut()[i] = 0.0;
    }
    Ok(best)
}

/// Componentwise soft threshold: prox of λ‖·‖₁.
pub fn prox_soft_threshold(y: &Element, lambda: f64) -> Element {
    let data = y
        .data()
        .iter()
        .map(|&v| v.signum() * (v.abs() - lambda).max(0.0))
        .collect();
    Element::from_shape(y.shape(), data)
}

/// Prox of (λ/2)‖·‖²: uniform shrink y/(1+λ).
pub fn prox_l2sq(y: &Element, lambda: f64) -> Element {
    y.scaled(1.0 / (1.0 + lambda))
}

/// Approximate prox of λ‖·‖_ITV by a fixed number of dual projected-descent
/// iterations.
///
/// The minimizer of ½‖X−Y‖² + λ·ITV(X) has the form X = Y − λ·div p for a
/// two-channel dual field p on the difference stencils. Starting from p = 0,
/// each inner iteration computes w = ∇(div p − Y/λ) and re-normalizes
///
///   p ← (p + τ w) / (1 + τ |w|),
///
/// with |w| the per-pixel Euclidean magnitude across the two channels and
/// τ = 1/8, the classical stability bound for this discrete gradient. Runs
/// exactly `chit` iterations — no convergence test — and returns Y − λ·div p.
pub fn prox_tv_chambolle(y: &Element, lambda: f64, chit: usize) -> Result<Element> {
    let (m, n) = match y.shape() {
        crate::element::Shape::Matrix { rows, cols } if rows >= 2 && cols >= 2 => (rows, cols),
        other => return Err(Error::MatrixRequired("tv prox", other)),
    };
    if chit < 1 {
        return Err(Error::invalid("tv prox needs at least one inner iteration"));
    }
    if lambda == 0.0 {
        return Ok(y.clone());
    }

    let tau = 0.125;
    let ys = y.data();
    // p1 holds the downward-difference channel ((m-1) x n), p2 the rightward
    // one (m x (n-1)).
    let mut p1 = vec![0.0; (m - 1) * n];
    let mut p2 = vec![0.0; m * (n - 1)];
    let mut div = vec![0.0; m * n];

    for _ in 0..chit {
        divergence(&p1, &p2, m, n, &mut div);
        // w = grad(div p - Y/lambda), channel by channel.
        for i in 0..m {
            for j in 0..n {
                let here = div[i * n + j] - ys[i * n + j] / lambda;
                let w1 = if i + 1 < m {
                    (div[(i + 1) * n + j] - ys[(i + 1) * n + j] / lambda) - here
                } else {
                    0.0
                };
                let w2 = if j + 1 < n {
                    (div[i * n + j + 1] - ys[i * n + j + 1] / lambda) - here
                } else {
                    0.0
                };
                let denom = 1.0 + tau * w1.hypot(w2);
                if i + 1 < m {
                    p1[i * n + j] = (p1[i * n + j] + tau * w1) / denom;
                }
                if j + 1 < n {
                    p2[i * (n - 1) + j] = (p2[i * (n - 1) + j] + tau * w2) / denom;
                }
            }
        }
    }

    divergence(&p1, &p2, m, n, &mut div);
    let data = ys.iter().zip(&div).map(|(v, d)| v - lambda * d).collect();
    Ok(Element::from_shape(y.shape(), data))
}

/// Discrete divergence, the negative adjoint of the forward-difference
/// gradient used by the TV stencils.
fn divergence(p1: &[f64], p2: &[f64], m: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        for j in 0..n {
            let mut d = 0.0;
            if i + 1 < m {
                d += p1[i * n + j];
            }
            if i >= 1 {
                d -= p1[(i - 1) * n + j];
            }
            if j + 1 < n {
                d += p2[i * (n - 1) + j];
            }
            if j >= 1 {
                d -= p2[i * (n - 1) + j - 1];
            }
            out[i * n + j] = d;
        }
    }
}

/// A regularizer the proximal solvers can both evaluate and prox against.
#[derive(Clone, Copy, Debug)]
pub enum ProxOperator {
    SoftThreshold { lambda: f64 },
    L2SqShrink { lambda: f64 },
    /// l1·‖x‖₁ + (l2/2)‖x‖²; the prox composes a soft threshold with a
    /// uniform shrink.
    ElasticNet { l1: f64, l2: f64 },
    TvChambolle { lambda: f64, chit: usize },
}

impl ProxOperator {
    pub fn validate(&self) -> Result<()> {
        let weights = match *self {
            ProxOperator::SoftThreshold { lambda } | ProxOperator::L2SqShrink { lambda } => {
                (lambda, 0.0)
            }
            ProxOperator::ElasticNet { l1, l2 } => (l1, l2),
            ProxOperator::TvChambolle { lambda, chit } => {
                if chit < 1 {
                    return Err(Error::invalid("tv prox needs chit >= 1"));
                }
                (lambda, 0.0)
            }
        };
        for w in [weights.0, weights.1] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid("prox weight must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// The regularizer value φ(x) this operator is the prox of.
    pub fn value(&self, x: &Element) -> Result<f64> {
        Ok(match *self {
            ProxOperator::SoftThreshold { lambda } => {
                lambda * x.data().iter().map(|v| v.abs()).sum::<f64>()
            }
            ProxOperator::L2SqShrink { lambda } => 0.5 * lambda * x.dot(x),
            ProxOperator::ElasticNet { l1, l2 } => {
                l1 * x.data().iter().map(|v| v.abs()).sum::<f64>() + 0.5 * l2 * x.dot(x)
            }
            ProxOperator::TvChambolle { lambda, .. } => lambda * itv_value(x)?,
        })
    }

    /// prox of (step·φ) at y.
    pub fn apply(&self, y: &Element, step: f64) -> Result<Element> {
        Ok(match *self {
            ProxOperator::SoftThreshold { lambda } => prox_soft_threshold(y, step * lambda),
            ProxOperator::L2SqShrink { lambda } => prox_l2sq(y, step * lambda),
            ProxOperator::ElasticNet { l1, l2 } => {
                prox_l2sq(&prox_soft_threshold(y, step * l1), step * l2)
            }
            ProxOperator::TvChambolle { lambda, chit } => {
                prox_tv_chambolle(y, step * lambda, chit)?
            }
        })
    }
}

/// Shared a-sequence recursion of the accelerated methods:
/// a ↦ (1 + √(4a² + 1)) / 2.
pub fn momentum_next(a: f64) -> f64 {
    0.5 * (1.0 + (4.0 * a * a + 1.0).sqrt())
}

struct BestTracker {
    point: Element,
    value: f64,
}

impl BestTracker {
    fn new(point: &Element, value: f64) -> BestTracker {
        BestTracker { point: point.clone(), value }
    }

    fn offer(&mut self, point: &Element, value: f64) {
        if value < self.value {
            self.point = point.clone();
            self.value = value;
        }
    }
}

/// Subgradient descent with diminishing steps x_{k+1} = x_k − (α0/√k)·g(x_k),
/// k = 1, 2, ...; returns the best point seen, not the final iterate.
pub fn nsdsg_solve(
    problem: &CompositeProblem,
    x0: &Element,
    alpha0: f64,
    termination: &Termination,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    StepConfig::Diminishing { alpha0 }.validate()?;
    termination.validate()?;
    let start = Instant::now();

    let mut counts = OpCounts::ZERO;
    let mut x = x0.clone();
    let mut oracle = problem.nfo_fg(&x)?;
    counts += oracle.counts;
    let mut best = BestTracker::new(&x, oracle.value.or_inf());

    let mut k = 0usize;
    let stop = loop {
        let elapsed = start.elapsed().as_secs_f64();
        sink.record(&TraceSample {
            iteration: k,
            elapsed_seconds: elapsed,
            objective: oracle.value.or_inf(),
            best_objective: best.value,
            eta: None,
            alpha: None,
            counts,
            point: &x,
            best_point: &best.point,
        });
        if let Some(reason) = termination.check(k, elapsed, None, best.value) {
            break reason;
        }
        k += 1;
        let step = alpha0 / (k as f64).sqrt();
        x.add_scaled(-step, &oracle.subgradient);
        oracle = problem.nfo_fg(&x)?;
        counts += oracle.counts;
        best.offer(&x, oracle.value.or_inf());
    };

    Ok(SolveReport {
        x_best: best.point,
        psi_best: best.value,
        iterations: k,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        counts,
        stop,
    })
}

/// Forward-backward proximal gradient: x_{k+1} = prox_{φ/L}(x_k − ∇f(x_k)/L).
/// `smooth` supplies f and its gradient; `reg` supplies φ and its prox.
pub fn pga_solve(
    smooth: &CompositeProblem,
    reg: &ProxOperator,
    lipschitz: f64,
    x0: &Element,
    termination: &Termination,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    StepConfig::Lipschitz { l: lipschitz }.validate()?;
    reg.validate()?;
    termination.validate()?;
    let start = Instant::now();
    let step = 1.0 / lipschitz;

    let mut counts = OpCounts::ZERO;
    let mut x = x0.clone();
    let mut oracle = smooth.nfo_fg(&x)?;
    counts += oracle.counts;
    let mut objective = oracle.value.or_inf() + reg.value(&x)?;
    let mut best = BestTracker::new(&x, objective);

    let mut k = 0usize;
    let stop = loop {
        let elapsed = start.elapsed().as_secs_f64();
        sink.record(&TraceSample {
            iteration: k,
            elapsed_seconds: elapsed,
            objective,
            best_objective: best.value,
            eta: None,
            alpha: None,
            counts,
            point: &x,
            best_point: &best.point,
        });
        if let Some(reason) = termination.check(k, elapsed, None, best.value) {
            break reason;
        }
        k += 1;
        let mut forward = x.clone();
        forward.add_scaled(-step, &oracle.subgradient);
        x = reg.apply(&forward, step)?;
        oracle = smooth.nfo_fg(&x)?;
        counts += oracle.counts;
        objective = oracle.value.or_inf() + reg.value(&x)?;
        best.offer(&x, objective);
    };

    Ok(SolveReport {
        x_best: best.point,
        psi_best: best.value,
        iterations: k,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        counts,
        stop,
    })
}

/// Accelerated proximal gradient: the forward-backward step is taken at an
/// extrapolated point y_k, then y_{k+1} = x_k + ((a_k−1)/a_{k+1})(x_k −
/// x_{k−1}) with a₀ = 1 and the [`momentum_next`] recursion. The raw iterate
/// objective may oscillate; the report carries the best point seen.
pub fn fista_solve(
    smooth: &CompositeProblem,
    reg: &ProxOperator,
    lipschitz: f64,
    x0: &Element,
    termination: &Termination,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    StepConfig::Lipschitz { l: lipschitz }.validate()?;
    reg.validate()?;
    termination.validate()?;
    let start = Instant::now();
    let step = 1.0 / lipschitz;

    let mut counts = OpCounts::ZERO;
    let mut x_prev = x0.clone();
    let mut y = x0.clone();
    let mut a = 1.0_f64;

    let (value0, c0) = smooth.nfo_f(x0)?;
    counts += c0;
    let mut objective = value0.or_inf() + reg.value(x0)?;
    let mut best = BestTracker::new(x0, objective);
    let mut current = x0.clone();

    let mut k = 0usize;
    let stop = loop {
        let elapsed = start.elapsed().as_secs_f64();
        sink.record(&TraceSample {
            iteration: k,
            elapsed_seconds: elapsed,
            objective,
            best_objective: best.value,
            eta: None,
            alpha: None,
            counts,
            point: &current,
            best_point: &best.point,
        });
        if let Some(reason) = termination.check(k, elapsed, None, best.value) {
            break reason;
        }
        k += 1;

        let oracle = smooth.nfo_fg(&y)?;
        counts += oracle.counts;
        let mut forward = y.clone();
        forward.add_scaled(-step, &oracle.subgradient);
        let x_new = reg.apply(&forward, step)?;

        let (value, vc) = smooth.nfo_f(&x_new)?;
        counts += vc;
        objective = value.or_inf() + reg.value(&x_new)?;
        best.offer(&x_new, objective);

        let a_next = momentum_next(a);
        y = Element::combine(1.0 + (a - 1.0) / a_next, &x_new, -(a - 1.0) / a_next, &x_prev);
        x_prev = x_new.clone();
        current = x_new;
        a = a_next;
    };

    Ok(SolveReport {
        x_best: best.point,
        psi_best: best.value,
        iterations: k,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        counts,
        stop,
    })
}

const NES83_MAX_SHRINKS: usize = 60;

/// Momentum subgradient method with backtracking.
///
/// From a second point z (z ≠ y₀ with a different subgradient) the initial
/// step is α₋₁ = ‖y₀−z‖/‖g_{y₀}−g_z‖. Each iteration backtracks
/// x̂ = y_k − α̂·g_{y_k}, shrinking α̂ by ρ while the sufficient-decrease test
/// Ψ(x̂) ≤ Ψ(y_k) − ½α̂‖g_{y_k}‖² fails, then extrapolates
/// y_{k+1} = x_k + (a_k−1)(x_k−x_{k−1})/a_{k+1} with a₀ = 0 and x₋₁ = y₀.
/// Subgradients stand in for gradients, so nonsmooth objectives are accepted;
/// a backtracking loop that exceeds 60 shrinks aborts with a step-failure
/// error naming the iteration.
pub fn nes83_solve(
    problem: &CompositeProblem,
    y0: &Element,
    z: &Element,
    rho: f64,
    termination: &Termination,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    StepConfig::Backtracking { rho }.validate()?;
    termination.validate()?;
    let start = Instant::now();

    let mut counts = OpCounts::ZERO;
    let oracle0 = problem.nfo_fg(y0)?;
    counts += oracle0.counts;
    let (g_z, zc) = problem.nfo_g(z)?;
    counts += zc;

    let separation = (y0 - z).norm();
    if separation == 0.0 {
        return Err(Error::invalid("nes83 needs z distinct from the starting point"));
    }
    let slope_gap = (&oracle0.subgradient - &g_z).norm();
    if slope_gap == 0.0 {
        return Err(Error::invalid("nes83 needs z with a subgradient different from y0's"));
    }

    let mut alpha = separation / slope_gap;
    let mut a = 0.0_f64;
    let mut y = y0.clone();
    let mut psi_y = oracle0.value.or_inf();
    let mut g_y = oracle0.subgradient;
    let mut x_prev = y0.clone();
    let mut best = BestTracker::new(y0, psi_y);
    let mut current = y0.clone();
    let mut objective = psi_y;

    let mut k = 0usize;
    let stop = loop {
        let elapsed = start.elapsed().as_secs_f64();
        sink.record(&TraceSample {
            iteration: k,
            elapsed_seconds: elapsed,
            objective,
            best_objective: best.value,
            eta: None,
            alpha: Some(alpha),
            counts,
            point: &current,
            best_point: &best.point,
        });
        if let Some(reason) = termination.check(k, elapsed, None, best.value) {
            break reason;
        }

        let g_norm_sq = g_y.dot(&g_y);
        let mut alpha_hat = alpha;
        let mut x_hat = y.clone();
        x_hat.add_scaled(-alpha_hat, &g_y);
        let (value, vc) = problem.nfo_f(&x_hat)?;
        counts += vc;
        let mut psi_hat = value.or_inf();
        let mut shrinks = 0usize;
        while psi_hat > psi_y - 0.5 * alpha_hat * g_norm_sq {
            shrinks += 1;
            if shrinks > NES83_MAX_SHRINKS {
                return Err(Error::StepSearchFailed {
                    iteration: k,
                    shrinks: NES83_MAX_SHRINKS,
                });
            }
            alpha_hat *= rho;
            x_hat = y.clone();
            x_hat.add_scaled(-alpha_hat, &g_y);
            let (value, vc) = problem.nfo_f(&x_hat)?;
            counts += vc;
            psi_hat = value.or_inf();
        }

        alpha = alpha_hat;
        best.offer(&x_hat, psi_hat);
        objective = psi_hat;

        let a_next = momentum_next(a);
        let coeff = (a - 1.0) / a_next;
        y = Element::combine(1.0 + coeff, &x_hat, -coeff, &x_prev);
        x_prev = x_hat.clone();
        current = x_hat;
        a = a_next;
        k += 1;

        let oracle = problem.nfo_fg(&y)?;
        counts += oracle.counts;
        psi_y = oracle.value.or_inf();
        g_y = oracle.subgradient;
        best.offer(&y, psi_y);
    };

    Ok(SolveReport {
        x_best: best.point,
        psi_best: best.value,
        iterations: k,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        counts,
        stop,
    })
}
