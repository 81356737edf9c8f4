//! The optimal subgradient iteration.
//!
//! The solver maintains an affine global underestimator of the objective,
//! Ψ(z) ≥ γ + ⟨h, z⟩, built from convex combinations of subgradient
//! inequalities (shifted by μ·Q when a strong-convexity parameter is given).
//! Writing γ_b = γ − Ψ(x_b) for the incumbent x_b, the auxiliary subproblem
//!
//!   η = E(γ_b, h) = sup_z −(γ_b + ⟨h, z⟩) / Q(z),   u = U(γ_b, h)
//!
//! turns the underestimator into a computable certificate: for any minimizer
//! x* of the objective,
//!
//!   0 ≤ Ψ(x_b) − Ψ* ≤ η · Q(x*),
//!
//! so driving η to zero certifies optimality without knowing Ψ*. Each
//! iteration probes the segment between x_b and u, blends the new subgradient
//! inequality into (γ, h), re-solves the subproblem twice, keeps the best
//! point seen, and lets the step controller [`pus_update`] adapt the blending
//! weight α from the observed ratio of predicted-to-achieved certificate
//! decrease. The candidate quadruple (h̄, γ̄, η̄, ū) is committed only when it
//! strictly improves the certificate, so η never increases, and the value
//! Ψ(x_b) never increases because incumbents are replaced only by better
//! points.
//!
//! Cost per iteration is fixed: one value-and-subgradient oracle call, one
//! value-only call, and two subproblem solves — no line search.

use std::time::Instant;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::problems::{CompositeProblem, OpCounts, OracleValue};
use crate::proxfun::QuadraticProx;
use crate::trace::{SolveReport, StopReason, Termination, TraceSample, TraceSink};

/// Tuning parameters of the iteration and its step controller.
#[derive(Clone, Copy, Debug)]
pub struct OsgaParams {
    /// Progress-ratio threshold δ ∈ (0,1) used by the step controller.
    pub delta: f64,
    /// Upper bound and initial value for the step parameter, in (0,1).
    pub alpha_max: f64,
    /// Step shrink exponent κ.
    pub kappa: f64,
    /// Step growth exponent κ' with 0 < κ' ≤ κ.
    pub kappa_prime: f64,
    /// Strong-convexity parameter μ ≥ 0 of the objective, if known.
    pub mu: f64,
    /// Optional objective value at which to stop immediately.
    pub psi_target: Option<f64>,
}

impl Default for OsgaParams {
    fn default() -> OsgaParams {
        OsgaParams {
            delta: 0.9,
            alpha_max: 0.7,
            kappa: 0.5,
            kappa_prime: 0.5,
            mu: 0.0,
            psi_target: None,
        }
    }
}

impl OsgaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta must lie in (0,1)"));
        }
        if !(self.alpha_max > 0.0 && self.alpha_max < 1.0) {
            return Err(Error::invalid("alpha_max must lie in (0,1)"));
        }
        if !(self.kappa_prime > 0.0 && self.kappa_prime <= self.kappa) {
            return Err(Error::invalid("require 0 < kappa_prime <= kappa"));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Live quantities of one solve. Maintained by [`osga_init`] and
/// [`osga_step`]; read-only for everyone else.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x_best: Element,
    pub psi_best: f64,
    /// Slope of the affine underestimator.
    pub h: Element,
    /// Offset of the affine underestimator.
    pub gamma: f64,
    /// Error certificate: Ψ(x_best) − Ψ* ≤ eta · Q(x*).
    pub eta: f64,
    /// Current subproblem maximizer.
    pub u: Element,
    /// Step parameter in (0, alpha_max].
    pub alpha: f64,
    pub iteration: usize,
    pub elapsed_seconds: f64,
    pub counts: OpCounts,
}

/// Evaluates the starting point, builds the first underestimator from its
/// subgradient, and solves the subproblem once.
pub fn osga_init(
    problem: &CompositeProblem,
    prox: &QuadraticProx,
    params: &OsgaParams,
    x0: &Element,
) -> Result<SolverState> {
    params.validate()?;
    if prox.domain() != problem.domain() {
        return Err(Error::ShapeMismatch { expected: problem.domain(), actual: prox.domain() });
    }

    let oracle = problem.nfo_fg(x0)?;
    let psi0 = match oracle.value {
        OracleValue::Finite(v) => v,
        OracleValue::Infeasible => return Err(Error::InfeasibleStart),
    };

    let mut h = oracle.subgradient;
    let mut shifted_psi0 = psi0;
    if params.mu > 0.0 {
        h.add_scaled(-params.mu, &prox.gradient(x0)?);
        shifted_psi0 -= params.mu * prox.value(x0)?;
    }
    let gamma = shifted_psi0 - h.dot(x0);
    let gamma_b = gamma - psi0;
    let sol = prox.solve_subproblem(gamma_b, &h)?;

    Ok(SolverState {
        x_best: x0.clone(),
        psi_best: psi0,
        h,
        gamma,
        eta: sol.e - params.mu,
        u: sol.u,
        alpha: params.alpha_max,
        iteration: 0,
        elapsed_seconds: 0.0,
        counts: oracle.counts,
    })
}

/// One full iteration: probe, blend, re-solve, keep the best point, and let
/// the controller update (α, h, γ, η, u).
///
/// If the trial point lands outside an indicator's feasible set, the oracle
/// reports no usable subgradient there; the relaxation is left untouched and
/// the step parameter shrinks as in the no-progress case, pulling later
/// trials back toward the (feasible) incumbent.
pub fn osga_step(
    state: &mut SolverState,
    problem: &CompositeProblem,
    prox: &QuadraticProx,
    params: &OsgaParams,
) -> Result<()> {
    debug_assert!(state.eta > 0.0, "stepping requires a positive certificate");
    let alpha = state.alpha;

    // x <- x_b + alpha (u - x_b)
    let x = Element::combine(1.0 - alpha, &state.x_best, alpha, &state.u);
    let oracle = problem.nfo_fg(&x)?;
    state.counts += oracle.counts;

    let psi_x = match oracle.value {
        OracleValue::Finite(v) => v,
        OracleValue::Infeasible => {
            state.alpha = alpha * (-params.kappa).exp();
            state.iteration += 1;
            return Ok(());
        }
    };

    let mut g = oracle.subgradient;
    let mut shifted_psi_x = psi_x;
    if params.mu > 0.0 {
        g.add_scaled(-params.mu, &prox.gradient(&x)?);
        shifted_psi_x -= params.mu * prox.value(&x)?;
    }

    let h_bar = Element::combine(1.0 - alpha, &state.h, alpha, &g);
    let gamma_bar = state.gamma + alpha * (shifted_psi_x - g.dot(&x) - state.gamma);

    // First candidate: better of incumbent and probe (ties keep the incumbent).
    let (mid_best, mid_psi) = if psi_x < state.psi_best {
        (&x, psi_x)
    } else {
        (&state.x_best, state.psi_best)
    };

    let sol_mid = prox.solve_subproblem(gamma_bar - mid_psi, &h_bar)?;
    // Second probe leaves from the incumbent held at the top of the step.
    let x_prime = Element::combine(1.0 - alpha, &state.x_best, alpha, &sol_mid.u);
    let (psi_prime, f_counts) = problem.nfo_f(&x_prime)?;
    state.counts += f_counts;

    let (new_best, new_psi) = if psi_prime.or_inf() < mid_psi {
        (x_prime.clone(), psi_prime.or_inf())
    } else {
        (mid_best.clone(), mid_psi)
    };

    let sol_final = prox.solve_subproblem(gamma_bar - new_psi, &h_bar)?;
    let eta_bar = sol_final.e - params.mu;

    state.x_best = new_best;
    state.psi_best = new_psi;
    state.iteration += 1;
    pus_update(state, eta_bar, h_bar, gamma_bar, sol_final.u, params);
    Ok(())
}

/// Step controller: compares achieved certificate decrease η − η̄ against the
/// target fraction δ·α·η via R = (η − η̄)/(δαη). R < 1 shrinks α by e^{−κ};
/// otherwise α grows by e^{κ'(R−1)}, capped at α_max. Independently, the
/// candidate quadruple replaces (h, γ, η, u) exactly when η̄ < η.
pub fn pus_update(
    state: &mut SolverState,
    eta_bar: f64,
    h_bar: Element,
    gamma_bar: f64,
    u_bar: Element,
    params: &OsgaParams,
) {
    let r = (state.eta - eta_bar) / (params.delta * state.alpha * state.eta);
    state.alpha = if r < 1.0 {
        state.alpha * (-params.kappa).exp()
    } else {
        (state.alpha * (params.kappa_prime * (r - 1.0)).exp()).min(params.alpha_max)
    };
    if eta_bar < state.eta {
        state.h = h_bar;
        state.gamma = gamma_bar;
        state.eta = eta_bar;
        state.u = u_bar;
    }
}

/// Runs the iteration until a stopping rule fires, emitting one trace row for
/// the starting point and one per iteration.
pub fn osga_solve(
    problem: &CompositeProblem,
    prox: &QuadraticProx,
    params: &OsgaParams,
    x0: &Element,
    termination: &Termination,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    termination.validate()?;
    let start = Instant::now();
    let mut state = osga_init(problem, prox, params, x0)?;
    state.elapsed_seconds = start.elapsed().as_secs_f64();
    emit(sink, &state);

    let stop = loop {
        if let Some(reason) = should_stop(&state, params, termination) {
            break reason;
        }
        osga_step(&mut state, problem, prox, params)?;
        state.elapsed_seconds = start.elapsed().as_secs_f64();
        emit(sink, &state);
    };

    Ok(SolveReport {
        x_best: state.x_best,
        psi_best: state.psi_best,
        iterations: state.iteration,
        elapsed_seconds: state.elapsed_seconds,
        counts: state.counts,
        stop,
    })
}

fn should_stop(
    state: &SolverState,
    params: &OsgaParams,
    termination: &Termination,
) -> Option<StopReason> {
    if let Some(target) = params.psi_target {
        if state.psi_best <= target {
            return Some(StopReason::PsiTarget);
        }
    }
    if let Some(reason) = termination.check(
        state.iteration,
        state.elapsed_seconds,
        Some(state.eta),
        state.psi_best,
    ) {
        return Some(reason);
    }
    // A vanished certificate means the incumbent is optimal within the
    // relaxation; stepping further would divide by zero in the controller.
    if state.eta <= 0.0 {
        return Some(StopReason::EtaZero);
    }
    None
}

fn emit(sink: &mut dyn TraceSink, state: &SolverState) {
    sink.record(&TraceSample {
        iteration: state.iteration,
        elapsed_seconds: state.elapsed_seconds,
        objective: state.psi_best,
        best_objective: state.psi_best,
        eta: Some(state.eta),
        alpha: Some(state.alpha),
        counts: state.counts,
        point: &state.x_best,
        best_point: &state.x_best,
    });
}
