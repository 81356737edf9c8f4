//! Composite objectives Ψ(x) = Σ f_i(A_i x) + Σ φ_j(W_j x) and their
//! first-order oracle.
//!
//! A [`CompositeProblem`] is an ordered list of smooth terms and regularizer
//! terms, each paired with a linear operator into the space where the term is
//! evaluated. The oracle [`CompositeProblem::nfo_fg`] returns the objective
//! value together with one subgradient
//!
//!   g = Σ A_i* ∇f_i(A_i x) + Σ W_j* ∂φ_j(W_j x),
//!
//! applying every operator exactly once forward and once in adjoint per call.
//! [`CompositeProblem::nfo_f`] is the value-only restriction (no adjoints) and
//! [`CompositeProblem::nfo_g`] the subgradient-only one; all three report the
//! operator applications they performed so callers can audit solver cost.
//!
//! Subgradient selection is deterministic: sign(0) = 0 for the ℓ1 norm, and
//! total-variation stencils with vanishing magnitude contribute nothing.
//! Indicator terms never produce floating infinities; an out-of-bounds point
//! yields an explicit [`OracleValue::Infeasible`] and the adjoint sweep is
//! skipped.

use crate::element::{Element, Shape};
use crate::error::{Error, Result};
use crate::linop::LinearMap;

/// Forward/adjoint operator application counts for one or more oracle calls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub forward: u64,
    pub adjoint: u64,
}

impl OpCounts {
    pub const ZERO: OpCounts = OpCounts { forward: 0, adjoint: 0 };

    pub fn total(&self) -> u64 {
        self.forward + self.adjoint
    }
}

impl std::ops::Add for OpCounts {
    type Output = OpCounts;
    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts { forward: self.forward + rhs.forward, adjoint: self.adjoint + rhs.adjoint }
    }
}

impl std::ops::AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: OpCounts) {
        self.forward += rhs.forward;
        self.adjoint += rhs.adjoint;
    }
}

/// Objective value at a point: finite, or an explicit infeasibility marker
/// produced by an indicator term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleValue {
    Finite(f64),
    Infeasible,
}

impl OracleValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, OracleValue::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            OracleValue::Finite(v) => Some(v),
            OracleValue::Infeasible => None,
        }
    }

    /// Finite value, or +∞ for comparisons that must rank infeasible points
    /// last.
    pub fn or_inf(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// Value, one subgradient, and the operator applications spent obtaining them.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub value: OracleValue,
    pub subgradient: Element,
    pub counts: OpCounts,
}

/// Differentiable objective terms f_i.
#[derive(Clone, Debug)]
pub enum SmoothTerm {
    /// `½ ‖v − target‖²`.
    QuadraticLoss { target: Element },
    /// `(coeff/2) ‖v‖²`.
    ScaledL2Sq { coeff: f64 },
}

impl SmoothTerm {
    pub fn quadratic_loss(target: Element) -> SmoothTerm {
        SmoothTerm::QuadraticLoss { target }
    }

    pub fn scaled_l2sq(coeff: f64) -> SmoothTerm {
        SmoothTerm::ScaledL2Sq { coeff }
    }

    pub fn value(&self, v: &Element) -> f64 {
        match self {
            SmoothTerm::QuadraticLoss { target } => {
                let r = v - target;
                0.5 * r.dot(&r)
            }
            SmoothTerm::ScaledL2Sq { coeff } => 0.5 * coeff * v.dot(v),
        }
    }

    pub fn gradient(&self, v: &Element) -> Element {
        match self {
            SmoothTerm::QuadraticLoss { target } => v - target,
            SmoothTerm::ScaledL2Sq { coeff } => v.scaled(*coeff),
        }
    }

    fn validate(&self, codomain: Shape) -> Result<()> {
        match self {
            SmoothTerm::QuadraticLoss { target } => {
                if target.shape() != codomain {
                    return Err(Error::ShapeMismatch {
                        expected: codomain,
                        actual: target.shape(),
                    });
                }
            }
            SmoothTerm::ScaledL2Sq { coeff } => {
                if !(*coeff >= 0.0 && coeff.is_finite()) {
                    return Err(Error::invalid("scaled_l2sq coefficient must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// Convex regularizer terms φ_j, possibly nonsmooth.
#[derive(Clone, Debug)]
pub enum Regularizer {
    /// `λ ‖w‖₁`.
    L1 { lambda: f64 },
    /// `(λ/2) ‖w‖²`.
    L2Sq { lambda: f64 },
    /// `λ ‖W‖_ITV` (isotropic total variation, matrix arguments only).
    Itv { lambda: f64 },
    /// `λ ‖W‖_ATV` (anisotropic total variation, matrix arguments only).
    Atv { lambda: f64 },
    /// Indicator of the box `[lower, upper]` applied entrywise, or of the
    /// whole space when `bounds` is `None` (value identically 0).
    Indicator { bounds: Option<(f64, f64)> },
}

impl Regularizer {
    pub fn l1(lambda: f64) -> Regularizer {
        Regularizer::L1 { lambda }
    }

    pub fn l2sq(lambda: f64) -> Regularizer {
        Regularizer::L2Sq { lambda }
    }

    pub fn itv(lambda: f64) -> Regularizer {
        Regularizer::Itv { lambda }
    }

    pub fn atv(lambda: f64) -> Regularizer {
        Regularizer::Atv { lambda }
    }

    pub fn indicator_box(lower: f64, upper: f64) -> Regularizer {
        Regularizer::Indicator { bounds: Some((lower, upper)) }
    }

    pub fn indicator_free() -> Regularizer {
        Regularizer::Indicator { bounds: None }
    }

    pub fn evaluate(&self, w: &Element) -> Result<OracleValue> {
        Ok(match self {
            Regularizer::L1 { lambda } => {
                OracleValue::Finite(lambda * w.data().iter().map(|v| v.abs()).sum::<f64>())
            }
            Regularizer::L2Sq { lambda } => OracleValue::Finite(0.5 * lambda * w.dot(w)),
            Regularizer::Itv { lambda } => OracleValue::Finite(lambda * itv_value(w)?),
            Regularizer::Atv { lambda } => OracleValue::Finite(lambda * atv_value(w)?),
            Regularizer::Indicator { bounds } => match bounds {
                None => OracleValue::Finite(0.0),
                Some((lo, hi)) => {
                    if w.data().iter().all(|v| *v >= *lo && *v <= *hi) {
                        OracleValue::Finite(0.0)
                    } else {
                        OracleValue::Infeasible
                    }
                }
            },
        })
    }

    /// One subgradient at `w`, with sign(0) = 0 and zero stencil contributions
    /// at non-differentiable TV points. For indicators this is the zero
    /// vector, a valid choice at every feasible point.
    pub fn subgradient(&self, w: &Element) -> Result<Element> {
        Ok(match self {
            Regularizer::L1 { lambda } => {
                let data = w.data().iter().map(|v| lambda * sign(*v)).collect();
                Element::from_shape(w.shape(), data)
            }
            Regularizer::L2Sq { lambda } => w.scaled(*lambda),
            Regularizer::Itv { lambda } => itv_subgradient(w)?.scaled(*lambda),
            Regularizer::Atv { lambda } => atv_subgradient(w)?.scaled(*lambda),
            Regularizer::Indicator { .. } => Element::zeros(w.shape()),
        })
    }

    fn lambda(&self) -> Option<f64> {
        match self {
            Regularizer::L1 { lambda }
            | Regularizer::L2Sq { lambda }
            | Regularizer::Itv { lambda }
            | Regularizer::Atv { lambda } => Some(*lambda),
            Regularizer::Indicator { .. } => None,
        }
    }

    fn validate(&self, codomain: Shape) -> Result<()> {
        if let Some(lambda) = self.lambda() {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::invalid("regularizer weight must be finite and >= 0"));
            }
        }
        match self {
            Regularizer::Itv { .. } => {
                require_tv_shape("itv", codomain)?;
            }
            Regularizer::Atv { .. } => {
                require_tv_shape("atv", codomain)?;
            }
            Regularizer::Indicator { bounds: Some((lo, hi)) } if lo > hi => {
                return Err(Error::invalid("indicator box has lower > upper"));
            }
            _ => {}
        }
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn require_tv_shape(name: &'static str, shape: Shape) -> Result<(usize, usize)> {
    match shape {
        Shape::Matrix { rows, cols } if rows >= 2 && cols >= 2 => Ok((rows, cols)),
        other => Err(Error::MatrixRequired(name, other)),
    }
}

/// Isotropic total variation: over every pixel, the Euclidean magnitude of
/// (downward difference, rightward difference), with differences clipped to
/// zero past the last row / column. The boundary rows and columns therefore
/// contribute plain absolute differences.
pub fn itv_value(x: &Element) -> Result<f64> {
    let (m, n) = require_tv_shape("itv", x.shape())?;
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let a = if i + 1 < m { x.at(i + 1, j) - x.at(i, j) } else { 0.0 };
            let b = if j + 1 < n { x.at(i, j + 1) - x.at(i, j) } else { 0.0 };
            total += a.hypot(b);
        }
    }
    Ok(total)
}

/// Chain-rule subgradient of [`itv_value`]; stencils with zero magnitude
/// contribute nothing.
pub fn itv_subgradient(x: &Element) -> Result<Element> {
    let (m, n) = require_tv_shape("itv", x.shape())?;
    let mut g = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let a = if i + 1 < m { x.at(i + 1, j) - x.at(i, j) } else { 0.0 };
            let b = if j + 1 < n { x.at(i, j + 1) - x.at(i, j) } else { 0.0 };
            let r = a.hypot(b);
            if r > 0.0 {
                g[i * n + j] -= (a + b) / r;
                if i + 1 < m {
                    g[(i + 1) * n + j] += a / r;
                }
                if j + 1 < n {
                    g[i * n + j + 1] += b / r;
                }
            }
        }
    }
    Ok(Element::from_shape(x.shape(), g))
}

/// Anisotropic total variation: same stencil as [`itv_value`] with
/// `|down| + |right|` in place of the Euclidean magnitude.
pub fn atv_value(x: &Element) -> Result<f64> {
    let (m, n) = require_tv_shape("atv", x.shape())?;
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            if i + 1 < m {
                total += (x.at(i + 1, j) - x.at(i, j)).abs();
            }
            if j + 1 < n {
                total += (x.at(i, j + 1) - x.at(i, j)).abs();
            }
        }
    }
    Ok(total)
}

/// Sign-rule subgradient of [`atv_value`] with sign(0) = 0.
pub fn atv_subgradient(x: &Element) -> Result<Element> {
    let (m, n) = require_tv_shape("atv", x.shape())?;
    let mut g = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            if i + 1 < m {
                let s = sign(x.at(i + 1, j) - x.at(i, j));
                g[i * n + j] -= s;
                g[(i + 1) * n + j] += s;
            }
            if j + 1 < n {
                let s = sign(x.at(i, j + 1) - x.at(i, j));
                g[i * n + j] -= s;
                g[i * n + j + 1] += s;
            }
        }
    }
    Ok(Element::from_shape(x.shape(), g))
}

/// Ψ(x) = Σ f_i(A_i x) + Σ φ_j(W_j x) over a common domain.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    domain: Shape,
    smooth: Vec<(SmoothTerm, LinearMap)>,
    nonsmooth: Vec<(Regularizer, LinearMap)>,
}

impl CompositeProblem {
    pub fn new(
        domain: Shape,
        smooth: Vec<(SmoothTerm, LinearMap)>,
        nonsmooth: Vec<(Regularizer, LinearMap)>,
    ) -> Result<CompositeProblem> {
        if smooth.is_empty() && nonsmooth.is_empty() {
            return Err(Error::EmptyProblem);
        }
        for (term, op) in &smooth {
            if op.domain() != domain {
                return Err(Error::ShapeMismatch { expected: domain, actual: op.domain() });
            }
            term.validate(op.codomain())?;
        }
        for (reg, op) in &nonsmooth {
            if op.domain() != domain {
                return Err(Error::ShapeMismatch { expected: domain, actual: op.domain() });
            }
            reg.validate(op.codomain())?;
        }
        Ok(CompositeProblem { domain, smooth, nonsmooth })
    }

    pub fn domain(&self) -> Shape {
        self.domain
    }

    /// Number of (smooth, nonsmooth) terms.
    pub fn term_counts(&self) -> (usize, usize) {
        (self.smooth.len(), self.nonsmooth.len())
    }

    fn check_point(&self, x: &Element) -> Result<()> {
        if x.shape() != self.domain {
            return Err(Error::ShapeMismatch { expected: self.domain, actual: x.shape() });
        }
        Ok(())
    }

    /// Full oracle: value and one subgradient. Applies each of the n1+n2
    /// operators exactly once forward; at feasible points, exactly once in
    /// adjoint as well. At infeasible points the subgradient is zero and no
    /// adjoints are spent.
    pub fn nfo_fg(&self, x: &Element) -> Result<OracleResult> {
        self.check_point(x)?;
        let term_total = (self.smooth.len() + self.nonsmooth.len()) as u64;

        let mut value = 0.0;
        let mut feasible = true;
        let mut smooth_images = Vec::with_capacity(self.smooth.len());
        for (term, op) in &self.smooth {
            let v = op.apply(x)?;
            value += term.value(&v);
            smooth_images.push(v);
        }
        let mut reg_images = Vec::with_capacity(self.nonsmooth.len());
        for (reg, op) in &self.nonsmooth {
            let w = op.apply(x)?;
            match reg.evaluate(&w)? {
                OracleValue::Finite(v) => value += v,
                OracleValue::Infeasible => feasible = false,
            }
            reg_images.push(w);
        }

        if !feasible {
            return Ok(OracleResult {
                value: OracleValue::Infeasible,
                subgradient: Element::zeros(self.domain),
                counts: OpCounts { forward: term_total, adjoint: 0 },
            });
        }

        let mut g = Element::zeros(self.domain);
        for ((term, op), v) in self.smooth.iter().zip(&smooth_images) {
            g.add_scaled(1.0, &op.adjoint(&term.gradient(v))?);
        }
        for ((reg, op), w) in self.nonsmooth.iter().zip(&reg_images) {
            g.add_scaled(1.0, &op.adjoint(&reg.subgradient(w)?)?);
        }

        Ok(OracleResult {
            value: OracleValue::Finite(value),
            subgradient: g,
            counts: OpCounts { forward: term_total, adjoint: term_total },
        })
    }

    /// Value-only oracle; performs no adjoint applications.
    pub fn nfo_f(&self, x: &Element) -> Result<(OracleValue, OpCounts)> {
        self.check_point(x)?;
        let term_total = (self.smooth.len() + self.nonsmooth.len()) as u64;
        let mut value = 0.0;
        let mut feasible = true;
        for (term, op) in &self.smooth {
            value += term.value(&op.apply(x)?);
        }
        for (reg, op) in &self.nonsmooth {
            match reg.evaluate(&op.apply(x)?)? {
                OracleValue::Finite(v) => value += v,
                OracleValue::Infeasible => feasible = false,
            }
        }
        let value = if feasible { OracleValue::Finite(value) } else { OracleValue::Infeasible };
        Ok((value, OpCounts { forward: term_total, adjoint: 0 }))
    }

    /// Subgradient-only oracle. Meaningful at feasible points; at infeasible
    /// ones it returns zeros, mirroring [`CompositeProblem::nfo_fg`].
    pub fn nfo_g(&self, x: &Element) -> Result<(Element, OpCounts)> {
        let result = self.nfo_fg(x)?;
        Ok((result.subgradient, result.counts))
    }
}
