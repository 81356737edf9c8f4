//! Quadratic prox-functions and the closed-form auxiliary subproblem.
//!
//! A [`QuadraticProx`] is
//!
//!   Q(z) = Q0 + (σ/2) Σ w_k (z_k − z0_k)²,   Q0 > 0, σ > 0, w_k > 0,
//!
//! with center z0 and optional diagonal weights (absent means all ones; on
//! matrix shapes the sum runs over all entries, which is the Frobenius case).
//! Q is σ-strongly convex in the weighted norm and attains its positive
//! minimum Q0 at z0.
//!
//! The solver needs, for an affine lower bound γ + ⟨h, z⟩ on the objective,
//! the quantities
//!
//!   E(γ,h) = sup_z −(γ + ⟨h, z⟩) / Q(z),   U(γ,h) = the maximizing z,
//!
//! which [`QuadraticProx::solve_subproblem`] returns in closed form. Writing
//! e = E(γ,h), stationarity of the ratio gives e·Q(u) + γ + ⟨h,u⟩ = 0 and
//! ∇Q(u)·e = −h, so u = z0 − e⁻¹σ⁻¹D⁻¹h; substituting u back yields the
//! scalar quadratic
//!
//!   Q0·e² + β1·e + β2 = 0,   β1 = γ + ⟨h, z0⟩,   β2 = −‖h‖²_{*D} / (2σ),
//!
//! with ‖h‖²_{*D} = Σ h_k²/w_k. Since β2 ≤ 0 the discriminant β1² − 4·Q0·β2
//! is never negative and the largest root is the supremum. For h = 0 the
//! ratio is maximized by letting Q grow, so E = max(0, −γ/Q0) with u = z0.

use crate::element::{Element, Shape};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct QuadraticProx {
    q0: f64,
    sigma: f64,
    center: Element,
    weights: Option<Vec<f64>>,
}

/// Result of [`QuadraticProx::solve_subproblem`]: the supremum `e = E(γ,h)`
/// and its maximizer `u = U(γ,h)`. When `e` is 0 the supremum is only
/// approached in the limit and `u` is the center by convention.
#[derive(Clone, Debug)]
pub struct SubproblemSolution {
    pub e: f64,
    pub u: Element,
}

impl QuadraticProx {
    pub fn new(q0: f64, sigma: f64, center: Element) -> Result<QuadraticProx> {
        if !(q0 > 0.0 && q0.is_finite()) {
            return Err(Error::invalid("prox-function offset Q0 must be finite and positive"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("prox-function parameter sigma must be finite and positive"));
        }
        Ok(QuadraticProx { q0, sigma, center, weights: None })
    }

    pub fn with_weights(
        q0: f64,
        sigma: f64,
        center: Element,
        weights: Vec<f64>,
    ) -> Result<QuadraticProx> {
        let mut prox = QuadraticProx::new(q0, sigma, center)?;
        if weights.len() != prox.center.len() {
            return Err(Error::invalid("preconditioner weights must match the center length"));
        }
        if !weights.iter().all(|w| *w > 0.0 && w.is_finite()) {
            return Err(Error::invalid("preconditioner weights must be finite and positive"));
        }
        prox.weights = Some(weights);
        Ok(prox)
    }

    /// The standard solver default centered at the starting point:
    /// Q0 = ½‖x0‖ + machine epsilon, σ = 1, unit weights.
    pub fn default_prox(x0: &Element) -> QuadraticProx {
        let q0 = 0.5 * x0.norm() + f64::EPSILON;
        QuadraticProx { q0, sigma: 1.0, center: x0.clone(), weights: None }
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn center(&self) -> &Element {
        &self.center
    }

    pub fn domain(&self) -> Shape {
        self.center.shape()
    }

    fn weight(&self, k: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[k])
    }

    fn check_shape(&self, z: &Element) -> Result<()> {
        if z.shape() != self.center.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.center.shape(),
                actual: z.shape(),
            });
        }
        Ok(())
    }

    pub fn value(&self, z: &Element) -> Result<f64> {
        self.check_shape(z)?;
        let spread: f64 = z
            .data()
            .iter()
            .zip(self.center.data())
            .enumerate()
            .map(|(k, (zk, ck))| self.weight(k) * (zk - ck) * (zk - ck))
            .sum();
        Ok(self.q0 + 0.5 * self.sigma * spread)
    }

    pub fn gradient(&self, z: &Element) -> Result<Element> {
        self.check_shape(z)?;
        let data = z
            .data()
            .iter()
            .zip(self.center.data())
            .enumerate()
            .map(|(k, (zk, ck))| self.sigma * self.weight(k) * (zk - ck))
            .collect();
        Ok(Element::from_shape(z.shape(), data))
    }

    /// Squared dual norm ‖h‖²_{*D} = Σ h_k² / w_k.
    fn dual_norm_sq(&self, h: &Element) -> f64 {
        h.data()
            .iter()
            .enumerate()
            .map(|(k, hk)| hk * hk / self.weight(k))
            .sum()
    }

    pub fn solve_subproblem(&self, gamma: f64, h: &Element) -> Result<SubproblemSolution> {
        self.check_shape(h)?;
        let dual_sq = self.dual_norm_sq(h);
        if dual_sq == 0.0 {
            let e = (-gamma / self.q0).max(0.0);
            return Ok(SubproblemSolution { e, u: self.center.clone() });
        }

        let beta1 = gamma + h.dot(&self.center);
        let beta2 = -dual_sq / (2.0 * self.sigma);
        let root = (beta1 * beta1 - 4.0 * self.q0 * beta2).sqrt();
        // The two branches compute the same (largest) root; picking by the
        // sign of beta1 avoids subtracting nearly equal quantities.
        let e = if beta1 > 0.0 {
            2.0 * (-beta2) / (beta1 + root)
        } else {
            (-beta1 + root) / (2.0 * self.q0)
        };

        let scale = 1.0 / (e * self.sigma);
        let data = self
            .center
            .data()
            .iter()
            .zip(h.data())
            .enumerate()
            .map(|(k, (ck, hk))| ck - scale * hk / self.weight(k))
            .collect();
        Ok(SubproblemSolution { e, u: Element::from_shape(self.center.shape(), data) })
    }
}
