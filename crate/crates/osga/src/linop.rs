//! Linear operators with explicit adjoints.
//!
//! Every operator knows its domain and codomain shape and can be applied in
//! both directions: `apply` computes `A x` and `adjoint` computes `A* y`.
//! Solvers only ever touch operators through these two entry points, so a
//! problem built from identity, diagonal, mask, blur or composed pieces never
//! materialises a matrix. The adjoint pairing `<A x, y> = <x, A* y>` is the
//! load-bearing contract; [`LinearMap::adjoint_consistency`] measures how well
//! an operator honours it on random probes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::element::{Element, Shape};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Kind {
    Identity,
    Dense { rows: usize, cols: usize, entries: Vec<f64> },
    Diagonal { weights: Vec<f64> },
    Mask { keep: Vec<bool> },
    Blur2d { half_width: usize },
    Composition { outer: Box<LinearMap>, inner: Box<LinearMap> },
    Scaled { factor: f64, inner: Box<LinearMap> },
}

/// A linear operator between two shaped spaces.
#[derive(Clone, Debug)]
pub struct LinearMap {
    domain: Shape,
    codomain: Shape,
    kind: Kind,
}

impl LinearMap {
    /// Identity on `shape`.
    pub fn identity(shape: Shape) -> LinearMap {
        LinearMap { domain: shape, codomain: shape, kind: Kind::Identity }
    }

    /// Dense `rows x cols` matrix acting on vectors, entries given row-major.
    pub fn dense(rows: usize, cols: usize, entries: Vec<f64>) -> Result<LinearMap> {
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "dense operator needs {} entries for {rows}x{cols}, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(LinearMap {
            domain: Shape::vector(cols),
            codomain: Shape::vector(rows),
            kind: Kind::Dense { rows, cols, entries },
        })
    }

    /// Entrywise multiplication by `weights`; self-adjoint.
    pub fn diagonal(shape: Shape, weights: Vec<f64>) -> Result<LinearMap> {
        if weights.len() != shape.count() {
            return Err(Error::invalid(format!(
                "diagonal operator needs {} weights for {shape}, got {}",
                shape.count(),
                weights.len()
            )));
        }
        Ok(LinearMap { domain: shape, codomain: shape, kind: Kind::Diagonal { weights } })
    }

    /// Subsampling: keeps the entries flagged `true`, in storage order, as a
    /// vector. The adjoint scatters back and zero-fills dropped positions.
    pub fn mask(domain: Shape, keep: Vec<bool>) -> Result<LinearMap> {
        if keep.len() != domain.count() {
            return Err(Error::invalid(format!(
                "mask pattern has {} flags but domain {domain} has {} entries",
                keep.len(),
                domain.count()
            )));
        }
        let kept = keep.iter().filter(|&&k| k).count();
        if kept == 0 {
            return Err(Error::invalid("mask keeps no entries".to_string()));
        }
        Ok(LinearMap { domain, codomain: Shape::vector(kept), kind: Kind::Mask { keep } })
    }

    /// Uniform box blur on `rows x cols` images with a `(2k+1) x (2k+1)`
    /// kernel whose weights sum to one. Out-of-range indices are folded back
    /// by symmetric reflection (`-1 -> 0`, `rows -> rows-1`, ...), so constant
    /// images and pixel means are preserved exactly.
    pub fn blur2d(rows: usize, cols: usize, half_width: usize) -> Result<LinearMap> {
        if rows < 1 || cols < 1 {
            return Err(Error::invalid("blur2d needs a nonempty image".to_string()));
        }
        let shape = Shape::matrix(rows, cols);
        Ok(LinearMap { domain: shape, codomain: shape, kind: Kind::Blur2d { half_width } })
    }

    /// `outer . inner`, applying `inner` first.
    pub fn compose(outer: LinearMap, inner: LinearMap) -> Result<LinearMap> {
        if outer.domain != inner.codomain {
            return Err(Error::CompositionMismatch {
                outer_domain: outer.domain,
                inner_codomain: inner.codomain,
            });
        }
        Ok(LinearMap {
            domain: inner.domain,
            codomain: outer.codomain,
            kind: Kind::Composition { outer: Box::new(outer), inner: Box::new(inner) },
        })
    }

    /// `factor * inner`.
    pub fn scaled(factor: f64, inner: LinearMap) -> LinearMap {
        LinearMap {
            domain: inner.domain,
            codomain: inner.codomain,
            kind: Kind::Scaled { factor, inner: Box::new(inner) },
        }
    }

    pub fn domain(&self) -> Shape {
        self.domain
    }

    pub fn codomain(&self) -> Shape {
        self.codomain
    }

    /// Forward application `A x`.
    pub fn apply(&self, x: &Element) -> Result<Element> {
        if x.shape() != self.domain {
            return Err(Error::ShapeMismatch { expected: self.domain, actual: x.shape() });
        }
        Ok(match &self.kind {
            Kind::Identity => x.clone(),
            Kind::Dense { rows, cols, entries } => {
                let mut out = vec![0.0; *rows];
                let xs = x.data();
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &entries[i * cols..(i + 1) * cols];
                    *o = row.iter().zip(xs).map(|(a, b)| a * b).sum();
                }
                Element::from_vec(out)
            }
            Kind::Diagonal { weights } => {
                let data = x.data().iter().zip(weights).map(|(v, w)| v * w).collect();
                Element::from_shape(self.codomain, data)
            }
            Kind::Mask { keep } => {
                let data = x
                    .data()
                    .iter()
                    .zip(keep)
                    .filter_map(|(v, &k)| k.then_some(*v))
                    .collect();
                Element::from_shape(self.codomain, data)
            }
            Kind::Blur2d { half_width } => {
                let (rows, cols) = match self.domain {
                    Shape::Matrix { rows, cols } => (rows, cols),
                    Shape::Vector { .. } => unreachable!("blur2d domain is a matrix"),
                };
                blur_apply(x.data(), rows, cols, *half_width, self.codomain)
            }
            Kind::Composition { outer, inner } => outer.apply(&inner.apply(x)?)?,
            Kind::Scaled { factor, inner } => inner.apply(x)?.scaled(*factor),
        })
    }

    /// Adjoint application `A* y`.
    pub fn adjoint(&self, y: &Element) -> Result<Element> {
        if y.shape() != self.codomain {
            return Err(Error::ShapeMismatch { expected: self.codomain, actual: y.shape() });
        }
        Ok(match &self.kind {
            Kind::Identity => y.clone(),
            Kind::Dense { rows, cols, entries } => {
                let mut out = vec![0.0; *cols];
                let ys = y.data();
                for i in 0..*rows {
                    let row = &entries[i * cols..(i + 1) * cols];
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * ys[i];
                    }
                }
                Element::from_vec(out)
            }
            Kind::Diagonal { weights } => {
                let data = y.data().iter().zip(weights).map(|(v, w)| v * w).collect();
                Element::from_shape(self.domain, data)
            }
            Kind::Mask { keep } => {
                let mut data = vec![0.0; self.domain.count()];
                let mut ys = y.data().iter();
                for (slot, &k) in data.iter_mut().zip(keep) {
                    if k {
                        *slot = *ys.next().expect("mask codomain length matches kept count");
                    }
                }
                Element::from_shape(self.domain, data)
            }
            Kind::Blur2d { half_width } => {
                let (rows, cols) = match self.domain {
                    Shape::Matrix { rows, cols } => (rows, cols),
                    Shape::Vector { .. } => unreachable!("blur2d domain is a matrix"),
                };
                blur_adjoint(y.data(), rows, cols, *half_width, self.domain)
            }
            Kind::Composition { outer, inner } => inner.adjoint(&outer.adjoint(y)?)?,
            Kind::Scaled { factor, inner } => inner.adjoint(y)?.scaled(*factor),
        })
    }

    /// Largest relative defect of the adjoint pairing over random probes:
    /// `|<A x, y> - <x, A* y>| / (1 + |<A x, y>|)`, maximised over `trials`
    /// draws of `x` and `y` with entries uniform on `[-1, 1]`.
    pub fn adjoint_consistency(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..trials {
            let x = random_element(self.domain, &mut rng);
            let y = random_element(self.codomain, &mut rng);
            let ax = self.apply(&x).expect("probe drawn from the operator domain");
            let aty = self.adjoint(&y).expect("probe drawn from the operator codomain");
            let lhs = ax.dot(&y);
            let rhs = x.dot(&aty);
            worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
        worst
    }
}

fn random_element(shape: Shape, rng: &mut ChaCha8Rng) -> Element {
    let data = (0..shape.count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Element::from_shape(shape, data)
}

/// Fold an index back into `0..n` by symmetric reflection about the edges.
fn reflect(mut idx: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if idx < 0 {
            idx = -1 - idx;
        } else if idx >= n {
            idx = 2 * n - 1 - idx;
        } else {
            return idx as usize;
        }
    }
}

/// One-dimensional uniform blur along a strided axis: `out[i]` averages the
/// `2k+1` reflected neighbours of `i`.
fn blur_axis(src: &[f64], dst: &mut [f64], n: usize, lanes: usize, stride: usize, lane_stride: usize, k: usize) {
    let w = 1.0 / (2 * k + 1) as f64;
    for lane in 0..lanes {
        let base = lane * lane_stride;
        for i in 0..n {
            let mut acc = 0.0;
            for d in -(k as isize)..=(k as isize) {
                acc += src[base + reflect(i as isize + d, n) * stride];
            }
            dst[base + i * stride] = acc * w;
        }
    }
}

/// Transpose of [`blur_axis`]: scatter `w * src[i]` into the reflected
/// neighbour positions.
fn blur_axis_adjoint(src: &[f64], dst: &mut [f64], n: usize, lanes: usize, stride: usize, lane_stride: usize, k: usize) {
    let w = 1.0 / (2 * k + 1) as f64;
    for lane in 0..lanes {
        let base = lane * lane_stride;
        for i in 0..n {
            let v = src[base + i * stride] * w;
            for d in -(k as isize)..=(k as isize) {
                dst[base + reflect(i as isize + d, n) * stride] += v;
            }
        }
    }
}

fn blur_apply(x: &[f64], rows: usize, cols: usize, k: usize, shape: Shape) -> Element {
    // The square kernel separates into a horizontal then a vertical pass, and
    // symmetric reflection folds each axis independently.
    let mut tmp = vec![0.0; x.len()];
    blur_axis(x, &mut tmp, cols, rows, 1, cols, k);
    let mut out = vec![0.0; x.len()];
    blur_axis(&tmp, &mut out, rows, cols, cols, 1, k);
    Element::from_shape(shape, out)
}

fn blur_adjoint(y: &[f64], rows: usize, cols: usize, k: usize, shape: Shape) -> Element {
    let mut tmp = vec![0.0; y.len()];
    blur_axis_adjoint(y, &mut tmp, rows, cols, cols, 1, k);
    let mut out = vec![0.0; y.len()];
    blur_axis_adjoint(&tmp, &mut out, cols, rows, 1, cols, k);
    Element::from_shape(shape, out)
}
