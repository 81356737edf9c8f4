//! Dense vectors and row-major matrices behind a single value type.
//!
//! Solvers treat both as points in a Euclidean space: the inner product is
//! the ordinary dot product on the flattened data, so the matrix norm is the
//! Frobenius norm. Shape is carried alongside the data and checked at the
//! public entry points of operators and oracles.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Dimensions of an [`Element`]: a vector of a given length or an
/// `rows x cols` matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Vector { len: usize },
    Matrix { rows: usize, cols: usize },
}

impl Shape {
    pub fn vector(len: usize) -> Self {
        assert!(len >= 1, "vector length must be at least 1");
        Shape::Vector { len }
    }

    pub fn matrix(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be at least 1");
        Shape::Matrix { rows, cols }
    }

    /// Total number of scalar entries.
    pub fn count(&self) -> usize {
        match *self {
            Shape::Vector { len } => len,
            Shape::Matrix { rows, cols } => rows * cols,
        }
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, Shape::Matrix { .. })
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Shape::Vector { len } => write!(f, "vector({len})"),
            Shape::Matrix { rows, cols } => write!(f, "matrix({rows}x{cols})"),
        }
    }
}

/// A point in the solver's space: flat `f64` storage plus a [`Shape`].
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    shape: Shape,
    data: Vec<f64>,
}

impl Element {
    pub fn zeros(shape: Shape) -> Self {
        Element { shape, data: vec![0.0; shape.count()] }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        let shape = Shape::vector(data.len());
        Element { shape, data }
    }

    pub fn from_matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        let shape = Shape::matrix(rows, cols);
        assert_eq!(data.len(), shape.count(), "matrix data length mismatch");
        Element { shape, data }
    }

    pub fn from_shape(shape: Shape, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), shape.count(), "data length does not match shape");
        Element { shape, data }
    }

    /// Constant element with every entry equal to `value`.
    pub fn filled(shape: Shape, value: f64) -> Self {
        Element { shape, data: vec![value; shape.count()] }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Entry of a matrix element at `(row, col)`.
    pub fn at(&self, row: usize, col: usize) -> f64 {
        match self.shape {
            Shape::Matrix { rows, cols } => {
                assert!(row < rows && col < cols, "matrix index out of bounds");
                self.data[row * cols + col]
            }
            Shape::Vector { .. } => panic!("at() requires a matrix element"),
        }
    }

    pub fn dot(&self, other: &Element) -> f64 {
        assert_eq!(self.shape, other.shape, "dot of mismatched shapes");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Euclidean norm (Frobenius for matrices).
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Element {
        Element { shape: self.shape, data: self.data.iter().map(|v| c * v).collect() }
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &Element) {
        assert_eq!(self.shape, other.shape, "add_scaled of mismatched shapes");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// `a*x + b*y` as a new element.
    pub fn combine(a: f64, x: &Element, b: f64, y: &Element) -> Element {
        assert_eq!(x.shape, y.shape, "combine of mismatched shapes");
        let data = x.data.iter().zip(&y.data).map(|(p, q)| a * p + b * q).collect();
        Element { shape: x.shape, data }
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        Element::combine(1.0, self, 1.0, rhs)
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        Element::combine(1.0, self, -1.0, rhs)
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &Element {
    type Output = Element;
    fn mul(self, rhs: f64) -> Element {
        self.scaled(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_counts() {
        assert_eq!(Shape::vector(5).count(), 5);
        assert_eq!(Shape::matrix(3, 4).count(), 12);
        assert!(Shape::matrix(3, 4).is_matrix());
        assert!(!Shape::vector(5).is_matrix());
    }

    #[test]
    fn display_names_dimensions() {
        assert_eq!(Shape::vector(7).to_string(), "vector(7)");
        assert_eq!(Shape::matrix(2, 9).to_string(), "matrix(2x9)");
    }

    #[test]
    #[should_panic(expected = "at least 1")]
    fn zero_length_vector_rejected() {
        let _ = Shape::vector(0);
    }

    #[test]
    fn dot_and_norms() {
        let x = Element::from_vec(vec![3.0, -4.0]);
        let y = Element::from_vec(vec![1.0, 2.0]);
        assert_eq!(x.dot(&y), -5.0);
        assert_eq!(x.norm(), 5.0);
        assert_eq!(x.inf_norm(), 4.0);
    }

    #[test]
    fn matrix_norm_is_frobenius() {
        let m = Element::from_matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert!((m.norm() - 30.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.at(1, 0), 3.0);
    }

    #[test]
    fn arithmetic_ops() {
        let x = Element::from_vec(vec![1.0, 2.0]);
        let y = Element::from_vec(vec![3.0, -1.0]);
        assert_eq!((&x + &y).data(), &[4.0, 1.0]);
        assert_eq!((&x - &y).data(), &[-2.0, 3.0]);
        assert_eq!((&x * 2.0).data(), &[2.0, 4.0]);
        assert_eq!((-&x).data(), &[-1.0, -2.0]);

        let mut z = x.clone();
        z.add_scaled(0.5, &y);
        assert_eq!(z.data(), &[2.5, 1.5]);
        assert_eq!(Element::combine(2.0, &x, -1.0, &y).data(), &[-1.0, 5.0]);
    }

    #[test]
    #[should_panic(expected = "mismatched shapes")]
    fn dot_rejects_shape_mismatch() {
        let x = Element::from_vec(vec![1.0, 2.0]);
        let m = Element::from_matrix(1, 2, vec![1.0, 2.0]);
        let _ = x.dot(&m);
    }
}
