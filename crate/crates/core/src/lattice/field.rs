use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use super::LatticeBox;
use crate::error::{Error, Result};

/// Field value type: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn abs_sq(self) -> f64;
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Values of a function at the interior nodes of a [`LatticeBox`], extended
/// by zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T: Scalar = f64> {
    domain: LatticeBox,
    values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn zeros(domain: &LatticeBox) -> Self {
        Self {
            values: vec![T::zero(); domain.len()],
            domain: domain.clone(),
        }
    }

    pub fn from_values(domain: &LatticeBox, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::BoxMismatch(format!(
                "{} values for a box of {} nodes",
                values.len(),
                domain.len()
            )));
        }
        Ok(Self {
            domain: domain.clone(),
            values,
        })
    }

    /// Samples `f` at the coordinates of every interior node.
    pub fn from_fn(domain: &LatticeBox, mut f: impl FnMut(&[f64]) -> T) -> Self {
        let values = (0..domain.len()).map(|p| f(&domain.point(p))).collect();
        Self {
            domain: domain.clone(),
            values,
        }
    }

    /// Samples `f` at the integer index of every interior node.
    pub fn from_index_fn(domain: &LatticeBox, mut f: impl FnMut(&[i64]) -> T) -> Self {
        let mut idx = vec![0; domain.dim()];
        let values = (0..domain.len())
            .map(|p| {
                domain.index_into(p, &mut idx);
                f(&idx)
            })
            .collect();
        Self {
            domain: domain.clone(),
            values,
        }
    }

    pub fn domain(&self) -> &LatticeBox {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Value at an integer index; exactly zero outside the box.
    pub fn at(&self, index: &[i64]) -> T {
        self.domain
            .position(index)
            .map_or_else(T::zero, |p| self.values[p])
    }

    /// Value at a lattice point given by coordinates.
    pub fn eval(&self, x: &[f64]) -> Result<T> {
        Ok(self.at(&self.domain.lattice_index(x)?))
    }

    /// `Σ |u(x)|^2` over the lattice, without an `h^d` weight.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.abs_sq()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ |u(x)|^2` over the nodes where `keep` is true.
    pub fn masked_norm_sq(&self, keep: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(v, _)| v.abs_sq())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.abs_sq().sqrt())
            .fold(0.0, f64::max)
    }

    /// Values of the zero extension at the interior nodes of `target`.
    pub fn restrict_to(&self, target: &LatticeBox) -> Result<Self> {
        if target.dim() != self.domain.dim() || target.h() != self.domain.h() {
            return Err(Error::BoxMismatch(
                "restriction target must share dimension and mesh".into(),
            ));
        }
        Ok(Self::from_index_fn(target, |k| self.at(k)))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same box.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.same_box(other)?;
        Ok(Self {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v.scale(s))
    }

    pub(crate) fn same_box(&self, other: &Self) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(Error::BoxMismatch(format!(
                "{} vs {}",
                self.domain.key(),
                other.domain.key()
            )))
        }
    }
}

impl ScalarField<f64> {
    /// Lifts a real field to a complex one.
    pub fn to_complex(&self) -> ScalarField<Complex64> {
        ScalarField {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Unit spike at the given index.
    pub fn delta(domain: &LatticeBox, index: &[i64]) -> Result<Self> {
        let pos = domain
            .position(index)
            .ok_or_else(|| Error::Domain(format!("index {index:?} is not an interior node")))?;
        let mut f = Self::zeros(domain);
        f.values[pos] = 1.0;
        Ok(f)
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.same_box(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }
}
