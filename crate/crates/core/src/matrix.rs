//! Dense complex matrices.
//!
//! [`ComplexMatrix`] is the carrier for every space in the toolkit: the two
//! algebras acting on the left and right, the module `M` of `n x m` matrices
//! and the reverse module `K` of `m x n` matrices. Entries are always finite;
//! constructors that accept external data check this.
//!
//! Vectorization is column-stacking throughout: entry `(i, j)` of an `r x c`
//! matrix lands at position `i + j * r`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    /// Wraps an nalgebra matrix after checking shape and finiteness.
    pub fn try_new(inner: DMatrix<Complex64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "matrices must be non-empty, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        for j in 0..inner.ncols() {
            for i in 0..inner.nrows() {
                let z = inner[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self(inner))
    }

    /// Internal constructor for results of arithmetic on already validated
    /// matrices.
    pub(crate) fn from_inner(inner: DMatrix<Complex64>) -> Self {
        Self(inner)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn scalar(z: Complex64) -> Self {
        Self(DMatrix::from_element(1, 1, z))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds a matrix from complex rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("rows have different lengths".into()));
        }
        Self::try_new(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Reassembles a column-stacked vector into a `rows x cols` matrix.
    pub fn from_vec(v: &DVector<Complex64>, rows: usize, cols: usize) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "vector of length {} cannot be reshaped to {rows}x{cols}",
                v.len()
            )));
        }
        Self::try_new(DMatrix::from_column_slice(rows, cols, v.as_slice()))
    }

    /// Column-stacking vectorization.
    pub fn vec(&self) -> DVector<Complex64> {
        DVector::from_column_slice(self.0.as_slice())
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn as_inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.nrows())
            .map(|i| (0..self.ncols()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.0.diagonal().iter().copied().collect()
    }

    pub fn norm_fro(&self) -> f64 {
        self.0.norm()
    }

    /// Spectral norm (largest singular value).
    pub fn norm2(&self) -> f64 {
        self.0
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self(&self.0 * z)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(Complex64::new(x, 0.0))
    }

    /// `self + lambda * I` for square matrices.
    pub fn shift_diagonal(&self, lambda: Complex64) -> Self {
        let mut out = self.0.clone();
        for i in 0..out.nrows().min(out.ncols()) {
            out[(i, i)] += lambda;
        }
        Self(out)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut out = Self::identity(self.nrows());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Inverse via partial-pivot LU. Fails on exactly singular input and when
    /// the pivot ratio signals numerical singularity.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "cannot invert a {}x{} matrix",
                self.nrows(),
                self.ncols()
            )));
        }
        let lu = LU::new(self.0.clone());
        let u = lu.u();
        let diag: Vec<f64> = u.diagonal().iter().map(|z| z.norm()).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if max == 0.0 || min <= max * f64::EPSILON * self.nrows() as f64 {
            return Err(Error::Singular(format!(
                "pivot ratio {:.3e} below working precision",
                if max == 0.0 { 0.0 } else { min / max }
            )));
        }
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Singular("LU factor has a zero pivot".into()))?;
        if !inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Singular("inverse overflowed".into()));
        }
        Ok(Self(inv))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// Copies `block` into `self` with its top-left corner at `(row, col)`.
    pub(crate) fn set_block(&mut self, row: usize, col: usize, block: &Self) {
        self.0
            .view_mut((row, col), block.shape())
            .copy_from(&block.0);
    }

    pub(crate) fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Self(self.0.view((row, col), (rows, cols)).into_owned())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.nrows(), self.ncols())?;
        for i in 0..self.nrows() {
            write!(f, "  ")?;
            for j in 0..self.ncols() {
                let z = self.0[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op rhs.0)
            }
        }
        impl $trait<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(self.0 $op &rhs.0)
            }
        }
        impl $trait<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-self.0)
    }
}

// Wire format: row-major nested arrays of `[re, im]` pairs.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.nrows())
            .map(|i| {
                (0..self.ncols())
                    .map(|j| {
                        let z = self.0[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&complex).map_err(D::Error::custom)
    }
}

/// `[left | right]`.
pub(crate) fn hstack(left: &ComplexMatrix, right: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.set_block(0, 0, left);
    out.set_block(0, left.ncols(), right);
    out
}

/// `[top; bottom]`.
pub(crate) fn vstack(top: &ComplexMatrix, bottom: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.set_block(0, 0, top);
    out.set_block(top.nrows(), 0, bottom);
    out
}

/// Relative difference `|x - y| / max(|x|, |y|, floor)`.
pub fn relative_difference(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    let scale = x.norm_fro().max(y.norm_fro()).max(f64::MIN_POSITIVE);
    x.distance(y) / scale
}

/// `residual / scale`, with `0/0` read as an exact match.
pub fn ratio(residual: f64, scale: f64) -> f64 {
    if residual == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        residual / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_is_column_stacking() {
        let x = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let v: Vec<f64> = x.vec().iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(ComplexMatrix::from_vec(&x.vec(), 2, 3).unwrap(), x);
    }

    #[test]
    fn rejects_non_finite_and_ragged_input() {
        let nan = Complex64::new(f64::NAN, 0.0);
        assert_eq!(
            ComplexMatrix::from_rows(&[vec![ONE, nan]]),
            Err(Error::NonFinite { row: 0, col: 1 })
        );
        assert!(matches!(
            ComplexMatrix::from_rows(&[vec![ONE, ONE], vec![ONE]]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            ComplexMatrix::from_rows(&[]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn inverse_of_singular_matrix_fails() {
        let s = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(s.inverse(), Err(Error::Singular(_))));
        let a = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[0.0, 3.0]]).unwrap();
        let prod = &a * &a.inverse().unwrap();
        assert!(prod.distance(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn serde_uses_re_im_pairs() {
        let x = ComplexMatrix::from_rows(&[vec![Complex64::new(1.5, -2.0)]]).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, "[[[1.5,-2.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1,0]],[[1,0],[2,0]]]").is_err());
    }
}
