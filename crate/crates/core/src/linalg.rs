//! Dense complex matrices and the handful of matrix functions the rest of
//! the crate is built on: matrix exponential, spectral norms, Hermitian
//! eigendecomposition and column-stacking vectorization.
//!
//! Storage is a [`nalgebra::DMatrix`] behind the [`ComplexMatrix`] newtype.
//! LU solves, SVD and the Hermitian eigensolver are nalgebra's; the
//! exponential is a Padé(13) scaling-and-squaring implementation local to
//! this module.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance used when checking Hermiticity (scaled by the norm).
pub const HERMITIAN_TOL: f64 = 1e-10;

/// A dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid("matrix dimensions must be positive");
        }
        if entries.len() != rows * cols {
            return invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            ));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return invalid("matrix entries must be finite");
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    /// Builds a real matrix from nested rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return invalid("ragged rows");
        }
        let entries = rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect();
        Self::new(r, c, entries)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let n = d.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(d[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn diag(d: &[C64]) -> Self {
        let n = d.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// A column vector.
    pub fn column(v: &[C64]) -> Self {
        Self(DMatrix::from_column_slice(v.len(), 1, v))
    }

    pub fn column_real(v: &[f64]) -> Self {
        Self(DMatrix::from_iterator(
            v.len(),
            1,
            v.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    /// The `i`-th standard basis column of length `n`.
    pub fn basis_column(n: usize, i: usize) -> Self {
        let mut m = Self::zeros(n, 1);
        m.0[(i, 0)] = C64::new(1.0, 0.0);
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.0[(i, j)] = z;
    }

    /// Row-major copy of the entries.
    pub fn entries_row_major(&self) -> Vec<C64> {
        (0..self.rows())
            .flat_map(|i| (0..self.cols()).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(&self.0 * C64::new(c, 0.0))
    }

    pub fn scale_complex(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Frobenius norm; the Euclidean norm for column vectors.
    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        if !self.is_square() || self.rows() != other.rows() || !other.is_square() {
            return invalid("commutator needs equal square shapes");
        }
        Ok(Self(&self.0 * &other.0 - &other.0 * &self.0))
    }

    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let defect = (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        defect <= rel_tol * self.frobenius_norm().max(1.0)
    }

    /// Matrix inverse via LU; fails on (numerically) singular input.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return invalid("inverse of a non-square matrix");
        }
        self.0
            .clone()
            .lu()
            .try_inverse()
            .filter(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
            .map(Self)
            .ok_or_else(|| Error::Numerical("singular matrix".into()))
    }

    /// Solves `self · X = rhs`.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        if !self.is_square() || self.rows() != rhs.rows() {
            return invalid("solve: shape mismatch");
        }
        self.0
            .clone()
            .lu()
            .solve(&rhs.0)
            .map(Self)
            .ok_or_else(|| Error::Numerical("singular matrix".into()))
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.rows() == other.rows() && self.cols() == other.cols()
    }

    /// Checked product; the `*` operator panics on mismatch instead.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            ));
        }
        Ok(Self(&self.0 * &other.0))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        if !self.same_shape(other) {
            return invalid("subtraction shape mismatch");
        }
        Ok(Self(&self.0 - &other.0))
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "[")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}{:+}i", z.re, z.im)?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Wire format: `{"rows": r, "cols": c, "re": [...], "im": [...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self.entries_row_major();
        MatrixJson {
            rows: self.rows(),
            cols: self.cols(),
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        if raw.re.len() != raw.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let entries = raw
            .re
            .iter()
            .zip(&raw.im)
            .map(|(&a, &b)| C64::new(a, b))
            .collect();
        ComplexMatrix::new(raw.rows, raw.cols, entries).map_err(serde::de::Error::custom)
    }
}

/// Parses either the `{"rows","cols","re","im"}` object or a nested array of
/// real rows such as `[[-1, 0], [0, -2]]`.
pub fn parse_matrix_json(text: &str) -> Result<ComplexMatrix> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.is_array() {
        let rows: Vec<Vec<f64>> = serde_json::from_value(value)?;
        ComplexMatrix::from_real_rows(&rows)
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

// Padé(13) numerator coefficients (Higham 2005).
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{tA}` by scaling and squaring with a Padé(13) approximant.
///
/// Accurate to about 1e-12 relative for `‖tA‖ ≤ 20`; larger arguments are
/// accepted but carry no accuracy guarantee.
pub fn mat_exp(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return invalid("mat_exp needs a square matrix");
    }
    if !t.is_finite() {
        return invalid("mat_exp: t must be finite");
    }
    let n = a.rows();
    let mut m = &a.0 * C64::new(t, 0.0);
    let norm = one_norm(&m);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if squarings > 0 {
        m *= C64::new(2f64.powi(-squarings), 0.0);
    }

    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let id = DMatrix::<C64>::identity(n, n);
    let m2 = &m * &m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;

    let u_inner = &m6 * (&m6 * b(13) + &m4 * b(11) + &m2 * b(9))
        + &m6 * b(7)
        + &m4 * b(5)
        + &m2 * b(3)
        + &id * b(1);
    let u = &m * u_inner;
    let v = &m6 * (&m6 * b(12) + &m4 * b(10) + &m2 * b(8))
        + &m6 * b(6)
        + &m4 * b(4)
        + &m2 * b(2)
        + &id * b(0);

    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::Numerical("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(ComplexMatrix(r))
}

fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    a.0.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &ComplexMatrix) -> f64 {
    if a.max_abs() == 0.0 {
        return 0.0;
    }
    singular_values(a).into_iter().fold(0.0, f64::max)
}

/// Trace norm (sum of singular values) of a square matrix.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return invalid("trace_norm needs a square matrix");
    }
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    Ok(singular_values(a).into_iter().sum())
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary whose columns are the matching eigenvectors.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermEig {
    /// `U diag(f(λ)) U†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let d: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        &(u * &ComplexMatrix::diag(&d)) * &u.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| C64::new(l, 0.0))
    }
}

pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig> {
    if !h.is_square() {
        return invalid("herm_eig needs a square matrix");
    }
    if !h.is_hermitian(HERMITIAN_TOL) {
        return invalid("herm_eig: matrix is not Hermitian");
    }
    let eig = nalgebra::SymmetricEigen::new(h.hermitian_part().0);
    let n = h.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermEig {
        eigenvalues,
        eigenvectors: ComplexMatrix(vectors),
    })
}

/// Stacks the columns of a square matrix into one column.
pub fn vectorize(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x.is_square() {
        return invalid("vectorize needs a square matrix");
    }
    // nalgebra storage is column-major, which is exactly column stacking.
    Ok(ComplexMatrix(DMatrix::from_column_slice(
        x.rows() * x.cols(),
        1,
        x.0.as_slice(),
    )))
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &ComplexMatrix) -> Result<ComplexMatrix> {
    if v.cols() != 1 {
        return invalid("devectorize needs a column");
    }
    let len = v.rows();
    let d = (len as f64).sqrt().round() as usize;
    if d * d != len {
        return invalid(format!("column length {len} is not a perfect square"));
    }
    Ok(ComplexMatrix(DMatrix::from_column_slice(
        d,
        d,
        v.0.as_slice(),
    )))
}

/// Superoperator of `X ↦ P X Q` under column stacking: `Qᵀ ⊗ P`.
pub fn sandwich_superoperator(p: &ComplexMatrix, q: &ComplexMatrix) -> ComplexMatrix {
    q.transpose().kron(p)
}
