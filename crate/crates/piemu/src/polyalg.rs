//! Matrix-valued polynomial algebra in one and two spatial variables.
//!
//! Coefficients are stored densely in the raw monomial basis in the
//! original variable; degrees stay small enough (≤ ~8) that conditioning
//! is acceptable and composition formulas remain transparent. Operations
//! return exact degrees; [`MatPoly1::normalize`] strips trailing
//! all-zero coefficient matrices below [`ZERO_STRIP_TOL`].
//!
//! Everything is generic over the coefficient ring [`Coeff`] so the same
//! integral primitives serve both concrete (`f64`) operators and operators
//! whose entries are affine expressions in decision variables. Products of
//! mixed univariate/bivariate polynomials require an explicit [`Var`] tag
//! saying which variable the univariate factor lives in; nothing is
//! inferred.

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use thiserror::Error;

/// Trailing coefficient matrices with every entry below this magnitude are
/// stripped by `normalize`.
pub const ZERO_STRIP_TOL: f64 = 1e-14;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("invalid interval: [{0}, {1}]")]
    BadInterval(f64, f64),
}

/// The spatial domain [a, b].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, PolyError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(PolyError::BadInterval(a, b));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn approx_eq(&self, other: &Interval) -> bool {
        (self.a - other.a).abs() < 1e-12 && (self.b - other.b).abs() < 1e-12
    }
}

/// Coefficient ring: `f64` for concrete polynomials, affine decision-variable
/// expressions on the optimization side.
pub trait Coeff:
    nalgebra::Scalar
    + Zero
    + One
    + nalgebra::ClosedAddAssign
    + nalgebra::ClosedSubAssign
    + nalgebra::ClosedMulAssign
    + std::ops::Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Multiplication by a plain scalar.
    fn scale(&self, k: f64) -> Self;
    /// Magnitude used for zero-stripping and residual reporting.
    fn mag(&self) -> f64;
}

impl Coeff for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn scale(&self, k: f64) -> Self {
        self * k
    }

    fn mag(&self) -> f64 {
        self.abs()
    }
}

/// Which variable a univariate polynomial is read in when promoted into a
/// two-variable product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    S,
    Theta,
}

pub(crate) fn scale_mat<T: Coeff>(m: &DMatrix<T>, k: f64) -> DMatrix<T> {
    m.map(|e| e.scale(k))
}

fn mat_max_mag<T: Coeff>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|e| e.mag()).fold(0.0, f64::max)
}

// ─────────────────────────────────────────────────────────────────────────
// One-variable matrix polynomials
// ─────────────────────────────────────────────────────────────────────────

/// Matrix polynomial in the spatial variable s; coefficient of s^k at
/// index k.
#[derive(Debug, Clone, PartialEq)]
pub struct MatPoly1<T: Coeff = f64> {
    rows: usize,
    cols: usize,
    coeffs: Vec<DMatrix<T>>,
}

impl<T: Coeff> MatPoly1<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            coeffs: vec![DMatrix::zeros(rows, cols)],
        }
    }

    pub fn constant(m: DMatrix<T>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            coeffs: vec![m],
        }
    }

    pub fn from_coeffs(coeffs: Vec<DMatrix<T>>) -> Self {
        assert!(!coeffs.is_empty(), "coefficient list must be non-empty");
        let rows = coeffs[0].nrows();
        let cols = coeffs[0].ncols();
        assert!(
            coeffs.iter().all(|c| c.nrows() == rows && c.ncols() == cols),
            "all coefficient matrices must share one shape"
        );
        Self { rows, cols, coeffs }
    }

    /// 1×1 polynomial c·s^k.
    pub fn monomial(k: usize, c: f64) -> Self {
        let mut coeffs = vec![DMatrix::zeros(1, 1); k + 1];
        coeffs[k][(0, 0)] = T::from_f64(c);
        Self {
            rows: 1,
            cols: 1,
            coeffs,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &DMatrix<T> {
        &self.coeffs[k]
    }

    pub fn coeff_mut(&mut self, k: usize) -> &mut DMatrix<T> {
        &mut self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[DMatrix<T>] {
        &self.coeffs
    }

    pub fn map_coeffs<U: Coeff>(&self, f: impl Fn(&T) -> U) -> MatPoly1<U> {
        MatPoly1 {
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|c| c.map(|e| f(&e))).collect(),
        }
    }

    /// Pad with zero coefficients up to degree `d` (no-op if already ≥ d).
    pub fn promote(&self, d: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() < d + 1 {
            coeffs.push(DMatrix::zeros(self.rows, self.cols));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            coeffs,
        }
    }

    /// Strip trailing coefficient matrices whose entries are all below tol.
    pub fn normalize(mut self, tol: f64) -> Self {
        while self.coeffs.len() > 1 {
            if mat_max_mag(self.coeffs.last().unwrap()) <= tol {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        self
    }

    pub fn max_mag(&self) -> f64 {
        self.coeffs.iter().map(mat_max_mag).fold(0.0, f64::max)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|c| scale_mat(c, k)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            coeffs: self.coeffs.iter().map(|c| c.transpose()).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PolyError> {
        lincomb1(&[(1.0, self), (1.0, other)])
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PolyError> {
        if self.cols != other.rows {
            return Err(PolyError::DimMismatch(format!(
                "poly product inner dims {}x{} · {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let d = self.degree() + other.degree();
        let mut coeffs = vec![DMatrix::<T>::zeros(self.rows, other.cols); d + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            coeffs,
        })
    }

    /// Horner evaluation at s = s0.
    pub fn eval(&self, s0: f64) -> DMatrix<T> {
        let mut acc = self.coeffs.last().unwrap().clone();
        for k in (0..self.coeffs.len() - 1).rev() {
            acc = scale_mat(&acc, s0) + &self.coeffs[k];
        }
        acc
    }

    /// Stack [self; other] vertically (shared column count).
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let d = self.degree().max(other.degree());
        let a = self.promote(d);
        let b = other.promote(d);
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| {
                let mut m = DMatrix::zeros(self.rows + other.rows, self.cols);
                m.view_mut((0, 0), (self.rows, self.cols)).copy_from(x);
                m.view_mut((self.rows, 0), (other.rows, self.cols))
                    .copy_from(y);
                m
            })
            .collect();
        Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            coeffs,
        }
    }

    /// Stack [self, other] horizontally (shared row count).
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let d = self.degree().max(other.degree());
        let a = self.promote(d);
        let b = other.promote(d);
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| {
                let mut m = DMatrix::zeros(self.rows, self.cols + other.cols);
                m.view_mut((0, 0), (self.rows, self.cols)).copy_from(x);
                m.view_mut((0, self.cols), (self.rows, other.cols))
                    .copy_from(y);
                m
            })
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols + other.cols,
            coeffs,
        }
    }
}

/// Coefficient-wise linear combination Σ kᵢ·Aᵢ; degree is the max of the
/// inputs.
pub fn lincomb1<T: Coeff>(terms: &[(f64, &MatPoly1<T>)]) -> Result<MatPoly1<T>, PolyError> {
    assert!(!terms.is_empty());
    let (rows, cols) = (terms[0].1.rows, terms[0].1.cols);
    for (_, t) in terms {
        if t.rows != rows || t.cols != cols {
            return Err(PolyError::DimMismatch(format!(
                "lincomb term {}x{} vs {}x{}",
                t.rows, t.cols, rows, cols
            )));
        }
    }
    let d = terms.iter().map(|(_, t)| t.degree()).max().unwrap();
    let mut coeffs = vec![DMatrix::<T>::zeros(rows, cols); d + 1];
    for (k, t) in terms {
        for (i, c) in t.coeffs.iter().enumerate() {
            coeffs[i] += scale_mat(c, *k);
        }
    }
    Ok(MatPoly1 { rows, cols, coeffs })
}

// ─────────────────────────────────────────────────────────────────────────
// Two-variable matrix polynomials
// ─────────────────────────────────────────────────────────────────────────

/// Matrix polynomial in (s, θ); coefficient of s^i θ^j at index
/// i·(dt+1) + j.
#[derive(Debug, Clone, PartialEq)]
pub struct MatPoly2<T: Coeff = f64> {
    rows: usize,
    cols: usize,
    ds: usize,
    dt: usize,
    coeffs: Vec<DMatrix<T>>,
}

impl<T: Coeff> MatPoly2<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            ds: 0,
            dt: 0,
            coeffs: vec![DMatrix::zeros(rows, cols)],
        }
    }

    pub fn constant(m: DMatrix<T>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            ds: 0,
            dt: 0,
            coeffs: vec![m],
        }
    }

    pub fn from_coeffs(ds: usize, dt: usize, coeffs: Vec<DMatrix<T>>) -> Self {
        assert_eq!(coeffs.len(), (ds + 1) * (dt + 1));
        let rows = coeffs[0].nrows();
        let cols = coeffs[0].ncols();
        assert!(coeffs.iter().all(|c| c.nrows() == rows && c.ncols() == cols));
        Self {
            rows,
            cols,
            ds,
            dt,
            coeffs,
        }
    }

    /// 1×1 polynomial c·s^i·θ^j.
    pub fn monomial(i: usize, j: usize, c: f64) -> Self {
        let mut out = Self {
            rows: 1,
            cols: 1,
            ds: i,
            dt: j,
            coeffs: vec![DMatrix::zeros(1, 1); (i + 1) * (j + 1)],
        };
        out.coeffs[i * (j + 1) + j][(0, 0)] = T::from_f64(c);
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn deg_s(&self) -> usize {
        self.ds
    }

    pub fn deg_t(&self) -> usize {
        self.dt
    }

    pub fn coeff(&self, i: usize, j: usize) -> &DMatrix<T> {
        &self.coeffs[i * (self.dt + 1) + j]
    }

    pub fn coeff_mut(&mut self, i: usize, j: usize) -> &mut DMatrix<T> {
        &mut self.coeffs[i * (self.dt + 1) + j]
    }

    pub fn map_coeffs<U: Coeff>(&self, f: impl Fn(&T) -> U) -> MatPoly2<U> {
        MatPoly2 {
            rows: self.rows,
            cols: self.cols,
            ds: self.ds,
            dt: self.dt,
            coeffs: self.coeffs.iter().map(|c| c.map(|e| f(&e))).collect(),
        }
    }

    pub fn promote(&self, ds: usize, dt: usize) -> Self {
        let ds = ds.max(self.ds);
        let dt = dt.max(self.dt);
        let mut coeffs = vec![DMatrix::<T>::zeros(self.rows, self.cols); (ds + 1) * (dt + 1)];
        for i in 0..=self.ds {
            for j in 0..=self.dt {
                coeffs[i * (dt + 1) + j] = self.coeff(i, j).clone();
            }
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            ds,
            dt,
            coeffs,
        }
    }

    /// Shrink degrees by removing all-zero top rows/columns of the
    /// coefficient table.
    pub fn normalize(self, tol: f64) -> Self {
        let mut ds = self.ds;
        while ds > 0 {
            let all_zero = (0..=self.dt).all(|j| mat_max_mag(self.coeff(ds, j)) <= tol);
            if all_zero {
                ds -= 1;
            } else {
                break;
            }
        }
        let mut dt = self.dt;
        while dt > 0 {
            let all_zero = (0..=ds).all(|i| mat_max_mag(self.coeff(i, dt)) <= tol);
            if all_zero {
                dt -= 1;
            } else {
                break;
            }
        }
        if ds == self.ds && dt == self.dt {
            return self;
        }
        let mut coeffs = Vec::with_capacity((ds + 1) * (dt + 1));
        for i in 0..=ds {
            for j in 0..=dt {
                coeffs.push(self.coeff(i, j).clone());
            }
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            ds,
            dt,
            coeffs,
        }
    }

    pub fn max_mag(&self) -> f64 {
        self.coeffs.iter().map(mat_max_mag).fold(0.0, f64::max)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            ds: self.ds,
            dt: self.dt,
            coeffs: self.coeffs.iter().map(|c| scale_mat(c, k)).collect(),
        }
    }

    /// K(s,θ) ↦ K(θ,s); entries transposed when `transpose` is set (the
    /// form needed by operator adjoints).
    pub fn swap_vars(&self, transpose: bool) -> Self {
        let (rows, cols) = if transpose {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        };
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for i in 0..=self.dt {
            for j in 0..=self.ds {
                let c = self.coeff(j, i);
                coeffs.push(if transpose { c.transpose() } else { c.clone() });
            }
        }
        Self {
            rows,
            cols,
            ds: self.dt,
            dt: self.ds,
            coeffs,
        }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PolyError> {
        if self.cols != other.rows {
            return Err(PolyError::DimMismatch(format!(
                "poly2 product inner dims {}x{} · {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let ds = self.ds + other.ds;
        let dt = self.dt + other.dt;
        let mut out = Self {
            rows: self.rows,
            cols: other.cols,
            ds,
            dt,
            coeffs: vec![DMatrix::zeros(self.rows, other.cols); (ds + 1) * (dt + 1)],
        };
        for i1 in 0..=self.ds {
            for j1 in 0..=self.dt {
                let a = self.coeff(i1, j1);
                if mat_max_mag(a) == 0.0 {
                    continue;
                }
                for i2 in 0..=other.ds {
                    for j2 in 0..=other.dt {
                        let b = other.coeff(i2, j2);
                        *out.coeff_mut(i1 + i2, j1 + j2) += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            ds: self.ds,
            dt: self.dt,
            coeffs: self.coeffs.iter().map(|c| c.transpose()).collect(),
        }
    }

    pub fn eval2(&self, s0: f64, t0: f64) -> DMatrix<T> {
        let mut acc = DMatrix::<T>::zeros(self.rows, self.cols);
        for i in 0..=self.ds {
            for j in 0..=self.dt {
                let w = s0.powi(i as i32) * t0.powi(j as i32);
                acc += scale_mat(self.coeff(i, j), w);
            }
        }
        acc
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let ds = self.ds.max(other.ds);
        let dt = self.dt.max(other.dt);
        let a = self.promote(ds, dt);
        let b = other.promote(ds, dt);
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| {
                let mut m = DMatrix::zeros(self.rows + other.rows, self.cols);
                m.view_mut((0, 0), (self.rows, self.cols)).copy_from(x);
                m.view_mut((self.rows, 0), (other.rows, self.cols))
                    .copy_from(y);
                m
            })
            .collect();
        Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            ds,
            dt,
            coeffs,
        }
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let ds = self.ds.max(other.ds);
        let dt = self.dt.max(other.dt);
        let a = self.promote(ds, dt);
        let b = other.promote(ds, dt);
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| {
                let mut m = DMatrix::zeros(self.rows, self.cols + other.cols);
                m.view_mut((0, 0), (self.rows, self.cols)).copy_from(x);
                m.view_mut((0, self.cols), (self.rows, other.cols))
                    .copy_from(y);
                m
            })
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols + other.cols,
            ds,
            dt,
            coeffs,
        }
    }
}

pub fn lincomb2<T: Coeff>(terms: &[(f64, &MatPoly2<T>)]) -> Result<MatPoly2<T>, PolyError> {
    assert!(!terms.is_empty());
    let (rows, cols) = (terms[0].1.rows, terms[0].1.cols);
    for (_, t) in terms {
        if t.rows != rows || t.cols != cols {
            return Err(PolyError::DimMismatch(format!(
                "lincomb2 term {}x{} vs {}x{}",
                t.rows, t.cols, rows, cols
            )));
        }
    }
    let ds = terms.iter().map(|(_, t)| t.ds).max().unwrap();
    let dt = terms.iter().map(|(_, t)| t.dt).max().unwrap();
    let mut out = MatPoly2 {
        rows,
        cols,
        ds,
        dt,
        coeffs: vec![DMatrix::<T>::zeros(rows, cols); (ds + 1) * (dt + 1)],
    };
    for (k, t) in terms {
        for i in 0..=t.ds {
            for j in 0..=t.dt {
                *out.coeff_mut(i, j) += scale_mat(t.coeff(i, j), *k);
            }
        }
    }
    Ok(out)
}

/// Read a univariate polynomial as a two-variable one in the declared
/// variable.
pub fn lift_to_2v<T: Coeff>(p: &MatPoly1<T>, var: Var) -> MatPoly2<T> {
    match var {
        Var::S => MatPoly2 {
            rows: p.rows,
            cols: p.cols,
            ds: p.degree(),
            dt: 0,
            coeffs: p.coeffs.clone(),
        },
        Var::Theta => MatPoly2 {
            rows: p.rows,
            cols: p.cols,
            ds: 0,
            dt: p.degree(),
            coeffs: p.coeffs.clone(),
        },
    }
}

/// Product of a univariate factor (read in `var`) with a two-variable
/// polynomial.
pub fn mul_1v_2v<T: Coeff>(
    a: &MatPoly1<T>,
    var: Var,
    b: &MatPoly2<T>,
) -> Result<MatPoly2<T>, PolyError> {
    lift_to_2v(a, var).try_mul(b)
}

/// Product of a two-variable polynomial with a univariate factor (read in
/// `var`).
pub fn mul_2v_1v<T: Coeff>(
    a: &MatPoly2<T>,
    b: &MatPoly1<T>,
    var: Var,
) -> Result<MatPoly2<T>, PolyError> {
    a.try_mul(&lift_to_2v(b, var))
}

/// Separable product A(s)·B(θ) as a two-variable polynomial.
pub fn outer_1v_1v<T: Coeff>(a: &MatPoly1<T>, b: &MatPoly1<T>) -> Result<MatPoly2<T>, PolyError> {
    mul_1v_2v(a, Var::S, &lift_to_2v(b, Var::Theta))
}

// ─────────────────────────────────────────────────────────────────────────
// Integral primitives
// ─────────────────────────────────────────────────────────────────────────

/// ∫_a^s K(s,θ) dθ, collected as a univariate polynomial in s.
pub fn int_theta_lower<T: Coeff>(k: &MatPoly2<T>, iv: &Interval) -> MatPoly1<T> {
    let d_out = k.ds + k.dt + 1;
    let mut coeffs = vec![DMatrix::<T>::zeros(k.rows, k.cols); d_out + 1];
    for i in 0..=k.ds {
        for j in 0..=k.dt {
            let c = k.coeff(i, j);
            if mat_max_mag(c) == 0.0 {
                continue;
            }
            let inv = 1.0 / (j as f64 + 1.0);
            // ∫_a^s θ^j dθ = s^{j+1}/(j+1) − a^{j+1}/(j+1)
            coeffs[i + j + 1] += scale_mat(c, inv);
            coeffs[i] += scale_mat(c, -iv.a().powi(j as i32 + 1) * inv);
        }
    }
    MatPoly1 {
        rows: k.rows,
        cols: k.cols,
        coeffs,
    }
    .normalize(ZERO_STRIP_TOL)
}

/// ∫_s^b K(s,θ) dθ.
pub fn int_theta_upper<T: Coeff>(k: &MatPoly2<T>, iv: &Interval) -> MatPoly1<T> {
    let d_out = k.ds + k.dt + 1;
    let mut coeffs = vec![DMatrix::<T>::zeros(k.rows, k.cols); d_out + 1];
    for i in 0..=k.ds {
        for j in 0..=k.dt {
            let c = k.coeff(i, j);
            if mat_max_mag(c) == 0.0 {
                continue;
            }
            let inv = 1.0 / (j as f64 + 1.0);
            coeffs[i] += scale_mat(c, iv.b().powi(j as i32 + 1) * inv);
            coeffs[i + j + 1] += scale_mat(c, -inv);
        }
    }
    MatPoly1 {
        rows: k.rows,
        cols: k.cols,
        coeffs,
    }
    .normalize(ZERO_STRIP_TOL)
}

/// ∫_a^b A(s) ds.
pub fn int_full<T: Coeff>(p: &MatPoly1<T>, iv: &Interval) -> DMatrix<T> {
    let mut acc = DMatrix::<T>::zeros(p.rows, p.cols);
    for (k, c) in p.coeffs.iter().enumerate() {
        let e = k as i32 + 1;
        let w = (iv.b().powi(e) - iv.a().powi(e)) / e as f64;
        acc += scale_mat(c, w);
    }
    acc
}

/// Integration limit for [`int_middle`]: an endpoint constant, the first
/// output variable s, or the second output variable ν.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    A,
    B,
    S,
    V,
}

/// H(s,ν) = ∫_lo^hi F(s,θ) G(θ,ν) dθ with F read as F(s,θ) and G read as
/// G(θ,ν). This is the exchange-of-integration-order workhorse behind PI
/// operator composition.
pub fn int_middle<T: Coeff>(
    f: &MatPoly2<T>,
    g: &MatPoly2<T>,
    lo: Limit,
    hi: Limit,
    iv: &Interval,
) -> Result<MatPoly2<T>, PolyError> {
    if f.cols != g.rows {
        return Err(PolyError::DimMismatch(format!(
            "int_middle inner dims {}x{} · {}x{}",
            f.rows, f.cols, g.rows, g.cols
        )));
    }
    let m_max = f.dt + g.ds;
    let ds_out = f.ds + m_max + 1;
    let dt_out = g.dt + m_max + 1;
    let mut out = MatPoly2 {
        rows: f.rows,
        cols: g.cols,
        ds: ds_out,
        dt: dt_out,
        coeffs: vec![DMatrix::zeros(f.rows, g.cols); (ds_out + 1) * (dt_out + 1)],
    };
    // For every product F_{ij} G_{kl} s^i θ^{j+k} ν^l, the θ-antiderivative
    // evaluated at a limit adds j+k+1 to the power of whichever output
    // variable the limit names (or folds a constant into the coefficient).
    for i in 0..=f.ds {
        for j in 0..=f.dt {
            let a = f.coeff(i, j);
            if mat_max_mag(a) == 0.0 {
                continue;
            }
            for k in 0..=g.ds {
                for l in 0..=g.dt {
                    let b = g.coeff(k, l);
                    if mat_max_mag(b) == 0.0 {
                        continue;
                    }
                    let prod = a * b;
                    let m = j + k;
                    let inv = 1.0 / (m as f64 + 1.0);
                    for (limit, sign) in [(hi, inv), (lo, -inv)] {
                        match limit {
                            Limit::A => {
                                *out.coeff_mut(i, l) +=
                                    scale_mat(&prod, sign * iv.a().powi(m as i32 + 1));
                            }
                            Limit::B => {
                                *out.coeff_mut(i, l) +=
                                    scale_mat(&prod, sign * iv.b().powi(m as i32 + 1));
                            }
                            Limit::S => {
                                *out.coeff_mut(i + m + 1, l) += scale_mat(&prod, sign);
                            }
                            Limit::V => {
                                *out.coeff_mut(i, l + m + 1) += scale_mat(&prod, sign);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out.normalize(ZERO_STRIP_TOL))
}

/// Column vector of monomials [1, s, …, s^d]ᵀ.
pub fn monomial_basis_1v(d: usize) -> MatPoly1<f64> {
    let mut coeffs = vec![DMatrix::zeros(d + 1, 1); d + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        c[(k, 0)] = 1.0;
    }
    MatPoly1 {
        rows: d + 1,
        cols: 1,
        coeffs,
    }
}

/// Column vector of all monomials s^i θ^j with i, j ≤ d, ordered so that
/// d = 1 gives [1, s, θ, sθ]ᵀ (row index j·(d+1) + i).
pub fn monomial_basis_2v(d: usize) -> MatPoly2<f64> {
    let n = (d + 1) * (d + 1);
    let mut out = MatPoly2 {
        rows: n,
        cols: 1,
        ds: d,
        dt: d,
        coeffs: vec![DMatrix::zeros(n, 1); n],
    };
    for i in 0..=d {
        for j in 0..=d {
            out.coeff_mut(i, j)[(j * (d + 1) + i, 0)] = 1.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn p1(coeffs: &[f64]) -> MatPoly1<f64> {
        MatPoly1::from_coeffs(
            coeffs
                .iter()
                .map(|&c| DMatrix::from_element(1, 1, c))
                .collect(),
        )
    }

    #[test]
    fn interval_rejects_degenerate() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn lincomb_annihilation_and_linearity() {
        let a = p1(&[1.0, 2.0, 3.0]);
        let zero = lincomb1(&[(1.0, &a), (-1.0, &a)]).unwrap();
        assert_abs_diff_eq!(zero.max_mag(), 0.0);
        assert_eq!(zero.normalize(0.0).degree(), 0);

        // 2·(s) + 3·(1) = 3 + 2s
        let s = MatPoly1::<f64>::monomial(1, 1.0);
        let one = MatPoly1::<f64>::monomial(0, 1.0);
        let r = lincomb1(&[(2.0, &s), (3.0, &one)]).unwrap();
        assert_abs_diff_eq!(r.coeff(0)[(0, 0)], 3.0);
        assert_abs_diff_eq!(r.coeff(1)[(0, 0)], 2.0);
    }

    #[test]
    fn lincomb2_coefficient_placement() {
        // 1·(sθ) + 1·(s²) = s² + sθ
        let st = MatPoly2::<f64>::monomial(1, 1, 1.0);
        let s2 = MatPoly2::<f64>::monomial(2, 0, 1.0);
        let r = lincomb2(&[(1.0, &st), (1.0, &s2)]).unwrap();
        assert_abs_diff_eq!(r.coeff(1, 1)[(0, 0)], 1.0);
        assert_abs_diff_eq!(r.coeff(2, 0)[(0, 0)], 1.0);
        assert_abs_diff_eq!(r.coeff(1, 0)[(0, 0)], 0.0);
    }

    #[test]
    fn poly_mul_basics() {
        let s = MatPoly1::<f64>::monomial(1, 1.0);
        let s2 = s.try_mul(&s).unwrap();
        assert_eq!(s2.degree(), 2);
        assert_abs_diff_eq!(s2.coeff(2)[(0, 0)], 1.0);

        // identity times arbitrary
        let b = MatPoly1::from_coeffs(vec![
            DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]),
            DMatrix::from_row_slice(2, 3, &[0.5, 0., 0., 1., 0., -1.]),
        ]);
        let i2 = MatPoly1::<f64>::identity(2);
        let prod = i2.try_mul(&b).unwrap();
        for k in 0..=1 {
            assert_abs_diff_eq!((prod.coeff(k) - b.coeff(k)).norm(), 0.0, epsilon = 1e-15);
        }

        // (1+s)(1−s) = 1 − s²
        let a = p1(&[1.0, 1.0]);
        let c = p1(&[1.0, -1.0]);
        let r = a.try_mul(&c).unwrap();
        assert_abs_diff_eq!(r.coeff(0)[(0, 0)], 1.0);
        assert_abs_diff_eq!(r.coeff(1)[(0, 0)], 0.0);
        assert_abs_diff_eq!(r.coeff(2)[(0, 0)], -1.0);
    }

    #[test]
    fn mul_rejects_dim_mismatch() {
        let a = MatPoly1::<f64>::zero(2, 3);
        let b = MatPoly1::<f64>::zero(2, 3);
        assert!(a.try_mul(&b).is_err());
    }

    #[test]
    fn eval_horner() {
        let p = p1(&[3.0, 2.0]);
        assert_abs_diff_eq!(p.eval(1.0)[(0, 0)], 5.0);
        let st = MatPoly2::<f64>::monomial(1, 1, 1.0);
        assert_abs_diff_eq!(st.eval2(0.5, 0.25)[(0, 0)], 0.125);
        let z = MatPoly1::<f64>::zero(2, 2);
        assert_abs_diff_eq!(z.eval(7.3).norm(), 0.0);
    }

    #[test]
    fn int_theta_lower_examples() {
        let iv = unit();
        // K = 1 → s
        let one = MatPoly2::<f64>::monomial(0, 0, 1.0);
        let r = int_theta_lower(&one, &iv);
        assert_abs_diff_eq!(r.coeff(1)[(0, 0)], 1.0);
        assert_abs_diff_eq!(r.coeff(0)[(0, 0)], 0.0);
        // K = θ → s²/2
        let th = MatPoly2::<f64>::monomial(0, 1, 1.0);
        let r = int_theta_lower(&th, &iv);
        assert_abs_diff_eq!(r.coeff(2)[(0, 0)], 0.5);
        // K = sθ → s³/2
        let st = MatPoly2::<f64>::monomial(1, 1, 1.0);
        let r = int_theta_lower(&st, &iv);
        assert_eq!(r.degree(), 3);
        assert_abs_diff_eq!(r.coeff(3)[(0, 0)], 0.5);
    }

    #[test]
    fn int_theta_upper_examples() {
        let iv = unit();
        let one = MatPoly2::<f64>::monomial(0, 0, 1.0);
        let r = int_theta_upper(&one, &iv);
        assert_abs_diff_eq!(r.coeff(0)[(0, 0)], 1.0);
        assert_abs_diff_eq!(r.coeff(1)[(0, 0)], -1.0);
        let th = MatPoly2::<f64>::monomial(0, 1, 1.0);
        let r = int_theta_upper(&th, &iv);
        assert_abs_diff_eq!(r.coeff(0)[(0, 0)], 0.5);
        assert_abs_diff_eq!(r.coeff(2)[(0, 0)], -0.5);
        // K = s → s − s²
        let s = MatPoly2::<f64>::monomial(1, 0, 1.0);
        let r = int_theta_upper(&s, &iv);
        assert_abs_diff_eq!(r.coeff(1)[(0, 0)], 1.0);
        assert_abs_diff_eq!(r.coeff(2)[(0, 0)], -1.0);
    }

    #[test]
    fn int_full_examples() {
        let iv = unit();
        assert_abs_diff_eq!(int_full(&p1(&[1.0]), &iv)[(0, 0)], 1.0);
        assert_abs_diff_eq!(int_full(&p1(&[0.0, 1.0]), &iv)[(0, 0)], 0.5);
        let sym = Interval::new(-1.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            int_full(&p1(&[0.0, 0.0, 1.0]), &sym)[(0, 0)],
            2.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn swap_vars_examples() {
        // sθ² ↦ s²θ
        let k = MatPoly2::<f64>::monomial(1, 2, 1.0);
        let sw = k.swap_vars(false);
        assert_abs_diff_eq!(sw.coeff(2, 1)[(0, 0)], 1.0);
        // constant unchanged
        let c = MatPoly2::<f64>::monomial(0, 0, 2.5);
        assert_abs_diff_eq!(c.swap_vars(false).coeff(0, 0)[(0, 0)], 2.5);
        // s ↦ θ
        let s = MatPoly2::<f64>::monomial(1, 0, 1.0);
        let sw = s.swap_vars(false);
        assert_abs_diff_eq!(sw.coeff(0, 1)[(0, 0)], 1.0);
        // involution
        let k = MatPoly2::<f64>::monomial(2, 1, -3.0);
        assert_eq!(k.swap_vars(true).swap_vars(true), k);
    }

    #[test]
    fn monomial_basis_ordering() {
        let b0 = monomial_basis_1v(0);
        assert_eq!((b0.rows(), b0.cols()), (1, 1));
        let b2 = monomial_basis_1v(2);
        assert_eq!(b2.rows(), 3);
        // eval at s = 2 → [1, 2, 4]
        let v = b2.eval(2.0);
        assert_abs_diff_eq!(v[(0, 0)], 1.0);
        assert_abs_diff_eq!(v[(1, 0)], 2.0);
        assert_abs_diff_eq!(v[(2, 0)], 4.0);
        // two-variable, d = 1 → [1, s, θ, sθ]
        let b = monomial_basis_2v(1);
        let v = b.eval2(2.0, 3.0);
        assert_abs_diff_eq!(v[(0, 0)], 1.0);
        assert_abs_diff_eq!(v[(1, 0)], 2.0);
        assert_abs_diff_eq!(v[(2, 0)], 3.0);
        assert_abs_diff_eq!(v[(3, 0)], 6.0);
    }

    #[test]
    fn int_middle_against_direct_quadrature() {
        use crate::quad::GaussLegendre;
        let iv = Interval::new(0.2, 1.3).unwrap();
        // F(s,θ) = 1 + sθ, G(θ,ν) = θ − ν²
        let f = lincomb2(&[
            (1.0, &MatPoly2::<f64>::monomial(0, 0, 1.0)),
            (1.0, &MatPoly2::<f64>::monomial(1, 1, 1.0)),
        ])
        .unwrap();
        let g = lincomb2(&[
            (1.0, &MatPoly2::<f64>::monomial(1, 0, 1.0)),
            (-1.0, &MatPoly2::<f64>::monomial(0, 2, 1.0)),
        ])
        .unwrap();
        let rule = GaussLegendre::new(12);
        for (lo, hi) in [
            (Limit::A, Limit::S),
            (Limit::V, Limit::S),
            (Limit::S, Limit::B),
            (Limit::A, Limit::V),
            (Limit::S, Limit::V),
            (Limit::V, Limit::B),
        ] {
            let h = int_middle(&f, &g, lo, hi, &iv).unwrap();
            for &(s, v) in &[(0.3, 0.9), (1.1, 0.4), (0.7, 0.7)] {
                let pick = |l: Limit| match l {
                    Limit::A => iv.a(),
                    Limit::B => iv.b(),
                    Limit::S => s,
                    Limit::V => v,
                };
                let (xs, ws) = rule.mapped(pick(lo), pick(hi));
                let direct: f64 = xs
                    .iter()
                    .zip(&ws)
                    .map(|(&t, &w)| w * f.eval2(s, t)[(0, 0)] * g.eval2(t, v)[(0, 0)])
                    .sum();
                assert_abs_diff_eq!(h.eval2(s, v)[(0, 0)], direct, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn int_full_commutes_with_lincomb_exactly() {
        let iv = Interval::new(-0.5, 2.0).unwrap();
        let a = p1(&[1.0, -2.0, 0.25]);
        let b = p1(&[0.0, 3.0]);
        let lhs = int_full(&lincomb1(&[(2.0, &a), (-3.0, &b)]).unwrap(), &iv);
        let rhs = int_full(&a, &iv) * 2.0 - int_full(&b, &iv) * 3.0;
        assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-14);
    }
}
