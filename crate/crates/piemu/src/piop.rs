//! The 4-PI operator algebra on ℝ^{n₁} × L₂^{n₂}[a,b].
//!
//! An operator is parameterized by a matrix P and polynomials Q₁, Q₂, R₀,
//! R₁, R₂ acting as
//!
//! ```text
//! (𝒫 [x; x₂])(s) = [ P x + ∫_a^b Q₁(s) x₂(s) ds
//!                  ; Q₂(s) x + R₀(s) x₂(s)
//!                    + ∫_a^s R₁(s,θ) x₂(θ) dθ + ∫_s^b R₂(s,θ) x₂(θ) dθ ]
//! ```
//!
//! The class is closed under addition, composition, adjoint and
//! concatenation. Composition is derived once by expanding the double
//! integrals and exchanging integration order; the resulting closed-form
//! parameter formulas are hard-coded below and guarded by the quadrature
//! application oracle (`apply(compose(A,B), x)` against
//! `apply(A, apply(B, x))`) in the test suites.
//!
//! Empty blocks are zero-dimensional, not zero-valued: dimensions carry
//! (0, k) or (k, 0) so concatenation stays unambiguous.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::polyalg::{
    int_full, int_middle, int_theta_lower, int_theta_upper, lincomb1, lincomb2, mul_1v_2v,
    mul_2v_1v, outer_1v_1v, Coeff, Interval, Limit, MatPoly1, MatPoly2, PolyError, Var,
    ZERO_STRIP_TOL,
};
use crate::quad::{lagrange_basis_at, barycentric_weights, GaussLegendre};

/// Coefficient-wise operator equality tolerance after degree
/// normalization.
pub const OP_COEFF_TOL: f64 = 1e-10;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PiopError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("interval mismatch")]
    IntervalMismatch,
    #[error("grid too coarse: order {order} below required {required}")]
    GridTooCoarse { order: usize, required: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Dimensions of an ℝ^{n₁} × L₂^{n₂} space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PIDims {
    pub n1: usize,
    pub n2: usize,
}

impl PIDims {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self { n1, n2 }
    }

    /// Concatenation of two spaces (finite parts first within each part).
    pub fn concat(&self, other: &PIDims) -> PIDims {
        PIDims::new(self.n1 + other.n1, self.n2 + other.n2)
    }

    pub fn is_empty(&self) -> bool {
        self.n1 == 0 && self.n2 == 0
    }
}

/// A 4-PI operator with coefficients in the ring `T` (`f64` for concrete
/// operators, affine decision expressions on the optimization side).
#[derive(Debug, Clone, PartialEq)]
pub struct PIOp<T: Coeff = f64> {
    pub dom: PIDims,
    pub cod: PIDims,
    pub iv: Interval,
    pub p: DMatrix<T>,
    pub q1: MatPoly1<T>,
    pub q2: MatPoly1<T>,
    pub r0: MatPoly1<T>,
    pub r1: MatPoly2<T>,
    pub r2: MatPoly2<T>,
}

impl<T: Coeff> PIOp<T> {
    pub fn zero(dom: PIDims, cod: PIDims, iv: Interval) -> Self {
        Self {
            dom,
            cod,
            iv,
            p: DMatrix::zeros(cod.n1, dom.n1),
            q1: MatPoly1::zero(cod.n1, dom.n2),
            q2: MatPoly1::zero(cod.n2, dom.n1),
            r0: MatPoly1::zero(cod.n2, dom.n2),
            r1: MatPoly2::zero(cod.n2, dom.n2),
            r2: MatPoly2::zero(cod.n2, dom.n2),
        }
    }

    pub fn identity(dims: PIDims, iv: Interval) -> Self {
        let mut out = Self::zero(dims, dims, iv);
        out.p = DMatrix::identity(dims.n1, dims.n1);
        out.r0 = MatPoly1::identity(dims.n2);
        out
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dom: PIDims,
        cod: PIDims,
        iv: Interval,
        p: DMatrix<T>,
        q1: MatPoly1<T>,
        q2: MatPoly1<T>,
        r0: MatPoly1<T>,
        r1: MatPoly2<T>,
        r2: MatPoly2<T>,
    ) -> Result<Self, PiopError> {
        let checks = [
            (p.nrows(), p.ncols(), cod.n1, dom.n1, "P"),
            (q1.rows(), q1.cols(), cod.n1, dom.n2, "Q1"),
            (q2.rows(), q2.cols(), cod.n2, dom.n1, "Q2"),
            (r0.rows(), r0.cols(), cod.n2, dom.n2, "R0"),
            (r1.rows(), r1.cols(), cod.n2, dom.n2, "R1"),
            (r2.rows(), r2.cols(), cod.n2, dom.n2, "R2"),
        ];
        for (got_r, got_c, want_r, want_c, name) in checks {
            if got_r != want_r || got_c != want_c {
                return Err(PiopError::DimMismatch(format!(
                    "{name} is {got_r}x{got_c}, expected {want_r}x{want_c}"
                )));
            }
        }
        Ok(Self {
            dom,
            cod,
            iv,
            p,
            q1,
            q2,
            r0,
            r1,
            r2,
        })
    }

    /// Multiplication operator x₂(s) ↦ M(s)x₂(s) on pure L₂ spaces.
    pub fn multiplication(m: MatPoly1<T>, iv: Interval) -> Self {
        let dom = PIDims::new(0, m.cols());
        let cod = PIDims::new(0, m.rows());
        let mut out = Self::zero(dom, cod, iv);
        out.r0 = m;
        out
    }

    /// Purely finite-dimensional operator x₁ ↦ P x₁.
    pub fn finite(p: DMatrix<T>, iv: Interval) -> Self {
        let dom = PIDims::new(p.ncols(), 0);
        let cod = PIDims::new(p.nrows(), 0);
        let mut out = Self::zero(dom, cod, iv);
        out.p = p;
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            dom: self.dom,
            cod: self.cod,
            iv: self.iv,
            p: crate::polyalg::scale_mat(&self.p, k),
            q1: self.q1.scale(k),
            q2: self.q2.scale(k),
            r0: self.r0.scale(k),
            r1: self.r1.scale(k),
            r2: self.r2.scale(k),
        }
    }

    pub fn map_coeffs<U: Coeff>(&self, f: impl Fn(&T) -> U + Copy) -> PIOp<U> {
        PIOp {
            dom: self.dom,
            cod: self.cod,
            iv: self.iv,
            p: self.p.map(|e| f(&e)),
            q1: self.q1.map_coeffs(f),
            q2: self.q2.map_coeffs(f),
            r0: self.r0.map_coeffs(f),
            r1: self.r1.map_coeffs(f),
            r2: self.r2.map_coeffs(f),
        }
    }

    pub fn normalize(self) -> Self {
        Self {
            q1: self.q1.normalize(ZERO_STRIP_TOL),
            q2: self.q2.normalize(ZERO_STRIP_TOL),
            r0: self.r0.normalize(ZERO_STRIP_TOL),
            r1: self.r1.normalize(ZERO_STRIP_TOL),
            r2: self.r2.normalize(ZERO_STRIP_TOL),
            ..self
        }
    }

    /// Largest coefficient magnitude across all parameter blocks.
    pub fn max_mag(&self) -> f64 {
        self.p
            .iter()
            .map(|e| e.mag())
            .fold(0.0f64, f64::max)
            .max(self.q1.max_mag())
            .max(self.q2.max_mag())
            .max(self.r0.max_mag())
            .max(self.r1.max_mag())
            .max(self.r2.max_mag())
    }

    /// Largest polynomial degree appearing in any parameter block.
    pub fn max_degree(&self) -> usize {
        self.q1
            .degree()
            .max(self.q2.degree())
            .max(self.r0.degree())
            .max(self.r1.deg_s().max(self.r1.deg_t()))
            .max(self.r2.deg_s().max(self.r2.deg_t()))
    }

    /// Adjoint with respect to the ℝ×L₂ inner product: P* = Pᵀ,
    /// Q₁*(s) = Q₂(s)ᵀ, Q₂*(s) = Q₁(s)ᵀ, R₀* = R₀ᵀ, R₁*(s,θ) = R₂(θ,s)ᵀ,
    /// R₂*(s,θ) = R₁(θ,s)ᵀ.
    pub fn adjoint(&self) -> Self {
        Self {
            dom: self.cod,
            cod: self.dom,
            iv: self.iv,
            p: self.p.transpose(),
            q1: self.q2.transpose(),
            q2: self.q1.transpose(),
            r0: self.r0.transpose(),
            r1: self.r2.swap_vars(true),
            r2: self.r1.swap_vars(true),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PiopError> {
        pi_lincomb(&[(1.0, self), (1.0, other)])
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, PiopError> {
        pi_lincomb(&[(1.0, self), (-1.0, other)])
    }
}

/// Component-wise linear combination of operators with identical
/// signature.
pub fn pi_lincomb<T: Coeff>(terms: &[(f64, &PIOp<T>)]) -> Result<PIOp<T>, PiopError> {
    assert!(!terms.is_empty());
    let first = terms[0].1;
    for (_, t) in terms {
        if t.dom != first.dom || t.cod != first.cod {
            return Err(PiopError::DimMismatch(
                "lincomb operator signature mismatch".into(),
            ));
        }
        if !t.iv.approx_eq(&first.iv) {
            return Err(PiopError::IntervalMismatch);
        }
    }
    let mut p = DMatrix::<T>::zeros(first.cod.n1, first.dom.n1);
    for (k, t) in terms {
        p += crate::polyalg::scale_mat(&t.p, *k);
    }
    let q1 = lincomb1(&terms.iter().map(|(k, t)| (*k, &t.q1)).collect::<Vec<_>>())?;
    let q2 = lincomb1(&terms.iter().map(|(k, t)| (*k, &t.q2)).collect::<Vec<_>>())?;
    let r0 = lincomb1(&terms.iter().map(|(k, t)| (*k, &t.r0)).collect::<Vec<_>>())?;
    let r1 = lincomb2(&terms.iter().map(|(k, t)| (*k, &t.r1)).collect::<Vec<_>>())?;
    let r2 = lincomb2(&terms.iter().map(|(k, t)| (*k, &t.r2)).collect::<Vec<_>>())?;
    Ok(PIOp {
        dom: first.dom,
        cod: first.cod,
        iv: first.iv,
        p,
        q1,
        q2,
        r0,
        r1,
        r2,
    })
}

/// Closed-form parameters of x ↦ A(Bx).
///
/// Every double integral of the expansion is reduced to canonical form by
/// exchanging integration order; the `int_middle` terms below carry the
/// resulting region splits.
pub fn compose<T: Coeff>(a: &PIOp<T>, b: &PIOp<T>) -> Result<PIOp<T>, PiopError> {
    if a.dom != b.cod {
        return Err(PiopError::DimMismatch(format!(
            "compose: A.dom ({}, {}) != B.cod ({}, {})",
            a.dom.n1, a.dom.n2, b.cod.n1, b.cod.n2
        )));
    }
    if !a.iv.approx_eq(&b.iv) {
        return Err(PiopError::IntervalMismatch);
    }
    let iv = a.iv;

    // P = Pa Pb + ∫_a^b Q1a(s) Q2b(s) ds
    let p = &a.p * &b.p + int_full(&a.q1.try_mul(&b.q2)?, &iv);

    // Q1(s) = Pa Q1b(s) + Q1a(s) R0b(s)
    //       + ∫_s^b Q1a(η) R1b(η,s) dη + ∫_a^s Q1a(η) R2b(η,s) dη
    let pa_q1b = {
        let mp = MatPoly1::from_coeffs(b.q1.coeffs().iter().map(|c| &a.p * c).collect());
        mp
    };
    let q1 = lincomb1(&[
        (1.0, &pa_q1b),
        (1.0, &a.q1.try_mul(&b.r0)?),
        (
            1.0,
            &int_theta_upper(&mul_1v_2v(&a.q1, Var::S, &b.r1)?.swap_vars(false), &iv),
        ),
        (
            1.0,
            &int_theta_lower(&mul_1v_2v(&a.q1, Var::S, &b.r2)?.swap_vars(false), &iv),
        ),
    ])?;

    // Q2(s) = Q2a(s) Pb + R0a(s) Q2b(s)
    //       + ∫_a^s R1a(s,θ) Q2b(θ) dθ + ∫_s^b R2a(s,θ) Q2b(θ) dθ
    let q2a_pb = MatPoly1::from_coeffs(a.q2.coeffs().iter().map(|c| c * &b.p).collect());
    let q2 = lincomb1(&[
        (1.0, &q2a_pb),
        (1.0, &a.r0.try_mul(&b.q2)?),
        (
            1.0,
            &int_theta_lower(&mul_2v_1v(&a.r1, &b.q2, Var::Theta)?, &iv),
        ),
        (
            1.0,
            &int_theta_upper(&mul_2v_1v(&a.r2, &b.q2, Var::Theta)?, &iv),
        ),
    ])?;

    // R0(s) = R0a(s) R0b(s)
    let r0 = a.r0.try_mul(&b.r0)?;

    // Kernel shared by both triangles: Q2a(s) Q1b(θ) from the full-interval
    // integral ∫_a^b Q1b x₂ feeding Q2a.
    let shared = outer_1v_1v(&a.q2, &b.q1)?;

    // R1(s,θ), θ ≤ s
    let r1 = lincomb2(&[
        (1.0, &shared),
        (1.0, &mul_1v_2v(&a.r0, Var::S, &b.r1)?),
        (1.0, &mul_2v_1v(&a.r1, &b.r0, Var::Theta)?),
        (1.0, &int_middle(&a.r1, &b.r1, Limit::V, Limit::S, &iv)?),
        (1.0, &int_middle(&a.r1, &b.r2, Limit::A, Limit::V, &iv)?),
        (1.0, &int_middle(&a.r2, &b.r1, Limit::S, Limit::B, &iv)?),
    ])?;

    // R2(s,θ), θ ≥ s
    let r2 = lincomb2(&[
        (1.0, &shared),
        (1.0, &mul_1v_2v(&a.r0, Var::S, &b.r2)?),
        (1.0, &mul_2v_1v(&a.r2, &b.r0, Var::Theta)?),
        (1.0, &int_middle(&a.r2, &b.r2, Limit::S, Limit::V, &iv)?),
        (1.0, &int_middle(&a.r1, &b.r2, Limit::A, Limit::S, &iv)?),
        (1.0, &int_middle(&a.r2, &b.r1, Limit::V, Limit::B, &iv)?),
    ])?;

    Ok(PIOp {
        dom: b.dom,
        cod: a.cod,
        iv,
        p,
        q1,
        q2,
        r0,
        r1,
        r2,
    }
    .normalize())
}

/// Concatenation mode for [`concat`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcatMode {
    Horizontal,
    Vertical,
    Diagonal,
}

/// [A B]: shared codomain, stacked domains.
pub fn hcat<T: Coeff>(a: &PIOp<T>, b: &PIOp<T>) -> Result<PIOp<T>, PiopError> {
    if a.cod != b.cod {
        return Err(PiopError::DimMismatch("hcat codomain mismatch".into()));
    }
    if !a.iv.approx_eq(&b.iv) {
        return Err(PiopError::IntervalMismatch);
    }
    let mut p = DMatrix::zeros(a.cod.n1, a.dom.n1 + b.dom.n1);
    p.view_mut((0, 0), (a.cod.n1, a.dom.n1)).copy_from(&a.p);
    p.view_mut((0, a.dom.n1), (b.cod.n1, b.dom.n1))
        .copy_from(&b.p);
    Ok(PIOp {
        dom: a.dom.concat(&b.dom),
        cod: a.cod,
        iv: a.iv,
        p,
        q1: a.q1.hstack(&b.q1),
        q2: a.q2.hstack(&b.q2),
        r0: a.r0.hstack(&b.r0),
        r1: a.r1.hstack(&b.r1),
        r2: a.r2.hstack(&b.r2),
    })
}

/// [A; B]: shared domain, stacked codomains.
pub fn vcat<T: Coeff>(a: &PIOp<T>, b: &PIOp<T>) -> Result<PIOp<T>, PiopError> {
    if a.dom != b.dom {
        return Err(PiopError::DimMismatch("vcat domain mismatch".into()));
    }
    if !a.iv.approx_eq(&b.iv) {
        return Err(PiopError::IntervalMismatch);
    }
    let mut p = DMatrix::zeros(a.cod.n1 + b.cod.n1, a.dom.n1);
    p.view_mut((0, 0), (a.cod.n1, a.dom.n1)).copy_from(&a.p);
    p.view_mut((a.cod.n1, 0), (b.cod.n1, b.dom.n1))
        .copy_from(&b.p);
    Ok(PIOp {
        dom: a.dom,
        cod: a.cod.concat(&b.cod),
        iv: a.iv,
        p,
        q1: a.q1.vstack(&b.q1),
        q2: a.q2.vstack(&b.q2),
        r0: a.r0.vstack(&b.r0),
        r1: a.r1.vstack(&b.r1),
        r2: a.r2.vstack(&b.r2),
    })
}

/// diag(A, B).
pub fn blkdiag<T: Coeff>(a: &PIOp<T>, b: &PIOp<T>) -> Result<PIOp<T>, PiopError> {
    let top = hcat(a, &PIOp::zero(b.dom, a.cod, b.iv))?;
    let bottom = hcat(&PIOp::zero(a.dom, b.cod, a.iv), b)?;
    vcat(&top, &bottom)
}

/// Fold a list of operators with the given concatenation mode.
pub fn concat<T: Coeff>(mode: ConcatMode, ops: &[&PIOp<T>]) -> Result<PIOp<T>, PiopError> {
    assert!(!ops.is_empty());
    let mut acc = ops[0].clone();
    for op in &ops[1..] {
        acc = match mode {
            ConcatMode::Horizontal => hcat(&acc, op)?,
            ConcatMode::Vertical => vcat(&acc, op)?,
            ConcatMode::Diagonal => blkdiag(&acc, op)?,
        };
    }
    Ok(acc)
}

/// Assemble a block operator from a grid of conforming blocks
/// (vcat of hcat rows).
pub fn block<T: Coeff>(rows: &[Vec<&PIOp<T>>]) -> Result<PIOp<T>, PiopError> {
    let mut row_ops = Vec::with_capacity(rows.len());
    for row in rows {
        row_ops.push(concat(ConcatMode::Horizontal, row)?);
    }
    let refs: Vec<&PIOp<T>> = row_ops.iter().collect();
    concat(ConcatMode::Vertical, &refs)
}

/// Largest coefficient difference between two operators of identical
/// signature, after promoting to joint degrees.
pub fn max_coeff_diff<T: Coeff>(a: &PIOp<T>, b: &PIOp<T>) -> f64 {
    let d = pi_lincomb(&[(1.0, a), (-1.0, b)]).expect("signature mismatch in max_coeff_diff");
    d.max_mag()
}

// ─────────────────────────────────────────────────────────────────────────
// Quadrature realization of ℝ×L₂ samples
// ─────────────────────────────────────────────────────────────────────────

/// Gauss–Legendre grid on an interval, with barycentric weights for
/// interpolating the stored samples anywhere inside.
#[derive(Debug, Clone)]
pub struct QuadGrid {
    pub iv: Interval,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
    reference: GaussLegendre,
}

impl QuadGrid {
    pub fn new(iv: Interval, order: usize) -> Self {
        let reference = GaussLegendre::new(order);
        let (nodes, weights) = reference.mapped(iv.a(), iv.b());
        let bary = barycentric_weights(&nodes);
        Self {
            iv,
            order,
            nodes,
            weights,
            bary,
            reference,
        }
    }

    /// Values of the interpolation basis at x.
    pub fn basis_at(&self, x: f64) -> Vec<f64> {
        lagrange_basis_at(&self.nodes, &self.bary, x)
    }
}

/// A point of ℝ^{n₁} × L₂^{n₂} realized as a finite vector plus
/// distributed-part values at the quadrature nodes.
#[derive(Debug, Clone)]
pub struct RLSample {
    pub x1: DVector<f64>,
    /// n₂ × #nodes values of the distributed part.
    pub x2: DMatrix<f64>,
    pub grid: QuadGrid,
}

impl RLSample {
    pub fn zero(dims: PIDims, grid: QuadGrid) -> Self {
        Self {
            x1: DVector::zeros(dims.n1),
            x2: DMatrix::zeros(dims.n2, grid.nodes.len()),
            grid,
        }
    }

    /// Sample a polynomial distributed part at the grid nodes.
    pub fn from_poly(x1: DVector<f64>, poly: &MatPoly1<f64>, grid: QuadGrid) -> Self {
        assert_eq!(poly.cols(), 1, "distributed part must be a column");
        let x2 = DMatrix::from_fn(poly.rows(), grid.nodes.len(), |i, q| {
            poly.eval(grid.nodes[q])[(i, 0)]
        });
        Self { x1, x2, grid }
    }

    pub fn dims(&self) -> PIDims {
        PIDims::new(self.x1.nrows(), self.x2.nrows())
    }

    /// ℝ×L₂ inner product via the grid quadrature.
    pub fn inner(&self, other: &RLSample) -> f64 {
        let mut acc = self.x1.dot(&other.x1);
        for q in 0..self.grid.nodes.len() {
            let w = self.grid.weights[q];
            acc += w * self.x2.column(q).dot(&other.x2.column(q));
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            x1: &self.x1 * k,
            x2: &self.x2 * k,
            grid: self.grid.clone(),
        }
    }

    pub fn add(&self, other: &RLSample) -> Self {
        Self {
            x1: &self.x1 + &other.x1,
            x2: &self.x2 + &other.x2,
            grid: self.grid.clone(),
        }
    }

    /// Interpolated distributed-part value at an arbitrary point.
    pub fn x2_at(&self, s: f64) -> DVector<f64> {
        let basis = self.grid.basis_at(s);
        let mut out = DVector::zeros(self.x2.nrows());
        for (q, c) in basis.iter().enumerate() {
            if *c != 0.0 {
                out += self.x2.column(q) * *c;
            }
        }
        out
    }
}

/// Apply an operator to a sample. Split-interval kernel integrals map a
/// rule of the grid's order onto [a, s] and [s, b] per output node and
/// read the integrand off the interpolated sample; exact when the sample's
/// distributed part is polynomial of degree < grid order.
pub fn apply(op: &PIOp<f64>, x: &RLSample) -> Result<RLSample, PiopError> {
    if op.dom != x.dims() {
        return Err(PiopError::DimMismatch(format!(
            "apply: operator domain ({}, {}) vs sample ({}, {})",
            op.dom.n1,
            op.dom.n2,
            x.dims().n1,
            x.dims().n2
        )));
    }
    if !op.iv.approx_eq(&x.grid.iv) {
        return Err(PiopError::IntervalMismatch);
    }
    let required = op.max_degree() + 2;
    if x.grid.order < required {
        return Err(PiopError::GridTooCoarse {
            order: x.grid.order,
            required,
        });
    }
    let grid = &x.grid;
    let nq = grid.nodes.len();

    // Finite part: P x1 + ∫ Q1 x2
    let mut y1 = &op.p * &x.x1;
    for q in 0..nq {
        let w = grid.weights[q];
        y1 += op.q1.eval(grid.nodes[q]) * x.x2.column(q) * w;
    }

    // Distributed part at each node.
    let mut y2 = DMatrix::zeros(op.cod.n2, nq);
    if op.cod.n2 > 0 {
        for (j, &sj) in grid.nodes.iter().enumerate() {
            let mut v = op.q2.eval(sj) * &x.x1 + op.r0.eval(sj) * x.x2.column(j);
            // ∫_a^{s_j} R1(s_j, θ) x2(θ) dθ
            if sj - grid.iv.a() > 1e-14 {
                let (tn, tw) = grid.reference.mapped(grid.iv.a(), sj);
                for (t, w) in tn.iter().zip(&tw) {
                    v += op.r1.eval2(sj, *t) * x.x2_at(*t) * *w;
                }
            }
            // ∫_{s_j}^b R2(s_j, θ) x2(θ) dθ
            if grid.iv.b() - sj > 1e-14 {
                let (tn, tw) = grid.reference.mapped(sj, grid.iv.b());
                for (t, w) in tn.iter().zip(&tw) {
                    v += op.r2.eval2(sj, *t) * x.x2_at(*t) * *w;
                }
            }
            y2.set_column(j, &v);
        }
    }

    Ok(RLSample {
        x1: y1,
        x2: y2,
        grid: grid.clone(),
    })
}

/// Induced-norm estimate by power iteration on A*∘A realized through
/// quadrature application. Monotone nondecreasing in `iters`; returns 0
/// for the zero operator.
pub fn op_norm_estimate(op: &PIOp<f64>, grid_order: usize, iters: usize) -> f64 {
    assert!(iters >= 1);
    let grid = QuadGrid::new(op.iv, grid_order);
    let adj = op.adjoint();
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x9e3779b97f4a7c15);
    use rand::{Rng, SeedableRng};
    let mut v = RLSample {
        x1: DVector::from_fn(op.dom.n1, |_, _| rng.random_range(-1.0..1.0)),
        x2: DMatrix::from_fn(op.dom.n2, grid.nodes.len(), |_, _| {
            rng.random_range(-1.0..1.0)
        }),
        grid: grid.clone(),
    };
    let n0 = v.norm();
    if n0 == 0.0 {
        return 0.0;
    }
    v = v.scale(1.0 / n0);
    let mut lambda: f64 = 0.0;
    for _ in 0..iters {
        let av = apply(op, &v).expect("norm estimate apply");
        let aav = apply(&adj, &av).expect("norm estimate adjoint apply");
        lambda = aav.inner(&v).max(0.0);
        let n = aav.norm();
        if n < 1e-300 {
            return 0.0;
        }
        v = aav.scale(1.0 / n);
    }
    lambda.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testgen;
    use approx::assert_abs_diff_eq;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn grid(order: usize) -> QuadGrid {
        QuadGrid::new(unit(), order)
    }

    #[test]
    fn identity_apply_is_identity() {
        let mut rng = testgen::rng(1);
        let dims = PIDims::new(2, 2);
        let id = PIOp::<f64>::identity(dims, unit());
        let x = testgen::rand_sample(&mut rng, dims, &grid(16), 3);
        let y = apply(&id, &x).unwrap();
        assert_abs_diff_eq!((&y.x1 - &x.x1).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((&y.x2 - &x.x2).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn volterra_apply_of_constant_is_s() {
        // R1 = 1 on [0,1], x2 ≡ 1 → distributed output ≈ s at the nodes
        let mut op = PIOp::<f64>::zero(PIDims::new(0, 1), PIDims::new(0, 1), unit());
        op.r1 = MatPoly2::monomial(0, 0, 1.0);
        let g = grid(16);
        let x = RLSample::from_poly(
            DVector::zeros(0),
            &MatPoly1::monomial(0, 1.0),
            g.clone(),
        );
        let y = apply(&op, &x).unwrap();
        for (q, &s) in g.nodes.iter().enumerate() {
            assert_abs_diff_eq!(y.x2[(0, q)], s, epsilon = 1e-10);
        }
    }

    #[test]
    fn q1_row_integrates_distributed_part() {
        // Q1 = 1, x2(s) = s → finite part 0.5
        let mut op = PIOp::<f64>::zero(PIDims::new(0, 1), PIDims::new(1, 0), unit());
        op.q1 = MatPoly1::monomial(0, 1.0);
        let x = RLSample::from_poly(
            DVector::zeros(0),
            &MatPoly1::monomial(1, 1.0),
            grid(16),
        );
        let y = apply(&op, &x).unwrap();
        assert_abs_diff_eq!(y.x1[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn apply_rejects_coarse_grid() {
        let mut rng = testgen::rng(7);
        let dims = PIDims::new(1, 1);
        let op = testgen::rand_piop(&mut rng, dims, dims, unit(), 3);
        let x = testgen::rand_sample(&mut rng, dims, &grid(3), 2);
        assert!(matches!(
            apply(&op, &x),
            Err(PiopError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn lincomb_examples() {
        let mut rng = testgen::rng(2);
        let dims = PIDims::new(1, 2);
        let a = testgen::rand_piop(&mut rng, dims, dims, unit(), 2);
        // A − A = 0
        let z = pi_lincomb(&[(1.0, &a), (-1.0, &a)]).unwrap();
        assert_abs_diff_eq!(z.max_mag(), 0.0);
        // 2·I has P = 2I and R0 = 2I
        let two_id = PIOp::<f64>::identity(dims, unit()).scale(2.0);
        assert_abs_diff_eq!(two_id.p[(0, 0)], 2.0);
        assert_abs_diff_eq!(two_id.r0.coeff(0)[(1, 1)], 2.0);
        // A + 0 = A
        let zero = PIOp::zero(dims, dims, unit());
        let same = pi_lincomb(&[(1.0, &a), (1.0, &zero)]).unwrap();
        assert_abs_diff_eq!(max_coeff_diff(&same, &a), 0.0);
    }

    #[test]
    fn compose_with_identity_is_identity() {
        let mut rng = testgen::rng(3);
        let dom = PIDims::new(1, 2);
        let cod = PIDims::new(2, 1);
        let b = testgen::rand_piop(&mut rng, dom, cod, unit(), 2);
        let id = PIOp::<f64>::identity(cod, unit());
        let c = compose(&id, &b).unwrap();
        assert!(max_coeff_diff(&c, &b) < OP_COEFF_TOL);
    }

    #[test]
    fn compose_multiplication_with_volterra() {
        // A: R0 = s; B: R1 = 1 → A∘B has R1(s,θ) = s, everything else 0
        let a = PIOp::multiplication(MatPoly1::monomial(1, 1.0), unit());
        let mut b = PIOp::<f64>::zero(PIDims::new(0, 1), PIDims::new(0, 1), unit());
        b.r1 = MatPoly2::monomial(0, 0, 1.0);
        let c = compose(&a, &b).unwrap();
        assert_abs_diff_eq!(c.r1.coeff(1, 0)[(0, 0)], 1.0, epsilon = 1e-14);
        assert!(c.r0.max_mag() < 1e-14);
        assert!(c.r2.max_mag() < 1e-14);
    }

    #[test]
    fn compose_integral_row_with_multiplication() {
        // A: Q1 = 1 (codomain finite); B: R0 = s → composite Q1(s) = s
        let mut a = PIOp::<f64>::zero(PIDims::new(0, 1), PIDims::new(1, 0), unit());
        a.q1 = MatPoly1::monomial(0, 1.0);
        let b = PIOp::multiplication(MatPoly1::monomial(1, 1.0), unit());
        let c = compose(&a, &b).unwrap();
        assert_abs_diff_eq!(c.q1.coeff(1)[(0, 0)], 1.0, epsilon = 1e-14);
        assert_eq!(c.p.nrows(), 1);
        assert_eq!(c.p.ncols(), 0);
    }

    #[test]
    fn compose_agrees_with_sequential_apply() {
        let mut rng = testgen::rng(4);
        let iv = unit();
        let g = QuadGrid::new(iv, 16);
        for _ in 0..10 {
            let d0 = PIDims::new(1, 2);
            let d1 = PIDims::new(2, 1);
            let d2 = PIDims::new(1, 2);
            let b = testgen::rand_piop(&mut rng, d0, d1, iv, 3);
            let a = testgen::rand_piop(&mut rng, d1, d2, iv, 3);
            let c = compose(&a, &b).unwrap();
            let x = testgen::rand_sample(&mut rng, d0, &g, 3);
            let direct = apply(&c, &x).unwrap();
            let seq = apply(&a, &apply(&b, &x).unwrap()).unwrap();
            assert_abs_diff_eq!((&direct.x1 - &seq.x1).norm(), 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!((&direct.x2 - &seq.x2).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn adjoint_examples() {
        // P-only operator
        let p = PIOp::finite(DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]), unit());
        let pa = p.adjoint();
        assert_abs_diff_eq!((&pa.p - p.p.transpose()).norm(), 0.0);

        // R1 = 1, R2 = 0 → adjoint has R1 = 0, R2 = 1
        let mut v = PIOp::<f64>::zero(PIDims::new(0, 1), PIDims::new(0, 1), unit());
        v.r1 = MatPoly2::monomial(0, 0, 1.0);
        let va = v.adjoint();
        assert!(va.r1.max_mag() < 1e-14);
        assert_abs_diff_eq!(va.r2.coeff(0, 0)[(0, 0)], 1.0);

        // involution
        let mut rng = testgen::rng(5);
        let a = testgen::rand_piop(&mut rng, PIDims::new(2, 1), PIDims::new(1, 2), unit(), 2);
        assert_abs_diff_eq!(max_coeff_diff(&a.adjoint().adjoint(), &a), 0.0);
    }

    #[test]
    fn adjoint_satisfies_inner_product_identity() {
        let mut rng = testgen::rng(6);
        let iv = unit();
        let g = QuadGrid::new(iv, 16);
        for _ in 0..10 {
            let dom = PIDims::new(1, 2);
            let cod = PIDims::new(2, 1);
            let a = testgen::rand_piop(&mut rng, dom, cod, iv, 3);
            let x = testgen::rand_sample(&mut rng, cod, &g, 3);
            let y = testgen::rand_sample(&mut rng, dom, &g, 3);
            let lhs = x.inner(&apply(&a, &y).unwrap());
            let rhs = apply(&a.adjoint(), &x).unwrap().inner(&y);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn concat_examples() {
        let iv = unit();
        let da = PIDims::new(1, 1);
        let db = PIDims::new(0, 2);
        // diag of identities is the identity of the concatenated space
        let id = blkdiag(
            &PIOp::<f64>::identity(da, iv),
            &PIOp::<f64>::identity(db, iv),
        )
        .unwrap();
        let idc = PIOp::<f64>::identity(da.concat(&db), iv);
        assert!(max_coeff_diff(&id, &idc) < 1e-14);

        // vertical with a zero block pads rows
        let mut rng = testgen::rng(8);
        let a = testgen::rand_piop(&mut rng, da, da, iv, 1);
        let z = PIOp::zero(da, PIDims::new(1, 0), iv);
        let v = vcat(&a, &z).unwrap();
        assert_eq!(v.cod, PIDims::new(2, 1));

        // horizontal applied to stacked input = sum of parts
        let g = QuadGrid::new(iv, 16);
        let b = testgen::rand_piop(&mut rng, db, da, iv, 1);
        let h = hcat(&a, &b).unwrap();
        let xa = testgen::rand_sample(&mut rng, da, &g, 2);
        let xb = testgen::rand_sample(&mut rng, db, &g, 2);
        let stacked = RLSample {
            x1: DVector::from_iterator(1, xa.x1.iter().cloned()),
            x2: {
                let mut m = DMatrix::zeros(3, g.nodes.len());
                m.view_mut((0, 0), (1, g.nodes.len())).copy_from(&xa.x2);
                m.view_mut((1, 0), (2, g.nodes.len())).copy_from(&xb.x2);
                m
            },
            grid: g.clone(),
        };
        let direct = apply(&h, &stacked).unwrap();
        let summed = apply(&a, &xa).unwrap().add(&apply(&b, &xb).unwrap());
        assert_abs_diff_eq!((&direct.x1 - &summed.x1).norm(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!((&direct.x2 - &summed.x2).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn norm_of_scaled_identity() {
        let id = PIOp::<f64>::identity(PIDims::new(1, 1), unit()).scale(2.0);
        let n = op_norm_estimate(&id, 16, 50);
        assert_abs_diff_eq!(n, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn norm_of_multiplication_by_s() {
        let op = PIOp::multiplication(MatPoly1::monomial(1, 1.0), unit());
        let n = op_norm_estimate(&op, 96, 4000);
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn norm_of_volterra_operator() {
        let mut op = PIOp::<f64>::zero(PIDims::new(0, 1), PIDims::new(0, 1), unit());
        op.r1 = MatPoly2::monomial(0, 0, 1.0);
        let n = op_norm_estimate(&op, 16, 300);
        let exact = 2.0 / std::f64::consts::PI;
        assert_abs_diff_eq!(n, exact, epsilon = 1e-3);

        // independent oracle: SVD of the discretized kernel
        let g = QuadGrid::new(unit(), 64);
        let nq = g.nodes.len();
        let mut k = DMatrix::zeros(nq, nq);
        for i in 0..nq {
            for j in 0..nq {
                if g.nodes[j] <= g.nodes[i] {
                    k[(i, j)] = g.weights[j].sqrt() * g.weights[i].sqrt();
                }
            }
        }
        let svd_max = k.svd(false, false).singular_values[0];
        assert_abs_diff_eq!(svd_max, exact, epsilon = 2e-2);
        assert_abs_diff_eq!(n, svd_max, epsilon = 2e-2);
    }

    #[test]
    fn zero_operator_norm_is_zero() {
        let z = PIOp::<f64>::zero(PIDims::new(1, 1), PIDims::new(1, 1), unit());
        assert_eq!(op_norm_estimate(&z, 16, 5), 0.0);
    }
}
