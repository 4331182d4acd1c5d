//! Robust stability and performance certification for uncertain
//! infinite-dimensional systems in Partial Integral Equation (PIE) form.
//!
//! The crate provides, bottom to top:
//!
//! * [`polyalg`] — exact-coefficient matrix polynomials in one and two
//!   spatial variables on an interval, with the integral primitives the
//!   operator algebra is built from.
//! * [`piop`] — the 4-PI operator algebra (apply, add, compose, adjoint,
//!   concatenate) together with a quadrature realization of ℝⁿ×L₂ samples
//!   used as an independent oracle for every algebraic identity.
//! * [`poscone`] — positive-semidefinite PI operator cones parameterized by
//!   PSD coefficient matrices, affine decision-variable operators, and the
//!   coefficient-matching reduction from operator (in)equalities to linear
//!   matrix constraints.
//! * [`sdpcore`] — a dense primal-dual interior-point solver for the
//!   lowered semidefinite programs, with a max-margin feasibility mode.
//! * [`iqcmult`] — IQC multipliers for static-real, time-varying-real and
//!   norm-bounded operator uncertainty blocks, plus the induced-L₂-gain
//!   performance multiplier.
//! * [`lpi_engine`] — assembly of the robust stability/performance linear
//!   PI inequality, feasibility probes, bisection for structured-singular-
//!   value upper bounds, worst-case gain minimization and trade-off sweeps.
//! * [`obsyn`] — robust Luenberger observer gain synthesis and numerical
//!   gain recovery.
//! * [`pde2pie`] — conversion of coupled ODE–PDE models (spatial order ≤ 2)
//!   into PIE form, and the bundled example models.
//! * [`simkit`] — Chebyshev-collocation time-domain validation: Monte Carlo
//!   sampling of uncertainties and empirical L₂-gain estimation.
//! * [`cli`] — the batch front-end used by the `piemu` binary.
//!
//! Data-parallel loops (Monte Carlo samples, sweep grid points, oracle
//! batches) run on rayon when the default `parallel` feature is enabled and
//! fall back to sequential iteration without it; both paths are
//! deterministic for a fixed seed.

pub mod cli;
pub mod exec;
pub mod iqcmult;
pub mod lpi_engine;
pub mod obsyn;
pub mod pde2pie;
pub mod piop;
pub mod polyalg;
pub mod poscone;
pub mod quad;
pub mod sdpcore;
pub mod simkit;
pub mod testgen;

pub use polyalg::{Interval, MatPoly1, MatPoly2};

