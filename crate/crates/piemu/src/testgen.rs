//! Seeded random generators for operators, kernels and samples.
//!
//! Shared by the unit/property suites and by `piemu selftest`, which runs
//! the same oracle batches from the command line.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::piop::{PIDims, PIOp, QuadGrid, RLSample};
use crate::polyalg::{Interval, MatPoly1, MatPoly2};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn rand_mat(rng: &mut StdRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn rand_poly1(rng: &mut StdRng, rows: usize, cols: usize, deg: usize) -> MatPoly1<f64> {
    MatPoly1::from_coeffs((0..=deg).map(|_| rand_mat(rng, rows, cols)).collect())
}

pub fn rand_poly2(
    rng: &mut StdRng,
    rows: usize,
    cols: usize,
    ds: usize,
    dt: usize,
) -> MatPoly2<f64> {
    MatPoly2::from_coeffs(
        ds,
        dt,
        (0..(ds + 1) * (dt + 1))
            .map(|_| rand_mat(rng, rows, cols))
            .collect(),
    )
}

/// Random dense PI operator with all six parameter blocks populated.
pub fn rand_piop(
    rng: &mut StdRng,
    dom: PIDims,
    cod: PIDims,
    iv: Interval,
    deg: usize,
) -> PIOp<f64> {
    PIOp::from_parts(
        dom,
        cod,
        iv,
        rand_mat(rng, cod.n1, dom.n1),
        rand_poly1(rng, cod.n1, dom.n2, deg),
        rand_poly1(rng, cod.n2, dom.n1, deg),
        rand_poly1(rng, cod.n2, dom.n2, deg),
        rand_poly2(rng, cod.n2, dom.n2, deg, deg),
        rand_poly2(rng, cod.n2, dom.n2, deg, deg),
    )
    .expect("consistent random operator")
}

/// Random sample whose distributed part is polynomial of the given degree
/// (so quadrature application is exact).
pub fn rand_sample(rng: &mut StdRng, dims: PIDims, grid: &QuadGrid, deg: usize) -> RLSample {
    let x1 = DVector::from_fn(dims.n1, |_, _| rng.random_range(-1.0..1.0));
    let poly = rand_poly1(rng, dims.n2, 1, deg);
    RLSample::from_poly(x1, &poly, grid.clone())
}

/// As [`rand_sample`] but normalized to unit ℝ×L₂ norm (zero-norm draws
/// are redrawn).
pub fn rand_unit_sample(rng: &mut StdRng, dims: PIDims, grid: &QuadGrid, deg: usize) -> RLSample {
    loop {
        let s = rand_sample(rng, dims, grid, deg);
        let n = s.norm();
        if n > 1e-8 {
            return s.scale(1.0 / n);
        }
    }
}
