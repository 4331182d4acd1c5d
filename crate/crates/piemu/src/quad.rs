//! Quadrature rules, interpolation and differentiation grids.
//!
//! Gauss–Legendre rules back the ℝⁿ×L₂ sample type used as the operator
//! oracle; Chebyshev–Gauss–Lobatto nodes with Clenshaw–Curtis weights back
//! the collocation discretizations used for gain recovery and simulation.

use nalgebra::DMatrix;

/// A Gauss–Legendre rule on the reference interval [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights of the `n`-point rule, exact for polynomials of
    /// degree ≤ 2n−1. Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be at least 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-based initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
            let (_, d) = legendre_with_deriv(n, 0.0);
            weights[n / 2] = 2.0 / (d * d);
        }
        Self { nodes, weights }
    }

    /// Map the rule onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = self.nodes.iter().map(|t| mid + half * t).collect();
        let weights = self.weights.iter().map(|w| w * half).collect();
        (nodes, weights)
    }
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Barycentric interpolation weights for an arbitrary node set.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    // Rescale products to avoid under/overflow on large grids.
    let scale = 4.0 / (nodes[n - 1] - nodes[0]);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i] *= (nodes[i] - nodes[j]) * scale;
            }
        }
        w[i] = 1.0 / w[i];
    }
    w
}

/// Values of the Lagrange cardinal functions ℓ_k(x) for the given nodes.
///
/// Exact (returns a unit vector) when `x` coincides with a node.
pub fn lagrange_basis_at(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; n];
    for (k, &t) in nodes.iter().enumerate() {
        if (x - t).abs() < 1e-14 {
            out[k] = 1.0;
            return out;
        }
    }
    let mut denom = 0.0;
    for k in 0..n {
        let c = bary[k] / (x - nodes[k]);
        out[k] = c;
        denom += c;
    }
    for v in out.iter_mut() {
        *v /= denom;
    }
    out
}

/// Barycentric differentiation matrix: (Dv)_i ≈ v'(x_i) for smooth v
/// sampled at the nodes; exact for polynomials of degree < n.
pub fn diff_matrix(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let w = barycentric_weights(nodes);
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Chebyshev–Gauss–Lobatto nodes on [a, b], ascending, n+1 points.
pub fn chebyshev_lobatto(n: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(n >= 1);
    (0..=n)
        .map(|j| {
            let t = (std::f64::consts::PI * j as f64 / n as f64).cos();
            // reversed so nodes ascend from a to b
            0.5 * (a + b) - 0.5 * (b - a) * t
        })
        .collect()
}

/// Clenshaw–Curtis weights matching [`chebyshev_lobatto`] (n+1 points on
/// [a, b]); exact for polynomials of degree ≤ n.
pub fn clenshaw_curtis_weights(n: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(n >= 1);
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    for (j, wj) in w.iter_mut().enumerate() {
        let theta = std::f64::consts::PI * j as f64 / nf;
        let mut s = 1.0;
        for k in 1..=n / 2 {
            let e = if 2 * k == n { 1.0 } else { 2.0 };
            s -= e * (2.0 * k as f64 * theta).cos() / (4.0 * k as f64 * k as f64 - 1.0);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = c * s / nf;
    }
    let half = 0.5 * (b - a);
    for v in w.iter_mut() {
        *v *= half;
    }
    w
}
