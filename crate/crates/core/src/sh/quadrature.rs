//! Spherical quadrature: Gauss-Legendre in `z = cos θ` times a uniform
//! trapezoid in `φ`.

use std::f64::consts::PI;

use glam::DVec3;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Identifies a deterministic sphere quadrature rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Product rule exact for polynomials in `(x, y, z)` up to `degree`.
    Product { degree: usize },
    /// Separate product rules on each hemisphere, each exact to `degree`:
    /// also exact for functions that are polynomial on either side of the
    /// equator, such as a clamped cosine about `+z`.
    SplitProduct { degree: usize },
}

impl QuadratureRule {
    pub fn degree(self) -> usize {
        match self {
            QuadratureRule::Product { degree } | QuadratureRule::SplitProduct { degree } => degree,
        }
    }
}

/// Materialized nodes and weights of a [`QuadratureRule`].
#[derive(Clone, Debug)]
pub struct SphereRule {
    rule: QuadratureRule,
    points: Vec<DVec3>,
    weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(rule: QuadratureRule) -> Self {
        let degree = rule.degree();
        let n_phi = degree + 1;
        let n_z = degree / 2 + 1;
        let z_nodes: Vec<(f64, f64)> = match rule {
            QuadratureRule::Product { .. } => {
                let (x, w) = gauss_legendre(n_z);
                x.into_iter().zip(w).collect()
            }
            QuadratureRule::SplitProduct { .. } => {
                let (x, w) = gauss_legendre(n_z);
                let lower = x.iter().zip(&w).map(|(&x, &w)| (0.5 * (x - 1.0), 0.5 * w));
                let upper = x.iter().zip(&w).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w));
                lower.chain(upper).collect()
            }
        };

        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(z_nodes.len() * n_phi);
        let mut weights = Vec::with_capacity(z_nodes.len() * n_phi);
        for &(z, wz) in &z_nodes {
            let r = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                points.push(DVec3::new(r * phi.cos(), r * phi.sin(), z));
                weights.push(wz * dphi);
            }
        }
        SphereRule { rule, points, weights }
    }

    /// Product rule sized for the integrand degree.
    pub fn for_degree(degree: usize) -> Self {
        Self::new(QuadratureRule::Product { degree })
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn degree(&self) -> usize {
        self.rule.degree()
    }

    pub fn points(&self) -> &[DVec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
