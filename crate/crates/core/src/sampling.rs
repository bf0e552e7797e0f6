//! Deterministic random substreams and sphere samplers.

use std::f64::consts::PI;

use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent streams for each consumer so texel `i` of a bake and vertex
/// `i` of another never share samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Texel = 1,
    Vertex = 2,
    Bounce = 3,
    McDirect = 4,
    McBounce = 5,
    Bench = 6,
}

/// RNG for work item `index` of `domain` under `seed`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mixed = seed ^ (domain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(index);
    rng
}

/// Multi-jittered lat-long samples in `(z, φ)`, uniform over the sphere.
///
/// The `n_z × n_phi` grid cells each hold one sample, and in addition the
/// `z` and `φ` projections are each stratified into `n_z·n_phi` intervals
/// (Chiu, Shirley and Wang's multi-jittered pattern), which keeps the error
/// on zonal integrands very low. Sample counts that are not a product of the
/// two grid sides get the remainder as plain uniform samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StratifiedSphere {
    n_z: usize,
    n_phi: usize,
    extra: usize,
}

impl StratifiedSphere {
    pub fn new(samples: usize) -> Self {
        let n_z = ((samples as f64).sqrt().floor() as usize).max(1);
        let n_phi = samples / n_z;
        StratifiedSphere { n_z, n_phi, extra: samples - n_z * n_phi }
    }

    pub fn len(&self) -> usize {
        self.n_z * self.n_phi + self.extra
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unit-square points `(s, t)`, row `j < n_phi` by column `i < n_z`.
    fn unit_square(&self, rng: &mut impl Rng) -> Vec<(f64, f64)> {
        let (m, n) = (self.n_z, self.n_phi);
        let mut p = Vec::with_capacity(m * n);
        for j in 0..n {
            for i in 0..m {
                let s = (i as f64 + (j as f64 + rng.gen::<f64>()) / n as f64) / m as f64;
                let t = (j as f64 + (i as f64 + rng.gen::<f64>()) / m as f64) / n as f64;
                p.push((s, t));
            }
        }
        for j in 0..n {
            for i in 0..m {
                let k = rng.gen_range(j..n);
                let tmp = p[j * m + i].0;
                p[j * m + i].0 = p[k * m + i].0;
                p[k * m + i].0 = tmp;
            }
        }
        for i in 0..m {
            for j in 0..n {
                let k = rng.gen_range(i..m);
                let tmp = p[j * m + i].1;
                p[j * m + i].1 = p[j * m + k].1;
                p[j * m + k].1 = tmp;
            }
        }
        p
    }

    pub fn for_each(&self, rng: &mut impl Rng, mut f: impl FnMut(DVec3)) {
        for (s, t) in self.unit_square(rng) {
            f(sphere_point(1.0 - 2.0 * s, 2.0 * PI * t));
        }
        for _ in 0..self.extra {
            f(uniform_sphere(rng));
        }
    }
}

#[inline]
fn sphere_point(z: f64, phi: f64) -> DVec3 {
    let r = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = phi.sin_cos();
    DVec3::new(r * c, r * s, z)
}

pub fn uniform_sphere(rng: &mut impl Rng) -> DVec3 {
    sphere_point(1.0 - 2.0 * rng.gen::<f64>(), 2.0 * PI * rng.gen::<f64>())
}

/// Uniform direction on the hemisphere around `n` (pdf `1/2π`).
pub fn uniform_hemisphere(rng: &mut impl Rng, n: DVec3) -> DVec3 {
    let local = sphere_point(rng.gen::<f64>(), 2.0 * PI * rng.gen::<f64>());
    let (t, b) = orthonormal_basis(n);
    local.x * t + local.y * b + local.z * n
}

/// Two unit tangents completing `n` to a right-handed frame.
pub fn orthonormal_basis(n: DVec3) -> (DVec3, DVec3) {
    // Duff et al. branchless construction
    let sign = 1f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    (DVec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x), DVec3::new(b, sign + n.y * n.y * a, -n.y))
}
