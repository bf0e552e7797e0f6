//! Reference machinery: brute-force Monte Carlo renderers, a dense
//! quadrature projection of SH products and image error metrics.
//!
//! None of this shares sampling or SH evaluation code with the baker, so
//! agreement between the two paths is meaningful.

use std::f64::consts::PI;

use glam::DVec3;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baker::spawn_ray;
use crate::error::{Error, Result};
use crate::geom::Hit;
use crate::image::{luminance, Image};
use crate::render::{Camera, Exponent};
use crate::sampling::{orthonormal_basis, substream, uniform_hemisphere, Domain};
use crate::scene::Scene;
use crate::sh::{coeff_count, gauss_legendre, Direction, SHVector};

/// Diffuse plus normalized Phong BRDF of the material at `hit`.
fn brdf(scene: &Scene, hit: &Hit, n: DVec3, view: DVec3, wi: DVec3) -> DVec3 {
    let m = scene.material(hit.object_id);
    let mut f = m.diffuse.at(hit.uv) / PI;
    if m.specular != DVec3::ZERO {
        let s = match &m.exponent {
            Exponent::Constant(s) => *s,
            Exponent::Texture(img) => img.sample_uv(hit.uv).x.max(1.0),
        };
        let r = 2.0 * view.dot(n) * n - view;
        f += m.specular * (s + 1.0) / (2.0 * PI) * wi.dot(r).max(0.0).powf(s);
    }
    f
}

/// `count` uniform directions on the hemisphere about `n`, jittered over a
/// grid in `(cos θ, φ)`; a remainder that does not fill the grid is drawn
/// without stratification.
fn hemisphere_dirs(count: usize, n: DVec3, rng: &mut impl Rng) -> Vec<DVec3> {
    let a = ((count as f64).sqrt() as usize).max(1);
    let b = count / a;
    let (t, bt) = orthonormal_basis(n);
    let mut out = Vec::with_capacity(count);
    for i in 0..a {
        for j in 0..b {
            let z = (i as f64 + rng.gen::<f64>()) / a as f64;
            let phi = 2.0 * PI * (j as f64 + rng.gen::<f64>()) / b as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            out.push(t * (r * phi.cos()) + bt * (r * phi.sin()) + n * z);
        }
    }
    while out.len() < count {
        out.push(uniform_hemisphere(rng, n));
    }
    out
}

/// Direct lighting leaving `hit` towards `view` arriving along `wi`,
/// divided by the uniform-hemisphere density.
fn direct_along(scene: &Scene, hit: &Hit, view: DVec3, n: DVec3, wi: DVec3) -> DVec3 {
    let dir = Direction::new_unchecked(wi);
    if scene.bvh().occluded(&spawn_ray(scene.bvh(), hit.position, hit.geometric_normal.vec(), dir)) {
        return DVec3::ZERO;
    }
    scene.env().sample(dir) * brdf(scene, hit, n, view, wi) * wi.dot(n) * 2.0 * PI
}

fn render_mc(
    scene: &Scene,
    camera: &Camera,
    domain: Domain,
    seed: u64,
    background: bool,
    pixel: impl Fn(&Hit, DVec3, &mut rand_chacha::ChaCha8Rng) -> DVec3 + Sync,
) -> Result<Image> {
    camera.validate()?;
    let w = camera.width;
    let pixels: Vec<DVec3> = (0..w * camera.height)
        .into_par_iter()
        .map(|i| {
            let ray = camera.ray(i % w, i / w);
            match scene.bvh().intersect(&ray) {
                Some(hit) => {
                    let mut rng = substream(seed, domain, i as u64);
                    pixel(&hit, -ray.dir.vec(), &mut rng)
                }
                None if background => scene.env().sample(ray.dir),
                None => DVec3::ZERO,
            }
        })
        .collect();
    Image::from_pixels(w, camera.height, pixels)
}

/// Direct-lighting reference: `spp` stratified uniform-hemisphere samples
/// per pixel of environment radiance times BRDF, visibility and cosine.
pub fn mc_direct(scene: &Scene, camera: &Camera, spp: usize, seed: u64) -> Result<Image> {
    if spp == 0 {
        return Err(Error::InvalidInput("spp must be positive".into()));
    }
    render_mc(scene, camera, Domain::McDirect, seed, true, |hit, view, rng| {
        let n = scene.shading_normal(hit);
        hemisphere_dirs(spp, n, rng).into_iter().map(|wi| direct_along(scene, hit, view, n, wi)).sum::<DVec3>()
            / spp as f64
    })
}

/// One-bounce indirect reference: each hemisphere sample that hits a
/// surface adds that surface's direct lighting (one light sample) towards
/// the shaded point. Only the indirect term is returned; misses are black.
pub fn mc_one_bounce(scene: &Scene, camera: &Camera, spp: usize, seed: u64) -> Result<Image> {
    if spp == 0 {
        return Err(Error::InvalidInput("spp must be positive".into()));
    }
    let bvh = scene.bvh();
    render_mc(scene, camera, Domain::McBounce, seed, false, |hit, view, rng| {
        let n = scene.shading_normal(hit);
        let mut sum = DVec3::ZERO;
        for wi in hemisphere_dirs(spp, n, rng) {
            let dir = Direction::new_unchecked(wi);
            let Some(q) = bvh.intersect(&spawn_ray(bvh, hit.position, hit.geometric_normal.vec(), dir)) else {
                continue;
            };
            let nq = scene.shading_normal(&q);
            let lq = direct_along(scene, &q, -wi, nq, uniform_hemisphere(rng, nq));
            sum += lq * brdf(scene, hit, n, view, wi) * wi.dot(n) * 2.0 * PI;
        }
        sum / spp as f64
    })
}

/// Real SH basis at `(θ, φ)` evaluated with the textbook associated
/// Legendre recurrence and explicit trigonometry.
fn sh_trig(theta: f64, phi: f64, band: usize, out: &mut [f64]) {
    let x = theta.cos();
    let s = theta.sin();
    for l in 0..band {
        for m in 0..=l {
            let p = legendre(l, m, x, s);
            let fact: f64 = ((l - m + 1)..=(l + m)).map(|f| f as f64).product();
            let k = ((2 * l + 1) as f64 / (4.0 * PI) / fact).sqrt();
            let base = l * (l + 1);
            if m == 0 {
                out[base] = k * p;
            } else {
                let mf = m as f64;
                out[base + m] = 2f64.sqrt() * k * p * (mf * phi).cos();
                out[base - m] = 2f64.sqrt() * k * p * (mf * phi).sin();
            }
        }
    }
}

/// `P_l^m(x)` without the Condon–Shortley phase, `s = √(1−x²)`.
fn legendre(l: usize, m: usize, x: f64, s: f64) -> f64 {
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= (2 * i - 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut pl = 0.0;
    for ll in (m + 2)..=l {
        pl = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = pl;
    }
    pl
}

/// SH projection of the pointwise product of two SH functions by direct
/// quadrature over the sphere, with a rule exact for the degree-`3(band−1)`
/// integrands `y_k·a·b`.
pub fn quadrature_project_product(a: &SHVector, b: &SHVector) -> Result<SHVector> {
    if a.band() != b.band() {
        return Err(Error::BandMismatch(a.band(), b.band()));
    }
    let band = a.band();
    let k = coeff_count(band);
    let degree = 3 * band.saturating_sub(1);
    // one node more than strictly needed in each direction
    let (zs, wz) = gauss_legendre(degree / 2 + 2);
    let n_phi = degree + 2;
    let mut y = vec![0.0; k];
    let mut out = vec![0.0; k];
    for (z, wzi) in zs.iter().zip(&wz) {
        let theta = z.acos();
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            sh_trig(theta, phi, band, &mut y);
            let fa: f64 = a.coeffs().iter().zip(&y).map(|(c, v)| c * v).sum();
            let fb: f64 = b.coeffs().iter().zip(&y).map(|(c, v)| c * v).sum();
            let w = wzi * 2.0 * PI / n_phi as f64 * fa * fb;
            for (o, v) in out.iter_mut().zip(&y) {
                *o += w * v;
            }
        }
    }
    SHVector::from_coeffs(band, out)
}

/// Error of a test image against a reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub rmse: f64,
    /// RMSE divided by the mean reference luminance.
    pub rel_rmse: f64,
    pub max_abs: f64,
    pub pixels: usize,
}

/// Compares `test` against `reference`, over the pixels where `mask` is
/// true (all pixels when `None`).
pub fn image_metrics(test: &Image, reference: &Image, mask: Option<&[bool]>) -> Result<ImageMetrics> {
    if test.width() != reference.width() || test.height() != reference.height() {
        return Err(Error::InvalidInput(format!(
            "image sizes differ: {}x{} vs {}x{}",
            test.width(),
            test.height(),
            reference.width(),
            reference.height()
        )));
    }
    if let Some(m) = mask {
        if m.len() != test.pixels().len() {
            return Err(Error::LengthMismatch { expected: test.pixels().len(), got: m.len() });
        }
    }
    let (mut sq, mut lum, mut max_abs, mut n) = (0.0, 0.0, 0.0f64, 0usize);
    for (i, (a, b)) in test.pixels().iter().zip(reference.pixels()).enumerate() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        let d = *a - *b;
        sq += d.length_squared();
        max_abs = max_abs.max(d.abs().max_element());
        lum += luminance(*b);
        n += 1;
    }
    if n == 0 {
        return Ok(ImageMetrics { rmse: 0.0, rel_rmse: 0.0, max_abs: 0.0, pixels: 0 });
    }
    let rmse = (sq / (3 * n) as f64).sqrt();
    let mean = lum / n as f64;
    let rel_rmse = if mean > 0.0 { rmse / mean } else if rmse == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(ImageMetrics { rmse, rel_rmse, max_abs, pixels: n })
}

/// Pixels whose primary ray hits geometry.
pub fn coverage_mask(scene: &Scene, camera: &Camera) -> Vec<bool> {
    let w = camera.width;
    (0..w * camera.height).into_par_iter().map(|i| scene.bvh().intersect(&camera.ray(i % w, i / w)).is_some()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envlight::EnvMap;
    use crate::geom::Mesh;
    use crate::render::Material;
    use crate::sh::{project, QuadratureRule, TriplingTensor};
    use rand::SeedableRng;

    fn random_sh(rng: &mut impl Rng, band: usize) -> SHVector {
        SHVector::from_coeffs(band, (0..band * band).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn trig_basis_matches_polynomial_basis() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut y = vec![0.0; 49];
        for _ in 0..50 {
            let (t, p) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
            sh_trig(t, p, 7, &mut y);
            let d = Direction::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos()).unwrap();
            let want = crate::sh::eval_basis(d, 7).unwrap();
            for (a, b) in y.iter().zip(want.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_with_constant_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let one = project(|_| 1.0, 5, QuadratureRule::Product { degree: 8 }).unwrap();
        for _ in 0..5 {
            let a = random_sh(&mut rng, 5);
            let p = quadrature_project_product(&a, &one).unwrap();
            for (x, y) in p.coeffs().iter().zip(a.coeffs()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn basis_product_matches_tensor_column() {
        let tau = TriplingTensor::compute(5).unwrap();
        let e3 = SHVector::basis(5, 3);
        let p = quadrature_project_product(&e3, &e3).unwrap();
        for (k, v) in p.coeffs().iter().enumerate() {
            assert!((v - tau.get(3, 3, k)).abs() < 1e-7, "{k}");
        }
    }

    #[test]
    fn metrics_basics() {
        let a = Image::from_fn(4, 3, |x, y| DVec3::new(x as f64, y as f64, 0.5));
        let m = image_metrics(&a, &a, None).unwrap();
        assert_eq!((m.rmse, m.rel_rmse, m.max_abs), (0.0, 0.0, 0.0));
        let b = a.map(|c| c + DVec3::splat(0.1));
        let m = image_metrics(&b, &a, None).unwrap();
        assert!((m.max_abs - 0.1).abs() < 1e-12);
        assert!((m.rmse - 0.1).abs() < 1e-12);
        assert_eq!(image_metrics(&a, &b, None).unwrap().rmse, m.rmse);
        assert!(image_metrics(&a, &Image::new(2, 2), None).is_err());
        let mask = vec![false; 12];
        assert_eq!(image_metrics(&b, &a, Some(&mask)).unwrap().pixels, 0);
    }

    fn plane_scene(c: f64, occluded: bool) -> (Scene, Camera) {
        let env = EnvMap::constant(16, 8, DVec3::splat(c)).unwrap();
        let mut meshes = vec![Mesh::ground_plane(1.0, 0.0, 1)];
        if occluded {
            meshes.push(Mesh::cuboid("box", DVec3::new(-2.0, -2.0, -1.0), DVec3::splat(2.0), 1, true, [true; 6]));
        }
        let scene = Scene::new(meshes, env, vec![Material::diffuse(DVec3::splat(0.5))], 3).unwrap();
        let cam = Camera::new(DVec3::new(0.0, 0.0, 1.5), DVec3::ZERO, DVec3::Y, 30.0, 4, 4).unwrap();
        (scene, cam)
    }

    #[test]
    fn furnace_converges() {
        let (scene, cam) = plane_scene(0.8, false);
        let img = mc_direct(&scene, &cam, 4096, 1).unwrap();
        for p in img.pixels() {
            assert!((p.x - 0.4).abs() < 0.01 * 0.4, "{p:?}");
        }
        let bounce = mc_one_bounce(&scene, &cam, 64, 1).unwrap();
        assert!(bounce.pixels().iter().all(|p| *p == DVec3::ZERO));
    }

    #[test]
    fn enclosed_is_black() {
        let (scene, cam) = plane_scene(1.0, true);
        let img = mc_direct(&scene, &cam, 64, 1).unwrap();
        assert!(img.pixels().iter().all(|p| *p == DVec3::ZERO));
    }

    #[test]
    fn deterministic_and_linear() {
        let (scene, cam) = plane_scene(1.0, false);
        let a = mc_direct(&scene, &cam, 16, 3).unwrap();
        assert_eq!(a, mc_direct(&scene, &cam, 16, 3).unwrap());
        let (scene2, _) = plane_scene(2.0, false);
        let b = mc_direct(&scene2, &cam, 16, 3).unwrap();
        for (x, y) in a.pixels().iter().zip(b.pixels()) {
            assert!((2.0 * *x - *y).length() < 1e-12);
        }
    }
}
