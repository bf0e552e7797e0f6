//! One-bounce inter-reflection textures.
//!
//! Each texel gathers radiance leaving the surfaces its hemisphere sees,
//! shaded from the zero-bounce transfer at those surfaces, and stores the
//! cosine-weighted SH projection of that indirect environment per channel.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use glam::DVec3;
use log::{info, warn};
use rayon::prelude::*;

use crate::baker::{dilate, spawn_ray, BakeSettings, GBuffer};
use crate::error::{Error, Result};
use crate::geom::Hit;
use crate::render::{check_texture_set, shade_hit, Lighting, ShadeScratch, Shaded};
use crate::sampling::{substream, Domain, StratifiedSphere};
use crate::scene::Scene;
use crate::sh::{basis_into, coeff_count, Direction};
use crate::texture::{Sidecar, TransferTexture};

/// Radiance leaving `hit` towards `view` under the active light, from the
/// zero-bounce texture set `t0`. `None` when the hit has no valid texel.
pub fn shade_from_transfer(
    scene: &Scene,
    t0: &[TransferTexture],
    lighting: &Lighting,
    hit: &Hit,
    view: Direction,
) -> Result<Option<Shaded>> {
    check_texture_set(scene, t0, 1)?;
    let mut s = ShadeScratch::new(scene.band(), coeff_count(scene.band()));
    Ok(shade_hit(scene, t0, lighting, hit, view, &mut s))
}

/// Metadata written next to a bounce texture baked under `lighting`.
pub fn bounce_sidecar(scene: &Scene, lighting: &Lighting, bounce_index: u32) -> Sidecar {
    Sidecar {
        light_hash: Some(lighting.light().hash()),
        brdf_description: scene.brdf_description(),
        bounce_index,
    }
}

/// Bakes the one-bounce texture for the texture set rasterized into `g`.
pub fn bake_one_bounce(
    g: &GBuffer,
    scene: &Scene,
    t0: &[TransferTexture],
    lighting: &Lighting,
    settings: &BakeSettings,
) -> Result<TransferTexture> {
    settings.validate()?;
    check_texture_set(scene, t0, 1)?;
    if settings.band != scene.band() || lighting.band() != scene.band() {
        return Err(Error::BandMismatch(settings.band, scene.band()));
    }
    let k = coeff_count(settings.band);
    let sampler = StratifiedSphere::new(settings.samples);
    let texels: Vec<usize> = (0..g.texel_count()).filter(|&t| g.is_valid(t)).collect();
    info!("baking one bounce: {} valid texels, {} samples", texels.len(), sampler.len());
    let misses = AtomicU64::new(0);
    let baked: Vec<Vec<f64>> = texels
        .par_iter()
        .map(|&t| {
            let n = g.normal(t);
            if !g.is_valid(t) || (n.length_squared() - 1.0).abs() > 1e-4 {
                return Err(Error::MaskBreach(t));
            }
            let (p, ng) = (g.position(t), g.geometric_normal(t));
            let mut rng = substream(settings.seed, Domain::Bounce, t as u64);
            let mut s = ShadeScratch::new(settings.band, k);
            let mut y = vec![0.0; k];
            let mut out = vec![0.0; 3 * k];
            let mut local_misses = 0;
            sampler.for_each(&mut rng, |w| {
                let cos = w.dot(n);
                if cos <= 0.0 {
                    return;
                }
                let dir = Direction::new_unchecked(w);
                let Some(hit) = scene.bvh().intersect(&spawn_ray(scene.bvh(), p, ng, dir)) else {
                    return;
                };
                let view = Direction::new_unchecked(-w);
                let radiance: DVec3 = match shade_hit(scene, t0, lighting, &hit, view, &mut s) {
                    Some(sh) => sh.color,
                    None => {
                        local_misses += 1;
                        return;
                    }
                };
                basis_into(w, settings.band, &mut y);
                for c in 0..3 {
                    let r = radiance[c] * cos;
                    for (o, yi) in out[c * k..(c + 1) * k].iter_mut().zip(&y) {
                        *o += r * yi;
                    }
                }
            });
            misses.fetch_add(local_misses, Ordering::Relaxed);
            let scale = 4.0 * PI / sampler.len() as f64;
            out.iter_mut().for_each(|o| *o *= scale);
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let misses = misses.into_inner();
    if misses > 0 {
        warn!("{misses} secondary hits landed on invalid texels and were treated as black");
    }
    let mut tex = TransferTexture::new(g.width(), g.height(), settings.band, 3);
    for (&t, c) in texels.iter().zip(&baked) {
        tex.set_texel(t, c);
    }
    dilate(&mut tex, settings.dilation);
    Ok(tex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baker::{bake_transfer, rasterize_gbuffer};
    use crate::envlight::{EnvMap, SHLight};
    use crate::geom::Mesh;
    use crate::render::{Material, Method};
    use crate::sh::{TriplingTensor, Y0};
    use std::sync::Arc;

    const BAND: usize = 3;

    fn settings(samples: usize) -> BakeSettings {
        BakeSettings { band: BAND, samples, seed: 5, dilation: 3 }
    }

    fn lighting(c: f64) -> Lighting {
        let tau = Arc::new(TriplingTensor::compute(BAND).unwrap());
        Lighting::new(SHLight::constant(BAND, DVec3::splat(c)), tau, Method::Tpfl).unwrap()
    }

    /// Floor (set 0) and an upright wall along x = 0.5 (set 1).
    fn floor_and_wall() -> Scene {
        let floor = Mesh::ground_plane(0.5, 0.0, 1);
        let wall = Mesh::grid("wall", DVec3::new(0.5, -0.5, 0.0), DVec3::new(0.0, 0.0, 1.0), DVec3::new(0.0, 1.0, 0.0), 1, 1)
            .with_ids(0, 1);
        let env = EnvMap::constant(8, 4, DVec3::ONE).unwrap();
        Scene::new(vec![floor, wall], env, vec![Material::diffuse(DVec3::ONE)], BAND).unwrap()
    }

    fn bake_all(scene: &Scene, res: usize, samples: usize) -> Vec<TransferTexture> {
        (0..scene.texture_set_count() as u32)
            .map(|set| {
                let g = rasterize_gbuffer(&scene.surfaces(set), res, res).unwrap();
                bake_transfer(&g, scene.bvh(), &settings(samples)).unwrap()
            })
            .collect()
    }

    #[test]
    fn open_plane_gets_nothing() {
        let env = EnvMap::constant(8, 4, DVec3::ONE).unwrap();
        let scene = Scene::new(vec![Mesh::ground_plane(1.0, 0.0, 1)], env, vec![Material::diffuse(DVec3::ONE)], BAND).unwrap();
        let t0 = bake_all(&scene, 8, 64);
        let g = rasterize_gbuffer(&scene.surfaces(0), 8, 8).unwrap();
        let t1 = bake_one_bounce(&g, &scene, &t0, &lighting(1.0), &settings(64)).unwrap();
        assert_eq!(t1.channels(), 3);
        assert!(t1.plane(0).iter().chain(t1.plane(5)).all(|v| *v == 0.0));
        assert_eq!(t1.valid_count(), 64);
    }

    #[test]
    fn floor_near_wall_is_brighter() {
        let scene = floor_and_wall();
        let t0 = bake_all(&scene, 16, 256);
        let g = rasterize_gbuffer(&scene.surfaces(0), 16, 16).unwrap();
        let t1 = bake_one_bounce(&g, &scene, &t0, &lighting(1.0), &settings(256)).unwrap();
        // row 8, near the wall (x → +0.5) versus far from it
        let near = t1.texel_sh(8 * 16 + 15, 0).coeffs()[0];
        let far = t1.texel_sh(8 * 16, 0).coeffs()[0];
        assert!(near > far && far > 0.0, "{near} {far}");
    }

    #[test]
    fn linear_in_light() {
        let scene = floor_and_wall();
        let t0 = bake_all(&scene, 8, 64);
        let g = rasterize_gbuffer(&scene.surfaces(0), 8, 8).unwrap();
        let a = bake_one_bounce(&g, &scene, &t0, &lighting(1.0), &settings(64)).unwrap();
        let b = bake_one_bounce(&g, &scene, &t0, &lighting(2.0), &settings(64)).unwrap();
        for p in 0..a.plane_count() {
            for (x, y) in a.plane(p).iter().zip(b.plane(p)) {
                assert!((2.0 * x - y).abs() <= 1e-6 * y.abs().max(1e-6), "{x} {y}");
            }
        }
    }

    #[test]
    fn shade_from_transfer_furnace() {
        // diffuse white floor under uniform light c: outgoing radiance ≈ c
        let scene = floor_and_wall();
        let t0 = bake_all(&scene, 8, 1024);
        let ray = crate::geom::Ray::new(DVec3::new(-0.3, 0.0, 1.0), Direction::new(0.0, 0.0, -1.0).unwrap(), 0.0, 10.0).unwrap();
        let hit = scene.bvh().intersect(&ray).unwrap();
        let sh = shade_from_transfer(&scene, &t0, &lighting(0.5), &hit, Direction::Z).unwrap().unwrap();
        // the wall blocks part of the sky, so the value sits below the open furnace value
        let open = 0.5 * crate::sh::clamped_cosine_zonal(1)[0] / PI / Y0 * 2.0 * PI.sqrt() * Y0;
        assert!(sh.color.x > 0.0 && sh.color.x < open * 1.01, "{} {open}", sh.color.x);
    }

    #[test]
    fn sidecar_records_light() {
        let scene = floor_and_wall();
        let l = lighting(1.0);
        let s = bounce_sidecar(&scene, &l, 1);
        assert_eq!(s.light_hash, Some(l.light().hash()));
        assert_eq!(s.bounce_index, 1);
    }
}
