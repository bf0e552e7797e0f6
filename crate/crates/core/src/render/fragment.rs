//! Per-pixel rendering from transfer textures.

use glam::DVec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::shade::{shade_loaded, shade_radiance, Lighting, ShadeScratch, Shaded, SurfaceShading};
use super::Camera;
use crate::error::{Error, Result};
use crate::geom::Hit;
use crate::image::Image;
use crate::scene::Scene;
use crate::sh::{coeff_count, Direction};
use crate::texture::{Sidecar, TransferTexture};

/// Counters gathered over one render.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderStats {
    pub pixels: u64,
    /// Pixels whose primary ray hit geometry.
    pub covered: u64,
    /// Shading evaluations performed.
    pub shades: u64,
    /// Shades with at least one channel clamped at zero.
    pub clamped: u64,
    /// Fetches that found no valid texel.
    pub texel_misses: u64,
}

impl RenderStats {
    pub fn merge(self, o: RenderStats) -> RenderStats {
        RenderStats {
            pixels: self.pixels + o.pixels,
            covered: self.covered + o.covered,
            shades: self.shades + o.shades,
            clamped: self.clamped + o.clamped,
            texel_misses: self.texel_misses + o.texel_misses,
        }
    }

    pub fn clamp_rate(&self) -> f64 {
        if self.shades == 0 {
            0.0
        } else {
            self.clamped as f64 / self.shades as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub image: Image,
    pub stats: RenderStats,
}

/// Which terms end up in the image.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    #[default]
    Full,
    /// Indirect term only, over a black background.
    IndirectOnly,
}

/// Baked bounce textures with their metadata, one per texture set.
#[derive(Clone, Copy, Debug)]
pub struct Indirect<'a> {
    pub textures: &'a [TransferTexture],
    pub sidecars: &'a [Sidecar],
}

impl Indirect<'_> {
    /// Refuses bounce textures baked under a different light.
    pub fn check_light(&self, lighting: &Lighting) -> Result<()> {
        let active = lighting.light().hash();
        for s in self.sidecars {
            if s.light_hash.as_deref() != Some(active.as_str()) {
                let texture = s.light_hash.clone().unwrap_or_else(|| "none".into());
                return Err(Error::LightMismatch { texture, active });
            }
        }
        if self.sidecars.len() != self.textures.len() {
            return Err(Error::InvalidInput("every bounce texture needs its metadata".into()));
        }
        Ok(())
    }
}

/// Checks that `textures` covers every texture set of `scene` at the
/// scene's band with `channels` channels.
pub fn check_texture_set(scene: &Scene, textures: &[TransferTexture], channels: usize) -> Result<()> {
    let need = scene.texture_set_count();
    if textures.len() < need {
        return Err(Error::InvalidInput(format!("{need} texture sets needed, {} supplied", textures.len())));
    }
    for t in textures {
        if t.band() != scene.band() {
            return Err(Error::BandMismatch(t.band(), scene.band()));
        }
        if t.channels() != channels {
            return Err(Error::InvalidInput(format!("expected {channels}-channel textures, got {}", t.channels())));
        }
    }
    Ok(())
}

pub(crate) fn surface_at<'s>(scene: &'s Scene, hit: &Hit) -> SurfaceShading<'s> {
    let m = scene.material(hit.object_id);
    SurfaceShading { diffuse: m.diffuse.at(hit.uv), specular: m.specular, kernel: scene.kernel(hit.object_id, hit.uv) }
}

/// Direct radiance leaving `hit` towards `view`, from the zero-bounce
/// texture of its set. `None` when no valid texel covers the hit.
pub(crate) fn shade_hit(
    scene: &Scene,
    t0: &[TransferTexture],
    lighting: &Lighting,
    hit: &Hit,
    view: Direction,
    s: &mut ShadeScratch,
) -> Option<Shaded> {
    if !t0[hit.texture_set as usize].sample_into(hit.uv, &mut s.transfer) {
        return None;
    }
    let n = Direction::new_unchecked(scene.shading_normal(hit));
    Some(shade_loaded(lighting, &surface_at(scene, hit), n, view, s))
}

/// One primary ray per pixel; hits are shaded from their texture set's
/// transfer, misses show the environment.
pub fn render_fragment(
    scene: &Scene,
    camera: &Camera,
    t0: &[TransferTexture],
    lighting: &Lighting,
    indirect: Option<Indirect<'_>>,
    output: Output,
) -> Result<Rendered> {
    camera.validate()?;
    check_texture_set(scene, t0, 1)?;
    if lighting.band() != scene.band() {
        return Err(Error::BandMismatch(lighting.band(), scene.band()));
    }
    if let Some(ind) = &indirect {
        ind.check_light(lighting)?;
        check_texture_set(scene, ind.textures, 3)?;
    }
    if output == Output::IndirectOnly && indirect.is_none() {
        return Err(Error::InvalidInput("indirect-only output needs bounce textures".into()));
    }
    let k = coeff_count(scene.band());
    let rows: Vec<(Vec<DVec3>, RenderStats)> = (0..camera.height)
        .into_par_iter()
        .map(|y| {
            let mut s = ShadeScratch::new(scene.band(), k);
            let mut bounce = vec![0.0; 3 * k];
            let mut stats = RenderStats::default();
            let row = (0..camera.width)
                .map(|x| {
                    stats.pixels += 1;
                    let ray = camera.ray(x, y);
                    let Some(hit) = scene.bvh().intersect(&ray) else {
                        return match output {
                            Output::Full => scene.env().sample(ray.dir),
                            Output::IndirectOnly => DVec3::ZERO,
                        };
                    };
                    stats.covered += 1;
                    stats.shades += 1;
                    let view = Direction::new_unchecked(-ray.dir.vec());
                    let mut color = DVec3::ZERO;
                    let mut clamped = false;
                    if output == Output::Full {
                        match shade_hit(scene, t0, lighting, &hit, view, &mut s) {
                            Some(sh) => {
                                color += sh.color;
                                clamped |= sh.clamped;
                            }
                            None => stats.texel_misses += 1,
                        }
                    }
                    if let Some(ind) = &indirect {
                        if ind.textures[hit.texture_set as usize].sample_into(hit.uv, &mut bounce) {
                            let n = Direction::new_unchecked(scene.shading_normal(&hit));
                            let sh = shade_radiance(&bounce, &surface_at(scene, &hit), n, view, &mut s);
                            color += sh.color;
                            clamped |= sh.clamped;
                        } else {
                            stats.texel_misses += 1;
                        }
                    }
                    stats.clamped += clamped as u64;
                    color
                })
                .collect();
            (row, stats)
        })
        .collect();
    let stats = rows.iter().fold(RenderStats::default(), |a, (_, s)| a.merge(*s));
    let pixels = rows.into_iter().flat_map(|(r, _)| r).collect();
    Ok(Rendered { image: Image::from_pixels(camera.width, camera.height, pixels)?, stats })
}
