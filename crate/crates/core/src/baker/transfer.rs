//! Monte Carlo projection of visibility-weighted clamped cosine onto SH.

use std::f64::consts::PI;

use glam::DVec3;
use log::info;
use rand::Rng;
use rayon::prelude::*;

use super::dilate::dilate;
use super::gbuffer::GBuffer;
use crate::error::{Error, Result};
use crate::geom::{Bvh, Ray};
use crate::sampling::{substream, Domain, StratifiedSphere};
use crate::sh::{basis_into, check_band, coeff_count, Direction, DEFAULT_BAND};
use crate::texture::TransferTexture;

/// Fewest samples accepted per texel or vertex.
pub const MIN_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BakeSettings {
    pub band: usize,
    pub samples: usize,
    pub seed: u64,
    /// Dilation passes applied after baking.
    pub dilation: usize,
}

impl Default for BakeSettings {
    fn default() -> Self {
        BakeSettings { band: DEFAULT_BAND, samples: 4096, seed: 0, dilation: 3 }
    }
}

impl BakeSettings {
    pub(crate) fn validate(&self) -> Result<()> {
        check_band(self.band)?;
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "{} samples requested, at least {MIN_SAMPLES} required",
                self.samples
            )));
        }
        Ok(())
    }
}

/// Leaves a surface point along `dir`, pushed off the side of the
/// geometric plane the ray travels into.
#[inline]
pub(crate) fn spawn_ray(bvh: &Bvh, p: DVec3, geometric_normal: DVec3, dir: Direction) -> Ray {
    let eps = bvh.ray_epsilon();
    let side = if dir.vec().dot(geometric_normal) >= 0.0 { 1.0 } else { -1.0 };
    Ray::offset(p + side * eps * geometric_normal, dir, eps)
}

/// Transfer estimate `(4π/N)·Σ V(ω)·max(ω·n, 0)·y(ω)` at one point, written
/// to `out` (length `band²`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn estimate_transfer(
    bvh: &Bvh,
    p: DVec3,
    n: DVec3,
    geometric_normal: DVec3,
    sampler: &StratifiedSphere,
    rng: &mut impl Rng,
    band: usize,
    out: &mut [f64],
) {
    let k = coeff_count(band);
    let mut y = vec![0.0; k];
    out[..k].fill(0.0);
    sampler.for_each(rng, |w| {
        let cos = w.dot(n);
        if cos <= 0.0 {
            return;
        }
        let dir = Direction::new_unchecked(w);
        if bvh.occluded(&spawn_ray(bvh, p, geometric_normal, dir)) {
            return;
        }
        basis_into(w, band, &mut y);
        for (o, yi) in out.iter_mut().zip(&y) {
            *o += cos * yi;
        }
    });
    let scale = 4.0 * PI / sampler.len() as f64;
    out[..k].iter_mut().for_each(|o| *o *= scale);
}

fn checked_normal(g: &GBuffer, texel: usize) -> Result<DVec3> {
    let n = g.normal(texel);
    if g.is_valid(texel) && n.is_finite() && (n.length_squared() - 1.0).abs() < 1e-4 {
        Ok(n)
    } else {
        Err(Error::MaskBreach(texel))
    }
}

/// Bakes the zero-bounce transfer texture `T₀` for every valid G-buffer
/// texel, then dilates it.
pub fn bake_transfer(g: &GBuffer, bvh: &Bvh, settings: &BakeSettings) -> Result<TransferTexture> {
    settings.validate()?;
    let k = coeff_count(settings.band);
    let sampler = StratifiedSphere::new(settings.samples);
    let texels: Vec<usize> = (0..g.texel_count()).filter(|&t| g.is_valid(t)).collect();
    info!(
        "baking transfer: {} valid texels of {}x{}, band {}, {} samples",
        texels.len(),
        g.width(),
        g.height(),
        settings.band,
        sampler.len()
    );
    let baked: Vec<Vec<f64>> = texels
        .par_iter()
        .map(|&t| {
            let n = checked_normal(g, t)?;
            let mut rng = substream(settings.seed, Domain::Texel, t as u64);
            let mut out = vec![0.0; k];
            estimate_transfer(bvh, g.position(t), n, g.geometric_normal(t), &sampler, &mut rng, settings.band, &mut out);
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut tex = TransferTexture::new(g.width(), g.height(), settings.band, 1);
    for (&t, c) in texels.iter().zip(&baked) {
        tex.set_texel(t, c);
    }
    dilate(&mut tex, settings.dilation);
    Ok(tex)
}
