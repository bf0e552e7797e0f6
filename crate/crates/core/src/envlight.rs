//! Lat-long environment maps and their SH projection.
//!
//! Mapping: `+z` is the north pole at the top row (`v = 0`), and
//! `φ = atan2(y, x) ∈ [0, 2π)` runs left to right.

use std::f64::consts::PI;
use std::path::Path;

use glam::DVec3;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sh::{basis_into, check_band, coeff_count, reconstruct, Direction, SHVector};

/// Linear RGB radiance over the sphere in lat-long layout (`width == 2·height`).
#[derive(Clone, Debug, PartialEq)]
pub struct EnvMap {
    image: Image,
}

impl EnvMap {
    pub fn from_image(image: Image) -> Result<Self> {
        if image.width() != 2 * image.height() {
            return Err(Error::InvalidInput(format!(
                "environment map must be 2:1, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        if image.pixels().iter().any(|p| !p.is_finite() || p.min_element() < 0.0) {
            return Err(Error::InvalidInput("environment radiance must be finite and non-negative".into()));
        }
        Ok(EnvMap { image })
    }

    pub fn constant(width: usize, height: usize, c: DVec3) -> Result<Self> {
        Self::from_image(Image::from_fn(width, height, |_, _| c))
    }

    pub fn load_pfm(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_image(Image::read_pfm(path)?)
    }

    pub fn save_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        self.image.write_pfm(path)
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    /// Direction through the centre of texel `(x, y)`.
    pub fn texel_direction(&self, x: usize, y: usize) -> Direction {
        let phi = (x as f64 + 0.5) / self.width() as f64 * 2.0 * PI;
        let theta = (y as f64 + 0.5) / self.height() as f64 * PI;
        let (st, ct) = theta.sin_cos();
        Direction::new_unchecked(DVec3::new(st * phi.cos(), st * phi.sin(), ct))
    }

    /// Solid angle of any texel in row `y`: `(2π/w)(π/h) sin θ`.
    pub fn texel_solid_angle(&self, y: usize) -> f64 {
        let theta = (y as f64 + 0.5) / self.height() as f64 * PI;
        (2.0 * PI / self.width() as f64) * (PI / self.height() as f64) * theta.sin()
    }

    /// Bilinear radiance lookup, wrapping in `φ` and clamping at the poles.
    pub fn sample(&self, dir: Direction) -> DVec3 {
        let d = dir.vec();
        let mut phi = d.y.atan2(d.x);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        let theta = d.z.clamp(-1.0, 1.0).acos();
        let (w, h) = (self.width(), self.height());
        let fx = phi / (2.0 * PI) * w as f64 - 0.5;
        let fy = theta / PI * h as f64 - 0.5;
        let x0f = fx.floor();
        let y0f = fy.floor();
        let tx = fx - x0f;
        let ty = fy - y0f;
        let x0 = (x0f as i64).rem_euclid(w as i64) as usize;
        let x1 = (x0 + 1) % w;
        let y0 = (y0f as i64).clamp(0, h as i64 - 1) as usize;
        let y1 = (y0f as i64 + 1).clamp(0, h as i64 - 1) as usize;
        let top = self.image.get(x0, y0).lerp(self.image.get(x1, y0), tx);
        let bottom = self.image.get(x0, y1).lerp(self.image.get(x1, y1), tx);
        top.lerp(bottom, ty)
    }
}

/// Three-channel SH lighting.
#[derive(Clone, Debug, PartialEq)]
pub struct SHLight {
    channels: [SHVector; 3],
}

impl SHLight {
    pub fn new(r: SHVector, g: SHVector, b: SHVector) -> Result<Self> {
        r.check_same_band(&g)?;
        r.check_same_band(&b)?;
        Ok(SHLight { channels: [r, g, b] })
    }

    pub fn zeros(band: usize) -> Self {
        SHLight { channels: std::array::from_fn(|_| SHVector::zeros(band)) }
    }

    /// Uniform radiance `c` from every direction.
    pub fn constant(band: usize, c: DVec3) -> Self {
        SHLight { channels: [c.x, c.y, c.z].map(|v| SHVector::constant(band, v)) }
    }

    /// Same scalar SH for every channel, tinted per channel.
    pub fn from_scalar(sh: &SHVector, tint: DVec3) -> Self {
        SHLight { channels: [tint.x, tint.y, tint.z].map(|t| sh.scaled(t)) }
    }

    pub fn band(&self) -> usize {
        self.channels[0].band()
    }

    pub fn channels(&self) -> &[SHVector; 3] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &SHVector {
        &self.channels[c]
    }

    pub fn scaled(&self, s: f64) -> SHLight {
        SHLight { channels: std::array::from_fn(|c| self.channels[c].scaled(s)) }
    }

    pub fn reconstruct(&self, dir: Direction) -> DVec3 {
        DVec3::new(
            reconstruct(&self.channels[0], dir),
            reconstruct(&self.channels[1], dir),
            reconstruct(&self.channels[2], dir),
        )
    }

    /// Stable identifier of the exact coefficients (hex SHA-256 prefix).
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.band() as u64).to_le_bytes());
        for ch in &self.channels {
            for c in ch.coeffs() {
                h.update(c.to_le_bytes());
            }
        }
        h.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Riemann-sum projection over texels weighted by texel solid angle.
pub fn project_light(env: &EnvMap, band: usize) -> Result<SHLight> {
    check_band(band)?;
    let k = coeff_count(band);
    let rows: Vec<[Vec<f64>; 3]> = (0..env.height())
        .into_par_iter()
        .map(|y| {
            let mut acc: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; k]);
            let mut basis = vec![0.0; k];
            let w = env.texel_solid_angle(y);
            for x in 0..env.width() {
                let radiance = env.image().get(x, y) * w;
                basis_into(env.texel_direction(x, y).vec(), band, &mut basis);
                for (c, r) in [radiance.x, radiance.y, radiance.z].into_iter().enumerate() {
                    for (a, b) in acc[c].iter_mut().zip(&basis) {
                        *a += r * b;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; k]);
    for row in rows {
        for c in 0..3 {
            for (t, v) in total[c].iter_mut().zip(&row[c]) {
                *t += v;
            }
        }
    }
    let [r, g, b] = total.map(|c| SHVector::from_coeffs(band, c).expect("finite projection"));
    SHLight::new(r, g, b)
}

/// Output of [`synthesize_bandlimited`].
#[derive(Clone, Debug)]
pub struct Synthesized {
    pub env: EnvMap,
    /// Number of texel channels that reconstructed negative and were clamped.
    pub clamped: usize,
}

/// Evaluates `sh` at every texel centre, clamping negatives to zero.
pub fn synthesize_bandlimited(sh: &SHLight, width: usize, height: usize) -> Result<Synthesized> {
    if width != 2 * height || height == 0 {
        return Err(Error::InvalidInput(format!("environment map must be 2:1, got {width}x{height}")));
    }
    let probe = EnvMap { image: Image::new(width, height) };
    let mut clamped = 0;
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let v = sh.reconstruct(probe.texel_direction(x, y));
            clamped += [v.x, v.y, v.z].iter().filter(|c| **c < 0.0).count();
            pixels.push(v.max(DVec3::ZERO));
        }
    }
    let env = EnvMap::from_image(Image::from_pixels(width, height, pixels)?)?;
    if clamped > 0 {
        log::warn!("synthesized light clamped {clamped} negative texel channels");
    }
    Ok(Synthesized { env, clamped })
}
