//! Per-point shading from transfer vectors.

use std::f64::consts::PI;
use std::sync::Arc;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::envlight::SHLight;
use crate::error::{Error, Result};
use crate::sh::{basis_into, coeff_count, Direction, PhongKernel, ProductMatrix, SHVector, TriplingTensor, Y0};

/// How transfer and light are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Sparse tripling-tensor contraction per shade.
    Tp,
    /// Dense product matrix precomputed for the fixed light.
    Tpfl,
}

/// Active light prepared for one shading method.
#[derive(Clone, Debug)]
pub struct Lighting {
    light: SHLight,
    tau: Arc<TriplingTensor>,
    matrices: Option<[ProductMatrix; 3]>,
}

impl Lighting {
    pub fn new(light: SHLight, tau: Arc<TriplingTensor>, method: Method) -> Result<Self> {
        if tau.band() != light.band() {
            return Err(Error::BandMismatch(tau.band(), light.band()));
        }
        let matrices = match method {
            Method::Tp => None,
            Method::Tpfl => {
                let [r, g, b] = light.channels();
                Some([ProductMatrix::new(r, &tau)?, ProductMatrix::new(g, &tau)?, ProductMatrix::new(b, &tau)?])
            }
        };
        Ok(Lighting { light, tau, matrices })
    }

    pub fn light(&self) -> &SHLight {
        &self.light
    }

    pub fn tensor(&self) -> &Arc<TriplingTensor> {
        &self.tau
    }

    pub fn band(&self) -> usize {
        self.light.band()
    }

    pub fn method(&self) -> Method {
        if self.matrices.is_some() {
            Method::Tpfl
        } else {
            Method::Tp
        }
    }

    /// Incident radiance `L^p` per channel for transfer `t`.
    pub fn incident_into(&self, t: &[f64], out: &mut [Vec<f64>; 3]) {
        match &self.matrices {
            Some(m) => {
                for c in 0..3 {
                    m[c].apply_into(t, &mut out[c]);
                }
            }
            None => {
                for c in 0..3 {
                    self.tau.triple_product_into(t, self.light.channel(c).coeffs(), &mut out[c]);
                }
            }
        }
    }
}

/// Material parameters resolved at one surface point.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceShading<'a> {
    pub diffuse: DVec3,
    pub specular: DVec3,
    pub kernel: &'a PhongKernel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shaded {
    pub color: DVec3,
    /// Some channel came out negative and was clamped.
    pub clamped: bool,
}

/// Reusable buffers so the per-pixel path does not allocate.
#[derive(Clone, Debug)]
pub struct ShadeScratch {
    pub(crate) incident: [Vec<f64>; 3],
    pub(crate) transfer: Vec<f64>,
    conv: Vec<f64>,
    y: Vec<f64>,
}

impl ShadeScratch {
    pub fn new(band: usize, transfer_len: usize) -> Self {
        let k = coeff_count(band);
        ShadeScratch {
            incident: [vec![0.0; k], vec![0.0; k], vec![0.0; k]],
            transfer: vec![0.0; transfer_len],
            conv: vec![0.0; k],
            y: vec![0.0; k],
        }
    }
}

/// Diffuse plus Phong response to per-channel incident radiance SH
/// (cosine already folded in) seen from `view`.
pub(crate) fn shade_incident(
    incident: &[Vec<f64>; 3],
    surf: &SurfaceShading<'_>,
    normal: Direction,
    view: Direction,
    conv: &mut [f64],
    y: &mut [f64],
) -> Shaded {
    // ∫ L^p dω = L^p_0 / Y0 = 2√π·L^p_0
    let diffuse = surf.diffuse / PI / Y0;
    let glossy = surf.specular != DVec3::ZERO;
    if glossy {
        basis_into(view.reflect(normal).vec(), surf.kernel.band(), y);
    }
    let mut color = DVec3::ZERO;
    for c in 0..3 {
        let lp = &incident[c];
        let mut v = diffuse[c] * lp[0];
        if glossy {
            conv.copy_from_slice(lp);
            surf.kernel.apply_in_place(conv);
            v += surf.specular[c] * conv.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        color[c] = v;
    }
    let clamped = color.min_element() < 0.0;
    Shaded { color: color.max(DVec3::ZERO), clamped }
}

/// Shades one point with scalar transfer `t` (`band²` coefficients).
pub(crate) fn shade_transfer(
    t: &[f64],
    lighting: &Lighting,
    surf: &SurfaceShading<'_>,
    normal: Direction,
    view: Direction,
    s: &mut ShadeScratch,
) -> Shaded {
    lighting.incident_into(t, &mut s.incident);
    shade_incident(&s.incident, surf, normal, view, &mut s.conv, &mut s.y)
}

/// Like [`shade_transfer`] with the transfer already loaded into
/// `s.transfer`.
pub(crate) fn shade_loaded(
    lighting: &Lighting,
    surf: &SurfaceShading<'_>,
    normal: Direction,
    view: Direction,
    s: &mut ShadeScratch,
) -> Shaded {
    lighting.incident_into(&s.transfer, &mut s.incident);
    shade_incident(&s.incident, surf, normal, view, &mut s.conv, &mut s.y)
}

/// Shades from 3-channel incident radiance stored directly (bounce
/// textures).
pub(crate) fn shade_radiance(
    b: &[f64],
    surf: &SurfaceShading<'_>,
    normal: Direction,
    view: Direction,
    s: &mut ShadeScratch,
) -> Shaded {
    let k = s.conv.len();
    for c in 0..3 {
        s.incident[c].copy_from_slice(&b[c * k..(c + 1) * k]);
    }
    shade_incident(&s.incident, surf, normal, view, &mut s.conv, &mut s.y)
}

/// Outgoing radiance towards `view` at a point with transfer `transfer`
/// under the prepared light.
pub fn shade_point(
    transfer: &SHVector,
    lighting: &Lighting,
    surf: &SurfaceShading<'_>,
    normal: Direction,
    view: Direction,
) -> Result<Shaded> {
    if transfer.band() != lighting.band() {
        return Err(Error::BandMismatch(transfer.band(), lighting.band()));
    }
    if surf.kernel.band() != lighting.band() {
        return Err(Error::BandMismatch(surf.kernel.band(), lighting.band()));
    }
    let mut s = ShadeScratch::new(lighting.band(), transfer.len());
    Ok(shade_transfer(transfer.coeffs(), lighting, surf, normal, view, &mut s))
}
