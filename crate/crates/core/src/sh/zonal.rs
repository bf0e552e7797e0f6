//! Zonal harmonics: axis-aligned lobes and Phong-lobe convolution.

use std::f64::consts::PI;

use super::{basis_into, check_band, degree_of, gauss_legendre, sh_index, Direction, SHVector, MAX_BAND};
use crate::error::{Error, Result};

/// Legendre polynomials `P_0(z) .. P_{n-1}(z)`.
fn legendre(z: f64, out: &mut [f64]) {
    let n = out.len();
    if n > 0 {
        out[0] = 1.0;
    }
    if n > 1 {
        out[1] = z;
    }
    for l in 2..n {
        out[l] = ((2 * l - 1) as f64 * z * out[l - 1] - (l - 1) as f64 * out[l - 2]) / l as f64;
    }
}

/// Rotates a zonal profile onto `axis`:
/// `c_lm = √(4π/(2l+1)) · zonal_l · y_lm(axis)`.
pub fn zh_expand(zonal: &[f64], axis: Direction, band: usize) -> Result<SHVector> {
    check_band(band)?;
    if zonal.len() != band {
        return Err(Error::LengthMismatch { expected: band, got: zonal.len() });
    }
    let mut out = SHVector::zeros(band);
    basis_into(axis.vec(), band, out.coeffs_mut());
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let l = degree_of(i);
        *c *= (4.0 * PI / (2 * l + 1) as f64).sqrt() * zonal[l];
    }
    Ok(out)
}

/// Zonal coefficients of `max(cos θ, 0)` about `+z`.
pub fn clamped_cosine_zonal(band: usize) -> Vec<f64> {
    // integrand z·P_l(z) on [0,1] has degree band, so band/2+1 nodes are exact
    let (x, w) = gauss_legendre(band / 2 + 1);
    let mut p = vec![0.0; band];
    let mut out = vec![0.0; band];
    for (&x, &w) in x.iter().zip(&w) {
        let z = 0.5 * (x + 1.0);
        legendre(z, &mut p);
        for (l, o) in out.iter_mut().enumerate() {
            *o += 0.5 * w * z * p[l];
        }
    }
    for (l, o) in out.iter_mut().enumerate() {
        *o *= 2.0 * PI * ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
    }
    out
}

/// Per-degree convolution weights of the normalized Phong lobe
/// `(s+1)/(2π) · max(cos θ, 0)^s`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhongKernel {
    exponent: f64,
    /// `√(4π/(2l+1)) · ρ_l`, the factor applied to every order of degree `l`.
    scales: Vec<f64>,
}

impl PhongKernel {
    pub fn new(exponent: f64, band: usize) -> Result<Self> {
        if exponent < 1.0 || !exponent.is_finite() {
            return Err(Error::InvalidExponent(exponent));
        }
        check_band(band)?;
        Ok(PhongKernel { exponent, scales: phong_scales(exponent, band) })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn band(&self) -> usize {
        self.scales.len()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Zonal projection coefficients `ρ_l` of the lobe.
    pub fn zonal_coefficients(&self) -> Vec<f64> {
        self.scales.iter().enumerate().map(|(l, s)| s / (4.0 * PI / (2 * l + 1) as f64).sqrt()).collect()
    }

    pub fn apply(&self, sh: &SHVector) -> Result<SHVector> {
        if sh.band() != self.band() {
            return Err(Error::BandMismatch(sh.band(), self.band()));
        }
        let mut out = sh.clone();
        self.apply_in_place(out.coeffs_mut());
        Ok(out)
    }

    pub fn apply_in_place(&self, coeffs: &mut [f64]) {
        for (l, s) in self.scales.iter().enumerate() {
            for m in -(l as i32)..=(l as i32) {
                coeffs[sh_index(l, m)] *= s;
            }
        }
    }
}

/// `(s+1) ∫_0^1 z^s P_l(z) dz`, evaluated after substituting
/// `z = exp(-x/(s+1))`, which turns it into `∫_0^∞ e^{-x} P_l(z(x)) dx`:
/// a smooth integrand for every exponent, integrated by composite
/// Gauss-Legendre on `[0, 48]`.
fn phong_scales(exponent: f64, band: usize) -> Vec<f64> {
    const PANELS: usize = 24;
    const UPPER: f64 = 48.0;
    let (x, w) = gauss_legendre(12);
    let mut p = [0.0; MAX_BAND];
    let p = &mut p[..band];
    let mut out = vec![0.0; band];
    let h = UPPER / PANELS as f64;
    for panel in 0..PANELS {
        let a = panel as f64 * h;
        for (&xi, &wi) in x.iter().zip(&w) {
            let t = a + 0.5 * h * (xi + 1.0);
            let z = (-t / (exponent + 1.0)).exp();
            legendre(z, p);
            let weight = 0.5 * h * wi * (-t).exp();
            for (o, pl) in out.iter_mut().zip(p.iter()) {
                *o += weight * pl;
            }
        }
    }
    out
}

/// Convolves `env` with the normalized Phong lobe of the given exponent.
pub fn convolve_phong(env: &SHVector, exponent: f64) -> Result<SHVector> {
    PhongKernel::new(exponent, env.band())?.apply(env)
}
