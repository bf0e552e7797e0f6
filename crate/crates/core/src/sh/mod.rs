//! Real spherical harmonics.
//!
//! Convention: real SH without the Condon-Shortley phase, so that
//! `y(1,-1) ∝ y`, `y(1,0) ∝ z` and `y(1,1) ∝ x` are all positive in their
//! own octant. Coefficients are stored flat at index `l(l+1)+m`; a projection
//! of band `l` keeps degrees `0..l` and has `l²` coefficients.

mod quadrature;
mod tensor;
mod zonal;

use std::f64::consts::PI;
use std::sync::OnceLock;

use glam::DVec3;

pub use quadrature::{gauss_legendre, QuadratureRule, SphereRule};
pub use tensor::{compute_tripling_tensor, ProductMatrix, TensorEntry, TriplingTensor, PRUNE_THRESHOLD};
pub use zonal::{clamped_cosine_zonal, convolve_phong, zh_expand, PhongKernel};

use crate::error::{Error, Result};

/// Largest band `eval_basis` accepts.
pub const MAX_BAND: usize = 10;

/// Band used by the pipeline unless configured otherwise (25 coefficients).
pub const DEFAULT_BAND: usize = 5;

/// `y_0 = 1 / (2√π)`, the constant basis function.
pub const Y0: f64 = 0.282_094_791_773_878_14;

const UNIT_TOLERANCE: f64 = 1e-6;

/// Flat coefficient index for degree `l`, order `m`.
#[inline]
pub const fn sh_index(l: usize, m: i32) -> usize {
    ((l * (l + 1)) as i64 + m as i64) as usize
}

/// Number of coefficients in a band-`band` projection.
#[inline]
pub const fn coeff_count(band: usize) -> usize {
    band * band
}

/// Degree `l` of the flat coefficient index `i`.
#[inline]
pub fn degree_of(i: usize) -> usize {
    (i as f64).sqrt() as usize
}

pub(crate) fn check_band(band: usize) -> Result<()> {
    if (1..=MAX_BAND).contains(&band) {
        Ok(())
    } else {
        Err(Error::BandOutOfRange { band, max: MAX_BAND })
    }
}

/// A unit vector on the sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction(DVec3);

impl Direction {
    pub const Z: Direction = Direction(DVec3::Z);

    /// Checked constructor: rejects vectors whose squared length is more than
    /// 1e-6 away from one.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vec(DVec3::new(x, y, z))
    }

    pub fn from_vec(v: DVec3) -> Result<Self> {
        if v.is_finite() && (v.length_squared() - 1.0).abs() <= UNIT_TOLERANCE {
            Ok(Direction(v))
        } else {
            Err(Error::NonUnitDirection(v.x, v.y, v.z))
        }
    }

    /// Normalizes `v`; `None` for zero or non-finite input.
    pub fn normalize(v: DVec3) -> Option<Self> {
        let n = v.try_normalize()?;
        Some(Direction(n))
    }

    /// Wraps a vector the caller already knows to be unit length.
    #[inline]
    pub(crate) fn new_unchecked(v: DVec3) -> Self {
        debug_assert!((v.length_squared() - 1.0).abs() < 1e-4, "{v:?}");
        Direction(v)
    }

    #[inline]
    pub fn vec(self) -> DVec3 {
        self.0
    }

    /// Mirror of `self` about `normal` (both pointing away from the surface).
    pub fn reflect(self, normal: Direction) -> Direction {
        let n = normal.0;
        let r = 2.0 * self.0.dot(n) * n - self.0;
        Direction::normalize(r).unwrap_or(normal)
    }
}

impl From<Direction> for DVec3 {
    fn from(d: Direction) -> Self {
        d.0
    }
}

/// Band-limited SH coefficients of a single scalar spherical function.
#[derive(Clone, Debug, PartialEq)]
pub struct SHVector {
    band: usize,
    coeffs: Vec<f64>,
}

impl SHVector {
    pub fn zeros(band: usize) -> Self {
        SHVector { band, coeffs: vec![0.0; coeff_count(band)] }
    }

    pub fn from_coeffs(band: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != coeff_count(band) {
            return Err(Error::LengthMismatch { expected: coeff_count(band), got: coeffs.len() });
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite SH coefficient {bad}")));
        }
        Ok(SHVector { band, coeffs })
    }

    /// Unit vector `e_i`.
    pub fn basis(band: usize, i: usize) -> Self {
        let mut v = Self::zeros(band);
        v.coeffs[i] = 1.0;
        v
    }

    /// Projection of the constant function `c`.
    pub fn constant(band: usize, c: f64) -> Self {
        let mut v = Self::zeros(band);
        v.coeffs[0] = c / Y0;
        v
    }

    #[inline]
    pub fn band(&self) -> usize {
        self.band
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn dot(&self, other: &SHVector) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> SHVector {
        SHVector { band: self.band, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &SHVector, s: f64) {
        debug_assert_eq!(self.band, other.band);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub(crate) fn check_same_band(&self, other: &SHVector) -> Result<()> {
        if self.band == other.band {
            Ok(())
        } else {
            Err(Error::BandMismatch(self.band, other.band))
        }
    }
}

/// `√2·K(l,|m|)` for m ≠ 0 and `K(l,0)` otherwise, indexed like coefficients.
fn normalization() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = vec![0.0; coeff_count(MAX_BAND)];
        for l in 0..MAX_BAND {
            for m in -(l as i32)..=(l as i32) {
                let am = m.unsigned_abs() as usize;
                // (l-|m|)! / (l+|m|)!
                let ratio: f64 = ((l - am + 1)..=(l + am)).map(|f| 1.0 / f as f64).product();
                let k = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
                table[sh_index(l, m)] = if m == 0 { k } else { std::f64::consts::SQRT_2 * k };
            }
        }
        table
    })
}

/// Writes `y_i(v)` for `i < band²` into `out` without validating `v`.
///
/// Uses `P_l^m(z) = sin^m θ · Q_l^m(z)` together with
/// `sin^m θ·(cos mφ, sin mφ) = (Re, Im)(x + iy)^m`, so the whole evaluation
/// is polynomial in `(x, y, z)` and needs no trigonometry.
pub(crate) fn basis_into(v: DVec3, band: usize, out: &mut [f64]) {
    debug_assert!(band <= MAX_BAND && out.len() >= coeff_count(band));
    let norm = normalization();
    let (x, y, z) = (v.x, v.y, v.z);

    // (cos, sin) of m·φ scaled by sin^m θ
    let (mut cm, mut sm) = (1.0, 0.0);
    // Q_m^m = (2m-1)!!
    let mut qmm = 1.0;
    for m in 0..band {
        if m > 0 {
            let c = cm * x - sm * y;
            sm = sm * x + cm * y;
            cm = c;
            qmm *= (2 * m - 1) as f64;
        }
        let mut q_prev = 0.0;
        let mut q = qmm;
        for l in m..band {
            if l == m + 1 {
                q_prev = q;
                q = z * (2 * m + 1) as f64 * qmm;
            } else if l > m + 1 {
                let next = ((2 * l - 1) as f64 * z * q - (l + m - 1) as f64 * q_prev) / (l - m) as f64;
                q_prev = q;
                q = next;
            }
            if m == 0 {
                out[sh_index(l, 0)] = norm[sh_index(l, 0)] * q;
            } else {
                let mi = m as i32;
                out[sh_index(l, mi)] = norm[sh_index(l, mi)] * q * cm;
                out[sh_index(l, -mi)] = norm[sh_index(l, -mi)] * q * sm;
            }
        }
    }
}

/// All basis functions `y_i(dir)` for `i < band²`.
pub fn eval_basis(dir: Direction, band: usize) -> Result<SHVector> {
    check_band(band)?;
    let mut coeffs = vec![0.0; coeff_count(band)];
    basis_into(dir.0, band, &mut coeffs);
    Ok(SHVector { band, coeffs })
}

/// Band-limited reconstruction `Σ c_i y_i(dir)`.
pub fn reconstruct(sh: &SHVector, dir: Direction) -> f64 {
    let mut basis = [0.0; coeff_count(MAX_BAND)];
    basis_into(dir.0, sh.band, &mut basis);
    sh.coeffs.iter().zip(&basis).map(|(c, y)| c * y).sum()
}

/// Projects `f` onto the first `band` degrees using the given sphere rule.
pub fn project<F>(f: F, band: usize, rule: QuadratureRule) -> Result<SHVector>
where
    F: Fn(Direction) -> f64,
{
    check_band(band)?;
    let sphere = SphereRule::new(rule);
    project_with(&sphere, f, band)
}

/// Like [`project`], reusing an already built rule.
pub fn project_with<F>(rule: &SphereRule, f: F, band: usize) -> Result<SHVector>
where
    F: Fn(Direction) -> f64,
{
    check_band(band)?;
    let k = coeff_count(band);
    let mut coeffs = vec![0.0; k];
    let mut basis = vec![0.0; k];
    for (&p, &w) in rule.points().iter().zip(rule.weights()) {
        let dir = Direction(p);
        let value = f(dir);
        if !value.is_finite() {
            return Err(Error::NonFinite { value, dir: p.to_array() });
        }
        basis_into(p, band, &mut basis);
        for (c, y) in coeffs.iter_mut().zip(&basis) {
            *c += w * value * y;
        }
    }
    Ok(SHVector { band, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(x: f64, y: f64, z: f64) -> Direction {
        Direction::normalize(DVec3::new(x, y, z)).unwrap()
    }

    /// Textbook closed forms for bands 0..2 in the same sign convention.
    fn closed_form(d: DVec3) -> [f64; 9] {
        let (x, y, z) = (d.x, d.y, d.z);
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        let c2 = 0.5 * (15.0 / PI).sqrt();
        [
            0.5 / PI.sqrt(),
            c1 * y,
            c1 * z,
            c1 * x,
            c2 * x * y,
            c2 * y * z,
            0.25 * (5.0 / PI).sqrt() * (3.0 * z * z - 1.0),
            c2 * x * z,
            0.25 * (15.0 / PI).sqrt() * (x * x - y * y),
        ]
    }

    #[test]
    fn pole_values() {
        let b1 = eval_basis(Direction::Z, 1).unwrap();
        assert!((b1.coeffs()[0] - 0.282_094_8).abs() < 1e-7);

        let b2 = eval_basis(Direction::Z, 2).unwrap();
        let expected = [0.282_094_8, 0.0, 0.488_602_5, 0.0];
        for (a, e) in b2.coeffs().iter().zip(expected) {
            assert!((a - e).abs() < 1e-7, "{a} vs {e}");
        }
    }

    #[test]
    fn matches_closed_forms() {
        for d in [unit(1.0, 2.0, 3.0), unit(-0.3, 0.9, -0.1), unit(0.0, -1.0, 0.0)] {
            let b = eval_basis(d, 3).unwrap();
            for (a, e) in b.coeffs().iter().zip(closed_form(d.vec())) {
                assert!((a - e).abs() < 1e-12, "{a} vs {e}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(Direction::new(1.0, 1.0, 0.0), Err(Error::NonUnitDirection(..))));
        assert!(matches!(eval_basis(Direction::Z, 0), Err(Error::BandOutOfRange { .. })));
        assert!(matches!(eval_basis(Direction::Z, 11), Err(Error::BandOutOfRange { .. })));
    }

    #[test]
    fn project_constant_and_basis_function() {
        let c = project(|_| 1.0, 5, QuadratureRule::Product { degree: 8 }).unwrap();
        assert!((c.coeffs()[0] - 2.0 * PI.sqrt()).abs() < 1e-9);
        assert!(c.coeffs()[1..].iter().all(|v| v.abs() < 1e-9));

        let e7 = project(
            |d| eval_basis(d, 3).unwrap().coeffs()[7],
            5,
            QuadratureRule::Product { degree: 8 },
        )
        .unwrap();
        for (i, v) in e7.coeffs().iter().enumerate() {
            let expected = if i == 7 { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-6, "coefficient {i}: {v}");
        }
    }

    #[test]
    fn project_clamped_cosine() {
        let f = |d: Direction| d.vec().z.max(0.0);
        let expected = [0.886_226_9, 1.023_326_7, 0.495_415_9, 0.0, -0.110_778_4];
        // Split at the equator the rule is exact for the piecewise polynomial.
        let exact = project(f, 5, QuadratureRule::SplitProduct { degree: 8 }).unwrap();
        // A plain product rule converges more slowly across the kink.
        let dense = project(f, 5, QuadratureRule::Product { degree: 200 }).unwrap();
        for (i, c) in exact.coeffs().iter().enumerate() {
            let l = degree_of(i);
            let e = if i == sh_index(l, 0) { expected[l] } else { 0.0 };
            assert!((c - e).abs() < 1e-7, "index {i}: {c} vs {e}");
            assert!((dense.coeffs()[i] - e).abs() < 1e-3, "dense index {i}: {}", dense.coeffs()[i]);
        }
        assert!((reconstruct(&exact, Direction::Z) - 1.0).abs() < 0.05);
    }

    #[test]
    fn project_reports_non_finite_direction() {
        let err = project(|d| if d.vec().z > 0.5 { f64::NAN } else { 0.0 }, 3, QuadratureRule::Product { degree: 4 })
            .unwrap_err();
        match err {
            Error::NonFinite { dir, .. } => assert!(dir[2] > 0.5),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn orthonormality() {
        let rule = SphereRule::new(QuadratureRule::Product { degree: 8 });
        let mut gram = vec![0.0; 25 * 25];
        let mut b = [0.0; 25];
        for (&p, &w) in rule.points().iter().zip(rule.weights()) {
            basis_into(p, 5, &mut b);
            for i in 0..25 {
                for j in 0..25 {
                    gram[i * 25 + j] += w * b[i] * b[j];
                }
            }
        }
        for i in 0..25 {
            for j in 0..25 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * 25 + j] - e).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn reflect_about_normal() {
        let v = unit(1.0, 0.0, 1.0);
        let r = v.reflect(Direction::Z);
        assert!((r.vec() - unit(-1.0, 0.0, 1.0).vec()).length() < 1e-12);
    }

    proptest! {
        #[test]
        fn basis_norm_positive(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            prop_assume!(x * x + y * y + z * z > 1e-3);
            let b = eval_basis(unit(x, y, z), 3).unwrap();
            prop_assert!(b.dot(&b) > 0.0);
        }

        #[test]
        fn addition_theorem(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            // Σ_m y_lm(d)² = (2l+1)/(4π) for every degree.
            prop_assume!(x * x + y * y + z * z > 1e-3);
            let b = eval_basis(unit(x, y, z), MAX_BAND).unwrap();
            for l in 0..MAX_BAND {
                let s: f64 = (-(l as i32)..=(l as i32)).map(|m| b.coeffs()[sh_index(l, m)].powi(2)).sum();
                prop_assert!((s - (2 * l + 1) as f64 / (4.0 * PI)).abs() < 1e-9);
            }
        }
    }
}
