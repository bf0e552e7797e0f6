use glam::{DVec2, DVec3};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sh::PhongKernel;

/// RGB albedo, constant or fetched bilinearly at the surface UV.
#[derive(Clone, Debug, PartialEq)]
pub enum Albedo {
    Constant(DVec3),
    Texture(Image),
}

impl Albedo {
    pub fn at(&self, uv: DVec2) -> DVec3 {
        match self {
            Albedo::Constant(c) => *c,
            Albedo::Texture(img) => img.sample_uv(uv),
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = |c: &DVec3| c.min_element() >= 0.0 && c.max_element() <= 1.0;
        let fine = match self {
            Albedo::Constant(c) => ok(c),
            Albedo::Texture(img) => img.pixels().iter().all(ok),
        };
        if fine {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{what} albedo outside [0,1]")))
        }
    }
}

/// Phong exponent, constant or read from the red channel of a texture.
#[derive(Clone, Debug, PartialEq)]
pub enum Exponent {
    Constant(f64),
    Texture(Image),
}

/// Diffuse plus normalized Phong lobe.
#[derive(Clone, Debug, PartialEq)]
pub struct Material {
    pub diffuse: Albedo,
    pub specular: DVec3,
    pub exponent: Exponent,
    /// Tangent-space normals encoded as `(n + 1) / 2`.
    pub normal_map: Option<Image>,
}

impl Material {
    pub fn diffuse(albedo: DVec3) -> Self {
        Material { diffuse: Albedo::Constant(albedo), specular: DVec3::ZERO, exponent: Exponent::Constant(1.0), normal_map: None }
    }

    pub fn glossy(diffuse: DVec3, specular: DVec3, exponent: f64) -> Self {
        Material { diffuse: Albedo::Constant(diffuse), specular, exponent: Exponent::Constant(exponent), normal_map: None }
    }

    pub fn validate(&self) -> Result<()> {
        self.diffuse.validate("diffuse")?;
        Albedo::Constant(self.specular).validate("specular")?;
        let bad = match &self.exponent {
            Exponent::Constant(s) => (*s < 1.0 || s.is_nan()).then_some(*s),
            Exponent::Texture(img) => img.pixels().iter().map(|p| p.x).find(|s| *s < 1.0 || s.is_nan()),
        };
        match bad {
            Some(s) => Err(Error::InvalidExponent(s)),
            None => Ok(()),
        }
    }

    /// Short human-readable summary used in bake metadata.
    pub fn description(&self) -> String {
        let d = match &self.diffuse {
            Albedo::Constant(c) => format!("diffuse({:.6},{:.6},{:.6})", c.x, c.y, c.z),
            Albedo::Texture(img) => format!("diffuse(texture {}x{})", img.width(), img.height()),
        };
        let s = match &self.exponent {
            Exponent::Constant(s) => format!("{s}"),
            Exponent::Texture(img) => format!("texture {}x{}", img.width(), img.height()),
        };
        let p = self.specular;
        format!("{d}+phong({:.6},{:.6},{:.6};{s})", p.x, p.y, p.z)
    }
}

/// Range and resolution of the quantized exponent table used for textured
/// roughness.
pub const KERNEL_TABLE_SIZE: usize = 64;
pub const KERNEL_TABLE_MAX: f64 = 4096.0;

/// Convolution kernels prepared for one material at one band.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Kernels {
    Single(PhongKernel),
    Table(Vec<PhongKernel>),
}

impl Kernels {
    pub(crate) fn new(material: &Material, band: usize) -> Result<Self> {
        Ok(match material.exponent {
            Exponent::Constant(s) => Kernels::Single(PhongKernel::new(s, band)?),
            Exponent::Texture(_) => Kernels::Table(
                (0..KERNEL_TABLE_SIZE)
                    .map(|i| PhongKernel::new(table_exponent(i), band))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    pub(crate) fn at(&self, material: &Material, uv: DVec2) -> &PhongKernel {
        match (self, &material.exponent) {
            (Kernels::Single(k), _) => k,
            (Kernels::Table(t), Exponent::Texture(img)) => &t[table_index(img.sample_uv(uv).x)],
            (Kernels::Table(t), Exponent::Constant(s)) => &t[table_index(*s)],
        }
    }
}

fn table_exponent(i: usize) -> f64 {
    KERNEL_TABLE_MAX.powf(i as f64 / (KERNEL_TABLE_SIZE - 1) as f64)
}

/// Nearest table entry in log space.
fn table_index(s: f64) -> usize {
    let t = s.max(1.0).ln() / KERNEL_TABLE_MAX.ln() * (KERNEL_TABLE_SIZE - 1) as f64;
    (t.round() as usize).min(KERNEL_TABLE_SIZE - 1)
}
