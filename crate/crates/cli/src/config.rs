//! JSON scene description. Relative paths resolve against the directory of
//! the config file.

use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use glam::DVec3;
use serde::{Deserialize, Serialize};

use prtt::baker::{BakeSettings, MIN_SAMPLES};
use prtt::envlight::{project_light, synthesize_bandlimited, EnvMap, SHLight};
use prtt::geom::{load_obj, Mesh};
use prtt::image::Image;
use prtt::render::{Albedo, Camera, Exponent, Material};
use prtt::scene::Scene;
use prtt::scenes::{sky_light, ENV_HEIGHT};
use prtt::sh::SHVector;

/// Highest band the CLI accepts.
pub const MAX_CONFIG_BAND: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub meshes: Vec<MeshEntry>,
    pub materials: Vec<MaterialConfig>,
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub bake: BakeConfig,
    pub camera: Camera,
    /// Where baked textures go; defaults to `out` next to the config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Geometry source plus its texture set and material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshEntry {
    #[serde(flatten)]
    pub source: MeshSource,
    #[serde(default)]
    pub texture_set: u32,
    /// Index into `materials`.
    pub material: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MeshSource {
    /// Every object of an OBJ file.
    Obj { path: PathBuf },
    /// Square `[-half_size, half_size]²` at `z = height`, facing up.
    Plane { half_size: f64, height: f64, cells: u32 },
    /// Parallelogram `origin + s·edge_u + t·edge_v`.
    Quad { origin: DVec3, edge_u: DVec3, edge_v: DVec3, cells: u32 },
    /// Faces `-x,+x,-y,+y,-z,+z` of an axis-aligned box.
    Box { min: DVec3, max: DVec3, cells: u32, inward: bool, faces: [bool; 6] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColorSource {
    Constant(DVec3),
    Texture(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentSource {
    Constant(f64),
    Texture(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub diffuse: ColorSource,
    #[serde(default)]
    pub specular: DVec3,
    #[serde(default = "default_exponent")]
    pub exponent: ExponentSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_map: Option<PathBuf>,
}

fn default_exponent() -> ExponentSource {
    ExponentSource::Constant(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EnvironmentConfig {
    /// Lat-long radiance map; the light is its SH projection.
    Pfm { path: PathBuf },
    /// Built-in band-limited sky.
    Sky,
    /// Explicit RGB coefficients, `band²` entries.
    Sh { coefficients: Vec<DVec3> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BakeConfig {
    pub resolution: usize,
    pub band: usize,
    pub samples: usize,
    pub seed: u64,
    pub dilation: usize,
    /// Samples per texel for the one-bounce texture.
    pub bounce_samples: usize,
}

impl Default for BakeConfig {
    fn default() -> Self {
        BakeConfig { resolution: 256, band: 5, samples: 4096, seed: 0, dilation: 3, bounce_samples: 1024 }
    }
}

impl BakeConfig {
    pub fn settings(&self) -> BakeSettings {
        BakeSettings { band: self.band, samples: self.samples, seed: self.seed, dilation: self.dilation }
    }

    pub fn bounce_settings(&self) -> BakeSettings {
        BakeSettings { samples: self.bounce_samples, ..self.settings() }
    }

    fn validate(&self) -> Result<()> {
        let r = self.resolution;
        ensure!(r.is_power_of_two() && (64..=4096).contains(&r), "texture resolution {r} must be a power of two in [64, 4096]");
        ensure!((1..=MAX_CONFIG_BAND).contains(&self.band), "band {} outside [1, {MAX_CONFIG_BAND}]", self.band);
        ensure!(self.samples >= MIN_SAMPLES, "samples {} below {MIN_SAMPLES}", self.samples);
        ensure!(self.bounce_samples >= MIN_SAMPLES, "bounce_samples {} below {MIN_SAMPLES}", self.bounce_samples);
        Ok(())
    }
}

/// A parsed config plus the directory its relative paths refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedConfig {
    pub config: SceneConfig,
    pub base: PathBuf,
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn paths(&self) -> Vec<&Path> {
        let mut out = Vec::new();
        for m in &self.meshes {
            if let MeshSource::Obj { path } = &m.source {
                out.push(path.as_path());
            }
        }
        for m in &self.materials {
            if let ColorSource::Texture(p) = &m.diffuse {
                out.push(p);
            }
            if let ExponentSource::Texture(p) = &m.exponent {
                out.push(p);
            }
            if let Some(p) = &m.normal_map {
                out.push(p);
            }
        }
        if let EnvironmentConfig::Pfm { path } = &self.environment {
            out.push(path);
        }
        out
    }

    /// Checks ranges, references and that every referenced file exists.
    pub fn validate(&self, base: &Path) -> Result<()> {
        self.bake.validate()?;
        self.camera.validate()?;
        ensure!(!self.meshes.is_empty(), "config lists no meshes");
        for (i, m) in self.meshes.iter().enumerate() {
            ensure!(
                (m.material as usize) < self.materials.len(),
                "mesh {i} references material {} but only {} are defined",
                m.material,
                self.materials.len()
            );
        }
        if let EnvironmentConfig::Sh { coefficients } = &self.environment {
            ensure!(
                coefficients.len() == self.bake.band * self.bake.band,
                "environment has {} coefficients, band {} needs {}",
                coefficients.len(),
                self.bake.band,
                self.bake.band * self.bake.band
            );
        }
        for p in self.paths() {
            let full = base.join(p);
            ensure!(full.is_file(), "referenced file {} does not exist", full.display());
        }
        Ok(())
    }
}

impl LoadedConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config = SceneConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate(&base).with_context(|| format!("validating {}", path.display()))?;
        Ok(LoadedConfig { config, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(self.config.output_dir.as_deref().unwrap_or(Path::new("out")))
    }

    pub fn band(&self) -> usize {
        self.config.bake.band
    }

    /// Meshes in config order; object ids are material indices.
    pub fn meshes(&self) -> Result<Vec<Mesh>> {
        let mut out = Vec::new();
        for entry in &self.config.meshes {
            let parts = match &entry.source {
                MeshSource::Obj { path } => load_obj(self.resolve(path))?,
                MeshSource::Plane { half_size, height, cells } => vec![Mesh::ground_plane(*half_size, *height, *cells)],
                MeshSource::Quad { origin, edge_u, edge_v, cells } => {
                    vec![Mesh::grid("quad", *origin, *edge_u, *edge_v, *cells, *cells)]
                }
                MeshSource::Box { min, max, cells, inward, faces } => {
                    vec![Mesh::cuboid("box", *min, *max, *cells, *inward, *faces)]
                }
            };
            out.extend(parts.into_iter().map(|m| m.with_ids(entry.material, entry.texture_set)));
        }
        Ok(out)
    }

    fn image(&self, p: &Path) -> Result<Image> {
        Ok(Image::read_pfm(self.resolve(p))?)
    }

    pub fn materials(&self) -> Result<Vec<Material>> {
        self.config
            .materials
            .iter()
            .map(|m| {
                Ok(Material {
                    diffuse: match &m.diffuse {
                        ColorSource::Constant(c) => Albedo::Constant(*c),
                        ColorSource::Texture(p) => Albedo::Texture(self.image(p)?),
                    },
                    specular: m.specular,
                    exponent: match &m.exponent {
                        ExponentSource::Constant(s) => Exponent::Constant(*s),
                        ExponentSource::Texture(p) => Exponent::Texture(self.image(p)?),
                    },
                    normal_map: m.normal_map.as_ref().map(|p| self.image(p)).transpose()?,
                })
            })
            .collect()
    }

    /// Environment map for misses and references, and its SH light.
    pub fn environment(&self) -> Result<(EnvMap, SHLight)> {
        let band = self.band();
        Ok(match &self.config.environment {
            EnvironmentConfig::Pfm { path } => {
                let env = EnvMap::load_pfm(self.resolve(path))?;
                let light = project_light(&env, band)?;
                (env, light)
            }
            EnvironmentConfig::Sky => {
                let light = sky_light(band)?;
                (synthesize_bandlimited(&light, 2 * ENV_HEIGHT, ENV_HEIGHT)?.env, light)
            }
            EnvironmentConfig::Sh { coefficients } => {
                let ch = |c: usize| SHVector::from_coeffs(band, coefficients.iter().map(|v| v[c]).collect());
                let light = SHLight::new(ch(0)?, ch(1)?, ch(2)?)?;
                (synthesize_bandlimited(&light, 2 * ENV_HEIGHT, ENV_HEIGHT)?.env, light)
            }
        })
    }

    pub fn scene(&self) -> Result<(Scene, SHLight)> {
        let (env, light) = self.environment()?;
        let scene = Scene::new(self.meshes()?, env, self.materials()?, self.band())?;
        Ok((scene, light))
    }
}

/// Light from a lat-long PFM, projected at `band`.
pub fn light_from_pfm(path: &Path, band: usize) -> Result<SHLight> {
    let env = EnvMap::load_pfm(path).with_context(|| format!("loading light {}", path.display()))?;
    Ok(project_light(&env, band)?)
}
