//! Geometry, environment and materials bundled for baking and rendering.

use crate::baker::SurfaceInput;
use crate::envlight::EnvMap;
use crate::error::{Error, Result};
use crate::geom::{Bvh, Hit, Mesh};
use crate::render::material::Kernels;
use crate::render::Material;
use crate::sh::{check_band, PhongKernel};

pub struct Scene {
    bvh: Bvh,
    env: EnvMap,
    materials: Vec<Material>,
    kernels: Vec<Kernels>,
    band: usize,
}

impl Scene {
    /// `materials[i]` shades meshes with `object_id == i`; Phong kernels are
    /// prepared for `band`.
    pub fn new(meshes: Vec<Mesh>, env: EnvMap, materials: Vec<Material>, band: usize) -> Result<Self> {
        check_band(band)?;
        if let Some(m) = meshes.iter().find(|m| m.object_id as usize >= materials.len()) {
            return Err(Error::InvalidInput(format!(
                "mesh {} uses material {} but only {} are defined",
                m.name,
                m.object_id,
                materials.len()
            )));
        }
        for m in &materials {
            m.validate()?;
        }
        let kernels = materials.iter().map(|m| Kernels::new(m, band)).collect::<Result<_>>()?;
        Ok(Scene { bvh: Bvh::build(meshes)?, env, materials, kernels, band })
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn meshes(&self) -> &[Mesh] {
        self.bvh.meshes()
    }

    pub fn env(&self) -> &EnvMap {
        &self.env
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn material(&self, object_id: u32) -> &Material {
        &self.materials[object_id as usize]
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub(crate) fn kernel(&self, object_id: u32, uv: glam::DVec2) -> &PhongKernel {
        self.kernels[object_id as usize].at(&self.materials[object_id as usize], uv)
    }

    /// Number of texture sets (one past the largest set id).
    pub fn texture_set_count(&self) -> usize {
        self.meshes().iter().map(|m| m.texture_set as usize + 1).max().unwrap_or(0)
    }

    /// Meshes of texture set `set` with their materials' normal maps.
    pub fn surfaces(&self, set: u32) -> Vec<SurfaceInput<'_>> {
        self.meshes()
            .iter()
            .filter(|m| m.texture_set == set)
            .map(|mesh| SurfaceInput { mesh, normal_map: self.material(mesh.object_id).normal_map.as_ref() })
            .collect()
    }

    /// Shading normal at a hit, including the material's normal map.
    pub fn shading_normal(&self, hit: &Hit) -> glam::DVec3 {
        let n = hit.normal.vec();
        match &self.material(hit.object_id).normal_map {
            Some(map) => {
                crate::baker::normal_mapped(&self.meshes()[hit.mesh as usize], hit.triangle as usize, n, hit.uv, map)
            }
            None => n,
        }
    }

    /// Concatenated material descriptions, recorded next to baked bounces.
    pub fn brdf_description(&self) -> String {
        self.materials.iter().map(Material::description).collect::<Vec<_>>().join(";")
    }
}
